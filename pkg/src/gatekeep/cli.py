"""Command-line interface.

Three subcommands:

  run       execute a procedure from a JSON config and print the stage table
  validate  check a config and echo its canonical form
  simulate  Monte Carlo FWER estimate for a configured problem

Exit codes: 0 success, 1 I/O failure (unreadable file, unwritable
output), 2 validation failure (malformed JSON, invalid config or
parameters).  Diagnostics go to stderr.
"""

from __future__ import annotations

import csv
import json
import sys

import click

from gatekeep.bounds import NullConfiguration
from gatekeep.config import ConfigError, canonical_echo, load_config
from gatekeep.core import AuditTrail
from gatekeep.engine import run_procedure
from gatekeep.errors import GatekeepError, ModelParameterError
from gatekeep.oracles import fallback_oracle, fixed_sequence_oracle
from gatekeep.simulate import DependenceModel, EffectSpec, monte_carlo_fwer
from gatekeep.twolayer import TwoLayerProblem, run_two_layer

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(path: str):
    try:
        return load_config(path)
    except ConfigError as exc:
        _fail(EXIT_INVALID, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))


@click.group()
def main() -> None:
    """Gatekeeping procedures for ordered families of hypotheses."""


def _trail_rows(problem, trail: AuditTrail, p_rows: list[list[float]]):
    """Flat rows (stage, family, level, hypothesis, p, threshold,
    rejected, new) for the run table and CSV."""
    rows = []
    for rec in trail.stages:
        for fi, fam in enumerate(problem.families):
            level = rec.levels[fi]
            thr = level / fam.size
            for hj, label in enumerate(fam.hypothesis_labels, start=1):
                p = p_rows[fi][hj - 1]
                rejected = hj in rec.cumulative[fi]
                new = hj in rec.newly[fi]
                rows.append(
                    {
                        "stage": rec.stage,
                        "family": fam.label,
                        "level": level,
                        "hypothesis": label,
                        "p": p,
                        "threshold": thr,
                        "decision": "S" if rejected else "NS",
                        "newly_rejected": "yes" if new else "no",
                    }
                )
    return rows


def _print_table(rows) -> None:
    header = f"{'stage':>5}  {'family':<8} {'level':>10}  {'hypothesis':<12} {'p':>10}  {'threshold':>10}  {'dec':>3}  {'new':>3}"
    click.echo(header)
    click.echo("-" * len(header))
    for r in rows:
        click.echo(
            f"{r['stage']:>5}  {r['family']:<8} {r['level']:>10.6g}  "
            f"{r['hypothesis']:<12} {r['p']:>10.6g}  {r['threshold']:>10.6g}  "
            f"{r['decision']:>3}  {r['newly_rejected']:>3}"
        )


def _write_csv(path: str, rows) -> None:
    fields = [
        "stage",
        "family",
        "level",
        "hypothesis",
        "p",
        "threshold",
        "decision",
        "newly_rejected",
    ]
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for r in rows:
                writer.writerow(r)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))


@main.command("run")
@click.argument("config_path", type=str)
@click.option("--csv", "csv_path", type=str, default=None, help="Write the stage table as CSV.")
def cmd_run(config_path: str, csv_path: str | None) -> None:
    """Run the configured procedure on the configured p-values."""
    cfg = _load(config_path)
    if cfg.p_values is None:
        _fail(EXIT_INVALID, "config carries no p_values block")
    try:
        p_rows = cfg.ordered_pvalues()
    except ConfigError as exc:
        _fail(EXIT_INVALID, str(exc))

    if cfg.procedure in ("fallback-oracle", "fixed-sequence-oracle"):
        assert cfg.hypothesis_labels is not None and cfg.hypothesis_levels is not None
        p = p_rows[0]
        try:
            if cfg.procedure == "fallback-oracle":
                rejected = fallback_oracle(p, cfg.hypothesis_levels)
            else:
                levels = set(cfg.hypothesis_levels)
                if len(levels) != 1:
                    _fail(EXIT_INVALID, "fixed-sequence oracle needs one common level")
                rejected = fixed_sequence_oracle(p, cfg.hypothesis_levels[0])
        except GatekeepError as exc:
            _fail(EXIT_INVALID, str(exc))
        names = [cfg.hypothesis_labels[j - 1] for j in sorted(rejected)]
        click.echo(f"rejected: {', '.join(names) if names else '(none)'}")
        return

    assert cfg.problem is not None
    try:
        if isinstance(cfg.problem, TwoLayerProblem):
            trail = run_two_layer(cfg.problem, p_rows, cfg.options)
        else:
            trail = run_procedure(cfg.problem, p_rows, cfg.options)
    except GatekeepError as exc:
        _fail(EXIT_INVALID, str(exc))

    rows = _trail_rows(cfg.problem, trail, p_rows)
    _print_table(rows)
    names = trail.rejected_labels()
    click.echo("")
    click.echo(f"rejected: {', '.join(names) if names else '(none)'}")
    click.echo(f"stages run: {trail.stages_run}")
    click.echo(f"termination: {trail.termination}")
    if csv_path:
        _write_csv(csv_path, rows)
        click.echo(f"csv written: {csv_path}")


@main.command("validate")
@click.argument("config_path", type=str)
def cmd_validate(config_path: str) -> None:
    """Validate a config file and print its canonical form."""
    cfg = _load(config_path)
    click.echo(json.dumps(canonical_echo(cfg), indent=2))


def _parse_model(spec: str) -> DependenceModel:
    if spec == "independent":
        return DependenceModel.independent()
    if spec.startswith("equicorr:"):
        try:
            rho = float(spec.split(":", 1)[1])
        except ValueError:
            raise ModelParameterError(f"cannot parse correlation in {spec!r}")
        return DependenceModel.equicorrelated(rho)
    raise ModelParameterError(
        f"unknown model {spec!r}; expected 'independent' or 'equicorr:RHO'"
    )


def _parse_nulls(spec: str, problem) -> NullConfiguration:
    if spec == "all":
        return NullConfiguration.all_null(problem.sizes)
    if spec == "none":
        return NullConfiguration.no_null(len(problem.sizes))
    wanted = {s.strip() for s in spec.split(",") if s.strip()}
    if not wanted:
        raise ModelParameterError("empty null set specification")
    known = {h for fam in problem.families for h in fam.hypothesis_labels}
    unknown = wanted - known
    if unknown:
        raise ModelParameterError(f"unknown hypothesis labels: {sorted(unknown)}")
    sets = []
    for fam in problem.families:
        sets.append(
            frozenset(
                j
                for j, h in enumerate(fam.hypothesis_labels, start=1)
                if h in wanted
            )
        )
    return NullConfiguration(tuple(sets))


@main.command("simulate")
@click.argument("config_path", type=str)
@click.option("--nulls", "nulls_spec", default="all", show_default=True, help="'all', 'none', or a comma-separated list of true-null hypothesis labels.")
@click.option("--model", "model_spec", default="independent", show_default=True, help="'independent' or 'equicorr:RHO'.")
@click.option("--reps", default=100_000, show_default=True, help="Replication count.")
@click.option("--seed", default=0, show_default=True, help="Generator seed.")
@click.option("--effect", default=3.0, show_default=True, help="Mean shift for false nulls.")
def cmd_simulate(config_path: str, nulls_spec: str, model_spec: str, reps: int, seed: int, effect: float) -> None:
    """Monte Carlo FWER estimate for the configured problem."""
    cfg = _load(config_path)
    if cfg.problem is None:
        _fail(EXIT_INVALID, "simulate requires a sequential or two-layer problem")
    try:
        model = _parse_model(model_spec)
        nulls = _parse_nulls(nulls_spec, cfg.problem)
        report = monte_carlo_fwer(
            cfg.problem,
            nulls,
            model=model,
            effect=EffectSpec(delta=effect),
            reps=reps,
            seed=seed,
        )
    except GatekeepError as exc:
        _fail(EXIT_INVALID, str(exc))
    click.echo(report.to_record())


if __name__ == "__main__":
    main()
