"""JSON problem configurations.

A config file describes one testing problem plus optional p-values and
runtime options.  Levels accept exact fraction strings ("0.025/3",
"1/40") as well as plain numbers; fractions are resolved exactly before
any float arithmetic so that configured levels round-trip bit-for-bit.

Top-level shape::

    {
      "procedure": "sequential",
      "global_level": 0.05,
      "families": [
        {"label": "F1", "hypotheses": ["H11"], "initial_level": "0.05/2"},
        ...
      ],
      "transition": [[0, 1], [1, 0]],
      "p_values": {"H11": 0.012, ...},
      "options": {"stage_cap": 4}
    }

Two-layer configs replace families/transition with "layer1", "layer2",
"forward", "backward".  Oracle procedures ("fallback-oracle",
"fixed-sequence-oracle") take a flat "hypotheses" list with per-hypothesis
levels instead of families.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from gatekeep.core import FamilySpec, GatekeepingProblem, TransitionMatrix
from gatekeep.engine import EngineOptions
from gatekeep.errors import ConfigError, GatekeepError
from gatekeep.twolayer import TwoLayerProblem

PROCEDURES = ("sequential", "two-layer", "fallback-oracle", "fixed-sequence-oracle")


def parse_level(value: Any, alpha: Fraction | None = None) -> float:
    """Resolve a level entry to float, exactly for fraction strings.

    Accepts numbers, decimal strings, and "a/b" where a and b are decimal
    or integer literals.  Inside a family block the numerator may be the
    token "alpha", which substitutes the exact global level, so "alpha/3"
    is resolved as one rational division with a single final rounding.
    """
    if isinstance(value, bool):
        raise ConfigError(f"level {value!r} is not a number")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"level {value!r} is not a number")
    num, sep, den = value.partition("/")
    num = num.strip()
    if num == "alpha":
        if alpha is None:
            raise ConfigError(f"'alpha' is not defined for level {value!r} here")
        numer = alpha
    else:
        try:
            numer = Fraction(num)
        except ValueError as exc:
            raise ConfigError(f"cannot parse level {value!r}") from exc
    if not sep:
        return float(numer)
    try:
        denom = Fraction(den.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse level {value!r}") from exc
    if denom == 0:
        raise ConfigError(f"zero denominator in level {value!r}")
    return float(numer / denom)


def _exact_fraction(value: Any) -> Fraction | None:
    """Exact rational form of a global-level entry, if one exists."""
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return Fraction(value)
    if isinstance(value, str) and "/" not in value and value.strip() != "alpha":
        try:
            return Fraction(value.strip())
        except ValueError:
            return None
    return None


def _require(mapping: dict, key: str, where: str) -> Any:
    if key not in mapping:
        raise ConfigError(f"missing key {key!r} in {where}")
    return mapping[key]


def _parse_family(entry: Any, index: int, alpha: Fraction | None = None) -> FamilySpec:
    if not isinstance(entry, dict):
        raise ConfigError(f"family #{index} is not an object")
    label = _require(entry, "label", f"family #{index}")
    hyps = _require(entry, "hypotheses", f"family #{index}")
    if not isinstance(hyps, list) or not all(isinstance(h, str) for h in hyps):
        raise ConfigError(f"family {label!r} hypotheses must be a list of strings")
    level = parse_level(_require(entry, "initial_level", f"family {label!r}"), alpha)
    return FamilySpec(
        index=index,
        label=str(label),
        hypothesis_labels=tuple(hyps),
        initial_level=level,
    )


def _parse_matrix(entry: Any, name: str) -> tuple[tuple[float, ...], ...]:
    if not isinstance(entry, list) or not all(isinstance(r, list) for r in entry):
        raise ConfigError(f"{name} must be a list of rows")
    return tuple(tuple(parse_level(v) for v in row) for row in entry)


def _parse_options(entry: Any) -> EngineOptions:
    if entry is None:
        return EngineOptions()
    if not isinstance(entry, dict):
        raise ConfigError("options must be an object")
    known = {"stage_cap", "record_full_trail"}
    unknown = set(entry) - known
    if unknown:
        raise ConfigError(f"unknown option keys: {sorted(unknown)}")
    cap = entry.get("stage_cap")
    if cap is not None and (not isinstance(cap, int) or isinstance(cap, bool) or cap < 1):
        raise ConfigError(f"stage_cap must be a positive integer, got {cap!r}")
    full = entry.get("record_full_trail", True)
    if not isinstance(full, bool):
        raise ConfigError("record_full_trail must be a boolean")
    return EngineOptions(stage_cap=cap, record_full_trail=full)


class ProblemConfig:
    """Parsed configuration: problem, optional p-values, options."""

    def __init__(
        self,
        procedure: str,
        problem: GatekeepingProblem | TwoLayerProblem | None,
        hypothesis_levels: tuple[float, ...] | None,
        hypothesis_labels: tuple[str, ...] | None,
        p_values: dict[str, float] | None,
        options: EngineOptions,
    ) -> None:
        self.procedure = procedure
        self.problem = problem
        self.hypothesis_levels = hypothesis_levels
        self.hypothesis_labels = hypothesis_labels
        self.p_values = p_values
        self.options = options

    def ordered_pvalues(self) -> list[list[float]]:
        """p-values grouped by family in rank order; raises if any label
        is missing."""
        if self.p_values is None:
            raise ConfigError("config carries no p_values block")
        if self.problem is not None:
            rows = []
            for fam in self.problem.families:
                row = []
                for h in fam.hypothesis_labels:
                    if h not in self.p_values:
                        raise ConfigError(f"no p-value for hypothesis {h!r}")
                    row.append(self.p_values[h])
                rows.append(row)
            return rows
        assert self.hypothesis_labels is not None
        row = []
        for h in self.hypothesis_labels:
            if h not in self.p_values:
                raise ConfigError(f"no p-value for hypothesis {h!r}")
            row.append(self.p_values[h])
        return [row]


def _parse_pvalues(entry: Any, labels: set[str]) -> dict[str, float]:
    if not isinstance(entry, dict):
        raise ConfigError("p_values must be an object keyed by hypothesis label")
    out: dict[str, float] = {}
    for key, val in entry.items():
        if key not in labels:
            raise ConfigError(f"p-value for unknown hypothesis {key!r}")
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"p-value for {key!r} is not a number")
        out[key] = float(val)
    return out


def parse_config(doc: Any) -> ProblemConfig:
    """Validate a decoded JSON document into a ProblemConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("top-level config must be an object")
    procedure = _require(doc, "procedure", "config")
    if procedure not in PROCEDURES:
        raise ConfigError(
            f"unknown procedure {procedure!r}; expected one of {', '.join(PROCEDURES)}"
        )
    options = _parse_options(doc.get("options"))

    if procedure in ("fallback-oracle", "fixed-sequence-oracle"):
        hyps = _require(doc, "hypotheses", "config")
        if not isinstance(hyps, list) or not hyps:
            raise ConfigError("hypotheses must be a non-empty list")
        labels = []
        levels = []
        for i, entry in enumerate(hyps, start=1):
            if not isinstance(entry, dict):
                raise ConfigError(f"hypothesis #{i} is not an object")
            labels.append(str(_require(entry, "label", f"hypothesis #{i}")))
            levels.append(parse_level(_require(entry, "level", f"hypothesis #{i}")))
        if len(set(labels)) != len(labels):
            raise ConfigError("duplicate hypothesis labels")
        pv = doc.get("p_values")
        parsed_pv = _parse_pvalues(pv, set(labels)) if pv is not None else None
        return ProblemConfig(
            procedure=procedure,
            problem=None,
            hypothesis_levels=tuple(levels),
            hypothesis_labels=tuple(labels),
            p_values=parsed_pv,
            options=options,
        )

    alpha_raw = _require(doc, "global_level", "config")
    global_level = parse_level(alpha_raw)
    alpha_exact = _exact_fraction(alpha_raw)
    try:
        if procedure == "sequential":
            fam_entries = _require(doc, "families", "config")
            if not isinstance(fam_entries, list):
                raise ConfigError("families must be a list")
            families = tuple(
                _parse_family(e, i, alpha_exact)
                for i, e in enumerate(fam_entries, start=1)
            )
            transition = TransitionMatrix(_parse_matrix(_require(doc, "transition", "config"), "transition"))
            problem: GatekeepingProblem | TwoLayerProblem = GatekeepingProblem(
                families=families,
                transition=transition,
                global_level=global_level,
            )
        else:
            l1_entries = _require(doc, "layer1", "config")
            l2_entries = _require(doc, "layer2", "config")
            if not isinstance(l1_entries, list) or not isinstance(l2_entries, list):
                raise ConfigError("layer1 and layer2 must be lists")
            layer1 = tuple(
                _parse_family(e, i, alpha_exact) for i, e in enumerate(l1_entries, start=1)
            )
            layer2 = tuple(
                _parse_family(e, i, alpha_exact) for i, e in enumerate(l2_entries, start=1)
            )
            problem = TwoLayerProblem(
                layer1=layer1,
                layer2=layer2,
                forward=_parse_matrix(_require(doc, "forward", "config"), "forward"),
                backward=_parse_matrix(_require(doc, "backward", "config"), "backward"),
                global_level=global_level,
            )
    except ConfigError:
        raise
    except GatekeepError as exc:
        raise ConfigError(str(exc)) from exc

    all_labels = {h for fam in problem.families for h in fam.hypothesis_labels}
    pv = doc.get("p_values")
    parsed_pv = _parse_pvalues(pv, all_labels) if pv is not None else None
    return ProblemConfig(
        procedure=procedure,
        problem=problem,
        hypothesis_levels=None,
        hypothesis_labels=None,
        p_values=parsed_pv,
        options=options,
    )


def load_config(path: str) -> ProblemConfig:
    """Read and validate a JSON config file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from exc
    return parse_config(doc)


def _family_echo(fam: FamilySpec) -> dict[str, Any]:
    return {
        "label": fam.label,
        "hypotheses": list(fam.hypothesis_labels),
        "initial_level": fam.initial_level,
    }


def canonical_echo(cfg: ProblemConfig) -> dict[str, Any]:
    """Canonical dict form of a validated config.

    Re-parsing the echo yields an equivalent config.  The
    "transition_edges" block is informational only and ignored on
    re-parse.
    """
    out: dict[str, Any] = {"procedure": cfg.procedure}
    if cfg.procedure in ("fallback-oracle", "fixed-sequence-oracle"):
        assert cfg.hypothesis_labels is not None and cfg.hypothesis_levels is not None
        out["hypotheses"] = [
            {"label": lab, "level": lev}
            for lab, lev in zip(cfg.hypothesis_labels, cfg.hypothesis_levels)
        ]
    elif isinstance(cfg.problem, GatekeepingProblem):
        out["global_level"] = cfg.problem.global_level
        out["families"] = [_family_echo(f) for f in cfg.problem.families]
        out["transition"] = [list(row) for row in cfg.problem.transition.entries]
        edges = []
        for i, row in enumerate(cfg.problem.transition.entries):
            for j, g in enumerate(row):
                if g > 0.0:
                    src = cfg.problem.families[i].label
                    dst = cfg.problem.families[j].label
                    edges.append(f"{src} -> {dst} : {g:g}")
        out["transition_edges"] = edges
    else:
        assert isinstance(cfg.problem, TwoLayerProblem)
        out["global_level"] = cfg.problem.global_level
        out["layer1"] = [_family_echo(f) for f in cfg.problem.layer1]
        out["layer2"] = [_family_echo(f) for f in cfg.problem.layer2]
        out["forward"] = [list(row) for row in cfg.problem.forward]
        out["backward"] = [list(row) for row in cfg.problem.backward]
    if cfg.p_values is not None:
        out["p_values"] = dict(cfg.p_values)
    opts: dict[str, Any] = {}
    if cfg.options.stage_cap is not None:
        opts["stage_cap"] = cfg.options.stage_cap
    if not cfg.options.record_full_trail:
        opts["record_full_trail"] = False
    if opts:
        out["options"] = opts
    return out
