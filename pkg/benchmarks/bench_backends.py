"""Compare the compiled batch kernels against the numpy fallback.

Runs both backends on the same replication batches, checks the masks are
bit-identical, and prints throughput for each.  Usage:

    python3 benchmarks/bench_backends.py [--reps N]
"""

import argparse
import time

import numpy as np

from gatekeep.backends import _batch

try:
    from gatekeep.backends import _native
except ImportError:
    _native = None


def sequential_case(name, sizes, alphas, G):
    sizes = np.asarray(sizes, dtype=np.int64)
    alphas = np.asarray(alphas, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    cap = int(sizes.sum()) + 1

    def run(impl, P):
        return impl.reject_batch(P, sizes, alphas, G, cap)

    return name, int(sizes.sum()), run


def two_layer_case(name, sizes1, sizes2, alphas1, alphas2, fwd, bwd):
    s1 = np.asarray(sizes1, dtype=np.int64)
    s2 = np.asarray(sizes2, dtype=np.int64)
    a1 = np.asarray(alphas1, dtype=np.float64)
    a2 = np.asarray(alphas2, dtype=np.float64)
    fwd = np.asarray(fwd, dtype=np.float64)
    bwd = np.asarray(bwd, dtype=np.float64)
    n = int(s1.sum() + s2.sum())
    cap = n + 1

    def run(impl, P):
        return impl.reject_batch_two_layer(P, s1, a1, s2, a2, fwd, bwd, cap)

    return name, n, run


CASES = [
    sequential_case(
        "two families (2+2)", (2, 2), (0.04, 0.01), ((0.0, 1.0), (1.0, 0.0))
    ),
    sequential_case(
        "three families (2+2+2)",
        (2, 2, 2),
        (0.0125, 0.025 / 3, 0.025 / 6),
        ((0.0, 0.5, 0.5), (0.5, 0.0, 0.5), (0.5, 0.5, 0.0)),
    ),
    sequential_case(
        "six families (3 each)",
        (3,) * 6,
        (0.05 / 6,) * 6,
        np.full((6, 6), 0.2) - np.eye(6) * 0.2,
    ),
    two_layer_case(
        "two layers (2x2 + 2x3)",
        (2, 2),
        (2, 3),
        (0.015, 0.013),
        (0.012, 0.01),
        ((0.6, 0.4), (0.3, 0.7)),
        ((0.5, 0.5), (0.2, 0.8)),
    ),
]


def time_kernel(run, impl, P, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        run(impl, P)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=200_000)
    args = ap.parse_args()

    rng = np.random.default_rng(11)
    print(f"batch size: {args.reps} replications, best of 3")
    header = f"{'case':<26} {'fallback':>12} {'native':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, n, run in CASES:
        P = rng.uniform(size=(args.reps, n)) * 0.12
        t_fb = time_kernel(run, _batch, P)
        if _native is None:
            print(f"{name:<26} {t_fb:>10.3f} s {'absent':>12} {'-':>8}")
            continue
        t_nat = time_kernel(run, _native, P)
        same = np.array_equal(
            np.asarray(run(_batch, P)), np.asarray(run(_native, P))
        )
        if not same:
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<26} {t_fb:>10.3f} s {t_nat:>10.3f} s {t_fb / t_nat:>7.1f}x")
    if _native is None:
        print("compiled kernel not built; fallback timings only")


if __name__ == "__main__":
    main()
