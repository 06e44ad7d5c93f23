"""Compare the compiled kernels with the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs on the same inputs under both backends; outputs must match
exactly before timings are reported.
"""
import argparse
import timeit

import numpy as np

from qcarobust import _kernels_py as pure

try:
    from qcarobust import _kernels as fast
except ImportError:
    fast = None


def cases(rng):
    draws = [np.ascontiguousarray(rng.random((n, v + 1))) for n, v in ((20, 3), (60, 5), (200, 6))]
    probs = [np.ascontiguousarray(rng.uniform(0.2, 0.8, d.shape[1])) for d in draws]
    conds = np.ascontiguousarray((rng.random((500, 6)) < 0.5).astype(np.uint8))
    outcome = np.ascontiguousarray((rng.random(500) < 0.4).astype(np.uint8))
    counts, hits = pure.config_counts(conds, outcome)
    cons = np.round(np.arange(0.70, 0.951, 0.05), 2)
    conf_ns = np.arange(1, 7, dtype=np.int64)
    return {
        "uniform_indicator": lambda k: [k.uniform_indicator(d, p, 0.8, 2, True)
                                        for d, p in zip(draws, probs)],
        "grid_indicators": lambda k: k.grid_indicators(counts, hits, cons, conf_ns, True),
        "config_counts": lambda k: k.config_counts(conds, outcome),
    }


def same(a, b):
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=2000)
    args = ap.parse_args()
    if fast is None:
        raise SystemExit("compiled extension not built; nothing to compare")
    rng = np.random.default_rng(7)
    print(f"{'kernel':<20}{'python us':>12}{'cython us':>12}{'speedup':>10}")
    for name, call in cases(rng).items():
        if not same(call(pure), call(fast)):
            raise SystemExit(f"{name}: backends disagree")
        tp = min(timeit.repeat(lambda: call(pure), number=args.number, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: call(fast), number=args.number, repeat=args.repeat))
        tp, tc = tp / args.number * 1e6, tc / args.number * 1e6
        print(f"{name:<20}{tp:>12.2f}{tc:>12.2f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
