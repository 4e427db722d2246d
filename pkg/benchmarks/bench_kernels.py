"""Time PACMaxing on the compiled kernel against the pure-Python kernel.

    python benchmarks/bench_kernels.py [--repeats 5]

Both backends draw the same uniforms and return the same arm, so the
comparison is purely about loop speed.
"""
import argparse
import time

import numpy as np

from qexplore import kernels
from qexplore.env import ArmSource
from qexplore.subroutines import pac_budget, pac_maxing

CASES = [
    # (label, means, eps, delta, bound)
    ("10 arms, gap 0.1, KL", [0.9 - 0.1 * i for i in range(10)], 0.1, 0.1, "kl"),
    ("10 arms, gap 0.1, Hoeffding", [0.9 - 0.1 * i for i in range(10)], 0.1, 0.1, "hoeffding"),
    ("30 arms, close top, KL", [0.6, 0.58] + [0.3] * 28, 0.05, 0.05, "kl"),
    ("duel vs constant, KL", [0.56, 0.5], 0.0125, 0.01, "kl"),
]


def time_case(backend, means, eps, delta, bound, repeats):
    best, samples = float("inf"), None
    for r in range(repeats):
        src = ArmSource.finite(means, seed=r)
        start = time.perf_counter()
        res = pac_maxing(src.arms, eps, delta, pac_budget(len(means), eps, delta), src, bound,
                         backend=backend)
        best = min(best, time.perf_counter() - start)
        samples = res.samples
    return best, samples


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    backends = kernels.available()
    if "compiled" not in backends:
        print("compiled kernel not built; only the Python kernel is available")
    print(f"{'case':<30} {'samples':>9} " + " ".join(f"{b + ' ms':>12}" for b in backends)
          + ("   speedup" if len(backends) == 2 else ""))
    for label, means, eps, delta, bound in CASES:
        row = {b: time_case(b, means, eps, delta, bound, args.repeats) for b in backends}
        samples = row[backends[0]][1]
        line = f"{label:<30} {samples:>9} " + " ".join(f"{row[b][0] * 1e3:>12.2f}" for b in backends)
        if len(backends) == 2:
            line += f"   {row['python'][0] / row['compiled'][0]:>6.1f}x"
        print(line)


if __name__ == "__main__":
    main()
