"""Benchmark the hot kernels: numba JIT loops vs the pure-numpy fallback.

Runs the same seeded sweep workload (2-locus run-to-convergence) and the
product-form PW race on both implementations and prints wall times plus the
speedup. The numpy fallback is what HAPLOMW_BACKEND=numpy selects at runtime.

Usage: python benchmarks/bench_backends.py [--instances N] [--s S] [--seed N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from haplomw import _kernels
from haplomw.experiments import instance_seed, random_landscape


def sweep_workload(runner, instances: int, s: float, seed: int) -> tuple[float, int]:
    start = time.perf_counter()
    total_steps = 0
    for i in range(instances):
        w = random_landscape((8, 5), s, instance_seed(seed, i)).values
        p0 = np.full((8, 5), 1 / 40.0)
        t_conv, _ = runner(w, p0, _kernels.SR, 0.5, 100_000, 1 - 1e-5)
        total_steps += t_conv if t_conv >= 0 else 100_000
    return time.perf_counter() - start, total_steps


def pw_workload(runner, repeats: int) -> float:
    w = np.array([[1.01, 1.0], [1.0, 1.0099603]])
    x0 = np.array([0.499, 0.501])
    start = time.perf_counter()
    for _ in range(repeats):
        runner(w, x0.copy(), x0.copy(), 10_000_000, 1 - 1e-5)
    return time.perf_counter() - start


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--instances", type=int, default=200)
    parser.add_argument("--s", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--pw-repeats", type=int, default=20)
    args = parser.parse_args()

    if _kernels.run_to_convergence_numba is None:
        print("numba unavailable; only the numpy fallback can run")
        elapsed, steps = sweep_workload(
            _kernels.run_to_convergence_numpy, args.instances, args.s, args.seed
        )
        print(f"numpy sweep: {elapsed:8.2f}s  ({steps} generations)")
        return

    # warm the JIT outside the timed region
    _kernels.run_to_convergence_numba(
        np.ones((8, 5)) * 1.01, np.full((8, 5), 1 / 40.0), _kernels.SR, 0.5, 10, 0.999
    )
    _kernels.product_pw_numba(
        np.array([[1.01, 1.0], [1.0, 1.0099603]]),
        np.array([0.499, 0.501]), np.array([0.499, 0.501]), 10, 0.999,
    )

    print(f"sweep workload: {args.instances} instances of 8x5, s={args.s}, SR r=0.5")
    t_nb, steps = sweep_workload(
        _kernels.run_to_convergence_numba, args.instances, args.s, args.seed
    )
    t_np, _ = sweep_workload(
        _kernels.run_to_convergence_numpy, args.instances, args.s, args.seed
    )
    print(f"  numba: {t_nb:8.3f}s   numpy: {t_np:8.3f}s   "
          f"speedup {t_np / t_nb:5.1f}x   ({steps} generations)")

    print(f"product-PW race to convergence, {args.pw_repeats} repeats")
    t_nb = pw_workload(_kernels.product_pw_numba, args.pw_repeats)
    t_np = pw_workload(_kernels.product_pw_numpy, args.pw_repeats)
    print(f"  numba: {t_nb:8.3f}s   numpy: {t_np:8.3f}s   speedup {t_np / t_nb:5.1f}x")


if __name__ == "__main__":
    main()
