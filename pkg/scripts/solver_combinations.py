"""Ablation over solver settings at a fixed (B, C).

    python3 scripts/solver_combinations.py --batch 256 --dim 32 [--hard]

For each configuration: median wall time, worst reconstruction error, and the
mean / max number of Halley (or Newton) iterations per secular root, taken
from the merge monitor.
"""

import argparse
import statistics
import time

import numpy as np

from batchdc import SolverConfig, batched_eigh, cli

CONFIGS = {
    "default (k=4, halley, pole scaling)": SolverConfig(),
    "bisection only (k=2)": SolverConfig(section_count=2),
    "k=8": SolverConfig(section_count=8),
    "halley on plain f": SolverConfig(pole_scaling=False),
    "newton, pole scaled": SolverConfig(root_method="newton"),
    "newton on plain f": SolverConfig(root_method="newton", pole_scaling=False, max_halley_iters=500),
    "no shrinkage": SolverConfig(shrink_threshold=0.0),
    "no extended polish": SolverConfig(extended_polish=False),
    "qr leaves, crossover 8": SolverConfig.hybrid(8),
    "qr leaves, crossover 16": SolverConfig.hybrid(16),
    "qr only": SolverConfig.qr_only(),
}


def profile(A, cfg, trials):
    iters = []
    res = batched_eigh(A, cfg, monitor=lambda s, r: iters.append(r.halley_iters[s.active]))
    times = []
    for _ in range(trials):
        t0 = time.perf_counter()
        batched_eigh(A, cfg)
        times.append(time.perf_counter() - t0)
    recon = np.linalg.norm(res.reconstruct() - A, axis=(1, 2)) / np.linalg.norm(A, axis=(1, 2))
    it = np.concatenate(iters) if iters else np.zeros(1)
    return statistics.median(times), recon.max(), it.mean(), it.max()


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hard", action="store_true")
    args = p.parse_args(argv)

    A = cli.make_inputs(cli.RunConfig(seed=args.seed, hard=args.hard), args.batch, args.dim)
    print(f"{'configuration':<38} {'ms':>8} {'recon':>9} {'iters':>6} {'max':>4}")
    for name, cfg in CONFIGS.items():
        t, recon, mean_it, max_it = profile(A, cfg, args.trials)
        print(f"{name:<38} {t * 1e3:>8.1f} {recon:>9.1e} {mean_it:>6.2f} {int(max_it):>4}")


if __name__ == "__main__":
    main()
