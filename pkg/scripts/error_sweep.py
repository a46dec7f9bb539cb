"""Accuracy against the Jacobi oracle as a function of dimension.

    python3 scripts/error_sweep.py --dims 4,8,16,32,64 --batch 128 [--hard]

Prints the per-dimension maxima of the eigenvalue error (relative to the
spectral norm), the orthogonality error and the relative reconstruction error,
for the default solver and for the QR-only preset.
"""

import argparse

from batchdc import SolverConfig, cli


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--dims", type=cli._csv_ints, default=[4, 8, 16, 32, 64])
    p.add_argument("--batch", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hard", action="store_true", help="clustered spectra")
    args = p.parse_args(argv)

    presets = {"dc": SolverConfig(), "qr": SolverConfig.qr_only()}
    run = cli.RunConfig(seed=args.seed, hard=args.hard)
    print(f"{'solver':>6} {'C':>4} {'eig/|A|2':>10} {'orth':>10} {'recon/|A|F':>11}")
    for C in args.dims:
        A = cli.make_inputs(run, args.batch, C)
        for name, cfg in presets.items():
            eig, orth, recon = cli.measure_errors(A, cfg)
            print(f"{name:>6} {C:>4} {eig:>10.2e} {orth:>10.2e} {recon:>11.2e}")


if __name__ == "__main__":
    main()
