"""Wall-time sweep over batch size and dimension for the dc, qr and loop solvers.

    python3 scripts/speed_sweep.py --dims 8,16,32,64 --batches 64,256,512 --trials 5 --out speed.csv

Writes the raw CSV from ``batchdc bench`` and prints a table of medians with
the dc speed-up over each baseline.
"""

import argparse
import sys

from batchdc import cli


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--dims", type=cli._csv_ints, default=[8, 16, 32, 64])
    p.add_argument("--batches", type=cli._csv_ints, default=[64, 256, 512])
    p.add_argument("--solvers", type=cli._csv_solvers, default=["dc", "qr", "loop"])
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--hard", action="store_true")
    p.add_argument("--out", default="speed_sweep.csv")
    args = p.parse_args(argv)

    run = cli.RunConfig(dims=args.dims, batches=args.batches, solvers=args.solvers, trials=args.trials,
                        seed=args.seed, threads=args.threads, hard=args.hard)
    with open(args.out, "w", newline="") as fh:
        med = cli.bench(run, fh)

    head = f"{'B':>6} {'C':>4} " + " ".join(f"{s + ' [ms]':>12}" for s in args.solvers)
    others = [s for s in args.solvers if s != "dc"]
    if "dc" in args.solvers:
        head += " " + " ".join(f"{'dc vs ' + s:>10}" for s in others)
    print(head)
    for B in args.batches:
        for C in args.dims:
            line = f"{B:>6} {C:>4} " + " ".join(f"{med[(s, B, C)] / 1e6:>12.2f}" for s in args.solvers)
            if "dc" in args.solvers:
                line += " " + " ".join(f"{med[(s, B, C)] / med[('dc', B, C)]:>9.2f}x" for s in others)
            print(line)
    print(f"raw rows written to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
