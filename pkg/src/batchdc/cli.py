"""Command-line harness: timing sweeps, accuracy sweeps and file-to-file solves.

    batchdc bench  --dims 16,32,64 --batches 512 --solvers dc,qr,loop --trials 10
    batchdc verify --dims 4,8,16,32,64 --batches 128
    batchdc solve  input.beig eigenvalues.beig --vectors vectors.beig
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import statistics
import sys
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional

import numpy as np

from .core import (EigError, FormatError, AsymmetricInput, ShapeMismatch, SolverConfig, read_batch,
                   tau_orth, write_batch)
from .driver import batched_eigh, loop_eigh
from .oracle import batched_jacobi_eigh

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_MALFORMED = 2
EXIT_IO = 3
EXIT_SOLVER = 4
EXIT_USAGE = 64


@dataclass(frozen=True)
class RunConfig:
    dims: List[int] = field(default_factory=lambda: [4, 8, 16, 32, 64])
    batches: List[int] = field(default_factory=lambda: [128])
    solvers: List[str] = field(default_factory=lambda: ["dc"])
    trials: int = 10
    warmup: int = 1
    seed: int = 0
    threads: Optional[int] = None
    hard: bool = False
    identity: bool = False
    solver: SolverConfig = SolverConfig()


def random_spd(rng: np.random.Generator, B: int, C: int) -> np.ndarray:
    """A = G^T G / C + 1e-3 I with standard normal G."""
    G = rng.standard_normal((B, C, C))
    return G.transpose(0, 2, 1) @ G / C + 1e-3 * np.eye(C)


def clustered_spd(rng: np.random.Generator, B: int, C: int) -> np.ndarray:
    """Random orthogonal similarity of a spectrum with tight clusters and exact repeats."""
    n_clusters = max(1, C // 4)
    centers = rng.uniform(0.1, 4.0, size=(B, n_clusters))
    pick = rng.integers(0, n_clusters, size=(B, C))
    spread = rng.choice([0.0, 1e-13, 1e-10, 1e-7], size=(B, C))
    lam = np.take_along_axis(centers, pick, axis=1) + spread * rng.standard_normal((B, C))
    Q, _ = np.linalg.qr(rng.standard_normal((B, C, C)))
    A = (Q * lam[:, None, :]) @ Q.transpose(0, 2, 1)
    return 0.5 * (A + A.transpose(0, 2, 1))


def make_inputs(run: RunConfig, B: int, C: int) -> np.ndarray:
    # each (B, C) cell draws from its own stream so results do not depend on sweep order
    rng = np.random.default_rng([run.seed, B, C])
    if run.identity:
        return np.broadcast_to(np.eye(C), (B, C, C)).copy()
    if run.hard:
        return clustered_spd(rng, B, C)
    return random_spd(rng, B, C)


def solver_fn(name: str, cfg: SolverConfig) -> Callable[[np.ndarray], object]:
    if name == "dc":
        return lambda a: batched_eigh(a, cfg)
    if name == "qr":
        return lambda a: batched_eigh(a, replace(cfg, crossover_dim=1 << 30, base_solver="batched_qr"))
    if name == "loop":
        return lambda a: loop_eigh(a, replace(cfg, crossover_dim=1 << 30, base_solver="batched_qr"))
    raise ValueError(f"unknown solver {name!r}")


def _threads(n: Optional[int]):
    if n is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def bench(run: RunConfig, out) -> Dict[tuple, float]:
    """Write one row per timed trial and a median row per (solver, B, C)."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["solver", "B", "C", "trial", "wall_ns"])
    medians = {}
    with _threads(run.threads):
        for B in run.batches:
            for C in run.dims:
                A = make_inputs(run, B, C)
                for name in run.solvers:
                    fn = solver_fn(name, run.solver)
                    for _ in range(run.warmup):
                        fn(A)
                    times = []
                    for trial in range(run.trials):
                        t0 = time.perf_counter_ns()
                        fn(A)
                        times.append(time.perf_counter_ns() - t0)
                        w.writerow([name, B, C, trial, times[-1]])
                    medians[(name, B, C)] = statistics.median(times)
    for (name, B, C), med in medians.items():
        w.writerow([name, B, C, "median", int(med)])
    return medians


@dataclass(frozen=True)
class Thresholds:
    eig: float = 1e-10  # relative to ||A||_2
    orth_per_dim: float = 1e-8  # times C
    recon: float = 1e-9


def measure_errors(A: np.ndarray, cfg: SolverConfig):
    """(max eigenvalue error / ||A||_2, max ||V^T V - I||_F, max reconstruction error / ||A||_F)."""
    res = batched_eigh(A, cfg)
    w_ref, _ = batched_jacobi_eigh(A)
    scale = np.maximum(np.abs(w_ref).max(axis=1), np.finfo(float).tiny)
    eig = np.abs(res.eigenvalues - w_ref).max(axis=1) / scale
    V = res.eigenvectors
    C = A.shape[1]
    orth = np.linalg.norm(V.transpose(0, 2, 1) @ V - np.eye(C), axis=(1, 2))
    fro = np.maximum(np.linalg.norm(A, axis=(1, 2)), np.finfo(float).tiny)
    recon = np.linalg.norm(res.reconstruct() - A, axis=(1, 2)) / fro
    return float(eig.max()), float(orth.max()), float(recon.max())


def verify(run: RunConfig, out, thresholds: Thresholds = Thresholds()) -> bool:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["B", "C", "max_eig_err", "max_orth_err", "max_recon_rel_err"])
    ok = True
    with _threads(run.threads):
        for B in run.batches:
            for C in run.dims:
                eig, orth, recon = measure_errors(make_inputs(run, B, C), run.solver)
                w.writerow([B, C, f"{eig:.3e}", f"{orth:.3e}", f"{recon:.3e}"])
                if eig > thresholds.eig or orth > thresholds.orth_per_dim * C or recon > thresholds.recon:
                    ok = False
    return ok


def solve_file(src: str, dst: str, vectors: Optional[str], cfg: SolverConfig) -> None:
    with open(src, "rb") as fh:
        m = read_batch(fh.read())
    res = batched_eigh(m, cfg)
    B, C = res.eigenvalues.shape
    # eigenvalues go out as B*C one-by-one "matrices"
    vals = write_batch(res.eigenvalues.reshape(B * C, 1, 1))
    with open(dst, "wb") as fh:
        fh.write(vals)
    if vectors:
        with open(vectors, "wb") as fh:
            fh.write(write_batch(res.eigenvectors))


def _csv_ints(text: str) -> List[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("values must be positive")
    return vals


def _csv_solvers(text: str) -> List[str]:
    vals = [x.strip() for x in text.split(",") if x.strip()]
    bad = [v for v in vals if v not in ("dc", "qr", "loop")]
    if not vals or bad:
        raise argparse.ArgumentTypeError(f"solvers must be among dc,qr,loop (got {text!r})")
    return vals


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="batchdc", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(sp, default_batches):
        sp.add_argument("--dims", type=_csv_ints, default=[4, 8, 16, 32, 64])
        sp.add_argument("--batches", type=_csv_ints, default=default_batches)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--hard", action="store_true", help="clustered spectra that stress deflation")
        sp.add_argument("--identity", action="store_true", help="identity matrices")
        sp.add_argument("--out", default=None, help="CSV path (default stdout)")

    def solver_flags(sp):
        sp.add_argument("--k", type=int, default=4, help="multi-section count")
        sp.add_argument("--crossover", type=int, default=2, help="leaf size; >2 switches leaves to QR")
        sp.add_argument("--res-eps", type=float, default=None, help="secular residual tolerance")
        sp.add_argument("--root-method", choices=["halley", "newton"], default="halley")

    b = sub.add_parser("bench", help="time solvers over a grid of batch sizes and dimensions")
    common(b, [256, 512])
    solver_flags(b)
    b.add_argument("--solvers", type=_csv_solvers, default=["dc", "qr"])
    b.add_argument("--trials", type=int, default=10)
    b.add_argument("--warmup", type=int, default=1)

    v = sub.add_parser("verify", help="errors against the Jacobi oracle; exit 1 above thresholds")
    common(v, [128])
    solver_flags(v)
    v.add_argument("--max-eig-err", type=float, default=Thresholds.eig)
    v.add_argument("--max-orth-err", type=float, default=Thresholds.orth_per_dim, help="per unit dimension")
    v.add_argument("--max-recon-err", type=float, default=Thresholds.recon)

    s = sub.add_parser("solve", help="eigen-decompose a BEIG file")
    s.add_argument("input")
    s.add_argument("output", help="eigenvalues, BEIG with B*C one-by-one entries")
    s.add_argument("--vectors", default=None, help="optional eigenvector output (BEIG)")
    solver_flags(s)
    return p


def _solver_config(args) -> SolverConfig:
    kw = dict(section_count=args.k, root_method=args.root_method)
    if args.res_eps is not None:
        kw["residual_eps"] = args.res_eps
    if args.crossover > 2:
        kw.update(crossover_dim=args.crossover, base_solver="batched_qr")
    elif args.crossover < 2:
        raise ValueError("--crossover must be >= 2")
    return SolverConfig(**kw)


def _run_config(args, cfg) -> RunConfig:
    return RunConfig(dims=args.dims, batches=args.batches, solvers=getattr(args, "solvers", ["dc"]),
                     trials=getattr(args, "trials", 1), warmup=getattr(args, "warmup", 0), seed=args.seed,
                     threads=args.threads, hard=args.hard, identity=args.identity, solver=cfg)


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _solver_config(args)
    except ValueError as err:
        print(f"batchdc: error: {err}", file=sys.stderr)
        return EXIT_USAGE

    if args.cmd == "solve":
        try:
            solve_file(args.input, args.output, args.vectors, cfg)
        except (FormatError, ShapeMismatch, AsymmetricInput) as err:
            print(f"batchdc: malformed input: {err}", file=sys.stderr)
            return EXIT_MALFORMED
        except OSError as err:
            print(f"batchdc: io error: {err}", file=sys.stderr)
            return EXIT_IO
        except EigError as err:
            print(f"batchdc: solver failed: {err}", file=sys.stderr)
            return EXIT_SOLVER
        return EXIT_OK

    if args.cmd == "bench" and (args.trials < 1 or args.warmup < 0):
        print("batchdc: error: --trials must be >= 1 and --warmup >= 0", file=sys.stderr)
        return EXIT_USAGE
    run = _run_config(args, cfg)
    try:
        with _output(args.out) as out:
            if args.cmd == "bench":
                bench(run, out)
                return EXIT_OK
            th = Thresholds(args.max_eig_err, args.max_orth_err, args.max_recon_err)
            return EXIT_OK if verify(run, out, th) else EXIT_THRESHOLD
    except OSError as err:
        print(f"batchdc: io error: {err}", file=sys.stderr)
        return EXIT_IO
    except EigError as err:
        print(f"batchdc: solver failed: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
