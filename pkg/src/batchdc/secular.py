"""Batched conquer step: secular systems, deflation, hybrid-section and Halley.

All problems of one merge level are held as (P, n) arrays. A root is stored in
the slot of its lower pole: with poles sorted descending, the root of active
slot i lies in (d_i, d_u) where u is the nearest active slot above i, and the
top root lies in (d_i, upper_bound]. Roots are carried relative to a nearby
pole (``origin``) as ``lam = d[origin] + tau`` so that differences to the
closest poles keep full relative accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import MaxItersExceeded, SolverConfig

_EPS = np.finfo(np.float64).eps
# |f| below this multiple of eps * (1 + rho sum|terms|) is rounding noise
_FLOOR = 8 * _EPS


@dataclass
class SecularSystem:
    """P independent problems ``D + rho z z^T`` with D sorted descending."""

    d: np.ndarray  # (P, n)
    z: np.ndarray  # (P, n)
    rho: np.ndarray  # (P,)
    fro_bound: np.ndarray  # (P,)
    active: np.ndarray  # (P, n) bool, False for deflated slots
    perm: Optional[np.ndarray] = None  # (P, n) slot -> index in the unsorted concatenation

    @property
    def shape(self):
        return self.d.shape

    def zz(self) -> np.ndarray:
        return np.sum(np.where(self.active, self.z, 0.0) ** 2, axis=1)

    def residual_scale(self) -> np.ndarray:
        return 1.0 + self.rho * self.zz()

    def f(self, lam) -> np.ndarray:
        """Plain evaluation of f at absolute points ``lam`` (P, m); reference only."""
        z2 = np.where(self.active, self.z, 0.0) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = z2[:, None, :] / (self.d[:, None, :] - np.asarray(lam)[:, :, None])
            terms = np.where(z2[:, None, :] == 0.0, 0.0, terms)
        return 1.0 + self.rho[:, None] * terms.sum(axis=2)


@dataclass
class Rotations:
    """Plane rotations applied during deflation, in order.

    Each entry is (problem index array, slot a, slot b, c, s) and maps basis
    columns as ``a' = c a - s b``, ``b' = s a + c b``.
    """

    steps: list

    def apply(self, W: np.ndarray) -> np.ndarray:
        """Apply to the columns of W (P, m, n) in place and return it."""
        for idx, a, b, c, s in self.steps:
            wa = W[idx, :, a]
            wb = W[idx, :, b]
            W[idx, :, a] = c[:, None] * wa - s[:, None] * wb
            W[idx, :, b] = s[:, None] * wa + c[:, None] * wb
        return W


@dataclass
class RootBracket:
    """Per-root state of the root finder, all (P, n) except ``upper``."""

    lower: np.ndarray  # L in tau coordinates
    upper_b: np.ndarray  # U in tau coordinates
    h: np.ndarray  # current estimate in tau coordinates
    origin: np.ndarray  # int slot whose pole is the coordinate origin
    gap: np.ndarray  # width of the interlacing interval
    converged: np.ndarray  # bool
    section_iters: np.ndarray
    halley_iters: np.ndarray
    residual: np.ndarray
    floor: Optional[np.ndarray] = None  # rounding level of the last evaluation of f

    def width(self) -> np.ndarray:
        return self.upper_b - self.lower


@dataclass
class SecularRoots:
    lam: np.ndarray  # (P, n) absolute root, or the pole value for deflated slots
    tau: np.ndarray  # (P, n)
    origin: np.ndarray  # (P, n)
    residual: np.ndarray  # (P, n), 0 for deflated slots
    section_iters: np.ndarray
    halley_iters: np.ndarray
    tau_lo: Optional[np.ndarray] = None  # low-order correction, root = d[origin] + tau + tau_lo


def merge_order(left_w, right_w):
    """Descending sort of the concatenated eigenvalues; returns (d, perm)."""
    cat = np.concatenate([left_w, right_w], axis=1)
    perm = np.argsort(-cat, axis=1, kind="stable")
    return np.take_along_axis(cat, perm, axis=1), perm


def build_system(left, right, beta, theta=None, fro_bound=None) -> SecularSystem:
    """Secular system of a torn pair from the two solved halves.

    ``left`` / ``right`` are SpectralFactorization-like (``eigenvalues``,
    ``eigenvectors``) or (w, last_row / first_row) tuples. z takes theta times
    the last row of Q1 followed by the first row of Q2.
    """
    w1, last1 = _half(left, -1)
    w2, first2 = _half(right, 0)
    beta = np.asarray(beta, dtype=np.float64).reshape(-1)
    if theta is None:
        theta = np.where(beta >= 0.0, 1.0, -1.0)
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    return assemble_system(w1, last1, w2, first2, beta, theta, fro_bound)


def _half(part, row):
    if isinstance(part, tuple):
        return np.atleast_2d(part[0]), np.atleast_2d(part[1])
    V = part.eigenvectors
    return part.eigenvalues, V[:, row, :]


def assemble_system(w1, last1, w2, first2, beta, theta, fro_bound=None) -> SecularSystem:
    d, perm = merge_order(w1, w2)
    zc = np.concatenate([theta[:, None] * last1, first2], axis=1)
    z = np.take_along_axis(zc, perm, axis=1)
    rho = np.abs(beta)
    if fro_bound is None:
        # ||D + rho z z^T||_F, equal to the block's Frobenius norm
        zz = np.sum(z * z, axis=1)
        fro_bound = np.sqrt(np.maximum(np.sum(d * d, axis=1) + 2.0 * rho * np.sum(d * z * z, axis=1) + (rho * zz) ** 2, 0.0))
    active = np.ones(d.shape, dtype=bool)
    return SecularSystem(d, z, rho, np.asarray(fro_bound, dtype=np.float64), active, perm)


def make_system(d, z, rho) -> SecularSystem:
    """Secular system from raw poles, weights and rho (rows sorted descending here)."""
    d = np.atleast_2d(np.asarray(d, dtype=np.float64))
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    rho = np.abs(np.asarray(rho, dtype=np.float64).reshape(-1))
    n = d.shape[1]
    half = (n + 1) // 2
    ones = np.ones(d.shape[0])
    return assemble_system(d[:, :half], z[:, :half], d[:, half:], z[:, half:], rho, ones)


def deflate(sys: SecularSystem, eta: float = 1e-14):
    """Resolve negligible weights and (near-)equal poles before root finding.

    A weight is negligible when ``rho |z_i| ||z|| <= eta * scale`` with
    ``scale = max|d| + rho ||z||^2``. Two adjacent kept poles with
    ``|d_a - d_b| <= eta (|d_a| + |d_b| + rho)`` are rotated so that ``z_a``
    vanishes; slot ``a`` then holds an eigenpair of the merged block.
    Returns a new system and the rotations to apply to the basis.
    """
    d = sys.d.copy()
    z = sys.z.copy()
    active = sys.active.copy()
    rho = sys.rho
    P, n = d.shape
    znorm = np.sqrt(np.sum(np.where(active, z, 0.0) ** 2, axis=1))
    scale = np.max(np.abs(d), axis=1, initial=0.0) + rho * znorm ** 2
    small = rho[:, None] * np.abs(z) * znorm[:, None] <= eta * scale[:, None]
    active &= ~small
    z[~active] = 0.0

    steps = []
    last = np.full(P, -1)
    rows = np.arange(P)
    for j in range(n):
        keep = active[:, j]
        has = keep & (last >= 0)
        if has.any():
            lj = np.where(has, last, 0)
            da = d[rows, lj]
            close = has & (np.abs(da - d[:, j]) <= eta * (np.abs(da) + np.abs(d[:, j]) + rho))
            if close.any():
                idx = np.flatnonzero(close)
                a = lj[idx]
                za, zb = z[idx, a], z[idx, j]
                r = np.hypot(za, zb)
                c, s = zb / r, za / r
                d_a, d_b = d[idx, a], d[idx, j]
                d[idx, a] = c * c * d_a + s * s * d_b
                d[idx, j] = s * s * d_a + c * c * d_b
                z[idx, a] = 0.0
                z[idx, j] = r
                active[idx, a] = False
                steps.append((idx, a, np.full(idx.size, j), c, s))
        last = np.where(keep, j, last)
    out = replace(sys, d=d, z=z, active=active)
    return out, Rotations(steps)


def _upper_slots(active):
    """Index of the nearest active slot above each slot (-1 if none)."""
    P, n = active.shape
    idx = np.where(active, np.arange(n), -1)
    run = np.maximum.accumulate(idx, axis=1)
    up = np.full((P, n), -1)
    up[:, 1:] = run[:, :-1]
    return up


def _eval_sums(d_eval, z2, dorig, tau, need=2):
    """One pass over the poles with three accumulators.

    Returns sums S_m = sum_j z_j^2 / (d_j - lam)^(m+1) for m <= need, with
    ``d_j - lam`` formed as ``(d_j - d_origin) - tau``, plus ``sum_j |z_j^2 / (d_j - lam)|``
    when ``need >= 1`` (a scale for the rounding error of f). Deflated poles
    enter with ``d = inf`` and contribute nothing.
    """
    s0 = np.zeros_like(tau)
    s1 = np.zeros_like(tau) if need >= 1 else None
    s2 = np.zeros_like(tau) if need >= 2 else None
    sa = np.zeros_like(tau) if need >= 1 else None
    for j in range(d_eval.shape[1]):
        delta = (d_eval[:, j:j + 1] - dorig) - tau
        t = z2[:, j:j + 1] / delta
        s0 += t
        if need >= 1:
            sa += np.abs(t)
            t = t / delta
            s1 += t
            if need >= 2:
                t = t / delta
                s2 += t
    return s0, s1, s2, sa


class _Work:
    """Active-problem working set with optional compaction (batch shrinkage)."""

    def __init__(self, full: dict, static: dict, running: np.ndarray, threshold: float):
        self.full = full
        self.static = static
        self.running_full = running
        self.threshold = threshold
        self.rows = np.flatnonzero(running.any(axis=1))
        self._gather()

    def _gather(self):
        self.loc = {k: v[self.rows] for k, v in self.full.items()}
        self.st = {k: v[self.rows] for k, v in self.static.items()}
        self.run = self.running_full[self.rows]

    def scatter(self):
        for k, v in self.loc.items():
            self.full[k][self.rows] = v
        self.running_full[self.rows] = self.run

    def problem(self, mask) -> int:
        """Global problem index of the first local row flagged in ``mask``."""
        return int(self.rows[np.flatnonzero(mask.any(axis=1))[0]])

    def maybe_shrink(self) -> bool:
        """Returns False once every problem in the working set has converged."""
        pdone = ~self.run.any(axis=1)
        if pdone.all():
            return False
        if self.threshold > 0.0 and pdone.mean() >= self.threshold:
            self.scatter()
            self.rows = self.rows[~pdone]
            self._gather()
        return True


def init_brackets(sys: SecularSystem) -> RootBracket:
    """Interlacing intervals: (d_i, d_u) for inner roots, (d_top, bound] for the top root.

    The top bound is min(||T||_F, d_top + rho z.z); both hold for every
    symmetric input.
    """
    P, n = sys.shape
    act = sys.active
    up = _upper_slots(act)
    rows = np.arange(P)[:, None]
    ub = np.minimum(sys.fro_bound, np.max(np.where(act, sys.d, -np.inf), axis=1, initial=-np.inf) + sys.rho * sys.zz())
    upper_val = np.where(up >= 0, sys.d[rows, np.maximum(up, 0)], ub[:, None])
    gap = np.where(act, upper_val - sys.d, 0.0)
    # the top interval is closed at the bound; nudge it so it stays a valid bracket
    top = act & (up < 0)
    gap = np.where(top, np.maximum(gap, 0.0) * (1.0 + 4 * _EPS) + 4 * _EPS * np.abs(sys.d) + np.finfo(float).tiny, gap)
    zeros = np.zeros((P, n))
    return RootBracket(
        lower=zeros.copy(), upper_b=gap.copy(), h=0.5 * gap, origin=np.broadcast_to(np.arange(n), (P, n)).copy(),
        gap=gap, converged=~act, section_iters=np.zeros((P, n), dtype=np.int64),
        halley_iters=np.zeros((P, n), dtype=np.int64), residual=zeros.copy())


def _static(sys: SecularSystem):
    z2 = np.where(sys.active, sys.z, 0.0) ** 2
    d_eval = np.where(sys.active, sys.d, np.inf)
    return {"d": sys.d, "d_eval": d_eval, "z2": z2, "rho": sys.rho[:, None],
            "top": (_upper_slots(sys.active) < 0) & sys.active}


def hybrid_section(sys: SecularSystem, br: RootBracket, cfg: SolverConfig = SolverConfig()) -> RootBracket:
    """One bisection step at the interval midpoint, then multi-section probes.

    The bisection step also fixes the coordinate origin: the pole at the
    lower end when f(mid) > 0, else the pole at the upper end (the top root
    keeps its lower pole). Multi-section probes ``L + (U - L) / k`` until
    ``U - L < bracket_eps * gap``.
    """
    k = float(cfg.section_count)
    st = _static(sys)
    st["gap"] = br.gap
    full = {"L": br.lower.copy(), "U": br.upper_b.copy(), "h": br.h.copy(), "origin": br.origin.copy(),
            "conv": br.converged.copy(), "it": br.section_iters.copy(), "res": br.residual.copy()}
    running = ~full["conv"]

    # initial bisection step, relative to the lower pole
    with np.errstate(divide="ignore", invalid="ignore"):
        d = st["d"]
        mid = 0.5 * br.gap
        s0, _, _, _ = _eval_sums(st["d_eval"], st["z2"], d, mid, need=0)
        fm = 1.0 + st["rho"] * s0
    run = running
    pos = run & (fm > 0)
    neg = run & (fm < 0)
    hit = run & (fm == 0)
    top = st["top"]
    up = _upper_slots(sys.active)
    L, U, origin = full["L"], full["U"], full["origin"]
    U[pos] = mid[pos]
    L[neg & top] = mid[neg & top]
    inner = neg & ~top
    origin[inner] = up[inner]
    L[inner] = -mid[inner]
    U[inner] = 0.0
    full["h"] = np.where(hit, mid, full["h"])
    full["conv"] |= hit
    full["it"] += run
    running = run & ~hit

    work = _Work(full, st, running, cfg.shrink_threshold)
    while work.rows.size:
        loc, s, run = work.loc, work.st, work.run
        over = run & (loc["it"] >= cfg.max_section_iters)
        if over.any():
            raise MaxItersExceeded(f"hybrid-section exceeded {cfg.max_section_iters} iterations",
                                   batch_index=work.problem(over), stage="secular")
        wide = run & ~(loc["U"] - loc["L"] < cfg.bracket_eps * s["gap"])
        run &= wide
        if not run.any():
            break
        h = loc["L"] + (loc["U"] - loc["L"]) / k
        dorig = np.take_along_axis(s["d"], loc["origin"], axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            s0, _, _, _ = _eval_sums(s["d_eval"], s["z2"], dorig, h, need=0)
        f = 1.0 + s["rho"] * s0
        p = run & (f > 0)
        q = run & (f < 0)
        z = run & (f == 0)
        loc["U"][p] = h[p]
        loc["L"][q] = h[q]
        loc["h"][z] = h[z]
        loc["conv"][z] = True
        loc["it"] += run
        run &= ~z
        if not work.maybe_shrink():
            break
    work.scatter()
    h_out = np.where(full["conv"], full["h"], 0.5 * (full["L"] + full["U"]))
    return RootBracket(full["L"], full["U"], h_out, full["origin"], br.gap, full["conv"],
                       full["it"], br.halley_iters.copy(), full["res"])


def halley_refine(sys: SecularSystem, br: RootBracket, cfg: SolverConfig = SolverConfig(),
                  method: Optional[str] = None, pole_scaling: Optional[bool] = None) -> RootBracket:
    """Safeguarded Halley (or Newton) iteration inside each bracket.

    Every evaluation tightens the bracket by the sign of f; an update that
    leaves the open bracket is replaced by its midpoint. A root stops when
    ``|f| <= residual_eps * (1 + rho * sum_j |z_j^2 / (d_j - lam)|)``, when its
    last step was below ``rel_change_eps * |tau|``, or when the bracket has
    collapsed. The scale in the first test is the magnitude of the terms of
    f, so the test is invariant under scaling of the matrix and never asks
    for |f| below the rounding level of its own evaluation.

    With ``pole_scaling`` the update is applied to ``tau * f(tau)`` instead of
    f. Both share their zero in the bracket, but the scaled function is
    smooth at the origin pole, so roots hugging that pole converge in a step
    or two instead of creeping in by bisection.
    """
    method = method or cfg.root_method
    scaled = cfg.pole_scaling if pole_scaling is None else pole_scaling
    st = _static(sys)
    st["res_tol"] = np.full((sys.shape[0], 1), max(cfg.residual_eps, _FLOOR))
    full = {"L": br.lower.copy(), "U": br.upper_b.copy(), "h": br.h.copy(),
            "conv": br.converged.copy(), "it": br.halley_iters.copy(), "res": br.residual.copy(),
            "step": np.full(br.h.shape, np.inf), "flr": np.zeros(br.h.shape)}
    st["origin"] = br.origin
    running = ~full["conv"]
    # exact hits from sectioning already have their residual at 0

    work = _Work(full, st, running, cfg.shrink_threshold)
    while work.rows.size:
        loc, s, run = work.loc, work.st, work.run
        over = run & (loc["it"] > cfg.max_halley_iters)
        if over.any():
            raise MaxItersExceeded(f"{method} refinement exceeded {cfg.max_halley_iters} iterations",
                                   batch_index=work.problem(over), stage="secular")
        h = loc["h"]
        dorig = np.take_along_axis(s["d"], s["origin"], axis=1)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            s0, s1, s2, sa = _eval_sums(s["d_eval"], s["z2"], dorig, h, need=2 if method == "halley" else 1)
            f = 1.0 + s["rho"] * s0
            f1 = s["rho"] * s1
            L, U = loc["L"], loc["U"]
            pos = run & (f > 0)
            neg = run & (f < 0)
            U[pos] = h[pos]
            L[neg] = h[neg]
            loc["res"] = np.where(run, np.abs(f), loc["res"])
            fscale = 1.0 + s["rho"] * sa
            loc["flr"] = np.where(run, _FLOOR * fscale, loc["flr"])
            done = run & ((np.abs(f) <= s["res_tol"] * fscale)
                          | (np.abs(loc["step"]) <= cfg.rel_change_eps * np.abs(h))
                          | ~(U - L > 2 * _EPS * np.maximum(np.abs(L), np.abs(U))))
            loc["conv"] |= done
            run &= ~done
            f2 = 2.0 * s["rho"] * s2 if method == "halley" else None
            if scaled:
                # g = tau * f has no pole at the origin; the tau sign cancels in both updates
                f, f1, f2 = h * f, f + h * f1, (None if f2 is None else 2.0 * f1 + h * f2)
            if method == "halley":
                hn = h - 2.0 * f * f1 / (2.0 * f1 * f1 - f * f2)
            else:
                hn = h - f / f1
            bad = ~((hn > L) & (hn < U))
            hn = np.where(bad, 0.5 * (L + U), hn)
        loc["step"] = np.where(run, hn - h, loc["step"])
        loc["h"] = np.where(run, hn, h)
        loc["it"] += run
        if not work.maybe_shrink():
            break
    work.scatter()
    return RootBracket(full["L"], full["U"], full["h"], br.origin, br.gap, full["conv"],
                       br.section_iters, full["it"], full["res"], full["flr"])


def find_roots(sys: SecularSystem, cfg: SolverConfig = SolverConfig(), method: Optional[str] = None,
               pole_scaling: Optional[bool] = None) -> SecularRoots:
    """Hybrid-section, Halley refinement, then the optional extended-precision polish."""
    br = init_brackets(sys)
    br = hybrid_section(sys, br, cfg)
    br = halley_refine(sys, br, cfg, method=method, pole_scaling=pole_scaling)
    if cfg.extended_polish:
        h, h_lo, res = polish(sys, br, cfg.polish_eps * sys.residual_scale())
    else:
        h, h_lo, res = br.h, np.zeros_like(br.h), br.residual
    dorig = np.take_along_axis(sys.d, br.origin, axis=1)
    lam = np.where(sys.active, dorig + h, sys.d)
    tau = np.where(sys.active, h, 0.0)
    origin = np.where(sys.active, br.origin, np.arange(sys.shape[1]))
    res = np.where(sys.active, res, 0.0)
    return SecularRoots(lam, tau, origin, res, br.section_iters, br.halley_iters, np.where(sys.active, h_lo, 0.0))


_WIDE = np.longdouble if np.finfo(np.longdouble).eps < _EPS else None


def polish(sys: SecularSystem, br: RootBracket, tol, steps: int = 2):
    """Extended-precision Newton steps for roots stuck at the float64 floor.

    Close to a pole the computed f is dominated by rounding of order
    ``eps * rho * z_i^2 / tau`` and the iteration can stop a few ulps away
    from the best double, with a true ``|f|`` above the requested tolerance.
    Those roots get ``steps`` Newton corrections in long double, kept inside
    the bracket; the result is split into ``tau`` (nearest double) and a
    low-order ``tau_lo``. Returns ``(tau, tau_lo, residual)``; a no-op when
    long double is no wider than float64.
    """
    tau_out = br.h.copy()
    lo_out = np.zeros_like(br.h)
    res_out = br.residual.copy()
    floor = br.floor if br.floor is not None else 0.0
    stuck = sys.active & (np.maximum(br.residual, floor) > np.asarray(tol).reshape(-1, 1))
    if _WIDE is None or not stuck.any():
        return tau_out, lo_out, res_out
    p, i = np.nonzero(stuck)
    W = _WIDE
    d = sys.d[p].astype(W)
    z2 = np.where(sys.active[p], sys.z[p], 0.0).astype(W) ** 2
    rho = sys.rho[p].astype(W)
    dor = d[np.arange(p.size), br.origin[p, i]]
    # the float64 bracket may sit on the wrong side of the root when f is mostly
    # rounding noise, so steps are only confined to the interlacing interval
    own = br.origin[p, i] == i
    gap = br.gap[p, i]
    L = np.where(own, 0.0, -gap).astype(W)
    U = np.where(own, gap, 0.0).astype(W)

    def sums(t):
        delta = (d - dor[:, None]) - t[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(z2 == 0, W(0), z2 / delta)
            f = 1 + rho * terms.sum(axis=1)
            f1 = rho * (terms / delta).sum(axis=1)
        return f, f1

    t = br.h[p, i].astype(W)
    f, f1 = sums(t)
    f0 = np.abs(f)
    for _ in range(steps):
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = t - f / f1
        tn = np.where((f1 > 0) & (tn > L) & (tn < U), tn, t)
        t = tn
        f, f1 = sums(t)
    better = np.abs(f) < f0
    hi = t.astype(np.float64)
    tau_out[p, i] = np.where(better, hi, br.h[p, i])
    lo_out[p, i] = np.where(better, (t - hi.astype(W)).astype(np.float64), 0.0)
    res_out[p, i] = np.where(better, np.abs(f), f0).astype(np.float64)
    return tau_out, lo_out, res_out


def solve(sys: SecularSystem, cfg: SolverConfig = SolverConfig(), method: Optional[str] = None,
          pole_scaling: Optional[bool] = None):
    """Root finding; returns ``(system, roots)``.

    A root closer to its pole than one ulp is still carried exactly by
    ``(origin, tau)``; only its rounded absolute value is moved to the nearest
    float strictly inside the interlacing interval.
    """
    roots = find_roots(sys, cfg, method, pole_scaling)
    act = sys.active
    up = _upper_slots(act)
    rows = np.arange(sys.shape[0])[:, None]
    lo = np.nextafter(sys.d, np.inf)
    hi = np.where(up >= 0, np.nextafter(sys.d[rows, np.maximum(up, 0)], -np.inf), sys.fro_bound[:, None])
    roots.lam = np.where(act, np.minimum(np.maximum(roots.lam, lo), hi), roots.lam)
    return sys, roots


def check_roots_interlace(sys: SecularSystem, roots: SecularRoots) -> np.ndarray:
    """Per-problem boolean: strict interlacing of active roots and the top bound."""
    act = sys.active
    up = _upper_slots(act)
    P, n = sys.shape
    rows = np.arange(P)[:, None]
    upv = np.where(up >= 0, sys.d[rows, np.maximum(up, 0)], np.inf)
    ok = (roots.lam > sys.d) & (roots.lam < upv)
    top_ok = roots.lam <= sys.fro_bound[:, None]
    return np.all(~act | (ok & top_ok), axis=1)
