"""Leaf eigensolvers: closed-form 2x2 rotation and batched shifted QR."""

from __future__ import annotations

import math

import numpy as np

from .core import NoConvergence, SolverConfig, SpectralFactorization, TridiagonalBatch

_TINY = np.finfo(np.float64).tiny


def eig_2x2(p, q, r):
    """Closed form for [[p, q], [q, r]], vectorized. Returns (w (.., 2), V (.., 2, 2))."""
    p, q, r = (np.asarray(x, dtype=np.float64) for x in (p, q, r))
    mean = 0.5 * (p + r)
    rad = np.hypot(0.5 * (p - r), q)
    w = np.stack([mean + rad, mean - rad], axis=-1)
    phi = 0.5 * np.arctan2(2.0 * q, p - r)
    c, s = np.cos(phi), np.sin(phi)
    V = np.stack([np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)], axis=-2)
    return w, V


def solve_2x2(leafs: TridiagonalBatch) -> SpectralFactorization:
    if leafs.dim != 2:
        raise ValueError("solve_2x2 needs 2x2 blocks")
    w, V = eig_2x2(leafs.diag[:, 0], leafs.offdiag[:, 0], leafs.diag[:, 1])
    return SpectralFactorization(w, V)


def _wilkinson_shift(a, b, c):
    # eigenvalue of [[a, b], [b, c]] closer to c
    delta = 0.5 * (a - c)
    sgn = np.where(delta >= 0.0, 1.0, -1.0)
    denom = delta + sgn * np.hypot(delta, b)
    safe = np.where(denom != 0.0, denom, 1.0)
    return np.where(denom != 0.0, c - b * b / safe, c)


def qr_tridiagonal(d, e, vectors: bool = True, offdiag_tol: float = 1e-15, max_sweeps=None):
    """Implicit Wilkinson-shift QR on a batch of symmetric tridiagonals.

    All elements sweep together; an element whose off-diagonal has fully
    deflated is masked out (its rotations become the identity) and is never
    touched again. Returns ``(w, V, sweeps)`` with ``w`` descending and
    ``V`` None when ``vectors`` is false.
    """
    d = np.array(d, dtype=np.float64, copy=True)
    B, n = d.shape
    if B == 1 and n > 1:
        return _qr_single(d[0], np.asarray(e, dtype=np.float64).reshape(-1), vectors, offdiag_tol, max_sweeps)
    e = np.array(e, dtype=np.float64, copy=True).reshape(B, max(n - 1, 0))
    V = np.broadcast_to(np.eye(n), (B, n, n)).copy() if vectors else None
    sweeps = np.zeros(B, dtype=np.int64)
    if max_sweeps is None:
        max_sweeps = 30 * max(n, 1)
    jidx = np.arange(n - 1)
    rows = np.arange(B)

    while n > 1:
        small = np.abs(e) <= offdiag_tol * (np.abs(d[:, :-1]) + np.abs(d[:, 1:])) + _TINY
        e[small] = 0.0
        nz = e != 0.0
        active = nz.any(axis=1)
        if not active.any():
            break
        if (sweeps[active] >= max_sweeps).any():
            b = int(np.flatnonzero(active & (sweeps >= max_sweeps))[0])
            raise NoConvergence(f"QR did not converge in {max_sweeps} sweeps", batch_index=b, stage="basecase")
        last = np.where(nz, jidx, -1).max(axis=1)  # last nonzero off-diagonal
        lo = np.where(~nz & (jidx < last[:, None]), jidx, -1).max(axis=1) + 1
        hi = last + 1
        a_idx = np.maximum(hi - 1, 0)
        mu = _wilkinson_shift(d[rows, a_idx], e[rows, np.maximum(last, 0)], d[rows, np.minimum(hi, n - 1)])
        sweeps += active

        kmin = int(lo[active].min())
        kmax = int(hi[active].max())
        x = np.zeros(B)
        y = np.zeros(B)
        for k in range(kmin, kmax):
            inwin = active & (lo <= k) & (k < hi)
            start = inwin & (lo == k)
            x = np.where(start, d[:, k] - mu, x)
            y = np.where(start, e[:, k], y)
            r = np.hypot(x, y)
            ok = inwin & (r > 0.0)
            rs = np.where(ok, r, 1.0)
            c = np.where(ok, x / rs, 1.0)
            s = np.where(ok, y / rs, 0.0)
            chase = ok & ~start
            if k > 0:
                e[:, k - 1] = np.where(chase, r, e[:, k - 1])
            dk, dk1, ek = d[:, k].copy(), d[:, k + 1].copy(), e[:, k].copy()
            cs = c * s
            d[:, k] = c * c * dk + 2.0 * cs * ek + s * s * dk1
            d[:, k + 1] = s * s * dk + c * c * dk1 - 2.0 * cs * ek
            e[:, k] = cs * (dk1 - dk) + (c * c - s * s) * ek
            if k + 1 < n - 1:
                y = s * e[:, k + 1]
                e[:, k + 1] = c * e[:, k + 1]
            x = e[:, k]
            if V is not None:
                vk = V[:, :, k].copy()
                vk1 = V[:, :, k + 1]
                V[:, :, k] = c[:, None] * vk + s[:, None] * vk1
                V[:, :, k + 1] = c[:, None] * vk1 - s[:, None] * vk

    order = np.argsort(-d, axis=1, kind="stable")
    w = np.take_along_axis(d, order, axis=1)
    if V is not None:
        V = np.take_along_axis(V, order[:, None, :], axis=2)
    return w, V, sweeps


def _qr_single(d, e, vectors, offdiag_tol, max_sweeps):
    # same iteration as the batched loop, on python floats for one matrix
    n = d.shape[0]
    d = [float(x) for x in d]
    e = [float(x) for x in e]
    VT = np.eye(n) if vectors else None  # transposed so rotated columns are contiguous rows
    if max_sweeps is None:
        max_sweeps = 30 * n
    sweeps = 0
    tiny = float(_TINY)
    while True:
        for j in range(n - 1):
            if abs(e[j]) <= offdiag_tol * (abs(d[j]) + abs(d[j + 1])) + tiny:
                e[j] = 0.0
        last = n - 2
        while last >= 0 and e[last] == 0.0:
            last -= 1
        if last < 0:
            break
        if sweeps >= max_sweeps:
            raise NoConvergence(f"QR did not converge in {max_sweeps} sweeps", batch_index=0, stage="basecase")
        lo = last
        while lo > 0 and e[lo - 1] != 0.0:
            lo -= 1
        hi = last + 1
        a, b, c0 = d[hi - 1], e[last], d[hi]
        delta = 0.5 * (a - c0)
        denom = delta + math.copysign(math.hypot(delta, b), 1.0 if delta >= 0.0 else -1.0)
        mu = c0 - b * b / denom if denom != 0.0 else c0
        sweeps += 1

        x, y = d[lo] - mu, e[lo]
        for k in range(lo, hi):
            r = math.hypot(x, y)
            if r > 0.0:
                c, s = x / r, y / r
            else:
                c, s = 1.0, 0.0
            if k > lo and r > 0.0:
                e[k - 1] = r
            dk, dk1, ek = d[k], d[k + 1], e[k]
            cs = c * s
            d[k] = c * c * dk + 2.0 * cs * ek + s * s * dk1
            d[k + 1] = s * s * dk + c * c * dk1 - 2.0 * cs * ek
            e[k] = cs * (dk1 - dk) + (c * c - s * s) * ek
            if k + 1 < n - 1:
                y = s * e[k + 1]
                e[k + 1] = c * e[k + 1]
            x = e[k]
            if VT is not None and s != 0.0:
                pk, pk1 = VT[k], VT[k + 1]
                tmp = c * pk + s * pk1
                pk1 *= c
                pk1 -= s * pk
                pk[:] = tmp

    d = np.array(d)
    order = np.argsort(-d, kind="stable")
    w = d[order][None]
    V = None if VT is None else VT[order].T[None].copy()
    return w, V, np.array([sweeps])


def solve_qr(leafs: TridiagonalBatch, cfg: SolverConfig = SolverConfig.hybrid()) -> SpectralFactorization:
    w, V, _ = qr_tridiagonal(leafs.diag, leafs.offdiag, vectors=True,
                             offdiag_tol=cfg.qr_offdiag_tol, max_sweeps=cfg.qr_max_sweeps)
    return SpectralFactorization(w, V)


def solve_leaves(d, e, cfg: SolverConfig, vectors: bool = True):
    """Dispatch a same-size batch of leaf tridiagonals to the configured base solver.

    1x1 leaves (odd splits) are trivial and 2x2 leaves always use the closed
    form when the base solver is ``givens2x2``.
    """
    d = np.asarray(d, dtype=np.float64)
    B, n = d.shape
    if n == 1:
        return d.copy(), np.ones((B, 1, 1))
    if n == 2 and cfg.base_solver == "givens2x2":
        return eig_2x2(d[:, 0], np.asarray(e)[:, 0], d[:, 1])
    w, V, _ = qr_tridiagonal(d, e, vectors=vectors, offdiag_tol=cfg.qr_offdiag_tol, max_sweeps=cfg.qr_max_sweeps)
    return w, V
