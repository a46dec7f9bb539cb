"""Reference eigensolver (cyclic Jacobi) and checkers used by the tests.

Jacobi rotations share nothing with the tridiagonal pipeline, which makes
them a useful independent oracle. Speed is not a goal here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import NoConvergence, as_array


def _round_robin(n: int):
    """Rounds of disjoint index pairs covering every pair exactly once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _off(A):
    n = A.shape[-1]
    mask = ~np.eye(n, dtype=bool)
    return np.sqrt(np.sum(np.where(mask, A, 0.0) ** 2, axis=(-2, -1)))


def batched_jacobi_eigh(m, tol: float = 1e-14, max_sweeps: int = 50):
    """Cyclic Jacobi on every matrix of a batch, sweeping pairs in round-robin order.

    Stops when ``off(A) <= tol * ||A||_F`` for every element. Returns
    ``(w, V)`` with ``w`` descending.
    """
    A = np.array(as_array(m), dtype=np.float64, copy=True)
    A = 0.5 * (A + A.transpose(0, 2, 1))
    B, n, _ = A.shape
    V = np.broadcast_to(np.eye(n), (B, n, n)).copy()
    fro = np.linalg.norm(A, axis=(1, 2))
    rounds = _round_robin(n) if n > 1 else []
    label = np.arange(n)  # original index held at each position
    sweeps = 0
    while True:
        done = _off(A) <= tol * fro
        if done.all():
            break
        if sweeps >= max_sweeps:
            b = int(np.flatnonzero(~done)[0])
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps", batch_index=b, stage="oracle")
        sweeps += 1
        for P, Q in rounds:
            # move the pairs of this round to the front so the updates act on slices
            pos = np.argsort(label)
            pp, qq = pos[P], pos[Q]
            rest = np.setdiff1d(np.arange(n), np.concatenate([pp, qq]), assume_unique=True)
            perm = np.concatenate([pp, qq, rest])
            A = A[:, perm][:, :, perm]
            V = V[:, :, perm]
            label = label[perm]
            h = len(P)
            p_, q_ = slice(0, h), slice(h, 2 * h)
            idx = np.arange(h)
            app = A[:, idx, idx]
            aqq = A[:, h + idx, h + idx]
            apq = A[:, idx, h + idx]
            nz = apq != 0.0
            safe = np.where(nz, apq, 1.0)
            with np.errstate(over="ignore", divide="ignore"):
                theta = (aqq - app) / (2.0 * safe)
            big = np.abs(theta) > 1e150
            th = np.where(big, 1.0, theta)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(th) + np.sqrt(th * th + 1.0))
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
            t = np.where(nz, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            cc, ss = c[:, None, :], s[:, None, :]
            Ap, Aq = A[:, :, p_].copy(), A[:, :, q_].copy()
            A[:, :, p_] = cc * Ap - ss * Aq
            A[:, :, q_] = ss * Ap + cc * Aq
            cr, sr = c[:, :, None], s[:, :, None]
            Ap, Aq = A[:, p_, :].copy(), A[:, q_, :].copy()
            A[:, p_, :] = cr * Ap - sr * Aq
            A[:, q_, :] = sr * Ap + cr * Aq
            A[:, idx, idx] = app - t * apq
            A[:, h + idx, h + idx] = aqq + t * apq
            A[:, idx, h + idx] = 0.0
            A[:, h + idx, idx] = 0.0
            Vp, Vq = V[:, :, p_].copy(), V[:, :, q_].copy()
            V[:, :, p_] = cc * Vp - ss * Vq
            V[:, :, q_] = ss * Vp + cc * Vq
    inv = np.argsort(label)
    A = A[:, inv][:, :, inv]
    V = V[:, :, inv]
    w = np.diagonal(A, axis1=1, axis2=2).copy()
    order = np.argsort(-w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return w, V


def jacobi_eigh(a, tol: float = 1e-14, max_sweeps: int = 50):
    """Single symmetric matrix: ``(w descending, V)``."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("jacobi_eigh expects one square matrix")
    w, V = batched_jacobi_eigh(a[None], tol, max_sweeps)
    return w[0], V[0]


@dataclass
class InterlacingReport:
    ok: np.ndarray  # (P,) per problem
    violations: int

    def __bool__(self) -> bool:
        return bool(self.ok.all())


def check_interlacing(d, lam, fro_bound, active=None) -> InterlacingReport:
    """Check ``d_i < lam_i < d_{i-1}`` and ``d_1 < lam_1 <= fro_bound``.

    ``d`` and ``lam`` are descending, shape (n,) or (P, n). When ``active``
    is given only those slots take part (a deflated pole and its eigenvalue
    coincide by construction). Never raises.
    """
    try:
        d = np.atleast_2d(np.asarray(d, dtype=np.float64))
        lam = np.atleast_2d(np.asarray(lam, dtype=np.float64))
        fro = np.broadcast_to(np.asarray(fro_bound, dtype=np.float64), (d.shape[0],))
        act = np.ones(d.shape, dtype=bool) if active is None else np.atleast_2d(np.asarray(active, dtype=bool))
        if d.shape != lam.shape or act.shape != d.shape:
            return InterlacingReport(np.zeros(max(d.shape[0], lam.shape[0]), dtype=bool), 1)
    except (ValueError, TypeError):
        return InterlacingReport(np.zeros(1, dtype=bool), 1)
    ok = np.ones(d.shape[0], dtype=bool)
    bad = 0
    for p in range(d.shape[0]):
        dp, lp = d[p, act[p]], lam[p, act[p]]
        if dp.size == 0:
            continue
        n_bad = int(np.sum(~(lp > dp)))
        n_bad += int(np.sum(~(lp[1:] < dp[:-1])))
        n_bad += int(not lp[0] <= fro[p])
        if n_bad:
            ok[p] = False
            bad += n_bad
    return InterlacingReport(ok, bad)


def principal_angles(U, W) -> np.ndarray:
    """Principal angles between the column spans of U and W (ascending).

    Computed from sines so that tiny angles are resolved accurately.
    """
    Qu, _ = np.linalg.qr(np.asarray(U, dtype=np.float64))
    Qw, _ = np.linalg.qr(np.asarray(W, dtype=np.float64))
    R = Qw - Qu @ (Qu.T @ Qw)
    sines = np.linalg.svd(R, compute_uv=False)
    return np.sort(np.arcsin(np.clip(sines, 0.0, 1.0)))


def eigvec_angles(V1, V2) -> np.ndarray:
    """Angle between matching columns, ignoring sign; shape (..., n)."""
    dots = np.abs(np.sum(np.asarray(V1) * np.asarray(V2), axis=-2))
    n1 = np.linalg.norm(V1, axis=-2) * np.linalg.norm(V2, axis=-2)
    cos = np.clip(dots / n1, 0.0, 1.0)
    return np.arccos(cos)
