"""Batched Householder reduction of symmetric matrices to tridiagonal form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MatrixBatch, ShapeMismatch, TridiagonalBatch, as_array


@dataclass
class HouseholderSweep:
    """Reflectors of one reduction, ``vectors[:, k]`` acting on rows k+1.. .

    ``skipped`` marks column steps where the tail was already zero and the
    reflector is the identity.
    """

    vectors: np.ndarray  # (B, C-2, C), zero-padded in front
    betas: np.ndarray  # (B, C-2), 2 for a proper unit reflector, 0 when skipped
    skipped: np.ndarray  # (B, C-2) bool


def tridiagonalize(m, accumulate: bool = True, return_sweep: bool = False):
    """Reduce every matrix of the batch with one column step at a time.

    Each column step processes all B matrices before advancing. With
    ``accumulate`` the product Q of the reflectors is formed eagerly so that
    ``Q^T A Q`` is the returned tridiagonal matrix.
    """
    A = np.array(as_array(m), dtype=np.float64, copy=True)
    B, C, _ = A.shape
    Q = np.broadcast_to(np.eye(C), (B, C, C)).copy() if accumulate else None
    nsteps = max(C - 2, 0)
    vecs = np.zeros((B, nsteps, C))
    betas = np.zeros((B, nsteps))
    skipped = np.ones((B, nsteps), dtype=bool)

    for k in range(nsteps):
        x = A[:, k + 1:, k]
        alpha = np.linalg.norm(x, axis=1)
        x0 = x[:, 0]
        tail = np.linalg.norm(x[:, 1:], axis=1)
        active = tail > 0.0
        if not active.any():
            continue
        # alpha = -sign(x0) * ||x|| avoids cancellation in v0 = x0 - alpha
        sgn = np.where(x0 >= 0.0, 1.0, -1.0)
        v = x.copy()
        v[:, 0] = x0 + sgn * alpha
        vn = np.linalg.norm(v, axis=1)
        vn = np.where(active, vn, 1.0)
        v = np.where(active[:, None], v / vn[:, None], 0.0)

        sub = A[:, k + 1:, k + 1:]
        p = (sub @ v[:, :, None])[:, :, 0]
        w = p - np.sum(v * p, axis=1)[:, None] * v
        sub -= 2.0 * (np.stack([v, w], axis=2) @ np.stack([w, v], axis=1))
        newcol = np.where(active, -sgn * alpha, x0)
        A[:, k + 1:, k] = 0.0
        A[:, k, k + 1:] = 0.0
        A[:, k + 1, k] = newcol
        A[:, k, k + 1] = newcol
        if Q is not None:
            Qs = Q[:, :, k + 1:]
            Qs -= 2.0 * (Qs @ v[:, :, None]) * v[:, None, :]
        vecs[:, k, k + 1:] = v
        betas[:, k] = np.where(active, 2.0, 0.0)
        skipped[:, k] = ~active

    idx = np.arange(C)
    diag = A[:, idx, idx]
    off = A[:, idx[:-1], idx[1:]] if C > 1 else np.zeros((B, 0))
    t = TridiagonalBatch(diag, off, MatrixBatch(Q) if Q is not None else None)
    if return_sweep:
        return t, HouseholderSweep(vecs, betas, skipped)
    return t


def apply_accumulated(q_accum, v) -> np.ndarray:
    """Back-transform eigenvectors of the tridiagonal form: returns Q @ V per element."""
    Q = as_array(q_accum)
    V = np.asarray(v.data if isinstance(v, MatrixBatch) else v, dtype=np.float64)
    if V.ndim == 2:
        V = V[None]
    if V.shape[0] != Q.shape[0] or V.shape[1] != Q.shape[2]:
        raise ShapeMismatch(f"cannot apply Q of shape {Q.shape} to V of shape {V.shape}")
    return Q @ V
