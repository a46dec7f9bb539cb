"""Eigenvectors of D + rho z z^T from recomputed weights, and their assembly."""

from __future__ import annotations

import numpy as np

from .core import InterlacingViolation, ShapeMismatch
from .secular import SecularRoots, SecularSystem


def _root_minus_pole(sys: SecularSystem, roots: SecularRoots) -> np.ndarray:
    """M[p, i, j] = lam_i - d_j, formed as (d_origin(i) - d_j) + tau_i."""
    dorig = np.take_along_axis(sys.d, roots.origin, axis=1)
    return (dorig[:, :, None] - sys.d[:, None, :]) + roots.tau[:, :, None]


def recompute_z(sys: SecularSystem, roots: SecularRoots) -> np.ndarray:
    """Weights for which the computed roots are exact eigenvalues.

    ``zhat_i^2 = (lam_i - d_i) / rho * prod_{j != i} (lam_j - d_i) / (d_j - d_i)``
    over active slots. Each factor is positive when the roots interlace, so
    no raw product of differences is ever formed. Signs follow the original z.
    """
    act = sys.active
    P, n = sys.shape
    M = _root_minus_pole(sys, roots)  # [p, j, i] = lam_j - d_i
    G = sys.d[:, :, None] - sys.d[:, None, :]  # [p, j, i] = d_j - d_i
    eye = np.eye(n, dtype=bool)
    rho = np.where(sys.rho > 0, sys.rho, 1.0)[:, None, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        R = np.where(eye, M / rho, M / np.where(eye, 1.0, G))
    pair = act[:, :, None] & act[:, None, :]
    R = np.where(pair, R, 1.0)
    if not (R > 0).all():
        p = int(np.flatnonzero(~(R > 0).all(axis=(1, 2)))[0])
        raise InterlacingViolation("roots do not interlace the poles", batch_index=p, stage="eigvec")
    zhat = np.sqrt(np.prod(R, axis=1))
    sign = np.where(sys.z < 0, -1.0, 1.0)
    return np.where(act, sign * zhat, 0.0)


def eigenvectors_from_z(sys: SecularSystem, roots: SecularRoots, zhat=None) -> np.ndarray:
    """Q_sec[:, :, i] = normalize((lam_i I - D)^{-1} w), deflated slots give unit columns.

    ``w`` is ``zhat`` when given, else the stored z (the unstable variant).
    """
    act = sys.active
    P, n = sys.shape
    w = np.where(act, sys.z, 0.0) if zhat is None else zhat
    M = _root_minus_pole(sys, roots)  # [p, i, j] = lam_i - d_j
    pair = act[:, :, None] & act[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        Q = w[:, :, None] / M.transpose(0, 2, 1)
    Q = np.where(pair, Q, 0.0)
    norms = np.linalg.norm(Q, axis=1, keepdims=True)
    Q = np.where(act[:, None, :], Q / np.where(norms > 0, norms, 1.0), 0.0)
    idx = np.arange(n)
    Q[:, idx, idx] += ~act
    return Q


def merge_vectors(q1, q2, q_sec, perm=None, rotations=None) -> np.ndarray:
    """blkdiag(Q1, Q2), columns permuted into pole order and rotated, times Q_sec."""
    q1 = np.asarray(q1)
    q2 = np.asarray(q2)
    P, n1, _ = q1.shape
    n2 = q2.shape[1]
    n = n1 + n2
    if q2.shape[0] != P or q_sec.shape != (P, n, n):
        raise ShapeMismatch("merge_vectors: inconsistent block shapes")
    W = np.zeros((P, n, n))
    W[:, :n1, :n1] = q1
    W[:, n1:, n1:] = q2
    if perm is not None:
        W = np.take_along_axis(W, perm[:, None, :], axis=2)
    if rotations is not None:
        rotations.apply(W)
    return W @ q_sec
