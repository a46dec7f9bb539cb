"""Public API: tridiagonalize, tear, solve leaves, merge level by level, back-transform."""

from __future__ import annotations

from collections import defaultdict
from typing import Callable, Optional

import numpy as np

from . import secular
from .basecase import qr_tridiagonal, solve_leaves
from .core import EigError, SolverConfig, SpectralFactorization, TridiagonalBatch, validate_symmetric
from .divide import build_plan
from .eigvec import eigenvectors_from_z, merge_vectors, recompute_z
from .tridiag import tridiagonalize

Monitor = Callable[[secular.SecularSystem, secular.SecularRoots], None]


class _Part:
    __slots__ = ("w", "V", "rows")

    def __init__(self, w, V, rows):
        self.w = w  # (B, n)
        self.V = V  # (B, n, n) or None
        self.rows = rows  # (B, 2, n): first and last eigenvector rows


def _boundary_rows(V):
    return np.stack([V[:, 0, :], V[:, -1, :]], axis=1)


def conquer_tridiagonal(t: TridiagonalBatch, cfg: SolverConfig = SolverConfig(), vectors: bool = True,
                        monitor: Optional[Monitor] = None):
    """Divide-and-conquer on tridiagonal input; returns (w (B, C) descending, V or None).

    Every merge of one tree level with equal child sizes is solved as one
    stacked secular system of ``G * B`` problems.
    """
    B, C = t.diag.shape
    plan = build_plan(t, cfg)
    parts = {}
    single = plan.root.is_leaf
    for dim, (group, d, e) in plan.leaf_batches().items():
        w, V = solve_leaves(d, e, cfg, vectors=vectors or not single)
        for g, leaf in enumerate(group):
            sl = slice(g * B, (g + 1) * B)
            Vg = None if V is None else V[sl]
            rows = None if Vg is None else _boundary_rows(Vg)
            parts[id(leaf)] = _Part(w[sl], Vg if vectors else None, rows)

    groups = defaultdict(list)
    for node in plan.nodes:
        if not node.is_leaf:
            groups[(node.level, node.children[0].size, node.children[1].size)].append(node)
    for key in sorted(groups, key=lambda k: (-k[0], k[1], k[2])):
        nodes = groups[key]
        left = [parts.pop(id(nd.children[0])) for nd in nodes]
        right = [parts.pop(id(nd.children[1])) for nd in nodes]
        merged = _merge(left, right, nodes, plan, cfg, vectors, monitor)
        for g, nd in enumerate(nodes):
            sl = slice(g * B, (g + 1) * B)
            parts[id(nd)] = _Part(merged.w[sl], None if merged.V is None else merged.V[sl], merged.rows[sl])
    root = parts[id(plan.root)]
    return root.w, root.V


def _merge(left, right, nodes, plan, cfg, vectors, monitor) -> _Part:
    cat = np.concatenate
    w1 = cat([p.w for p in left])
    w2 = cat([p.w for p in right])
    r1 = cat([p.rows for p in left])
    r2 = cat([p.rows for p in right])
    n1, n2 = w1.shape[1], w2.shape[1]
    beta = cat([nd.beta for nd in nodes])
    theta = cat([nd.theta for nd in nodes])
    fro = cat([plan.block_fro(nd) for nd in nodes])

    sys = secular.assemble_system(w1, r1[:, 1, :], w2, r2[:, 0, :], beta, theta, fro)
    perm = sys.perm
    sys, rots = secular.deflate(sys, cfg.deflation_eps)
    sys, roots = secular.solve(sys, cfg)
    if monitor is not None:
        monitor(sys, roots)
    zhat = recompute_z(sys, roots)
    q_sec = eigenvectors_from_z(sys, roots, zhat)

    P = w1.shape[0]
    wrows = np.zeros((P, 2, n1 + n2))
    wrows[:, 0, :n1] = r1[:, 0, :]
    wrows[:, 1, n1:] = r2[:, 1, :]
    wrows = np.take_along_axis(wrows, perm[:, None, :], axis=2)
    rots.apply(wrows)
    rows = wrows @ q_sec
    V = None
    if vectors:
        V = merge_vectors(cat([p.V for p in left]), cat([p.V for p in right]), q_sec, perm, rots)

    order = np.argsort(-roots.lam, axis=1, kind="stable")
    w = np.take_along_axis(roots.lam, order, axis=1)
    rows = np.take_along_axis(rows, order[:, None, :], axis=2)
    if V is not None:
        V = np.take_along_axis(V, order[:, None, :], axis=2)
    return _Part(w, V, rows)


def canonicalize_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each eigenvector is positive."""
    idx = np.argmax(np.abs(V), axis=1)
    piv = np.take_along_axis(V, idx[:, None, :], axis=1)
    return V * np.where(piv < 0, -1.0, 1.0)


def _run(m, cfg, vectors, monitor):
    A = validate_symmetric(m, cfg.sym_tol).data
    B, C, _ = A.shape
    try:
        t = tridiagonalize(A, accumulate=vectors)
        w, Vt = conquer_tridiagonal(t, cfg, vectors=vectors, monitor=monitor)
    except EigError as err:
        if err.batch_index is not None:
            err.batch_index %= B
        if err.stage is None:
            err.stage = "driver"
        raise
    if not vectors:
        return SpectralFactorization(w)
    V = canonicalize_signs(t.q_accum.data @ Vt)
    return SpectralFactorization(w, V)


def batched_eigh(m, cfg: SolverConfig = SolverConfig(), monitor: Optional[Monitor] = None) -> SpectralFactorization:
    """Eigenvalues (descending) and eigenvectors of a batch of symmetric matrices.

    ``m`` is a MatrixBatch or a (B, C, C) / (C, C) array. ``monitor`` is called
    with every solved secular system and its roots.
    """
    return _run(m, cfg, True, monitor)


def batched_eigvalsh(m, cfg: SolverConfig = SolverConfig(), monitor: Optional[Monitor] = None) -> np.ndarray:
    """Eigenvalues only; merges carry just the first and last eigenvector rows."""
    return _run(m, cfg, False, monitor).eigenvalues


def loop_eigh(m, cfg: SolverConfig = SolverConfig.qr_only()) -> SpectralFactorization:
    """Per-matrix baseline: one Householder reduction and one shifted QR per matrix."""
    A = validate_symmetric(m, cfg.sym_tol).data
    B, C, _ = A.shape
    ws = np.empty((B, C))
    Vs = np.empty((B, C, C))
    for b in range(B):
        t = tridiagonalize(A[b:b + 1])
        w, V, _ = qr_tridiagonal(t.diag, t.offdiag, vectors=True,
                                 offdiag_tol=cfg.qr_offdiag_tol, max_sweeps=cfg.qr_max_sweeps)
        ws[b] = w[0]
        Vs[b] = t.q_accum.data[0] @ V[0]
    return SpectralFactorization(ws, canonicalize_signs(Vs))
