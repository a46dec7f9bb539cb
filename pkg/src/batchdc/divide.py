"""Rank-one tearing of tridiagonal batches and the recursion plan built from it."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import SolverConfig, SplitOutOfRange, TridiagonalBatch


def tear_once(t: TridiagonalBatch, split: int):
    """Split T into diag(T1, T2) + |beta| v v^T at off-diagonal ``split - 1``.

    ``v`` has ``theta = sign(beta)`` (with sign(0) = +1) in row ``split - 1``
    and 1 in row ``split``, so ``|beta| * theta`` restores the cross term.
    """
    C = t.dim
    if not 1 <= split <= C - 1:
        raise SplitOutOfRange(f"split {split} outside [1, {C - 1}]")
    beta = t.offdiag[:, split - 1].copy()
    theta = np.where(beta >= 0.0, 1.0, -1.0)
    rho = np.abs(beta)
    d1 = t.diag[:, :split].copy()
    d2 = t.diag[:, split:].copy()
    d1[:, -1] -= rho
    d2[:, 0] -= rho
    left = TridiagonalBatch(d1, t.offdiag[:, :split - 1])
    right = TridiagonalBatch(d2, t.offdiag[:, split:])
    return left, right, beta, theta


def reassemble(left: TridiagonalBatch, right: TridiagonalBatch, beta) -> np.ndarray:
    """Dense diag(T1, T2) + |beta| v v^T, the inverse of :func:`tear_once`."""
    beta = np.asarray(beta, dtype=np.float64)
    n1, n2 = left.dim, right.dim
    T = np.zeros((left.batch_size, n1 + n2, n1 + n2))
    T[:, :n1, :n1] = left.dense()
    T[:, n1:, n1:] = right.dense()
    rho = np.abs(beta)
    theta = np.where(beta >= 0.0, 1.0, -1.0)
    T[:, n1 - 1, n1 - 1] += rho
    T[:, n1, n1] += rho
    T[:, n1 - 1, n1] += rho * theta
    T[:, n1, n1 - 1] += rho * theta
    return T


@dataclass
class TearNode:
    """One block of the recursion; internal nodes carry the torn coupling."""

    offset: int
    size: int
    level: int
    diag: np.ndarray  # (B, size) diagonal after ancestor tears only
    split_index: Optional[int] = None  # local split position, None for leaves
    beta: Optional[np.ndarray] = None
    theta: Optional[np.ndarray] = None
    children: List["TearNode"] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class TearPlan:
    root: TearNode
    offdiag: np.ndarray  # (B, C-1), shared by all nodes
    nodes: List[TearNode]
    leaves: List[TearNode]

    @property
    def depth(self) -> int:
        return max(n.level for n in self.leaves)

    def leaf_batches(self):
        """Leaves grouped by dimension: {dim: (leaf list, diag (B*G, dim), offdiag (B*G, dim-1))}.

        Leaves of one size are stacked leaf-major, so row ``g * B + b`` is leaf
        ``g`` of batch element ``b``.
        """
        groups = {}
        for leaf in self.leaves:
            groups.setdefault(leaf.size, []).append(leaf)
        out = {}
        for dim, group in sorted(groups.items()):
            d = np.concatenate([lf.diag for lf in group], axis=0)
            e = np.concatenate([self.offdiag[:, lf.offset:lf.offset + dim - 1] for lf in group], axis=0)
            out[dim] = (group, d, e)
        return out

    def block_fro(self, node: TearNode) -> np.ndarray:
        """Frobenius norm of the node's block as it stands before its own tear."""
        e = self.offdiag[:, node.offset:node.offset + node.size - 1]
        return np.sqrt(np.sum(node.diag ** 2, axis=1) + 2.0 * np.sum(e ** 2, axis=1))


def build_plan(t: TridiagonalBatch, cfg: SolverConfig = SolverConfig()) -> TearPlan:
    """Balanced binary tearing until blocks are no larger than ``cfg.crossover_dim``.

    Splits fall at ceil(size / 2). Odd sizes can leave 1x1 leaves, which the
    base-case layer solves trivially.
    """
    offdiag = np.array(t.offdiag)
    root = TearNode(0, t.dim, 0, np.array(t.diag))
    nodes, leaves = [], []
    stack = [root]
    while stack:
        node = stack.pop()
        nodes.append(node)
        if node.size <= cfg.crossover_dim or node.size < 2:
            leaves.append(node)
            continue
        s = (node.size + 1) // 2
        beta = offdiag[:, node.offset + s - 1].copy()
        rho = np.abs(beta)
        d1 = node.diag[:, :s].copy()
        d2 = node.diag[:, s:].copy()
        d1[:, -1] -= rho
        d2[:, 0] -= rho
        node.split_index = s
        node.beta = beta
        node.theta = np.where(beta >= 0.0, 1.0, -1.0)
        node.children = [TearNode(node.offset, s, node.level + 1, d1),
                         TearNode(node.offset + s, node.size - s, node.level + 1, d2)]
        stack.extend(reversed(node.children))
    leaves.sort(key=lambda n: n.offset)
    return TearPlan(root, offdiag, nodes, leaves)
