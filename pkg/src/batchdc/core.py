"""Batch containers, result types, solver configuration and the BEIG file format."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

MAGIC = b"BEIG"
VERSION = 1
_HEADER = struct.Struct("<4sIII")

# default tolerances
TAU_SYM = 1e-10
TAU_RECON = 1e-8


def tau_orth(dim: int) -> float:
    return 1e-8 * dim


class EigError(Exception):
    """Base class for every error raised by the package.

    ``batch_index`` and ``stage`` are filled in when known so that a failure
    deep inside the pipeline can be traced back to one input matrix.
    """

    def __init__(self, message: str = "", batch_index: Optional[int] = None, stage: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.batch_index = batch_index
        self.stage = stage

    def __str__(self) -> str:
        parts = [self.message or type(self).__name__]
        if self.batch_index is not None:
            parts.append(f"batch_index={self.batch_index}")
        if self.stage is not None:
            parts.append(f"stage={self.stage}")
        return " | ".join(parts)


class AsymmetricInput(EigError):
    pass


class FormatError(EigError):
    pass


class BadMagic(FormatError):
    pass


class BadVersion(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


class ShapeMismatch(EigError):
    pass


class SplitOutOfRange(EigError):
    pass


class NoConvergence(EigError):
    pass


class MaxItersExceeded(EigError):
    pass


class InterlacingViolation(EigError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True, order="C")
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class MatrixBatch:
    """B square C x C matrices stored contiguously as a (B, C, C) float64 array."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim == 2:
            a = a[None]
        if a.ndim != 3 or a.shape[1] != a.shape[2] or a.shape[0] < 1 or a.shape[1] < 1:
            raise ShapeMismatch(f"expected a (B, C, C) array with B, C >= 1, got shape {np.shape(self.data)}")
        object.__setattr__(self, "data", _frozen(a))

    @property
    def batch_size(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __len__(self) -> int:
        return self.batch_size

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixBatch):
            return NotImplemented
        return self.data.shape == other.data.shape and self.data.tobytes() == other.data.tobytes()

    __hash__ = None


@dataclass(frozen=True)
class TridiagonalBatch:
    """B symmetric tridiagonal matrices as diagonal (B, C) and off-diagonal (B, C-1)."""

    diag: np.ndarray
    offdiag: np.ndarray
    q_accum: Optional[MatrixBatch] = None

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.diag, dtype=np.float64))
        e = np.asarray(self.offdiag, dtype=np.float64).reshape(d.shape[0], -1)
        if e.shape[1] != max(d.shape[1] - 1, 0):
            raise ShapeMismatch(f"offdiag shape {e.shape} does not match diag shape {d.shape}")
        if self.q_accum is not None:
            q = self.q_accum if isinstance(self.q_accum, MatrixBatch) else MatrixBatch(self.q_accum)
            if q.data.shape != (d.shape[0], d.shape[1], d.shape[1]):
                raise ShapeMismatch("q_accum shape does not match the tridiagonal batch")
            object.__setattr__(self, "q_accum", q)
        object.__setattr__(self, "diag", _frozen(d))
        object.__setattr__(self, "offdiag", _frozen(e))

    @property
    def batch_size(self) -> int:
        return self.diag.shape[0]

    @property
    def dim(self) -> int:
        return self.diag.shape[1]

    def dense(self) -> np.ndarray:
        """Assemble the (B, C, C) dense tridiagonal matrices."""
        B, C = self.diag.shape
        T = np.zeros((B, C, C))
        idx = np.arange(C)
        T[:, idx, idx] = self.diag
        if C > 1:
            T[:, idx[:-1], idx[1:]] = self.offdiag
            T[:, idx[1:], idx[:-1]] = self.offdiag
        return T


@dataclass(frozen=True)
class SpectralFactorization:
    """Eigenvalues sorted descending per row; eigenvector columns pair with them."""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.eigenvalues, dtype=np.float64))
        object.__setattr__(self, "eigenvalues", _frozen(w))
        if self.eigenvectors is not None:
            v = np.asarray(self.eigenvectors, dtype=np.float64)
            if v.shape != (w.shape[0], w.shape[1], w.shape[1]):
                raise ShapeMismatch(f"eigenvectors shape {v.shape} does not match eigenvalues {w.shape}")
            object.__setattr__(self, "eigenvectors", _frozen(v))

    @property
    def batch_size(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[1]

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues[:, None, :]) @ V.transpose(0, 2, 1)


BASE_SOLVERS = ("givens2x2", "batched_qr")
ROOT_METHODS = ("halley", "newton")


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the divide-and-conquer solver.

    The defaults are the full divide-and-conquer preset: tear down to 2x2
    blocks, merge with hybrid-section bracketing followed by Halley steps.
    ``bracket_eps`` is relative to each root's pole gap. ``residual_eps`` is
    scaled by ``1 + rho * sum |z_j^2 / (d_j - lam)|`` at the current iterate,
    a scale that does not change when the matrix is multiplied by a constant.
    ``shrink_threshold = 0`` disables batch compaction. Roots whose float64
    residual cannot be certified below ``polish_eps`` get a final long double
    Newton correction unless ``extended_polish`` is off.
    """

    crossover_dim: int = 2
    base_solver: str = "givens2x2"
    section_count: int = 4
    bracket_eps: float = 1e-2
    residual_eps: float = 1e-14
    rel_change_eps: float = 1e-15
    polish_eps: float = 1e-13
    extended_polish: bool = True
    max_section_iters: int = 200
    max_halley_iters: int = 60
    deflation_eps: float = 1e-14
    shrink_threshold: float = 0.25
    root_method: str = "halley"
    pole_scaling: bool = True
    qr_offdiag_tol: float = 1e-15
    qr_max_sweeps: Optional[int] = None  # None -> 30 * C
    sym_tol: float = TAU_SYM

    def __post_init__(self):
        if self.base_solver not in BASE_SOLVERS:
            raise ValueError(f"base_solver must be one of {BASE_SOLVERS}")
        if self.root_method not in ROOT_METHODS:
            raise ValueError(f"root_method must be one of {ROOT_METHODS}")
        if self.crossover_dim < 2:
            raise ValueError("crossover_dim must be >= 2")
        if self.base_solver == "givens2x2" and self.crossover_dim != 2:
            raise ValueError("givens2x2 base solver requires crossover_dim == 2")
        if self.section_count < 2:
            raise ValueError("section_count must be >= 2")
        for name in ("bracket_eps", "residual_eps", "rel_change_eps", "polish_eps", "deflation_eps", "qr_offdiag_tol", "sym_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0.0 <= self.shrink_threshold <= 1.0:
            raise ValueError("shrink_threshold must lie in [0, 1]")
        if self.max_section_iters < 1 or self.max_halley_iters < 1:
            raise ValueError("iteration caps must be positive")

    @classmethod
    def qr_only(cls, **kw) -> "SolverConfig":
        """No tearing at all: batched shifted QR on the full tridiagonal matrix."""
        return cls(crossover_dim=1 << 30, base_solver="batched_qr", **kw)

    @classmethod
    def hybrid(cls, crossover_dim: int = 8, **kw) -> "SolverConfig":
        return cls(crossover_dim=crossover_dim, base_solver="batched_qr", **kw)


def as_array(m) -> np.ndarray:
    """(B, C, C) float64 view of a MatrixBatch or array-like."""
    if isinstance(m, MatrixBatch):
        return m.data
    return MatrixBatch(m).data


def validate_symmetric(m, tau_sym: float = TAU_SYM) -> MatrixBatch:
    """Symmetrize as (A + A^T) / 2 after checking the asymmetry is within tolerance.

    The check is ``max |A - A^T| <= tau_sym * ||A||_inf`` per matrix, using the
    max-entry norm on both sides.
    """
    a = as_array(m)
    asym = np.abs(a - a.transpose(0, 2, 1)).max(axis=(1, 2))
    scale = np.abs(a).max(axis=(1, 2))
    bad = ~(asym <= tau_sym * scale)
    if bad.any():
        b = int(np.flatnonzero(bad)[0])
        raise AsymmetricInput(f"matrix is not symmetric (|A-A^T| = {asym[b]:.3e})", batch_index=b, stage="validate")
    return MatrixBatch(0.5 * (a + a.transpose(0, 2, 1)))


def write_batch(m) -> bytes:
    a = as_array(m)
    B, C, _ = a.shape
    return _HEADER.pack(MAGIC, VERSION, B, C) + np.ascontiguousarray(a, dtype="<f8").tobytes()


def read_batch(buf: bytes) -> MatrixBatch:
    buf = bytes(buf)
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, got {buf[:4]!r}")
    if len(buf) < _HEADER.size:
        raise TruncatedPayload("header is shorter than 16 bytes")
    _, version, B, C = _HEADER.unpack_from(buf)
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    expected = B * C * C * 8
    payload = buf[_HEADER.size:]
    if len(payload) != expected:
        raise TruncatedPayload(f"payload has {len(payload)} bytes, header implies {expected}")
    if B == 0 or C == 0:
        raise TruncatedPayload("empty batch")
    a = np.frombuffer(payload, dtype="<f8").reshape(B, C, C)
    return MatrixBatch(a)
