"""Batched divide-and-conquer eigendecomposition of small symmetric matrices."""

from .core import (AsymmetricInput, BadMagic, BadVersion, EigError, FormatError, InterlacingViolation,
                   MatrixBatch, MaxItersExceeded, NoConvergence, ShapeMismatch, SolverConfig,
                   SpectralFactorization, SplitOutOfRange, TridiagonalBatch, TruncatedPayload, read_batch,
                   validate_symmetric, write_batch)
from .driver import batched_eigh, batched_eigvalsh, loop_eigh
from .oracle import check_interlacing, jacobi_eigh

__all__ = [
    "AsymmetricInput", "BadMagic", "BadVersion", "EigError", "FormatError", "InterlacingViolation",
    "MatrixBatch", "MaxItersExceeded", "NoConvergence", "ShapeMismatch", "SolverConfig",
    "SpectralFactorization", "SplitOutOfRange", "TridiagonalBatch", "TruncatedPayload", "read_batch",
    "validate_symmetric", "write_batch", "batched_eigh", "batched_eigvalsh", "loop_eigh",
    "check_interlacing", "jacobi_eigh",
]
