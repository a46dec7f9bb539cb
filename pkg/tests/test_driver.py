import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from batchdc import (AsymmetricInput, MatrixBatch, SolverConfig, batched_eigh, batched_eigvalsh, loop_eigh)
from batchdc.core import InterlacingViolation
from batchdc.driver import canonicalize_signs
from batchdc.oracle import batched_jacobi_eigh

from _helpers import orth_err, random_spd, random_sym


def test_identity_batch():
    res = batched_eigh(np.broadcast_to(np.eye(4), (512, 4, 4)))
    np.testing.assert_array_equal(res.eigenvalues, 1.0)
    np.testing.assert_array_equal(np.abs(res.eigenvectors), np.broadcast_to(np.eye(4), (512, 4, 4)))


def test_random_spd_vs_oracle():
    rng = np.random.default_rng(0)
    A = random_spd(rng, 64, 16)
    A /= np.linalg.norm(A, 2, axis=(1, 2))[:, None, None]
    res = batched_eigh(A)
    w_ref, _ = batched_jacobi_eigh(A)
    assert np.abs(res.eigenvalues - w_ref).max() <= 1e-10
    assert np.linalg.norm(res.reconstruct() - A, axis=(1, 2)).max() <= 1e-9


def test_rank_one_batch():
    rng = np.random.default_rng(1)
    u = rng.standard_normal((8, 6))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    res = batched_eigh(u[:, :, None] * u[:, None, :])
    expect = np.zeros((8, 6))
    expect[:, 0] = 1.0
    assert np.abs(res.eigenvalues - expect).max() <= 1e-14
    assert np.abs(np.abs(res.eigenvectors[:, :, 0]) - np.abs(u)).max() <= 1e-13


@pytest.mark.parametrize("C", [1, 2, 3, 5, 7, 12, 33])
def test_all_small_dims(C):
    rng = np.random.default_rng(C)
    A = random_sym(rng, 10, C)
    res = batched_eigh(A)
    w_ref, _ = batched_jacobi_eigh(A)
    assert np.abs(res.eigenvalues - w_ref).max() <= 1e-12 * max(1.0, np.abs(w_ref).max())
    assert orth_err(res.eigenvectors).max() <= 1e-12
    assert np.all(np.diff(res.eigenvalues, axis=1) <= 0)


@pytest.mark.parametrize("cfg", [SolverConfig(), SolverConfig.hybrid(4), SolverConfig.hybrid(8),
                                 SolverConfig.qr_only(), SolverConfig(root_method="newton"),
                                 SolverConfig(section_count=2), SolverConfig(pole_scaling=False)])
def test_configs_agree(cfg):
    rng = np.random.default_rng(2)
    A = random_spd(rng, 16, 20)
    res = batched_eigh(A, cfg)
    w_ref, _ = batched_jacobi_eigh(A)
    assert np.abs(res.eigenvalues - w_ref).max() <= 1e-12
    assert np.linalg.norm(res.reconstruct() - A, axis=(1, 2)).max() <= 1e-12


def test_eigvalsh_bitwise_equal():
    rng = np.random.default_rng(3)
    A = random_spd(rng, 32, 24)
    assert batched_eigvalsh(A).tobytes() == batched_eigh(A).eigenvalues.tobytes()


def test_eigvalsh_diagonal_sorted():
    d = np.array([[3.0, -1.0, 7.0, 0.5]])
    np.testing.assert_array_equal(batched_eigvalsh(np.diag(d[0])[None]), [[7.0, 3.0, 0.5, -1.0]])


def test_clustered_and_repeated_spectra():
    rng = np.random.default_rng(4)
    Q, _ = np.linalg.qr(rng.standard_normal((16, 12, 12)))
    lam = np.repeat([[2.0, 1.0, 1.0 + 1e-12, -1.0]], 3, axis=1) + np.zeros((16, 1))
    A = (Q * lam[:, None, :]) @ Q.transpose(0, 2, 1)
    A = 0.5 * (A + A.transpose(0, 2, 1))
    res = batched_eigh(A)
    assert np.abs(res.eigenvalues - np.sort(lam, axis=1)[:, ::-1]).max() <= 1e-13
    assert orth_err(res.eigenvectors).max() <= 1e-12
    assert np.linalg.norm(res.reconstruct() - A, axis=(1, 2)).max() <= 1e-12


def test_permutation_equivariance():
    rng = np.random.default_rng(5)
    A = random_sym(rng, 12, 9)
    p = rng.permutation(12)
    a = batched_eigh(A)
    b = batched_eigh(A[p])
    np.testing.assert_array_equal(a.eigenvalues[p], b.eigenvalues)


@settings(max_examples=15, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 1000))
def test_scale_equivariance(c, seed):
    rng = np.random.default_rng(seed)
    A = random_sym(rng, 4, 10)
    w = batched_eigvalsh(A)
    wc = batched_eigvalsh(c * A)
    assert np.abs(wc - c * w).max() <= 1e-12 * c * np.abs(w).max()


def test_trace_and_frobenius_conserved():
    rng = np.random.default_rng(6)
    A = random_sym(rng, 20, 16)
    w = batched_eigvalsh(A)
    fro2 = np.sum(A * A, axis=(1, 2))
    assert np.abs(w.sum(axis=1) - np.trace(A, axis1=1, axis2=2)).max() <= 1e-10 * np.sqrt(fro2).max()
    assert np.abs((w ** 2).sum(axis=1) - fro2).max() <= 1e-9 * fro2.max()


def test_deterministic():
    rng = np.random.default_rng(7)
    A = random_spd(rng, 8, 16)
    a, b = batched_eigh(A), batched_eigh(A)
    assert a.eigenvectors.tobytes() == b.eigenvectors.tobytes()


def test_asymmetric_input_reports_index():
    A = np.broadcast_to(np.eye(3), (4, 3, 3)).copy()
    A[2, 0, 1] = 1.0
    with pytest.raises(AsymmetricInput) as info:
        batched_eigh(MatrixBatch(A))
    assert info.value.batch_index == 2


def test_stage_errors_carry_batch_index(monkeypatch):
    from batchdc import driver

    def broken(sys, roots):
        raise InterlacingViolation("forced", batch_index=sys.shape[0] - 1, stage="eigvec")

    monkeypatch.setattr(driver, "recompute_z", broken)
    B = 5
    with pytest.raises(InterlacingViolation) as info:
        batched_eigh(np.broadcast_to(np.diag([1.0, 2, 3, 4]), (B, 4, 4)) + 0.1)
    assert 0 <= info.value.batch_index < B and info.value.stage == "eigvec"


def test_loop_baseline_matches():
    rng = np.random.default_rng(8)
    A = random_spd(rng, 6, 10)
    a, b = batched_eigh(A), loop_eigh(A)
    assert np.abs(a.eigenvalues - b.eigenvalues).max() <= 1e-13
    assert np.abs(np.abs(np.sum(a.eigenvectors * b.eigenvectors, axis=1)) - 1).max() <= 1e-10


def test_canonical_signs():
    V = np.array([[[0.6, -0.8], [-0.8, -0.6]]])
    out = canonicalize_signs(V)
    np.testing.assert_array_equal(out, [[[-0.6, 0.8], [0.8, 0.6]]])


def test_monitor_sees_every_merge():
    seen = []
    batched_eigh(np.broadcast_to(np.diag(np.arange(8.0)), (3, 8, 8)) + 0.01, monitor=lambda s, r: seen.append(s.shape))
    # 8 -> 4 + 4 -> 2 + 2: four merges of 2+2 stacked, then two of 4+4 ... in three levels
    assert [s[1] for s in seen] == [4, 8]
    assert seen[0][0] == 2 * 3 and seen[1][0] == 3
