import numpy as np
import pytest

from batchdc.basecase import eig_2x2, qr_tridiagonal, solve_2x2, solve_leaves, solve_qr
from batchdc.core import NoConvergence, SolverConfig, TridiagonalBatch
from batchdc.oracle import batched_jacobi_eigh

from _helpers import dense_tridiag, orth_err, random_tridiag


def test_2x2_diagonal():
    w, V = eig_2x2(3.0, 0.0, -1.0)
    np.testing.assert_array_equal(w, [3.0, -1.0])
    np.testing.assert_array_equal(V, np.eye(2))


def test_2x2_reference():
    sf = solve_2x2(TridiagonalBatch([[2.0, 2.0]], [[1.0]]))
    np.testing.assert_allclose(sf.eigenvalues[0], [3.0, 1.0], atol=1e-15)
    V = sf.eigenvectors[0]
    np.testing.assert_allclose(np.abs(V), np.full((2, 2), 2 ** -0.5), atol=1e-15)
    np.testing.assert_allclose(V[:, 0] @ V[:, 1], 0.0, atol=1e-16)


@pytest.mark.parametrize("p,q", [(0.0, 1.0), (1e8, 1e-8), (-3.0, 7.0), (1e-300, 1e-300)])
def test_2x2_equal_diagonal(p, q):
    w, _ = eig_2x2(p, q, p)
    np.testing.assert_allclose(w, [p + abs(q), p - abs(q)], rtol=1e-15)


def test_2x2_orthogonal_by_construction():
    rng = np.random.default_rng(0)
    p, q, r = rng.standard_normal((3, 100))
    w, V = eig_2x2(p, q, r)
    assert orth_err(V).max() <= 1e-15
    A = np.stack([np.stack([p, q], -1), np.stack([q, r], -1)], -2)
    assert np.abs((V * w[:, None, :]) @ V.transpose(0, 2, 1) - A).max() <= 1e-14


def test_qr_diagonal_input_takes_no_sweeps():
    w, V, sweeps = qr_tridiagonal([[1.0, 3.0, 2.0]], [[0.0, 0.0]])
    np.testing.assert_array_equal(w[0], [3, 2, 1])
    assert sweeps[0] == 0
    np.testing.assert_array_equal(np.abs(V[0]), np.eye(3)[:, [1, 2, 0]])


def test_qr_random_vs_oracle():
    rng = np.random.default_rng(1)
    d, e = random_tridiag(rng, 32, 8)
    T = dense_tridiag(d, e)
    scale = np.linalg.norm(T, axis=(1, 2))
    d, e, T = d / scale[:, None], e / scale[:, None], T / scale[:, None, None]
    sf = solve_qr(TridiagonalBatch(d, e))
    w_ref, _ = batched_jacobi_eigh(T)
    assert np.abs(sf.eigenvalues - w_ref).max() <= 1e-10
    assert orth_err(sf.eigenvectors).max() <= 8e-8


def test_qr_wilkinson_w7():
    d = np.abs(np.arange(7) - 3.0)
    e = np.ones(6)
    sf = solve_qr(TridiagonalBatch(d[None], e[None]))
    T = dense_tridiag(d, e)[0]
    err = np.linalg.norm(sf.reconstruct()[0] - T)
    assert err <= 1e-9 * np.linalg.norm(T, 2)
    assert np.all(np.diff(sf.eigenvalues[0]) <= 0)


def test_qr_agrees_with_2x2():
    rng = np.random.default_rng(2)
    d, e = random_tridiag(rng, 50, 2)
    w_qr, _, _ = qr_tridiagonal(d, e)
    w_2, _ = eig_2x2(d[:, 0], e[:, 0], d[:, 1])
    assert np.abs(w_qr - w_2).max() <= 1e-12


def test_single_matrix_path_matches_batched():
    rng = np.random.default_rng(3)
    d, e = random_tridiag(rng, 4, 12)
    w, V, _ = qr_tridiagonal(d, e)
    for b in range(4):
        w1, V1, _ = qr_tridiagonal(d[b:b + 1], e[b:b + 1])
        assert np.abs(w1[0] - w[b]).max() <= 1e-13
        assert np.abs(np.abs(V1[0].T @ V[b]) - np.eye(12)).max() <= 1e-10


def test_qr_no_convergence_reports_element():
    rng = np.random.default_rng(4)
    d, e = random_tridiag(rng, 3, 10)
    e[0] = 0.0
    d[0] = 0.0
    with pytest.raises(NoConvergence) as info:
        qr_tridiagonal(d, e, max_sweeps=1)
    assert info.value.batch_index == 1 and info.value.stage == "basecase"
    with pytest.raises(NoConvergence) as info:
        qr_tridiagonal(d[1:2], e[1:2], max_sweeps=1)
    assert info.value.batch_index == 0


def test_masked_elements_are_not_touched():
    # a converged element sweeps along with the others but must stay bit-identical
    d = np.array([[1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0]])
    e = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
    w, V, sweeps = qr_tridiagonal(d, e)
    np.testing.assert_array_equal(w[0], [4, 3, 2, 1])
    assert sweeps[0] == 0 and sweeps[1] > 0


def test_solve_leaves_dispatch():
    w, V = solve_leaves(np.array([[5.0]]), np.zeros((1, 0)), SolverConfig())
    assert w[0, 0] == 5.0 and V[0, 0, 0] == 1.0
    d, e = np.array([[2.0, 2.0]]), np.array([[1.0]])
    w2, _ = solve_leaves(d, e, SolverConfig())
    wq, _ = solve_leaves(d, e, SolverConfig.hybrid(4))
    assert np.abs(w2 - wq).max() <= 1e-15
