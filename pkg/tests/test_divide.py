import numpy as np
import pytest

from batchdc.core import SolverConfig, SplitOutOfRange, TridiagonalBatch
from batchdc.divide import build_plan, reassemble, tear_once

from _helpers import random_tridiag


def test_tear_numeric_4x4():
    t = TridiagonalBatch([[2.0, 3.0, 4.0, 5.0]], [[1.0, -0.5, 1.0]])
    left, right, beta, theta = tear_once(t, 2)
    np.testing.assert_array_equal(left.dense()[0], [[2, 1], [1, 2.5]])
    np.testing.assert_array_equal(right.dense()[0], [[3.5, 1], [1, 5]])
    assert beta[0] == -0.5 and theta[0] == -1.0
    np.testing.assert_array_equal(reassemble(left, right, beta), t.dense())


def test_tear_symbolic_pattern():
    # boundary diagonals lose |beta|, everything else is copied
    rng = np.random.default_rng(0)
    d, e = random_tridiag(rng, 5, 4)
    t = TridiagonalBatch(d, e)
    left, right, beta, _ = tear_once(t, 2)
    np.testing.assert_array_equal(left.diag[:, 0], d[:, 0])
    np.testing.assert_array_equal(left.diag[:, 1], d[:, 1] - np.abs(e[:, 1]))
    np.testing.assert_array_equal(right.diag[:, 0], d[:, 2] - np.abs(e[:, 1]))
    np.testing.assert_array_equal(left.offdiag[:, 0], e[:, 0])
    np.testing.assert_array_equal(right.offdiag[:, 0], e[:, 2])


def test_zero_coupling_gives_independent_blocks():
    t = TridiagonalBatch([[1.0, 2.0, 3.0]], [[4.0, 0.0]])
    left, right, beta, theta = tear_once(t, 2)
    assert beta[0] == 0.0 and theta[0] == 1.0
    np.testing.assert_array_equal(left.diag[0], [1, 2])
    np.testing.assert_array_equal(right.diag[0], [3])


@pytest.mark.parametrize("C,split", [(2, 1), (5, 3), (9, 1), (9, 8)])
def test_reassembly_is_exact(C, split):
    rng = np.random.default_rng(C + split)
    t = TridiagonalBatch(*random_tridiag(rng, 7, C))
    left, right, beta, _ = tear_once(t, split)
    assert np.abs(reassemble(left, right, beta) - t.dense()).max() <= 1e-15


def test_split_out_of_range():
    t = TridiagonalBatch([[1.0, 2.0, 3.0]], [[1.0, 1.0]])
    for split in (0, 3, -1):
        with pytest.raises(SplitOutOfRange):
            tear_once(t, split)


def test_plan_c2_is_a_single_leaf():
    t = TridiagonalBatch([[1.0, 2.0]], [[3.0]])
    plan = build_plan(t, SolverConfig())
    assert plan.root.is_leaf and plan.depth == 0
    (group, d, e), = plan.leaf_batches().values()
    np.testing.assert_array_equal(d, t.diag)


def test_plan_c8_depth_two():
    B = 3
    rng = np.random.default_rng(1)
    t = TridiagonalBatch(*random_tridiag(rng, B, 8))
    plan = build_plan(t, SolverConfig())
    assert plan.depth == 2 and len(plan.leaves) == 4
    batches = plan.leaf_batches()
    assert list(batches) == [2]
    assert batches[2][1].shape == (4 * B, 2)


def test_plan_c6_crossover4():
    t = TridiagonalBatch(np.ones((1, 6)), np.ones((1, 5)))
    plan = build_plan(t, SolverConfig.hybrid(4))
    assert plan.depth == 1
    assert [leaf.size for leaf in plan.leaves] == [3, 3]


def test_plan_leaf_count_power_of_two():
    t = TridiagonalBatch(np.ones((2, 32)), np.ones((2, 31)))
    plan = build_plan(t, SolverConfig())
    assert len(plan.leaves) == 2 ** plan.depth == 16


def test_odd_sizes_split_ceil_first():
    t = TridiagonalBatch(np.ones((1, 7)), np.ones((1, 6)))
    plan = build_plan(t, SolverConfig())
    assert [c.size for c in plan.root.children] == [4, 3]
    assert sorted(leaf.size for leaf in plan.leaves) == [1, 2, 2, 2]


def test_block_fro_of_root_matches_dense():
    rng = np.random.default_rng(2)
    t = TridiagonalBatch(*random_tridiag(rng, 4, 6))
    plan = build_plan(t, SolverConfig())
    np.testing.assert_allclose(plan.block_fro(plan.root), np.linalg.norm(t.dense(), axis=(1, 2)), rtol=1e-14)
