"""Shared generators and independent reference computations for the tests."""

import numpy as np

from batchdc import secular


def random_spd(rng, B, C):
    G = rng.standard_normal((B, C, C))
    return G.transpose(0, 2, 1) @ G / C + 1e-3 * np.eye(C)


def random_sym(rng, B, C):
    A = rng.standard_normal((B, C, C))
    return 0.5 * (A + A.transpose(0, 2, 1))


def random_tridiag(rng, B, C):
    return rng.standard_normal((B, C)), rng.standard_normal((B, C - 1))


def dense_tridiag(d, e):
    d = np.atleast_2d(d)
    e = np.atleast_2d(e)
    B, C = d.shape
    T = np.zeros((B, C, C))
    i = np.arange(C)
    T[:, i, i] = d
    T[:, i[:-1], i[1:]] = e
    T[:, i[1:], i[:-1]] = e
    return T


def random_secular(rng, n, rho=None, lo=-5.0, hi=5.0):
    d = np.sort(rng.uniform(lo, hi, n))[::-1]
    z = rng.standard_normal(n)
    z /= np.linalg.norm(z)
    if rho is None:
        rho = rng.uniform(0.01, 5.0)
    return secular.make_system(d[None], z[None], [rho])


def hard_secular(rng, n):
    """Half the poles in a 1e-9 cluster, weights spread over seven decades."""
    m = n - n // 2
    d = np.concatenate([rng.uniform(-1, 1, n // 2), 0.3 + 1e-9 * rng.standard_normal(m)])
    d = np.sort(d)[::-1]
    z = rng.standard_normal(n) * 10.0 ** rng.uniform(-7, 0, n)
    z /= np.linalg.norm(z)
    return secular.make_system(d[None], z[None], [1.0])


def secular_residual_wide(sys, roots):
    """|f| at each root from its (origin, tau + tau_lo) representation, in long double.

    Independent of the solver's own evaluation: every term is formed and
    summed in extended precision with exact squares of the float64 weights.
    """
    W = np.longdouble
    d = sys.d.astype(W)
    z2 = np.where(sys.active, sys.z, 0.0).astype(W) ** 2
    dor = np.take_along_axis(d, roots.origin, axis=1)
    tau = roots.tau.astype(W)
    if roots.tau_lo is not None:
        tau = tau + roots.tau_lo.astype(W)
    delta = (d[:, None, :] - dor[:, :, None]) - tau[:, :, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(z2[:, None, :] == 0, W(0), z2[:, None, :] / delta)
    f = 1 + sys.rho.astype(W)[:, None] * terms.sum(axis=2)
    return np.where(sys.active, np.abs(f), 0).astype(np.float64)


def secular_matrix(sys):
    """Dense D + rho z z^T for each problem (active and deflated slots alike)."""
    z = sys.z
    return np.einsum("pi,ij->pij", sys.d, np.eye(sys.shape[1])) + sys.rho[:, None, None] * z[:, :, None] * z[:, None, :]


def orth_err(Q):
    n = Q.shape[-1]
    return np.linalg.norm(np.swapaxes(Q, -1, -2) @ Q - np.eye(n), axis=(-2, -1))


# acceptance verdict lines, filled by test_acceptance and echoed in the terminal summary
ACCEPTANCE = {}


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok
