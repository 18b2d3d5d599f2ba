import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import cho_factor, cho_solve

from morawetz.linalg import (
    BandedMatrix,
    SingularMatrixError,
    cond2_estimate,
    lu_factor,
    solve,
    solve_transpose,
)


def _random_band(rng, n, kl, ku, shift=None):
    a = np.zeros((n, n))
    for off in range(-kl, ku + 1):
        m = n - abs(off)
        a += np.diag(rng.standard_normal(m), off)
    if shift is None:
        shift = kl + ku + 2.0
    a += shift * np.eye(n)
    return a


def test_identity():
    B = BandedMatrix.eye(5)
    f = lu_factor(B)
    for i in range(5):
        e = np.zeros(5)
        e[i] = 1.0
        assert_allclose(solve(f, e), e)


def test_poisson_tridiagonal():
    B = BandedMatrix.zeros(4, 1, 1)
    for i in range(4):
        B.add_at(i, i, 2.0)
        if i > 0:
            B.add_at(i, i - 1, -1.0)
        if i < 3:
            B.add_at(i, i + 1, -1.0)
    x = solve(lu_factor(B), np.ones(4))
    assert_allclose(x, [2.0, 3.0, 3.0, 2.0], rtol=1e-14)


def test_dense_roundtrip_and_matvec():
    rng = np.random.default_rng(0)
    a = _random_band(rng, 12, 2, 3)
    B = BandedMatrix.from_dense(a)
    assert_allclose(B.to_dense(), a)
    x = rng.standard_normal(12)
    assert_allclose(B.matvec(x), a @ x, rtol=1e-13)
    assert_allclose(B.rmatvec(x), a.T @ x, rtol=1e-13)


def test_solve_transpose():
    rng = np.random.default_rng(1)
    a = _random_band(rng, 20, 3, 2)
    f = lu_factor(BandedMatrix.from_dense(a))
    y = rng.standard_normal(20)
    assert_allclose(a.T @ solve_transpose(f, y), y, rtol=1e-10, atol=1e-12)


def test_factor_solve_roundtrip_random_band_systems():
    rng = np.random.default_rng(2)
    for k in range(20):
        n = int(rng.integers(5, 2000))
        kl = int(rng.integers(1, min(n - 1, 9)))
        ku = int(rng.integers(1, min(n - 1, 9)))
        a = _random_band(rng, n, kl, ku)
        B = BandedMatrix.from_dense(a, kl, ku)
        f = lu_factor(B)
        y = rng.standard_normal(n)
        x = solve(f, y)
        assert np.linalg.norm(a @ x - y) <= 1e-10 * np.linalg.norm(y)


def test_spd_band_against_cholesky_oracle():
    rng = np.random.default_rng(3)
    n = 40
    a = _random_band(rng, n, 2, 2)
    spd = a @ a.T + n * np.eye(n)
    kl = ku = 4
    B = BandedMatrix.from_dense(spd, kl, ku)
    y = rng.standard_normal(n)
    assert_allclose(solve(lu_factor(B), y), cho_solve(cho_factor(spd), y), rtol=1e-10)


def test_dimension_mismatch():
    f = lu_factor(BandedMatrix.eye(4))
    with pytest.raises(ValueError):
        solve(f, np.ones(5))


def test_singular_reported():
    a = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularMatrixError):
        lu_factor(BandedMatrix.from_dense(a))


def test_cond_identity_and_diagonal():
    B = BandedMatrix.eye(6)
    est = cond2_estimate(B, lu_factor(B))
    assert float(est) == pytest.approx(1.0, rel=1e-6)

    D = BandedMatrix.zeros(6, 1, 1)
    for i, v in enumerate((1.0, 10.0, 2.0, 5.0, 3.0, 4.0)):
        D.add_at(i, i, v)
    est = cond2_estimate(D, lu_factor(D))
    assert float(est) == pytest.approx(10.0, rel=1e-5)
    assert est.converged


def test_cond_against_dense_svd_oracle():
    rng = np.random.default_rng(4)
    for n in (30, 80, 200):
        a = _random_band(rng, n, 3, 3, shift=3.0)
        B = BandedMatrix.from_dense(a, 3, 3)
        est = cond2_estimate(B, lu_factor(B), tol=1e-9)
        s = np.linalg.svd(a, compute_uv=False)
        assert abs(float(est) - s[0] / s[-1]) <= 0.05 * (s[0] / s[-1])
