"""Banded matrix storage, LU with partial pivoting in band form, and 2-norm
condition estimation by power/inverse iteration.

Factorisation and triangular solves are delegated to LAPACK's banded
routines (gbtrf/gbtrs) behind the module's own types; the power-iteration
condition estimator is implemented here on top of them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack
from scipy.sparse import dia_matrix
from scipy.sparse.linalg import LinearOperator, onenormest


class SingularMatrixError(RuntimeError):
    """The factorisation met a (numerically) zero pivot."""


class BandedMatrix:
    """General band matrix in LAPACK 'ab' layout: data[ku+i-j, j] = A[i, j]
    for -kl <= i-j <= ku.  Entries outside the band are structurally zero."""

    def __init__(self, n: int, kl: int, ku: int, data: np.ndarray | None = None):
        self.n = n
        self.kl = kl
        self.ku = ku
        if data is None:
            data = np.zeros((kl + ku + 1, n))
        assert data.shape == (kl + ku + 1, n)
        self.data = data

    @classmethod
    def zeros(cls, n: int, kl: int, ku: int) -> "BandedMatrix":
        return cls(n, kl, ku)

    @classmethod
    def eye(cls, n: int) -> "BandedMatrix":
        out = cls(n, 0, 0)
        out.data[0, :] = 1.0
        return out

    @classmethod
    def from_dense(cls, a: np.ndarray, kl: int | None = None, ku: int | None = None) -> "BandedMatrix":
        n = a.shape[0]
        i, j = np.nonzero(a)
        if kl is None:
            kl = int(max(i - j, default=0))
        if ku is None:
            ku = int(max(j - i, default=0))
        out = cls(n, kl, ku)
        out.add_at(i, j, a[i, j])
        return out

    def add_at(self, rows, cols, vals):
        """Accumulate vals at (rows, cols); all entries must lie in-band."""
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        np.add.at(self.data, (self.ku + rows - cols, cols), vals)

    def __getitem__(self, ij):
        i, j = ij
        if -self.kl <= i - j <= self.ku:
            return self.data[self.ku + i - j, j]
        return 0.0

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for off in range(-self.kl, self.ku + 1):  # off = j - i
            j = np.arange(max(off, 0), self.n + min(off, 0))
            a[j - off, j] = self.data[self.ku - off, j]
        return a

    def _as_dia(self) -> dia_matrix:
        offsets = np.arange(self.ku, -self.kl - 1, -1)
        return dia_matrix((self.data, offsets), shape=(self.n, self.n))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self._as_dia() @ x

    def rmatvec(self, x: np.ndarray) -> np.ndarray:
        return self._as_dia().T @ x

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data)))

    def one_norm(self) -> float:
        return float(np.max(np.abs(self.data).sum(axis=0)))

    def symmetry_defect(self) -> float:
        """max |A - A^T| over the band (tests assert the Galerkin matrix is
        genuinely nonsymmetric and the Gram matrices are not)."""
        a = self.to_dense()
        return float(np.max(np.abs(a - a.T)))


@dataclass
class LUFactors:
    """Banded PA=LU factors plus pivots, immutable after creation; concurrent
    solves on the same factors are safe."""

    n: int
    kl: int
    ku: int
    afb: np.ndarray
    ipiv: np.ndarray
    rcond_est: float


def _gb_funcs():
    return lapack.get_lapack_funcs(("gbtrf", "gbtrs"), (np.zeros(1),))


def lu_factor(B: BandedMatrix, rcond_floor: float = 1e-16) -> LUFactors:
    """Banded LU with partial pivoting (pivoting confined to band + kl fill).

    Raises SingularMatrixError on an exact zero pivot, and also when a cheap
    1-norm condition estimate falls below `rcond_floor` (exact singularity is
    rarely observed in floating point; an A_O0=0 Galerkin matrix lands here).
    """
    gbtrf, gbtrs = _gb_funcs()
    n, kl, ku = B.n, B.kl, B.ku
    afb = np.zeros((2 * kl + ku + 1, n))
    afb[kl:, :] = B.data
    lu, ipiv, info = gbtrf(afb, kl, ku, overwrite_ab=True)
    if info > 0:
        raise SingularMatrixError(f"zero pivot at column {info - 1}")
    if info < 0:
        raise ValueError(f"gbtrf: illegal argument {-info}")

    factors = LUFactors(n=n, kl=kl, ku=ku, afb=lu, ipiv=ipiv, rcond_est=np.nan)
    anorm = B.one_norm()
    if anorm > 0 and n > 1:
        op = LinearOperator(
            (n, n),
            matvec=lambda x: solve(factors, x),
            rmatvec=lambda x: solve_transpose(factors, x),
        )
        try:
            inv_norm = onenormest(op)
        except Exception:
            inv_norm = np.inf
        rcond = 1.0 / (anorm * inv_norm) if np.isfinite(inv_norm) and inv_norm > 0 else 0.0
    else:
        rcond = 1.0 if anorm > 0 else 0.0
    factors.rcond_est = rcond
    if not np.isfinite(rcond) or rcond < rcond_floor:
        raise SingularMatrixError(f"matrix numerically singular (rcond ~ {rcond:.2e})")
    return factors


def _gbtrs(f: LUFactors, rhs: np.ndarray, trans: int) -> np.ndarray:
    _, gbtrs = _gb_funcs()
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != f.n:
        raise ValueError(f"rhs has length {rhs.shape[0]}, expected {f.n}")
    b = rhs.reshape(f.n, -1) if rhs.ndim == 1 else rhs
    x, info = gbtrs(f.afb, f.kl, f.ku, b, f.ipiv, trans=trans)
    if info != 0:
        raise ValueError(f"gbtrs: illegal argument {-info}")
    return x.reshape(rhs.shape)


def solve(f: LUFactors, rhs: np.ndarray) -> np.ndarray:
    return _gbtrs(f, rhs, trans=0)


def solve_transpose(f: LUFactors, rhs: np.ndarray) -> np.ndarray:
    return _gbtrs(f, rhs, trans=1)


@dataclass
class CondEstimate:
    kappa2: float
    converged: bool
    iterations: int

    def __float__(self) -> float:
        return self.kappa2


def cond2_estimate(
    B: BandedMatrix,
    f: LUFactors,
    tol: float = 1e-6,
    max_iter: int = 20000,
    seed: int = 0,
) -> CondEstimate:
    """2-norm condition number by power iteration on B^T B for sigma_max and
    inverse iteration (via the banded solves) for sigma_min.

    Deterministic seeded start vector; `converged=False` flags an estimate
    that did not reach the relative tolerance within max_iter iterations.
    """
    rng = np.random.default_rng(seed)
    n = B.n

    def power(apply_op):
        x = rng.standard_normal(n)
        x /= np.linalg.norm(x)
        lam = 0.0
        for k in range(1, max_iter + 1):
            y = apply_op(x)
            ny = np.linalg.norm(y)
            if ny == 0.0:
                x = rng.standard_normal(n)
                x /= np.linalg.norm(x)
                continue
            lam_new = float(x @ y)
            x = y / ny
            if abs(lam_new - lam) <= tol * abs(lam_new):
                return lam_new, True, k
            lam = lam_new
        return lam, False, max_iter

    lam_max, ok_max, it_max = power(lambda x: B.rmatvec(B.matvec(x)))
    lam_inv, ok_min, it_min = power(lambda x: solve(f, solve_transpose(f, x)))
    sigma_max = np.sqrt(abs(lam_max))
    sigma_min = 1.0 / np.sqrt(abs(lam_inv)) if lam_inv != 0 else 0.0
    kappa = sigma_max / sigma_min if sigma_min > 0 else np.inf
    return CondEstimate(kappa2=float(kappa), converged=ok_max and ok_min, iterations=it_max + it_min)
