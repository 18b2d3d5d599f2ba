"""Morawetz multiplier, wave operator, and numerical checks of the pointwise
and integrated multiplier identities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ConfigurationError


@dataclass(frozen=True)
class Jet2(object):
    """Value and partial derivatives through order two of a scalar field at
    one space-time point."""

    v: float = 0.0
    v_x: float = 0.0
    v_t: float = 0.0
    v_xx: float = 0.0
    v_tt: float = 0.0
    v_xt: float = 0.0


@dataclass(frozen=True)
class FormulationParams:
    """Multiplier and penalty parameters of the coercive formulation.

    xi, beta scale the two multiplier terms, T* = nu*T shifts the time
    coefficient, A_Q and A_O0 weigh the least-squares terms (zero values are
    representable ablations, flagged non-coercive by validate_params), and
    A_SD weighs the Dirichlet-trace penalty (mixed problems only).  c and
    theta are the wave speed and impedance constant of the problem.
    """

    xi: float = 1.0
    beta: float = 2.0
    nu: float = 2.0
    A_Q: float = 1.0
    A_O0: float = 1.0
    A_SD: float | None = None
    c: float = 1.0
    theta: float = 1.0

    def __post_init__(self):
        if self.xi <= 0 or self.c <= 0 or self.theta <= 0:
            raise ConfigurationError("xi, c and theta must be positive")
        if self.beta <= 0:
            raise ConfigurationError("beta must be positive")
        if self.nu <= 0:
            raise ConfigurationError("nu must be positive")
        if self.A_Q < 0 or self.A_O0 < 0:
            raise ConfigurationError("A_Q and A_O0 must be >= 0")
        if self.A_SD is not None and self.A_SD <= 0:
            raise ConfigurationError("A_SD must be positive when given")

    def t_star(self, T: float) -> float:
        return self.nu * T


def morawetz(jet: Jet2, x: float, t: float, p: FormulationParams, T: float):
    """Multiplier value -xi*x*v_x + beta*(t - nu*T)*v_t."""
    return -p.xi * x * jet.v_x + p.beta * (t - p.t_star(T)) * jet.v_t


def waveop(jet: Jet2, c: float):
    """Wave operator value v_tt - c^2 * v_xx."""
    return jet.v_tt - c * c * jet.v_xx


class Poly2:
    """Bivariate polynomial sum_ij c[i,j] x^i t^j with exact calculus.

    Used so the pointwise identity check carries no discretisation error;
    tolerances cover rounding only.
    """

    __slots__ = ("c",)

    def __init__(self, c):
        self.c = np.atleast_2d(np.asarray(c, dtype=float))

    @classmethod
    def const(cls, a: float) -> "Poly2":
        return cls([[a]])

    @classmethod
    def x(cls) -> "Poly2":
        return cls([[0.0], [1.0]])

    @classmethod
    def t(cls) -> "Poly2":
        return cls([[0.0, 1.0]])

    @classmethod
    def random(cls, rng, deg: int, scale: float = 1.0) -> "Poly2":
        return cls(scale * rng.standard_normal((deg + 1, deg + 1)))

    def __add__(self, other):
        a, b = self.c, _coerce(other).c
        n = max(a.shape[0], b.shape[0])
        m = max(a.shape[1], b.shape[1])
        out = np.zeros((n, m))
        out[: a.shape[0], : a.shape[1]] += a
        out[: b.shape[0], : b.shape[1]] += b
        return Poly2(out)

    def __neg__(self):
        return Poly2(-self.c)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __mul__(self, other):
        if np.isscalar(other):
            return Poly2(other * self.c)
        b = _coerce(other).c
        a = self.c
        out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
        for i in range(a.shape[0]):
            for j in range(a.shape[1]):
                if a[i, j] != 0.0:
                    out[i : i + b.shape[0], j : j + b.shape[1]] += a[i, j] * b
        return Poly2(out)

    __rmul__ = __mul__

    def diff_x(self) -> "Poly2":
        if self.c.shape[0] == 1:
            return Poly2([[0.0]])
        return Poly2(self.c[1:, :] * np.arange(1, self.c.shape[0])[:, None])

    def diff_t(self) -> "Poly2":
        if self.c.shape[1] == 1:
            return Poly2([[0.0]])
        return Poly2(self.c[:, 1:] * np.arange(1, self.c.shape[1])[None, :])

    def __call__(self, x, t):
        xs = np.power.outer(np.asarray(x, float), np.arange(self.c.shape[0]))
        ts = np.power.outer(np.asarray(t, float), np.arange(self.c.shape[1]))
        return np.einsum("...i,ij,...j->...", xs, self.c, ts)

    def jet(self, x, t) -> Jet2:
        return Jet2(
            v=float(self(x, t)),
            v_x=float(self.diff_x()(x, t)),
            v_t=float(self.diff_t()(x, t)),
            v_xx=float(self.diff_x().diff_x()(x, t)),
            v_tt=float(self.diff_t().diff_t()(x, t)),
            v_xt=float(self.diff_x().diff_t()(x, t)),
        )


def _coerce(obj) -> Poly2:
    return obj if isinstance(obj, Poly2) else Poly2.const(float(obj))


def _mult_poly(u: Poly2, p: FormulationParams, T: float) -> Poly2:
    return (-p.xi) * (Poly2.x() * u.diff_x()) + p.beta * (
        (Poly2.t() - Poly2.const(p.t_star(T))) * u.diff_t()
    )


def _wave_poly(u: Poly2, c: float) -> Poly2:
    return u.diff_t().diff_t() - (c * c) * u.diff_x().diff_x()


def pointwise_identity_residual(u_poly, v_poly, point, p: FormulationParams, T: float, d: int = 1):
    """Relative gap at `point` between Mu*Wv + Wu*Mv and its time-derivative
    + divergence + sign-definite expansion, all expanded symbolically on the
    polynomial ring.

    The result is |lhs - rhs| normalised by the largest constituent term, so
    a correct implementation returns rounding-level values.
    """
    c = p.c
    Mu, Mv = _mult_poly(u_poly, p, T), _mult_poly(v_poly, p, T)
    Wu, Wv = _wave_poly(u_poly, c), _wave_poly(v_poly, c)
    ux, vx = u_poly.diff_x(), v_poly.diff_x()
    ut, vt = u_poly.diff_t(), v_poly.diff_t()
    t_shift = Poly2.t() - Poly2.const(p.t_star(T))

    lhs = Mu * Wv + Wu * Mv
    time_flux = Mu * vt + ut * Mv - p.beta * (t_shift * (ut * vt - (c * c) * (ux * vx)))
    space_flux = (c * c) * (Mu * vx + ux * Mv) - p.xi * (
        Poly2.x() * (ut * vt - (c * c) * (ux * vx))
    )
    bulk = (p.beta + p.xi * d) * (ut * vt) + (c * c * (p.beta + p.xi * (2 - d))) * (ux * vx)
    rhs = time_flux.diff_t() - space_flux.diff_x() - bulk

    x0, t0 = point
    pieces = [lhs(x0, t0), time_flux.diff_t()(x0, t0), space_flux.diff_x()(x0, t0), bulk(x0, t0)]
    scale = max(1.0, max(abs(float(q)) for q in pieces))
    return abs(float(lhs(x0, t0) - rhs(x0, t0))) / scale


def integrated_identity_gap(u_h, v_h, mesh, p: FormulationParams, n_gauss: int = 6):
    """Relative gap between the volume form integral(Mu*Wv + Wu*Mv) and the
    first-order-derivative + boundary expansion it equals for H^2 fields.

    Both sides are integrated with quadrature that is exact for bicubic
    discrete fields, so the gap is rounding-level.
    """
    from . import assembly  # local import: assembly depends on this module

    geom = mesh.geometry
    T = geom.T
    c, xi, beta = p.c, p.xi, p.beta
    Ts = p.t_star(T)
    d = 1

    orders = [(0, 1), (1, 0), (2, 0), (0, 2)]
    U = assembly.element_quad_values(u_h, orders, n_gauss)
    V = assembly.element_quad_values(v_h, orders, n_gauss)
    w, X, Tt = assembly.element_quad_geometry(mesh, n_gauss)

    def mult(F):
        return -xi * X * F[(1, 0)] + beta * (Tt - Ts) * F[(0, 1)]

    def wave(F):
        return F[(0, 2)] - c * c * F[(2, 0)]

    m_volume = float(np.sum(w * (mult(U) * wave(V) + wave(U) * mult(V))))

    vol = -float(
        np.sum(
            w
            * (
                (beta + xi * d) * U[(0, 1)] * V[(0, 1)]
                + c * c * (beta + 2 * xi - d * xi) * U[(1, 0)] * V[(1, 0)]
            )
        )
    )

    def line_t(field, orders_, t_is_top):
        return assembly.time_slice_values(field, orders_, n_gauss, top=t_is_top)

    wx, Xb = assembly.time_slice_geometry(mesh, n_gauss)
    Ut, Vt = line_t(u_h, orders, True), line_t(v_h, orders, True)
    U0, V0 = line_t(u_h, orders, False), line_t(v_h, orders, False)
    cross_T = Xb * (Ut[(0, 1)] * Vt[(1, 0)] + Ut[(1, 0)] * Vt[(0, 1)])
    quad_T = Ut[(0, 1)] * Vt[(0, 1)] + c * c * Ut[(1, 0)] * Vt[(1, 0)]
    omega_T = -float(np.sum(wx * (xi * cross_T - beta * (T - Ts) * quad_T)))
    cross_0 = Xb * (U0[(0, 1)] * V0[(1, 0)] + U0[(1, 0)] * V0[(0, 1)])
    quad_0 = U0[(0, 1)] * V0[(0, 1)] + c * c * U0[(1, 0)] * V0[(1, 0)]
    omega_0 = float(np.sum(wx * (xi * cross_0 + beta * Ts * quad_0)))

    wt, Tb = assembly.space_slice_geometry(mesh, n_gauss)
    sigma = 0.0
    for x_e, n_e in ((geom.x_lo, -1.0), (geom.x_hi, 1.0)):
        Ue = assembly.space_slice_values(u_h, orders, n_gauss, right=(n_e > 0))
        Ve = assembly.space_slice_values(v_h, orders, n_gauss, right=(n_e > 0))
        MU = -xi * x_e * Ue[(1, 0)] + beta * (Tb - Ts) * Ue[(0, 1)]
        MV = -xi * x_e * Ve[(1, 0)] + beta * (Tb - Ts) * Ve[(0, 1)]
        integrand = (
            c * c * MU * (n_e * Ve[(1, 0)])
            + c * c * (n_e * Ue[(1, 0)]) * MV
            + xi * (x_e * n_e) * (-Ue[(0, 1)] * Ve[(0, 1)] + c * c * Ue[(1, 0)] * Ve[(1, 0)])
        )
        sigma += float(np.sum(wt * integrand))

    m_rhs = vol + omega_T + omega_0 - sigma
    scale = max(1.0, abs(m_volume), abs(vol), abs(omega_T), abs(omega_0), abs(sigma))
    return abs(m_volume - m_rhs) / scale
