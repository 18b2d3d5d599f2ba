"""Galerkin assembly of the coercive space-time forms on the Hermite
tensor-product space: system matrix and load vector for the impedance and
mixed impedance-Dirichlet problems, and Gram matrices of the L2, scaled-H1
and graph-norm inner products.

All integrands are polynomials with affine coefficients, so the per-element
matrices decompose as K_base + x_e*K_dx + t_e*K_dt with element-independent
16x16 blocks; assembly is a vectorised scatter of that decomposition and is
exact at the default quadrature order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import basis
from .geometry import ConfigurationError, Mesh, VAL, DX, DT, DXDT
from .linalg import BandedMatrix
from .operators import FormulationParams
from .problems import ProblemSpec
from .quadrature import gauss01

DEFAULT_NGAUSS = 6


@dataclass(eq=False)
class DiscreteField:
    """Coefficient vector over the Hermite DOFs of a mesh; evaluation through
    the tensor shapes yields a C1 function on the closed cylinder."""

    mesh: Mesh
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.mesh.dofmap.ndof,):
            raise ValueError(
                f"coefficient vector has shape {self.coeffs.shape}, "
                f"expected ({self.mesh.dofmap.ndof},)"
            )

    def eval(self, x, t, order=(0, 0)):
        """Evaluate the field (or an (a,b) derivative) at physical points."""
        mesh = self.mesh
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x, t = np.broadcast_arrays(x, t)
        shape = x.shape
        x = x.ravel()
        t = t.ravel()
        jx = np.clip(((x - mesh.geometry.x_lo) / mesh.h_x).astype(int), 0, mesh.N_x - 1)
        it = np.clip((t / mesh.h_t).astype(int), 0, mesh.N_t - 1)
        sx = (x - (mesh.geometry.x_lo + jx * mesh.h_x)) / mesh.h_x
        st = (t - it * mesh.h_t) / mesh.h_t
        G = self.mesh.element_dofs[it * mesh.N_x + jx]
        out = np.zeros_like(x)
        for local in range(16):
            out += basis.shape2d(local, (sx, st), order, mesh.h_x, mesh.h_t) * self.coeffs[G[:, local]]
        return out.reshape(shape)

    def eval_in_element(self, it: int, jx: int, sx, st, order=(0, 0)):
        """Evaluate inside one specific element at reference coordinates
        (used by the C1 patch test to compare the two sides of an edge)."""
        mesh = self.mesh
        G = self.mesh.element_dofs[it * mesh.N_x + jx]
        sx = np.asarray(sx, dtype=float)
        st = np.asarray(st, dtype=float)
        out = np.zeros(np.broadcast(sx, st).shape)
        for local in range(16):
            out += basis.shape2d(local, (sx, st), order, mesh.h_x, mesh.h_t) * self.coeffs[G[local]]
        return out


def interpolate(mesh: Mesh, u, u_x, u_t, u_xt) -> DiscreteField:
    """Hermite interpolant: nodal values of u and its dx, dt, dxdt."""
    dm = mesh.dofmap
    X, T = np.meshgrid(mesh.nodes_x, mesh.nodes_t, indexing="xy")
    J, I = np.meshgrid(np.arange(mesh.N_x + 1), np.arange(mesh.N_t + 1), indexing="xy")
    coeffs = np.zeros(dm.ndof)
    for kind, fn in ((VAL, u), (DX, u_x), (DT, u_t), (DXDT, u_xt)):
        coeffs[dm.index(I, J, kind)] = np.broadcast_to(fn(X, T), X.shape)
    return DiscreteField(mesh, coeffs)


def constant_field(mesh: Mesh, value: float = 1.0) -> DiscreteField:
    z = lambda x, t: np.full_like(np.asarray(x, float), 0.0)
    return interpolate(mesh, lambda x, t: np.full_like(np.asarray(x, float), value), z, z, z)


# ---------------------------------------------------------------------------
# quadrature-grid evaluation helpers

def _vol_rule(mesh: Mesh, n: int):
    s, w = gauss01(n)
    SX, ST = np.meshgrid(s, s, indexing="ij")
    W = np.outer(w, w).ravel() * mesh.h_x * mesh.h_t
    return SX.ravel(), ST.ravel(), W


def element_quad_values(field: DiscreteField, orders, n_gauss: int = DEFAULT_NGAUSS):
    """{order: (n_elements, nq) array} of derivative values on the tensor
    Gauss grid of every element."""
    mesh = field.mesh
    sx, st, _ = _vol_rule(mesh, n_gauss)
    tabs = basis.tabulate(sx, st, orders, mesh.h_x, mesh.h_t)
    C = field.coeffs[mesh.element_dofs]
    return {o: C @ tabs[o] for o in orders}


def element_quad_geometry(mesh: Mesh, n_gauss: int = DEFAULT_NGAUSS):
    """(weights (nq,), X (n_elements, nq), T (n_elements, nq)) for the same
    grid as element_quad_values."""
    sx, st, w = _vol_rule(mesh, n_gauss)
    x_e, t_e = mesh.element_corners()
    X = x_e[:, None] + sx[None, :] * mesh.h_x
    T = t_e[:, None] + st[None, :] * mesh.h_t
    return w, X, T


def time_slice_values(field: DiscreteField, orders, n_gauss: int = DEFAULT_NGAUSS, top: bool = False):
    """Derivative values on the 1D Gauss grid of the bottom (t=0) or top
    (t=T) edge of the cylinder, per boundary element: (N_x, nq) arrays."""
    mesh = field.mesh
    s, _ = gauss01(n_gauss)
    st = np.full_like(s, 1.0 if top else 0.0)
    tabs = basis.tabulate(s, st, orders, mesh.h_x, mesh.h_t)
    ids = (mesh.N_t - 1) * mesh.N_x + np.arange(mesh.N_x) if top else np.arange(mesh.N_x)
    C = field.coeffs[mesh.element_dofs[ids]]
    return {o: C @ tabs[o] for o in orders}


def time_slice_geometry(mesh: Mesh, n_gauss: int = DEFAULT_NGAUSS):
    s, w = gauss01(n_gauss)
    xs = mesh.geometry.x_lo + mesh.h_x * np.arange(mesh.N_x)
    X = xs[:, None] + s[None, :] * mesh.h_x
    return w * mesh.h_x, X


def space_slice_values(field: DiscreteField, orders, n_gauss: int = DEFAULT_NGAUSS, right: bool = False):
    """Derivative values on the 1D Gauss grid of the left/right lateral edge,
    per boundary element: (N_t, nq) arrays."""
    mesh = field.mesh
    s, _ = gauss01(n_gauss)
    sx = np.full_like(s, 1.0 if right else 0.0)
    tabs = basis.tabulate(sx, s, orders, mesh.h_x, mesh.h_t)
    jx = mesh.N_x - 1 if right else 0
    ids = np.arange(mesh.N_t) * mesh.N_x + jx
    C = field.coeffs[mesh.element_dofs[ids]]
    return {o: C @ tabs[o] for o in orders}


def space_slice_geometry(mesh: Mesh, n_gauss: int = DEFAULT_NGAUSS):
    s, w = gauss01(n_gauss)
    ts = mesh.h_t * np.arange(mesh.N_t)
    T = ts[:, None] + s[None, :] * mesh.h_t
    return w * mesh.h_t, T


# ---------------------------------------------------------------------------
# bilinear assembly engine
#
# Term tuples:
#   volume:      (ou, ov, c0, cx, ct)   coefficient c0 + cx*x + ct*t
#   time slice:  (ou, ov, c0, cx, top)  at t=0 (bottom) or t=T (top)
#   space edge:  (ou, ov, c0, ct, right) at x=x_lo (left) or x=x_hi (right)

def _orders_of(terms, iu=0, iv=1):
    out = set()
    for tm in terms:
        out.add(tm[iu])
        out.add(tm[iv])
    return out


def _assemble_bilinear(mesh: Mesh, vol_terms, slice_terms, edge_terms, n_gauss: int) -> BandedMatrix:
    dm = mesh.dofmap
    band = dm.bandwidth
    B = BandedMatrix.zeros(dm.ndof, band, band)
    G = mesh.element_dofs
    h_x, h_t = mesh.h_x, mesh.h_t

    if vol_terms:
        sx, st, w = _vol_rule(mesh, n_gauss)
        tabs = basis.tabulate(sx, st, _orders_of(vol_terms), h_x, h_t)
        K_base = np.zeros((16, 16))
        K_dx = np.zeros((16, 16))
        K_dt = np.zeros((16, 16))
        for ou, ov, c0, cx, ct in vol_terms:
            M0 = np.einsum("q,iq,jq->ij", w, tabs[ov], tabs[ou])
            K_base += c0 * M0
            if cx:
                K_base += cx * np.einsum("q,iq,jq->ij", w * sx * h_x, tabs[ov], tabs[ou])
                K_dx += cx * M0
            if ct:
                K_base += ct * np.einsum("q,iq,jq->ij", w * st * h_t, tabs[ov], tabs[ou])
                K_dt += ct * M0
        x_e, t_e = mesh.element_corners()
        vals = K_base[None] + x_e[:, None, None] * K_dx[None] + t_e[:, None, None] * K_dt[None]
        B.add_at(G[:, :, None], G[:, None, :], vals)

    for top in (False, True):
        terms = [tm for tm in slice_terms if tm[4] == top]
        if not terms:
            continue
        s, wq = gauss01(n_gauss)
        st = np.full_like(s, 1.0 if top else 0.0)
        tabs = basis.tabulate(s, st, _orders_of(terms), h_x, h_t)
        w = wq * h_x
        K_base = np.zeros((16, 16))
        K_dx = np.zeros((16, 16))
        for ou, ov, c0, cx, _ in terms:
            M0 = np.einsum("q,iq,jq->ij", w, tabs[ov], tabs[ou])
            K_base += c0 * M0
            if cx:
                K_base += cx * np.einsum("q,iq,jq->ij", w * s * h_x, tabs[ov], tabs[ou])
                K_dx += cx * M0
        ids = ((mesh.N_t - 1) * mesh.N_x if top else 0) + np.arange(mesh.N_x)
        x_e = mesh.geometry.x_lo + h_x * np.arange(mesh.N_x)
        Gs = G[ids]
        vals = K_base[None] + x_e[:, None, None] * K_dx[None]
        B.add_at(Gs[:, :, None], Gs[:, None, :], vals)

    for right in (False, True):
        terms = [tm for tm in edge_terms if tm[4] == right]
        if not terms:
            continue
        s, wq = gauss01(n_gauss)
        sx = np.full_like(s, 1.0 if right else 0.0)
        tabs = basis.tabulate(sx, s, _orders_of(terms), h_x, h_t)
        w = wq * h_t
        K_base = np.zeros((16, 16))
        K_dt = np.zeros((16, 16))
        for ou, ov, c0, ct, _ in terms:
            M0 = np.einsum("q,iq,jq->ij", w, tabs[ov], tabs[ou])
            K_base += c0 * M0
            if ct:
                K_base += ct * np.einsum("q,iq,jq->ij", w * s * h_t, tabs[ov], tabs[ou])
                K_dt += ct * M0
        jx = mesh.N_x - 1 if right else 0
        ids = np.arange(mesh.N_t) * mesh.N_x + jx
        t_e = h_t * np.arange(mesh.N_t)
        Gs = G[ids]
        vals = K_base[None] + t_e[:, None, None] * K_dt[None]
        B.add_at(Gs[:, :, None], Gs[:, None, :], vals)

    return B


def _b_terms(mesh: Mesh, p: FormulationParams):
    """Term lists of the impedance bilinear form; the lateral integrals run
    over the impedance endpoints only (for mixed geometries that is just the
    right edge, and the starred form adds the Dirichlet-edge terms)."""
    geom = mesh.geometry
    T = geom.T
    c, xi, beta = p.c, p.xi, p.beta
    Ts = p.t_star(T)
    c2 = c * c
    d = 1

    vol = [
        # multiplier against wave operator
        ((1, 0), (0, 2), 0.0, -xi, 0.0),
        ((1, 0), (2, 0), 0.0, xi * c2, 0.0),
        ((0, 1), (0, 2), -beta * Ts, 0.0, beta),
        ((0, 1), (2, 0), beta * c2 * Ts, 0.0, -beta * c2),
        # sign-definite first-order block
        ((0, 1), (0, 1), beta + xi * d, 0.0, 0.0),
        ((1, 0), (1, 0), c2 * (beta + 2 * xi - d * xi), 0.0, 0.0),
    ]
    if p.A_Q:
        aq = p.A_Q * T * T
        vol += [
            ((0, 2), (0, 2), aq, 0.0, 0.0),
            ((0, 2), (2, 0), -aq * c2, 0.0, 0.0),
            ((2, 0), (0, 2), -aq * c2, 0.0, 0.0),
            ((2, 0), (2, 0), aq * c2 * c2, 0.0, 0.0),
        ]

    slices = [
        # top edge t=T
        ((0, 1), (1, 0), 0.0, xi, True),
        ((1, 0), (0, 1), 0.0, xi, True),
        ((0, 1), (0, 1), beta * (p.nu - 1.0) * T, 0.0, True),
        ((1, 0), (1, 0), c2 * beta * (p.nu - 1.0) * T, 0.0, True),
    ]
    if p.A_O0:
        slices.append(((0, 0), (0, 0), p.A_O0 / T, 0.0, False))

    edges = []
    for x_e, n_e in geom.impedance_ends:
        right = n_e > 0
        edges += [
            # c^2 * Mu * dn(v)
            ((1, 0), (1, 0), -c2 * xi * x_e * n_e, 0.0, right),
            ((0, 1), (1, 0), -c2 * beta * n_e * Ts, c2 * beta * n_e, right),
            # -(c/theta) * dt(u) * Mv
            ((0, 1), (1, 0), (c / p.theta) * xi * x_e, 0.0, right),
            ((0, 1), (0, 1), (c / p.theta) * beta * Ts, -(c / p.theta) * beta, right),
            # xi * (x.n) * (-dt(u) dt(v) + c^2 dx(u) dx(v))
            ((0, 1), (0, 1), -xi * x_e * n_e, 0.0, right),
            ((1, 0), (1, 0), c2 * xi * x_e * n_e, 0.0, right),
        ]
    return vol, slices, edges


def assemble_b(mesh: Mesh, p: FormulationParams, n_gauss: int = DEFAULT_NGAUSS) -> BandedMatrix:
    """Galerkin matrix B[i,j] = b(phi_j, phi_i) of the impedance form."""
    vol, slices, edges = _b_terms(mesh, p)
    return _assemble_bilinear(mesh, vol, slices, edges, n_gauss)


def assemble_b_star(mesh: Mesh, p: FormulationParams, n_gauss: int = DEFAULT_NGAUSS) -> BandedMatrix:
    """Galerkin matrix of the mixed impedance-Dirichlet form: the impedance
    form plus the Dirichlet-edge terms c^2 dn(u) Mv + A_SD L_D dt(u) dt(v)."""
    geom = mesh.geometry
    if not geom.mixed:
        raise ConfigurationError("assemble_b_star needs a geometry with a Dirichlet end")
    if p.A_SD is None:
        raise ConfigurationError("mixed assembly needs the A_SD penalty parameter")
    c2 = p.c * p.c
    Ts = p.t_star(geom.T)
    vol, slices, edges = _b_terms(mesh, p)
    for x_e, n_e in geom.dirichlet_ends:
        right = n_e > 0
        edges += [
            ((1, 0), (1, 0), -c2 * p.xi * x_e * n_e, 0.0, right),
            ((1, 0), (0, 1), -c2 * p.beta * n_e * Ts, c2 * p.beta * n_e, right),
            ((0, 1), (0, 1), p.A_SD * geom.L_D, 0.0, right),
        ]
    return _assemble_bilinear(mesh, vol, slices, edges, n_gauss)


def assemble_gram(mesh: Mesh, norm_kind: str, p: FormulationParams, n_gauss: int = DEFAULT_NGAUSS) -> BandedMatrix:
    """Gram matrix of an inner product: L2, H1scaled (T^-2|v|^2 + |v_t|^2 +
    c^2|v_x|^2 on Q), V (the coercivity graph norm) or Vstar (V plus the
    Dirichlet-trace terms)."""
    geom = mesh.geometry
    T, c2 = geom.T, p.c * p.c
    vol, slices, edges = [], [], []
    if norm_kind == "L2":
        vol = [((0, 0), (0, 0), 1.0, 0.0, 0.0)]
    elif norm_kind == "H1scaled":
        vol = [
            ((0, 0), (0, 0), T**-2, 0.0, 0.0),
            ((0, 1), (0, 1), 1.0, 0.0, 0.0),
            ((1, 0), (1, 0), c2, 0.0, 0.0),
        ]
    elif norm_kind in ("V", "Vstar"):
        vol = [
            ((0, 1), (0, 1), 1.0, 0.0, 0.0),
            ((1, 0), (1, 0), c2, 0.0, 0.0),
            ((0, 2), (0, 2), T * T, 0.0, 0.0),
            ((0, 2), (2, 0), -T * T * c2, 0.0, 0.0),
            ((2, 0), (0, 2), -T * T * c2, 0.0, 0.0),
            ((2, 0), (2, 0), T * T * c2 * c2, 0.0, 0.0),
        ]
        for top in (False, True):
            slices += [
                ((0, 1), (0, 1), T, 0.0, top),
                ((1, 0), (1, 0), c2 * T, 0.0, top),
            ]
        slices.append(((0, 0), (0, 0), 1.0 / T, 0.0, False))
        L_I = geom.L_I
        for x_e, n_e in geom.impedance_ends:
            right = n_e > 0
            edges += [
                ((0, 1), (0, 1), L_I, 0.0, right),
                ((1, 0), (1, 0), c2 * L_I, 0.0, right),
            ]
        if norm_kind == "Vstar":
            if not geom.mixed:
                raise ConfigurationError("Vstar norm needs a mixed geometry")
            for x_e, n_e in geom.dirichlet_ends:
                right = n_e > 0
                edges += [
                    ((0, 1), (0, 1), geom.L_D, 0.0, right),
                    ((1, 0), (1, 0), c2 * geom.L_D, 0.0, right),
                ]
    else:
        raise ConfigurationError(f"unknown norm kind {norm_kind!r}")
    return _assemble_bilinear(mesh, vol, slices, edges, n_gauss)


# ---------------------------------------------------------------------------
# linear assembly engine

def _assemble_linear(mesh: Mesh, vol_terms, bottom_terms, edge_terms, n_gauss: int) -> np.ndarray:
    dm = mesh.dofmap
    F = np.zeros(dm.ndof)
    G = mesh.element_dofs
    h_x, h_t = mesh.h_x, mesh.h_t

    if vol_terms:
        sx, st, w = _vol_rule(mesh, n_gauss)
        tabs = basis.tabulate(sx, st, {ov for ov, _ in vol_terms}, h_x, h_t)
        _, X, T = element_quad_geometry(mesh, n_gauss)
        vals = np.zeros((mesh.n_elements, 16))
        for ov, fn in vol_terms:
            coeff = np.broadcast_to(np.asarray(fn(X, T), dtype=float), X.shape)
            vals += np.einsum("eq,iq->ei", coeff * w[None, :], tabs[ov])
        np.add.at(F, G, vals)

    if bottom_terms:
        s, wq = gauss01(n_gauss)
        tabs = basis.tabulate(s, np.zeros_like(s), {ov for ov, _ in bottom_terms}, h_x, h_t)
        w, X = time_slice_geometry(mesh, n_gauss)
        ids = np.arange(mesh.N_x)
        vals = np.zeros((mesh.N_x, 16))
        for ov, fn in bottom_terms:
            coeff = np.broadcast_to(np.asarray(fn(X), dtype=float), X.shape)
            vals += np.einsum("eq,iq->ei", coeff * w[None, :], tabs[ov])
        np.add.at(F, G[ids], vals)

    for right in (False, True):
        terms = [tm for tm in edge_terms if tm[2] == right]
        if not terms:
            continue
        s, wq = gauss01(n_gauss)
        sx = np.full_like(s, 1.0 if right else 0.0)
        tabs = basis.tabulate(sx, s, {ov for ov, _, _ in terms}, h_x, h_t)
        w, T = space_slice_geometry(mesh, n_gauss)
        jx = mesh.N_x - 1 if right else 0
        ids = np.arange(mesh.N_t) * mesh.N_x + jx
        vals = np.zeros((mesh.N_t, 16))
        for ov, fn, _ in terms:
            coeff = np.broadcast_to(np.asarray(fn(T), dtype=float), T.shape)
            vals += np.einsum("eq,iq->ei", coeff * w[None, :], tabs[ov])
        np.add.at(F, G[ids], vals)

    return F


def _f_terms(mesh: Mesh, p: FormulationParams, prob: ProblemSpec):
    geom = mesh.geometry
    T = geom.T
    c, xi, beta = p.c, p.xi, p.beta
    Ts = p.t_star(T)
    c2 = c * c

    vol = [
        ((1, 0), lambda X, Tt: xi * X * prob.f(X, Tt)),
        ((0, 1), lambda X, Tt: -beta * (Tt - Ts) * prob.f(X, Tt)),
    ]
    if p.A_Q:
        aq = p.A_Q * T * T
        vol += [
            ((0, 2), lambda X, Tt: aq * prob.f(X, Tt)),
            ((2, 0), lambda X, Tt: -aq * c2 * prob.f(X, Tt)),
        ]

    bottom = [
        ((1, 0), lambda X: xi * X * prob.u1(X) + beta * Ts * c2 * prob.u0p(X)),
        ((0, 1), lambda X: xi * X * prob.u0p(X) + beta * Ts * prob.u1(X)),
    ]
    if p.A_O0:
        bottom.append(((0, 0), lambda X: (p.A_O0 / T) * prob.u0(X)))

    edges = []
    for x_e, n_e in geom.impedance_ends:
        right = n_e > 0
        g = prob.g_lo if n_e < 0 else prob.g_hi
        edges += [
            ((1, 0), (lambda Tt, g=g, x_e=x_e: c2 * xi * x_e * g(Tt)), right),
            ((0, 1), (lambda Tt, g=g: -c2 * beta * (Tt - Ts) * g(Tt)), right),
        ]
    return vol, bottom, edges


def assemble_F(mesh: Mesh, p: FormulationParams, prob: ProblemSpec, n_gauss: int = DEFAULT_NGAUSS) -> np.ndarray:
    """Load vector of the impedance problem."""
    vol, bottom, edges = _f_terms(mesh, p, prob)
    return _assemble_linear(mesh, vol, bottom, edges, n_gauss)


def assemble_F_star(mesh: Mesh, p: FormulationParams, prob: ProblemSpec, n_gauss: int = DEFAULT_NGAUSS) -> np.ndarray:
    """Load vector of the mixed problem; the Dirichlet-trace data enter only
    through the time derivative of g_D (a point has no tangential gradient)."""
    geom = mesh.geometry
    if not geom.mixed:
        raise ConfigurationError("assemble_F_star needs a geometry with a Dirichlet end")
    if p.A_SD is None:
        raise ConfigurationError("mixed assembly needs the A_SD penalty parameter")
    c2 = p.c * p.c
    Ts = p.t_star(geom.T)
    vol, bottom, edges = _f_terms(mesh, p, prob)
    gd_t = prob.g_D_t if prob.g_D_t is not None else (lambda t: 0.0 * np.asarray(t, float))
    for x_e, n_e in geom.dirichlet_ends:
        right = n_e > 0
        edges += [
            ((1, 0), (lambda Tt, n_e=n_e: -c2 * p.beta * (Tt - Ts) * gd_t(Tt) * n_e), right),
            ((0, 1), (lambda Tt, x_e=x_e, n_e=n_e: (p.xi * x_e * n_e + p.A_SD * geom.L_D) * gd_t(Tt)), right),
        ]
    return _assemble_linear(mesh, vol, bottom, edges, n_gauss)
