"""Solve, measure, certify: Galerkin solves, error norms against exact
solutions, best approximations, energy, the closed-form stability constants,
parameter validation, and the weak-residual consistency check."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import assembly
from .assembly import DiscreteField, interpolate
from .geometry import ConfigurationError, DX, Geometry, Mesh, VAL, build_mesh
from .linalg import cond2_estimate, lu_factor, solve
from .operators import FormulationParams
from .problems import ExactSolution, ProblemSpec, catalog, load_problem
from .quadrature import gauss01, split_rule, split_rule_1d

_D = 1  # space dimension of the shipped geometry


# ---------------------------------------------------------------------------
# closed-form constants and parameter validation

def beta_sharp(geom: Geometry, c: float, theta: float) -> float:
    """Smallest multiplier weight beta for which the xi=1, nu=2 parameter
    choice is certified coercive."""
    L_I, delta_I = geom.L_I, geom.delta_I
    r = L_I / (c * geom.T)
    return max(float(_D - 1), 1.0 + r, (theta + 1.0 / (theta * delta_I)) * r)


def coercivity_constant(p: FormulationParams, geom: Geometry) -> float:
    """alpha = min(xi*delta_I/4, A_Q, A_O0), with the extra xi*delta_D/2
    branch on mixed geometries."""
    branches = [p.xi * geom.delta_I / 4.0, p.A_Q, p.A_O0]
    if geom.mixed:
        branches.insert(1, p.xi * geom.delta_D / 2.0)
    return float(min(branches))


@dataclass(frozen=True)
class ContinuityConstants:
    C_b: float
    C_F: float
    C_qo: float
    C_b_star: float | None = None
    C_F_star: float | None = None


def continuity_constants(p: FormulationParams, geom: Geometry) -> ContinuityConstants:
    """The displayed continuity and quasi-optimality maxima, evaluated
    verbatim; starred variants are included for mixed geometries."""
    xi, beta, nu, th = p.xi, p.beta, p.nu, p.theta
    r = geom.L_I / (p.c * geom.T)  # L_I / (cT)
    C_b = math.sqrt(3.0) * max(
        beta + xi * _D + beta * nu,
        xi * r + beta + 2 * xi - _D * xi,
        beta * (nu - 1.0) + xi * r,
        (1.0 / th + 1.0) * (beta * nu / r + xi),
        2.0 * xi,
        p.A_Q,
        p.A_O0,
    )
    C_F = max(
        xi * r + beta * nu + p.A_Q,
        xi + beta * nu / r,
        p.A_O0,
        math.sqrt(2.0) * (beta * nu + xi * r),
    )
    inv = [1.0 / p.A_Q if p.A_Q > 0 else math.inf, 1.0 / p.A_O0 if p.A_O0 > 0 else math.inf]
    C_qo = math.sqrt(3.0) * max(*inv, 4.0 / geom.delta_I) * max(
        p.A_Q, p.A_O0, 3.0 * beta + _D, (1.0 + 1.0 / th) * (1.0 + 2.0 * beta / r)
    )
    C_b_star = C_F_star = None
    if geom.mixed and p.A_SD is not None:
        s = beta * (nu - 1.0) * p.c * geom.T / geom.L_D
        C_b_star = max(C_b, math.sqrt(3.0) * (s + xi), math.sqrt(3.0) * p.A_SD)
        C_F_star = max(C_F, xi + p.A_SD, 2.0 * xi, s)
    return ContinuityConstants(C_b, C_F, C_qo, C_b_star, C_F_star)


@dataclass(frozen=True)
class ParamReport:
    beta_threshold: float
    beta_ok: bool
    nu_ok: bool
    aq_ablation: bool
    ao0_ablation: bool
    asd_ok: bool | None
    coercive: bool
    messages: tuple[str, ...] = ()


def validate_params(p: FormulationParams, geom: Geometry) -> ParamReport:
    """Report (never raise) whether the parameters satisfy the certified
    coercivity conditions; A_Q=0 and A_O0=0 are flagged non-coercive
    ablations."""
    msgs = []
    nu_ok = p.nu > 1.0
    if not nu_ok:
        msgs.append(f"nu={p.nu} invalid: nu > 1 required")
        thr = math.inf
    else:
        r = geom.L_I / (p.c * geom.T)
        thr = p.xi * max(
            float(_D - 1),
            (r + 1.0) / (p.nu - 1.0),
            r * (p.theta + 1.0 / (geom.delta_I * p.theta)) / (p.nu - 1.0),
        )
    beta_ok = p.beta >= thr
    if not beta_ok:
        msgs.append(f"beta={p.beta} below coercivity threshold {thr}")
    aq_abl = p.A_Q == 0.0
    if aq_abl:
        msgs.append("A_Q=0: non-coercive ablation")
    ao0_abl = p.A_O0 == 0.0
    if ao0_abl:
        msgs.append("A_O0=0: non-coercive ablation (constants enter the kernel)")
    asd_ok = None
    if geom.mixed:
        asd_ok = p.A_SD is not None and p.A_SD >= p.xi
        if not asd_ok:
            msgs.append("mixed problem needs A_SD >= xi")
    coercive = beta_ok and nu_ok and not aq_abl and not ao0_abl and (asd_ok is not False)
    return ParamReport(thr, beta_ok, nu_ok, aq_abl, ao0_abl, asd_ok, coercive, tuple(msgs))


def energy_bound_constant(geom: Geometry, c: float, theta: float) -> float:
    """Constant K with E(t; v) <= K ||v||_V^2 uniformly in t."""
    return math.e * max(1.0 / (2.0 * geom.T), (c / geom.L_I) * (theta + 1.0 / theta))


# ---------------------------------------------------------------------------
# Galerkin solve

def _assemble_system(prob: ProblemSpec, mesh: Mesh, p: FormulationParams, n_gauss: int = assembly.DEFAULT_NGAUSS):
    if mesh.geometry.mixed:
        return (
            assembly.assemble_b_star(mesh, p, n_gauss),
            assembly.assemble_F_star(mesh, p, prob, n_gauss),
        )
    return assembly.assemble_b(mesh, p, n_gauss), assembly.assemble_F(mesh, p, prob, n_gauss)


def solve_galerkin(
    prob: ProblemSpec,
    mesh: Mesh,
    p: FormulationParams,
    allow_ablation: bool = False,
    n_gauss: int = assembly.DEFAULT_NGAUSS,
) -> DiscreteField:
    """Solve the discrete variational problem; refuses parameters without a
    coercivity certificate unless allow_ablation is set."""
    if not (p.c == prob.c and p.theta == prob.theta):
        raise ConfigurationError(
            f"params carry (c, theta)=({p.c}, {p.theta}) but the problem has "
            f"({prob.c}, {prob.theta})"
        )
    report = validate_params(p, mesh.geometry)
    if not report.coercive and not allow_ablation:
        raise ConfigurationError("; ".join(report.messages) or "parameters not certified coercive")
    B, F = _assemble_system(prob, mesh, p, n_gauss)
    return DiscreteField(mesh, solve(lu_factor(B), F))


def interpolate_exact(mesh: Mesh, exact: ExactSolution) -> DiscreteField:
    return interpolate(mesh, exact.u, exact.u_x, exact.u_t, exact.u_xt)


# ---------------------------------------------------------------------------
# error norms

def _kink_crossed(mesh: Mesh, kink):
    """Bool mask over elements whose interior is crossed by the kink line."""
    if kink is None:
        return np.zeros(mesh.n_elements, dtype=bool)
    ck, x0 = kink
    x_e, t_e = mesh.element_corners()
    corners = [
        (x_e, t_e),
        (x_e + mesh.h_x, t_e),
        (x_e, t_e + mesh.h_t),
        (x_e + mesh.h_x, t_e + mesh.h_t),
    ]
    phis = np.stack([x - ck * t + x0 for x, t in corners])
    return ~(np.all(phis >= 0, axis=0) | np.all(phis <= 0, axis=0))


def _exact_wave(exact: ExactSolution, c: float):
    """W(u) of the exact solution; identically zero (the distributional
    value) when the solution carries a kink line."""
    if exact.kink is not None:
        return lambda x, t: 0.0 * np.asarray(x, float)
    return lambda x, t: exact.u_tt(x, t) - c * c * exact.u_xx(x, t)


_ORDER_FN = {
    (0, 0): "u",
    (1, 0): "u_x",
    (0, 1): "u_t",
    (2, 0): "u_xx",
    (0, 2): "u_tt",
    (1, 1): "u_xt",
}


def _diff_sq_terms(u_h, prob: ProblemSpec, mesh: Mesh, kinds, n_quad: int):
    """Squared norms of (u_h - exact) for the requested kinds; u_h=None
    measures the exact solution itself.  Kink-crossed cells and cut boundary
    segments are integrated with split rules."""
    exact = prob.exact
    if exact is None:
        raise ConfigurationError(f"problem {prob.name!r} has no exact solution")
    geom = mesh.geometry
    c, T = prob.c, geom.T
    c2 = c * c
    Wex = _exact_wave(exact, c)
    kink = exact.kink

    need_orders = {(0, 0), (1, 0), (0, 1)}
    if "V" in kinds or "Vstar" in kinds:
        need_orders |= {(2, 0), (0, 2)}
    orders = sorted(need_orders)

    def diff_at(pts_x, pts_t, order):
        ex = getattr(exact, _ORDER_FN[order])(pts_x, pts_t)
        if u_h is None:
            return -np.asarray(ex, float)
        return u_h.eval(pts_x, pts_t, order) - ex

    # volume: vectorised over clean elements, split rules on crossed cells
    crossed = _kink_crossed(mesh, kink)
    w, X, Tt = assembly.element_quad_geometry(mesh, n_quad)
    vals = {}
    if u_h is not None:
        U = assembly.element_quad_values(u_h, orders, n_quad)
    for o in ((0, 0), (1, 0), (0, 1)):
        ex = np.asarray(getattr(exact, _ORDER_FN[o])(X, Tt), float)
        vals[o] = (U[o] - ex) if u_h is not None else -ex
    # W(e) needs the distributional W of the exact solution, not derivatives
    we = None
    if (2, 0) in need_orders:
        wex = np.asarray(Wex(X, Tt) + 0.0 * X, float)
        if u_h is not None:
            we = U[(0, 2)] - c2 * U[(2, 0)] - wex
        else:
            we = -wex

    keep = ~crossed
    wk = w[None, :] * keep[:, None]

    def vol(term):
        return float(np.sum(wk * term))

    sq = {k: 0.0 for k in kinds}
    if "L2" in sq:
        sq["L2"] += vol(vals[(0, 0)] ** 2)
    if "H1scaled" in sq:
        sq["H1scaled"] += vol(vals[(0, 0)] ** 2) / T**2
        sq["H1scaled"] += vol(vals[(0, 1)] ** 2) + c2 * vol(vals[(1, 0)] ** 2)
    for vk in ("V", "Vstar"):
        if vk in sq:
            sq[vk] += vol(vals[(0, 1)] ** 2) + c2 * vol(vals[(1, 0)] ** 2)
            sq[vk] += T * T * vol(we**2)

    if np.any(crossed):
        x_e, t_e = mesh.element_corners()
        for e in np.nonzero(crossed)[0]:
            cell = (x_e[e], x_e[e] + mesh.h_x, t_e[e], t_e[e] + mesh.h_t)
            pts, wq = split_rule(cell, kink, n_quad, n_quad)
            px, pt = pts[:, 0], pts[:, 1]
            e00 = diff_at(px, pt, (0, 0))
            e10 = diff_at(px, pt, (1, 0))
            e01 = diff_at(px, pt, (0, 1))
            if "L2" in sq:
                sq["L2"] += float(np.sum(wq * e00**2))
            if "H1scaled" in sq:
                sq["H1scaled"] += float(np.sum(wq * e00**2)) / T**2
                sq["H1scaled"] += float(np.sum(wq * (e01**2 + c2 * e10**2)))
            for vk in ("V", "Vstar"):
                if vk in sq:
                    wex = np.asarray(Wex(px, pt) + 0.0 * px, float)
                    if u_h is not None:
                        weq = u_h.eval(px, pt, (0, 2)) - c2 * u_h.eval(px, pt, (2, 0)) - wex
                    else:
                        weq = -wex
                    sq[vk] += float(np.sum(wq * (e01**2 + c2 * e10**2)))
                    sq[vk] += T * T * float(np.sum(wq * weq**2))

    # boundary traces (graph norms only)
    vkinds = [k for k in ("V", "Vstar") if k in sq]
    if vkinds:
        def line_sq(pts_x, pts_t, wq, weight_t, weight_x):
            et = diff_at(pts_x, pts_t, (0, 1))
            ex_ = diff_at(pts_x, pts_t, (1, 0))
            return weight_t * float(np.sum(wq * et**2)) + weight_x * float(np.sum(wq * ex_**2))

        def time_slice(t_val, weight_t, weight_x, with_mass=0.0):
            total = 0.0
            for jx in range(mesh.N_x):
                a = geom.x_lo + jx * mesh.h_x
                b = a + mesh.h_x
                cuts = []
                if kink is not None and kink[0] != 0:
                    cuts.append(kink[0] * t_val - kink[1])
                px, wq = split_rule_1d(a, b, cuts, n_quad)
                pt = np.full_like(px, t_val)
                total += line_sq(px, pt, wq, weight_t, weight_x)
                if with_mass:
                    e00 = diff_at(px, pt, (0, 0))
                    total += with_mass * float(np.sum(wq * e00**2))
            return total

        def space_slice(x_val, weight_t, weight_x):
            total = 0.0
            for it in range(mesh.N_t):
                a = it * mesh.h_t
                b = a + mesh.h_t
                cuts = []
                if kink is not None and kink[0] != 0:
                    cuts.append((x_val + kink[1]) / kink[0])
                pt, wq = split_rule_1d(a, b, cuts, n_quad)
                px = np.full_like(pt, x_val)
                total += line_sq(px, pt, wq, weight_t, weight_x)
            return total

        bsum = time_slice(T, T, c2 * T)
        bsum += time_slice(0.0, T, c2 * T, with_mass=1.0 / T)
        L_I = geom.L_I
        for x_e, _n in geom.impedance_ends:
            bsum += space_slice(x_e, L_I, c2 * L_I)
        for vk in vkinds:
            sq[vk] += bsum
        if "Vstar" in sq:
            for x_e, _n in geom.dirichlet_ends:
                sq["Vstar"] += space_slice(x_e, geom.L_D, c2 * geom.L_D)

    return sq


def error_norms(u_h: DiscreteField, prob: ProblemSpec, mesh: Mesh, kinds=("L2", "H1scaled", "V"), n_quad: int = 12):
    """{kind: {"abs": .., "rel": ..}} for u_h against the exact solution."""
    err = _diff_sq_terms(u_h, prob, mesh, kinds, n_quad)
    ref = _diff_sq_terms(None, prob, mesh, kinds, n_quad)
    out = {}
    for k in kinds:
        a = math.sqrt(max(err[k], 0.0))
        r = math.sqrt(max(ref[k], 0.0))
        out[k] = {"abs": a, "rel": a / r if r > 0 else math.inf}
    return out


# ---------------------------------------------------------------------------
# best approximation

def _params_for_norms(prob: ProblemSpec) -> FormulationParams:
    return FormulationParams(c=prob.c, theta=prob.theta)


def _gram_rhs(prob: ProblemSpec, mesh: Mesh, norm_kind: str, n_quad: int) -> np.ndarray:
    """rhs_i = (u_exact, phi_i)_X assembled by (kink-aware) quadrature."""
    from . import basis

    exact = prob.exact
    geom = mesh.geometry
    c, T = prob.c, geom.T
    c2 = c * c
    kink = exact.kink
    Wex = _exact_wave(exact, c)
    G = mesh.element_dofs
    rhs = np.zeros(mesh.dofmap.ndof)

    # (test order, weight, exact factor) per integral domain
    if norm_kind == "L2":
        vol_terms = [((0, 0), 1.0, exact.u)]
    elif norm_kind == "H1scaled":
        vol_terms = [
            ((0, 0), T**-2, exact.u),
            ((0, 1), 1.0, exact.u_t),
            ((1, 0), c2, exact.u_x),
        ]
    elif norm_kind in ("V", "Vstar"):
        vol_terms = [
            ((0, 1), 1.0, exact.u_t),
            ((1, 0), c2, exact.u_x),
            ((0, 2), T * T, Wex),
            ((2, 0), -c2 * T * T, Wex),
        ]
    else:
        raise ConfigurationError(f"unknown norm kind {norm_kind!r}")

    orders = {o for o, _, _ in vol_terms}
    crossed = _kink_crossed(mesh, kink)
    s, wg = gauss01(n_quad)
    SX, ST = np.meshgrid(s, s, indexing="ij")
    sx, st = SX.ravel(), ST.ravel()
    w = np.outer(wg, wg).ravel() * mesh.h_x * mesh.h_t
    tabs = basis.tabulate(sx, st, orders, mesh.h_x, mesh.h_t)
    _, X, Tt = assembly.element_quad_geometry(mesh, n_quad)
    vals = np.zeros((mesh.n_elements, 16))
    for o, cw, fn in vol_terms:
        coeff = cw * np.asarray(fn(X, Tt) + 0.0 * X, float)
        vals += np.einsum("eq,iq->ei", coeff * w[None, :], tabs[o])
    vals[crossed] = 0.0
    np.add.at(rhs, G, vals)

    if np.any(crossed):
        x_e, t_e = mesh.element_corners()
        for e in np.nonzero(crossed)[0]:
            cell = (x_e[e], x_e[e] + mesh.h_x, t_e[e], t_e[e] + mesh.h_t)
            pts, wq = split_rule(cell, kink, n_quad, n_quad)
            px, pt = pts[:, 0], pts[:, 1]
            sxe = (px - x_e[e]) / mesh.h_x
            ste = (pt - t_e[e]) / mesh.h_t
            tabe = basis.tabulate(sxe, ste, orders, mesh.h_x, mesh.h_t)
            acc = np.zeros(16)
            for o, cw, fn in vol_terms:
                coeff = cw * np.asarray(fn(px, pt) + 0.0 * px, float)
                acc += tabe[o] @ (coeff * wq)
            np.add.at(rhs, G[e], acc)

    if norm_kind in ("V", "Vstar"):
        def add_time_slice(t_val, top):
            ids = ((mesh.N_t - 1) * mesh.N_x if top else 0) + np.arange(mesh.N_x)
            for k, eid in enumerate(ids):
                a = geom.x_lo + k * mesh.h_x
                cuts = [kink[0] * t_val - kink[1]] if kink else []
                px, wq = split_rule_1d(a, a + mesh.h_x, cuts, n_quad)
                pt = np.full_like(px, t_val)
                sxe = (px - a) / mesh.h_x
                ste = np.full_like(px, 1.0 if top else 0.0)
                terms = [((0, 1), T, exact.u_t), ((1, 0), c2 * T, exact.u_x)]
                if not top:
                    terms.append(((0, 0), 1.0 / T, exact.u))
                tabe = basis.tabulate(sxe, ste, {o for o, _, _ in terms}, mesh.h_x, mesh.h_t)
                acc = np.zeros(16)
                for o, cw, fn in terms:
                    acc += tabe[o] @ (cw * np.asarray(fn(px, pt) + 0.0 * px, float) * wq)
                np.add.at(rhs, G[eid], acc)

        def add_space_slice(x_val, right, weight):
            jx = mesh.N_x - 1 if right else 0
            for it in range(mesh.N_t):
                eid = it * mesh.N_x + jx
                a = it * mesh.h_t
                cuts = [(x_val + kink[1]) / kink[0]] if kink and kink[0] != 0 else []
                pt, wq = split_rule_1d(a, a + mesh.h_t, cuts, n_quad)
                px = np.full_like(pt, x_val)
                ste = (pt - a) / mesh.h_t
                sxe = np.full_like(pt, 1.0 if right else 0.0)
                tabe = basis.tabulate(sxe, ste, {(0, 1), (1, 0)}, mesh.h_x, mesh.h_t)
                acc = tabe[(0, 1)] @ (weight * np.asarray(exact.u_t(px, pt) + 0.0 * px, float) * wq)
                acc += tabe[(1, 0)] @ (c2 * weight * np.asarray(exact.u_x(px, pt) + 0.0 * px, float) * wq)
                np.add.at(rhs, G[eid], acc)

        add_time_slice(T, top=True)
        add_time_slice(0.0, top=False)
        for x_e, n_e in geom.impedance_ends:
            add_space_slice(x_e, n_e > 0, geom.L_I)
        if norm_kind == "Vstar":
            for x_e, n_e in geom.dirichlet_ends:
                add_space_slice(x_e, n_e > 0, geom.L_D)

    return rhs


def best_approximation(prob: ProblemSpec, mesh: Mesh, norm_kind: str, n_quad: int = 12):
    """X-orthogonal projection of the exact solution onto the discrete space
    and its error: ((field, {"abs", "rel"}))."""
    p = _params_for_norms(prob)
    Gm = assembly.assemble_gram(mesh, norm_kind, p)
    rhs = _gram_rhs(prob, mesh, norm_kind, n_quad)
    proj = DiscreteField(mesh, solve(lu_factor(Gm), rhs))
    err = error_norms(proj, prob, mesh, (norm_kind,), n_quad)[norm_kind]
    return proj, err


@dataclass(frozen=True)
class QORatio:
    ratio: float
    bound: float  # C_b / alpha_b


def quasi_optimality_ratio(prob: ProblemSpec, mesh: Mesh, p: FormulationParams, norm_kind: str = "V", n_quad: int = 12) -> QORatio:
    u_h = solve_galerkin(prob, mesh, p, allow_ablation=True)
    galerkin = error_norms(u_h, prob, mesh, (norm_kind,), n_quad)[norm_kind]["abs"]
    _, best = best_approximation(prob, mesh, norm_kind, n_quad)
    alpha = coercivity_constant(p, mesh.geometry)
    cc = continuity_constants(p, mesh.geometry)
    bound = cc.C_b / alpha if alpha > 0 else math.inf
    return QORatio(galerkin / best["abs"] if best["abs"] > 0 else math.inf, bound)


# ---------------------------------------------------------------------------
# energy

def energy(u, t: float, c: float, geom: Geometry | None = None, n_quad: int = 12) -> float:
    """E(t; u) = (|u_t|^2 + c^2 |u_x|^2)/2 over the space slice at time t,
    for a DiscreteField or an ExactSolution (the latter needs geom)."""
    from . import basis

    if isinstance(u, DiscreteField):
        mesh = u.mesh
        it = min(max(int(t / mesh.h_t), 0), mesh.N_t - 1)
        st = (t - it * mesh.h_t) / mesh.h_t
        s, w = gauss01(n_quad)
        tabs = basis.tabulate(s, np.full_like(s, st), [(0, 1), (1, 0)], mesh.h_x, mesh.h_t)
        ids = it * mesh.N_x + np.arange(mesh.N_x)
        C = u.coeffs[u.mesh.element_dofs[ids]]
        ut = C @ tabs[(0, 1)]
        ux = C @ tabs[(1, 0)]
        return 0.5 * float(np.sum(w[None, :] * mesh.h_x * (ut**2 + c * c * ux**2)))
    if isinstance(u, ExactSolution):
        if geom is None:
            raise ConfigurationError("energy of an exact solution needs geom")
        cuts = [u.kink[0] * t - u.kink[1]] if u.kink else []
        n_panels = 64
        edges = np.linspace(geom.x_lo, geom.x_hi, n_panels + 1)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            px, wq = split_rule_1d(a, b, cuts, n_quad)
            pt = np.full_like(px, t)
            ut = np.asarray(u.u_t(px, pt), float)
            ux = np.asarray(u.u_x(px, pt), float)
            total += 0.5 * float(np.sum(wq * (ut**2 + c * c * ux**2)))
        return total
    raise TypeError(f"cannot compute energy of {type(u).__name__}")


# ---------------------------------------------------------------------------
# random-field certificates

def random_fields(mesh: Mesh, n: int, seed: int = 0, gram=None):
    """n unit-variance random coefficient fields, X-normalised when a Gram
    matrix is supplied; deterministic in the seed."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        v = rng.standard_normal(mesh.dofmap.ndof)
        if gram is not None:
            v = v / math.sqrt(float(v @ gram.matvec(v)))
        out.append(DiscreteField(mesh, v))
    return out


def rayleigh_min(B, G, n_fields: int, seed: int = 0) -> float:
    """min over random fields of b(v,v) / ||v||_X^2."""
    rng = np.random.default_rng(seed)
    n = B.n
    best = math.inf
    for _ in range(n_fields):
        v = rng.standard_normal(n)
        best = min(best, float(v @ B.matvec(v)) / float(v @ G.matvec(v)))
    return best


def continuity_max(B, G, n_pairs: int, seed: int = 0) -> float:
    """max over random pairs of |b(u,v)| / (||u||_X ||v||_X)."""
    rng = np.random.default_rng(seed)
    n = B.n
    worst = 0.0
    for _ in range(n_pairs):
        u = rng.standard_normal(n)
        v = rng.standard_normal(n)
        num = abs(float(v @ B.matvec(u)))
        den = math.sqrt(float(u @ G.matvec(u)) * float(v @ G.matvec(v)))
        worst = max(worst, num / den)
    return worst


# ---------------------------------------------------------------------------
# weak residual of the generalised-solution variational identity

def weak_residual(u_h: DiscreteField, prob: ProblemSpec, mesh: Mesh, n_test: int = 20, seed: int = 0, n_quad: int = 12) -> float:
    """Max over random test fields v with v(.,T)=0 of the relative gap in
    the first-order weak form of the IBVP.

    The trace constraint is enforced by zeroing the value and x-derivative
    DOFs on the final time level (those are exactly the DOFs that set the
    t=T trace of a Hermite field).  The gap is normalised by the sum of the
    magnitudes of the constituent integrals.
    """
    geom = mesh.geometry
    c, th = prob.c, prob.theta
    dm = mesh.dofmap
    rng = np.random.default_rng(seed)
    p = _params_for_norms(prob)
    Gv = assembly.assemble_gram(mesh, "V", p)
    top_idx = np.concatenate(
        [dm.index(mesh.N_t, np.arange(mesh.N_x + 1), kind) for kind in (VAL, DX)]
    )

    w, X, Tt = assembly.element_quad_geometry(mesh, n_quad)
    U = assembly.element_quad_values(u_h, [(0, 1), (1, 0)], n_quad)
    fX = np.asarray(prob.f(X, Tt) + 0.0 * X, float)
    wt, Tb = assembly.space_slice_geometry(mesh, n_quad)
    wx, Xb = assembly.time_slice_geometry(mesh, n_quad)

    worst = 0.0
    for _ in range(n_test):
        vc = rng.standard_normal(dm.ndof)
        vc[top_idx] = 0.0
        vc /= math.sqrt(float(vc @ Gv.matvec(vc)))
        v = DiscreteField(mesh, vc)
        V = assembly.element_quad_values(v, [(0, 0), (0, 1), (1, 0)], n_quad)
        pieces = [
            float(np.sum(w * (-U[(0, 1)] * V[(0, 1)] + c * c * U[(1, 0)] * V[(1, 0)]))),
            -float(np.sum(w * fX * V[(0, 0)])),
        ]
        V0 = assembly.time_slice_values(v, [(0, 0)], n_quad, top=False)
        u1b = np.asarray(prob.u1(Xb) + 0.0 * Xb, float)
        pieces.append(-float(np.sum(wx * u1b * V0[(0, 0)])))
        for x_e, n_e in geom.impedance_ends:
            right = n_e > 0
            Ue = assembly.space_slice_values(u_h, [(0, 1)], n_quad, right=right)
            Ve = assembly.space_slice_values(v, [(0, 0)], n_quad, right=right)
            pieces.append((c / th) * float(np.sum(wt * Ue[(0, 1)] * Ve[(0, 0)])))
            g = prob.g_lo if n_e < 0 else prob.g_hi
            gb = np.asarray(g(Tb) + 0.0 * Tb, float)
            pieces.append(-c * c * float(np.sum(wt * gb * Ve[(0, 0)])))
        gap = abs(sum(pieces))
        scale = sum(abs(q) for q in pieces)
        worst = max(worst, gap / scale if scale > 0 else 0.0)
    return worst


# ---------------------------------------------------------------------------
# studies

def convergence_order(hs, errors, n_fit: int = 4) -> float:
    """Least-squares slope of log(error) vs log(h) over the finest n_fit
    meshes."""
    hs = np.asarray(hs, float)
    errors = np.asarray(errors, float)
    order = np.argsort(hs)[: max(2, min(n_fit, hs.size))]
    lh, le = np.log(hs[order]), np.log(errors[order])
    return float(np.polyfit(lh, le, 1)[0])


_CSV_COLUMNS = (
    "H", "Hx", "Ht", "Dofs",
    "L2errors", "H1errors", "Verrors",
    "L2projErrors", "H1projErrors", "VprojErrors",
    "QOconstEst", "Kconds",
)

_KIND_BY_COL = {"L2errors": "L2", "H1errors": "H1scaled", "Verrors": "V"}
_PROJ_BY_COL = {"L2projErrors": "L2", "H1projErrors": "H1scaled", "VprojErrors": "V"}


def study_row(
    prob: ProblemSpec,
    geom: Geometry,
    size,
    p: FormulationParams,
    with_best: bool = True,
    with_cond: bool = False,
    n_quad: int = 12,
    n_gauss: int = assembly.DEFAULT_NGAUSS,
    cond_seed: int = 0,
) -> dict:
    """One mesh run of a study; returns a dict with the CSV column schema."""
    N_x, N_t = size
    mesh = build_mesh(geom, N_x, N_t)
    B, F = _assemble_system(prob, mesh, p, n_gauss)
    factors = lu_factor(B)
    u_h = DiscreteField(mesh, solve(factors, F))
    errs = error_norms(u_h, prob, mesh, ("L2", "H1scaled", "V"), n_quad)
    alpha = coercivity_constant(p, geom)
    cc = continuity_constants(p, geom)
    row = {
        "H": math.hypot(mesh.h_x, mesh.h_t),
        "Hx": mesh.h_x,
        "Ht": mesh.h_t,
        "Dofs": mesh.dofmap.ndof,
        "QOconstEst": cc.C_b / alpha if alpha > 0 else math.inf,
        "Kconds": math.nan,
    }
    for col, kind in _KIND_BY_COL.items():
        row[col] = errs[kind]["rel"]
    for col, kind in _PROJ_BY_COL.items():
        row[col] = math.nan
    if with_best:
        for col, kind in _PROJ_BY_COL.items():
            _, err = best_approximation(prob, mesh, kind, n_quad)
            row[col] = err["rel"]
    if with_cond:
        row["Kconds"] = float(cond2_estimate(B, factors, seed=cond_seed))
    return row


def _row_worker(args):
    selector, geom_args, size, p_kwargs, with_best, with_cond, n_quad = args
    prob, geom = resolve_problem(selector)
    if geom_args is not None:
        geom = Geometry(*geom_args)
    p = FormulationParams(**p_kwargs)
    return study_row(prob, geom, size, p, with_best, with_cond, n_quad)


def convergence_study(
    prob: ProblemSpec,
    geom: Geometry,
    sizes,
    p: FormulationParams,
    with_best: bool = True,
    with_cond: bool = False,
    n_quad: int = 12,
    jobs: int = 1,
    selector: str | None = None,
) -> list[dict]:
    """Rows of the convergence CSV, in the order of `sizes`.  With jobs > 1
    and a problem selector the mesh runs fan out over a process pool; rows
    are still returned in input order."""
    sizes = list(sizes)
    if jobs > 1 and selector is not None:
        geom_args = (geom.x_lo, geom.x_hi, geom.T, geom.dirichlet_end)
        p_kwargs = dict(
            xi=p.xi, beta=p.beta, nu=p.nu, A_Q=p.A_Q, A_O0=p.A_O0,
            A_SD=p.A_SD, c=p.c, theta=p.theta,
        )
        args = [(selector, geom_args, s, p_kwargs, with_best, with_cond, n_quad) for s in sizes]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_row_worker, args))
    return [study_row(prob, geom, s, p, with_best, with_cond, n_quad) for s in sizes]


def resolve_problem(selector: str):
    """Problem id (p1/p2/p3) or path to a JSON config -> (spec, geometry)."""
    from .problems import DEFAULT_GEOMETRY

    if selector.lower().endswith(".json"):
        return load_problem(selector)
    return catalog(selector), DEFAULT_GEOMETRY


def exact_energy_curve(exact: ExactSolution, geom: Geometry, c: float, ts, n_panels: int = 64, n_quad: int = 10) -> np.ndarray:
    """E(t; exact) at each sample time, vectorised over kink-free solutions."""
    ts = np.asarray(ts, float)
    if exact.kink is None:
        s, w = gauss01(n_quad)
        edges = np.linspace(geom.x_lo, geom.x_hi, n_panels + 1)
        px = (edges[:-1, None] + np.diff(edges)[:, None] * s[None, :]).ravel()
        wq = (np.diff(edges)[:, None] * w[None, :]).ravel()
        X, Tt = np.meshgrid(px, ts, indexing="ij")
        ut = np.asarray(exact.u_t(X, Tt), float)
        ux = np.asarray(exact.u_x(X, Tt), float)
        return 0.5 * np.einsum("q,qk->k", wq, ut**2 + c * c * ux**2)
    return np.array([energy(exact, float(t), c, geom=geom, n_quad=n_quad) for t in ts])


def energy_timeseries(prob: ProblemSpec, geom: Geometry, N: int, p: FormulationParams, n_samples: int = 768, n_quad: int = 12):
    """(sample times, relative energy error of the Galerkin solution)."""
    mesh = build_mesh(geom, N, N)
    u_h = solve_galerkin(prob, mesh, p, allow_ablation=True)
    ts = np.linspace(0.0, geom.T, n_samples)
    exact_e = exact_energy_curve(prob.exact, geom, prob.c, ts)
    err = np.empty(n_samples)
    for k, t in enumerate(ts):
        eh = energy(u_h, float(t), prob.c, n_quad=n_quad)
        err[k] = abs(eh - exact_e[k]) / exact_e[k] if exact_e[k] > 0 else abs(eh - exact_e[k])
    return ts, err


def energy_convergence(prob: ProblemSpec, geom: Geometry, N_list, p: FormulationParams, n_samples: int = 768, n_quad: int = 12) -> list[dict]:
    """Rows (H, EnergyNormErrors, VprojErrors): sup-in-time energy of the
    Galerkin error over sup exact energy, and the squared relative V-norm
    best-approximation error."""
    ts = np.linspace(0.0, geom.T, n_samples)
    sup_exact = float(np.max(exact_energy_curve(prob.exact, geom, prob.c, ts)))
    rows = []
    for N in N_list:
        mesh = build_mesh(geom, N, N)
        u_h = solve_galerkin(prob, mesh, p, allow_ablation=True)
        sup_err = max(_error_energy(u_h, prob, float(t), n_quad) for t in ts)
        _, best = best_approximation(prob, mesh, "V", n_quad)
        rows.append(
            {
                "H": math.hypot(mesh.h_x, mesh.h_t),
                "EnergyNormErrors": sup_err / sup_exact if sup_exact > 0 else math.inf,
                "VprojErrors": best["rel"] ** 2,
            }
        )
    return rows


def _error_energy(u_h: DiscreteField, prob: ProblemSpec, t: float, n_quad: int = 12) -> float:
    """E(t; u_h - u) by quadrature of the pointwise difference."""
    from . import basis

    mesh = u_h.mesh
    exact = prob.exact
    c = prob.c
    it = min(max(int(t / mesh.h_t), 0), mesh.N_t - 1)
    st = (t - it * mesh.h_t) / mesh.h_t
    s, w = gauss01(n_quad)
    tabs = basis.tabulate(s, np.full_like(s, st), [(0, 1), (1, 0)], mesh.h_x, mesh.h_t)
    ids = it * mesh.N_x + np.arange(mesh.N_x)
    C = u_h.coeffs[mesh.element_dofs[ids]]
    xs = mesh.geometry.x_lo + mesh.h_x * np.arange(mesh.N_x)
    X = xs[:, None] + s[None, :] * mesh.h_x
    Tt = np.full_like(X, t)
    et = C @ tabs[(0, 1)] - np.asarray(exact.u_t(X, Tt), float)
    ex = C @ tabs[(1, 0)] - np.asarray(exact.u_x(X, Tt), float)
    return 0.5 * float(np.sum(w[None, :] * mesh.h_x * (et**2 + c * c * ex**2)))
