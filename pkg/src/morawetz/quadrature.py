"""Gauss-Legendre rules on [0,1], tensor rules on cells, and kink-aware
composite rules for integrands with a derivative jump along a straight line."""

from __future__ import annotations

import numpy as np

from .geometry import ConfigurationError

# 7-point degree-5 rule on the unit triangle, \'(barycentric abscissae, weight)\'
# with weights normalised to sum to 1 (multiply by the triangle area).
_TRI7_A = 0.059715871789770
_TRI7_B = 0.470142064105115
_TRI7_C = 0.797426985353087
_TRI7_D = 0.101286507323456
_TRI7 = [
    ((1 / 3, 1 / 3, 1 / 3), 0.225),
    ((_TRI7_A, _TRI7_B, _TRI7_B), 0.132394152788506),
    ((_TRI7_B, _TRI7_A, _TRI7_B), 0.132394152788506),
    ((_TRI7_B, _TRI7_B, _TRI7_A), 0.132394152788506),
    ((_TRI7_C, _TRI7_D, _TRI7_D), 0.125939180544827),
    ((_TRI7_D, _TRI7_C, _TRI7_D), 0.125939180544827),
    ((_TRI7_D, _TRI7_D, _TRI7_C), 0.125939180544827),
]


def gauss01(n: int):
    """n-point Gauss-Legendre nodes and weights on [0,1].

    Exact for polynomials of degree <= 2n-1; weights sum to 1.
    """
    if not 1 <= n <= 32:
        raise ConfigurationError(f"gauss01 supports 1 <= n <= 32, got {n}")
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def element_rule(n_x: int, n_t: int, cell=None):
    """Tensor Gauss rule with n_x*n_t points.

    Without a cell the rule lives on [0,1]^2 (weights sum to 1).  With
    cell=(x0, x1, t0, t1) the points are physical and the weights sum to the
    cell area.  Returns (points (n,2), weights (n,)).
    """
    sx, wx = gauss01(n_x)
    st, wt = gauss01(n_t)
    X, T = np.meshgrid(sx, st, indexing="ij")
    W = np.outer(wx, wt)
    pts = np.column_stack([X.ravel(), T.ravel()])
    w = W.ravel().copy()
    if cell is not None:
        x0, x1, t0, t1 = cell
        pts = np.column_stack([x0 + (x1 - x0) * pts[:, 0], t0 + (t1 - t0) * pts[:, 1]])
        w *= (x1 - x0) * (t1 - t0)
    return pts, w


def triangle_rule(v0, v1, v2):
    """Degree-5 7-point rule mapped to the triangle (v0, v1, v2)."""
    v0 = np.asarray(v0, float)
    v1 = np.asarray(v1, float)
    v2 = np.asarray(v2, float)
    area = 0.5 * abs(
        (v1[0] - v0[0]) * (v2[1] - v0[1]) - (v2[0] - v0[0]) * (v1[1] - v0[1])
    )
    pts = np.array([l0 * v0 + l1 * v1 + l2 * v2 for (l0, l1, l2), _ in _TRI7])
    w = area * np.array([wq for _, wq in _TRI7])
    return pts, w


def _clip_halfplane(poly, phi, keep_positive):
    """Sutherland-Hodgman clip of polygon `poly` against phi >= 0 (or <= 0)."""
    sign = 1.0 if keep_positive else -1.0
    out = []
    n = len(poly)
    for k in range(n):
        p, q = poly[k], poly[(k + 1) % n]
        fp, fq = sign * phi(p), sign * phi(q)
        if fp >= 0:
            out.append(p)
        if (fp > 0 > fq) or (fp < 0 < fq):
            lam = fp / (fp - fq)
            out.append((p[0] + lam * (q[0] - p[0]), p[1] + lam * (q[1] - p[1])))
    return out


def _polygon_rule(poly):
    """Fan-triangulate a convex polygon and apply the triangle rule."""
    pts, w = [], []
    for k in range(1, len(poly) - 1):
        p, wq = triangle_rule(poly[0], poly[k], poly[k + 1])
        pts.append(p)
        w.append(wq)
    if not pts:
        return np.empty((0, 2)), np.empty(0)
    return np.vstack(pts), np.concatenate(w)


def split_rule(cell, line, n_x: int = 6, n_t: int = 6):
    """Composite rule on `cell` = (x0, x1, t0, t1) that resolves a straight
    kink line {x - c*t + x0 = 0} given as line = (c, x0).

    If the line misses the open cell the plain tensor rule is returned.
    Otherwise the cell is split along the line, each side is fan-triangulated
    and integrated with 7-point triangle rules.  Subdivision does not change
    polynomial integrals, so any low-degree integrand is still integrated
    exactly.
    """
    cline, xline = line
    x0, x1, t0, t1 = cell

    def phi(p):
        return p[0] - cline * p[1] + xline

    corners = [(x0, t0), (x1, t0), (x1, t1), (x0, t1)]
    vals = [phi(p) for p in corners]
    if all(v >= 0 for v in vals) or all(v <= 0 for v in vals):
        return element_rule(n_x, n_t, cell=cell)

    pts, w = [], []
    for keep_positive in (True, False):
        poly = _clip_halfplane(corners, phi, keep_positive)
        if len(poly) >= 3:
            p, wq = _polygon_rule(poly)
            pts.append(p)
            w.append(wq)
    return np.vstack(pts), np.concatenate(w)


def split_rule_1d(a: float, b: float, cuts, n: int = 12):
    """Composite Gauss rule on [a,b], subdividing at any interior cut points."""
    knots = [a] + sorted(c for c in cuts if a < c < b) + [b]
    s, ws = gauss01(n)
    pts, w = [], []
    for lo, hi in zip(knots[:-1], knots[1:]):
        pts.append(lo + (hi - lo) * s)
        w.append((hi - lo) * ws)
    return np.concatenate(pts), np.concatenate(w)
