"""Cubic Hermite shape functions and their tensor products (Bogner-Fox-Schmit).

Reference interval is [0,1].  Derivative DOFs carry *physical* derivative
value 1 at their node, so the reference slope shapes are scaled by the mesh
width when mapped to a physical element.  Assembled fields are C1 across
element interfaces.
"""

from __future__ import annotations

import numpy as np

# Rows: shapes H0..H3, columns: coefficients of 1, s, s^2, s^3.
# H0, H2 interpolate the values at s=0, 1; H1, H3 the slopes.
_H = np.array(
    [
        [1.0, 0.0, -3.0, 2.0],
        [0.0, 1.0, -2.0, 1.0],
        [0.0, 0.0, 3.0, -2.0],
        [0.0, 0.0, -1.0, 1.0],
    ]
)

# _H_DER[r][k] = coefficients of the r-th derivative of H_k
_H_DER = [_H]
for _ in range(3):
    prev = _H_DER[-1]
    der = np.zeros_like(prev)
    der[:, :-1] = prev[:, 1:] * np.arange(1, prev.shape[1])
    _H_DER.append(der)

# Local 2D ordering: local = 4*corner + kind, corners in (x,t) offsets.
LOCAL_CORNERS = ((0, 0), (1, 0), (0, 1), (1, 1))
# kind -> (derivative DOF in x?, derivative DOF in t?)
_KIND_XT = ((0, 0), (1, 0), (0, 1), (1, 1))


def hermite1d(k: int, s, order: int = 0):
    """Reference cubic Hermite shape H_k (k=0..3) or its s-derivative.

    H0(0)=1, H1'(0)=1, H2(1)=1, H3'(1)=1 and all other nodal value/slope
    pairs vanish.
    """
    c = _H_DER[order][k]
    s = np.asarray(s, dtype=float)
    return c[0] + s * (c[1] + s * (c[2] + s * c[3]))


def _factor1d(corner: int, deriv_dof: int, s, order: int, h: float):
    """One-dimensional physical factor of a tensor shape.

    corner in {0,1} selects the node, deriv_dof in {0,1} selects value vs
    slope DOF.  The result includes the chain-rule factor h**-order and the
    h scaling that normalises slope DOFs to physical derivative 1.
    """
    return hermite1d(2 * corner + deriv_dof, s, order) * h ** (deriv_dof - order)


def shape2d(local: int, ref_point, order, h_x: float, h_t: float):
    """Physical value of tensor shape `local` (0..15) at reference point
    (s_x, s_t) in [0,1]^2, differentiated `order` = (a, b) times in (x, t)."""
    corner, kind = divmod(local, 4)
    cx, ct = LOCAL_CORNERS[corner]
    kx, kt = _KIND_XT[kind]
    s_x, s_t = ref_point
    a, b = order
    return _factor1d(cx, kx, s_x, a, h_x) * _factor1d(ct, kt, s_t, b, h_t)


def tabulate(s_x, s_t, orders, h_x: float, h_t: float) -> dict:
    """Tables {order: array (16, npts)} of all element shapes at the points
    (s_x[q], s_t[q]);  s_x and s_t must have equal length."""
    s_x = np.asarray(s_x, dtype=float)
    s_t = np.asarray(s_t, dtype=float)
    out = {}
    for a, b in orders:
        tab = np.empty((16, s_x.size))
        for local in range(16):
            tab[local] = shape2d(local, (s_x, s_t), (a, b), h_x, h_t)
        out[(a, b)] = tab
    return out
