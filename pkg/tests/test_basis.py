import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from morawetz.basis import hermite1d, shape2d, tabulate

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def test_nodal_conditions():
    # value shapes
    assert hermite1d(0, 0.0) == 1.0
    assert hermite1d(0, 1.0) == 0.0
    assert hermite1d(2, 1.0) == 1.0
    assert hermite1d(2, 0.0) == 0.0
    # slope shapes
    assert hermite1d(1, 0.0) == 0.0
    assert hermite1d(1, 0.0, order=1) == 1.0
    assert hermite1d(3, 1.0) == 0.0
    assert hermite1d(3, 1.0, order=1) == 1.0
    # all other nodal pairs vanish
    for k in range(4):
        for s, order in ((0.0, 0), (0.0, 1), (1.0, 0), (1.0, 1)):
            expected = 1.0 if (k == 2 * s + order) else 0.0
            assert hermite1d(k, s, order) == pytest.approx(expected, abs=1e-15)


def test_symmetry_at_midpoint():
    assert hermite1d(0, 0.5) == pytest.approx(0.5)
    assert hermite1d(0, 0.5) == pytest.approx(hermite1d(2, 0.5))


@given(s=unit)
def test_value_shapes_partition_of_unity(s):
    assert hermite1d(0, s) + hermite1d(2, s) == pytest.approx(1.0, abs=1e-14)


def test_shape2d_nodal_value():
    assert shape2d(0, (0.0, 0.0), (0, 0), 0.5, 0.25) == 1.0


def test_shape2d_derivative_dof_normalisation():
    # x-slope DOF at node (0,0): physical d/dx equals 1 there for any h
    assert shape2d(1, (0.0, 0.0), (1, 0), 0.5, 0.25) == pytest.approx(1.0)
    assert shape2d(1, (0.0, 0.0), (0, 0), 0.5, 0.25) == 0.0


@given(sx=unit, st_=unit)
def test_shape2d_value_partition_of_unity(sx, st_):
    total = sum(shape2d(4 * corner, (sx, st_), (0, 0), 0.3, 0.7) for corner in range(4))
    assert total == pytest.approx(1.0, abs=1e-13)


def _interp_dofs(f, fx, ft, fxt, x0, t0, h_x, h_t):
    """Element DOF vector of the Hermite interpolant of f."""
    dofs = np.empty(16)
    for corner, (cx, ct) in enumerate(((0, 0), (1, 0), (0, 1), (1, 1))):
        x, t = x0 + cx * h_x, t0 + ct * h_t
        dofs[4 * corner + 0] = f(x, t)
        dofs[4 * corner + 1] = fx(x, t)
        dofs[4 * corner + 2] = ft(x, t)
        dofs[4 * corner + 3] = fxt(x, t)
    return dofs


def test_interpolation_reproduces_bicubics():
    rng = np.random.default_rng(7)
    c = rng.standard_normal((4, 4))
    f = lambda x, t: np.polynomial.polynomial.polyval2d(x, t, c)
    cx = np.polynomial.polynomial.polyder(c, axis=0)
    ct = np.polynomial.polynomial.polyder(c, axis=1)
    cxt = np.polynomial.polynomial.polyder(cx, axis=1)
    fx = lambda x, t: np.polynomial.polynomial.polyval2d(x, t, cx)
    ft = lambda x, t: np.polynomial.polynomial.polyval2d(x, t, ct)
    fxt = lambda x, t: np.polynomial.polynomial.polyval2d(x, t, cxt)

    x0, t0, h_x, h_t = -0.3, 0.2, 0.55, 0.4
    dofs = _interp_dofs(f, fx, ft, fxt, x0, t0, h_x, h_t)
    pts = rng.uniform(0.0, 1.0, size=(25, 2))
    for sx, st_ in pts:
        val = sum(dofs[L] * shape2d(L, (sx, st_), (0, 0), h_x, h_t) for L in range(16))
        assert_allclose(val, f(x0 + sx * h_x, t0 + st_ * h_t), rtol=1e-12, atol=1e-12)


def test_c1_patch_continuity():
    # 2x2 patch sharing nodal DOFs: value and both first derivatives agree
    # from the two sides of each interior edge.
    rng = np.random.default_rng(3)
    h_x, h_t = 0.4, 0.3
    node_dofs = {(i, j): rng.standard_normal(4) for i in range(3) for j in range(3)}

    def elem_dofs(ei, ej):
        out = np.empty(16)
        for corner, (cx, ct) in enumerate(((0, 0), (1, 0), (0, 1), (1, 1))):
            out[4 * corner : 4 * corner + 4] = node_dofs[(ei + ct, ej + cx)]
        return out

    def value(ei, ej, sx, st_, order):
        dofs = elem_dofs(ei, ej)
        return sum(dofs[L] * shape2d(L, (sx, st_), order, h_x, h_t) for L in range(16))

    samples = rng.uniform(0.0, 1.0, size=10)
    for order in ((0, 0), (1, 0), (0, 1)):
        for s in samples:
            # vertical interior edge between elements (0,0) and (0,1)
            left = value(0, 0, 1.0, s, order)
            right = value(0, 1, 0.0, s, order)
            assert abs(left - right) <= 1e-13 * max(1.0, abs(left))
            # horizontal interior edge between elements (0,0) and (1,0)
            below = value(0, 0, s, 1.0, order)
            above = value(1, 0, s, 0.0, order)
            assert abs(below - above) <= 1e-13 * max(1.0, abs(below))


def test_tabulate_matches_pointwise():
    sx = np.array([0.1, 0.6])
    st_ = np.array([0.8, 0.2])
    tabs = tabulate(sx, st_, [(0, 0), (1, 1), (2, 0)], 0.5, 0.25)
    for order, tab in tabs.items():
        for L in range(16):
            for q in range(2):
                assert tab[L, q] == pytest.approx(
                    shape2d(L, (sx[q], st_[q]), order, 0.5, 0.25)
                )
