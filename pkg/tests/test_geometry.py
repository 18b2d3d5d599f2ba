import numpy as np
import pytest
from hypothesis import given, strategies as st

from morawetz.geometry import (
    ConfigurationError,
    DofMap,
    Geometry,
    KINDS,
    build_mesh,
    star_shape_params,
)


def test_reference_mesh_dimensions():
    mesh = build_mesh(Geometry(-1.0, 1.0, 1.0), 32, 32)
    assert mesh.h_x == 0.0625
    assert mesh.h_t == 0.03125
    assert mesh.dofmap.ndof == 66 * 66 == 4356


def test_single_element_mesh():
    mesh = build_mesh(Geometry(-1.0, 1.0, 1.0), 1, 1)
    assert mesh.dofmap.ndof == 16


def test_dirichlet_at_negative_endpoint_rejected():
    with pytest.raises(ConfigurationError):
        Geometry(-1.0, 1.0, 1.0, dirichlet_end="lo")


def test_impedance_needs_origin_inside():
    with pytest.raises(ConfigurationError):
        Geometry(0.1, 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        Geometry(-2.0, -1.0, 1.0)


@pytest.mark.parametrize(
    "geom, expected",
    [
        (Geometry(-1.0, 1.0, 1.0), (1.0, 1.0, None, None)),
        (Geometry(-0.5, 1.0, 1.0), (1.0, 0.5, None, None)),
        (Geometry(0.25, 1.0, 1.0, dirichlet_end="lo"), (1.0, 1.0, 0.25, 1.0)),
    ],
)
def test_star_shape_params(geom, expected):
    assert star_shape_params(geom) == expected


def test_invalid_counts():
    geom = Geometry(-1.0, 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        build_mesh(geom, 0, 4)


@given(
    N_x=st.integers(min_value=1, max_value=9),
    N_t=st.integers(min_value=1, max_value=9),
)
def test_dofmap_roundtrip(N_x, N_t):
    dm = DofMap(N_x, N_t)
    for g in range(dm.ndof):
        i, j, kind = dm.unravel(g)
        assert 0 <= i <= N_t and 0 <= j <= N_x and kind in KINDS
        assert dm.index(i, j, kind) == g


@given(
    N_x=st.integers(min_value=1, max_value=8),
    N_t=st.integers(min_value=1, max_value=8),
)
def test_dofmap_bandwidth_bound(N_x, N_t):
    dm = DofMap(N_x, N_t)
    worst = 0
    for i in range(N_t):
        for j in range(N_x):
            dofs = [
                dm.index(i + ct, j + cx, k)
                for ct in (0, 1)
                for cx in (0, 1)
                for k in KINDS
            ]
            worst = max(worst, max(dofs) - min(dofs))
    assert worst <= dm.bandwidth
    assert dm.bandwidth <= 4 * (N_x + 2) + 3


def test_element_dofs_shape_and_uniqueness():
    mesh = build_mesh(Geometry(-1.0, 1.0, 1.0), 3, 5)
    G = mesh.element_dofs
    assert G.shape == (15, 16)
    for row in G:
        assert len(set(row.tolist())) == 16
    assert set(np.unique(G)) == set(range(mesh.dofmap.ndof))
