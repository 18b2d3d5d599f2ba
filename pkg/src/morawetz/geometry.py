"""Space-time cylinder geometry, uniform tensor meshes, Hermite DOF numbering."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class ConfigurationError(ValueError):
    """A geometry or parameter choice violates a documented precondition."""


# Per-node derivative kinds of the bicubic Hermite element.
VAL, DX, DT, DXDT = 0, 1, 2, 3
KINDS = (VAL, DX, DT, DXDT)


@dataclass(frozen=True)
class Geometry:
    """Interval space domain (x_lo, x_hi) and final time T.

    ``dirichlet_end="lo"`` marks the left endpoint as the Dirichlet part of
    the boundary (mixed impedance-Dirichlet problem); ``None`` means
    impedance conditions at both endpoints.

    Sign conditions on x*n over the boundary are enforced at construction
    because the coercive formulation is meaningless without them:

    - impedance-only: x_lo < 0 < x_hi, so x*n > 0 at both endpoints;
    - mixed: 0 < x_lo, so -x*n = x_lo > 0 on the Dirichlet endpoint and
      x*n = x_hi > 0 on the impedance endpoint.

    The origin matters: coordinates must be pre-shifted by the caller so the
    conditions hold, they are never auto-centred (the multiplier scale L_I
    would silently change otherwise).
    """

    x_lo: float
    x_hi: float
    T: float
    dirichlet_end: str | None = None

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ConfigurationError(f"need x_lo < x_hi, got ({self.x_lo}, {self.x_hi})")
        if not self.T > 0:
            raise ConfigurationError(f"need T > 0, got {self.T}")
        if self.dirichlet_end not in (None, "lo"):
            raise ConfigurationError("dirichlet_end must be None or 'lo'")
        if self.dirichlet_end is None:
            if not (self.x_lo < 0.0 < self.x_hi):
                raise ConfigurationError(
                    "impedance-only problem needs x_lo < 0 < x_hi so that "
                    "x*n > 0 at both endpoints (star-shape condition)"
                )
        elif not 0.0 < self.x_lo:
            raise ConfigurationError(
                "mixed problem with Dirichlet end at x_lo needs 0 < x_lo so "
                "that -x*n > 0 on the Dirichlet endpoint"
            )

    @property
    def mixed(self) -> bool:
        return self.dirichlet_end is not None

    @property
    def L_I(self) -> float:
        if self.mixed:
            return self.x_hi
        return max(abs(self.x_lo), self.x_hi)

    @property
    def delta_I(self) -> float:
        if self.mixed:
            return 1.0
        return min(abs(self.x_lo), self.x_hi) / self.L_I

    @property
    def L_D(self) -> float | None:
        return self.x_lo if self.mixed else None

    @property
    def delta_D(self) -> float | None:
        return 1.0 if self.mixed else None

    @property
    def impedance_ends(self) -> tuple[tuple[float, float], ...]:
        """Impedance endpoints as (x, outward normal) pairs."""
        if self.mixed:
            return ((self.x_hi, 1.0),)
        return ((self.x_lo, -1.0), (self.x_hi, 1.0))

    @property
    def dirichlet_ends(self) -> tuple[tuple[float, float], ...]:
        return ((self.x_lo, -1.0),) if self.mixed else ()


def star_shape_params(geom: Geometry):
    """Star-shape data (L_I, delta_I, L_D, delta_D); the D entries are None
    for impedance-only geometries."""
    return geom.L_I, geom.delta_I, geom.L_D, geom.delta_D


class DofMap:
    """Bijection (time node i, space node j, kind) <-> global DOF index.

    Four DOFs per node (value, d/dx, d/dt, d2/dxdt).  Nodes are numbered
    along the direction with fewer elements first, which bounds the
    assembled bandwidth by 4*(min(N_x, N_t)+2)+3 <= 4*(N_x+2)+3.
    """

    def __init__(self, N_x: int, N_t: int):
        self.N_x = N_x
        self.N_t = N_t
        # slab-major: consecutive indices sweep space nodes within one time level
        self.slab_major = N_x <= N_t

    @property
    def ndof(self) -> int:
        return 4 * (self.N_x + 1) * (self.N_t + 1)

    @property
    def bandwidth(self) -> int:
        return 4 * (min(self.N_x, self.N_t) + 2) + 3

    def index(self, i, j, kind):
        """Global index; accepts scalars or broadcastable integer arrays."""
        if self.slab_major:
            node = i * (self.N_x + 1) + j
        else:
            node = j * (self.N_t + 1) + i
        return 4 * node + kind

    def unravel(self, g: int) -> tuple[int, int, int]:
        node, kind = divmod(g, 4)
        if self.slab_major:
            i, j = divmod(node, self.N_x + 1)
        else:
            j, i = divmod(node, self.N_t + 1)
        return i, j, kind


@dataclass(eq=False)
class Mesh:
    """Uniform tensor-product mesh of the space-time cylinder.

    Immutable after construction; safe to share across threads.
    """

    geometry: Geometry
    N_x: int
    N_t: int

    @property
    def h_x(self) -> float:
        return (self.geometry.x_hi - self.geometry.x_lo) / self.N_x

    @property
    def h_t(self) -> float:
        return self.geometry.T / self.N_t

    @property
    def nodes_x(self) -> np.ndarray:
        return self.geometry.x_lo + self.h_x * np.arange(self.N_x + 1)

    @property
    def nodes_t(self) -> np.ndarray:
        return self.h_t * np.arange(self.N_t + 1)

    @cached_property
    def dofmap(self) -> DofMap:
        return DofMap(self.N_x, self.N_t)

    @property
    def n_elements(self) -> int:
        return self.N_x * self.N_t

    def element_corners(self):
        """Lower-left corner coordinates (x_e, t_e) of every element,
        ordered with e = it*N_x + jx."""
        jx, it = np.meshgrid(np.arange(self.N_x), np.arange(self.N_t))
        x_e = self.geometry.x_lo + self.h_x * jx.ravel()
        t_e = self.h_t * it.ravel()
        return x_e, t_e

    @cached_property
    def element_dofs(self) -> np.ndarray:
        """(n_elements, 16) global indices; local ordering is 4*corner+kind
        with corners (0,0),(1,0),(0,1),(1,1) in (x,t) offsets."""
        dm = self.dofmap
        jx, it = np.meshgrid(np.arange(self.N_x), np.arange(self.N_t))
        jx = jx.ravel()
        it = it.ravel()
        cols = []
        corners = ((0, 0), (1, 0), (0, 1), (1, 1))
        for cx, ct in corners:
            for kind in KINDS:
                cols.append(dm.index(it + ct, jx + cx, kind))
        return np.stack(cols, axis=1)


def build_mesh(geom: Geometry, N_x: int, N_t: int) -> Mesh:
    """Uniform mesh with N_x x N_t elements; geometry invariants are
    validated by the Geometry constructor."""
    if N_x < 1 or N_t < 1:
        raise ConfigurationError(f"element counts must be >= 1, got ({N_x}, {N_t})")
    return Mesh(geom, int(N_x), int(N_t))
