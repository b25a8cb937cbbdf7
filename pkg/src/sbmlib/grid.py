"""Structured grids and the field containers used by every solver.

Nodes are vertex-centered: along axis ``a`` node ``i`` sits at
``origin[a] + i*spacing[a]``.  Field values are stored in a C-ordered
(row-major, last axis fastest) ndarray of shape ``grid.dims``; that node
order is also the on-disk order of the SBMF format.

Two coordinate systems are supported: Cartesian in 1/2/3 dimensions and
axisymmetric r-z (exactly 2D, axis order (r, z), all radii >= 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CARTESIAN = "cartesian"
AXISYMMETRIC_RZ = "axisymmetric_rz"


@dataclass(frozen=True)
class Grid:
    """Discretization metadata shared by all fields living on it."""

    dims: tuple[int, ...]
    spacing: tuple[float, ...]
    coord_system: str = CARTESIAN
    origin: tuple[float, ...] = ()

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        spacing = tuple(float(h) for h in self.spacing)
        origin = tuple(float(x) for x in self.origin) if self.origin else (0.0,) * len(dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)
        if len(spacing) != len(dims) or len(origin) != len(dims):
            raise ValueError("dims, spacing and origin must have the same length")
        if any(n < 1 for n in dims):
            raise ValueError(f"grid dims must be positive, got {dims}")
        if any(h <= 0 for h in spacing):
            raise ValueError(f"grid spacings must be strictly positive, got {spacing}")
        if self.coord_system not in (CARTESIAN, AXISYMMETRIC_RZ):
            raise ValueError(f"unknown coord_system {self.coord_system!r}")
        if self.coord_system == AXISYMMETRIC_RZ:
            if len(dims) != 2:
                raise ValueError("axisymmetric_rz grids are exactly 2D with axis order (r, z)")
            if origin[0] < 0:
                raise ValueError("axisymmetric_rz requires r >= 0 everywhere")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.dims

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.dims))

    def axis_coords(self, axis: int) -> np.ndarray:
        """1D node coordinates along one axis."""
        return self.origin[axis] + self.spacing[axis] * np.arange(self.dims[axis])

    def meshes(self) -> tuple[np.ndarray, ...]:
        """Full coordinate arrays, one per axis, each of shape ``dims``."""
        axes = [self.axis_coords(a) for a in range(self.ndim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def require_min_dims(self, n: int, axes=None) -> None:
        axes = range(self.ndim) if axes is None else axes
        for a in axes:
            if self.dims[a] < n:
                raise ValueError(f"axis {a} has {self.dims[a]} nodes, need >= {n} for stencils")

    def node_volumes(self) -> np.ndarray:
        """Dual-cell volumes per node, consistent with the flux-form operators.

        In the r-z system the radial weight of node i is the exact annulus
        area between the face radii, so that flux-form divergences summed
        against these weights telescope to the net boundary flux.
        """
        if self.coord_system == CARTESIAN:
            vol = float(np.prod(self.spacing))
            return np.full(self.dims, vol)
        dr, dz = self.spacing
        r = self.axis_coords(0)
        r_out = r + 0.5 * dr
        r_in = np.maximum(r - 0.5 * dr, 0.0)
        radial = np.pi * (r_out**2 - r_in**2)
        return np.broadcast_to((radial * dz)[:, None], self.dims).copy()


def _check_values(grid: Grid, values: np.ndarray, name: str) -> np.ndarray:
    values = np.asarray(values)
    if values.shape[-grid.ndim :] != grid.dims:
        raise ValueError(f"{name} shape {values.shape} does not match grid dims {grid.dims}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{name} contains non-finite values")
    return values


@dataclass
class ScalarField:
    """One real value per grid node."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = _check_values(self.grid, np.asarray(self.values, dtype=np.float64), "ScalarField")
        if self.values.ndim != self.grid.ndim:
            raise ValueError("ScalarField values must have exactly one value per node")

    @classmethod
    def full(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.dims, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        return cls(grid, np.asarray(fn(*grid.meshes()), dtype=np.float64))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


@dataclass
class ComplexScalarField:
    """One complex value per node, stored as (re, im) pairs on disk."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != self.grid.dims:
            raise ValueError(f"values shape {values.shape} does not match grid dims {self.grid.dims}")
        if not (np.all(np.isfinite(values.real)) and np.all(np.isfinite(values.imag))):
            raise ValueError("ComplexScalarField contains non-finite values")
        self.values = values


@dataclass
class VectorField:
    """d real components per node, stored component-first: shape (d, *dims)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = _check_values(self.grid, np.asarray(self.values, dtype=np.float64), "VectorField")
        if self.values.shape != (self.grid.ndim,) + self.grid.dims:
            raise ValueError("VectorField needs one component per grid dimension")

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros((grid.ndim,) + grid.dims))

    def component(self, k: int) -> np.ndarray:
        return self.values[k]

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values**2, axis=0))


# Component order of the packed symmetric tensor, per dimensionality.
SYM_INDEX = {
    1: ((0, 0),),
    2: ((0, 0), (1, 1), (0, 1)),
    3: ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)),
}


@dataclass
class SymTensorField:
    """d(d+1)/2 components per node: diagonal entries first, then off-diagonal."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = _check_values(self.grid, np.asarray(self.values, dtype=np.float64), "SymTensorField")
        d = self.grid.ndim
        ncomp = d * (d + 1) // 2
        if self.values.shape != (ncomp,) + self.grid.dims:
            raise ValueError(f"SymTensorField needs {ncomp} components for a {d}D grid")

    @classmethod
    def zeros(cls, grid: Grid) -> "SymTensorField":
        d = grid.ndim
        return cls(grid, np.zeros((d * (d + 1) // 2,) + grid.dims))

    def comp(self, i: int, j: int) -> np.ndarray:
        d = self.grid.ndim
        idx = SYM_INDEX[d].index((min(i, j), max(i, j)))
        return self.values[idx]

    def apply(self, vec: VectorField) -> VectorField:
        """Contract m_ij v_j node-wise."""
        d = self.grid.ndim
        out = np.zeros_like(vec.values)
        for i in range(d):
            for j in range(d):
                out[i] += self.comp(i, j) * vec.values[j]
        return VectorField(self.grid, out)


def same_grid(*fields) -> Grid:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid is not g and f.grid != g:
            raise ValueError("fields live on different grids")
    return g
