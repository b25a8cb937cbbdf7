"""Second-order finite-difference stencil operators.

All operators are pure (new output arrays, inputs untouched) and linear.
Interior nodes use central differences; the computational-box faces are
closed either by one-sided 3-point formulas (first derivatives) or by
ghost-value synthesis (flux-form operators), so no stencil ever reads
outside the field storage.

Divergence operators are written in flux form with face coefficients
averaged arithmetically from the adjacent nodes, so that summing the
result against the dual-cell volumes telescopes exactly to the net flux
through the box faces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import AXISYMMETRIC_RZ, CARTESIAN, Grid, ScalarField, VectorField, same_grid

ZERO_GRADIENT = "zero_gradient"
FIXED_VALUE = "fixed_value"
FIXED_GRADIENT = "fixed_gradient"


@dataclass(frozen=True)
class FaceClosure:
    """Closure of one box face: how ghost values are synthesized there."""

    kind: str = ZERO_GRADIENT
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in (ZERO_GRADIENT, FIXED_VALUE, FIXED_GRADIENT):
            raise ValueError(f"unknown face closure {self.kind!r}")


class BoxBC:
    """Per-face closures of the computational box.

    Faces are keyed by (axis, side) with side 0 = low coordinate,
    side 1 = high coordinate.  Unspecified faces default to zero-gradient
    (zero flux for the conservative operators).
    """

    def __init__(self, faces: dict[tuple[int, int], FaceClosure] | None = None):
        self.faces = dict(faces) if faces else {}

    def get(self, axis: int, side: int) -> FaceClosure:
        return self.faces.get((axis, side), FaceClosure())

    @classmethod
    def all_zero_gradient(cls) -> "BoxBC":
        return cls()


def _edge(values: np.ndarray, axis: int, side: int) -> np.ndarray:
    idx = [slice(None)] * values.ndim
    idx[axis] = 0 if side == 0 else -1
    return values[tuple(idx)]


def _ghost_pair(f, coeff, axis, side, closure, h):
    """Ghost slabs (f_ghost, coeff_ghost) just outside one box face."""
    f_edge = _edge(f, axis, side)
    c_edge = _edge(coeff, axis, side)
    if closure.kind == ZERO_GRADIENT:
        f_ghost = f_edge.copy()
    elif closure.kind == FIXED_VALUE:
        f_ghost = 2.0 * closure.value - f_edge
    else:  # fixed gradient along +axis at the face
        sign = -1.0 if side == 0 else 1.0
        f_ghost = f_edge + sign * closure.value * h
    return f_ghost, c_edge.copy()


def _pad_with_ghosts(f, coeff, axis, bc: BoxBC, h):
    lo_f, lo_c = _ghost_pair(f, coeff, axis, 0, bc.get(axis, 0), h)
    hi_f, hi_c = _ghost_pair(f, coeff, axis, 1, bc.get(axis, 1), h)
    f_ext = np.concatenate(
        [np.expand_dims(lo_f, axis), f, np.expand_dims(hi_f, axis)], axis=axis
    )
    c_ext = np.concatenate(
        [np.expand_dims(lo_c, axis), coeff, np.expand_dims(hi_c, axis)], axis=axis
    )
    return f_ext, c_ext


def _diff_1axis(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """d/dx along one axis: central interior, one-sided 3-point at faces."""
    if values.shape[axis] < 3:
        raise ValueError("need at least 3 nodes along a differentiated axis")
    out = np.empty_like(values)
    v = np.moveaxis(values, axis, 0)
    o = np.moveaxis(out, axis, 0)
    o[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    o[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    o[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return out


def gradient(f: ScalarField) -> VectorField:
    """Node-wise gradient, second order everywhere."""
    grid = f.grid
    grid.require_min_dims(3)
    comps = [_diff_1axis(f.values, a, grid.spacing[a]) for a in range(grid.ndim)]
    return VectorField(grid, np.stack(comps))


def _axis_flux_div(coeff, f, axis, h, bc):
    """One axis of the flux-form divergence (f/coeff already validated)."""
    f_ext, c_ext = _pad_with_ghosts(f, coeff, axis, bc, h)
    fm = np.moveaxis(f_ext, axis, 0)
    cm = np.moveaxis(c_ext, axis, 0)
    c_face = 0.5 * (cm[1:] + cm[:-1])
    flux = c_face * (fm[1:] - fm[:-1]) / h
    div = (flux[1:] - flux[:-1]) / h
    return np.moveaxis(div, 0, axis)


def conservative_div(coeff: ScalarField, f: ScalarField, bc: BoxBC | None = None) -> ScalarField:
    """div(coeff grad f) on a Cartesian grid, flux form, face-averaged coeff."""
    grid = same_grid(coeff, f)
    if grid.coord_system != CARTESIAN:
        raise ValueError("conservative_div requires a Cartesian grid; use conservative_div_rz")
    if np.any(coeff.values < 0):
        raise ValueError("conservative_div requires a non-negative coefficient")
    grid.require_min_dims(3)
    bc = bc or BoxBC()
    out = np.zeros_like(f.values)
    for a in range(grid.ndim):
        out += _axis_flux_div(coeff.values, f.values, a, grid.spacing[a], bc)
    return ScalarField(grid, out)


def cross_derivative(
    coeff: ScalarField,
    f: ScalarField,
    axis_outer: int,
    axis_inner: int,
    bc: BoxBC | None = None,
) -> ScalarField:
    """d/dx_outer (coeff * df/dx_inner) via the wide mixed-difference stencil.

    Interior nodes get the 2*delta central difference in the outer axis
    applied to the node-valued product coeff * (central df/dx_inner);
    outer-axis box faces fall back to one-sided differences.
    """
    grid = same_grid(coeff, f)
    if axis_outer == axis_inner:
        raise ValueError("cross_derivative requires distinct axes; use conservative_div")
    grid.require_min_dims(3, (axis_outer, axis_inner))
    inner = _diff_1axis(f.values, axis_inner, grid.spacing[axis_inner])
    g = coeff.values * inner
    ho = grid.spacing[axis_outer]
    gm = np.moveaxis(g, axis_outer, 0)
    out = np.empty_like(gm)
    out[1:-1] = (gm[2:] - gm[:-2]) / (2.0 * ho)
    out[0] = (gm[1] - gm[0]) / ho
    out[-1] = (gm[-1] - gm[-2]) / ho
    return ScalarField(grid, np.moveaxis(out, 0, axis_outer))


def _radial_flux_div(coeff, f, grid: Grid, bc: BoxBC):
    """Radial part of the r-z divergence: (1/r) d/dr (r coeff df/dr).

    Annulus-exact flux form.  If the axis r=0 is part of the grid its node
    uses the half-annulus balance with zero flux through the axis (the
    mirror-symmetry limit); otherwise the inner face follows the box closure.
    """
    dr = grid.spacing[0]
    r = grid.axis_coords(0)
    on_axis = r[0] == 0.0
    c_face = 0.5 * (coeff[1:] + coeff[:-1])
    r_face = (0.5 * (r[1:] + r[:-1]))[:, None]
    flux = r_face * c_face * (f[1:] - f[:-1]) / dr  # r * radial flux at interior faces

    radial = np.zeros_like(f)
    radial[1:-1] = (flux[1:] - flux[:-1]) / (r[1:-1, None] * dr)
    if on_axis:
        # half annulus [0, dr/2]: area r_{1/2}^2/2, zero flux through r=0
        radial[0] = flux[0] / ((0.5 * dr) ** 2 / 2.0)
    else:
        clo = bc.get(0, 0)
        f_ghost, c_ghost = _ghost_pair(f, coeff, 0, 0, clo, dr)
        r_g = r[0] - 0.5 * dr
        flux_lo = r_g * 0.5 * (c_ghost + coeff[0]) * (f[0] - f_ghost) / dr
        radial[0] = (flux[0] - flux_lo) / (r[0] * dr)
    chi = bc.get(0, 1)
    f_ghost, c_ghost = _ghost_pair(f, coeff, 0, 1, chi, dr)
    r_g = r[-1] + 0.5 * dr
    flux_hi = r_g * 0.5 * (c_ghost + coeff[-1]) * (f_ghost - f[-1]) / dr
    radial[-1] = (flux_hi - flux[-1]) / (r[-1] * dr)
    return radial


def conservative_div_rz(coeff: ScalarField, f: ScalarField, bc: BoxBC | None = None) -> ScalarField:
    """div(coeff grad f) on an axisymmetric r-z grid."""
    grid = same_grid(coeff, f)
    if grid.coord_system != AXISYMMETRIC_RZ:
        raise ValueError("conservative_div_rz requires an axisymmetric_rz grid")
    if np.any(coeff.values < 0):
        raise ValueError("conservative_div_rz requires a non-negative coefficient")
    grid.require_min_dims(3)
    bc = bc or BoxBC()
    out = _axis_flux_div(coeff.values, f.values, 1, grid.spacing[1], bc)
    out += _radial_flux_div(coeff.values, f.values, grid, bc)
    return ScalarField(grid, out)


def divergence_any(coeff: ScalarField, f: ScalarField, bc: BoxBC | None = None) -> ScalarField:
    """Dispatch div(coeff grad f) on the grid's coordinate system."""
    if coeff.grid.coord_system == AXISYMMETRIC_RZ:
        return conservative_div_rz(coeff, f, bc)
    return conservative_div(coeff, f, bc)
