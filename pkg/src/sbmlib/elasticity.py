"""Smoothed-boundary linear elastostatics with a traction-free surface.

Mechanical equilibrium for isotropic bi-material solids described by two
domain parameters (psi = psi1 + psi2 is the total solid).  Material
constants and the eigenstrain body force are interpolated node-wise:
psi*lam = psi1*lam1 + psi2*lam2.  The displacement system

    d/dx_j [ psi C_ijkl eps_kl ] = d/dx_i [ psi rho (lam11 + 2 lam12) ]

is solved by alternating-direction line relaxation: the same-axis
second-derivative ("diagonal") operators stay on the left as tridiagonal
line systems, mixed-derivative terms and the body-force divergence lag one
sweep behind.  Stress recovery applies Hooke's law with the interpolated
constants.  Exterior nodes (psi ~ 0) are regularized by the solver guard
and carry no physical meaning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import kernels
from .domain import DomainParameter
from .grid import Grid, ScalarField, SymTensorField, VectorField, same_grid
from .stencils import BoxBC, _axis_flux_div, _diff_1axis, cross_derivative

FIXED = "fixed_value"
SLIP = "zero_gradient"


@dataclass(frozen=True)
class IsotropicMaterial:
    """Cubic-isotropic constants (lam11 = lam12 + 2 lam44) plus eigenstrain."""

    lam11: float
    lam12: float
    lam44: float
    rho: float = 0.0

    def __post_init__(self):
        if self.lam44 <= 0:
            raise ValueError("lam44 must be positive")
        if self.lam11 <= abs(self.lam12):
            raise ValueError("need lam11 > |lam12| for a stable material")
        if abs(self.lam11 - (self.lam12 + 2.0 * self.lam44)) > 1e-9 * abs(self.lam11):
            raise ValueError("isotropy requires lam11 = lam12 + 2*lam44")

    @property
    def body_force_modulus(self) -> float:
        return self.lam11 + 2.0 * self.lam12


def lame_from_engineering(young: float, poisson: float, rho: float = 0.0) -> IsotropicMaterial:
    """Constants from Young's modulus and Poisson's ratio.

    lam12 = E nu / ((1+nu)(1-2nu)), lam44 = lam12 (1-2nu)/(2nu),
    lam11 = lam12 + 2 lam44.
    """
    if young <= 0:
        raise ValueError("Young's modulus must be positive")
    if not 0.0 < poisson < 0.5:
        raise ValueError("Poisson's ratio must lie in (0, 0.5); 0.5 is incompressible")
    lam12 = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson))
    lam44 = lam12 * (1.0 - 2.0 * poisson) / (2.0 * poisson)
    return IsotropicMaterial(lam11=lam12 + 2.0 * lam44, lam12=lam12, lam44=lam44, rho=rho)


@dataclass
class ElasticProblem:
    """Two-phase solid, per-component box closures, solver guard."""

    dp1: DomainParameter
    dp2: DomainParameter | None
    mat1: IsotropicMaterial
    mat2: IsotropicMaterial | None = None
    # box closure per (component, axis, side): FIXED pins u=value (default 0),
    # SLIP leaves the zero-gradient ghost.  Default: rigid frictionless box.
    box: dict = field(default_factory=dict)
    upsilon: float = 1e-16

    def __post_init__(self):
        if self.dp2 is None:
            grid = self.dp1.grid
            zero = ScalarField.full(grid, 0.0)
            self.dp2 = DomainParameter.from_psi(zero, self.dp1.zeta)
        if self.mat2 is None:
            self.mat2 = self.mat1
        same_grid(self.dp1.psi, self.dp2.psi)
        total = self.dp1.psi.values + self.dp2.psi.values
        if total.min() < -1e-9 or total.max() > 1.0 + 1e-6:
            raise ValueError("psi1 + psi2 must lie in [0, 1]")

    @property
    def grid(self) -> Grid:
        return self.dp1.psi.grid

    def closure(self, comp: int, axis: int, side: int) -> tuple[str, float]:
        # rigid frictionless box: normal component pinned to 0, others slip
        default = (FIXED, 0.0) if comp == axis else (SLIP, 0.0)
        return self.box.get((comp, axis, side), default)

    def interpolated(self, attr: str) -> np.ndarray:
        """psi-weighted material property field, e.g. psi*lam44.

        Identical materials take the single-product path so the result is
        bit-for-bit independent of how the solid is split between psi1/psi2.
        """
        p1 = self.dp1.psi.values
        p2 = self.dp2.psi.values
        v1 = getattr(self.mat1, attr)
        v2 = getattr(self.mat2, attr)
        if v1 == v2:
            return (p1 + p2) * v1
        return p1 * v1 + p2 * v2

    def body_force_field(self) -> np.ndarray:
        """psi rho (lam11 + 2 lam12), interpolated."""
        p1 = self.dp1.psi.values
        p2 = self.dp2.psi.values
        b1 = self.mat1.rho * self.mat1.body_force_modulus
        b2 = self.mat2.rho * self.mat2.body_force_modulus
        if b1 == b2:
            return (p1 + p2) * b1
        return p1 * b1 + p2 * b2


class ElasticADLR:
    """Line-relaxation solver for the displacement components."""

    def __init__(self, prob: ElasticProblem):
        self.prob = prob
        grid = prob.grid
        self.grid = grid
        d = grid.ndim
        self.d = d
        ups = prob.upsilon

        self.lam11 = prob.interpolated("lam11") + ups * prob.mat1.lam11
        self.lam12 = prob.interpolated("lam12") + ups * prob.mat1.lam12
        self.lam44 = prob.interpolated("lam44") + ups * prob.mat1.lam44
        self.body = prob.body_force_field()

        # diagonal-operator face coefficients per component and axis
        self.up = [[None] * d for _ in range(d)]
        self.lo = [[None] * d for _ in range(d)]
        self.diag = []
        for comp in range(d):
            w = np.zeros(grid.dims)
            for a in range(d):
                coeff = self.lam11 if a == comp else self.lam44
                up, lo = self._axis_tridiag(coeff, a, comp)
                self.up[comp][a] = up
                self.lo[comp][a] = lo
                w -= up + lo
            self.diag.append(w)

        self.pin_mask = [np.zeros(grid.dims, dtype=bool) for _ in range(d)]
        self.pin_vals = [np.zeros(grid.dims) for _ in range(d)]
        for comp in range(d):
            for axis in range(d):
                for side in (0, 1):
                    kind, value = prob.closure(comp, axis, side)
                    if kind == FIXED:
                        sl = [slice(None)] * d
                        sl[axis] = 0 if side == 0 else -1
                        self.pin_mask[comp][tuple(sl)] = True
                        self.pin_vals[comp][tuple(sl)] = value

        self.body_grad = [
            _diff_1axis(self.body, comp, grid.spacing[comp]) for comp in range(d)
        ]

    def _axis_tridiag(self, coeff, a, comp):
        """Face coefficients of d/dx_a(coeff d/dx_a u_comp).

        A slip (zero-gradient) closure zeroes the boundary face flux; a
        pinned closure is handled by identity rows, so the face coefficient
        there is irrelevant and also left zero.
        """
        h = self.grid.spacing[a]
        cm = np.moveaxis(coeff, a, 0)
        face = 0.5 * (cm[1:] + cm[:-1])
        up = np.zeros_like(cm)
        lo = np.zeros_like(cm)
        up[:-1] = face / (h * h)
        lo[1:] = face / (h * h)
        return np.moveaxis(up, 0, a), np.moveaxis(lo, 0, a)

    def rhs_lagged(self, u: list[np.ndarray], comp: int) -> np.ndarray:
        """Body-force divergence minus the lagged mixed-derivative terms."""
        grid = self.grid
        rhs = self.body_grad[comp].copy()
        for a in range(self.d):
            if a == comp:
                continue
            # d/dx_comp(psi lam12 d u_a/dx_a) + d/dx_a(psi lam44 d u_a/dx_comp)
            rhs -= cross_derivative(
                ScalarField(grid, self.lam12), ScalarField(grid, u[a]), comp, a
            ).values
            rhs -= cross_derivative(
                ScalarField(grid, self.lam44), ScalarField(grid, u[a]), a, comp
            ).values
        return rhs

    def _sweep(self, u: list[np.ndarray]):
        grid = self.grid
        for comp in range(self.d):
            rhs_fixed = self.rhs_lagged(u, comp)
            for a in range(self.d):
                rhs = rhs_fixed.copy()
                for b in range(self.d):
                    if b == a:
                        continue
                    cm = np.moveaxis(u[comp], b, 0)
                    um = np.moveaxis(self.up[comp][b], b, 0)
                    lm = np.moveaxis(self.lo[comp][b], b, 0)
                    acc = np.moveaxis(rhs, b, 0)
                    acc[:-1] -= um[:-1] * cm[1:]
                    acc[1:] -= lm[1:] * cm[:-1]

                move = lambda arr: np.ascontiguousarray(
                    np.moveaxis(arr, a, -1).reshape(-1, grid.dims[a]).astype(np.float64)
                )
                sub = move(self.lo[comp][a])
                dg = move(self.diag[comp])
                sup = move(self.up[comp][a])
                rr = move(rhs)
                pin = np.ascontiguousarray(
                    np.moveaxis(self.pin_mask[comp], a, -1).reshape(-1, grid.dims[a])
                )
                pv = move(self.pin_vals[comp])
                sub[pin] = 0.0
                sup[pin] = 0.0
                dg[pin] = 1.0
                rr[pin] = pv[pin]
                out = np.empty_like(rr)
                kernels.thomas_batch(sub, dg, sup, rr, out)
                shape = [grid.dims[b] for b in range(self.d) if b != a] + [grid.dims[a]]
                u[comp] = np.moveaxis(out.reshape(shape), -1, a)
        return u

    def residual(self, u: list[np.ndarray]) -> float:
        """Relative residual of the full equilibrium system on free nodes."""
        num = 0.0
        den = 0.0
        for comp in range(self.d):
            r = -self.rhs_lagged(u, comp)
            for a in range(self.d):
                cm = np.moveaxis(u[comp], a, 0)
                um = np.moveaxis(self.up[comp][a], a, 0)
                lm = np.moveaxis(self.lo[comp][a], a, 0)
                acc = np.moveaxis(r, a, 0)
                acc[:-1] += um[:-1] * cm[1:]
                acc[1:] += lm[1:] * cm[:-1]
            r += self.diag[comp] * u[comp]
            free = ~self.pin_mask[comp]
            num += float(np.sum(r[free] ** 2))
            den += float(np.sum(self.body_grad[comp][free] ** 2))
        den = np.sqrt(den) or 1.0
        return float(np.sqrt(num)) / den

    def solve(self, tol: float = 1e-6, max_sweeps: int = 2000, check_every: int = 10):
        grid = self.grid
        u = [np.zeros(grid.dims) for _ in range(self.d)]
        for comp in range(self.d):
            u[comp][self.pin_mask[comp]] = self.pin_vals[comp][self.pin_mask[comp]]
        box_scale = max(n * h for n, h in zip(grid.dims, grid.spacing))
        history = []
        prev = [a.copy() for a in u]
        for sweep in range(1, max_sweeps + 1):
            u = self._sweep(u)
            if sweep % check_every == 0:
                change = max(np.abs(u[c] - prev[c]).max() for c in range(self.d))
                prev = [a.copy() for a in u]
                res = self.residual(u)
                history.append((sweep, res, change))
                if res <= tol and change <= 1e-8 * box_scale:
                    return u, {"sweeps": sweep, "residual": res, "history": history, "converged": True}
        res = self.residual(u)
        return u, {"sweeps": max_sweeps, "residual": res, "history": history, "converged": False}


def solve_displacements_adlr(
    prob: ElasticProblem, tol: float = 1e-6, max_sweeps: int = 2000
) -> tuple[VectorField, dict]:
    """Displacements of the smoothed-boundary equilibrium system."""
    solver = ElasticADLR(prob)
    u, info = solver.solve(tol=tol, max_sweeps=max_sweeps)
    return VectorField(prob.grid, np.stack(u)), info


def strain_field(u: VectorField) -> SymTensorField:
    """Symmetric gradient of the displacements."""
    grid = u.grid
    d = grid.ndim
    out = SymTensorField.zeros(grid)
    from .grid import SYM_INDEX

    for k, (i, j) in enumerate(SYM_INDEX[d]):
        gi = _diff_1axis(u.values[i], j, grid.spacing[j])
        if i == j:
            out.values[k] = gi
        else:
            gj = _diff_1axis(u.values[j], i, grid.spacing[i])
            out.values[k] = 0.5 * (gi + gj)
    return out


def compute_stress(u: VectorField, prob: ElasticProblem) -> SymTensorField:
    """Hooke's law with interpolated constants and eigenstrain.

    sigma_ij = (psi C)_ijkl eps_kl - (psi rho C)_ijkl delta_kl; deep exterior
    nodes carry zero because every term is psi-weighted.
    """
    same_grid(u, prob.dp1.psi)
    grid = u.grid
    d = grid.ndim
    eps = strain_field(u)
    lam11 = prob.interpolated("lam11")
    lam12 = prob.interpolated("lam12")
    lam44 = prob.interpolated("lam44")
    body = prob.body_force_field()

    out = SymTensorField.zeros(grid)
    trace = sum(eps.comp(i, i) for i in range(d))
    from .grid import SYM_INDEX

    for k, (i, j) in enumerate(SYM_INDEX[d]):
        if i == j:
            out.values[k] = lam11 * eps.comp(i, i) + lam12 * (trace - eps.comp(i, i)) - body
        else:
            out.values[k] = 2.0 * lam44 * eps.comp(i, j)
    return out


def mean_stress(sigma: SymTensorField) -> ScalarField:
    """Pointwise trace/3 (the 3D mean stress, also applied to plane strain)."""
    d = sigma.grid.ndim
    tr = sum(sigma.comp(i, i) for i in range(d))
    return ScalarField(sigma.grid, tr / 3.0)


def surface_traction(sigma: SymTensorField, dp: DomainParameter) -> VectorField:
    """N_i = -sigma_ij n_j on the diffuse surface (zero where gated)."""
    same_grid(sigma, dp.psi)
    return VectorField(sigma.grid, -sigma.apply(dp.normal).values)


def laminate_reference(mat1: IsotropicMaterial, mat2: IsotropicMaterial, frac1: float):
    """Closed-form stresses for a bi-layer in a rigid frictionless box.

    Layers normal to x with volume fractions frac1/1-frac1; lateral strains
    vanish, sigma_xx is common, layer x-strains balance to zero net
    expansion.  Returns (eps1, eps2, sigma_xx, sigma_lat1, sigma_lat2).
    """
    f1, f2 = frac1, 1.0 - frac1
    b1, b2 = mat1.rho * mat1.body_force_modulus, mat2.rho * mat2.body_force_modulus
    # lam11_1 e1 - b1 = lam11_2 e2 - b2 and f1 e1 + f2 e2 = 0
    e1 = (b1 - b2) / (mat1.lam11 + mat2.lam11 * f1 / f2)
    e2 = -f1 * e1 / f2
    sxx = mat1.lam11 * e1 - b1
    slat1 = mat1.lam12 * e1 - b1
    slat2 = mat2.lam12 * e2 - b2
    return e1, e2, sxx, slat1, slat2
