"""Elasticity tests: constant conversions, Hooke's law recovery, the
bi-layer closed form, interpolation consistency, and grid refinement."""

import numpy as np
import pytest

from sbmlib.domain import DomainParameter
from sbmlib.elasticity import (
    ElasticProblem,
    IsotropicMaterial,
    compute_stress,
    laminate_reference,
    lame_from_engineering,
    mean_stress,
    solve_displacements_adlr,
    surface_traction,
)
from sbmlib.grid import Grid, ScalarField, SymTensorField, VectorField


class TestLame:
    def test_published_triples(self):
        gdc = lame_from_engineering(250.0, 0.334)
        assert round(gdc.lam11, 2) == 375.94
        assert round(gdc.lam12, 2) == 188.54
        assert round(gdc.lam44, 2) == 93.70
        lsc = lame_from_engineering(200.0, 0.3)
        assert round(lsc.lam12, 2) == 115.38
        assert round(lsc.lam11, 2) == 269.23
        assert round(lsc.lam44, 2) == 76.92

    def test_direct_formula(self):
        m = lame_from_engineering(1.0, 0.25)
        assert m.lam12 == pytest.approx(0.4, abs=1e-14)
        assert m.lam44 == pytest.approx(0.4, abs=1e-14)
        assert m.lam11 == pytest.approx(1.2, abs=1e-14)

    def test_isotropy_identity_exact(self):
        m = lame_from_engineering(123.4, 0.21)
        assert m.lam11 == m.lam12 + 2.0 * m.lam44

    def test_incompressible_rejected(self):
        with pytest.raises(ValueError, match="0.5"):
            lame_from_engineering(1.0, 0.5)

    def test_inconsistent_constants_rejected(self):
        with pytest.raises(ValueError, match="isotropy"):
            IsotropicMaterial(lam11=3.0, lam12=1.0, lam44=0.5)


def solid_box(dims=(8, 8, 8)):
    g = Grid(dims=dims, spacing=(1.0,) * len(dims))
    return ElasticProblem(
        dp1=DomainParameter.from_psi(ScalarField.full(g, 1.0), 1.0),
        dp2=None,
        mat1=lame_from_engineering(1.0, 0.25, rho=0.01),
    )


class TestStress:
    def test_zero_everything(self):
        prob = solid_box()
        prob.mat1 = lame_from_engineering(1.0, 0.25, rho=0.0)
        prob.mat2 = prob.mat1
        sig = compute_stress(VectorField.zeros(prob.grid), prob)
        assert np.all(sig.values == 0)

    def test_zero_strain_uniform_eigenstrain(self):
        prob = solid_box()
        sig = compute_stress(VectorField.zeros(prob.grid), prob)
        expect = -0.01 * prob.mat1.body_force_modulus
        for i in range(3):
            assert np.allclose(sig.comp(i, i), expect, rtol=1e-10)
        assert np.all(sig.comp(0, 1) == 0)
        sm = mean_stress(sig).values
        assert np.allclose(sm, expect, rtol=1e-10)

    def test_uniaxial_hooke(self):
        prob = solid_box()
        prob.mat1 = lame_from_engineering(2.0, 0.3, rho=0.0)
        prob.mat2 = prob.mat1
        g = prob.grid
        x = g.meshes()[0]
        eps0 = 1e-3
        u = VectorField(g, np.stack([eps0 * x, np.zeros(g.dims), np.zeros(g.dims)]))
        sig = compute_stress(u, prob)
        inner = (slice(1, -1),) * 3
        assert np.allclose(sig.comp(0, 0)[inner], prob.mat1.lam11 * eps0, rtol=1e-10)
        assert np.allclose(sig.comp(1, 1)[inner], prob.mat1.lam12 * eps0, rtol=1e-10)
        assert np.allclose(sig.comp(2, 2)[inner], prob.mat1.lam12 * eps0, rtol=1e-10)

    def test_mean_stress_pure_shear(self):
        g = Grid(dims=(5, 5), spacing=(1.0, 1.0))
        sig = SymTensorField.zeros(g)
        sig.values[2] = 1.7  # xy component only
        assert np.all(mean_stress(sig).values == 0)

    def test_hydrostatic(self):
        g = Grid(dims=(5, 5, 5), spacing=(1, 1, 1))
        sig = SymTensorField.zeros(g)
        for k in range(3):
            sig.values[k] = -2.5
        assert np.allclose(mean_stress(sig).values, -2.5)


def test_rigid_box_uniform_solid_zero_displacement():
    prob = solid_box(dims=(9, 9, 9))
    u, info = solve_displacements_adlr(prob, tol=1e-8, max_sweeps=400)
    assert np.abs(u.values).max() < 1e-10


def test_interpolation_split_independent_bitwise():
    # identical materials: operators must not depend on the psi1/psi2 split
    g = Grid(dims=(12, 12), spacing=(1.0, 1.0))
    x, _ = g.meshes()
    mat = lame_from_engineering(1.0, 0.3, rho=0.01)
    s = 0.5 * (1 + np.tanh((x - 6.0) / 1.5))
    pa = ElasticProblem(
        dp1=DomainParameter.from_psi(ScalarField(g, s), 1.5),
        dp2=DomainParameter.from_psi(ScalarField(g, 1.0 - s), 1.5),
        mat1=mat, mat2=mat,
    )
    pb = ElasticProblem(
        dp1=DomainParameter.from_psi(ScalarField.full(g, 1.0), 1.5),
        dp2=DomainParameter.from_psi(ScalarField.full(g, 0.0), 1.5),
        mat1=mat, mat2=mat,
    )
    for attr in ("lam11", "lam12", "lam44"):
        assert np.array_equal(pa.interpolated(attr), pb.interpolated(attr))
    assert np.array_equal(pa.body_force_field(), pb.body_force_field())


def laminate_problem(n=65, zeta=1.0):
    mat1 = lame_from_engineering(1.0, 0.3, rho=0.02)
    mat2 = lame_from_engineering(2.0, 0.25, rho=0.005)
    g = Grid(dims=(n, (n - 1) // 2 + 1), spacing=(64.0 / (n - 1),) * 2)
    x, _ = g.meshes()
    p1 = 0.5 * (1 - np.tanh((x - 32.0) / zeta))
    dpa = DomainParameter.from_psi(ScalarField(g, p1), zeta)
    dpb = DomainParameter.from_psi(ScalarField(g, 1 - p1), zeta)
    return ElasticProblem(dp1=dpa, dp2=dpb, mat1=mat1, mat2=mat2), mat1, mat2


class TestLaminate:
    def test_matches_closed_form(self):
        prob, mat1, mat2 = laminate_problem()
        u, info = solve_displacements_adlr(prob, tol=1e-7, max_sweeps=3000)
        sig = compute_stress(u, prob)
        _, _, sxx, sl1, sl2 = laminate_reference(mat1, mat2, 0.5)
        g = prob.grid
        q1 = (slice(12, 20), slice(8, 24))   # deep in layer 1
        q2 = (slice(44, 52), slice(8, 24))   # deep in layer 2
        assert np.median(sig.comp(0, 0)[q1]) == pytest.approx(sxx, rel=0.03)
        assert np.median(sig.comp(0, 0)[q2]) == pytest.approx(sxx, rel=0.03)
        assert np.median(sig.comp(1, 1)[q1]) == pytest.approx(sl1, rel=0.03)
        assert np.median(sig.comp(1, 1)[q2]) == pytest.approx(sl2, rel=0.03)

    def test_residual_satisfied_in_solid(self):
        prob, *_ = laminate_problem()
        from sbmlib.elasticity import ElasticADLR

        solver = ElasticADLR(prob)
        u, info = solver.solve(tol=1e-7, max_sweeps=3000)
        assert info["residual"] <= 1e-6

    def test_refinement_improves_error(self):
        # refining the grid with the interface width tied to the spacing
        # shrinks the sharp closed-form error by at least 1.8x per halving
        errs = []
        for n in (33, 65):
            h = 64.0 / (n - 1)
            prob, mat1, mat2 = laminate_problem(n=n, zeta=h)
            u, _ = solve_displacements_adlr(prob, tol=1e-8, max_sweeps=4000)
            sig = compute_stress(u, prob)
            _, _, sxx, _, _ = laminate_reference(mat1, mat2, 0.5)
            mid = ((n - 1) // 4, (n - 1) // 4)
            errs.append(abs(sig.comp(0, 0)[mid] - sxx))
        assert errs[0] / errs[1] >= 1.8


def test_traction_free_surface_zero_when_unstressed():
    g = Grid(dims=(24, 24), spacing=(1.0, 1.0))
    x, y = g.meshes()
    r = np.hypot(x - 11.5, y - 11.5)
    dp = DomainParameter.from_psi(
        ScalarField(g, 0.5 * (1 + np.tanh((8.0 - r) / 1.5))), 1.5)
    prob = ElasticProblem(dp1=dp, dp2=None, mat1=lame_from_engineering(1.0, 0.25))
    sig = compute_stress(VectorField.zeros(g), prob)
    tr = surface_traction(sig, dp)
    assert np.abs(tr.values).max() < 1e-12
