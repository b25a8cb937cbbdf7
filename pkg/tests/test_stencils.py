"""Stencil operator tests: exactness, hand-computed oracles, conservation,
linearity, convergence order, and face handling."""

import numpy as np
import pytest

from sbmlib.grid import AXISYMMETRIC_RZ, Grid, ScalarField
from sbmlib.stencils import (
    BoxBC,
    FaceClosure,
    FIXED_GRADIENT,
    FIXED_VALUE,
    conservative_div,
    conservative_div_rz,
    cross_derivative,
    gradient,
)


def line_grid(n=41, h=1.0, origin=0.0):
    return Grid(dims=(n,), spacing=(h,), origin=(origin,))


class TestGradient:
    def test_exact_on_quadratic(self):
        g = line_grid(21, 1.0)
        x = g.axis_coords(0)
        grad = gradient(ScalarField(g, x**2)).values[0]
        assert np.allclose(grad, 2 * x, atol=1e-12)

    def test_constant_is_zero(self):
        g = Grid(dims=(9, 7), spacing=(0.3, 0.5))
        grad = gradient(ScalarField.full(g, 3.7)).values
        assert np.allclose(grad, 0.0, atol=1e-12)  # one-sided faces: round-off

    def test_sine_error_bound(self):
        # interior truncation of the central difference: (h^2/6) max|f'''|
        h = 0.1
        g = line_grid(64, h)
        x = g.axis_coords(0)
        grad = gradient(ScalarField(g, np.sin(x))).values[0]
        err = np.abs(grad[1:-1] - np.cos(x[1:-1]))
        assert err.max() <= h**2 / 6.0 * 1.0 + 1e-12

    def test_one_sided_faces_second_order(self):
        errs = []
        for n in (33, 65):
            g = line_grid(n, 1.0 / (n - 1))
            x = g.axis_coords(0)
            grad = gradient(ScalarField(g, np.sin(x))).values[0]
            errs.append(abs(grad[0] - np.cos(x[0])))
        assert errs[0] / errs[1] > 3.5


class TestConservativeDiv:
    def test_laplacian_of_quadratic(self):
        g = line_grid(21, 0.5)
        x = g.axis_coords(0)
        one = ScalarField.full(g, 1.0)
        div = conservative_div(one, ScalarField(g, x**2)).values
        assert np.allclose(div[1:-1], 2.0, atol=1e-12)

    def test_constant_field_zero(self):
        g = Grid(dims=(7, 7), spacing=(0.2, 0.2))
        div = conservative_div(ScalarField.full(g, 2.0), ScalarField.full(g, 5.0)).values
        assert np.all(div == 0)

    def test_hand_computed_face_flux(self):
        # coeff = x, f = x, h = 0.5 on a 5-node line: interior stencil value
        # [(x+h/2)(1) - (x-h/2)(1)]/h = 1 at every interior node
        g = line_grid(5, 0.5, origin=1.0)
        x = g.axis_coords(0)
        div = conservative_div(ScalarField(g, x), ScalarField(g, x)).values
        assert np.allclose(div[1:-1], 1.0, atol=1e-12)

    def test_negative_coefficient_rejected(self):
        g = line_grid(5)
        with pytest.raises(ValueError, match="non-negative"):
            conservative_div(ScalarField.full(g, -1.0), ScalarField.full(g, 0.0))

    def test_rz_grid_rejected(self):
        g = Grid(dims=(5, 5), spacing=(0.1, 0.1), coord_system=AXISYMMETRIC_RZ)
        with pytest.raises(ValueError, match="Cartesian"):
            conservative_div(ScalarField.full(g, 1.0), ScalarField.full(g, 0.0))

    def test_discrete_conservation(self):
        rng = np.random.default_rng(3)
        g = Grid(dims=(12, 9), spacing=(0.3, 0.45))
        coeff = ScalarField(g, rng.random(g.dims) + 0.1)
        f = ScalarField(g, rng.random(g.dims))
        div = conservative_div(coeff, f).values  # zero-gradient faces: zero flux
        total = np.sum(div * g.node_volumes())
        scale = np.abs(div).max() * g.num_nodes
        assert abs(total) <= 1e-12 * scale

    def test_linearity(self):
        rng = np.random.default_rng(4)
        g = Grid(dims=(10, 10), spacing=(0.2, 0.2))
        coeff = ScalarField(g, rng.random(g.dims) + 0.5)
        f1 = rng.random(g.dims)
        f2 = rng.random(g.dims)
        a, b = 2.3, -1.7
        lhs = conservative_div(coeff, ScalarField(g, a * f1 + b * f2)).values
        rhs = a * conservative_div(coeff, ScalarField(g, f1)).values \
            + b * conservative_div(coeff, ScalarField(g, f2)).values
        assert np.allclose(lhs, rhs, rtol=1e-13, atol=1e-13)

    def test_second_order_convergence(self):
        errs = []
        for n in (33, 65):
            g = Grid(dims=(n,), spacing=(2 * np.pi / (n - 1),))
            x = g.axis_coords(0)
            coeff = ScalarField(g, 2.0 + np.cos(x))
            f = ScalarField(g, np.sin(x))
            div = conservative_div(coeff, f).values
            exact = -np.sin(x) * np.cos(x) - (2 + np.cos(x)) * np.sin(x)
            errs.append(np.abs(div[1:-1] - exact[1:-1]).max())
        assert errs[0] / errs[1] >= 3.5

    def test_fixed_value_and_gradient_closures(self):
        g = line_grid(5, 1.0)
        one = ScalarField.full(g, 1.0)
        f = ScalarField(g, np.zeros(5))
        bc = BoxBC({(0, 0): FaceClosure(FIXED_VALUE, 1.0),
                    (0, 1): FaceClosure(FIXED_GRADIENT, 2.0)})
        div = conservative_div(one, f, bc).values
        # boundary value 1 above the interior 0 diffuses in: +2 at the low
        # node; prescribed +2 gradient at the high face also flows in: +2
        assert div[0] == pytest.approx(2.0)
        assert div[-1] == pytest.approx(2.0)
        assert np.all(div[1:-1] == 0)


class TestCrossDerivative:
    def test_mixed_partial_of_bilinear(self):
        g = Grid(dims=(9, 9), spacing=(1.0, 1.0))
        x, y = g.meshes()
        one = ScalarField.full(g, 1.0)
        out = cross_derivative(one, ScalarField(g, x * y), 0, 1).values
        assert np.allclose(out[1:-1, 1:-1], 1.0, atol=1e-12)

    def test_independent_of_inner_axis(self):
        g = Grid(dims=(9, 9), spacing=(1.0, 1.0))
        x, _ = g.meshes()
        one = ScalarField.full(g, 1.0)
        out = cross_derivative(one, ScalarField(g, x**2), 0, 1).values
        assert np.all(out == 0)

    def test_same_axis_rejected(self):
        g = Grid(dims=(9, 9), spacing=(1.0, 1.0))
        one = ScalarField.full(g, 1.0)
        with pytest.raises(ValueError, match="distinct"):
            cross_derivative(one, one, 1, 1)

    def test_against_direct_stencil_evaluation(self):
        # coeff = y, f = x*y on unit spacing: compare interior nodes with the
        # wide stencil written out by hand
        g = Grid(dims=(7, 7), spacing=(1.0, 1.0))
        x, y = g.meshes()
        coeff = y.copy()
        f = x * y
        out = cross_derivative(ScalarField(g, coeff), ScalarField(g, f), 0, 1).values
        i, j = 3, 3
        inner = lambda ii: (f[ii, j + 1] - f[ii, j - 1]) / 2.0
        expect = (coeff[i + 1, j] * inner(i + 1) - coeff[i - 1, j] * inner(i - 1)) / 2.0
        assert out[i, j] == pytest.approx(expect, rel=1e-13)


class TestConservativeDivRZ:
    def rz_grid(self, n_r=21, n_z=9, dr=0.1, dz=0.2, r0=0.0):
        return Grid(dims=(n_r, n_z), spacing=(dr, dz),
                    coord_system=AXISYMMETRIC_RZ, origin=(r0, 0.0))

    def test_cylindrical_laplacian_of_r_squared(self):
        g = self.rz_grid()
        r, _ = g.meshes()
        div = conservative_div_rz(ScalarField.full(g, 1.0), ScalarField(g, r**2)).values
        assert np.allclose(div[:-1, :], 4.0, atol=1e-10)

    def test_constant_zero(self):
        g = self.rz_grid()
        div = conservative_div_rz(ScalarField.full(g, 1.0), ScalarField.full(g, 2.0)).values
        assert np.all(div == 0)

    def test_log_r_harmonic(self):
        g = self.rz_grid(n_r=41, dr=0.025, r0=1.0)
        r, _ = g.meshes()
        div = conservative_div_rz(ScalarField.full(g, 1.0), ScalarField(g, np.log(r))).values
        assert np.abs(div[1:-1, :]).max() < 2e-4  # second-order small

    def test_cartesian_grid_rejected(self):
        g = Grid(dims=(5, 5), spacing=(0.1, 0.1))
        with pytest.raises(ValueError, match="axisymmetric"):
            conservative_div_rz(ScalarField.full(g, 1.0), ScalarField.full(g, 0.0))

    def test_conservation_with_axis(self):
        rng = np.random.default_rng(5)
        g = self.rz_grid(n_r=12, n_z=10)
        coeff = ScalarField(g, rng.random(g.dims) + 0.2)
        f = ScalarField(g, rng.random(g.dims))
        div = conservative_div_rz(coeff, f).values
        total = np.sum(div * g.node_volumes())
        scale = np.abs(div * g.node_volumes()).sum()
        assert abs(total) <= 1e-12 * scale


def test_operators_do_not_wrap_around():
    # a spike at one box face must not leak to the opposite face in one apply
    g = Grid(dims=(16,), spacing=(1.0,))
    f = np.zeros(16)
    f[0] = 1.0
    div = conservative_div(ScalarField.full(g, 1.0), ScalarField(g, f)).values
    assert div[-1] == 0.0 and div[-2] == 0.0
    grad = gradient(ScalarField(g, f)).values[0]
    assert grad[-1] == 0.0
