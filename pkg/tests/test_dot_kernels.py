import math

import numpy as np
import pytest

from spheresgd import (
    NtkKernel,
    PowerSeriesKernel,
    arc_kappa0,
    arc_kappa1,
    gram_row,
    kernel_bound,
    kernel_eval,
    linear_kernel,
    sample_uniform_sphere,
)
from spheresgd.dot_kernels import validate_low_order_coefficients


class TestArcCosineMaps:
    def test_kappa0_endpoints(self):
        assert arc_kappa0(-1.0) == 0.0
        assert abs(arc_kappa0(0.0) - 0.5) < 1e-15
        assert arc_kappa0(1.0) == 1.0

    def test_kappa1_endpoints(self):
        assert abs(arc_kappa1(-1.0)) < 1e-15
        assert abs(arc_kappa1(0.0) - 1.0 / math.pi) < 1e-15
        assert arc_kappa1(1.0) == 1.0

    def test_monotone_and_bounded(self):
        t = np.linspace(-1, 1, 501)
        for f in (arc_kappa0, arc_kappa1):
            v = f(t)
            assert np.all(np.diff(v) >= -1e-15)
            assert v.min() >= -1e-15 and v.max() <= 1.0 + 1e-15

    def test_scalar_in_float_out(self):
        assert isinstance(arc_kappa0(0.3), float)
        assert isinstance(arc_kappa1(np.float64(0.3)), float)


class TestNtkKernel:
    def test_depth_one_is_identity(self):
        t = np.linspace(-1, 1, 101)
        assert np.max(np.abs(kernel_eval(NtkKernel(1), t) - t)) == 0.0

    def test_depth_two_closed_form(self):
        # depth 2: phi(t) = t kappa0(t) + kappa1(t)
        t = np.linspace(-1, 1, 101)
        want = t * arc_kappa0(t) + arc_kappa1(t)
        assert np.max(np.abs(kernel_eval(NtkKernel(2), t) - want)) < 1e-15

    def test_frozen_point_values(self):
        k2 = NtkKernel(2)
        assert abs(kernel_eval(k2, 0.5) - 0.9423311143775628) < 1e-15
        assert abs(kernel_eval(k2, 0.0) - 1.0 / math.pi) < 1e-15
        assert kernel_eval(k2, 1.0) == 2.0
        assert abs(kernel_eval(k2, -1.0)) < 1e-15

    def test_value_at_one_equals_depth(self):
        for depth in range(1, 7):
            assert abs(kernel_eval(NtkKernel(depth), 1.0) - depth) < 1e-12
            assert kernel_bound(NtkKernel(depth)) == float(depth)

    def test_invalid_depth(self):
        with pytest.raises(ValueError):
            NtkKernel(0)


class TestPowerSeriesKernel:
    def test_matches_polyval(self):
        coeffs = (0.3, 0.0, 0.4, 0.2, 0.1)
        spec = PowerSeriesKernel(coeffs)
        t = np.linspace(-1, 1, 101)
        want = np.polynomial.polynomial.polyval(t, coeffs)
        assert np.max(np.abs(kernel_eval(spec, t) - want)) < 1e-15

    def test_linear_kernel(self):
        spec = linear_kernel()
        assert spec.coeffs == (0.0, 1.0)
        assert kernel_eval(spec, 0.37) == 0.37
        assert kernel_bound(spec) == 1.0

    def test_coefficients_coerced_to_float_tuple(self):
        spec = PowerSeriesKernel([1, 2])
        assert spec.coeffs == (1.0, 2.0)
        assert kernel_bound(spec) == 3.0

    def test_validation(self):
        with pytest.raises(ValueError):
            PowerSeriesKernel(())
        with pytest.raises(ValueError):
            PowerSeriesKernel((0.5, -0.1))
        with pytest.raises(ValueError):
            PowerSeriesKernel((0.0, 0.0))


class TestEvaluatorPlumbing:
    def test_clamp_tolerance(self):
        assert kernel_eval(linear_kernel(), 1.0 + 5e-13) == 1.0
        with pytest.raises(ValueError, match="outside"):
            kernel_eval(linear_kernel(), 1.0 + 1e-9)
        with pytest.raises(ValueError, match="outside"):
            kernel_eval(NtkKernel(2), -1.0 - 1e-9)

    def test_unknown_spec_types(self):
        with pytest.raises(TypeError):
            kernel_eval("rbf", 0.5)
        with pytest.raises(TypeError):
            kernel_bound(object())

    def test_shape_preserved(self):
        t = np.zeros((3, 4))
        assert kernel_eval(NtkKernel(3), t).shape == (3, 4)


class TestGramRow:
    def test_values_match_pointwise(self):
        x = sample_uniform_sphere(4, 12, 7)
        q = x[5]
        for spec in (NtkKernel(2), PowerSeriesKernel((0.2, 0.5, 0.3))):
            row = gram_row(spec, x, q)
            want = np.array([kernel_eval(spec, float(xi @ q)) for xi in x])
            assert np.max(np.abs(row - want)) < 1e-14

    def test_full_gram_psd(self):
        x = sample_uniform_sphere(5, 40, 11)
        for spec in (NtkKernel(2), NtkKernel(3), PowerSeriesKernel((0.1, 0.4, 0.3, 0.2))):
            gram = np.stack([gram_row(spec, x, xi) for xi in x])
            assert np.max(np.abs(gram - gram.T)) < 1e-12
            eigs = np.linalg.eigvalsh(0.5 * (gram + gram.T))
            assert eigs.min() > -1e-9  # a positive-definite function of <x,y>

    def test_empty_support(self):
        out = gram_row(linear_kernel(), np.zeros((0, 4)), np.array([1.0, 0, 0, 0]))
        assert out.shape == (0,)

    def test_shape_errors(self):
        x = sample_uniform_sphere(3, 5, 0)
        with pytest.raises(ValueError, match="2-d"):
            gram_row(linear_kernel(), x[0], x[0])
        with pytest.raises(ValueError, match="mismatch"):
            gram_row(linear_kernel(), x, np.ones(3))


class TestLowOrderCoefficientCheck:
    def test_warns_on_vanishing_low_order(self):
        # the linear kernel has a zero constant term
        with pytest.warns(UserWarning, match="vanish"):
            validate_low_order_coefficients(linear_kernel(), 1.5)

    def test_silent_when_all_positive(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            validate_low_order_coefficients(PowerSeriesKernel((0.25, 0.25, 0.25, 0.25)), 1.0)
            validate_low_order_coefficients(NtkKernel(2), 5.0)  # non-series specs skipped
