import math

import numpy as np
import pytest

from spheresgd import (
    HarmonicModeTarget,
    KernelCombinationTarget,
    NtkKernel,
    compute_spectrum,
    generate_labels,
    harmonic_multiplicity,
    kernel_eval,
    linear_kernel,
    make_kernel_target,
    make_source_target,
    sample_uniform_sphere,
    target_eval,
    zonal_values,
)


class TestKernelCombinationTarget:
    def test_rkhs_norm_hand_value(self):
        # two antipodal anchors, linear kernel: G = [[1,-1],[-1,1]],
        # w = (1, 0.5) -> w G w = 1 - 1 + 0.25 = 0.25
        anchors = np.array([[1.0, 0.0], [-1.0, 0.0]])
        t = KernelCombinationTarget(linear_kernel(), anchors, np.array([1.0, 0.5]), 0.0)
        assert t.rkhs_norm_sq() == pytest.approx(0.25, abs=1e-15)

    def test_single_anchor_norm_is_phi_at_one(self):
        anchors = sample_uniform_sphere(4, 1, 3)
        t = KernelCombinationTarget(NtkKernel(2), anchors, np.array([2.0]))
        assert t.rkhs_norm_sq() == pytest.approx(4.0 * 2.0, abs=1e-12)

    def test_eval_matches_expansion(self):
        target = make_kernel_target(NtkKernel(2), 3, 4, 11, noise_sigma=0.0)
        x = sample_uniform_sphere(3, 6, 12)
        vals = target_eval(target, x)
        want = [
            sum(
                w * kernel_eval(target.kernel, float(a @ xi))
                for w, a in zip(target.weights, target.anchors)
            )
            for xi in x
        ]
        assert np.max(np.abs(vals - np.array(want))) < 1e-13
        assert isinstance(target_eval(target, x[0]), float)

    def test_constructor_validation(self):
        kern = linear_kernel()
        good = sample_uniform_sphere(2, 3, 0)
        with pytest.raises(ValueError, match="unit-norm"):
            KernelCombinationTarget(kern, 2.0 * good, np.ones(3))
        with pytest.raises(ValueError):
            KernelCombinationTarget(kern, good, np.ones(4))
        with pytest.raises(ValueError):
            KernelCombinationTarget(kern, good, np.ones(3), noise_sigma=-0.5)
        with pytest.raises(ValueError):
            make_kernel_target(kern, 3, 0, 1)

    def test_metadata_roundtrip(self):
        target = make_kernel_target(linear_kernel(), 2, 2, 5, noise_sigma=0.25)
        meta = target.to_metadata()
        assert meta["kind"] == "kernel_combination"
        assert meta["num_anchors"] == 2
        assert meta["noise_sigma"] == 0.25
        assert meta["rkhs_norm_sq"] == pytest.approx(target.rkhs_norm_sq())


class TestHarmonicModeTarget:
    def test_eval_is_scaled_zonal_polynomial(self):
        u = np.zeros(4)
        u[0] = 1.0
        t = HarmonicModeTarget(d=3, degree=2, direction=u, scale=1.5, noise_sigma=0.0)
        x = sample_uniform_sphere(3, 8, 2)
        want = 1.5 * zonal_values(3, 2, x @ u)[2]
        assert np.max(np.abs(target_eval(t, x) - want)) == 0.0
        # P_{2,d}(0) = -1/d in the sphere-d convention
        perp = np.array([0.0, 1.0, 0.0, 0.0])
        assert target_eval(t, perp) == pytest.approx(-1.5 / 3.0, abs=1e-15)

    def test_convention_switch(self):
        u = np.array([1.0, 0.0, 0.0])
        base = dict(d=2, degree=2, direction=u, scale=1.0, noise_sigma=0.0)
        perp = np.array([0.0, 1.0, 0.0])
        sphere = HarmonicModeTarget(**base)
        paper = HarmonicModeTarget(convention="paper-formula", **base)
        assert target_eval(sphere, perp) == pytest.approx(-1.0 / 2.0)  # ((d+1)t^2-1)/d
        assert target_eval(paper, perp) == pytest.approx(-1.0)  # (d t^2 - 1)/(d-1)

    def test_second_moment_formula_and_monte_carlo(self):
        u = sample_uniform_sphere(5, 1, 9)[0]
        t = HarmonicModeTarget(d=5, degree=3, direction=u, scale=2.0, noise_sigma=0.0)
        want = 4.0 / harmonic_multiplicity(5, 3)
        assert t.second_moment() == pytest.approx(want, rel=1e-12)
        x = sample_uniform_sphere(5, 200_000, 10)
        vals = target_eval(t, x)
        est = float(np.mean(vals**2))
        se = float(np.std(vals**2, ddof=1)) / math.sqrt(len(vals))
        assert abs(est - want) < 4 * se

    def test_constructor_validation(self):
        u = np.array([1.0, 0.0, 0.0, 0.0])
        with pytest.raises(ValueError, match="coordinates"):
            HarmonicModeTarget(d=2, degree=1, direction=u, scale=1.0)
        with pytest.raises(ValueError, match="unit-norm"):
            HarmonicModeTarget(d=3, degree=1, direction=2 * u, scale=1.0)
        with pytest.raises(ValueError, match="finite"):
            HarmonicModeTarget(d=3, degree=1, direction=u, scale=math.inf)
        with pytest.raises(ValueError):
            HarmonicModeTarget(d=3, degree=1, direction=u, scale=1.0, noise_sigma=-1.0)


class TestSourceTarget:
    def test_scale_reads_profile(self):
        prof = compute_spectrum(NtkKernel(2), 3, 8)
        for s in (0.5, 1.0, 2.0):
            t = make_source_target(prof, s, 2, seed=4, noise_sigma=0.0)
            want = prof.mu_at(2) ** (s / 2.0) / math.sqrt(harmonic_multiplicity(3, 2))
            assert t.scale == pytest.approx(want, rel=1e-15)
            assert t.d == 3 and t.degree == 2 and t.convention == "sphere-d"

    def test_zero_mass_degree_rejected(self):
        prof = compute_spectrum(NtkKernel(2), 3, 8)
        with pytest.raises(ValueError, match="no spectral mass"):
            make_source_target(prof, 1.0, 3, seed=4)  # odd degree >= 3 vanishes

    def test_invalid_smoothness(self):
        prof = compute_spectrum(NtkKernel(2), 3, 4)
        with pytest.raises(ValueError):
            make_source_target(prof, 0.0, 2, seed=4)

    def test_direction_deterministic(self):
        prof = compute_spectrum(NtkKernel(2), 3, 4)
        a = make_source_target(prof, 1.0, 2, seed=99)
        b = make_source_target(prof, 1.0, 2, seed=99)
        assert np.array_equal(a.direction, b.direction)


class TestLabels:
    def test_noiseless_labels_are_exact_values(self):
        target = make_kernel_target(NtkKernel(2), 3, 2, 1, noise_sigma=0.0)
        x = sample_uniform_sphere(3, 16, 2)
        y = generate_labels(target, x, seed=3)
        assert np.array_equal(y, target_eval(target, x))

    def test_noise_is_seeded_and_additive(self):
        target = make_kernel_target(linear_kernel(), 3, 2, 1, noise_sigma=0.7)
        x = sample_uniform_sphere(3, 50, 2)
        y1 = generate_labels(target, x, seed=3)
        y2 = generate_labels(target, x, seed=3)
        y3 = generate_labels(target, x, seed=4)
        assert np.array_equal(y1, y2)
        assert not np.array_equal(y1, y3)
        rng = np.random.default_rng(3)
        assert np.array_equal(y1, target_eval(target, x) + rng.normal(0.0, 0.7, size=50))

    def test_noise_scale_statistics(self):
        target = make_kernel_target(linear_kernel(), 2, 1, 1, noise_sigma=2.0)
        x = sample_uniform_sphere(2, 100_000, 5)
        noise = generate_labels(target, x, seed=6) - target_eval(target, x)
        assert abs(float(np.std(noise)) - 2.0) < 0.02

    def test_type_errors(self):
        with pytest.raises(TypeError):
            target_eval("not a target", np.zeros(3))

    def test_dimension_mismatch(self):
        target = make_kernel_target(linear_kernel(), 3, 2, 1)
        with pytest.raises(ValueError):
            target_eval(target, np.zeros(3))
        u = np.array([1.0, 0.0, 0.0])
        ht = HarmonicModeTarget(d=2, degree=1, direction=u, scale=1.0)
        with pytest.raises(ValueError):
            target_eval(ht, np.zeros((4, 5)))
