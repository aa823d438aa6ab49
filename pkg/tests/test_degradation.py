"""
Tests for the degradation chain.
"""

import json
import math
import sys
import unittest
from pathlib import Path

import numpy as np
from hypothesis import given, settings, strategies as st

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from core.exceptions import InvalidParameterError
from core.rng import SeededRng
from degradation import (
    make_gaussian_kernel, kernel_size_for_sigma, sample_sigma, blur, downsample,
    add_noise, DegradationConfig, DegradationRecord, degrade, apply_degradation
)


def naive_blur(image, weights):
    """Quadruple-loop correlation with whole-sample reflection at the borders."""
    _, height, width = image.shape
    radius = weights.shape[0] // 2

    def reflect(i, n):
        if i < 0:
            return -i
        if i > n - 1:
            return 2 * (n - 1) - i
        return i

    out = np.zeros_like(image)
    for y in range(height):
        for x in range(width):
            for ky in range(-radius, radius + 1):
                for kx in range(-radius, radius + 1):
                    out[:, y, x] += weights[ky + radius, kx + radius] * \
                        image[:, reflect(y + ky, height), reflect(x + kx, width)]
    return out


class TestGaussianKernel(unittest.TestCase):
    """Test cases for kernel construction."""

    @settings(max_examples=100, deadline=None)
    @given(sigma=st.floats(min_value=0.1, max_value=10.0))
    def test_kernel_properties(self, sigma):
        """Test unit sum, 8-fold symmetry and central maximum."""
        kernel = make_gaussian_kernel(sigma, kernel_size_for_sigma(sigma))
        w = kernel.weights
        self.assertAlmostEqual(w.sum(), 1.0, delta=1e-9)
        self.assertTrue(np.all(w >= 0))
        np.testing.assert_array_equal(w, w.T)
        np.testing.assert_array_equal(w, w[::-1, :])
        np.testing.assert_array_equal(w, w[:, ::-1])
        centre = kernel.radius
        self.assertEqual(w[centre, centre], w.max())

    def test_near_delta(self):
        """Test that a tiny sigma collapses to an impulse."""
        kernel = make_gaussian_kernel(0.01, 3)
        self.assertGreaterEqual(kernel.weights[1, 1], 1.0 - 1e-6)

    def test_centre_to_corner_ratio(self):
        """Test the unnormalized exp(1) ratio between centre and corner for sigma=1."""
        w = make_gaussian_kernel(1.0, 3).weights
        self.assertAlmostEqual(w[1, 1] / w[0, 0], math.e, places=12)

    def test_weights_read_only(self):
        """Test that kernel weights cannot be modified."""
        kernel = make_gaussian_kernel(1.0, 5)
        with self.assertRaises(ValueError):
            kernel.weights[0, 0] = 1.0

    def test_size_policy(self):
        """Test the three-sigma and fixed size policies."""
        self.assertEqual(kernel_size_for_sigma(1.0), 7)
        self.assertEqual(kernel_size_for_sigma(0.01), 3)
        self.assertEqual(kernel_size_for_sigma(2.5), 17)
        self.assertEqual(kernel_size_for_sigma(5.0, 'fixed', 21), 21)
        self.assertEqual(kernel_size_for_sigma(5.0, 'fixed', 8), 9)
        with self.assertRaises(InvalidParameterError):
            kernel_size_for_sigma(1.0, 'adaptive')

    def test_invalid_arguments(self):
        """Test rejection of non-positive sigma and even sizes."""
        with self.assertRaises(InvalidParameterError):
            make_gaussian_kernel(0.0, 3)
        with self.assertRaises(InvalidParameterError):
            make_gaussian_kernel(-1.0, 3)
        with self.assertRaises(InvalidParameterError):
            make_gaussian_kernel(1.0, 4)
        with self.assertRaises(InvalidParameterError):
            make_gaussian_kernel(1.0, 1)


class TestSampleSigma(unittest.TestCase):
    """Test cases for sigma sampling."""

    def test_degenerate_range(self):
        """Test a near-empty range."""
        sigma = sample_sigma(2.0, 2.0 + 1e-12, SeededRng(0))
        self.assertAlmostEqual(sigma, 2.0, places=9)

    def test_range(self):
        """Test that samples stay inside [alpha, beta]."""
        rng = SeededRng(1)
        samples = np.array([sample_sigma(0.1, 3.0, rng) for _ in range(100000)])
        self.assertGreaterEqual(samples.min(), 0.1)
        self.assertLessEqual(samples.max(), 3.0)

    def test_uniform_mean(self):
        """Test the sample mean of U(0, 1)."""
        rng = SeededRng(2)
        samples = np.array([sample_sigma(0.0, 1.0, rng) for _ in range(1000000)])
        self.assertAlmostEqual(samples.mean(), 0.5, delta=0.002)

    def test_invalid_range(self):
        """Test rejection of alpha >= beta and negative alpha."""
        with self.assertRaises(InvalidParameterError):
            sample_sigma(1.0, 1.0, SeededRng(0))
        with self.assertRaises(InvalidParameterError):
            sample_sigma(-0.5, 1.0, SeededRng(0))


class TestBlur(unittest.TestCase):
    """Test cases for blur."""

    def test_matches_naive_loop(self):
        """Test the scipy path against a quadruple-loop oracle on 50 random images."""
        rng = np.random.default_rng(0)
        images = rng.random((50, 16, 16))
        for sigma in (0.5, 1.0, 2.0, 5.0):
            # largest odd size that fits a 16x16 image
            size = min(kernel_size_for_sigma(sigma), 15)
            kernel = make_gaussian_kernel(sigma, size)
            fast = blur(images, kernel)
            slow = naive_blur(images, kernel.weights)
            self.assertLess(np.abs(fast - slow).max(), 1e-6, f"sigma={sigma}")

    def test_constant_image(self):
        """Test that a constant image is unchanged."""
        image = np.full((3, 20, 20), 0.37)
        out = blur(image, make_gaussian_kernel(2.0, 13))
        np.testing.assert_allclose(out, image, atol=1e-12)

    def test_impulse_response(self):
        """Test that a centred impulse reproduces the kernel."""
        kernel = make_gaussian_kernel(1.0, 7)
        image = np.zeros((1, 21, 21))
        image[0, 10, 10] = 1.0
        out = blur(image, kernel)
        np.testing.assert_allclose(out[0, 7:14, 7:14], kernel.weights, atol=1e-15)

    def test_linearity(self):
        """Test blur(aX + bY) = a blur(X) + b blur(Y)."""
        rng = np.random.default_rng(3)
        x, y = rng.random((2, 2, 24, 24))
        kernel = make_gaussian_kernel(1.7, kernel_size_for_sigma(1.7))
        a, b = 0.3, -1.9
        lhs = blur(a * x + b * y, kernel)
        rhs = a * blur(x, kernel) + b * blur(y, kernel)
        self.assertLess(np.abs(lhs - rhs).max(), 1e-6)

    def test_shape_preserved(self):
        """Test that blur keeps the input shape."""
        image = np.random.default_rng(4).random((3, 17, 23))
        self.assertEqual(blur(image, make_gaussian_kernel(1.0, 7)).shape, (3, 17, 23))

    def test_kernel_larger_than_image(self):
        """Test rejection of kernels that do not fit."""
        with self.assertRaises(InvalidParameterError):
            blur(np.zeros((1, 8, 8)), make_gaussian_kernel(2.0, 13))


class TestDownsample(unittest.TestCase):
    """Test cases for downsampling."""

    def test_decimation(self):
        """Test that decimation keeps the top-left pixel of each cell."""
        image = np.arange(16, dtype=np.float64).reshape(1, 4, 4)
        out = downsample(image, 2)
        np.testing.assert_array_equal(out[0], [[0, 2], [8, 10]])

    def test_identity(self):
        """Test scale 1."""
        image = np.random.default_rng(5).random((3, 6, 6))
        np.testing.assert_array_equal(downsample(image, 1), image)

    def test_patch_shape(self):
        """Test a 96x96 patch at x2."""
        self.assertEqual(downsample(np.zeros((3, 96, 96)), 2).shape, (3, 48, 48))

    def test_bicubic_option(self):
        """Test the bicubic downsampler shape."""
        out = downsample(np.full((1, 32, 32), 0.25), 4, 'bicubic')
        self.assertEqual(out.shape, (1, 8, 8))
        np.testing.assert_allclose(out, 0.25, atol=1e-9)

    def test_not_divisible(self):
        """Test rejection of dimensions not divisible by the scale."""
        with self.assertRaises(InvalidParameterError):
            downsample(np.zeros((1, 9, 8)), 2)


class TestAddNoise(unittest.TestCase):
    """Test cases for additive noise."""

    def test_zero_std(self):
        """Test that zero noise is the identity."""
        image = np.random.default_rng(6).random((3, 8, 8))
        np.testing.assert_array_equal(add_noise(image, 0.0, SeededRng(0)), image)

    def test_empirical_std(self):
        """Test the noise level on a mid-grey image."""
        image = np.full((1, 1000, 1000), 0.5)
        out = add_noise(image, 0.02, SeededRng(7))
        self.assertAlmostEqual(np.std(out - image), 0.02, delta=0.001)

    def test_mean_shift_within_standard_error(self):
        """Test that the noise adds no bias beyond three standard errors of the mean."""
        image = np.full((1, 64, 64), 0.5)
        std = 0.02
        bound = 3 * std / math.sqrt(64 * 64)
        within = [abs(np.mean(add_noise(image, std, SeededRng(seed)) - image)) < bound
                  for seed in range(200)]
        self.assertGreaterEqual(sum(within) / len(within), 0.97)

    def test_clamped(self):
        """Test that outputs stay in [0, 1]."""
        out = add_noise(np.zeros((1, 64, 64)), 0.3, SeededRng(8))
        self.assertGreaterEqual(out.min(), 0.0)
        out = add_noise(np.ones((1, 64, 64)), 0.3, SeededRng(8))
        self.assertLessEqual(out.max(), 1.0)

    def test_negative_std(self):
        """Test rejection of a negative noise level."""
        with self.assertRaises(InvalidParameterError):
            add_noise(np.zeros((1, 4, 4)), -0.1, SeededRng(0))


class TestDegrade(unittest.TestCase):
    """Test cases for the full degradation chain."""

    def setUp(self):
        self.hr = np.random.default_rng(9).random((3, 96, 96))

    def test_near_identity(self):
        """Test that a near-delta kernel without noise at x1 keeps the image."""
        cfg = DegradationConfig(scale=1, alpha=0.0, beta=0.01, noise_max=0.0)
        lr, record = degrade(self.hr, cfg, SeededRng(10))
        self.assertEqual(record.noise_std, 0.0)
        self.assertLess(np.abs(lr - self.hr).max(), 1e-4)

    def test_deterministic(self):
        """Test that a fixed seed gives bit-identical outputs."""
        cfg = DegradationConfig()
        lr_a, rec_a = degrade(self.hr, cfg, SeededRng(11))
        lr_b, rec_b = degrade(self.hr, cfg, SeededRng(11))
        np.testing.assert_array_equal(lr_a, lr_b)
        self.assertEqual(rec_a, rec_b)

    def test_composition(self):
        """Test equality with the component operators applied in sequence."""
        cfg = DegradationConfig(scale=2)
        lr, record = degrade(self.hr, cfg, SeededRng(12))
        self.assertEqual(lr.shape, (3, 48, 48))

        kernel = make_gaussian_kernel(record.sigma, record.kernel_size)
        expected = add_noise(downsample(blur(self.hr, kernel), 2), record.noise_std,
                             SeededRng(record.noise_seed))
        np.testing.assert_array_equal(lr, expected)

    def test_replay(self):
        """Test that a serialized record replays bit-exactly."""
        cfg = DegradationConfig(scale=4, alpha=0.5, beta=2.0)
        lr, record = degrade(self.hr, cfg, SeededRng(13))
        restored = DegradationRecord.from_dict(json.loads(json.dumps(record.to_dict())))
        np.testing.assert_array_equal(apply_degradation(self.hr, restored), lr)

    def test_record_values(self):
        """Test that sampled values respect the config."""
        cfg = DegradationConfig(alpha=0.5, beta=1.5, noise_max=0.05)
        for seed in range(20):
            _, record = degrade(self.hr, cfg, SeededRng(seed))
            self.assertTrue(0.5 <= record.sigma <= 1.5)
            self.assertTrue(0.0 <= record.noise_std <= 0.05)
            self.assertEqual(record.kernel_size, kernel_size_for_sigma(record.sigma))

    def test_zero_alpha(self):
        """Test that alpha=0 is accepted."""
        cfg = DegradationConfig(alpha=0.0, beta=1e-9, noise_max=0.0)
        lr, _ = degrade(self.hr, cfg, SeededRng(14))
        np.testing.assert_allclose(lr, self.hr[:, ::2, ::2], atol=1e-12)

    def test_indivisible_hr(self):
        """Test rejection of HR dims not divisible by the scale."""
        with self.assertRaises(InvalidParameterError):
            degrade(np.zeros((1, 33, 32)), DegradationConfig(scale=2), SeededRng(0))

    def test_config_validation(self):
        """Test config field checks."""
        DegradationConfig().validate()
        for bad in (DegradationConfig(scale=3), DegradationConfig(alpha=2.0, beta=1.0),
                    DegradationConfig(noise_max=-0.1), DegradationConfig(downsampler='area'),
                    DegradationConfig(kernel_policy='fixed', fixed_kernel_size=4)):
            with self.assertRaises(InvalidParameterError):
                bad.validate()


if __name__ == '__main__':
    unittest.main()
