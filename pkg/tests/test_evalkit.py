"""
Tests for PSNR, bicubic resampling, Lucy-Richardson and method comparison.
"""

import json
import math
import shutil
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np
from hypothesis import given, settings, strategies as st
from PIL import Image
from scipy import ndimage

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from core.exceptions import InvalidParameterError, MisalignedSetsError
from core.rng import SeededRng
from degradation.kernels import make_gaussian_kernel
from evalkit import (
    EvalReport, psnr, format_table, write_reports, read_reports, INFINITE_PSNR,
    bicubic_resize, lucy_richardson, SRMethod, BicubicMethod, LucyRichardsonMethod,
    GroundTruthMethod, ExternalMethod, NetworkMethod, compare_methods, check_alignment
)
from jnet import NetworkSpec, build_network


class TestPSNR(unittest.TestCase):
    """Test cases for the PSNR metric."""

    def test_one_level_offset(self):
        """Test a uniform error of one 8-bit level."""
        a = np.random.default_rng(0).random((3, 8, 8)) * 0.5
        self.assertAlmostEqual(psnr(a, a + 1.0 / 255.0), 48.1308, places=3)

    def test_full_scale_error(self):
        """Test that an all-zero vs all-one pair gives 0 dB."""
        self.assertAlmostEqual(psnr(np.zeros((1, 4, 4)), np.ones((1, 4, 4))), 0.0, places=9)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1),
           channels=st.sampled_from([1, 3]))
    def test_symmetric(self, seed, channels):
        """Test psnr(a, b) == psnr(b, a)."""
        rng = np.random.default_rng(seed)
        a, b = rng.random((channels, 6, 6)), rng.random((channels, 6, 6))
        self.assertEqual(psnr(a, b), psnr(b, a))

    def test_decreasing_in_uniform_offset(self):
        """Test that PSNR strictly falls as a uniform offset grows."""
        a = np.random.default_rng(3).random((3, 8, 8)) * 0.25
        values = [psnr(a, a + delta) for delta in (0.001, 0.01, 0.05, 0.1, 0.3, 0.5, 0.75)]
        for earlier, later in zip(values, values[1:]):
            self.assertGreater(earlier, later)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_pixel_permutation_invariant(self, seed):
        """Test that permuting the pixels of both images the same way keeps PSNR."""
        rng = np.random.default_rng(seed)
        a, b = rng.random((3, 6, 6)), rng.random((3, 6, 6))
        order = rng.permutation(a.size)
        shuffled_a = a.reshape(-1)[order].reshape(a.shape)
        shuffled_b = b.reshape(-1)[order].reshape(b.shape)
        self.assertAlmostEqual(psnr(shuffled_a, shuffled_b), psnr(a, b), places=9)

    def test_identical_images(self):
        """Test that identical images give +inf."""
        a = np.random.default_rng(2).random((1, 5, 5))
        self.assertEqual(psnr(a, a.copy()), INFINITE_PSNR)

    def test_peak(self):
        """Test that the peak rescales the result."""
        a = np.zeros((1, 4, 4))
        self.assertAlmostEqual(psnr(a, a + 1.0, peak=255.0), 20 * math.log10(255.0), places=9)
        with self.assertRaises(InvalidParameterError):
            psnr(a, a, peak=0.0)

    def test_shape_mismatch(self):
        """Test rejection of differently shaped images."""
        with self.assertRaises(InvalidParameterError):
            psnr(np.zeros((3, 4, 4)), np.zeros((3, 4, 5)))

    def test_border_crop(self):
        """Test that a cropped border ignores errors confined to it."""
        a = np.zeros((1, 8, 8))
        b = a.copy()
        b[:, 0, :] = 1.0
        b[:, :, -1] = 1.0
        self.assertEqual(psnr(a, b, crop=1), INFINITE_PSNR)
        self.assertLess(psnr(a, b), 20.0)
        with self.assertRaises(InvalidParameterError):
            psnr(a, b, crop=4)


class TestBicubic(unittest.TestCase):
    """Test cases for cubic-convolution resampling."""

    def test_scale_one_copies(self):
        """Test that x1 returns an equal copy."""
        image = np.random.default_rng(0).random((3, 5, 6))
        out = bicubic_resize(image, 1)
        np.testing.assert_array_equal(out, image)
        self.assertIsNot(out, image)

    def test_constant_preserved(self):
        """Test that constant images stay constant in both directions."""
        image = np.full((2, 8, 12), 0.37)
        for direction, shape in (('up', (2, 16, 24)), ('down', (2, 4, 6))):
            out = bicubic_resize(image, 2, direction)
            self.assertEqual(out.shape, shape)
            np.testing.assert_allclose(out, 0.37, atol=1e-12)

    def test_samples_recovered(self):
        """Test that every scale-th upsampled pixel is an input pixel."""
        image = np.random.default_rng(1).random((3, 7, 9))
        for scale in (2, 3):
            up = bicubic_resize(image, scale, 'up')
            np.testing.assert_allclose(up[:, ::scale, ::scale], image, atol=1e-12)

    def test_linear_ramp_interior(self):
        """Test that a horizontal ramp stays linear away from the borders."""
        width = 10
        image = np.tile(np.arange(width, dtype=np.float64), (1, 4, 1))
        up = bicubic_resize(image, 2, 'up')
        columns = np.arange(2, 2 * width - 6)
        np.testing.assert_allclose(up[0, 1, columns], columns / 2.0, atol=1e-12)

    def test_invalid_arguments(self):
        """Test rejection of bad shapes, scales, directions and indivisible sizes."""
        image = np.zeros((1, 6, 6))
        with self.assertRaises(InvalidParameterError):
            bicubic_resize(np.zeros((6, 6)), 2)
        with self.assertRaises(InvalidParameterError):
            bicubic_resize(image, 0)
        with self.assertRaises(InvalidParameterError):
            bicubic_resize(image, 1.5)
        with self.assertRaises(InvalidParameterError):
            bicubic_resize(image, 2, 'sideways')
        with self.assertRaises(InvalidParameterError):
            bicubic_resize(np.zeros((1, 7, 6)), 2, 'down')


def mirror_convolve(image: np.ndarray, kernel) -> np.ndarray:
    return np.stack([ndimage.convolve(c, kernel.weights, mode='mirror') for c in image])


class TestLucyRichardson(unittest.TestCase):
    """Test cases for Richardson-Lucy deconvolution."""

    def test_near_delta_psf(self):
        """Test that a near-delta PSF leaves the image almost unchanged."""
        image = np.random.default_rng(0).random((1, 16, 16)) + 0.1
        out = lucy_richardson(image, make_gaussian_kernel(0.1, 3), iters=10)
        self.assertLess(np.abs(out - image).max(), 1e-3)

    def test_constant_fixed_point(self):
        """Test that a constant image is a fixed point."""
        image = np.full((2, 12, 12), 0.4)
        out = lucy_richardson(image, make_gaussian_kernel(1.5, 9), iters=5)
        np.testing.assert_allclose(out, 0.4, atol=1e-12)

    def test_sharpens_blurred_bar(self):
        """Test that deconvolving a blurred bar moves it closer to the original."""
        sharp = np.full((1, 32, 32), 0.1)
        sharp[:, :, 14:18] = 0.9
        psf = make_gaussian_kernel(2.0, 13)
        observed = mirror_convolve(sharp, psf)
        restored = lucy_richardson(observed, psf, iters=30)
        self.assertLess(np.mean((restored - sharp) ** 2), np.mean((observed - sharp) ** 2))

    def test_flux_preserved(self):
        """Test that 30 iterations on a blurred bar keep the total intensity within 1%."""
        sharp = np.full((1, 32, 32), 0.1)
        sharp[:, :, 14:18] = 0.9
        psf = make_gaussian_kernel(2.0, 13)
        observed = mirror_convolve(sharp, psf)
        flux = observed.sum()
        drift = []

        def record(iteration, estimate):
            drift.append(abs(estimate.sum() - flux) / flux)

        lucy_richardson(observed, psf, iters=30, on_iterate=record)
        self.assertEqual(len(drift), 30)
        self.assertLess(max(drift), 0.01)

    def test_non_negative_iterates(self):
        """Test that every iterate is non-negative and the callback sees each one."""
        image = np.random.default_rng(1).random((3, 16, 16))
        image[0, 3, 3] = 0.0
        seen = []

        def check(iteration, estimate):
            seen.append(iteration)
            self.assertGreaterEqual(estimate.min(), 0.0)

        lucy_richardson(image, make_gaussian_kernel(1.0, 7), iters=8, on_iterate=check)
        self.assertEqual(seen, list(range(1, 9)))

    def test_invalid_arguments(self):
        """Test rejection of negative input, zero iterations and oversized PSFs."""
        psf = make_gaussian_kernel(1.0, 7)
        image = np.full((1, 8, 8), 0.5)
        with self.assertRaises(InvalidParameterError):
            lucy_richardson(image - 1.0, psf)
        with self.assertRaises(InvalidParameterError):
            lucy_richardson(image, psf, iters=0)
        with self.assertRaises(InvalidParameterError):
            lucy_richardson(np.full((1, 5, 5), 0.5), psf)
        with self.assertRaises(InvalidParameterError):
            lucy_richardson(np.full((8, 8), 0.5), psf)


class TestEvalReport(unittest.TestCase):
    """Test cases for reports and their serialization."""

    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp())

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_mean(self):
        """Test the mean over finite and infinite entries."""
        report = EvalReport('m', ['a', 'b'], [30.0, 32.0])
        self.assertEqual(report.mean_psnr, 31.0)
        self.assertEqual(report.infinite_entries, [])
        exact = EvalReport('m', ['a', 'b'], [30.0, INFINITE_PSNR])
        self.assertEqual(exact.mean_psnr, INFINITE_PSNR)
        self.assertEqual(exact.infinite_entries, ['b'])

    def test_json_round_trip(self):
        """Test that to_dict/from_dict preserves infinities."""
        report = EvalReport('gt', ['a', 'b'], [INFINITE_PSNR, 25.5],
                            fingerprint={'seed': 1}, method_params={'scale': 2})
        data = json.loads(report.to_json())
        self.assertEqual(data['mean_psnr'], 'inf')
        self.assertEqual(data['images'][0], {'name': 'a', 'psnr': 'inf'})
        self.assertEqual(EvalReport.from_dict(data), report)

    def test_table(self):
        """Test the summary table layout."""
        table = format_table([EvalReport('bicubic', ['a'], [28.0]),
                              EvalReport('ground-truth', ['a'], [INFINITE_PSNR])])
        lines = table.splitlines()
        self.assertEqual(lines[0].split(), ['Method', 'Images', 'PSNR', '(dB)'])
        self.assertEqual(lines[2].split(), ['bicubic', '1', '28.0000'])
        self.assertEqual(lines[3].split(), ['ground-truth', '1', 'inf'])

    def test_write_and_read(self):
        """Test that written reports read back equal."""
        reports = [EvalReport('a', ['x.png', 'y.png'], [30.25, 31.5], {'seed': 3}),
                   EvalReport('b', ['x.png', 'y.png'], [INFINITE_PSNR, 20.0], {'seed': 3})]
        paths = write_reports(reports, self.tmp / "out", stem="cmp")
        self.assertEqual(paths['table'].name, "cmp.txt")
        self.assertIn("x.png\t30.2500", paths['table'].read_text())
        self.assertEqual(read_reports(paths['json']), reports)


class ShrinkingMethod(SRMethod):
    name = "broken"

    def super_resolve(self, image_name, lr):
        return lr


class TestCompare(unittest.TestCase):
    """Test cases for multi-method comparison."""

    def setUp(self):
        rng = np.random.default_rng(5)
        self.names = [f"img{i}.png" for i in range(5)]
        self.hr_set = [(n, rng.random((3, 16, 16))) for n in self.names]
        self.lr_set = [(n, np.clip(bicubic_resize(hr, 2, 'down'), 0.0, 1.0)) for n, hr in self.hr_set]
        self.tmp = Path(tempfile.mkdtemp())

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_ground_truth_infinite(self):
        """Test that the HR passthrough reports +inf everywhere."""
        [report] = compare_methods(self.lr_set, self.hr_set, [GroundTruthMethod(self.hr_set)])
        self.assertEqual(report.mean_psnr, INFINITE_PSNR)
        self.assertEqual(report.infinite_entries, self.names)

    def test_bicubic_matches_direct_psnr(self):
        """Test bicubic entries against a direct PSNR computation."""
        [report] = compare_methods(self.lr_set, self.hr_set, [BicubicMethod(2)])
        hr = dict(self.hr_set)
        for (name, lr), value in zip(self.lr_set, report.psnr_values):
            expected = psnr(np.clip(bicubic_resize(lr, 2, 'up'), 0.0, 1.0), hr[name])
            self.assertAlmostEqual(value, expected, places=10)
        self.assertEqual(report.method_params, {'scale': 2})

    def test_shared_fingerprint(self):
        """Test that every method carries the same fingerprint."""
        methods = [BicubicMethod(2), LucyRichardsonMethod(2, sigma=1.0, iters=3),
                   GroundTruthMethod(self.hr_set)]
        reports = compare_methods(self.lr_set, self.hr_set, methods,
                                  fingerprint={'seed': 9}, crop=1)
        first = reports[0].fingerprint
        self.assertEqual(first['seed'], 9)
        self.assertEqual(first['num_images'], 5)
        self.assertEqual(first['crop'], 1)
        self.assertEqual(len(first['inputs_sha256']), 64)
        for report in reports[1:]:
            self.assertEqual(report.fingerprint, first)
        self.assertEqual([r.method for r in reports], ['bicubic', 'lucy-richardson', 'ground-truth'])

    def test_fingerprint_tracks_inputs(self):
        """Test that changing one pixel changes the input digest."""
        [before] = compare_methods(self.lr_set, self.hr_set, [BicubicMethod(2)])
        changed = [(n, img.copy()) for n, img in self.hr_set]
        changed[0][1][0, 0, 0] += 0.01
        [after] = compare_methods(self.lr_set, changed, [BicubicMethod(2)])
        self.assertNotEqual(before.fingerprint['inputs_sha256'], after.fingerprint['inputs_sha256'])

    def test_misaligned(self):
        """Test that differing name sets are reported on both sides."""
        with self.assertRaises(MisalignedSetsError) as caught:
            compare_methods(self.lr_set[:4] + [("extra.png", self.lr_set[4][1])],
                            self.hr_set, [BicubicMethod(2)])
        self.assertIn("LR only: extra.png", str(caught.exception))
        self.assertIn("HR only: img4.png", str(caught.exception))
        self.assertEqual(caught.exception.exit_code, 2)
        check_alignment(['a', 'b'], ['b', 'a'])

    def test_wrong_output_shape(self):
        """Test rejection of a method whose output does not match HR."""
        with self.assertRaises(MisalignedSetsError) as ctx:
            compare_methods(self.lr_set, self.hr_set, [ShrinkingMethod()])
        self.assertEqual(ctx.exception.exit_code, 2)

    def test_lucy_richardson_method(self):
        """Test the deconvolve-then-upscale pipeline shape and range."""
        method = LucyRichardsonMethod(2, sigma=2.0, iters=4)
        out = method.super_resolve("x", self.lr_set[0][1])
        self.assertEqual(out.shape, (3, 16, 16))
        self.assertGreaterEqual(out.min(), 0.0)
        self.assertLessEqual(out.max(), 1.0)
        self.assertEqual(method.params(), {'scale': 2, 'psf_sigma': 2.0, 'iters': 4})
        with self.assertRaises(InvalidParameterError):
            LucyRichardsonMethod(2, sigma=0.0)

    def test_external_method(self):
        """Test file matching by exact name and by stem."""
        for name, hr in self.hr_set[:4]:
            pixels = np.round(hr.transpose(1, 2, 0) * 255).astype(np.uint8)
            Image.fromarray(pixels).save(self.tmp / (Path(name).stem + ".bmp"))
        method = ExternalMethod(self.tmp)
        self.assertEqual(method.name, f"external:{self.tmp.name}")
        self.assertEqual(method.resolve_path("img0.png"), self.tmp / "img0.bmp")
        self.assertEqual(method.missing(self.names), ["img4.png"])
        with self.assertRaises(MisalignedSetsError):
            method.super_resolve("img4.png", self.lr_set[4][1])

        [report] = compare_methods(self.lr_set[:4], self.hr_set[:4], [method])
        for value in report.psnr_values:
            self.assertGreater(value, 45.0)

    def test_network_method(self):
        """Test that a network method produces scaled output and records its spec."""
        spec = NetworkSpec(variant='jnet', width=8, blocks_per_stage=1, encoder_levels=1)
        network = build_network(spec, SeededRng(0))
        method = NetworkMethod(network, spec, checkpoint="ckpt.h5")
        out = method.super_resolve("x", self.lr_set[0][1])
        self.assertEqual(out.shape, (3, 16, 16))
        params = method.params()
        self.assertEqual(params['spec_hash'], spec.fingerprint())
        self.assertEqual(params['checkpoint'], "ckpt.h5")


if __name__ == '__main__':
    unittest.main()
