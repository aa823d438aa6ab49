"""
Tests for network assembly, parameter counting and inference.
"""

import sys
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np
import torch

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from core.exceptions import InvalidParameterError
from core.rng import SeededRng
from jnet import (
    NetworkSpec, SRNetwork, build_network, count_params, enumerate_params,
    network_params, forward, super_resolve, pad_to_multiple, block_param_count, VARIANTS
)
from netops import max_relative_error


def small_spec(variant: str = 'jnet', **overrides) -> NetworkSpec:
    values = dict(variant=variant, width=8, blocks_per_stage=1, encoder_levels=2)
    values.update(overrides)
    return NetworkSpec(**values)


class TestNetworkSpec(unittest.TestCase):
    """Test cases for NetworkSpec validation and serialization."""

    def test_defaults_valid(self):
        """Test that the default spec validates."""
        spec = NetworkSpec().validate()
        self.assertEqual((spec.width, spec.blocks_per_stage, spec.encoder_levels), (64, 2, 3))
        self.assertEqual(spec.divisor(), 8)

    def test_odd_width(self):
        """Test rejection of odd widths."""
        with self.assertRaises(InvalidParameterError):
            NetworkSpec(width=63).validate()
        with self.assertRaises(InvalidParameterError):
            build_network(NetworkSpec(width=63), SeededRng(0))

    def test_invalid_fields(self):
        """Test rejection of unknown variants and inconsistent settings."""
        for bad in (NetworkSpec(variant='resnet'), NetworkSpec(block_type='dense'),
                    NetworkSpec(scale=4), NetworkSpec(variant='unet-ps', scale=3),
                    NetworkSpec(in_channels=2), NetworkSpec(encoder_levels=0),
                    NetworkSpec(global_residual=True, in_channels=1, out_channels=3)):
            with self.assertRaises(InvalidParameterError):
                bad.validate()

    def test_flat_divisor(self):
        """Test that the flat variant has no divisibility requirement."""
        self.assertEqual(NetworkSpec(variant='flat-unet').divisor(), 1)

    def test_dict_round_trip_and_unknown_keys(self):
        """Test from_dict on a serialized spec and on a dict with a typo."""
        spec = small_spec('unet-ps', downsample='maxpool')
        self.assertEqual(NetworkSpec.from_dict(spec.to_dict()), spec)
        with self.assertRaises(InvalidParameterError):
            NetworkSpec.from_dict({'widht': 8})

    def test_fingerprint(self):
        """Test that the fingerprint follows the spec fields."""
        self.assertEqual(small_spec().fingerprint(), small_spec().fingerprint())
        self.assertNotEqual(small_spec().fingerprint(), small_spec(width=16).fingerprint())


class TestParameterCount(unittest.TestCase):
    """Test cases for the closed-form parameter count."""

    def test_matches_enumeration(self):
        """Test count_params against the built network for many specs."""
        for variant in VARIANTS:
            for block_type in ('naive', 'baseline'):
                for downsample in ('conv', 'maxpool'):
                    for residual_scale in (False, True):
                        spec = small_spec(variant, block_type=block_type, downsample=downsample,
                                          residual_scale=residual_scale, in_channels=1)
                        network = SRNetwork(spec)
                        self.assertEqual(count_params(spec), enumerate_params(network),
                                         spec.to_dict())

    def test_default_spec_enumeration(self):
        """Test the full-width default spec."""
        spec = NetworkSpec()
        self.assertEqual(count_params(spec), enumerate_params(SRNetwork(spec)))

    def test_block_count(self):
        """Test the per-block closed forms."""
        self.assertEqual(block_param_count('baseline', 64), 7 * 64 * 64 + 31 * 64)
        self.assertEqual(block_param_count('baseline', 8, residual_scale=True), 7 * 64 + 31 * 8 + 16)
        self.assertEqual(block_param_count('naive', 8), 9 * 64 + 8)

    def test_orderings(self):
        """Test flat < jnet, unet-ps < jnet and monotonicity in blocks."""
        jnet = NetworkSpec(variant='jnet')
        self.assertLess(count_params(replace(jnet, variant='flat-unet')), count_params(jnet))
        self.assertLess(count_params(replace(jnet, variant='unet-ps')), count_params(jnet))
        self.assertLess(count_params(jnet), count_params(replace(jnet, blocks_per_stage=4)))


class TestBuildNetwork(unittest.TestCase):
    """Test cases for network construction and initialization."""

    def test_deterministic(self):
        """Test that the same seed gives bit-identical parameters."""
        spec = NetworkSpec(variant='jnet', width=64, blocks_per_stage=2, encoder_levels=3)
        a = network_params(build_network(spec, SeededRng(7)))
        b = network_params(build_network(spec, SeededRng(7)))
        self.assertEqual(list(a), list(b))
        for name in a:
            self.assertTrue(torch.equal(a[name], b[name]), name)

    def test_seed_changes_parameters(self):
        """Test that different seeds give different weights."""
        spec = small_spec()
        a = network_params(build_network(spec, SeededRng(1)))
        b = network_params(build_network(spec, SeededRng(2)))
        self.assertFalse(torch.equal(a['stem.weight'], b['stem.weight']))

    def test_initialization_scheme(self):
        """Test fan-in bounds, zero biases and unit gains."""
        network = build_network(small_spec(residual_scale=True), SeededRng(3))
        for name, param in network.named_parameters():
            if param.dim() == 4:
                fan_in = param.shape[1] * param.shape[2] * param.shape[3]
                self.assertLessEqual(param.abs().max().item(), 1.0 / np.sqrt(fan_in) + 1e-7, name)
            elif name.endswith('bias'):
                self.assertEqual(param.abs().max().item(), 0.0, name)
            else:
                self.assertTrue(torch.all(param == 1.0), name)


class TestForward(unittest.TestCase):
    """Test cases for the forward shape contract."""

    def test_all_variants_double_resolution(self):
        """Test 2x output for every variant on 48x48, 40x48 and 96x64 inputs."""
        for variant in VARIANTS:
            spec = small_spec(variant, encoder_levels=3)
            network = build_network(spec, SeededRng(0))
            for height, width in ((48, 48), (40, 48), (96, 64)):
                with torch.no_grad():
                    out = forward(network, spec, torch.rand(1, 3, height, width))
                self.assertEqual(tuple(out.shape), (1, 3, 2 * height, 2 * width), variant)
                self.assertTrue(torch.isfinite(out).all())

    def test_full_width_jnet(self):
        """Test the full-width jnet on a 48x48 patch."""
        spec = NetworkSpec()
        network = build_network(spec, SeededRng(0))
        with torch.no_grad():
            out = network(torch.rand(1, 3, 48, 48))
        self.assertEqual(tuple(out.shape), (1, 3, 96, 96))

    def test_scale_four_and_one(self):
        """Test the PS head at x4 and x1."""
        for scale in (1, 4):
            spec = small_spec('unet-ps', scale=scale, in_channels=1, out_channels=1)
            network = build_network(spec, SeededRng(0))
            with torch.no_grad():
                out = network(torch.rand(2, 1, 16, 12))
            self.assertEqual(tuple(out.shape), (2, 1, 16 * scale, 12 * scale))

    def test_indivisible_input(self):
        """Test rejection of inputs not divisible by 2^levels."""
        spec = small_spec('jnet', encoder_levels=3)
        network = build_network(spec, SeededRng(0))
        with self.assertRaises(InvalidParameterError):
            network(torch.rand(1, 3, 44, 48))

    def test_wrong_channels(self):
        """Test rejection of inputs with the wrong channel count."""
        network = build_network(small_spec(), SeededRng(0))
        with self.assertRaises(InvalidParameterError):
            network(torch.rand(1, 1, 16, 16))

    def test_spec_mismatch(self):
        """Test that forward refuses a spec the network was not built from."""
        network = build_network(small_spec(), SeededRng(0))
        with self.assertRaises(InvalidParameterError):
            forward(network, small_spec(width=16), torch.rand(1, 3, 16, 16))

    def test_global_residual_zero_head(self):
        """Test that with a zeroed head the output is the bicubic upscaled input."""
        spec = small_spec('unet-ps', global_residual=True)
        network = build_network(spec, SeededRng(0))
        with torch.no_grad():
            for param in network.head.parameters():
                param.zero_()
            lr = torch.rand(1, 3, 16, 16)
            expected = torch.nn.functional.interpolate(lr, scale_factor=2, mode='bicubic',
                                                       align_corners=False)
            torch.testing.assert_close(network(lr), expected)

    def test_tiny_network_gradients(self):
        """Test full-network parameter gradients against central differences."""
        spec = NetworkSpec(variant='jnet', width=8, blocks_per_stage=1, encoder_levels=1)
        network = build_network(spec, SeededRng(4)).double()
        g = torch.Generator().manual_seed(0)
        lr = torch.rand(1, 3, 6, 8, generator=g, dtype=torch.float64)
        weights = torch.randn(1, 3, 12, 16, generator=g, dtype=torch.float64)
        tensors = list(network.parameters())

        error = max_relative_error(lambda: (network(lr) * weights).sum(), tensors,
                                   step=1e-5, max_entries=6)
        self.assertLess(error, 1e-3)


class TestInference(unittest.TestCase):
    """Test cases for whole-image inference."""

    def setUp(self):
        self.spec = small_spec('jnet', encoder_levels=3)
        self.network = build_network(self.spec, SeededRng(5))

    def test_pad_to_multiple(self):
        """Test bottom/right reflect padding."""
        image = np.arange(2 * 5 * 6, dtype=np.float64).reshape(2, 5, 6)
        padded = pad_to_multiple(image, 4)
        self.assertEqual(padded.shape, (2, 8, 8))
        np.testing.assert_array_equal(padded[:, :5, :6], image)
        np.testing.assert_array_equal(padded[:, 5, :6], image[:, 3])
        square = image[:, :4, :4]
        self.assertIs(pad_to_multiple(square, 4), square)

    def test_pad_single_row(self):
        """Test padding an image with a single row."""
        padded = pad_to_multiple(np.ones((1, 1, 3)), 2)
        self.assertEqual(padded.shape, (1, 2, 4))

    def test_arbitrary_size(self):
        """Test that a 50x50 input gives exactly 100x100."""
        out = super_resolve(self.network, self.spec, np.random.default_rng(0).random((3, 50, 50)))
        self.assertEqual(out.shape, (3, 100, 100))
        self.assertEqual(out.dtype, np.float64)
        self.assertTrue(out.min() >= 0.0 and out.max() <= 1.0)

    def test_divisible_size_matches_forward(self):
        """Test that an already divisible input is not altered by padding."""
        image = np.random.default_rng(1).random((3, 48, 48)).astype(np.float32)
        out = super_resolve(self.network, self.spec, image)
        with torch.no_grad():
            expected = self.network(torch.from_numpy(image)[None])[0].double().clamp(0, 1).numpy()
        np.testing.assert_allclose(out, expected, atol=1e-6)

    def test_grayscale_into_rgb_network(self):
        """Test the one-channel policy for three-channel networks."""
        out = super_resolve(self.network, self.spec, np.random.default_rng(2).random((1, 24, 16)))
        self.assertEqual(out.shape, (1, 48, 32))

    def test_rgb_into_grayscale_network(self):
        """Test per-channel processing by a one-channel network."""
        spec = small_spec('jnet', in_channels=1, out_channels=1)
        network = build_network(spec, SeededRng(6))
        image = np.random.default_rng(3).random((3, 16, 16))
        out = super_resolve(network, spec, image)
        self.assertEqual(out.shape, (3, 32, 32))
        single = super_resolve(network, spec, image[1:2])
        np.testing.assert_array_equal(out[1:2], single)

    def test_training_mode_restored(self):
        """Test that inference leaves the train/eval mode unchanged."""
        self.network.train()
        super_resolve(self.network, self.spec, np.zeros((3, 8, 8)))
        self.assertTrue(self.network.training)

    def test_bad_shape(self):
        """Test rejection of 2-D arrays and unsupported channel counts."""
        with self.assertRaises(InvalidParameterError):
            super_resolve(self.network, self.spec, np.zeros((8, 8)))
        with self.assertRaises(InvalidParameterError):
            super_resolve(self.network, self.spec, np.zeros((2, 8, 8)))


if __name__ == '__main__':
    unittest.main()
