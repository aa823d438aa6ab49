"""
Network primitives: layer normalization, SimpleGate, simplified channel
attention, pixel shuffle, convolution and the block types built from them.
"""

from .functional import (
    layer_norm, simple_gate, sca, pixel_shuffle, pixel_unshuffle, conv2d,
    naive_conv_block, baseline_block_forward, BlockParams, LAYER_NORM_EPS
)
from .blocks import (
    LayerNorm2d, SimpleGate, PixelShuffle, BaselineBlock, NaiveConvBlock, make_block
)
from .gradcheck import max_relative_error, op_relative_error, relative_error

__all__ = [
    'layer_norm', 'simple_gate', 'sca', 'pixel_shuffle', 'pixel_unshuffle', 'conv2d',
    'naive_conv_block', 'baseline_block_forward', 'BlockParams', 'LAYER_NORM_EPS',
    'LayerNorm2d', 'SimpleGate', 'PixelShuffle', 'BaselineBlock', 'NaiveConvBlock',
    'make_block', 'max_relative_error', 'op_relative_error', 'relative_error',
]
