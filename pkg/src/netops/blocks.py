"""
nn.Module wrappers holding the parameters of the functional primitives.
"""

import torch
import torch.nn as nn

from core.exceptions import InvalidParameterError
from . import functional as ops


class LayerNorm2d(nn.Module):
    """Channel-wise layer normalization for N x C x H x W maps."""

    def __init__(self, channels: int, eps: float = ops.LAYER_NORM_EPS):
        super().__init__()
        self.eps = eps
        self.weight = nn.Parameter(torch.ones(channels))
        self.bias = nn.Parameter(torch.zeros(channels))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return ops.layer_norm(x, self.weight, self.bias, self.eps)


class SimpleGate(nn.Module):
    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return ops.simple_gate(x)


class PixelShuffle(nn.Module):
    def __init__(self, r: int):
        super().__init__()
        self.r = r

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return ops.pixel_shuffle(x, self.r)


class BaselineBlock(nn.Module):
    """
    LN, pointwise expansion, depthwise conv, SimpleGate and SCA in a residual
    stage, followed by a gated pointwise feed-forward residual stage.
    """

    def __init__(self, width: int, residual_scale: bool = False):
        """
        Args:
            width: Channel count c, must be even
            residual_scale: Add learnable per-channel scalars on both residual paths
        """
        super().__init__()
        if width < 2 or width % 2:
            raise InvalidParameterError(
                f"Block width must be even and >= 2, got {width}",
                context={'width': width}
            )
        expanded = 2 * width
        self.width = width
        self.norm1 = LayerNorm2d(width)
        self.conv1 = nn.Conv2d(width, expanded, kernel_size=1)
        self.conv2 = nn.Conv2d(expanded, expanded, kernel_size=3, padding=1, groups=expanded)
        self.sca = nn.Conv2d(width, width, kernel_size=1)
        self.conv3 = nn.Conv2d(width, width, kernel_size=1)
        self.norm2 = LayerNorm2d(width)
        self.conv4 = nn.Conv2d(width, expanded, kernel_size=1)
        self.conv5 = nn.Conv2d(width, width, kernel_size=1)
        if residual_scale:
            self.beta = nn.Parameter(torch.ones(width))
            self.gamma = nn.Parameter(torch.ones(width))
        else:
            self.beta = None
            self.gamma = None

    def block_params(self) -> ops.BlockParams:
        return ops.BlockParams(
            norm1_gain=self.norm1.weight, norm1_bias=self.norm1.bias,
            conv1_weight=self.conv1.weight, conv1_bias=self.conv1.bias,
            conv2_weight=self.conv2.weight, conv2_bias=self.conv2.bias,
            sca_weight=self.sca.weight, sca_bias=self.sca.bias,
            conv3_weight=self.conv3.weight, conv3_bias=self.conv3.bias,
            norm2_gain=self.norm2.weight, norm2_bias=self.norm2.bias,
            conv4_weight=self.conv4.weight, conv4_bias=self.conv4.bias,
            conv5_weight=self.conv5.weight, conv5_bias=self.conv5.bias,
            beta=self.beta, gamma=self.gamma,
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return ops.baseline_block_forward(x, self.block_params())


class NaiveConvBlock(nn.Module):
    """3x3 width-preserving convolution plus rectifier."""

    def __init__(self, width: int):
        super().__init__()
        self.conv = nn.Conv2d(width, width, kernel_size=3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return ops.naive_conv_block(x, self.conv.weight, self.conv.bias)


def make_block(block_type: str, width: int, residual_scale: bool = False) -> nn.Module:
    """Factory for the two block types of the architecture ablation."""
    if block_type == 'baseline':
        return BaselineBlock(width, residual_scale=residual_scale)
    if block_type == 'naive':
        return NaiveConvBlock(width)
    raise InvalidParameterError(
        f"Unknown block type: {block_type}",
        context={'block_type': block_type, 'allowed': ('naive', 'baseline')}
    )
