"""
Executable graphs for the three architectures: Flat U-Net, U-Net+PS and J-Net.
"""

from collections import OrderedDict
from typing import Dict, List

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from core.exceptions import InvalidParameterError
from core.rng import SeededRng
from netops.blocks import PixelShuffle, make_block
from .spec import NetworkSpec

NetworkParams = Dict[str, torch.Tensor]


def _stage(spec: NetworkSpec) -> nn.Sequential:
    return nn.Sequential(*[
        make_block(spec.block_type, spec.width, spec.residual_scale)
        for _ in range(spec.blocks_per_stage)
    ])


def _upsampler(width: int) -> nn.Sequential:
    # pointwise expansion to 4x channels then a 2x pixel shuffle
    return nn.Sequential(nn.Conv2d(width, 4 * width, kernel_size=1, bias=False), PixelShuffle(2))


class SRNetwork(nn.Module):
    """
    Super-resolution network for one NetworkSpec.

    flat-unet: stem, (2L+1) stages of blocks at input resolution, PS head.
    unet-ps: stem, L encoder stages with 2x downsampling, a middle stage,
        L decoder stages (upsample, skip concatenation, 1x1 fuse, blocks), PS head.
    jnet: the unet-ps body, then one more expansive stage (2x upsample and
        blocks, no skip) and a 3x3 head conv at 2x resolution.
    """

    def __init__(self, spec: NetworkSpec):
        super().__init__()
        spec.validate()
        self.spec = spec
        w = spec.width
        self.stem = nn.Conv2d(spec.in_channels, w, kernel_size=3, padding=1)

        if spec.is_u_shaped:
            self.encoders = nn.ModuleList([_stage(spec) for _ in range(spec.encoder_levels)])
            if spec.downsample == 'conv':
                self.downs = nn.ModuleList([
                    nn.Conv2d(w, w, kernel_size=2, stride=2) for _ in range(spec.encoder_levels)
                ])
            else:
                self.downs = nn.ModuleList([nn.MaxPool2d(2) for _ in range(spec.encoder_levels)])
            self.middle = _stage(spec)
            self.ups = nn.ModuleList([_upsampler(w) for _ in range(spec.encoder_levels)])
            self.fuses = nn.ModuleList([
                nn.Conv2d(2 * w, w, kernel_size=1) for _ in range(spec.encoder_levels)
            ])
            self.decoders = nn.ModuleList([_stage(spec) for _ in range(spec.encoder_levels)])
        else:
            self.body = nn.Sequential(*[
                make_block(spec.block_type, w, spec.residual_scale)
                for _ in range((2 * spec.encoder_levels + 1) * spec.blocks_per_stage)
            ])

        if spec.variant == 'jnet':
            self.extra_up = _upsampler(w)
            self.extra_blocks = _stage(spec)
            self.head = nn.Conv2d(w, spec.out_channels, kernel_size=3, padding=1)
        else:
            self.head = nn.Sequential(
                nn.Conv2d(w, spec.out_channels * spec.scale ** 2, kernel_size=3, padding=1),
                PixelShuffle(spec.scale),
            )

    def _u_body(self, x: torch.Tensor) -> torch.Tensor:
        skips: List[torch.Tensor] = []
        for encoder, down in zip(self.encoders, self.downs):
            x = encoder(x)
            skips.append(x)
            x = down(x)
        x = self.middle(x)
        for up, fuse, decoder, skip in zip(self.ups, self.fuses, self.decoders, reversed(skips)):
            x = up(x)
            x = fuse(torch.cat([x, skip], dim=1))
            x = decoder(x)
        return x

    def forward(self, lr: torch.Tensor) -> torch.Tensor:
        if lr.dim() != 4 or lr.shape[1] != self.spec.in_channels:
            raise InvalidParameterError(
                f"Expected N x {self.spec.in_channels} x H x W input, got {tuple(lr.shape)}",
                context={'shape': tuple(lr.shape)}
            )
        divisor = self.spec.divisor()
        if lr.shape[2] % divisor or lr.shape[3] % divisor:
            raise InvalidParameterError(
                f"Input {lr.shape[2]}x{lr.shape[3]} is not divisible by {divisor}",
                context={'height': lr.shape[2], 'width': lr.shape[3], 'divisor': divisor}
            )

        x = self.stem(lr)
        x = self._u_body(x) if self.spec.is_u_shaped else self.body(x)
        if self.spec.variant == 'jnet':
            x = self.extra_blocks(self.extra_up(x))
        out = self.head(x)

        if self.spec.global_residual:
            out = out + F.interpolate(lr, scale_factor=self.spec.scale, mode='bicubic',
                                      align_corners=False)
        return out


def initialize_parameters(network: nn.Module, rng: SeededRng):
    """
    Fan-in scaled uniform init for convolution weights, zero biases, unit gains.

    Parameters are visited in registration order, so the result depends only
    on the spec and the rng stream.
    """
    with torch.no_grad():
        for name, param in network.named_parameters():
            leaf = name.rsplit('.', 1)[-1]
            if param.dim() == 4:
                fan_in = param.shape[1] * param.shape[2] * param.shape[3]
                bound = 1.0 / np.sqrt(fan_in)
                values = rng.uniform(-bound, bound, size=tuple(param.shape))
                param.copy_(torch.from_numpy(values))
            elif leaf == 'bias':
                param.zero_()
            else:
                # layer-norm gains and residual scales
                param.fill_(1.0)


def build_network(spec: NetworkSpec, rng: SeededRng) -> SRNetwork:
    """
    Build and initialize a network.

    Args:
        spec: Network spec
        rng: Random stream; identical seeds give bit-identical parameters

    Returns:
        SRNetwork in float32
    """
    network = SRNetwork(spec)
    initialize_parameters(network, rng)
    return network


def network_params(network: nn.Module) -> NetworkParams:
    """Ordered name -> parameter tensor mapping."""
    return OrderedDict(network.named_parameters())


def enumerate_params(network: nn.Module) -> int:
    return sum(p.numel() for p in network.parameters())


def forward(network: SRNetwork, spec: NetworkSpec, lr_batch: torch.Tensor) -> torch.Tensor:
    """
    Run a network on an N x C x H x W batch.

    Returns:
        N x out_channels x scale*H x scale*W prediction
    """
    if network.spec != spec:
        raise InvalidParameterError(
            "Network was built from a different spec",
            context={'network_spec': network.spec.to_dict(), 'spec': spec.to_dict()}
        )
    return network(lr_batch)
