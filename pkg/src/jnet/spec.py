"""
Network specification and closed-form parameter counting.
"""

import hashlib
import json
from dataclasses import dataclass, asdict
from typing import Any, Dict

from core.exceptions import InvalidParameterError

VARIANTS = ('flat-unet', 'unet-ps', 'jnet')
BLOCK_TYPES = ('naive', 'baseline')
DOWNSAMPLE_OPS = ('conv', 'maxpool')


@dataclass
class NetworkSpec:
    """
    Everything that determines the computational graph.

    Attributes:
        variant: 'flat-unet', 'unet-ps' or 'jnet'
        block_type: 'naive' (3x3 conv + ReLU) or 'baseline'
        width: Channels at every level; must be even
        blocks_per_stage: Blocks in each encoder, middle, decoder and extra stage
        encoder_levels: Number of 2x downsamplings in the U body; the flat
            variant uses it only to size its block stack (2 * levels + 1 stages)
        scale: Output/input resolution ratio
        in_channels: 1 (grayscale) or 3 (RGB)
        out_channels: 1 or 3
        downsample: 'conv' (stride-2 2x2) or 'maxpool'
        global_residual: Add the bicubic-upscaled input to the prediction
        residual_scale: Learnable per-channel scalars on block residual paths
    """
    variant: str = 'jnet'
    block_type: str = 'baseline'
    width: int = 64
    blocks_per_stage: int = 2
    encoder_levels: int = 3
    scale: int = 2
    in_channels: int = 3
    out_channels: int = 3
    downsample: str = 'conv'
    global_residual: bool = False
    residual_scale: bool = False

    def validate(self) -> "NetworkSpec":
        """Check field ranges and combinations; returns self."""
        def fail(message: str, **context):
            raise InvalidParameterError(message, context=context)

        if self.variant not in VARIANTS:
            fail(f"Unknown variant: {self.variant}", variant=self.variant, allowed=VARIANTS)
        if self.block_type not in BLOCK_TYPES:
            fail(f"Unknown block type: {self.block_type}", block_type=self.block_type)
        if self.width < 2 or self.width % 2:
            fail(f"Width must be even and >= 2, got {self.width}", width=self.width)
        if self.blocks_per_stage < 1:
            fail(f"blocks_per_stage must be >= 1, got {self.blocks_per_stage}",
                 blocks_per_stage=self.blocks_per_stage)
        if self.encoder_levels < 1:
            fail(f"encoder_levels must be >= 1, got {self.encoder_levels}",
                 encoder_levels=self.encoder_levels)
        if self.variant == 'jnet' and self.scale != 2:
            fail(f"The jnet variant has one extra 2x stage; scale must be 2, got {self.scale}",
                 scale=self.scale)
        if self.scale not in (1, 2, 4):
            fail(f"Scale must be 1, 2 or 4, got {self.scale}", scale=self.scale)
        for name in ('in_channels', 'out_channels'):
            if getattr(self, name) not in (1, 3):
                fail(f"{name} must be 1 or 3, got {getattr(self, name)}", **{name: getattr(self, name)})
        if self.downsample not in DOWNSAMPLE_OPS:
            fail(f"Unknown downsample op: {self.downsample}", downsample=self.downsample)
        if self.global_residual and self.in_channels != self.out_channels:
            fail("global_residual needs in_channels == out_channels",
                 in_channels=self.in_channels, out_channels=self.out_channels)
        return self

    @property
    def is_u_shaped(self) -> bool:
        return self.variant != 'flat-unet'

    def divisor(self) -> int:
        """Input H and W must be multiples of this."""
        return 2 ** self.encoder_levels if self.is_u_shaped else 1

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NetworkSpec":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidParameterError(
                f"Unknown network spec keys: {', '.join(unknown)}",
                context={'unknown': unknown}
            )
        return cls(**data)

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode('utf-8')
        return hashlib.sha256(payload).hexdigest()[:16]


def _conv(kernel: int, cin: int, cout: int, bias: bool = True) -> int:
    return kernel * kernel * cin * cout + (cout if bias else 0)


def block_param_count(block_type: str, width: int, residual_scale: bool = False) -> int:
    if block_type == 'naive':
        return _conv(3, width, width)
    # LN(2c) + 1x1 c->2c + dw3x3(2c) + SCA c->c + 1x1 c->c + LN(2c) + 1x1 c->2c + 1x1 c->c
    count = 7 * width * width + 31 * width
    return count + (2 * width if residual_scale else 0)


def count_params(spec: NetworkSpec) -> int:
    """
    Closed-form parameter count.

    Args:
        spec: Network spec

    Returns:
        Number of scalar parameters build_network creates for this spec
    """
    spec.validate()
    w, levels, blocks = spec.width, spec.encoder_levels, spec.blocks_per_stage
    block = block_param_count(spec.block_type, w, spec.residual_scale)

    total = _conv(3, spec.in_channels, w)
    total += (2 * levels + 1) * blocks * block
    if spec.is_u_shaped:
        down = _conv(2, w, w) if spec.downsample == 'conv' else 0
        up = _conv(1, w, 4 * w, bias=False)
        fuse = _conv(1, 2 * w, w)
        total += levels * (down + up + fuse)
    if spec.variant == 'jnet':
        total += _conv(1, w, 4 * w, bias=False) + blocks * block + _conv(3, w, spec.out_channels)
    else:
        total += _conv(3, w, spec.out_channels * spec.scale ** 2)
    return total
