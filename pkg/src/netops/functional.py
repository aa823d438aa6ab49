"""
Differentiable primitives on N x C x H x W feature maps.

Every op validates its shapes and raises InvalidParameterError; gradients come
from torch autograd.
"""

from dataclasses import dataclass, fields
from typing import Iterator, Optional, Tuple

import torch
import torch.nn.functional as F

from core.exceptions import InvalidParameterError

LAYER_NORM_EPS = 1e-6


def _require_4d(x: torch.Tensor, op: str):
    if x.dim() != 4 or min(x.shape) < 1:
        raise InvalidParameterError(
            f"{op} expects an N x C x H x W feature map, got {tuple(x.shape)}",
            context={'op': op, 'shape': tuple(x.shape)}
        )


def layer_norm(x: torch.Tensor, gain: torch.Tensor, bias: torch.Tensor,
               eps: float = LAYER_NORM_EPS) -> torch.Tensor:
    """
    Normalize the channel vector at every (n, h, w) position.

    Args:
        x: N x C x H x W
        gain: C per-channel scale
        bias: C per-channel shift
        eps: Variance stabilizer

    Returns:
        Normalized feature map of the same shape
    """
    _require_4d(x, 'layer_norm')
    channels = x.shape[1]
    if gain.numel() != channels or bias.numel() != channels:
        raise InvalidParameterError(
            f"layer_norm gain/bias must have {channels} entries, "
            f"got {gain.numel()} and {bias.numel()}",
            context={'channels': channels}
        )
    mu = x.mean(dim=1, keepdim=True)
    centred = x - mu
    var = centred.pow(2).mean(dim=1, keepdim=True)
    y = centred / torch.sqrt(var + eps)
    return y * gain.view(1, -1, 1, 1) + bias.view(1, -1, 1, 1)


def simple_gate(x: torch.Tensor) -> torch.Tensor:
    """Split channels in half and multiply the halves elementwise."""
    _require_4d(x, 'simple_gate')
    if x.shape[1] % 2:
        raise InvalidParameterError(
            f"simple_gate needs an even channel count, got {x.shape[1]}",
            context={'channels': x.shape[1]}
        )
    first, second = x.chunk(2, dim=1)
    return first * second


def sca(x: torch.Tensor, weight: torch.Tensor,
        bias: Optional[torch.Tensor] = None) -> torch.Tensor:
    """
    Simplified channel attention.

    Global average pool per channel, a 1x1 convolution on the pooled vector,
    then a spatially uniform per-channel rescaling of x.

    Args:
        x: N x C x H x W
        weight: C x C (or C x C x 1 x 1) pointwise weights
        bias: Optional C bias

    Returns:
        Rescaled feature map of the same shape
    """
    _require_4d(x, 'sca')
    channels = x.shape[1]
    matrix = weight.reshape(weight.shape[0], -1) if weight.dim() == 4 else weight
    if tuple(matrix.shape) != (channels, channels):
        raise InvalidParameterError(
            f"sca weights must be {channels}x{channels}, got {tuple(weight.shape)}",
            context={'channels': channels, 'weight_shape': tuple(weight.shape)}
        )
    pooled = x.mean(dim=(2, 3))
    attention = pooled @ matrix.t()
    if bias is not None:
        attention = attention + bias.view(1, -1)
    return x * attention[:, :, None, None]


def pixel_shuffle(x: torch.Tensor, r: int) -> torch.Tensor:
    """
    Rearrange C*r^2 channels into C channels at r times the resolution.

    out[c, r*h + i, r*w + j] = x[c*r^2 + i*r + j, h, w]
    """
    _require_4d(x, 'pixel_shuffle')
    if r < 1 or x.shape[1] % (r * r):
        raise InvalidParameterError(
            f"pixel_shuffle needs channels divisible by r^2={r * r}, got {x.shape[1]}",
            context={'channels': x.shape[1], 'r': r}
        )
    if r == 1:
        return x
    return F.pixel_shuffle(x, r)


def pixel_unshuffle(x: torch.Tensor, r: int) -> torch.Tensor:
    """Exact inverse of pixel_shuffle."""
    _require_4d(x, 'pixel_unshuffle')
    if r < 1 or x.shape[2] % r or x.shape[3] % r:
        raise InvalidParameterError(
            f"pixel_unshuffle needs spatial dims divisible by {r}, got {tuple(x.shape[2:])}",
            context={'shape': tuple(x.shape), 'r': r}
        )
    if r == 1:
        return x
    return F.pixel_unshuffle(x, r)


def conv2d(x: torch.Tensor, weight: torch.Tensor, bias: Optional[torch.Tensor] = None,
           stride: int = 1, padding: int = 0, groups: int = 1) -> torch.Tensor:
    """Cross-correlation with zero padding."""
    _require_4d(x, 'conv2d')
    if weight.dim() != 4 or x.shape[1] != weight.shape[1] * groups:
        raise InvalidParameterError(
            f"conv2d weight {tuple(weight.shape)} does not fit input "
            f"{tuple(x.shape)} with groups={groups}",
            context={'input_shape': tuple(x.shape), 'weight_shape': tuple(weight.shape)}
        )
    kh, kw = weight.shape[2:]
    if x.shape[2] + 2 * padding < kh or x.shape[3] + 2 * padding < kw:
        raise InvalidParameterError(
            f"conv2d kernel {kh}x{kw} larger than padded input {tuple(x.shape[2:])}",
            context={'input_shape': tuple(x.shape), 'padding': padding}
        )
    return F.conv2d(x, weight, bias, stride=stride, padding=padding, groups=groups)


def naive_conv_block(x: torch.Tensor, weight: torch.Tensor,
                     bias: Optional[torch.Tensor] = None) -> torch.Tensor:
    """Width-preserving 3x3 convolution followed by a rectifier."""
    if weight.dim() != 4 or weight.shape[0] != weight.shape[1] or tuple(weight.shape[2:]) != (3, 3):
        raise InvalidParameterError(
            f"naive block needs a C x C x 3 x 3 weight, got {tuple(weight.shape)}",
            context={'weight_shape': tuple(weight.shape)}
        )
    return F.relu(conv2d(x, weight, bias, stride=1, padding=1))


@dataclass
class BlockParams:
    """
    Parameters of one baseline block of width c.

    Stage 1 expands c -> 2c (conv1), runs a 2c depthwise 3x3 (conv2), gates to
    c, applies SCA and projects c -> c (conv3). Stage 2 expands c -> 2c
    (conv4), gates to c and projects c -> c (conv5).
    """
    norm1_gain: torch.Tensor
    norm1_bias: torch.Tensor
    conv1_weight: torch.Tensor
    conv1_bias: torch.Tensor
    conv2_weight: torch.Tensor
    conv2_bias: torch.Tensor
    sca_weight: torch.Tensor
    sca_bias: torch.Tensor
    conv3_weight: torch.Tensor
    conv3_bias: torch.Tensor
    norm2_gain: torch.Tensor
    norm2_bias: torch.Tensor
    conv4_weight: torch.Tensor
    conv4_bias: torch.Tensor
    conv5_weight: torch.Tensor
    conv5_bias: torch.Tensor
    beta: Optional[torch.Tensor] = None
    gamma: Optional[torch.Tensor] = None

    @property
    def width(self) -> int:
        return self.norm1_gain.numel()

    def named_tensors(self) -> Iterator[Tuple[str, torch.Tensor]]:
        for f in fields(self):
            value = getattr(self, f.name)
            if value is not None:
                yield f.name, value


def baseline_block_forward(x: torch.Tensor, params: BlockParams) -> torch.Tensor:
    """
    Two residual stages of the simple-baseline block.

    Args:
        x: N x width x H x W
        params: Block parameters

    Returns:
        Feature map of the same shape
    """
    _require_4d(x, 'baseline_block')
    if x.shape[1] != params.width:
        raise InvalidParameterError(
            f"Block width {params.width} does not match input channels {x.shape[1]}",
            context={'width': params.width, 'channels': x.shape[1]}
        )
    expanded = 2 * params.width

    t = layer_norm(x, params.norm1_gain, params.norm1_bias)
    t = conv2d(t, params.conv1_weight, params.conv1_bias)
    t = conv2d(t, params.conv2_weight, params.conv2_bias, padding=1, groups=expanded)
    t = simple_gate(t)
    t = sca(t, params.sca_weight, params.sca_bias)
    t = conv2d(t, params.conv3_weight, params.conv3_bias)
    if params.beta is not None:
        t = t * params.beta.view(1, -1, 1, 1)
    y = x + t

    t = layer_norm(y, params.norm2_gain, params.norm2_bias)
    t = conv2d(t, params.conv4_weight, params.conv4_bias)
    t = simple_gate(t)
    t = conv2d(t, params.conv5_weight, params.conv5_bias)
    if params.gamma is not None:
        t = t * params.gamma.view(1, -1, 1, 1)
    return y + t
