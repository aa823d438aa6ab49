"""
Whole-image inference with divisibility padding and channel adaptation.
"""

import numpy as np
import torch

from core.exceptions import InvalidParameterError
from .network import SRNetwork
from .spec import NetworkSpec


def pad_to_multiple(image: np.ndarray, divisor: int) -> np.ndarray:
    """Reflect-pad a C x H x W image at the bottom/right to multiples of divisor."""
    _, h, w = image.shape
    pad_h, pad_w = (-h) % divisor, (-w) % divisor
    if not pad_h and not pad_w:
        return image
    # reflect needs at least two samples along an axis
    mode = 'reflect' if min(h, w) > 1 else 'symmetric'
    return np.pad(image, ((0, 0), (0, pad_h), (0, pad_w)), mode=mode)


def _run(network: SRNetwork, spec: NetworkSpec, image: np.ndarray, device: str) -> np.ndarray:
    _, h, w = image.shape
    padded = pad_to_multiple(image, spec.divisor())
    dtype = next(network.parameters()).dtype
    batch = torch.from_numpy(np.ascontiguousarray(padded)).to(device=device, dtype=dtype)[None]
    with torch.no_grad():
        out = network(batch)[0]
    out = out[:, :spec.scale * h, :spec.scale * w]
    return out.detach().cpu().double().numpy()


def super_resolve(network: SRNetwork, spec: NetworkSpec, image: np.ndarray,
                  device: str = 'cpu') -> np.ndarray:
    """
    Super-resolve one C x H x W image in [0, 1].

    Grayscale input to an RGB network is replicated to three channels and
    the output averaged back to one. RGB input to a grayscale network is
    processed one channel at a time.

    Args:
        network: Trained network
        spec: Spec the network was built from
        image: C x H x W float array
        device: Torch device string

    Returns:
        C x scale*H x scale*W float64 array clamped to [0, 1]
    """
    if image.ndim != 3:
        raise InvalidParameterError(
            f"Expected a C x H x W image, got shape {image.shape}",
            context={'shape': image.shape}
        )
    channels = image.shape[0]
    was_training = network.training
    network.eval()
    try:
        if channels == spec.in_channels:
            out = _run(network, spec, image, device)
        elif channels == 1 and spec.in_channels == 3:
            out = _run(network, spec, np.repeat(image, 3, axis=0), device)
            out = out.mean(axis=0, keepdims=True)
        elif channels == 3 and spec.in_channels == 1:
            out = np.concatenate([_run(network, spec, image[c:c + 1], device) for c in range(3)])
        else:
            raise InvalidParameterError(
                f"Cannot feed a {channels}-channel image to a {spec.in_channels}-channel network",
                context={'channels': channels, 'in_channels': spec.in_channels}
            )
        if out.shape[0] != channels:
            # 3-channel output from a 1-channel-in network, or vice versa
            out = out.mean(axis=0, keepdims=True) if channels == 1 else np.repeat(out, 3, axis=0)
    finally:
        network.train(was_training)
    return np.clip(out, 0.0, 1.0)
