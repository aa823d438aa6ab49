"""
Component operators of the degradation chain: blur, downsample, add noise.

Images are C x H x W float arrays with intensities in [0, 1].
"""

import numpy as np
from scipy import ndimage

from core.exceptions import InvalidParameterError
from core.rng import SeededRng
from .kernels import GaussianKernel

DOWNSAMPLERS = ('decimate', 'bicubic')


def as_image_tensor(image: np.ndarray) -> np.ndarray:
    """Validate a C x H x W image and return it as float64."""
    image = np.asarray(image)
    if image.ndim != 3 or min(image.shape) < 1:
        raise InvalidParameterError(
            f"Expected a C x H x W image, got shape {image.shape}",
            context={'shape': image.shape}
        )
    return image.astype(np.float64, copy=False)


def blur(image: np.ndarray, kernel: GaussianKernel) -> np.ndarray:
    """
    Per-channel 2-D correlation with reflect-padded borders.

    Args:
        image: C x H x W image
        kernel: Blur kernel no larger than the image

    Returns:
        Blurred image of the same shape
    """
    image = as_image_tensor(image)
    _, height, width = image.shape
    if kernel.size > min(height, width):
        raise InvalidParameterError(
            f"Kernel of size {kernel.size} exceeds image {height}x{width}",
            context={'kernel_size': kernel.size, 'height': height, 'width': width}
        )
    # scipy 'mirror' is whole-sample reflection (numpy/torch 'reflect')
    out = np.empty_like(image)
    for c in range(image.shape[0]):
        ndimage.correlate(image[c], kernel.weights, output=out[c], mode='mirror')
    return out


def downsample(image: np.ndarray, scale: int, method: str = 'decimate') -> np.ndarray:
    """
    Reduce resolution by an integer factor.

    'decimate' keeps the top-left pixel of each scale x scale cell; the blur
    kernel already acts as the anti-aliasing lowpass. 'bicubic' applies the
    antialiased cubic resampler instead.

    Args:
        image: C x H x W image with H and W divisible by scale
        scale: Integer factor >= 1
        method: 'decimate' or 'bicubic'

    Returns:
        C x H/scale x W/scale image
    """
    image = as_image_tensor(image)
    if int(scale) != scale or scale < 1:
        raise InvalidParameterError(
            f"Scale must be a positive integer, got {scale}",
            context={'scale': scale}
        )
    scale = int(scale)
    _, height, width = image.shape
    if height % scale or width % scale:
        raise InvalidParameterError(
            f"Image {height}x{width} is not divisible by scale {scale}",
            context={'height': height, 'width': width, 'scale': scale}
        )
    if scale == 1:
        return image.copy()
    if method == 'decimate':
        return np.ascontiguousarray(image[:, ::scale, ::scale])
    if method == 'bicubic':
        from evalkit.resample import bicubic_resize
        return bicubic_resize(image, scale, direction='down')
    raise InvalidParameterError(
        f"Unknown downsampler: {method}",
        context={'method': method, 'allowed': DOWNSAMPLERS}
    )


def add_noise(image: np.ndarray, noise_std: float, rng: SeededRng) -> np.ndarray:
    """
    Add white Gaussian noise and clamp to [0, 1].

    Args:
        image: C x H x W image
        noise_std: Standard deviation on the [0, 1] scale, >= 0
        rng: Random stream

    Returns:
        Noisy image of the same shape
    """
    image = as_image_tensor(image)
    if not np.isfinite(noise_std) or noise_std < 0:
        raise InvalidParameterError(
            f"Noise std must be non-negative, got {noise_std}",
            context={'noise_std': noise_std}
        )
    if noise_std == 0:
        return image.copy()
    noise = rng.normal(0.0, noise_std, size=image.shape)
    return np.clip(image + noise, 0.0, 1.0)
