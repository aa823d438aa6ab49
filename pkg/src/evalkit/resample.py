"""
Bicubic (cubic convolution) resampling with reflect boundaries.
"""

import numpy as np

from core.exceptions import InvalidParameterError

CUBIC_A = -0.5


def cubic_kernel(x: np.ndarray, a: float = CUBIC_A) -> np.ndarray:
    """Keys cubic convolution kernel; partition of unity, reproduces linear functions."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    x2 = x * x
    x3 = x2 * x
    near = (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0
    far = a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def reflect_index(index: np.ndarray, length: int) -> np.ndarray:
    """Whole-sample mirror of integer indices into [0, length)."""
    index = np.asarray(index)
    if length == 1:
        return np.zeros_like(index)
    period = 2 * (length - 1)
    index = np.mod(index, period)
    return np.where(index >= length, period - index, index)


def _upsample_matrix(n_in: int, scale: int) -> np.ndarray:
    # output j samples the input at j / scale, so every scale-th output is an input sample
    n_out = n_in * scale
    positions = np.arange(n_out, dtype=np.float64) / scale
    base = np.floor(positions).astype(np.int64)
    matrix = np.zeros((n_out, n_in), dtype=np.float64)
    rows = np.arange(n_out)
    for tap in range(-1, 3):
        idx = base + tap
        weights = cubic_kernel(positions - idx)
        np.add.at(matrix, (rows, reflect_index(idx, n_in)), weights)
    return matrix


def _downsample_matrix(n_in: int, scale: int) -> np.ndarray:
    # antialiased: kernel stretched by scale, centred on each output cell
    n_out = n_in // scale
    centres = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    support = 2 * scale
    first = np.floor(centres - support).astype(np.int64) + 1
    matrix = np.zeros((n_out, n_in), dtype=np.float64)
    rows = np.arange(n_out)
    for tap in range(2 * support):
        idx = first + tap
        weights = cubic_kernel((centres - idx) / scale) / scale
        np.add.at(matrix, (rows, reflect_index(idx, n_in)), weights)
    matrix /= matrix.sum(axis=1, keepdims=True)
    return matrix


def bicubic_resize(image: np.ndarray, scale: int, direction: str = 'up') -> np.ndarray:
    """
    Resize a C x H x W image by an integer factor with cubic convolution.

    Args:
        image: C x H x W image
        scale: Integer factor >= 1
        direction: 'up' multiplies dims by scale, 'down' divides them

    Returns:
        Resized image (float64)
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise InvalidParameterError(
            f"Expected a C x H x W image, got shape {image.shape}",
            context={'shape': image.shape}
        )
    if int(scale) != scale or scale < 1:
        raise InvalidParameterError(
            f"Scale must be a positive integer, got {scale}",
            context={'scale': scale}
        )
    if direction not in ('up', 'down'):
        raise InvalidParameterError(
            f"Direction must be 'up' or 'down', got {direction}",
            context={'direction': direction}
        )
    scale = int(scale)
    if scale == 1:
        return image.copy()

    _, height, width = image.shape
    if direction == 'up':
        rows, cols = _upsample_matrix(height, scale), _upsample_matrix(width, scale)
    else:
        if height % scale or width % scale:
            raise InvalidParameterError(
                f"Image {height}x{width} is not divisible by scale {scale}",
                context={'height': height, 'width': width, 'scale': scale}
            )
        rows, cols = _downsample_matrix(height, scale), _downsample_matrix(width, scale)
    return np.einsum('ij,cjk,lk->cil', rows, image, cols, optimize=True)
