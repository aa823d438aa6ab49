"""
Richardson-Lucy deconvolution with a known Gaussian PSF.
"""

from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from core.exceptions import InvalidParameterError
from degradation.kernels import GaussianKernel

DIVISION_GUARD = 1e-12


def lucy_richardson(observed: np.ndarray, psf: GaussianKernel, iters: int = 30,
                    on_iterate: Optional[Callable[[int, np.ndarray], None]] = None
                    ) -> np.ndarray:
    """
    Deconvolve a C x H x W image channel by channel.

    Iterates u <- u * (psf_flipped (x) (observed / (psf (x) u))) from
    u0 = observed, with mirror boundaries.

    Args:
        observed: Non-negative C x H x W image
        psf: Point spread function
        iters: Number of iterations, >= 1
        on_iterate: Optional callback receiving (iteration, estimate)

    Returns:
        Non-negative deconvolved image of the same shape
    """
    observed = np.asarray(observed, dtype=np.float64)
    if observed.ndim != 3:
        raise InvalidParameterError(
            f"Expected a C x H x W image, got shape {observed.shape}",
            context={'shape': observed.shape}
        )
    if iters < 1:
        raise InvalidParameterError(
            f"Iteration count must be >= 1, got {iters}",
            context={'iters': iters}
        )
    if np.any(observed < 0):
        raise InvalidParameterError(
            "Lucy-Richardson requires a non-negative image",
            context={'min_value': float(observed.min())}
        )
    if psf.size > min(observed.shape[1:]):
        raise InvalidParameterError(
            f"PSF of size {psf.size} exceeds image {observed.shape[1]}x{observed.shape[2]}",
            context={'psf_size': psf.size, 'shape': observed.shape}
        )

    weights = psf.weights
    flipped = weights[::-1, ::-1]
    estimate = observed.copy()
    for iteration in range(1, iters + 1):
        for c in range(observed.shape[0]):
            reblurred = ndimage.convolve(estimate[c], weights, mode='mirror')
            ratio = observed[c] / np.maximum(reblurred, DIVISION_GUARD)
            estimate[c] *= ndimage.convolve(ratio, flipped, mode='mirror')
        if on_iterate is not None:
            on_iterate(iteration, estimate)
    return estimate
