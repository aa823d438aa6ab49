"""
Isotropic Gaussian blur kernels standing in for the THz point spread function.
"""

import math
from dataclasses import dataclass

import numpy as np

from core.exceptions import InvalidParameterError
from core.rng import SeededRng

KERNEL_POLICIES = ('three-sigma', 'fixed')


@dataclass(frozen=True)
class GaussianKernel:
    """
    Discrete, unit-sum Gaussian kernel.

    Attributes:
        sigma: Standard deviation in pixels
        size: Odd edge length in pixels
        weights: (size, size) float64 array summing to 1
    """
    sigma: float
    size: int
    weights: np.ndarray

    @property
    def radius(self) -> int:
        return self.size // 2


def kernel_size_for_sigma(sigma: float, policy: str = 'three-sigma',
                          fixed_size: int = 21) -> int:
    """
    Map a blur width to an odd kernel edge.

    Args:
        sigma: Standard deviation in pixels
        policy: 'three-sigma' gives 2*ceil(3*sigma)+1; 'fixed' returns fixed_size
        fixed_size: Edge used by the 'fixed' policy

    Returns:
        Odd kernel size, at least 3
    """
    if policy == 'three-sigma':
        size = 2 * math.ceil(3.0 * sigma) + 1
    elif policy == 'fixed':
        size = int(fixed_size)
    else:
        raise InvalidParameterError(
            f"Unknown kernel policy: {policy}",
            context={'policy': policy, 'allowed': KERNEL_POLICIES}
        )
    size = max(size, 3)
    if size % 2 == 0:
        size += 1
    return size


def make_gaussian_kernel(sigma: float, size: int) -> GaussianKernel:
    """
    Build a normalized Gaussian kernel.

    weights[i][j] is proportional to exp(-(x^2 + y^2) / (2 sigma^2)) for
    integer offsets (x, y) from the centre, renormalized to sum to 1.

    Args:
        sigma: Standard deviation, > 0
        size: Odd edge length, >= 3

    Returns:
        GaussianKernel

    Raises:
        InvalidParameterError: If sigma <= 0 or size is even or < 3
    """
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidParameterError(
            f"Kernel sigma must be positive, got {sigma}",
            context={'sigma': sigma}
        )
    if int(size) != size or size < 3 or size % 2 == 0:
        raise InvalidParameterError(
            f"Kernel size must be an odd integer >= 3, got {size}",
            context={'size': size}
        )
    size = int(size)
    radius = size // 2
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    # separable profile; the outer product keeps x<->y symmetry exact
    profile = np.exp(-(offsets ** 2) / (2.0 * sigma ** 2))
    weights = np.outer(profile, profile)
    weights /= weights.sum()
    weights.setflags(write=False)
    return GaussianKernel(sigma=float(sigma), size=size, weights=weights)


def sample_sigma(alpha: float, beta: float, rng: SeededRng) -> float:
    """
    Draw a blur width uniformly from [alpha, beta].

    Args:
        alpha: Lower bound, >= 0
        beta: Upper bound, > alpha
        rng: Random stream

    Returns:
        Sampled sigma
    """
    if alpha < 0 or not alpha < beta:
        raise InvalidParameterError(
            f"Sigma range requires 0 <= alpha < beta, got alpha={alpha}, beta={beta}",
            context={'alpha': alpha, 'beta': beta}
        )
    return float(rng.uniform(alpha, beta))
