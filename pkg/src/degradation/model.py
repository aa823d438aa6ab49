"""
The forward degradation model: LR = (HR * k) downsampled by s, plus noise.
"""

from dataclasses import dataclass, asdict
from typing import Any, Dict, Tuple

import numpy as np

from core.exceptions import InvalidParameterError
from core.rng import SeededRng
from .kernels import (
    KERNEL_POLICIES, kernel_size_for_sigma, make_gaussian_kernel, sample_sigma
)
from .operators import DOWNSAMPLERS, add_noise, as_image_tensor, blur, downsample

SUPPORTED_SCALES = (1, 2, 4)

# sigma=0 is a legal draw when alpha=0; treat it as a delta kernel
MIN_SIGMA = 1e-6


@dataclass
class DegradationConfig:
    """
    Parameters of the degradation chain.

    Attributes:
        scale: Downsampling factor s (1, 2 or 4)
        alpha: Lower bound of the blur sigma range
        beta: Upper bound of the blur sigma range
        noise_max: Noise std is drawn uniformly from [0, noise_max]
        kernel_policy: 'three-sigma' or 'fixed'
        fixed_kernel_size: Kernel edge for the 'fixed' policy
        downsampler: 'decimate' or 'bicubic'
    """
    scale: int = 2
    alpha: float = 0.1
    beta: float = 3.0
    noise_max: float = 10.0 / 255.0
    kernel_policy: str = 'three-sigma'
    fixed_kernel_size: int = 21
    downsampler: str = 'decimate'

    def validate(self) -> "DegradationConfig":
        """Check every field; returns self for chaining."""
        if self.scale not in SUPPORTED_SCALES:
            raise InvalidParameterError(
                f"Scale must be one of {SUPPORTED_SCALES}, got {self.scale}",
                context={'scale': self.scale}
            )
        if self.alpha < 0 or not self.alpha < self.beta:
            raise InvalidParameterError(
                f"Sigma range requires 0 <= alpha < beta, got ({self.alpha}, {self.beta})",
                context={'alpha': self.alpha, 'beta': self.beta}
            )
        if self.noise_max < 0:
            raise InvalidParameterError(
                f"noise_max must be non-negative, got {self.noise_max}",
                context={'noise_max': self.noise_max}
            )
        if self.kernel_policy not in KERNEL_POLICIES:
            raise InvalidParameterError(
                f"Unknown kernel policy: {self.kernel_policy}",
                context={'kernel_policy': self.kernel_policy}
            )
        if self.kernel_policy == 'fixed' and (
                self.fixed_kernel_size < 3 or self.fixed_kernel_size % 2 == 0):
            raise InvalidParameterError(
                f"fixed_kernel_size must be odd and >= 3, got {self.fixed_kernel_size}",
                context={'fixed_kernel_size': self.fixed_kernel_size}
            )
        if self.downsampler not in DOWNSAMPLERS:
            raise InvalidParameterError(
                f"Unknown downsampler: {self.downsampler}",
                context={'downsampler': self.downsampler}
            )
        return self

    def kernel_size(self, sigma: float) -> int:
        return kernel_size_for_sigma(sigma, self.kernel_policy, self.fixed_kernel_size)

    def estimated_lr_sigma(self) -> float:
        """Mid-range blur width expressed in LR pixels."""
        return 0.5 * (self.alpha + self.beta) / self.scale

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class DegradationRecord:
    """Every value sampled for one degradation, enough to replay it exactly."""
    sigma: float
    kernel_size: int
    noise_std: float
    noise_seed: int
    scale: int
    downsampler: str = 'decimate'

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DegradationRecord":
        return cls(
            sigma=float(data['sigma']),
            kernel_size=int(data['kernel_size']),
            noise_std=float(data['noise_std']),
            noise_seed=int(data['noise_seed']),
            scale=int(data['scale']),
            downsampler=str(data.get('downsampler', 'decimate')),
        )


def sample_record(cfg: DegradationConfig, rng: SeededRng) -> DegradationRecord:
    """Draw sigma, noise level and noise seed for one degradation."""
    sigma = sample_sigma(cfg.alpha, cfg.beta, rng)
    noise_std = float(rng.uniform(0.0, cfg.noise_max)) if cfg.noise_max > 0 else 0.0
    noise_seed = rng.spawn_seed()
    return DegradationRecord(
        sigma=sigma,
        kernel_size=cfg.kernel_size(max(sigma, MIN_SIGMA)),
        noise_std=noise_std,
        noise_seed=noise_seed,
        scale=cfg.scale,
        downsampler=cfg.downsampler,
    )


def apply_degradation(hr: np.ndarray, record: DegradationRecord) -> np.ndarray:
    """
    Replay a recorded degradation on an HR image.

    Args:
        hr: C x H x W image, H and W divisible by record.scale
        record: Sampled values

    Returns:
        LR image
    """
    kernel = make_gaussian_kernel(max(record.sigma, MIN_SIGMA), record.kernel_size)
    blurred = blur(hr, kernel)
    reduced = downsample(blurred, record.scale, record.downsampler)
    return add_noise(reduced, record.noise_std, SeededRng(record.noise_seed))


def degrade(hr: np.ndarray, cfg: DegradationConfig,
            rng: SeededRng) -> Tuple[np.ndarray, DegradationRecord]:
    """
    Synthesize an LR image from an HR image.

    Args:
        hr: C x H x W image with dims divisible by cfg.scale
        cfg: Degradation parameters
        rng: Random stream; a fixed seed makes the result a pure function

    Returns:
        (lr, record) where record holds every sampled value
    """
    hr = as_image_tensor(hr)
    _, height, width = hr.shape
    if height % cfg.scale or width % cfg.scale:
        raise InvalidParameterError(
            f"HR image {height}x{width} is not divisible by scale {cfg.scale}",
            context={'height': height, 'width': width, 'scale': cfg.scale}
        )
    record = sample_record(cfg, rng)
    return apply_degradation(hr, record), record
