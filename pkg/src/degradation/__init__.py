"""
Degradation module synthesizing THz-realistic LR images from HR images.
Implements Gaussian-PSF blur, downsampling and additive noise.
"""

from .kernels import GaussianKernel, make_gaussian_kernel, kernel_size_for_sigma, sample_sigma
from .operators import blur, downsample, add_noise
from .model import (
    DegradationConfig, DegradationRecord, degrade, apply_degradation, sample_record
)

__all__ = [
    'GaussianKernel', 'make_gaussian_kernel', 'kernel_size_for_sigma', 'sample_sigma',
    'blur', 'downsample', 'add_noise',
    'DegradationConfig', 'DegradationRecord', 'degrade', 'apply_degradation',
    'sample_record',
]
