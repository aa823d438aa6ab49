"""
Side-by-side PSNR comparison of super-resolution methods on identical inputs.
"""

import hashlib
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import InvalidParameterError, MisalignedSetsError
from core.error_logger import get_error_logger, ErrorSeverity
from degradation.kernels import kernel_size_for_sigma, make_gaussian_kernel
from .deconvolution import lucy_richardson
from .metrics import EvalReport, psnr
from .resample import bicubic_resize

NamedImages = Sequence[Tuple[str, np.ndarray]]


class SRMethod(ABC):
    """A mapping from an LR image to an SR image at the target scale."""

    name: str = "method"

    @abstractmethod
    def super_resolve(self, image_name: str, lr: np.ndarray) -> np.ndarray:
        """Return the SR estimate for one LR image."""

    def params(self) -> Dict[str, Any]:
        return {}


class BicubicMethod(SRMethod):
    """Cubic-convolution upscaling."""

    def __init__(self, scale: int, name: str = "bicubic"):
        self.scale = scale
        self.name = name

    def super_resolve(self, image_name: str, lr: np.ndarray) -> np.ndarray:
        return np.clip(bicubic_resize(lr, self.scale, 'up'), 0.0, 1.0)

    def params(self) -> Dict[str, Any]:
        return {'scale': self.scale}


class LucyRichardsonMethod(SRMethod):
    """Lucy-Richardson deconvolution at LR resolution, then bicubic upscaling."""

    def __init__(self, scale: int, sigma: float, iters: int = 30,
                 name: str = "lucy-richardson"):
        if sigma <= 0:
            raise InvalidParameterError(
                f"PSF sigma must be positive, got {sigma}",
                context={'sigma': sigma}
            )
        self.scale = scale
        self.sigma = float(sigma)
        self.iters = int(iters)
        self.name = name

    def super_resolve(self, image_name: str, lr: np.ndarray) -> np.ndarray:
        size = kernel_size_for_sigma(self.sigma)
        limit = min(lr.shape[1:])
        if size > limit:
            size = limit if limit % 2 else limit - 1
        psf = make_gaussian_kernel(self.sigma, max(size, 3))
        restored = lucy_richardson(lr, psf, self.iters)
        return np.clip(bicubic_resize(restored, self.scale, 'up'), 0.0, 1.0)

    def params(self) -> Dict[str, Any]:
        return {'scale': self.scale, 'psf_sigma': self.sigma, 'iters': self.iters}


class GroundTruthMethod(SRMethod):
    """Feeds the HR image back as the SR estimate; an upper-bound sanity check."""

    def __init__(self, hr_set: NamedImages, name: str = "ground-truth"):
        self.lookup = {n: img for n, img in hr_set}
        self.name = name

    def super_resolve(self, image_name: str, lr: np.ndarray) -> np.ndarray:
        return self.lookup[image_name]


class ExternalMethod(SRMethod):
    """Loads precomputed SR images from a directory, matched by file name."""

    def __init__(self, directory: Path, name: Optional[str] = None,
                 channels: str = 'rgb'):
        self.directory = Path(directory)
        self.name = name or f"external:{self.directory.name}"
        self.channels = channels

    def resolve_path(self, image_name: str) -> Optional[Path]:
        exact = self.directory / image_name
        if exact.is_file():
            return exact
        stem = Path(image_name).stem
        candidates = sorted(p for p in self.directory.glob(f"{stem}.*") if p.is_file())
        return candidates[0] if candidates else None

    def missing(self, image_names: Sequence[str]) -> List[str]:
        return [n for n in image_names if self.resolve_path(n) is None]

    def super_resolve(self, image_name: str, lr: np.ndarray) -> np.ndarray:
        from datapipe.imageio import load_image

        path = self.resolve_path(image_name)
        if path is None:
            raise MisalignedSetsError(
                f"External method {self.name} has no SR image for {image_name}",
                context={'directory': str(self.directory), 'missing': [image_name]}
            )
        channels = 'gray' if lr.shape[0] == 1 else self.channels
        return load_image(path, channels)

    def params(self) -> Dict[str, Any]:
        return {'directory': str(self.directory)}


class NetworkMethod(SRMethod):
    """A trained network applied through the padded inference helper."""

    def __init__(self, network, spec, name: str = "jnet", device: str = "cpu",
                 checkpoint: Optional[str] = None):
        self.network = network
        self.spec = spec
        self.name = name
        self.device = device
        self.checkpoint = checkpoint

    def super_resolve(self, image_name: str, lr: np.ndarray) -> np.ndarray:
        from jnet.inference import super_resolve
        return super_resolve(self.network, self.spec, lr, device=self.device)

    def params(self) -> Dict[str, Any]:
        params = {'network': self.spec.to_dict(), 'spec_hash': self.spec.fingerprint()}
        if self.checkpoint:
            params['checkpoint'] = self.checkpoint
        return params


def inputs_digest(lr_set: NamedImages, hr_set: NamedImages) -> str:
    """SHA-256 over names, shapes and bytes of both image sets."""
    digest = hashlib.sha256()
    for name, image in list(lr_set) + list(hr_set):
        array = np.ascontiguousarray(image, dtype=np.float64)
        digest.update(name.encode('utf-8'))
        digest.update(str(array.shape).encode('ascii'))
        digest.update(array.tobytes())
    return digest.hexdigest()


def check_alignment(lr_names: Sequence[str], hr_names: Sequence[str]):
    """Raise MisalignedSetsError listing every name present on one side only."""
    only_lr = sorted(set(lr_names) - set(hr_names))
    only_hr = sorted(set(hr_names) - set(lr_names))
    if only_lr or only_hr or len(lr_names) != len(hr_names):
        raise MisalignedSetsError(
            f"LR/HR sets are misaligned; LR only: {', '.join(only_lr) or 'none'}; "
            f"HR only: {', '.join(only_hr) or 'none'}",
            context={'lr_only': only_lr, 'hr_only': only_hr}
        )


def compare_methods(lr_set: NamedImages, hr_set: NamedImages,
                    methods: Sequence[SRMethod],
                    fingerprint: Optional[Mapping[str, Any]] = None,
                    crop: int = 0) -> List[EvalReport]:
    """
    Evaluate several methods on identical LR/HR pairs.

    Args:
        lr_set: (name, LR image) pairs
        hr_set: (name, HR image) pairs with the same names
        methods: Methods to evaluate
        fingerprint: Provenance merged into every report's fingerprint
        crop: Border pixels excluded from PSNR

    Returns:
        One EvalReport per method, in the order given
    """
    lr_set = list(lr_set)
    hr_lookup = dict(hr_set)
    names = [n for n, _ in lr_set]
    check_alignment(names, [n for n, _ in hr_set])

    shared = dict(fingerprint or {})
    shared['inputs_sha256'] = inputs_digest(lr_set, sorted(hr_lookup.items()))
    shared['num_images'] = len(lr_set)
    shared['crop'] = crop

    logger = get_error_logger()
    reports = []
    for method in methods:
        values = []
        for name, lr in lr_set:
            hr = hr_lookup[name]
            sr = method.super_resolve(name, lr)
            if sr.shape != hr.shape:
                raise MisalignedSetsError(
                    f"{method.name} produced {sr.shape} for {name}, expected {hr.shape}",
                    context={'method': method.name, 'image': name, 'sr_shape': sr.shape, 'hr_shape': hr.shape}
                )
            values.append(psnr(sr, hr, crop=crop))
        report = EvalReport(
            method=method.name,
            image_names=names,
            psnr_values=values,
            fingerprint=dict(shared),
            method_params=method.params(),
        )
        logger.log_error(
            f"{method.name}: mean PSNR {report.mean_psnr:.4f} dB over {len(values)} images",
            component="EVALKIT",
            severity=ErrorSeverity.INFO
        )
        reports.append(report)
    return reports
