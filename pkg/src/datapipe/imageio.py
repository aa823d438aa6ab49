"""
Lossless raster IO for 8- and 16-bit images.
Images are C x H x W float arrays in [0, 1] everywhere in TeraForge.
"""

from pathlib import Path
from typing import Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from core.exceptions import ImageDecodeError, FileOperationError, InvalidParameterError

IMAGE_EXTENSIONS = ('.png', '.bmp', '.tif', '.tiff', '.ppm', '.pgm')
CHANNEL_MODES = ('rgb', 'gray', 'native')

_SIXTEEN_BIT_MODES = ('I;16', 'I;16B', 'I;16L', 'I')


def _native_channels(mode: str) -> int:
    return 1 if mode in ('L', '1', 'P;L') or mode in _SIXTEEN_BIT_MODES else 3


def image_geometry(path: Path) -> Tuple[int, int, int]:
    """
    Fully decode an image file and report its geometry.

    Returns:
        (height, width, native channel count)
    """
    try:
        with Image.open(path) as img:
            img.load()
            return img.height, img.width, _native_channels(img.mode)
    except (UnidentifiedImageError, OSError, ValueError) as e:
        raise ImageDecodeError(
            f"Cannot decode image: {path}",
            context={'path': str(path)},
            cause=e
        )


def load_image(path: Path, channels: str = 'rgb') -> np.ndarray:
    """
    Decode an image into a C x H x W float64 array in [0, 1].

    Args:
        path: Image file
        channels: 'rgb' (3 channels), 'gray' (luminance) or 'native'

    Returns:
        Image tensor; 8-bit sources are divided by 255, 16-bit by 65535
    """
    if channels not in CHANNEL_MODES:
        raise InvalidParameterError(
            f"Unknown channel mode: {channels}",
            context={'channels': channels, 'allowed': CHANNEL_MODES}
        )
    path = Path(path)
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode in _SIXTEEN_BIT_MODES:
                data = np.asarray(img, dtype=np.float64) / 65535.0
                data = np.clip(data, 0.0, 1.0)[None]
                if channels == 'rgb':
                    data = np.repeat(data, 3, axis=0)
                return data
            if channels == 'gray' or (channels == 'native' and _native_channels(img.mode) == 1):
                data = np.asarray(img.convert('L'), dtype=np.float64)[None]
            else:
                data = np.asarray(img.convert('RGB'), dtype=np.float64).transpose(2, 0, 1)
            return np.ascontiguousarray(data / 255.0)
    except (UnidentifiedImageError, OSError, ValueError) as e:
        raise ImageDecodeError(
            f"Cannot decode image: {path}",
            context={'path': str(path)},
            cause=e
        )


def save_image(path: Path, image: np.ndarray, bit_depth: int = 8):
    """
    Write a C x H x W image in [0, 1] losslessly.

    Args:
        path: Destination; the format follows the extension
        image: 1- or 3-channel image
        bit_depth: 8, or 16 for single-channel images
    """
    if image.ndim != 3 or image.shape[0] not in (1, 3):
        raise InvalidParameterError(
            f"Expected a 1- or 3-channel C x H x W image, got shape {image.shape}",
            context={'shape': image.shape}
        )
    if bit_depth not in (8, 16):
        raise InvalidParameterError(f"bit_depth must be 8 or 16, got {bit_depth}",
                                    context={'bit_depth': bit_depth})
    if bit_depth == 16 and image.shape[0] != 1:
        raise InvalidParameterError("16-bit output is supported for single-channel images only",
                                    context={'channels': image.shape[0]})

    clipped = np.clip(image, 0.0, 1.0)
    if bit_depth == 16:
        pil = Image.fromarray(np.round(clipped[0] * 65535.0).astype(np.uint16))
    elif image.shape[0] == 1:
        pil = Image.fromarray(np.round(clipped[0] * 255.0).astype(np.uint8))
    else:
        pil = Image.fromarray(np.round(clipped.transpose(1, 2, 0) * 255.0).astype(np.uint8))

    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        pil.save(path)
    except (OSError, ValueError) as e:
        raise FileOperationError(
            f"Cannot write image: {path}",
            context={'path': str(path)},
            cause=e
        )


def quantize(image: np.ndarray, bit_depth: int = 8) -> np.ndarray:
    """Values exactly as save_image stores them, read back as floats."""
    levels = 65535.0 if bit_depth == 16 else 255.0
    return np.round(np.clip(image, 0.0, 1.0) * levels) / levels
