"""
Patch sampling, augmentation and on-the-fly degradation into training pairs.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from core.exceptions import InvalidParameterError
from core.rng import SeededRng, STREAM_TRAIN
from degradation.model import DegradationConfig, DegradationRecord, degrade
from .corpus import Corpus

DEFAULT_PATCH_SIZE = 96
FLIP_PROBABILITY = 0.5
ROTATION_PROBABILITY = 0.5


@dataclass
class PatchPair:
    """An HR patch, its synthesized LR counterpart and where both came from."""
    hr: np.ndarray
    lr: np.ndarray
    meta: DegradationRecord
    source_index: int
    offset: Tuple[int, int]
    flipped: bool
    rotation: int


def random_crop(hr: np.ndarray, size: int, rng: SeededRng) -> np.ndarray:
    """Contiguous size x size window at a uniformly drawn valid offset."""
    return _crop_with_offset(hr, size, rng)[0]


def _crop_with_offset(hr: np.ndarray, size: int,
                      rng: SeededRng) -> Tuple[np.ndarray, Tuple[int, int]]:
    _, height, width = hr.shape
    if size < 1 or height < size or width < size:
        raise InvalidParameterError(
            f"Cannot crop {size}x{size} from a {height}x{width} image",
            context={'size': size, 'height': height, 'width': width}
        )
    top = int(rng.integers(0, height - size + 1))
    left = int(rng.integers(0, width - size + 1))
    return hr[:, top:top + size, left:left + size].copy(), (top, left)


def _draw_augmentation(rng: SeededRng) -> Tuple[bool, int]:
    # always three draws, whatever the outcomes
    flip = bool(rng.random() < FLIP_PROBABILITY)
    rotate = bool(rng.random() < ROTATION_PROBABILITY)
    quarter_turns = int(rng.integers(1, 4))
    return flip, quarter_turns if rotate else 0


def apply_augmentation(image: np.ndarray, flip: bool, quarter_turns: int) -> np.ndarray:
    if quarter_turns and image.shape[1] != image.shape[2]:
        raise InvalidParameterError(
            f"Rotation needs a square image, got {image.shape[1]}x{image.shape[2]}",
            context={'height': image.shape[1], 'width': image.shape[2]}
        )
    out = image[:, :, ::-1] if flip else image
    if quarter_turns:
        out = np.rot90(out, k=quarter_turns, axes=(1, 2))
    return np.ascontiguousarray(out)


def augment(hr: np.ndarray, rng: SeededRng) -> np.ndarray:
    """
    Horizontal flip with p=0.5, then a rotation by 90, 180 or 270 degrees with p=0.5.

    Args:
        hr: Square C x S x S image
        rng: Random stream

    Returns:
        Augmented copy with unchanged dims
    """
    flip, quarter_turns = _draw_augmentation(rng)
    return apply_augmentation(hr, flip, quarter_turns)


def sample_patch_pair(corpus: Corpus, cfg: DegradationConfig, rng: SeededRng,
                      patch_size: int = DEFAULT_PATCH_SIZE) -> PatchPair:
    """Pick an image uniformly, crop, augment and degrade it."""
    index = int(rng.integers(0, len(corpus)))
    patch, offset = _crop_with_offset(corpus.load(index), patch_size, rng)
    flip, quarter_turns = _draw_augmentation(rng)
    hr = apply_augmentation(patch, flip, quarter_turns)
    lr, record = degrade(hr, cfg, rng)
    return PatchPair(hr=hr, lr=lr, meta=record, source_index=index, offset=offset,
                     flipped=flip, rotation=quarter_turns)


def next_batch(corpus: Corpus, cfg: DegradationConfig, batch: int, rng: SeededRng,
               patch_size: int = DEFAULT_PATCH_SIZE) -> Tuple[np.ndarray, np.ndarray]:
    """
    Assemble `batch` independent training pairs.

    Pair i draws from rng.child(i), so the batch depends only on the stream
    identity and never on how many pairs were drawn before it.

    Args:
        corpus: Non-empty HR corpus
        cfg: Degradation parameters
        batch: Number of pairs
        rng: Random stream, typically derived from (seed, step)
        patch_size: HR patch edge, divisible by cfg.scale

    Returns:
        (lr_batch, hr_batch) float32 arrays of shape N x C x h x w and N x C x H x W
    """
    if batch < 1:
        raise InvalidParameterError(f"Batch size must be >= 1, got {batch}", context={'batch': batch})
    if patch_size % cfg.scale:
        raise InvalidParameterError(
            f"Patch size {patch_size} is not divisible by scale {cfg.scale}",
            context={'patch_size': patch_size, 'scale': cfg.scale}
        )
    pairs = [sample_patch_pair(corpus, cfg, rng.child(i), patch_size) for i in range(batch)]
    lr = np.stack([p.lr for p in pairs]).astype(np.float32)
    hr = np.stack([p.hr for p in pairs]).astype(np.float32)
    return lr, hr


def batch_for_step(corpus: Corpus, cfg: DegradationConfig, batch: int, seed: int, step: int,
                   patch_size: int = DEFAULT_PATCH_SIZE) -> Tuple[np.ndarray, np.ndarray]:
    """The batch consumed at training step `step` of a run seeded with `seed`."""
    return next_batch(corpus, cfg, batch, SeededRng.derive(seed, STREAM_TRAIN, step), patch_size)
