"""
Step-indexed torch data loading and the fixed validation set.
"""

from dataclasses import dataclass, asdict
from typing import Any, Dict, List, Optional

import numpy as np
import torch
from torch.utils.data import DataLoader, Dataset

from core.exceptions import InvalidParameterError
from core.error_logger import get_error_logger, ErrorSeverity
from core.rng import SeededRng, STREAM_VAL
from degradation.model import DegradationConfig, DegradationRecord, degrade
from .corpus import Corpus
from .patches import DEFAULT_PATCH_SIZE, batch_for_step


@dataclass
class DataConfig:
    """
    Where training data lives and how it is fed.

    Attributes:
        root: Corpus root holding the train and val split directories
        train_split: Training split sub-directory
        val_split: Validation split sub-directory
        channels: 'rgb' or 'gray' (luminance)
        patch_size: HR training patch edge
        num_workers: DataLoader worker processes; 0 loads in the training process
        val_crop: Edge of the centre crop used for validation images
        val_limit: Validate on the first N val images; 0 uses all
        cache_size: Decoded images kept per corpus (per worker)
    """
    root: str = "data"
    train_split: str = "train"
    val_split: str = "val"
    channels: str = "rgb"
    patch_size: int = DEFAULT_PATCH_SIZE
    num_workers: int = 0
    val_crop: int = 256
    val_limit: int = 0
    cache_size: int = 16

    def validate(self) -> "DataConfig":
        if self.channels not in ('rgb', 'gray'):
            raise InvalidParameterError(f"Unknown channel mode: {self.channels}",
                                        context={'channels': self.channels})
        for name in ('patch_size', 'val_crop'):
            if getattr(self, name) < 1:
                raise InvalidParameterError(f"{name} must be >= 1, got {getattr(self, name)}",
                                            context={name: getattr(self, name)})
        for name in ('num_workers', 'val_limit', 'cache_size'):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be >= 0, got {getattr(self, name)}",
                                            context={name: getattr(self, name)})
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class StepBatchDataset(Dataset):
    """
    Map-style dataset whose item `step` is the whole training batch of that step.

    Every item is derived from (seed, step) alone, so the batch sequence is the
    same for any worker count and any resume point.
    """

    def __init__(self, corpus: Corpus, cfg: DegradationConfig, batch: int, seed: int,
                 total_steps: int, patch_size: int = DEFAULT_PATCH_SIZE):
        self.corpus = corpus
        self.cfg = cfg
        self.batch = batch
        self.seed = seed
        self.total_steps = total_steps
        self.patch_size = patch_size

    def __len__(self) -> int:
        return self.total_steps

    def __getitem__(self, step: int):
        lr, hr = batch_for_step(self.corpus, self.cfg, self.batch, self.seed, step, self.patch_size)
        return torch.from_numpy(lr), torch.from_numpy(hr)


def make_train_loader(corpus: Corpus, cfg: DegradationConfig, data_cfg: DataConfig,
                      batch: int, seed: int, start_step: int, total_steps: int) -> DataLoader:
    """
    Loader yielding (lr, hr) float32 batches for steps start_step .. total_steps-1.
    """
    dataset = StepBatchDataset(corpus, cfg, batch, seed, total_steps, data_cfg.patch_size)
    return DataLoader(
        dataset,
        batch_size=None,
        sampler=range(start_step, total_steps),
        num_workers=data_cfg.num_workers,
        persistent_workers=False,
    )


@dataclass
class ValidationPair:
    name: str
    lr: np.ndarray
    hr: np.ndarray
    meta: DegradationRecord


def centre_crop(image: np.ndarray, edge: int) -> np.ndarray:
    _, height, width = image.shape
    top = (height - edge) // 2
    left = (width - edge) // 2
    return image[:, top:top + edge, left:left + edge]


def build_validation_set(corpus: Corpus, cfg: DegradationConfig, crop: int, multiple: int,
                         seed: int, limit: Optional[int] = None) -> List[ValidationPair]:
    """
    Degraded centre crops of validation images with a fixed seed per image.

    Args:
        corpus: Validation corpus
        cfg: Degradation parameters
        crop: Requested crop edge; clipped to the image and rounded down to `multiple`
        multiple: Required divisor of HR dims (scale * 2^levels)
        seed: Run seed
        limit: Use only the first `limit` images when set

    Returns:
        Validation pairs in corpus order
    """
    logger = get_error_logger()
    count = len(corpus) if not limit else min(limit, len(corpus))
    pairs = []
    for index in range(count):
        hr = corpus.load(index)
        edge = min(crop, hr.shape[1], hr.shape[2]) // multiple * multiple
        if edge < multiple:
            logger.log_error(
                f"Validation image {corpus.records[index].name} is smaller than {multiple}px, skipped",
                component="DATAPIPE", severity=ErrorSeverity.WARNING
            )
            continue
        hr = np.ascontiguousarray(centre_crop(hr, edge))
        lr, record = degrade(hr, cfg, SeededRng.derive(seed, STREAM_VAL, index))
        pairs.append(ValidationPair(corpus.records[index].name, lr, hr, record))
    logger.log_error(f"Validation set: {len(pairs)} of {len(corpus)} images",
                     component="DATAPIPE", severity=ErrorSeverity.INFO)
    return pairs
