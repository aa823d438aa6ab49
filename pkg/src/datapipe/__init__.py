"""
Data pipeline: corpus scanning, image IO, patch sampling and batch loading.
"""

from .imageio import load_image, save_image, image_geometry, quantize, IMAGE_EXTENSIONS
from .corpus import (
    Corpus, ImageRecord, scan_corpus, write_manifest, read_manifest, load_named_images
)
from .patches import (
    PatchPair, random_crop, augment, apply_augmentation, sample_patch_pair,
    next_batch, batch_for_step, DEFAULT_PATCH_SIZE
)
from .loader import (
    DataConfig, StepBatchDataset, make_train_loader, ValidationPair,
    build_validation_set, centre_crop
)

__all__ = [
    'load_image', 'save_image', 'image_geometry', 'quantize', 'IMAGE_EXTENSIONS',
    'Corpus', 'ImageRecord', 'scan_corpus', 'write_manifest', 'read_manifest',
    'load_named_images', 'PatchPair', 'random_crop', 'augment', 'apply_augmentation',
    'sample_patch_pair', 'next_batch', 'batch_for_step', 'DEFAULT_PATCH_SIZE',
    'DataConfig', 'StepBatchDataset', 'make_train_loader', 'ValidationPair',
    'build_validation_set', 'centre_crop',
]
