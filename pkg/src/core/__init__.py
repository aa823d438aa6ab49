"""
Core module for TeraForge: exceptions, structured logging and seeded RNG.
"""

from .exceptions import (
    TeraForgeException, InvalidParameterError, ConfigurationError,
    DataError, EmptyCorpusError, ImageDecodeError, MisalignedSetsError,
    FileOperationError, CheckpointError, CorruptCheckpointError,
    CheckpointMismatchError, TrainingDivergedError
)
from .error_logger import get_error_logger, ErrorSeverity
from .rng import SeededRng, STREAM_INIT, STREAM_TRAIN, STREAM_VAL

__all__ = [
    'TeraForgeException', 'InvalidParameterError', 'ConfigurationError',
    'DataError', 'EmptyCorpusError', 'ImageDecodeError', 'MisalignedSetsError',
    'FileOperationError', 'CheckpointError', 'CorruptCheckpointError',
    'CheckpointMismatchError', 'TrainingDivergedError',
    'get_error_logger', 'ErrorSeverity', 'SeededRng',
    'STREAM_INIT', 'STREAM_TRAIN', 'STREAM_VAL',
]
