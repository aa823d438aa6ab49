"""
Training: MSE objective, AdamW with cosine annealing, checkpoints and resumption.
"""

from .config import TrainConfig
from .optim import TrainState, mse_loss, cosine_lr, make_optimizer, make_train_state, train_step
from .checkpoint import save_checkpoint, load_checkpoint, CHECKPOINT_MAGIC, FORMAT_VERSION
from .loop import (
    fit, validate, FitResult, MetricLog, MetricRecord,
    CHECKPOINT_DIR, LATEST_CHECKPOINT, FINAL_CHECKPOINT, METRICS_FILE
)

__all__ = [
    'TrainConfig', 'TrainState', 'mse_loss', 'cosine_lr', 'make_optimizer',
    'make_train_state', 'train_step', 'save_checkpoint', 'load_checkpoint',
    'CHECKPOINT_MAGIC', 'FORMAT_VERSION', 'fit', 'validate', 'FitResult',
    'MetricLog', 'MetricRecord', 'CHECKPOINT_DIR', 'LATEST_CHECKPOINT',
    'FINAL_CHECKPOINT', 'METRICS_FILE',
]
