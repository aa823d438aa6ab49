"""
Training hyperparameters.
"""

from dataclasses import dataclass, asdict
from typing import Any, Dict, Tuple

from core.exceptions import ConfigurationError


@dataclass
class TrainConfig:
    """
    Optimizer, schedule and bookkeeping settings of one training run.

    Attributes:
        total_iters: Number of optimizer steps; the cosine schedule spans them
        batch: Training pairs per step
        lr_init: Learning rate at step 0
        lr_final: Learning rate reached at total_iters
        betas: Adam moment decay rates
        weight_decay: Decoupled weight decay
        eps: Adam denominator epsilon
        seed: Run seed; network init, batches and validation derive from it
        checkpoint_interval: Steps between checkpoints (0 writes only the final one)
        val_interval: Steps between validation passes (0 disables validation)
        log_interval: Steps between metric log records
        device: Torch device string
    """
    total_iters: int = 200000
    batch: int = 32
    lr_init: float = 1e-3
    lr_final: float = 1e-6
    betas: Tuple[float, float] = (0.9, 0.99)
    weight_decay: float = 1e-4
    eps: float = 1e-8
    seed: int = 0
    checkpoint_interval: int = 5000
    val_interval: int = 1000
    log_interval: int = 100
    device: str = "cpu"

    def __post_init__(self):
        # JSON gives lists
        self.betas = tuple(self.betas)

    def validate(self) -> "TrainConfig":
        def fail(message: str, **context):
            raise ConfigurationError(message, context=context)

        if self.total_iters < 1:
            fail(f"total_iters must be >= 1, got {self.total_iters}", total_iters=self.total_iters)
        if self.batch < 1:
            fail(f"batch must be >= 1, got {self.batch}", batch=self.batch)
        if not 0 <= self.lr_final < self.lr_init:
            fail(f"Learning rates need 0 <= lr_final < lr_init, got {self.lr_final} and {self.lr_init}",
                 lr_init=self.lr_init, lr_final=self.lr_final)
        if len(self.betas) != 2 or not all(0.0 <= b < 1.0 for b in self.betas):
            fail(f"betas must be two values in [0, 1), got {self.betas}", betas=list(self.betas))
        if self.weight_decay < 0:
            fail(f"weight_decay must be >= 0, got {self.weight_decay}", weight_decay=self.weight_decay)
        if self.eps <= 0:
            fail(f"eps must be > 0, got {self.eps}", eps=self.eps)
        if self.seed < 0:
            fail(f"seed must be >= 0, got {self.seed}", seed=self.seed)
        for name in ('checkpoint_interval', 'val_interval'):
            if getattr(self, name) < 0:
                fail(f"{name} must be >= 0, got {getattr(self, name)}", **{name: getattr(self, name)})
        if self.log_interval < 1:
            fail(f"log_interval must be >= 1, got {self.log_interval}", log_interval=self.log_interval)
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['betas'] = list(self.betas)
        return data
