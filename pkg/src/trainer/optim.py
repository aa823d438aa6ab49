"""
Loss, learning-rate schedule and the single optimizer step.
"""

import copy
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import torch

from core.exceptions import InvalidParameterError, TrainingDivergedError
from core.error_logger import get_error_logger, ErrorSeverity
from core.rng import SeededRng, STREAM_INIT, STREAM_TRAIN
from jnet.network import SRNetwork, build_network
from jnet.spec import NetworkSpec
from .config import TrainConfig


def mse_loss(sr: torch.Tensor, hr: torch.Tensor) -> torch.Tensor:
    """Mean over all elements of the squared difference."""
    if sr.shape != hr.shape:
        raise InvalidParameterError(
            f"Loss needs identical shapes, got {tuple(sr.shape)} and {tuple(hr.shape)}",
            context={'sr': tuple(sr.shape), 'hr': tuple(hr.shape)}
        )
    return torch.mean((sr - hr) ** 2)


def cosine_lr(iteration: int, cfg: TrainConfig) -> float:
    """
    Cosine annealing from lr_init at step 0 to lr_final at total_iters.

    Args:
        iteration: Step index in [0, total_iters]
        cfg: Training config

    Returns:
        Learning rate for that step
    """
    if not 0 <= iteration <= cfg.total_iters:
        raise InvalidParameterError(
            f"Iteration {iteration} is outside [0, {cfg.total_iters}]",
            context={'iteration': iteration, 'total_iters': cfg.total_iters}
        )
    progress = iteration / cfg.total_iters
    return cfg.lr_final + 0.5 * (cfg.lr_init - cfg.lr_final) * (1.0 + math.cos(math.pi * progress))


def make_optimizer(network: torch.nn.Module, lr: float, betas: Tuple[float, float],
                   eps: float, weight_decay: float) -> torch.optim.AdamW:
    """Adam with decoupled weight decay; the rate is overwritten at every step."""
    return torch.optim.AdamW(network.parameters(), lr=lr, betas=tuple(betas), eps=eps,
                             weight_decay=weight_decay)


@dataclass
class TrainState:
    """
    Everything a training run needs to continue bit-exactly.

    The optimizer holds the first and second moment accumulators, one pair
    per network parameter. The data stream position is (seed, iter).
    """
    network: SRNetwork
    spec: NetworkSpec
    optimizer: torch.optim.AdamW
    iter: int = 0
    seed: int = 0
    last_loss: Optional[float] = None

    def rng_state(self) -> Dict[str, Any]:
        return {'seed': self.seed, 'stream': STREAM_TRAIN, 'next_step': self.iter}

    def optimizer_hparams(self) -> Dict[str, Any]:
        group = self.optimizer.param_groups[0]
        return {
            'lr': group['lr'],
            'betas': list(group['betas']),
            'eps': group['eps'],
            'weight_decay': group['weight_decay'],
        }

    def clone(self) -> "TrainState":
        network = copy.deepcopy(self.network)
        hparams = self.optimizer_hparams()
        optimizer = make_optimizer(network, **hparams)
        optimizer.load_state_dict(self.optimizer.state_dict())
        return TrainState(network=network, spec=self.spec, optimizer=optimizer, iter=self.iter,
                          seed=self.seed, last_loss=self.last_loss)


def make_train_state(spec: NetworkSpec, cfg: TrainConfig) -> TrainState:
    """Fresh network and optimizer at step 0, initialized from the run seed."""
    spec.validate()
    cfg.validate()
    network = build_network(spec, SeededRng.derive(cfg.seed, STREAM_INIT)).to(cfg.device)
    optimizer = make_optimizer(network, cfg.lr_init, cfg.betas, cfg.eps, cfg.weight_decay)
    return TrainState(network=network, spec=spec, optimizer=optimizer, iter=0, seed=cfg.seed)


def train_step(state: TrainState, batch: Tuple[torch.Tensor, torch.Tensor],
               cfg: TrainConfig) -> TrainState:
    """
    One forward, backward and AdamW update at the cosine rate of state.iter.

    Args:
        state: Training state, updated in place
        batch: (lr_batch, hr_batch)
        cfg: Training config

    Returns:
        The same state with iter incremented
    """
    if state.iter >= cfg.total_iters:
        raise InvalidParameterError(
            f"Training already finished at iteration {state.iter}",
            context={'iter': state.iter, 'total_iters': cfg.total_iters}
        )
    lr = cosine_lr(state.iter, cfg)
    for group in state.optimizer.param_groups:
        group['lr'] = lr

    reference = next(state.network.parameters())
    lr_batch, hr_batch = (t.to(device=reference.device, dtype=reference.dtype) for t in batch)

    state.network.train()
    state.optimizer.zero_grad(set_to_none=True)
    loss = mse_loss(state.network(lr_batch), hr_batch)
    loss_value = loss.item()
    if not math.isfinite(loss_value):
        get_error_logger().log_error(
            f"Non-finite loss at iteration {state.iter}",
            component="TRAINER",
            severity=ErrorSeverity.CRITICAL,
            context={'iter': state.iter, 'lr': lr, 'loss': loss_value}
        )
        raise TrainingDivergedError(
            f"Loss became {loss_value} at iteration {state.iter} (lr={lr:.3e})",
            context={'iter': state.iter, 'lr': lr, 'loss': loss_value}
        )
    loss.backward()
    state.optimizer.step()
    state.iter += 1
    state.last_loss = loss_value
    return state
