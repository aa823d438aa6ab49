"""
The training loop: data stream, periodic validation, metric log and checkpoints.
"""

from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
import torch

from core.exceptions import ConfigurationError, FileOperationError
from core.error_logger import get_error_logger, ErrorSeverity
from datapipe.corpus import Corpus
from datapipe.loader import DataConfig, ValidationPair, build_validation_set, make_train_loader
from degradation.model import DegradationConfig
from evalkit.metrics import psnr
from jnet.inference import super_resolve
from jnet.spec import NetworkSpec
from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig
from .optim import TrainState, cosine_lr, make_train_state, train_step

CHECKPOINT_DIR = "checkpoints"
LATEST_CHECKPOINT = "latest.h5"
FINAL_CHECKPOINT = "final.h5"
METRICS_FILE = "metrics.log"


@dataclass(frozen=True)
class MetricRecord:
    """One metric log line; lr is the rate used for step `iter` (0-based)."""
    iter: int
    lr: float
    loss: float
    val_psnr: Optional[float] = None

    def format(self) -> str:
        line = f"iter={self.iter} lr={self.lr!r} loss={self.loss!r}"
        if self.val_psnr is not None:
            line += f" val_psnr={self.val_psnr!r}"
        return line

    @classmethod
    def parse(cls, line: str) -> "MetricRecord":
        fields = dict(token.split('=', 1) for token in line.split())
        return cls(
            iter=int(fields['iter']),
            lr=float(fields['lr']),
            loss=float(fields['loss']),
            val_psnr=float(fields['val_psnr']) if 'val_psnr' in fields else None,
        )


class MetricLog:
    """Append-only plain-text metric log, one record per line."""

    def __init__(self, path: Path):
        self.path = Path(path)

    def append(self, record: MetricRecord):
        try:
            with open(self.path, 'a', encoding='utf-8') as f:
                f.write(record.format() + "\n")
        except OSError as e:
            raise FileOperationError(f"Cannot write metric log: {self.path}",
                                     context={'path': str(self.path)}, cause=e)

    def read(self) -> List[MetricRecord]:
        if not self.path.exists():
            return []
        lines = self.path.read_text(encoding='utf-8').splitlines()
        return [MetricRecord.parse(line) for line in lines if line.strip()]

    def truncate(self, before_iter: int):
        """Keep only records of steps before `before_iter`."""
        kept = [r for r in self.read() if r.iter < before_iter]
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("".join(r.format() + "\n" for r in kept), encoding='utf-8')


@dataclass
class FitResult:
    state: TrainState
    records: List[MetricRecord]
    final_checkpoint: Optional[Path]


@contextmanager
def deterministic_algorithms():
    """Enable deterministic torch kernels inside the block, then restore the caller's setting."""
    enabled = torch.are_deterministic_algorithms_enabled()
    warn_only = torch.is_deterministic_algorithms_warn_only_enabled()
    torch.use_deterministic_algorithms(True, warn_only=True)
    try:
        yield
    finally:
        torch.use_deterministic_algorithms(enabled, warn_only=warn_only)


def validate(state: TrainState, pairs: List[ValidationPair], device: str = "cpu") -> float:
    """Mean PSNR of the network over a validation set."""
    values = [psnr(super_resolve(state.network, state.spec, p.lr, device=device), p.hr)
              for p in pairs]
    return float(np.mean(values))


def _check_compatible(state: TrainState, spec: NetworkSpec, cfg: TrainConfig):
    if state.spec != spec:
        raise ConfigurationError(
            "Checkpoint was trained with a different network spec",
            context={'checkpoint_spec': state.spec.to_dict(), 'spec': spec.to_dict()}
        )
    if state.seed != cfg.seed:
        raise ConfigurationError(
            f"Checkpoint seed {state.seed} differs from configured seed {cfg.seed}",
            context={'checkpoint_seed': state.seed, 'seed': cfg.seed}
        )
    if state.iter > cfg.total_iters:
        raise ConfigurationError(
            f"Checkpoint is at iteration {state.iter}, beyond total_iters {cfg.total_iters}",
            context={'iter': state.iter, 'total_iters': cfg.total_iters}
        )


def fit(corpus: Corpus, spec: NetworkSpec, cfg: TrainConfig,
        degradation: DegradationConfig, data: DataConfig, out_dir: Path,
        val_corpus: Optional[Corpus] = None, resume: bool = False,
        stop_at: Optional[int] = None) -> FitResult:
    """
    Train a network for cfg.total_iters steps.

    Args:
        corpus: Training corpus
        spec: Network spec
        cfg: Training config
        degradation: Degradation applied on the fly to every patch
        data: Data pipeline settings
        out_dir: Run directory for checkpoints and the metric log
        val_corpus: Validation corpus; validation is skipped when None
        resume: Continue from out_dir/checkpoints/latest.h5 when it exists
        stop_at: Stop after this step index (as if interrupted); the schedule
            still spans total_iters

    Returns:
        FitResult with the final state and every metric record of the run
    """
    spec.validate()
    cfg.validate()
    degradation.validate()
    data.validate()
    if spec.scale != degradation.scale:
        raise ConfigurationError(
            f"Network scale {spec.scale} differs from degradation scale {degradation.scale}",
            context={'network_scale': spec.scale, 'degradation_scale': degradation.scale}
        )
    if data.patch_size % (spec.scale * spec.divisor()):
        raise ConfigurationError(
            f"Patch size {data.patch_size} is not a multiple of {spec.scale * spec.divisor()}",
            context={'patch_size': data.patch_size, 'scale': spec.scale, 'divisor': spec.divisor()}
        )

    logger = get_error_logger()
    out_dir = Path(out_dir)
    checkpoint_dir = out_dir / CHECKPOINT_DIR
    latest = checkpoint_dir / LATEST_CHECKPOINT
    metric_log = MetricLog(out_dir / METRICS_FILE)
    with deterministic_algorithms():
        if resume and latest.exists():
            state = load_checkpoint(latest, expected_spec=spec, device=cfg.device)
            _check_compatible(state, spec, cfg)
            logger.log_error(f"Resuming from iteration {state.iter}", component="TRAINER",
                             severity=ErrorSeverity.INFO, context={'checkpoint': str(latest)})
        else:
            state = make_train_state(spec, cfg)
        metric_log.truncate(state.iter)

        val_pairs: List[ValidationPair] = []
        if val_corpus is not None and cfg.val_interval:
            val_pairs = build_validation_set(
                val_corpus, degradation, data.val_crop, spec.scale * spec.divisor(),
                cfg.seed, data.val_limit or None
            )

        end = cfg.total_iters if stop_at is None else min(stop_at, cfg.total_iters)
        loader = make_train_loader(corpus, degradation, data, cfg.batch, cfg.seed, state.iter, end)
        logger.log_error(
            f"Training {spec.variant} (width {spec.width}, {spec.encoder_levels} levels) "
            f"from iteration {state.iter} to {end} of {cfg.total_iters}",
            component="TRAINER", severity=ErrorSeverity.INFO
        )

        for batch in loader:
            step = state.iter
            lr = cosine_lr(step, cfg)
            train_step(state, batch, cfg)
            done = state.iter == cfg.total_iters

            val_psnr = None
            if val_pairs and (state.iter % cfg.val_interval == 0 or done):
                val_psnr = validate(state, val_pairs, cfg.device)
            if val_psnr is not None or state.iter % cfg.log_interval == 0 or done:
                record = MetricRecord(iter=step, lr=lr, loss=state.last_loss, val_psnr=val_psnr)
                metric_log.append(record)
                message = f"iter {step}: loss {state.last_loss:.6g}, lr {lr:.3e}"
                if val_psnr is not None:
                    message += f", val PSNR {val_psnr:.3f} dB"
                logger.log_error(message, component="TRAINER", severity=ErrorSeverity.INFO)

            if cfg.checkpoint_interval and state.iter % cfg.checkpoint_interval == 0 and not done:
                save_checkpoint(state, checkpoint_dir / f"ckpt_{state.iter:07d}.h5")
                save_checkpoint(state, latest)

        final_checkpoint = None
        if state.iter == cfg.total_iters:
            final_checkpoint = checkpoint_dir / FINAL_CHECKPOINT
            save_checkpoint(state, final_checkpoint)
        save_checkpoint(state, latest)
        logger.log_error(f"Stopped at iteration {state.iter}", component="TRAINER",
                         severity=ErrorSeverity.INFO)
        return FitResult(state=state, records=metric_log.read(), final_checkpoint=final_checkpoint)
