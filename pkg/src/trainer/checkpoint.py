"""
Versioned HDF5 checkpoint container for TrainState.

Layout:
    attrs: magic, format_version, network_spec (JSON), iter, seed,
           last_loss, rng_state (JSON), optimizer (JSON hyperparameters)
    params/<name>            parameter arrays
    optim/exp_avg/<name>     first moments
    optim/exp_avg_sq/<name>  second moments
    optim/step/<name>        per-parameter step counters
"""

import json
import math
import os
from pathlib import Path
from typing import Optional

import h5py
import numpy as np
import torch

from core.exceptions import (
    CheckpointMismatchError, CorruptCheckpointError, FileOperationError, TeraForgeException
)
from core.error_logger import get_error_logger, ErrorSeverity
from jnet.network import SRNetwork
from jnet.spec import NetworkSpec
from .optim import TrainState, make_optimizer

CHECKPOINT_MAGIC = "TERAFORGE-CKPT"
FORMAT_VERSION = 1
_MOMENTS = ('exp_avg', 'exp_avg_sq')


def save_checkpoint(state: TrainState, path: Path):
    """
    Write a checkpoint atomically (temporary file, then rename).

    Args:
        state: Training state
        path: Destination .h5 file
    """
    path = Path(path)
    tmp_path = path.with_name(path.name + ".tmp")
    names = [name for name, _ in state.network.named_parameters()]
    optim_state = state.optimizer.state_dict()['state']

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with h5py.File(tmp_path, 'w') as f:
            f.attrs['magic'] = CHECKPOINT_MAGIC
            f.attrs['format_version'] = FORMAT_VERSION
            f.attrs['network_spec'] = json.dumps(state.spec.to_dict(), sort_keys=True)
            f.attrs['iter'] = state.iter
            f.attrs['seed'] = state.seed
            f.attrs['last_loss'] = float('nan') if state.last_loss is None else state.last_loss
            f.attrs['rng_state'] = json.dumps(state.rng_state())
            f.attrs['optimizer'] = json.dumps(state.optimizer_hparams())

            params = f.create_group('params')
            for name, param in state.network.named_parameters():
                params.create_dataset(name, data=param.detach().cpu().numpy())

            optim = f.create_group('optim')
            groups = {key: optim.create_group(key) for key in _MOMENTS + ('step',)}
            for index, name in enumerate(names):
                entry = optim_state.get(index)
                if not entry:
                    continue
                for key in _MOMENTS:
                    groups[key].create_dataset(name, data=entry[key].detach().cpu().numpy())
                step = entry['step']
                step = step.detach().cpu().numpy() if torch.is_tensor(step) else np.float32(step)
                groups['step'].create_dataset(name, data=step)
        os.replace(tmp_path, path)
    except OSError as e:
        if tmp_path.exists():
            tmp_path.unlink()
        raise FileOperationError(
            f"Cannot write checkpoint: {path}",
            context={'path': str(path)},
            cause=e
        )

    get_error_logger().log_error(
        f"Checkpoint written at iteration {state.iter}: {path}",
        component="CHECKPOINT",
        severity=ErrorSeverity.DEBUG
    )


def _check_shapes(f: h5py.File, expected: NetworkSpec, path: Path):
    reference = SRNetwork(expected)
    stored = f['params']
    for name, param in reference.named_parameters():
        if name not in stored:
            raise CheckpointMismatchError(
                f"Checkpoint {path.name} has no parameter '{name}' required by the given spec",
                context={'parameter': name, 'path': str(path)}
            )
        if tuple(stored[name].shape) != tuple(param.shape):
            raise CheckpointMismatchError(
                f"Parameter '{name}' has shape {tuple(stored[name].shape)} in {path.name}, "
                f"spec expects {tuple(param.shape)}",
                context={'parameter': name, 'stored_shape': tuple(stored[name].shape),
                         'expected_shape': tuple(param.shape), 'path': str(path)}
            )
    extra = sorted(set(stored) - {name for name, _ in reference.named_parameters()})
    if extra:
        raise CheckpointMismatchError(
            f"Checkpoint {path.name} holds parameter '{extra[0]}' unknown to the given spec",
            context={'parameter': extra[0], 'path': str(path)}
        )


def load_checkpoint(path: Path, expected_spec: Optional[NetworkSpec] = None,
                    device: str = "cpu") -> TrainState:
    """
    Restore a TrainState exactly as it was saved.

    Args:
        path: Checkpoint file
        expected_spec: When given, parameter shapes are checked against it first
        device: Torch device for the restored network

    Returns:
        TrainState

    Raises:
        CorruptCheckpointError: unreadable, truncated or wrong-version file
        CheckpointMismatchError: parameter shapes disagree with expected_spec
    """
    path = Path(path)
    if not path.is_file():
        raise FileOperationError(f"Checkpoint not found: {path}", context={'path': str(path)})
    try:
        with h5py.File(path, 'r') as f:
            magic = f.attrs.get('magic')
            if isinstance(magic, bytes):
                magic = magic.decode('utf-8')
            if magic != CHECKPOINT_MAGIC:
                raise CorruptCheckpointError(f"Not a TeraForge checkpoint: {path}",
                                             context={'path': str(path)})
            version = int(f.attrs['format_version'])
            if version != FORMAT_VERSION:
                raise CorruptCheckpointError(
                    f"Checkpoint format version {version} is not supported (expected {FORMAT_VERSION})",
                    context={'path': str(path), 'format_version': version}
                )

            spec = NetworkSpec.from_dict(json.loads(f.attrs['network_spec'])).validate()
            if expected_spec is not None:
                _check_shapes(f, expected_spec, path)

            network = SRNetwork(spec)
            names = []
            with torch.no_grad():
                for name, param in network.named_parameters():
                    data = f['params'][name][()]
                    if data.shape != tuple(param.shape):
                        raise CorruptCheckpointError(
                            f"Parameter '{name}' has shape {data.shape}, its spec implies {tuple(param.shape)}",
                            context={'path': str(path), 'parameter': name}
                        )
                    param.copy_(torch.from_numpy(np.ascontiguousarray(data)))
                    names.append(name)
            network.to(device)

            hparams = json.loads(f.attrs['optimizer'])
            optimizer = make_optimizer(network, **hparams)
            optim_dict = optimizer.state_dict()
            restored = {}
            for index, name in enumerate(names):
                if name not in f['optim/step']:
                    continue
                restored[index] = {
                    'step': torch.tensor(f['optim/step'][name][()]),
                    **{key: torch.from_numpy(f['optim'][key][name][()]).to(device) for key in _MOMENTS}
                }
            optim_dict['state'] = restored
            optimizer.load_state_dict(optim_dict)

            last_loss = float(f.attrs['last_loss'])
            state = TrainState(
                network=network,
                spec=spec,
                optimizer=optimizer,
                iter=int(f.attrs['iter']),
                seed=int(f.attrs['seed']),
                last_loss=None if math.isnan(last_loss) else last_loss,
            )
    except TeraForgeException:
        raise
    except (OSError, KeyError, ValueError, TypeError) as e:
        raise CorruptCheckpointError(
            f"Cannot read checkpoint {path}: {e}",
            context={'path': str(path)},
            cause=e
        )
    return state
