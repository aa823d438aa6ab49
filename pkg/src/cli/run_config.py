"""
Run configuration: one JSON file with a section per component.

Precedence, highest first: explicit CLI flag, --set override, config file,
dataclass default.
"""

import json
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from core.exceptions import ConfigurationError, TeraForgeException
from datapipe.loader import DataConfig
from degradation.model import DegradationConfig
from jnet.spec import NetworkSpec
from trainer.config import TrainConfig


@dataclass
class PathsConfig:
    """
    Attributes:
        out_dir: Run directory; checkpoints, logs and reports go below it
        log_file: Log file name inside out_dir; empty disables file logging
    """
    out_dir: str = "runs/desk"
    log_file: str = "teraforge.log"

    def validate(self) -> "PathsConfig":
        if not self.out_dir:
            raise ConfigurationError("paths.out_dir must not be empty")
        if Path(self.log_file).name != self.log_file:
            raise ConfigurationError(
                f"paths.log_file must be a bare file name, got {self.log_file!r}",
                context={'log_file': self.log_file}
            )
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


SECTIONS = {
    'degradation': DegradationConfig,
    'network': NetworkSpec,
    'training': TrainConfig,
    'data': DataConfig,
    'paths': PathsConfig,
}


@dataclass
class RunConfig:
    degradation: DegradationConfig = field(default_factory=DegradationConfig)
    network: NetworkSpec = field(default_factory=NetworkSpec)
    training: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    seed: int = 0

    def validate(self) -> "RunConfig":
        """Validate every section and the cross-section constraints."""
        try:
            for name in SECTIONS:
                getattr(self, name).validate()
        except ConfigurationError:
            raise
        except TeraForgeException as e:
            raise ConfigurationError(e.message, context=e.context, cause=e)

        if self.seed < 0:
            raise ConfigurationError(f"seed must be >= 0, got {self.seed}", context={'seed': self.seed})
        if self.network.scale != self.degradation.scale:
            raise ConfigurationError(
                f"network.scale ({self.network.scale}) must equal degradation.scale "
                f"({self.degradation.scale})",
                context={'network_scale': self.network.scale,
                         'degradation_scale': self.degradation.scale}
            )
        expected_channels = 3 if self.data.channels == 'rgb' else 1
        if self.network.in_channels != expected_channels:
            raise ConfigurationError(
                f"network.in_channels ({self.network.in_channels}) does not match "
                f"data.channels ({self.data.channels})",
                context={'in_channels': self.network.in_channels, 'channels': self.data.channels}
            )
        multiple = self.network.scale * self.network.divisor()
        if self.data.patch_size % multiple:
            raise ConfigurationError(
                f"data.patch_size ({self.data.patch_size}) must be a multiple of {multiple}",
                context={'patch_size': self.data.patch_size, 'multiple': multiple}
            )
        return self

    def set_seed(self, seed: int):
        self.seed = seed
        self.training.seed = seed

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {name: getattr(self, name).to_dict() for name in SECTIONS}
        data['seed'] = self.seed
        return data

    def save(self, path: Path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding='utf-8')


def _coerce(section: str, key: str, default: Any, value: Any) -> Any:
    where = f"{section}.{key}"
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{where} must be true or false, got {value!r}",
                                     context={'key': where, 'value': value})
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{where} must be an integer, got {value!r}",
                                     context={'key': where, 'value': value})
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{where} must be a number, got {value!r}",
                                     context={'key': where, 'value': value})
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigurationError(f"{where} must be a string, got {value!r}",
                                     context={'key': where, 'value': value})
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise ConfigurationError(f"{where} must be a list of {len(default)} values, got {value!r}",
                                     context={'key': where, 'value': value})
        return tuple(float(v) for v in value)
    return value


def _build_section(name: str, values: Dict[str, Any]):
    cls = SECTIONS[name]
    defaults = cls()
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigurationError(
            f"Unknown key '{name}.{unknown[0]}'",
            context={'section': name, 'unknown': unknown, 'allowed': sorted(known)}
        )
    kwargs = {key: _coerce(name, key, getattr(defaults, key), value) for key, value in values.items()}
    return cls(**kwargs)


def parse_override(text: str) -> tuple:
    """Split 'section.key=value'; the value is JSON when it parses, else a string."""
    if '=' not in text or '.' not in text.split('=', 1)[0]:
        raise ConfigurationError(f"Override must look like section.key=value, got {text!r}",
                                 context={'override': text})
    path, raw = text.split('=', 1)
    section, key = path.split('.', 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return section, key, value


def load_run_config(path: Optional[Path] = None, overrides: Iterable[str] = ()) -> RunConfig:
    """
    Read a config file, apply --set overrides and build the dataclasses.

    Validation is left to RunConfig.validate so CLI flags can still be applied.

    Args:
        path: JSON config file, or None for defaults
        overrides: 'section.key=value' strings

    Returns:
        RunConfig
    """
    raw: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding='utf-8'))
        except OSError as e:
            raise ConfigurationError(f"Cannot read config file: {path}",
                                     context={'path': str(path)}, cause=e)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Config file is not valid JSON: {path} ({e})",
                                     context={'path': str(path)}, cause=e)
        if not isinstance(raw, dict):
            raise ConfigurationError(f"Config file must hold a JSON object: {path}",
                                     context={'path': str(path)})

    unknown = sorted(set(raw) - set(SECTIONS) - {'seed'})
    if unknown:
        raise ConfigurationError(f"Unknown config section '{unknown[0]}'",
                                 context={'unknown': unknown, 'allowed': sorted(SECTIONS) + ['seed']})

    for name in SECTIONS:
        if not isinstance(raw.get(name, {}), dict):
            raise ConfigurationError(f"Section '{name}' must be an object", context={'section': name})
    merged: Dict[str, Dict[str, Any]] = {name: dict(raw.get(name, {})) for name in SECTIONS}
    for text in overrides:
        section, key, value = parse_override(text)
        if section not in SECTIONS:
            raise ConfigurationError(f"Unknown config section '{section}' in override {text!r}",
                                     context={'override': text})
        merged[section][key] = value
    seed = merged['training']['seed'] if 'seed' in merged['training'] else raw.get('seed', 0)

    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigurationError(f"seed must be an integer, got {seed!r}", context={'seed': seed})
    config = RunConfig(**{name: _build_section(name, values) for name, values in merged.items()})
    config.set_seed(seed)
    return config
