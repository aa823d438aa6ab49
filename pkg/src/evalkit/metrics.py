"""
PSNR metric and evaluation reports.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np

from core.exceptions import InvalidParameterError, FileOperationError
from core.error_logger import get_error_logger, ErrorSeverity

INFINITE_PSNR = float('inf')


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0, crop: int = 0) -> float:
    """
    Peak signal-to-noise ratio over all channels jointly.

    Args:
        a: Image array
        b: Image array of the same shape
        peak: Maximum signal value, > 0
        crop: Pixels removed from each spatial border before measuring

    Returns:
        PSNR in dB; +inf when the images are identical
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidParameterError(
            f"PSNR needs identical shapes, got {a.shape} and {b.shape}",
            context={'shape_a': a.shape, 'shape_b': b.shape}
        )
    if peak <= 0:
        raise InvalidParameterError(
            f"Peak must be positive, got {peak}",
            context={'peak': peak}
        )
    if crop:
        if a.ndim < 2 or 2 * crop >= min(a.shape[-2:]):
            raise InvalidParameterError(
                f"Border crop {crop} leaves no pixels for shape {a.shape}",
                context={'crop': crop, 'shape': a.shape}
            )
        a = a[..., crop:-crop, crop:-crop]
        b = b[..., crop:-crop, crop:-crop]
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return INFINITE_PSNR
    return 10.0 * math.log10(peak * peak / mse)


def _format_db(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.4f}"


@dataclass
class EvalReport:
    """
    PSNR results of one method on one image set.

    Attributes:
        method: Method name
        image_names: Names of the evaluated images, aligned with psnr_values
        psnr_values: Per-image PSNR in dB (+inf for exact reconstructions)
        fingerprint: Provenance shared by every method run on the same inputs
        method_params: Settings specific to this method
    """
    method: str
    image_names: List[str]
    psnr_values: List[float]
    fingerprint: Dict[str, Any] = field(default_factory=dict)
    method_params: Dict[str, Any] = field(default_factory=dict)

    @property
    def mean_psnr(self) -> float:
        if not self.psnr_values:
            return float('nan')
        if any(math.isinf(v) for v in self.psnr_values):
            return INFINITE_PSNR
        return float(sum(self.psnr_values) / len(self.psnr_values))

    @property
    def infinite_entries(self) -> List[str]:
        return [n for n, v in zip(self.image_names, self.psnr_values) if math.isinf(v)]

    def to_dict(self) -> Dict[str, Any]:
        # JSON has no infinity literal, so inf is spelled out
        def encode(value: float):
            return "inf" if math.isinf(value) else value

        return {
            'method': self.method,
            'mean_psnr': encode(self.mean_psnr),
            'images': [
                {'name': n, 'psnr': encode(v)}
                for n, v in zip(self.image_names, self.psnr_values)
            ],
            'infinite_entries': self.infinite_entries,
            'fingerprint': self.fingerprint,
            'method_params': self.method_params,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EvalReport":
        def decode(value) -> float:
            return INFINITE_PSNR if value == "inf" else float(value)

        return cls(
            method=data['method'],
            image_names=[entry['name'] for entry in data['images']],
            psnr_values=[decode(entry['psnr']) for entry in data['images']],
            fingerprint=data.get('fingerprint', {}),
            method_params=data.get('method_params', {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def format_table(reports: Sequence[EvalReport]) -> str:
    """Plain-text summary table, one row per method."""
    width = max([len("Method")] + [len(r.method) for r in reports])
    lines = [
        f"{'Method':<{width}}  {'Images':>6}  {'PSNR (dB)':>10}",
        f"{'-' * width}  {'-' * 6}  {'-' * 10}",
    ]
    for report in reports:
        lines.append(
            f"{report.method:<{width}}  {len(report.psnr_values):>6}  "
            f"{_format_db(report.mean_psnr):>10}"
        )
    return "\n".join(lines)


def write_reports(reports: Sequence[EvalReport], out_dir: Path,
                  stem: str = "report") -> Dict[str, Path]:
    """
    Write a plain-text table and a JSON record for a set of reports.

    Args:
        reports: Reports to serialize
        out_dir: Destination directory
        stem: File name stem

    Returns:
        Mapping of 'table' and 'json' to the written paths
    """
    out_dir = Path(out_dir)
    table_path = out_dir / f"{stem}.txt"
    json_path = out_dir / f"{stem}.json"
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        lines = [format_table(reports), ""]
        for report in reports:
            lines.append(f"# {report.method}")
            for name, value in zip(report.image_names, report.psnr_values):
                lines.append(f"{name}\t{_format_db(value)}")
            lines.append("")
        table_path.write_text("\n".join(lines))
        json_path.write_text(json.dumps(
            {'reports': [r.to_dict() for r in reports]}, indent=2, sort_keys=True
        ))
    except OSError as e:
        raise FileOperationError(
            f"Failed to write reports to {out_dir}: {e}",
            context={'out_dir': str(out_dir)},
            cause=e
        )
    get_error_logger().log_error(
        f"Wrote {len(reports)} report(s) to {out_dir}",
        component="EVALKIT",
        severity=ErrorSeverity.INFO
    )
    return {'table': table_path, 'json': json_path}


def read_reports(json_path: Path) -> List[EvalReport]:
    """Load reports written by write_reports."""
    data = json.loads(Path(json_path).read_text())
    return [EvalReport.from_dict(entry) for entry in data['reports']]
