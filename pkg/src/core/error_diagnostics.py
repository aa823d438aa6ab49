"""
Error diagnostics utilities for TeraForge.
Provides diagnostics reports, recovery suggestions and timed operation contexts.
"""

import json
import platform
from typing import Dict, Any, Optional
from pathlib import Path
from datetime import datetime

import numpy as np

from .error_logger import get_error_logger, ErrorSeverity


class SystemDiagnostics:
    """Gather system information for diagnostics and troubleshooting."""

    @staticmethod
    def get_system_info() -> Dict[str, Any]:
        """Get platform and interpreter information."""
        try:
            return {
                'platform': platform.platform(),
                'python_version': platform.python_version(),
                'processor': platform.processor(),
                'machine': platform.machine(),
            }
        except Exception as e:
            get_error_logger().log_error(
                f"Failed to get system info: {e}",
                component="DIAGNOSTICS",
                severity=ErrorSeverity.WARNING
            )
            return {}

    @staticmethod
    def get_compute_info() -> Dict[str, Any]:
        """Get numerical library versions and accelerator availability."""
        info: Dict[str, Any] = {'numpy': np.__version__}
        try:
            import torch
            info['torch'] = torch.__version__
            info['cuda_available'] = torch.cuda.is_available()
            info['torch_threads'] = torch.get_num_threads()
        except Exception as e:
            get_error_logger().log_error(
                f"Failed to query torch: {e}",
                component="DIAGNOSTICS",
                severity=ErrorSeverity.WARNING
            )
        return info

    @staticmethod
    def get_full_diagnostics() -> Dict[str, Any]:
        """Get complete system diagnostics."""
        return {
            'timestamp': datetime.now().isoformat(),
            'system': SystemDiagnostics.get_system_info(),
            'compute': SystemDiagnostics.get_compute_info(),
        }


class ErrorDiagnosticReport:
    """Generate diagnostic reports for failed runs."""

    def __init__(self):
        self.error_logger = get_error_logger()

    def generate_report(self, filepath: Optional[Path] = None) -> Dict[str, Any]:
        """
        Generate a diagnostic report.

        Args:
            filepath: Path to save report (optional)

        Returns:
            Dictionary containing diagnostic report
        """
        report = {
            'timestamp': datetime.now().isoformat(),
            'system_diagnostics': SystemDiagnostics.get_full_diagnostics(),
            'error_summary': self.error_logger.get_error_summary(),
            'recent_errors': [
                e.to_dict() for e in self.error_logger.get_errors(limit=20)
            ],
        }

        if filepath:
            try:
                filepath = Path(filepath)
                filepath.parent.mkdir(parents=True, exist_ok=True)
                with open(filepath, 'w') as f:
                    json.dump(report, f, indent=2, default=str)
                self.error_logger.log_error(
                    f"Diagnostic report saved to {filepath}",
                    component="DIAGNOSTICS",
                    severity=ErrorSeverity.INFO
                )
            except Exception as e:
                self.error_logger.log_exception(
                    e,
                    component="DIAGNOSTICS",
                    severity=ErrorSeverity.ERROR,
                    context={'filepath': str(filepath)}
                )

        return report


class ErrorRecoveryStrategy:
    """Recovery hints for the failures a run can hit."""

    SUGGESTIONS = {
        'InvalidParameterError': (
            "An operation received an out-of-range argument. Check image "
            "sizes against the scale factor and encoder levels."
        ),
        'ConfigurationError': (
            "The run configuration is invalid. Compare the file against "
            "config/default_settings.json and fix the named key."
        ),
        'EmptyCorpusError': (
            "No decodable images were found. Check the corpus root and the "
            "<root>/<split>/ directory layout."
        ),
        'ImageDecodeError': (
            "An image could not be decoded. Re-export it in a lossless format."
        ),
        'MisalignedSetsError': (
            "Paired directories do not match name-for-name. Add or remove "
            "the listed files."
        ),
        'CorruptCheckpointError': (
            "The checkpoint is truncated or from another format version. "
            "Resume from an earlier checkpoint."
        ),
        'CheckpointMismatchError': (
            "The checkpoint was trained with a different network spec. Use "
            "the matching config or omit the network section."
        ),
        'TrainingDivergedError': (
            "The loss became non-finite. Lower training.lr_init or check the "
            "corpus for corrupt images, then resume from the last checkpoint."
        ),
    }

    @staticmethod
    def get_recovery_suggestion(exception: Optional[BaseException]) -> str:
        """
        Get suggested recovery action for an exception.

        Args:
            exception: The exception to analyze

        Returns:
            Suggested recovery message
        """
        exc_type = type(exception).__name__
        return ErrorRecoveryStrategy.SUGGESTIONS.get(
            exc_type,
            "An error occurred. Check the run log for details."
        )


class ErrorContextManager:
    """Context manager that times an operation and logs its outcome."""

    def __init__(self, operation_name: str, component: str):
        """
        Initialize context manager.

        Args:
            operation_name: Name of the operation
            component: Component performing the operation
        """
        self.operation_name = operation_name
        self.component = component
        self.error_logger = get_error_logger()
        self.start_time: Optional[datetime] = None
        self.duration: float = 0.0

    def __enter__(self):
        """Enter context."""
        self.start_time = datetime.now()
        self.error_logger.log_error(
            f"Starting operation: {self.operation_name}",
            component=self.component,
            severity=ErrorSeverity.DEBUG
        )
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Exit context; exceptions always propagate."""
        now = datetime.now()
        self.duration = (now - self.start_time).total_seconds() if self.start_time else 0.0

        if exc_type is None:
            self.error_logger.log_error(
                f"Operation completed: {self.operation_name} ({self.duration:.2f}s)",
                component=self.component,
                severity=ErrorSeverity.DEBUG
            )
            return False

        self.error_logger.log_error(
            f"Operation failed: {self.operation_name} ({self.duration:.2f}s)",
            component=self.component,
            severity=ErrorSeverity.ERROR,
            context={
                'error_type': exc_type.__name__,
                'error_message': str(exc_val),
                'duration_seconds': self.duration
            }
        )
        recovery = ErrorRecoveryStrategy.get_recovery_suggestion(exc_val)
        self.error_logger.python_logger.info(f"Recovery suggestion: {recovery}")
        return False
