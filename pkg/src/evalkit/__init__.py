"""
Evaluation kit: PSNR, bicubic interpolation, Lucy-Richardson deconvolution
and multi-method comparison reports.
"""

from .metrics import EvalReport, psnr, format_table, write_reports, read_reports, INFINITE_PSNR
from .resample import bicubic_resize
from .deconvolution import lucy_richardson
from .compare import (
    SRMethod, BicubicMethod, LucyRichardsonMethod, GroundTruthMethod,
    ExternalMethod, NetworkMethod, compare_methods, check_alignment
)

__all__ = [
    'EvalReport', 'psnr', 'format_table', 'write_reports', 'read_reports', 'INFINITE_PSNR',
    'bicubic_resize', 'lucy_richardson',
    'SRMethod', 'BicubicMethod', 'LucyRichardsonMethod', 'GroundTruthMethod',
    'ExternalMethod', 'NetworkMethod', 'compare_methods', 'check_alignment',
]
