from diartool.metrics.der import DerReport, compute_der
from diartool.metrics.wer import (
    EditCounts,
    WderReport,
    WerReport,
    align,
    compute_cpwer,
    compute_orcwer,
    compute_wder,
    levenshtein,
)

__all__ = [
    "DerReport",
    "EditCounts",
    "WderReport",
    "WerReport",
    "align",
    "compute_cpwer",
    "compute_der",
    "compute_orcwer",
    "compute_wder",
    "levenshtein",
]
