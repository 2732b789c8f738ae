"""Speaker diarization toolkit: scoring, hypothesis combination, clustering and simulation."""

from diartool.core import Timeline, Turn, quantize_time
from diartool.errors import (
    BudgetExceededError,
    DiartoolError,
    FormatError,
    InputError,
    InvariantError,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError",
    "DiartoolError",
    "FormatError",
    "InputError",
    "InvariantError",
    "Timeline",
    "Turn",
    "quantize_time",
]
