"""Figure generation for solver CLI outputs (CSV in, images out)."""

from .figures import (
    HISTORY_COLUMNS,
    KINDS,
    SWEEP_COLUMNS,
    FigureRequest,
    FormatError,
    build_figure,
    read_columns,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "FigureRequest",
    "FormatError",
    "HISTORY_COLUMNS",
    "KINDS",
    "SWEEP_COLUMNS",
    "build_figure",
    "read_columns",
    "render",
]
