"""Read-only figure rendering for pdemhe harness CSV output."""

from .figures import (
    FigureSpec,
    MalformedCsvError,
    read_error_csv,
    read_profile_csv,
    render_error_curve,
    render_heatmap,
)

__all__ = [
    "FigureSpec",
    "MalformedCsvError",
    "read_error_csv",
    "read_profile_csv",
    "render_error_curve",
    "render_heatmap",
]

__version__ = "0.1.0"
