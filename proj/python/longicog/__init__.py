"""Longitudinal cognitive-state detection and change prediction."""

from ._longicog import (
    Cohort,
    Dataset,
    Error,
    Model,
    ParseError,
    ValidationError,
    change_dataset,
    compute_metrics,
    cross_validate,
    render_comparison,
    render_report,
    state_dataset,
    synth,
    train,
)

__all__ = [
    "Cohort",
    "Dataset",
    "Error",
    "Model",
    "ParseError",
    "ValidationError",
    "change_dataset",
    "compute_metrics",
    "cross_validate",
    "render_comparison",
    "render_report",
    "state_dataset",
    "synth",
    "train",
]
