"""WiFi CSI to grayscale video frames: simulation, preprocessing, training and evaluation."""

from ._core import (
    ConfigError,
    DataError,
    dropin_matrix,
    dropin_select_indices,
    evaluate,
    generate,
    lr_at,
    parameter_count,
    preprocess,
    read_pgm,
    sanitize_phase,
    simulate,
    split_point,
    sync,
    train,
    unwrap_phase,
)

__all__ = [
    "ConfigError",
    "DataError",
    "dropin_matrix",
    "dropin_select_indices",
    "evaluate",
    "generate",
    "lr_at",
    "parameter_count",
    "preprocess",
    "read_pgm",
    "sanitize_phase",
    "simulate",
    "split_point",
    "sync",
    "train",
    "unwrap_phase",
]
