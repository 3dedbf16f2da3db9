"""Boundary detection with chi-square and learned histogram metrics."""

from ._core import (
    EdgemetricError,
    Model,
    chi_square,
    detect,
    evaluate,
    kernel_distance,
    load_image,
    logistic_transform,
    match_boundaries,
    save_image,
    synth_generate,
    train,
    vertical_step,
)

__all__ = [
    "EdgemetricError",
    "Model",
    "chi_square",
    "detect",
    "evaluate",
    "kernel_distance",
    "load_image",
    "logistic_transform",
    "match_boundaries",
    "save_image",
    "synth_generate",
    "train",
    "vertical_step",
]
