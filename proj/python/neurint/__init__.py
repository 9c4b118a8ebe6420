"""Stochastic second-order latent ODE interpolation between data items."""

from ._neurint import (
    CheckpointError,
    ConfigError,
    Model,
    NumericError,
    ShapeError,
    dataset_names,
    frechet_distance,
    generate_dataset,
    lerp,
    manifold_residuals,
    run_cli,
    slerp,
)

__all__ = [
    "CheckpointError",
    "ConfigError",
    "Model",
    "NumericError",
    "ShapeError",
    "dataset_names",
    "frechet_distance",
    "generate_dataset",
    "lerp",
    "manifold_residuals",
    "run_cli",
    "slerp",
]
