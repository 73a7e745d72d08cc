"""Synthetic task generation, the training loop, and sweep drivers."""

from .synthetic import InfeasibleSpecError, SyntheticSpec, generate
from .training import EvalReport, TrainConfig, TrainResult, evaluate, train
from .sweeps import (
    LAMBDA_GRID,
    LAYER_GRID,
    AblationResult,
    SweepResult,
    ablate_exchange,
    sweep_lambda,
    sweep_layers,
)

__all__ = [
    "SyntheticSpec",
    "InfeasibleSpecError",
    "generate",
    "TrainConfig",
    "TrainResult",
    "EvalReport",
    "train",
    "evaluate",
    "LAYER_GRID",
    "LAMBDA_GRID",
    "SweepResult",
    "AblationResult",
    "sweep_layers",
    "sweep_lambda",
    "ablate_exchange",
]
