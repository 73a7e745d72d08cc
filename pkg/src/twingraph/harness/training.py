"""Full-batch training loop with early stopping and checkpointing."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..fusion import FusionConfig
from ..graphs import CoupledInstance
from ..model import CompiledInstance, Model
from ..numeric import NonFiniteError, adam_step, no_grad, ops, sgd_step
from ..objectives import predict, soft_match_score

OPTIMIZERS = ("adam", "sgd")


@dataclass(frozen=True)
class TrainConfig:
    """One training run: architecture, objective, and loop settings."""

    layers: int = 3
    dim: int = 64
    context_dim: int = 32
    slope: float = 0.01
    exchange: bool = True
    attention: str = "exp"
    lam: float = 1e-3
    sigma: float = 1.0
    medium_loss: bool = True
    optimizer: str = "adam"
    lr: float = 1e-3
    epochs: int = 500
    seed: int = 0
    target_accuracy: float | None = None
    eval_every: int = 10

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.eval_every < 1:
            raise ValueError("eval_every must be at least 1")
        if self.lam < 0.0:
            raise ValueError("lam must be non-negative")

    def fusion_config(self) -> FusionConfig:
        return FusionConfig(
            layers=self.layers,
            dim=self.dim,
            context_dim=self.context_dim,
            slope=self.slope,
            exchange=self.exchange,
            attention=self.attention,
        )


@dataclass
class EpochRecord:
    epoch: int
    joint: float
    inference: float
    medium: float | None
    accuracy: float | None = None


@dataclass
class EvalReport:
    """Exact and weighted-match accuracy over a set of instances."""

    n: int
    exact_accuracy: float
    soft_accuracy: float
    predictions: list[tuple[str, str, bool]]

    def summary(self) -> str:
        return (
            f"instances {self.n}  exact {self.exact_accuracy:.4f}  soft {self.soft_accuracy:.4f}"
        )


@dataclass
class TrainResult:
    model: Model
    history: list[EpochRecord] = field(default_factory=list)
    epochs_run: int = 0
    stopped_early: bool = False
    final: EvalReport | None = None


def evaluate(model: Model, compiled: Sequence[CompiledInstance]) -> EvalReport:
    """Score predictions; exact counts a hit on any gold answer."""
    predictions: list[tuple[str, str, bool]] = []
    exact = 0
    soft = 0.0
    with no_grad():
        for inst in compiled:
            _, _, scores = model.run(inst)
            guess = predict(scores)
            hit = any(guess == name for name, _ in inst.gold)
            exact += int(hit)
            soft += soft_match_score(guess, inst.gold)
            predictions.append((inst.id, guess, hit))
    n = len(compiled)
    return EvalReport(
        n=n,
        exact_accuracy=exact / n if n else 0.0,
        soft_accuracy=soft / n if n else 0.0,
        predictions=predictions,
    )


def train(
    instances: Sequence[CoupledInstance],
    config: TrainConfig = TrainConfig(),
    checkpoint_dir: str | Path | None = None,
    progress: Callable[[EpochRecord], None] | None = None,
) -> TrainResult:
    """Train a fresh model on ``instances`` with full-batch gradients.

    Gradients accumulate instance by instance (each contributes joint/N),
    so one optimizer step per epoch sees the exact batch gradient.  A
    non-finite joint loss aborts immediately rather than training on.
    """
    if not instances:
        raise ValueError("no instances to train on")
    model = Model.create(instances, config.fusion_config(), seed=config.seed, sigma=config.sigma)
    compiled = [model.compile(inst) for inst in instances]
    result = TrainResult(model=model)
    step = adam_step if config.optimizer == "adam" else sgd_step
    n = len(compiled)
    best_accuracy = -1.0
    checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None

    for epoch in range(1, config.epochs + 1):
        joint_total = 0.0
        inf_total = 0.0
        med_total = 0.0
        med_seen = False
        for inst in compiled:
            breakdown, _ = model.losses(inst, lam=config.lam, medium_enabled=config.medium_loss)
            value = float(breakdown.joint.data)
            if not np.isfinite(value):
                raise NonFiniteError(f"NON_FINITE_LOSS at epoch {epoch}, instance {inst.id}")
            joint_total += value
            inf_total += float(breakdown.inference.data)
            if breakdown.medium is not None:
                med_total += float(breakdown.medium.data)
                med_seen = True
            ops.scale(breakdown.joint, 1.0 / n).backward()
        step(model.store, lr=config.lr)

        record = EpochRecord(
            epoch=epoch,
            joint=joint_total / n,
            inference=inf_total / n,
            medium=med_total / n if med_seen else None,
        )
        if config.target_accuracy is not None and epoch % config.eval_every == 0:
            report = evaluate(model, compiled)
            record.accuracy = report.exact_accuracy
            if checkpoint_dir is not None and report.exact_accuracy > best_accuracy:
                best_accuracy = report.exact_accuracy
                model.save(checkpoint_dir / "best.npz")
            if report.exact_accuracy >= config.target_accuracy:
                result.history.append(record)
                if progress is not None:
                    progress(record)
                result.epochs_run = epoch
                result.stopped_early = True
                break
        result.history.append(record)
        if progress is not None:
            progress(record)
        result.epochs_run = epoch

    result.final = evaluate(model, compiled)
    if checkpoint_dir is not None:
        model.save(checkpoint_dir / "final.npz")
    return result
