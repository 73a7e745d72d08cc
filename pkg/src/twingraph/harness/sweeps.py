"""Grid sweeps over depth and loss weight, plus the exchange ablation."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from ..graphs import CoupledInstance
from .training import TrainConfig, train

LAYER_GRID: tuple[int, ...] = (2, 3, 4, 5, 6)
LAMBDA_GRID: tuple[float, ...] = (0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1)


@dataclass
class SweepRow:
    setting: float
    exact_accuracy: float
    soft_accuracy: float
    epochs_run: int


@dataclass
class SweepResult:
    parameter: str
    rows: list[SweepRow]

    def table(self) -> str:
        lines = [f"{self.parameter:>10}  {'exact':>8}  {'soft':>8}  {'epochs':>6}"]
        for row in self.rows:
            setting = f"{int(row.setting)}" if self.parameter == "layers" else f"{row.setting:g}"
            lines.append(
                f"{setting:>10}  {row.exact_accuracy:>8.4f}  {row.soft_accuracy:>8.4f}  {row.epochs_run:>6}"
            )
        return "\n".join(lines)


def sweep_layers(
    instances: Sequence[CoupledInstance],
    base: TrainConfig = TrainConfig(),
    grid: Sequence[int] = LAYER_GRID,
) -> SweepResult:
    """Train once per depth in ``grid``; everything else held at ``base``."""
    rows = []
    for layers in grid:
        result = train(instances, replace(base, layers=int(layers)))
        rows.append(
            SweepRow(
                setting=float(layers),
                exact_accuracy=result.final.exact_accuracy,
                soft_accuracy=result.final.soft_accuracy,
                epochs_run=result.epochs_run,
            )
        )
    return SweepResult(parameter="layers", rows=rows)


def sweep_lambda(
    instances: Sequence[CoupledInstance],
    base: TrainConfig = TrainConfig(),
    grid: Sequence[float] = LAMBDA_GRID,
) -> SweepResult:
    """Train once per medium-loss weight in ``grid``."""
    rows = []
    for lam in grid:
        result = train(instances, replace(base, lam=float(lam)))
        rows.append(
            SweepRow(
                setting=float(lam),
                exact_accuracy=result.final.exact_accuracy,
                soft_accuracy=result.final.soft_accuracy,
                epochs_run=result.epochs_run,
            )
        )
    return SweepResult(parameter="lambda", rows=rows)


@dataclass
class AblationRow:
    seed: int
    with_exchange: float
    without_exchange: float


@dataclass
class AblationResult:
    rows: list[AblationRow]

    @property
    def mean_with(self) -> float:
        return sum(r.with_exchange for r in self.rows) / len(self.rows)

    @property
    def mean_without(self) -> float:
        return sum(r.without_exchange for r in self.rows) / len(self.rows)

    def table(self) -> str:
        lines = [f"{'seed':>6}  {'exchange on':>12}  {'exchange off':>12}"]
        for row in self.rows:
            lines.append(f"{row.seed:>6}  {row.with_exchange:>12.4f}  {row.without_exchange:>12.4f}")
        lines.append(f"{'mean':>6}  {self.mean_with:>12.4f}  {self.mean_without:>12.4f}")
        return "\n".join(lines)


def ablate_exchange(
    instances: Sequence[CoupledInstance],
    base: TrainConfig = TrainConfig(),
    seeds: Sequence[int] = (0, 1, 2, 3, 4),
) -> AblationResult:
    """Paired runs with the medium exchange on and off, one per seed."""
    rows = []
    for seed in seeds:
        on = train(instances, replace(base, seed=int(seed), exchange=True))
        off = train(instances, replace(base, seed=int(seed), exchange=False))
        rows.append(
            AblationRow(
                seed=int(seed),
                with_exchange=on.final.exact_accuracy,
                without_exchange=off.final.exact_accuracy,
            )
        )
    return AblationResult(rows=rows)
