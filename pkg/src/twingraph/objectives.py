"""Training objectives: answer scoring, inference loss, and medium MMD."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numeric import Tensor, ops


class GoldNotCandidateError(ValueError):
    """A gold answer is missing from the candidate (concept entity) set."""


class DimensionMismatch(ValueError):
    """Tensor shapes disagree with the configured embedding widths."""


@dataclass
class AnswerHead:
    """Scores every candidate from its embedding plus projected context.

    The score of candidate ``a`` is ``mlp(e_a + ctx_proj @ context)``; the
    projection is trainable, the context vector itself stays frozen.
    """

    ctx_proj: Tensor
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor
    slope: float = 0.01


@dataclass
class AnswerScores:
    """Raw candidate scores aligned with candidate names."""

    names: tuple[str, ...]
    scores: Tensor

    def probabilities(self) -> np.ndarray:
        shifted = self.scores.data - self.scores.data.max()
        ex = np.exp(shifted)
        return ex / ex.sum()


def answer_scores(head: AnswerHead, candidate_table: Tensor, names: Sequence[str], context: Tensor) -> AnswerScores:
    """Score all rows of ``candidate_table`` as answers under ``context``."""
    n = candidate_table.data.shape[0]
    if len(names) != n:
        raise DimensionMismatch(f"{len(names)} names for {n} candidate rows")
    if head.ctx_proj.data.shape[1] != context.data.shape[0]:
        raise DimensionMismatch(
            f"context width {context.data.shape[0]} does not match projection {head.ctx_proj.data.shape}"
        )
    projected = ops.matvec(head.ctx_proj, context)
    shifted = ops.add(candidate_table, ops.tile_rows(projected, n))
    hidden = ops.leaky_relu(ops.linear(shifted, head.w1, head.b1), head.slope)
    scores = ops.add(ops.matvec(hidden, head.w2), head.b2)
    return AnswerScores(names=tuple(names), scores=scores)


def inference_loss(scores: AnswerScores, gold: Sequence[str]) -> Tensor:
    """Mean negative log softmax probability of the gold answers."""
    index = {name: i for i, name in enumerate(scores.names)}
    rows = []
    for answer in gold:
        if answer not in index:
            raise GoldNotCandidateError(f"gold answer {answer!r} is not a candidate")
        rows.append(index[answer])
    return ops.softmax_nll(scores.scores, rows)


def gaussian_kernel(x: Tensor, y: Tensor, sigma: float = 1.0) -> Tensor:
    """k(x, y) = exp(-||x - y||^2 / (2 sigma^2))."""
    if x.data.shape != y.data.shape or x.data.ndim != 1:
        raise DimensionMismatch(f"kernel needs matching vectors, got {x.data.shape} and {y.data.shape}")
    diff = ops.sub(x, y)
    return ops.exp(ops.scale(ops.dot(diff, diff), -1.0 / (2.0 * sigma * sigma)))


def mmd_loss(xs: Tensor, ys: Tensor, sigma: float = 1.0) -> Tensor:
    """Squared MMD (biased V-statistic) between two equal-size row sets.

    With one row per side this reduces to ``2 - 2 k(x, y)``, and it is zero
    whenever the two sets are identical row-for-row.
    """
    if xs.data.shape != ys.data.shape or xs.data.ndim != 2:
        raise DimensionMismatch(f"mmd needs matching row matrices, got {xs.data.shape} and {ys.data.shape}")
    n = xs.data.shape[0]
    if n == 0:
        raise DimensionMismatch("mmd needs at least one row per side")
    x_rows = [ops.take_row(xs, i) for i in range(n)]
    y_rows = [ops.take_row(ys, i) for i in range(n)]
    total: Tensor | None = None
    for i in range(n):
        for j in range(n):
            term = ops.add(
                gaussian_kernel(x_rows[i], x_rows[j], sigma),
                gaussian_kernel(y_rows[i], y_rows[j], sigma),
            )
            term = ops.sub(term, ops.scale(gaussian_kernel(x_rows[i], y_rows[j], sigma), 2.0))
            total = term if total is None else ops.add(total, term)
    return ops.scale(total, 1.0 / (n * n))


@dataclass
class LossBreakdown:
    """Joint loss and its parts; ``joint`` is the tensor to backpropagate."""

    inference: Tensor
    medium: Tensor | None
    lam: float
    joint: Tensor


def joint_loss(inference: Tensor, medium: Tensor | None, lam: float) -> LossBreakdown:
    """Combine the two objectives: ``inference + lam * medium``.

    With ``medium=None`` (medium loss disabled) the joint IS the inference
    tensor, not a copy, so disabling cannot perturb the optimization path.
    """
    if medium is None:
        return LossBreakdown(inference=inference, medium=None, lam=lam, joint=inference)
    joint = ops.add(inference, ops.scale(medium, lam))
    return LossBreakdown(inference=inference, medium=medium, lam=lam, joint=joint)


def predict(scores: AnswerScores) -> str:
    """Highest-scoring candidate; ties break toward the earlier name."""
    data = scores.scores.data
    best = np.flatnonzero(data == data.max())
    names = sorted(scores.names[i] for i in best)
    return names[0]


def soft_match_score(prediction: str, gold: Sequence[tuple[str, float]]) -> float:
    """Weighted match credit ``min(3 * matched, 3) / 3``, clipped to [0, 1]."""
    matched = sum(weight for answer, weight in gold if answer == prediction)
    return min(3.0 * matched, 3.0) / 3.0
