"""Pure numpy implementations of the hot array kernels.

Every function here has a compiled twin in ``_speedups``; the two must agree
bitwise on float64 inputs (same operation order).  All row indices are int64
and all float arrays are C-contiguous float64.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def gather_rows(table: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return table[idx]


def scatter_add_rows(acc: np.ndarray, idx: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Accumulate ``rows`` into ``acc`` at ``idx`` (duplicates allowed)."""
    np.add.at(acc, idx, rows)
    return acc


def triple_concat(
    ent: np.ndarray,
    rel: np.ndarray,
    heads: np.ndarray,
    rels: np.ndarray,
    tails: np.ndarray,
) -> np.ndarray:
    """Per-edge concatenation [ent[h] | rel[r] | ent[t]]."""
    d = ent.shape[1]
    out = np.empty((heads.shape[0], d + rel.shape[1] + d), dtype=np.float64)
    out[:, :d] = ent[heads]
    out[:, d : d + rel.shape[1]] = rel[rels]
    out[:, d + rel.shape[1] :] = ent[tails]
    return out


def triple_concat_backward(
    grad: np.ndarray,
    heads: np.ndarray,
    rels: np.ndarray,
    tails: np.ndarray,
    d_ent: np.ndarray,
    d_rel: np.ndarray,
) -> None:
    """Scatter the gradient of :func:`triple_concat` into table gradients."""
    d = d_ent.shape[1]
    dr = d_rel.shape[1]
    np.add.at(d_ent, heads, grad[:, :d])
    np.add.at(d_rel, rels, grad[:, d : d + dr])
    np.add.at(d_ent, tails, grad[:, d + dr :])


def leaky_forward(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0.0, x, slope * x)


def leaky_backward(x: np.ndarray, grad: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0.0, grad, slope * grad)


def segment_softmax(scores: np.ndarray, seg: np.ndarray, n_seg: int) -> np.ndarray:
    """Softmax over each segment of ``scores`` (max-shifted for stability)."""
    high = np.full(n_seg, -np.inf, dtype=np.float64)
    np.maximum.at(high, seg, scores)
    ex = np.exp(scores - high[seg])
    denom = np.zeros(n_seg, dtype=np.float64)
    np.add.at(denom, seg, ex)
    return ex / denom[seg]


def segment_softmax_backward(
    probs: np.ndarray, grad: np.ndarray, seg: np.ndarray, n_seg: int
) -> np.ndarray:
    inner = np.zeros(n_seg, dtype=np.float64)
    np.add.at(inner, seg, probs * grad)
    return probs * (grad - inner[seg])


def segment_sum(rows: np.ndarray, seg: np.ndarray, n_seg: int) -> np.ndarray:
    out = np.zeros((n_seg, rows.shape[1]), dtype=np.float64)
    np.add.at(out, seg, rows)
    return out


def segment_expand(values: np.ndarray, seg: np.ndarray) -> np.ndarray:
    return values[seg]


def scale_rows(rows: np.ndarray, coeff: np.ndarray) -> np.ndarray:
    return rows * coeff[:, None]


def rows_dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Column-wise accumulation, not einsum: keeps the addition order of the
    # compiled twin so the two backends stay bitwise interchangeable.
    out = np.zeros(a.shape[0], dtype=np.float64)
    for j in range(a.shape[1]):
        out += a[:, j] * b[:, j]
    return out
