"""Differentiable primitives over :class:`~twingraph.numeric.tensor.Tensor`.

Array-heavy ops route through :mod:`twingraph.kernels` so the compiled
backend accelerates both the forward and the backward pass.  Index arrays
are plain int64 ndarrays, never tensors.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import kernels as K
from .tensor import Tensor, as_tensor, from_op


def _idx(indices) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(indices, dtype=np.int64))


def _check_binary_shapes(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape != b.data.shape and a.data.ndim != 0 and b.data.ndim != 0:
        raise ValueError(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")


def _reduce_to(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    return grad if grad.shape == shape else np.asarray(grad.sum())


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_binary_shapes(a, b, "add")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate(_reduce_to(g, a.data.shape))
        if b.requires_grad:
            b.accumulate(_reduce_to(g, b.data.shape))

    return from_op(a.data + b.data, (a, b), backward, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_binary_shapes(a, b, "sub")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate(_reduce_to(g, a.data.shape))
        if b.requires_grad:
            b.accumulate(_reduce_to(-g, b.data.shape))

    return from_op(a.data - b.data, (a, b), backward, "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_binary_shapes(a, b, "mul")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate(_reduce_to(g * b.data, a.data.shape))
        if b.requires_grad:
            b.accumulate(_reduce_to(g * a.data, b.data.shape))

    return from_op(a.data * b.data, (a, b), backward, "mul")


def neg(a: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> None:
        a.accumulate(-g)

    return from_op(-a.data, (a,), backward, "neg")


def scale(a: Tensor, s: float) -> Tensor:
    s = float(s)

    def backward(g: np.ndarray) -> None:
        a.accumulate(s * g)

    return from_op(s * a.data, (a,), backward, "scale")


def sum_all(a: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> None:
        a.accumulate(np.full_like(a.data, float(g)))

    return from_op(np.asarray(a.data.sum()), (a,), backward, "sum")


def mean(a: Tensor) -> Tensor:
    n = a.data.size

    def backward(g: np.ndarray) -> None:
        a.accumulate(np.full_like(a.data, float(g) / n))

    return from_op(np.asarray(a.data.sum() / n), (a,), backward, "mean")


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)

    def backward(g: np.ndarray) -> None:
        a.accumulate(g * out)

    return from_op(out, (a,), backward, "exp")


def dot(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 1 or a.data.shape != b.data.shape:
        raise ValueError(f"dot: need matching vectors, got {a.data.shape} and {b.data.shape}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate(float(g) * b.data)
        if b.requires_grad:
            b.accumulate(float(g) * a.data)

    return from_op(np.asarray(a.data @ b.data), (a, b), backward, "dot")


def matvec(mat: Tensor, vec: Tensor) -> Tensor:
    if mat.data.ndim != 2 or mat.data.shape[1] != vec.data.shape[0]:
        raise ValueError(f"matvec: {mat.data.shape} @ {vec.data.shape}")

    def backward(g: np.ndarray) -> None:
        if mat.requires_grad:
            mat.accumulate(np.outer(g, vec.data))
        if vec.requires_grad:
            vec.accumulate(mat.data.T @ g)

    return from_op(mat.data @ vec.data, (mat, vec), backward, "matvec")


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Affine map ``x @ w + b``; ``x`` may be a vector or a row matrix."""
    if w.data.ndim != 2 or x.data.shape[-1] != w.data.shape[0]:
        raise ValueError(f"linear: {x.data.shape} @ {w.data.shape}")
    out = x.data @ w.data
    if b is not None:
        out = out + b.data
    parents = (x, w) if b is None else (x, w, b)

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate(g @ w.data.T)
        if w.requires_grad:
            if x.data.ndim == 1:
                w.accumulate(np.outer(x.data, g))
            else:
                w.accumulate(x.data.T @ g)
        if b is not None and b.requires_grad:
            b.accumulate(g if g.ndim == 1 else g.sum(axis=0))

    return from_op(out, parents, backward, "linear")


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    out = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]

    def backward(g: np.ndarray) -> None:
        offset = 0
        for p, size in zip(parts, sizes):
            if p.requires_grad:
                index: list = [slice(None)] * g.ndim
                index[axis] = slice(offset, offset + size)
                p.accumulate(np.ascontiguousarray(g[tuple(index)]))
            offset += size

    return from_op(out, parts, backward, "concat")


def stack(parts: Sequence[Tensor]) -> Tensor:
    parts = [as_tensor(p) for p in parts]

    def backward(g: np.ndarray) -> None:
        for i, p in enumerate(parts):
            if p.requires_grad:
                p.accumulate(g[i])

    return from_op(np.stack([p.data for p in parts]), parts, backward, "stack")


def weighted_sum(weights: Tensor, rows: Tensor) -> Tensor:
    """Combine row vectors: ``sum_i weights[i] * rows[i]``."""
    if rows.data.ndim != 2 or weights.data.shape != (rows.data.shape[0],):
        raise ValueError(f"weighted_sum: {weights.data.shape} with {rows.data.shape}")

    def backward(g: np.ndarray) -> None:
        if weights.requires_grad:
            weights.accumulate(rows.data @ g)
        if rows.requires_grad:
            rows.accumulate(np.outer(weights.data, g))

    return from_op(weights.data @ rows.data, (weights, rows), backward, "weighted_sum")


def leaky_relu(a: Tensor, slope: float = 0.01) -> Tensor:
    x = a.data

    def backward(g: np.ndarray) -> None:
        a.accumulate(K.leaky_backward(x, np.ascontiguousarray(g), slope))

    return from_op(K.leaky_forward(x, slope), (a,), backward, "leaky_relu")


def softmax(a: Tensor) -> Tensor:
    if a.data.ndim != 1:
        raise ValueError("softmax: need a vector")
    shifted = a.data - a.data.max()
    ex = np.exp(shifted)
    out = ex / ex.sum()

    def backward(g: np.ndarray) -> None:
        a.accumulate(out * (g - float(g @ out)))

    return from_op(out, (a,), backward, "softmax")


def normalize_sum(a: Tensor) -> Tensor:
    """Divide a vector by its plain sum (ratio normalization, no exp)."""
    if a.data.ndim != 1:
        raise ValueError("normalize_sum: need a vector")
    total = a.data.sum()
    out = a.data / total

    def backward(g: np.ndarray) -> None:
        a.accumulate(g / total - float(g @ a.data) / (total * total))

    return from_op(out, (a,), backward, "normalize_sum")


def softmax_nll(scores: Tensor, gold: Sequence[int]) -> Tensor:
    """Mean negative log softmax probability of the gold indices."""
    if scores.data.ndim != 1:
        raise ValueError("softmax_nll: need a score vector")
    gold = list(gold)
    if not gold:
        raise ValueError("softmax_nll: no gold indices")
    shifted = scores.data - scores.data.max()
    lse = np.log(np.exp(shifted).sum())
    loss = np.mean([lse - shifted[i] for i in gold])
    probs = np.exp(shifted - lse)
    target = np.zeros_like(probs)
    for i in gold:
        target[i] += 1.0 / len(gold)

    def backward(g: np.ndarray) -> None:
        scores.accumulate(float(g) * (probs - target))

    return from_op(np.asarray(loss), (scores,), backward, "softmax_nll")


def take_row(mat: Tensor, index: int) -> Tensor:
    """Extract one row of a matrix as a vector."""
    index = int(index)

    def backward(g: np.ndarray) -> None:
        d = np.zeros_like(mat.data)
        d[index] = g
        mat.accumulate(d)

    return from_op(mat.data[index].copy(), (mat,), backward, "take_row")


def gather_rows(table: Tensor, indices) -> Tensor:
    idx = _idx(indices)

    def backward(g: np.ndarray) -> None:
        d = np.zeros_like(table.data)
        K.scatter_add_rows(d, idx, np.ascontiguousarray(g))
        table.accumulate(d)

    return from_op(K.gather_rows(table.data, idx), (table,), backward, "gather_rows")


def scatter_rows_add(base: Tensor, indices, rows: Tensor) -> Tensor:
    """Row-sparse addition: ``out = base`` with ``rows`` added at ``indices``."""
    idx = _idx(indices)
    out = base.data.copy()
    K.scatter_add_rows(out, idx, np.ascontiguousarray(rows.data))

    def backward(g: np.ndarray) -> None:
        if base.requires_grad:
            base.accumulate(g)
        if rows.requires_grad:
            rows.accumulate(K.gather_rows(np.ascontiguousarray(g), idx))

    return from_op(out, (base, rows), backward, "scatter_rows_add")


def replace_rows(base: Tensor, indices, rows: Tensor) -> Tensor:
    """Overwrite rows of ``base`` at unique ``indices`` with ``rows``."""
    idx = _idx(indices)
    if np.unique(idx).size != idx.size:
        raise ValueError("replace_rows: indices must be unique")
    out = base.data.copy()
    out[idx] = rows.data

    def backward(g: np.ndarray) -> None:
        if base.requires_grad:
            masked = g.copy()
            masked[idx] = 0.0
            base.accumulate(masked)
        if rows.requires_grad:
            rows.accumulate(K.gather_rows(np.ascontiguousarray(g), idx))

    return from_op(out, (base, rows), backward, "replace_rows")


def tile_rows(vec: Tensor, n: int) -> Tensor:
    if vec.data.ndim != 1:
        raise ValueError("tile_rows: need a vector")

    def backward(g: np.ndarray) -> None:
        vec.accumulate(g.sum(axis=0))

    return from_op(np.tile(vec.data, (n, 1)), (vec,), backward, "tile_rows")


def triple_concat(ent: Tensor, rel: Tensor, heads, rels, tails) -> Tensor:
    """Fused per-edge gather of [head row | relation row | tail row]."""
    h, r, t = _idx(heads), _idx(rels), _idx(tails)

    def backward(g: np.ndarray) -> None:
        g = np.ascontiguousarray(g)
        d_ent = np.zeros_like(ent.data)
        d_rel = np.zeros_like(rel.data)
        K.triple_concat_backward(g, h, r, t, d_ent, d_rel)
        if ent.requires_grad:
            ent.accumulate(d_ent)
        if rel.requires_grad:
            rel.accumulate(d_rel)

    return from_op(K.triple_concat(ent.data, rel.data, h, r, t), (ent, rel), backward, "triple_concat")


def scale_rows(rows: Tensor, coeff: Tensor) -> Tensor:
    if coeff.data.shape != (rows.data.shape[0],):
        raise ValueError(f"scale_rows: {coeff.data.shape} with {rows.data.shape}")

    def backward(g: np.ndarray) -> None:
        g = np.ascontiguousarray(g)
        if rows.requires_grad:
            rows.accumulate(K.scale_rows(g, coeff.data))
        if coeff.requires_grad:
            coeff.accumulate(K.rows_dot(g, np.ascontiguousarray(rows.data)))

    return from_op(K.scale_rows(np.ascontiguousarray(rows.data), coeff.data), (rows, coeff), backward, "scale_rows")


def segment_softmax(scores: Tensor, segments, n_segments: int) -> Tensor:
    """Softmax within each segment; segments index per-entry group ids."""
    seg = _idx(segments)
    out = K.segment_softmax(np.ascontiguousarray(scores.data), seg, n_segments)

    def backward(g: np.ndarray) -> None:
        scores.accumulate(K.segment_softmax_backward(out, np.ascontiguousarray(g), seg, n_segments))

    return from_op(out, (scores,), backward, "segment_softmax")


def segment_normalize(scores: Tensor, segments, n_segments: int) -> Tensor:
    """Per-segment ratio normalization (divide by the segment sum, no exp)."""
    seg = _idx(segments)
    totals = np.zeros(n_segments, dtype=np.float64)
    np.add.at(totals, seg, scores.data)
    out = scores.data / totals[seg]

    def backward(g: np.ndarray) -> None:
        inner = np.zeros(n_segments, dtype=np.float64)
        np.add.at(inner, seg, g * scores.data)
        scores.accumulate(g / totals[seg] - inner[seg] / (totals[seg] ** 2))

    return from_op(out, (scores,), backward, "segment_normalize")


def segment_sum(rows: Tensor, segments, n_segments: int) -> Tensor:
    seg = _idx(segments)

    def backward(g: np.ndarray) -> None:
        rows.accumulate(K.segment_expand(np.ascontiguousarray(g), seg))

    return from_op(K.segment_sum(np.ascontiguousarray(rows.data), seg, n_segments), (rows,), backward, "segment_sum")


def _as_operand(value):
    if isinstance(value, Tensor):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Tensor(float(value))
    return NotImplemented


def _dunder(op):
    def method(self, other):
        other = _as_operand(other)
        if other is NotImplemented:
            return NotImplemented
        return op(self, other)

    return method


Tensor.__add__ = _dunder(add)
Tensor.__radd__ = _dunder(lambda a, b: add(b, a))
Tensor.__sub__ = _dunder(sub)
Tensor.__rsub__ = _dunder(lambda a, b: sub(b, a))
Tensor.__mul__ = _dunder(mul)
Tensor.__rmul__ = _dunder(lambda a, b: mul(b, a))
Tensor.__neg__ = neg
Tensor.__truediv__ = lambda self, s: scale(self, 1.0 / float(s))
