"""Optimizer steps over a ParameterStore.

Both steps skip frozen entries and parameters whose grad is None, and both
zero the grads they consumed so accumulation starts clean next step.
"""

from __future__ import annotations

import numpy as np

from .params import ParameterStore


def sgd_step(store: ParameterStore, lr: float = 1e-3) -> None:
    for name, t in store.trainable():
        if t.grad is None:
            continue
        t.data -= lr * t.grad
        t.grad = None


def adam_step(
    store: ParameterStore,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One Adam update with bias correction; moments live in the store."""
    store.adam_t += 1
    t = store.adam_t
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for name, p in store.trainable():
        if p.grad is None:
            continue
        g = p.grad
        m = store.adam_m.get(name)
        v = store.adam_v.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
            store.adam_m[name] = m
            store.adam_v[name] = v
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
        p.grad = None
