"""Minimal reverse-mode autodiff over float64 numpy arrays.

Kept deliberately small: the model needs a dozen primitives and exact
control over evaluation order (several tests pin bitwise reproducibility),
which rules out pulling in a full framework.
"""

from .tensor import NonFiniteError, Tensor, is_grad_enabled, no_grad, set_debug
from .params import ParameterStore, load_embedding_tsv
from .optim import adam_step, sgd_step
from .gradcheck import GradCheckReport, grad_check
from . import ops

__all__ = [
    "Tensor",
    "NonFiniteError",
    "no_grad",
    "is_grad_enabled",
    "set_debug",
    "ParameterStore",
    "load_embedding_tsv",
    "adam_step",
    "sgd_step",
    "grad_check",
    "GradCheckReport",
    "ops",
]
