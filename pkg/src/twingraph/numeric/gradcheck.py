"""Central-difference gradient verification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .tensor import Tensor, no_grad


@dataclass
class GradCheckRow:
    name: str
    size: int
    max_rel_err: float
    worst_index: int
    analytic: float
    numeric: float


@dataclass
class GradCheckReport:
    """Per-parameter worst relative errors from one grad_check run."""

    eps: float
    tol: float
    rows: list[GradCheckRow] = field(default_factory=list)

    @property
    def max_rel_err(self) -> float:
        return max((r.max_rel_err for r in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.tol

    def __str__(self) -> str:
        width = max([len(r.name) for r in self.rows] + [len("parameter")])
        lines = [f"{'parameter':<{width}}  {'size':>6}  {'max rel err':>12}"]
        for r in self.rows:
            lines.append(f"{r.name:<{width}}  {r.size:>6}  {r.max_rel_err:>12.3e}")
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"{verdict}: max rel err {self.max_rel_err:.3e} (tol {self.tol:.1e}, eps {self.eps:.1e})")
        return "\n".join(lines)


def grad_check(
    fn: Callable[[], Tensor],
    parameters: Mapping[str, Tensor],
    eps: float = 1e-5,
    tol: float = 1e-4,
) -> GradCheckReport:
    """Compare backward() gradients of ``fn`` against central differences.

    ``fn`` must be a deterministic closure over ``parameters`` returning a
    scalar.  Relative error uses max(|analytic|, |numeric|, 1e-6) as the
    denominator so near-zero gradients do not inflate the report.
    """
    for t in parameters.values():
        t.grad = None
    out = fn()
    if out.data.size != 1:
        raise ValueError("grad_check: fn must return a scalar")
    out.backward()
    analytic = {
        name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
        for name, t in parameters.items()
    }
    for t in parameters.values():
        t.grad = None

    report = GradCheckReport(eps=eps, tol=tol)
    with no_grad():
        for name, t in parameters.items():
            flat = t.data.reshape(-1)
            grad = analytic[name].reshape(-1)
            worst = GradCheckRow(name, flat.size, 0.0, -1, 0.0, 0.0)
            for i in range(flat.size):
                saved = flat[i]
                flat[i] = saved + eps
                f_plus = float(fn().data)
                flat[i] = saved - eps
                f_minus = float(fn().data)
                flat[i] = saved
                numeric = (f_plus - f_minus) / (2.0 * eps)
                denom = max(abs(grad[i]), abs(numeric), 1e-6)
                err = abs(grad[i] - numeric) / denom
                if err > worst.max_rel_err:
                    worst = GradCheckRow(name, flat.size, err, i, float(grad[i]), numeric)
            report.rows.append(worst)
    return report
