"""Gradient verification by central finite differences.

The analytic backward pass of every architecture is checked entry-by-entry
against ``(f(theta + eps) - f(theta - eps)) / (2 eps)`` on a deterministic
loss (dropout in inference mode). Parameters with more than a sample budget
of entries are spot-checked at uniformly drawn indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .tensor import Parameter


@dataclass
class GradReport:
    """Per-parameter maximum relative error between analytic and numeric grads."""

    max_rel_error: dict[str, float] = field(default_factory=dict)
    epsilon: float = 1e-5

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values()) if self.max_rel_error else 0.0

    def passes(self, tolerance: float) -> bool:
        return self.worst < tolerance

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "max_rel_error": dict(sorted(self.max_rel_error.items())),
            "worst": self.worst,
        }


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def grad_check(
    loss_fn: Callable[[], float],
    grad_fn: Callable[[], float],
    params: Sequence[Parameter],
    epsilon: float = 1e-5,
    max_entries_per_param: int = 200,
    rng: np.random.Generator | None = None,
    retry_epsilon: float | None = None,
    retry_trigger: float = 1e-5,
) -> GradReport:
    """Compare analytic gradients against central differences.

    ``grad_fn`` evaluates the loss and leaves analytic gradients in each
    parameter's ``grad``; ``loss_fn`` evaluates the same deterministic loss
    without touching gradients. Both must be reproducible call-to-call.

    Two step sizes fail in disjoint ways: a small epsilon drowns near-zero
    gradients in float64 rounding noise, a large one risks stepping across
    relu kinks or pooling argmax switches. With ``retry_epsilon`` set,
    entries whose error exceeds ``retry_trigger`` are re-measured at the
    second step size and the smaller error is kept; a genuinely wrong
    backward pass fails at every step size.
    """
    rng = rng or np.random.default_rng(0)
    for p in params:
        p.zero_grad()
    grad_fn()
    analytic = {p.name: p.grad.copy() for p in params}

    def numeric_at(flat: np.ndarray, i: int, eps: float, name: str) -> float:
        orig = flat[i]
        flat[i] = orig + eps
        f_plus = loss_fn()
        flat[i] = orig - eps
        f_minus = loss_fn()
        flat[i] = orig
        numeric = (f_plus - f_minus) / (2.0 * eps)
        if not np.isfinite(numeric):
            raise ValueError(f"non-finite numeric gradient for {name}[{i}]")
        return numeric

    report = GradReport(epsilon=epsilon)
    for p in params:
        flat = p.value.reshape(-1)
        n = flat.size
        if n > max_entries_per_param:
            idx = rng.choice(n, size=max_entries_per_param, replace=False)
        else:
            idx = np.arange(n)
        worst = 0.0
        a_flat = analytic[p.name].reshape(-1)
        for i in idx:
            a = float(a_flat[i])
            err = relative_error(a, numeric_at(flat, i, epsilon, p.name))
            if retry_epsilon is not None and err > retry_trigger:
                err = min(err, relative_error(a, numeric_at(flat, i, retry_epsilon, p.name)))
            worst = max(worst, err)
        report.max_rel_error[p.name] = worst
    return report
