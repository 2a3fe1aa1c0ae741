"""Coverage regret: suboptimality of the current (configuration, covering) pair."""

from __future__ import annotations

import numpy as np

from .coverage import ServiceModel, equitable_partition, multitask_cost, multitask_centers
from .demand import DemandField
from .env import Covering, Environment


def instantaneous_regret(
    env: Environment,
    model: ServiceModel,
    true_field: DemandField,
    config: np.ndarray,
    cov: Covering,
) -> float:
    """Configuration gap plus partition gap, evaluated against the true demand.

    2 H(eta, P) - H(c(P), P) - H(eta, V(eta)): zero exactly when the pair is a
    centroidal equitable fixed point of the true field (up to tie-breaking).
    """
    current = multitask_cost(env, model, true_field, config, cov).total
    centers = multitask_centers(env, model, true_field, cov, config=config)
    at_centers = multitask_cost(env, model, true_field, centers, cov).total
    best_cov = equitable_partition(env, model, true_field, config)
    at_best_cov = multitask_cost(env, model, true_field, config, best_cov).total
    return 2.0 * current - at_centers - at_best_cov


class RegretTrace:
    """Per-step instantaneous regret, its running sum, and phase labels."""

    def __init__(self):
        self.instantaneous: list[float] = []
        self.cumulative: list[float] = []
        self.phases: list[str] = []

    def __len__(self) -> int:
        return len(self.instantaneous)

    def append(self, value: float, phase: str) -> None:
        value = float(value)
        if not np.isfinite(value):
            raise ValueError("regret values must be finite")
        prev = self.cumulative[-1] if self.cumulative else 0.0
        self.instantaneous.append(value)
        self.cumulative.append(prev + value)
        self.phases.append(phase)

    @classmethod
    def from_values(cls, values, phases=None) -> "RegretTrace":
        trace = cls()
        for k, value in enumerate(values):
            trace.append(value, phases[k] if phases is not None else "coverage")
        return trace


def accumulate(trace: RegretTrace, value: float, phase: str) -> RegretTrace:
    """Append one step to the trace (mutates and returns it)."""
    trace.append(value, phase)
    return trace


def loglog_slope(trace: RegretTrace, window: float = 0.5) -> float:
    """Least-squares slope of log cumulative regret vs log step over the trailing window."""
    if not 0 < window <= 1:
        raise ValueError("window must be a fraction in (0, 1]")
    total = len(trace)
    if total < 2:
        raise ValueError("trace too short for a slope estimate")
    start = total - max(2, int(np.ceil(window * total)))
    cum = np.asarray(trace.cumulative[start:])
    if (cum <= 0).any():
        raise ValueError("cumulative regret must be positive over the slope window")
    t = np.arange(start + 1, total + 1, dtype=float)
    return float(np.polyfit(np.log(t), np.log(cum), 1)[0])
