"""Multitask coverage cost, centers, equitable partitions, and the MCEP predicate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demand import DemandField
from .env import Covering, Environment


class ServiceModel:
    """Heterogeneous service-cost model: strictly increasing f_i^j(distance).

    Subclasses implement ``cost(robot, task, d)`` accepting scalar or ndarray
    distances and returning values of the same shape.
    """

    def __init__(self, robot_count: int, task_count: int):
        self.robot_count = robot_count
        self.task_count = task_count

    def cost(self, robot: int, task: int, d):
        raise NotImplementedError


class LinearServiceModel(ServiceModel):
    """f_i^j(d) = a[i, j] * d with strictly positive coefficients."""

    def __init__(self, coefficients: np.ndarray):
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.ndim != 2:
            raise ValueError("coefficients must have shape (robots, tasks)")
        if (coefficients <= 0).any():
            raise ValueError("linear cost coefficients must be positive")
        super().__init__(*coefficients.shape)
        self.coefficients = coefficients

    def cost(self, robot: int, task: int, d):
        return self.coefficients[robot, task] * d


class CallableServiceModel(ServiceModel):
    """Wraps an arbitrary vectorized fn(robot, task, d) cost function."""

    def __init__(self, robot_count: int, task_count: int, fn):
        super().__init__(robot_count, task_count)
        self._fn = fn

    def cost(self, robot: int, task: int, d):
        return self._fn(robot, task, d)


@dataclass
class CostBreakdown:
    total: float
    per_robot: np.ndarray
    per_task: np.ndarray


def service_costs(env: Environment, model: ServiceModel, config: np.ndarray) -> np.ndarray:
    """f_i^j(d(eta_i, v)) for all robots, tasks, vertices; shape (N, M, V)."""
    n, m = model.robot_count, model.task_count
    out = np.empty((n, m, env.vertex_count))
    for i in range(n):
        row = env.dist[config[i]]
        for j in range(m):
            out[i, j] = model.cost(i, j, row)
    return out


def multitask_cost(
    env: Environment,
    model: ServiceModel,
    field: DemandField,
    config: np.ndarray,
    cov: Covering,
) -> CostBreakdown:
    """Demand-weighted service cost summed over tasks, robots, and owned vertices."""
    costs = service_costs(env, model, config)
    # owned is (M, N, V); weight each owned term by the task demand column.
    weighted = costs * field.values.T[None, :, :]
    terms = np.where(cov.owned.transpose(1, 0, 2), weighted, 0.0)
    per_robot = terms.sum(axis=(1, 2))
    per_task = terms.sum(axis=(0, 2))
    return CostBreakdown(float(terms.sum()), per_robot, per_task)


def h_inf(env: Environment, model: ServiceModel, field: DemandField, config: np.ndarray) -> float:
    """Coverage cost when every (vertex, task) is served by its best robot."""
    costs = service_costs(env, model, config)
    best = costs.min(axis=0)
    return float((best * field.values.T).sum())


def center_objective(
    env: Environment,
    model: ServiceModel,
    field: DemandField,
    cov: Covering,
    robot: int,
) -> np.ndarray:
    """Robot's summed service cost over its owned cells, for every candidate center."""
    obj = np.zeros(env.vertex_count)
    for j in range(cov.task_count):
        cells = cov.vertices(j, robot)
        if cells.size:
            obj += model.cost(robot, j, env.dist[:, cells]) @ field.values[cells, j]
    return obj


def idle_robots(cov: Covering) -> list[int]:
    """Robots that own no vertex in any task (center undefined by the argmin)."""
    return np.flatnonzero(~cov.owned.any(axis=(0, 2))).tolist()


def multitask_centers(
    env: Environment,
    model: ServiceModel,
    field: DemandField,
    cov: Covering,
    config: np.ndarray | None = None,
) -> np.ndarray:
    """Per-robot cost-minimizing center vertices, ties broken by lowest index.

    A robot owning no vertices keeps its current position (``config`` required
    in that case; see idle_robots for the diagnostic).
    """
    centers = np.empty(cov.robot_count, dtype=int)
    idle = set(idle_robots(cov))
    for i in range(cov.robot_count):
        if i in idle:
            if config is None:
                raise ValueError(f"robot {i} owns no vertices and no configuration was given")
            centers[i] = config[i]
        else:
            centers[i] = int(np.argmin(center_objective(env, model, field, cov, i)))
    return centers


def equitable_partition(
    env: Environment,
    model: ServiceModel,
    field: DemandField,
    config: np.ndarray,
) -> Covering:
    """Assign every (vertex, task) to the cheapest robot; ties to the lowest index.

    Assignments depend only on the service costs, not the demand values; the
    ``field`` argument is kept for signature symmetry with the cost operations.
    Zero-demand vertices are still assigned.
    """
    del field
    costs = service_costs(env, model, config)
    n, m, nv = costs.shape
    owned = np.zeros((m, n, nv), dtype=bool)
    for j in range(m):
        winners = costs[:, j, :].argmin(axis=0)
        owned[j, winners, np.arange(nv)] = True
    return Covering(owned)


@dataclass
class McepReport:
    ok: bool
    violations: list[str]

    def __bool__(self) -> bool:
        return self.ok


def is_mcep(
    env: Environment,
    model: ServiceModel,
    field: DemandField,
    config: np.ndarray,
    cov: Covering,
    tol: float = 1e-9,
) -> McepReport:
    """Check the joint fixed-point conditions for (config, cov).

    (a) each task's sets are pairwise disjoint and cover every vertex;
    (b) each robot's position attains the minimum of its center objective;
    (c) every assigned robot attains the per-vertex service-cost minimum.
    """
    violations: list[str] = []

    for j in range(cov.task_count):
        counts = cov.owned[j].sum(axis=0)
        for v in np.flatnonzero(counts > 1):
            violations.append(f"overlap: task {j} vertex {v} owned by {counts[v]} robots")
        for v in np.flatnonzero(counts == 0):
            violations.append(f"uncovered: task {j} vertex {v} has no owner")

    idle = set(idle_robots(cov))
    for i in range(cov.robot_count):
        if i in idle:
            continue
        obj = center_objective(env, model, field, cov, i)
        best = obj.min()
        if obj[config[i]] > best + tol * max(1.0, abs(best)):
            violations.append(
                f"center: robot {i} at vertex {config[i]} "
                f"(objective {obj[config[i]]:.6g} > min {best:.6g})"
            )

    costs = service_costs(env, model, config)
    for j in range(cov.task_count):
        best = costs[:, j, :].min(axis=0)
        thresh = best + tol * np.maximum(1.0, np.abs(best))
        bad = cov.owned[j] & (costs[:, j, :] > thresh)
        for i, v in zip(*np.nonzero(bad)):
            violations.append(
                f"equitable: task {j} vertex {v} assigned to robot {i} "
                f"(cost {costs[i, j, v]:.6g} > min {best[v]:.6g})"
            )

    return McepReport(not violations, violations)
