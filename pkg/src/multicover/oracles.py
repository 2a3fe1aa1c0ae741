"""Brute-force reference computations for verification.

Everything here is written as plain exhaustive enumeration, independent of the
vectorized production paths it is used to cross-check.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from .coverage import ServiceModel, multitask_cost
from .demand import DemandField
from .env import Covering, Environment
from .gp import MtgpPrior


def enumerated_shortest_distance(vertex_count: int, edges, source: int, target: int) -> float:
    """Shortest-path distance via depth-first enumeration of simple paths."""
    adj: list[list[tuple[int, float]]] = [[] for _ in range(vertex_count)]
    for u, v, w in edges:
        adj[u].append((v, w))
        adj[v].append((u, w))
    best = np.inf

    def walk(node: int, used: set[int], length: float) -> None:
        nonlocal best
        if length >= best:
            return
        if node == target:
            best = length
            return
        for nxt, w in adj[node]:
            if nxt not in used:
                used.add(nxt)
                walk(nxt, used, length + w)
                used.remove(nxt)

    walk(source, {source}, 0.0)
    return best


def brute_force_centers(
    env: Environment,
    model: ServiceModel,
    field: DemandField,
    cov: Covering,
    config: np.ndarray | None = None,
) -> np.ndarray:
    """Per-robot center search by direct triple loop, lowest vertex on ties."""
    centers = np.empty(cov.robot_count, dtype=int)
    for i in range(cov.robot_count):
        owned_any = False
        best_val, best_c = None, None
        for c in range(env.vertex_count):
            val = 0.0
            for j in range(cov.task_count):
                for v in cov.vertices(j, i):
                    owned_any = True
                    val += float(model.cost(i, j, env.dist[c, v])) * field.values[v, j]
            if best_val is None or val < best_val:
                best_val, best_c = val, c
        if not owned_any:
            if config is None:
                raise ValueError(f"robot {i} owns nothing and no configuration was given")
            centers[i] = config[i]
        else:
            centers[i] = best_c
    return centers


def brute_force_equitable(
    env: Environment, model: ServiceModel, config: np.ndarray, task_count: int
) -> Covering:
    """Per-(task, vertex) winner search by direct loops, lowest robot on ties."""
    n = len(config)
    owned = np.zeros((task_count, n, env.vertex_count), dtype=bool)
    for j in range(task_count):
        for v in range(env.vertex_count):
            best_val, best_i = None, None
            for i in range(n):
                val = float(model.cost(i, j, env.dist[config[i], v]))
                if best_val is None or val < best_val:
                    best_val, best_i = val, i
            owned[j, best_i, v] = True
    return Covering(owned)


def brute_force_best_config_cost(
    env: Environment, model: ServiceModel, field: DemandField, cov: Covering
) -> float:
    """Minimum coverage cost over every robot configuration in V^N."""
    best = np.inf
    for config in product(range(env.vertex_count), repeat=cov.robot_count):
        best = min(best, multitask_cost(env, model, field, np.array(config), cov).total)
    return best


def brute_force_best_partition_cost(
    env: Environment, model: ServiceModel, field: DemandField, config: np.ndarray
) -> float:
    """Minimum coverage cost over every per-task assignment of vertices to robots.

    Tasks are independent in the cost, so each task's assignment is minimized
    separately over all N^|V| labelings.
    """
    n = len(config)
    total = 0.0
    for j in range(field.task_count):
        best = np.inf
        for assignment in product(range(n), repeat=env.vertex_count):
            val = 0.0
            for v, i in enumerate(assignment):
                val += float(model.cost(i, j, env.dist[config[i], v])) * field.values[v, j]
            best = min(best, val)
        total += best
    return total


def brute_force_regret(
    env: Environment,
    model: ServiceModel,
    field: DemandField,
    config: np.ndarray,
    cov: Covering,
) -> float:
    """Both regret gap terms by exhaustive center/partition search."""
    current = multitask_cost(env, model, field, config, cov).total
    gap_config = current - brute_force_best_config_cost(env, model, field, cov)
    gap_partition = current - brute_force_best_partition_cost(env, model, field, config)
    return gap_config + gap_partition


def dense_conditioned_posterior(
    prior: MtgpPrior, observations: list[tuple[int, np.ndarray]]
) -> tuple[np.ndarray, np.ndarray]:
    """Joint-Gaussian conditioning on all stacked observations at once."""
    m, dim = prior.task_count, prior.dim
    cov0 = prior.full_cov()
    if not observations:
        return prior.mean.copy(), cov0
    k = len(observations)
    h = np.zeros((k * m, dim))
    y = np.zeros(k * m)
    for r, (vertex, obs) in enumerate(observations):
        h[r * m:(r + 1) * m, vertex * m:(vertex + 1) * m] = np.eye(m)
        y[r * m:(r + 1) * m] = np.asarray(obs, dtype=float)
    s = h @ cov0 @ h.T + prior.noise_var * np.eye(k * m)
    gain = cov0 @ h.T @ np.linalg.inv(s)
    mean = prior.mean + gain @ (y - h @ prior.mean)
    cov = cov0 - gain @ h @ cov0
    return mean, (cov + cov.T) / 2.0
