"""Shared random-instance builders for the test suite."""

from __future__ import annotations

import numpy as np

from multicover import Covering, DemandField, LinearServiceModel, MtgpPrior, from_edges
from multicover.gp import se_kernel_matrix


def random_connected_edges(rng: np.random.Generator, vertex_count: int):
    """Spanning path plus a few random chords, random positive weights."""
    edges = [(v, v + 1, float(rng.uniform(0.5, 2.0))) for v in range(vertex_count - 1)]
    for _ in range(int(rng.integers(0, vertex_count))):
        u, v = rng.choice(vertex_count, size=2, replace=False)
        edges.append((int(u), int(v), float(rng.uniform(0.5, 2.0))))
    return edges


def random_environment(rng: np.random.Generator, max_vertices: int = 6):
    nv = int(rng.integers(3, max_vertices + 1))
    return from_edges(nv, random_connected_edges(rng, nv))


def random_covering(rng: np.random.Generator, task_count: int, robot_count: int,
                    vertex_count: int) -> Covering:
    """Random valid covering: random ownership, gaps patched onto robot 0."""
    owned = rng.random((task_count, robot_count, vertex_count)) < 0.5
    owned[:, 0, :] |= ~owned.any(axis=1)
    return Covering(owned)


def random_instance(rng: np.random.Generator, max_vertices: int = 6,
                    robot_count: int = 2, max_tasks: int = 2):
    """(env, model, field, config, covering) with heterogeneous linear costs."""
    env = random_environment(rng, max_vertices)
    m = int(rng.integers(1, max_tasks + 1))
    model = LinearServiceModel(rng.uniform(0.3, 3.0, size=(robot_count, m)))
    field = DemandField(rng.uniform(0.0, 1.0, size=(env.vertex_count, m)))
    config = rng.integers(0, env.vertex_count, size=robot_count)
    cov = random_covering(rng, m, robot_count, env.vertex_count)
    return env, model, field, config, cov


def random_prior(rng: np.random.Generator, max_vertices: int = 8, max_tasks: int = 3,
                 nugget: float = 0.1) -> MtgpPrior:
    """SE-kernel spatial covariance on random planar points, random PD task covariance."""
    nv = int(rng.integers(2, max_vertices + 1))
    m = int(rng.integers(1, max_tasks + 1))
    coords = rng.uniform(0.0, 1.0, size=(nv, 2))
    spatial = se_kernel_matrix(coords, float(rng.uniform(0.5, 2.0)),
                               float(rng.uniform(0.2, 0.6))) + nugget * np.eye(nv)
    a = rng.normal(size=(m, m))
    task = a @ a.T + 0.05 * np.eye(m)
    return MtgpPrior(spatial, task, float(rng.uniform(0.05, 0.5)),
                     rng.normal(size=nv * m))
