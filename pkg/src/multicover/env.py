"""Weighted graph environments, coverings, and robot configurations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra


class DisconnectedGraphError(ValueError):
    """Raised when an environment graph has an unreachable vertex pair."""


@dataclass(frozen=True)
class Environment:
    """Connected weighted undirected graph with precomputed shortest-path distances.

    Vertices are dense integers 0..vertex_count-1. ``dist[u, v]`` is the exact
    shortest-path distance. ``coords`` holds optional planar embeddings (grids
    get integer (row, col) coordinates) used by Euclidean kernels.
    """

    vertex_count: int
    edges: tuple[tuple[int, int, float], ...]
    dist: np.ndarray
    coords: np.ndarray | None = None
    grid_shape: tuple[int, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        self.dist.setflags(write=False)
        if self.coords is not None:
            self.coords.setflags(write=False)

    @property
    def vertices(self) -> range:
        return range(self.vertex_count)

    def to_json_dict(self) -> dict:
        doc = {
            "vertices": self.vertex_count,
            "edges": [[u, v, w] for u, v, w in self.edges],
        }
        if self.coords is not None:
            doc["coords"] = self.coords.tolist()
        return doc


def _check_edges(vertex_count: int, edges) -> list[tuple[int, int, float]]:
    if vertex_count < 1:
        raise ValueError("environment needs at least one vertex")
    clean = []
    for u, v, w in edges:
        u, v, w = int(u), int(v), float(w)
        if not (0 <= u < vertex_count and 0 <= v < vertex_count):
            raise ValueError(f"edge ({u}, {v}) references an unknown vertex")
        if w <= 0:
            raise ValueError(f"edge ({u}, {v}) has non-positive weight {w}")
        clean.append((u, v, w))
    return clean


def shortest_path_matrix(vertex_count: int, edges) -> np.ndarray:
    """Exact all-pairs shortest-path distances for an undirected weighted graph.

    Raises DisconnectedGraphError naming an unreachable pair if the graph is
    not connected.
    """
    edges = _check_edges(vertex_count, edges)
    if edges:
        u, v, w = zip(*edges)
        graph = coo_matrix((w, (u, v)), shape=(vertex_count, vertex_count))
    else:
        graph = coo_matrix((vertex_count, vertex_count))
    dist = dijkstra(graph, directed=False)
    bad = np.argwhere(np.isinf(dist))
    if bad.size:
        u, v = bad[0]
        raise DisconnectedGraphError(f"no path between vertices {u} and {v}")
    # Dijkstra on an undirected graph is symmetric up to float noise; exact
    # symmetry keeps downstream equality checks honest.
    dist = np.minimum(dist, dist.T)
    return dist


def from_edges(vertex_count: int, edges, coords=None) -> Environment:
    """Build an Environment from an edge list, computing all distances."""
    clean = _check_edges(vertex_count, edges)
    dist = shortest_path_matrix(vertex_count, clean)
    if coords is not None:
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (vertex_count, 2):
            raise ValueError("coords must be (vertex_count, 2)")
    return Environment(vertex_count, tuple(clean), dist, coords)


def build_grid(rows: int, cols: int, weight: float = 1.0) -> Environment:
    """4-connected rows x cols grid with uniform edge weight, indexed row-major."""
    if rows < 1 or cols < 1:
        raise ValueError("grid needs rows >= 1 and cols >= 1")
    if weight <= 0:
        raise ValueError("edge weight must be positive")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, weight))
            if r + 1 < rows:
                edges.append((v, v + cols, weight))
    n = rows * cols
    # Manhattan metric on the grid; skips the generic Dijkstra pass.
    rr, cc = np.divmod(np.arange(n), cols)
    dist = (np.abs(rr[:, None] - rr[None, :]) + np.abs(cc[:, None] - cc[None, :])) * float(weight)
    coords = np.stack([rr, cc], axis=1).astype(float)
    return Environment(n, tuple(edges), dist, coords, grid_shape=(rows, cols))


def all_pairs_distances(env: Environment) -> np.ndarray:
    """Recompute the distance matrix from the edge list (validation path)."""
    return shortest_path_matrix(env.vertex_count, env.edges)


def environment_from_json(doc: dict) -> Environment:
    """Load an environment from its JSON document or the grid shorthand."""
    if "grid" in doc:
        rows, cols = doc["grid"]
        return build_grid(int(rows), int(cols), float(doc.get("weight", 1.0)))
    return from_edges(int(doc["vertices"]), doc["edges"], doc.get("coords"))


def as_configuration(positions, env: Environment) -> np.ndarray:
    """Validate a robot configuration: a vector of vertex indices."""
    config = np.asarray(positions, dtype=int)
    if config.ndim != 1 or config.size == 0:
        raise ValueError("configuration must be a non-empty vector of vertices")
    if config.min() < 0 or config.max() >= env.vertex_count:
        raise ValueError("configuration contains an out-of-range vertex")
    return config


class Covering:
    """Per-task vertex ownership for N robots: one N-covering per task.

    Backed by a boolean array ``owned[task, robot, vertex]``. Serialized as
    sorted per-(task, robot) vertex lists.
    """

    def __init__(self, owned: np.ndarray):
        owned = np.asarray(owned, dtype=bool)
        if owned.ndim != 3:
            raise ValueError("owned must have shape (tasks, robots, vertices)")
        self.owned = owned

    @property
    def task_count(self) -> int:
        return self.owned.shape[0]

    @property
    def robot_count(self) -> int:
        return self.owned.shape[1]

    @property
    def vertex_count(self) -> int:
        return self.owned.shape[2]

    @classmethod
    def from_sets(cls, sets, vertex_count: int) -> "Covering":
        """Build from nested [task][robot] iterables of vertex indices."""
        tasks = len(sets)
        robots = len(sets[0]) if tasks else 0
        owned = np.zeros((tasks, robots, vertex_count), dtype=bool)
        for j, per_task in enumerate(sets):
            for i, cell in enumerate(per_task):
                for v in cell:
                    owned[j, i, int(v)] = True
        return cls(owned)

    def to_sets(self) -> list[list[list[int]]]:
        return [
            [np.flatnonzero(self.owned[j, i]).tolist() for i in range(self.robot_count)]
            for j in range(self.task_count)
        ]

    def vertices(self, task: int, robot: int) -> np.ndarray:
        return np.flatnonzero(self.owned[task, robot])

    def copy(self) -> "Covering":
        return Covering(self.owned.copy())

    def covers_all(self) -> bool:
        """True iff every task's sets union to the full vertex set."""
        return bool(self.owned.any(axis=1).all())

    def __eq__(self, other) -> bool:
        return isinstance(other, Covering) and np.array_equal(self.owned, other.owned)


def is_partition(cov: Covering, task: int) -> bool:
    """True iff the task's sets are pairwise disjoint and cover every vertex."""
    counts = cov.owned[task].sum(axis=0)
    return bool((counts == 1).all())


def overlap_count(cov: Covering) -> int:
    """Total ownership count over tasks and vertices (M*|V| when all partitions)."""
    return int(cov.owned.sum())


def partition_map(cov: Covering) -> np.ndarray:
    """Integer ownership map, shape (vertices, tasks).

    Entries: 0 for uncovered, robot index + 1 for a unique owner, and
    robot_count + 1 for multiply covered vertices.
    """
    m, n, nv = cov.owned.shape
    out = np.zeros((nv, m), dtype=int)
    for j in range(m):
        counts = cov.owned[j].sum(axis=0)
        first = cov.owned[j].argmax(axis=0)
        out[:, j] = np.where(counts == 1, first + 1, np.where(counts == 0, 0, n + 1))
    return out
