"""Ground-truth demand fields: per-vertex, per-task nonnegative service demand."""

from __future__ import annotations

import csv

import numpy as np

from .env import Environment


class DemandField:
    """Nonnegative demand values, shape (vertices, tasks)."""

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise ValueError("demand values must have shape (vertices, tasks)")
        if (values < 0).any():
            raise ValueError("demand values must be nonnegative")
        self.values = values

    @property
    def vertex_count(self) -> int:
        return self.values.shape[0]

    @property
    def task_count(self) -> int:
        return self.values.shape[1]

    def flatten(self) -> np.ndarray:
        """Vertex-major stacking: entry v * task_count + j holds task j at vertex v."""
        return self.values.reshape(-1).copy()

    @classmethod
    def from_flat(cls, flat: np.ndarray, task_count: int) -> "DemandField":
        flat = np.asarray(flat, dtype=float)
        if flat.size % task_count:
            raise ValueError("flat vector length is not a multiple of task_count")
        return cls(flat.reshape(-1, task_count))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh,lineterminator="\n")
            writer.writerow(["vertex", "task", "phi"])
            for v in range(self.vertex_count):
                for j in range(self.task_count):
                    writer.writerow([v, j, repr(float(self.values[v, j]))])

    @classmethod
    def from_csv(cls, path) -> "DemandField":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                rows.append((int(row["vertex"]), int(row["task"]), float(row["phi"])))
        if not rows:
            raise ValueError(f"no demand rows in {path}")
        nv = max(r[0] for r in rows) + 1
        nt = max(r[1] for r in rows) + 1
        values = np.zeros((nv, nt))
        for v, j, phi in rows:
            values[v, j] = phi
        return cls(values)


def synthesize_gaussian_mixture(
    env: Environment,
    kernel_centers: list[list[tuple[int, float, float]]],
    seed: int | None = None,
) -> DemandField:
    """Per-task Gaussian-mixture demand over the environment's planar coordinates.

    ``kernel_centers[j]`` lists (vertex, amplitude, spread) triples for task j.
    Each task column is normalized to unit sum. The ``seed`` argument is config
    plumbing only; synthesis with explicit kernels is deterministic.
    """
    if env.coords is None:
        raise ValueError("environment has no planar coordinates for Euclidean kernels")
    values = np.zeros((env.vertex_count, len(kernel_centers)))
    for j, kernels in enumerate(kernel_centers):
        if not kernels:
            raise ValueError(f"task {j} has an empty kernel list")
        col = np.zeros(env.vertex_count)
        for center, amplitude, spread in kernels:
            if amplitude <= 0 or spread <= 0:
                raise ValueError("kernel amplitudes and spreads must be positive")
            delta = env.coords - env.coords[int(center)]
            sq = (delta**2).sum(axis=1)
            col += amplitude * np.exp(-sq / (2.0 * spread**2))
        values[:, j] = col / col.sum()
    return DemandField(values)


def random_kernels(
    env: Environment,
    task_count: int,
    per_task: int,
    seed: int,
    amplitude_range: tuple[float, float] = (0.5, 1.5),
    spread_range: tuple[float, float] = (1.0, 4.0),
) -> list[list[tuple[int, float, float]]]:
    """Draw per-task kernel parameter lists for synthesize_gaussian_mixture."""
    rng = np.random.default_rng(seed)
    specs = []
    for _ in range(task_count):
        kernels = []
        for _ in range(per_task):
            kernels.append(
                (
                    int(rng.integers(env.vertex_count)),
                    float(rng.uniform(*amplitude_range)),
                    float(rng.uniform(*spread_range)),
                )
            )
        specs.append(kernels)
    return specs
