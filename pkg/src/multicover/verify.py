"""Self-checks pitting the fast implementations against brute-force oracles."""

from __future__ import annotations

import numpy as np

from .coverage import LinearServiceModel, equitable_partition, multitask_centers
from .demand import DemandField
from .env import Covering, from_edges
from .gp import (
    MtgpPosterior,
    MtgpPrior,
    greedy_selection_walk,
    max_info_gain_bound_check,
    posterior_update,
    uncertainty_reduction_bound_check,
)
from .oracles import brute_force_centers, brute_force_equitable, dense_conditioned_posterior


def _random_instance(rng: np.random.Generator, max_vertices: int = 6, robots: int = 2,
                     tasks: int = 2):
    nv = int(rng.integers(3, max_vertices + 1))
    edges = [(v, v + 1, float(rng.uniform(0.5, 2.0))) for v in range(nv - 1)]
    for _ in range(int(rng.integers(0, nv))):
        u, v = rng.choice(nv, 2, replace=False)
        edges.append((int(u), int(v), float(rng.uniform(0.5, 2.0))))
    env = from_edges(nv, edges)
    m = int(rng.integers(1, tasks + 1))
    model = LinearServiceModel(rng.uniform(0.3, 3.0, size=(robots, m)))
    field = DemandField(rng.uniform(0.0, 1.0, size=(nv, m)))
    config = rng.integers(0, nv, size=robots)
    owned = rng.random((m, robots, nv)) < 0.5
    owned[:, 0, :] |= ~owned.any(axis=1)
    return env, model, field, config, Covering(owned)


def check_center_and_partition_oracles(trials: int = 25, seed: int = 7) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    for t in range(trials):
        env, model, field, config, cov = _random_instance(rng)
        fast = multitask_centers(env, model, field, cov, config=config)
        slow = brute_force_centers(env, model, field, cov, config=config)
        if not np.array_equal(fast, slow):
            return False, f"centers mismatch on trial {t}"
        fast_cov = equitable_partition(env, model, field, config)
        slow_cov = brute_force_equitable(env, model, config, field.task_count)
        if fast_cov != slow_cov:
            return False, f"equitable partition mismatch on trial {t}"
    return True, f"{trials} random instances"


def check_posterior_oracle(trials: int = 10, seed: int = 11) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    for t in range(trials):
        nv = int(rng.integers(2, 8))
        m = int(rng.integers(1, 4))
        a = rng.normal(size=(nv, nv))
        spatial = a @ a.T + 0.1 * np.eye(nv)
        b = rng.normal(size=(m, m))
        task = b @ b.T + 0.05 * np.eye(m)
        prior = MtgpPrior(spatial, task, float(rng.uniform(0.05, 0.5)),
                          rng.normal(size=nv * m))
        post = MtgpPosterior.from_prior(prior)
        obs = []
        for _ in range(int(rng.integers(1, 7))):
            v = int(rng.integers(nv))
            y = rng.normal(size=m)
            obs.append((v, y))
            post = posterior_update(post, v, y)
        mean, cov = dense_conditioned_posterior(prior, obs)
        if not (np.allclose(post.mean, mean, atol=1e-8)
                and np.allclose(post.cov, cov, atol=1e-8)):
            return False, f"posterior mismatch on trial {t}"
    return True, f"{trials} random instances vs dense conditioning"


def check_greedy_monotonicity(seed: int = 3) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0, 1, size=(8, 2))
    from .gp import se_kernel_matrix

    spatial = se_kernel_matrix(coords, 1.0, 0.3)
    task = np.array([[1.0, 0.5], [0.5, 1.0]])
    prior = MtgpPrior(spatial, task, 0.04)
    _, criteria = greedy_selection_walk(MtgpPosterior.from_prior(prior), 25)
    ok = bool((np.diff(criteria) <= 1e-9).all())
    return ok, "selection criterion non-increasing over 25 greedy steps"


def check_info_gain_bound(seed: int = 5) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0, 1, size=(5, 2))
    from .gp import se_kernel_matrix

    spatial = se_kernel_matrix(coords, 1.0, 0.4)
    for name, task in (
        ("identity", np.eye(2)),
        ("rank-1", np.array([[1.0, 1.0], [1.0, 1.0]])),
        ("correlated", np.array([[1.0, 0.65], [0.65, 1.0]])),
    ):
        prior = MtgpPrior(spatial, task, 0.1)
        for n in (1, 2, 3):
            res = max_info_gain_bound_check(prior, n)
            if not res.holds:
                return False, f"information-gain bound violated ({name}, n={n})"
    return True, "3 task covariances, n in 1..3"


def check_uncertainty_bound(seed: int = 9) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0, 1, size=(5, 2))
    from .gp import se_kernel_matrix

    spatial = se_kernel_matrix(coords, 1.0, 0.4)
    task = np.array([[1.0, 0.65], [0.65, 1.0]])
    prior = MtgpPrior(spatial, task, 0.1)
    for n in (1, 2, 4, 6):
        res = uncertainty_reduction_bound_check(prior, n)
        if not res.holds:
            return False, f"uncertainty bound violated at n={n}"
    return True, "n in {1, 2, 4, 6}"


def run_verification() -> list[tuple[str, bool, str]]:
    """All self-checks; returns (name, passed, detail) rows."""
    checks = [
        ("centers-and-partitions-vs-brute-force", check_center_and_partition_oracles),
        ("posterior-vs-dense-conditioning", check_posterior_oracle),
        ("greedy-criterion-monotonicity", check_greedy_monotonicity),
        ("information-gain-bound", check_info_gain_bound),
        ("uncertainty-reduction-bound", check_uncertainty_bound),
    ]
    results = []
    for name, fn in checks:
        ok, detail = fn()
        results.append((name, ok, detail))
    return results
