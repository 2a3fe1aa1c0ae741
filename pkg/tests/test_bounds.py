import numpy as np
import pytest

from multicover import (
    MtgpPrior,
    max_info_gain_bound_check,
    se_kernel_matrix,
    uncertainty_reduction_bound_check,
)
from multicover.gp import (
    max_multitask_information_gain,
    max_single_task_information_gain,
    stacked_mutual_information,
)


def five_vertex_spatial(seed=0, length_scale=0.4):
    coords = np.random.default_rng(seed).uniform(0, 1, size=(5, 2))
    return se_kernel_matrix(coords, 1.0, length_scale)


def random_task_cov(rng, m=2):
    a = rng.normal(size=(m, m))
    return a @ a.T + 0.05 * np.eye(m)


def test_info_gain_bound_identity_tasks():
    spatial = five_vertex_spatial()
    prior = MtgpPrior(spatial, np.eye(2), 0.1)
    for n in (1, 2, 3):
        res = max_info_gain_bound_check(prior, n)
        assert res.holds
        # independent tasks: two copies of the single-task gain
        single = max_single_task_information_gain(spatial, 0.1, n)
        assert res.rhs == pytest.approx(2 * single, abs=1e-9)
        assert res.lhs <= 2 * single + 1e-9


def test_info_gain_bound_rank_one_tasks():
    spatial = five_vertex_spatial(seed=1)
    prior = MtgpPrior(spatial, np.array([[1.0, 1.0], [1.0, 1.0]]), 0.1)
    res = max_info_gain_bound_check(prior, 4)
    assert res.holds
    # one zero eigenvalue contributes nothing; the other doubles the scale
    single = max_single_task_information_gain(spatial, 0.1 / 2.0, 4)
    assert res.rhs == pytest.approx(single, abs=1e-9)


def test_info_gain_bound_single_task_is_tight():
    spatial = five_vertex_spatial(seed=2)
    prior = MtgpPrior(spatial, np.array([[1.0]]), 0.2)
    res = max_info_gain_bound_check(prior, 3)
    assert res.holds
    assert res.lhs == pytest.approx(res.rhs, abs=1e-9)


def test_info_gain_bound_random_sweep():
    rng = np.random.default_rng(3)
    spatial = five_vertex_spatial(seed=3)
    for _ in range(6):
        prior = MtgpPrior(spatial, random_task_cov(rng), float(rng.uniform(0.05, 0.3)))
        for n in (1, 3):
            assert max_info_gain_bound_check(prior, n).holds


def test_info_gain_greedy_lhs_mode():
    prior = MtgpPrior(five_vertex_spatial(seed=4), random_task_cov(np.random.default_rng(4)),
                      0.1)
    exact = max_info_gain_bound_check(prior, 3)
    greedy = max_info_gain_bound_check(prior, 3, greedy_lhs=True)
    assert greedy.holds
    assert greedy.lhs <= exact.lhs + 1e-12
    assert greedy.rhs == pytest.approx(exact.rhs, abs=1e-12)


def test_exhaustive_gain_guards_size():
    prior = MtgpPrior(se_kernel_matrix(np.random.default_rng(5).uniform(0, 1, (30, 2)),
                                       1.0, 0.3), np.eye(2), 0.1)
    with pytest.raises(ValueError, match="exceeds limit"):
        max_multitask_information_gain(prior, 6, limit=1000)


def test_exhaustive_gain_beats_random_sequences():
    rng = np.random.default_rng(6)
    prior = MtgpPrior(five_vertex_spatial(seed=6), random_task_cov(rng), 0.1)
    gamma = max_multitask_information_gain(prior, 3)
    for _ in range(30):
        seq = [int(rng.integers(5)) for _ in range(3)]
        assert stacked_mutual_information(seq, prior) <= gamma + 1e-12


def test_uncertainty_bound_scalar_closed_form():
    prior = MtgpPrior(np.array([[1.0]]), np.array([[1.0]]), 1.0)
    res = uncertainty_reduction_bound_check(prior, 1)
    assert res.lhs == pytest.approx(0.5, abs=1e-12)
    assert res.rhs == pytest.approx(1.0, abs=1e-12)
    assert res.holds


def test_uncertainty_bound_path_tasks():
    coords = np.linspace(0, 1, 5)[:, None] * np.array([[1.0, 0.0]])
    spatial = se_kernel_matrix(coords, 1.0, 0.3)
    prior = MtgpPrior(spatial, np.array([[1.0, 0.65], [0.65, 1.0]]), 0.1)
    for n in (2, 4, 6):
        assert uncertainty_reduction_bound_check(prior, n).holds


def test_uncertainty_bound_random_sweep():
    rng = np.random.default_rng(7)
    for trial in range(20):
        coords = rng.uniform(0, 1, size=(int(rng.integers(3, 6)), 2))
        spatial = se_kernel_matrix(coords, float(rng.uniform(0.5, 1.5)),
                                   float(rng.uniform(0.2, 0.6)))
        m = int(rng.integers(1, 3))
        prior = MtgpPrior(spatial, random_task_cov(rng, m), float(rng.uniform(0.05, 0.4)))
        n = int(rng.integers(1, 6))
        res = uncertainty_reduction_bound_check(prior, n)
        assert res.holds, f"trial {trial}: lhs={res.lhs} rhs={res.rhs}"


def test_uncertainty_bound_greedy_gamma_mode_is_stricter():
    prior = MtgpPrior(five_vertex_spatial(seed=8), np.eye(2), 0.1)
    exact = uncertainty_reduction_bound_check(prior, 4)
    greedy = uncertainty_reduction_bound_check(prior, 4, gamma_mode="greedy")
    assert greedy.rhs <= exact.rhs + 1e-12
    assert greedy.holds


def test_uncertainty_bound_rejects_n_zero():
    prior = MtgpPrior(np.array([[1.0]]), np.array([[1.0]]), 1.0)
    with pytest.raises(ValueError):
        uncertainty_reduction_bound_check(prior, 0)
