import numpy as np
import pytest

from multicover import (
    ExplorationBudgetError,
    MtgpPosterior,
    MtgpPrior,
    exploration_batch,
    greedy_select,
    mutual_information,
    posterior_update,
    se_kernel_matrix,
    vertex_block,
)
from multicover.gp import (
    greedy_selection_walk,
    information_gain_sequence,
    stacked_mutual_information,
)
from multicover.oracles import dense_conditioned_posterior

from helpers import random_prior


def scalar_prior(sigma_v2=1.0, noise=1.0):
    return MtgpPrior(np.array([[sigma_v2]]), np.array([[1.0]]), noise)


def test_se_kernel_diagonal_and_coincident_points():
    coords = np.array([[0.3, 0.7], [0.3, 0.7]])
    k = se_kernel_matrix(coords, 2.5, 0.18)
    assert np.allclose(k, 2.5)
    coords = np.random.default_rng(0).uniform(0, 1, size=(6, 2))
    k = se_kernel_matrix(coords, 1.7, 0.3)
    assert np.allclose(np.diag(k), 1.7)


def test_se_kernel_matches_formula():
    rng = np.random.default_rng(1)
    coords = rng.uniform(0, 1, size=(5, 2))
    k = se_kernel_matrix(coords, 1.0, 0.18)
    for i in range(5):
        for j in range(5):
            d2 = ((coords[i] - coords[j]) ** 2).sum()
            assert k[i, j] == pytest.approx(np.exp(-d2 / (2 * 0.18**2)), rel=1e-12)


def test_prior_validation():
    with pytest.raises(ValueError, match="symmetric"):
        MtgpPrior(np.array([[1.0, 0.5], [0.2, 1.0]]), np.eye(1), 0.1)
    with pytest.raises(ValueError, match="positive semidefinite"):
        MtgpPrior(np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(1), 0.1)
    with pytest.raises(ValueError, match="noise_var"):
        MtgpPrior(np.eye(2), np.eye(1), 0.0)


def test_prior_kronecker_block_layout():
    spatial = np.array([[1.0, 0.4], [0.4, 2.0]])
    task = np.array([[1.0, 0.65], [0.65, 1.0]])
    prior = MtgpPrior(spatial, task, 0.1)
    post = MtgpPosterior.from_prior(prior)
    assert np.allclose(vertex_block(post, 0), spatial[0, 0] * task)
    assert np.allclose(vertex_block(post, 1), spatial[1, 1] * task)
    assert np.allclose(post.cov[0:2, 2:4], spatial[0, 1] * task)


def test_scalar_conjugate_update():
    post = MtgpPosterior.from_prior(scalar_prior())
    updated = posterior_update(post, 0, np.array([3.0]))
    assert updated.cov[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert updated.mean[0] == pytest.approx(1.5, abs=1e-12)
    # original untouched
    assert post.cov[0, 0] == 1.0 and post.counts[0] == 0
    assert updated.counts[0] == 1 and updated.sums[0, 0] == 3.0


def test_no_observations_posterior_equals_prior():
    prior = random_prior(np.random.default_rng(2))
    post = MtgpPosterior.from_prior(prior)
    assert np.array_equal(post.mean, prior.mean)
    assert np.allclose(post.cov, prior.full_cov())


def test_posterior_matches_dense_conditioning():
    rng = np.random.default_rng(3)
    for _ in range(10):
        prior = random_prior(rng)
        post = MtgpPosterior.from_prior(prior)
        observations = []
        for _ in range(int(rng.integers(1, 8))):
            v = int(rng.integers(prior.vertex_count))
            y = rng.normal(size=prior.task_count)
            observations.append((v, y))
            post = posterior_update(post, v, y)
        mean, cov = dense_conditioned_posterior(prior, observations)
        assert np.allclose(post.mean, mean, atol=1e-8)
        assert np.allclose(post.cov, cov, atol=1e-8)


def test_posterior_with_rank_deficient_task_cov():
    # Perfectly correlated tasks: singular prior, covariance-form still exact.
    spatial = se_kernel_matrix(np.array([[0.0, 0.0], [0.5, 0.5], [1.0, 0.2]]), 1.0, 0.4)
    task = np.array([[1.0, 1.0], [1.0, 1.0]])
    prior = MtgpPrior(spatial, task, 0.09)
    rng = np.random.default_rng(4)
    post = MtgpPosterior.from_prior(prior)
    obs = [(0, rng.normal(size=2)), (2, rng.normal(size=2)), (0, rng.normal(size=2))]
    for v, y in obs:
        post = posterior_update(post, v, y)
    mean, cov = dense_conditioned_posterior(prior, obs)
    assert np.allclose(post.mean, mean, atol=1e-8)
    assert np.allclose(post.cov, cov, atol=1e-8)


def test_update_order_invariance():
    rng = np.random.default_rng(5)
    prior = random_prior(rng)
    obs = [(int(rng.integers(prior.vertex_count)), rng.normal(size=prior.task_count))
           for _ in range(6)]
    a = MtgpPosterior.from_prior(prior)
    for v, y in obs:
        a.update(v, y)
    b = MtgpPosterior.from_prior(prior)
    for k in rng.permutation(len(obs)):
        b.update(*obs[k])
    assert np.allclose(a.mean, b.mean, atol=1e-8)
    assert np.allclose(a.cov, b.cov, atol=1e-8)


def test_identity_task_cov_factorizes():
    rng = np.random.default_rng(6)
    coords = rng.uniform(0, 1, size=(5, 2))
    spatial = se_kernel_matrix(coords, 1.0, 0.35) + 0.05 * np.eye(5)
    noise = 0.2
    joint_prior = MtgpPrior(spatial, np.eye(2), noise)
    joint = MtgpPosterior.from_prior(joint_prior)
    singles = [MtgpPosterior.from_prior(MtgpPrior(spatial, np.eye(1), noise))
               for _ in range(2)]
    for _ in range(7):
        v = int(rng.integers(5))
        y = rng.normal(size=2)
        joint.update(v, y)
        for j in range(2):
            singles[j].update(v, y[[j]])
    for j in range(2):
        marginal_mean = joint.mean.reshape(5, 2)[:, j]
        assert np.allclose(marginal_mean, singles[j].mean, atol=1e-8)
        joint_var = np.array([vertex_block(joint, v)[j, j] for v in range(5)])
        single_var = np.array([vertex_block(singles[j], v)[0, 0] for v in range(5)])
        assert np.allclose(joint_var, single_var, atol=1e-8)


def test_trace_non_increasing_and_psd():
    rng = np.random.default_rng(7)
    prior = random_prior(rng)
    post = MtgpPosterior.from_prior(prior)
    prev = post.block_traces()
    for _ in range(8):
        v = int(rng.integers(prior.vertex_count))
        post.update(v, rng.normal(size=prior.task_count))
        cur = post.block_traces()
        assert (cur <= prev + 1e-10).all()
        assert np.linalg.eigvalsh(post.cov).min() >= -1e-9
        prev = cur


def test_vertex_block_errors_and_shrinks():
    prior = random_prior(np.random.default_rng(8), max_vertices=4, max_tasks=2)
    post = MtgpPosterior.from_prior(prior)
    with pytest.raises(IndexError):
        vertex_block(post, prior.vertex_count)
    v = 0
    before = np.trace(vertex_block(post, v))
    rng = np.random.default_rng(9)
    for _ in range(1000):
        post.update(v, rng.normal(size=prior.task_count))
    after = np.trace(vertex_block(post, v))
    assert after < 0.01 * before
    block = vertex_block(post, v)
    assert np.allclose(block, block.T)
    assert np.linalg.eigvalsh(block).min() >= -1e-12


def test_greedy_select_uniform_prior_tie_breaks_low():
    coords = np.zeros((4, 2))  # coincident points: fully symmetric prior
    prior = MtgpPrior(se_kernel_matrix(coords, 1.0, 0.2), np.eye(2), 0.1)
    assert greedy_select(MtgpPosterior.from_prior(prior)) == 0


def test_greedy_select_moves_after_heavy_sampling():
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    prior = MtgpPrior(se_kernel_matrix(coords, 1.0, 0.1), np.eye(1), 0.01)
    post = MtgpPosterior.from_prior(prior)
    rng = np.random.default_rng(10)
    for _ in range(50):
        post.update(0, rng.normal(size=1))
    assert greedy_select(post) != 0


def test_greedy_single_task_is_max_variance():
    rng = np.random.default_rng(11)
    prior = random_prior(rng, max_tasks=1)
    post = MtgpPosterior.from_prior(prior)
    for _ in range(3):
        post.update_covariance(int(rng.integers(prior.vertex_count)))
    variances = np.array([vertex_block(post, v)[0, 0] for v in range(prior.vertex_count)])
    assert greedy_select(post) == int(variances.argmax())


def test_mutual_information_single_sample_closed_form():
    assert mutual_information([0], scalar_prior()) == pytest.approx(0.5 * np.log(2.0),
                                                                    abs=1e-12)


def test_mutual_information_matches_stacked_oracle():
    rng = np.random.default_rng(12)
    for _ in range(10):
        prior = random_prior(rng, max_vertices=6)
        seq = [int(rng.integers(prior.vertex_count)) for _ in range(int(rng.integers(1, 9)))]
        assert mutual_information(seq, prior) == pytest.approx(
            stacked_mutual_information(seq, prior), abs=1e-9
        )


def test_mutual_information_chain_additivity():
    rng = np.random.default_rng(13)
    prior = random_prior(rng, max_vertices=5)
    seq = [int(rng.integers(prior.vertex_count)) for _ in range(6)]
    gains = information_gain_sequence(seq, prior)
    k = 3
    assert mutual_information(seq, prior) == pytest.approx(
        mutual_information(seq[:k], prior) + gains[k:].sum(), abs=1e-10
    )


def test_mutual_information_rejects_empty():
    with pytest.raises(ValueError):
        mutual_information([], scalar_prior())


def test_exploration_batch_scalar_recursion():
    post = MtgpPosterior.from_prior(scalar_prior())
    assert exploration_batch(post, 0.3, 100) == [0, 0, 0]
    # variances along the way: 0.5, 1/3, 0.25
    assert exploration_batch(post, 0.51, 100) == [0]
    assert exploration_batch(post, 1.5, 100) == []


def test_exploration_batch_does_not_mutate_input():
    prior = random_prior(np.random.default_rng(14))
    post = MtgpPosterior.from_prior(prior)
    cov_before = post.cov.copy()
    exploration_batch(post, float(post.block_traces().max()) / 2, 500)
    assert np.array_equal(post.cov, cov_before)


def test_exploration_batch_budget_error_carries_partial():
    post = MtgpPosterior.from_prior(scalar_prior())
    with pytest.raises(ExplorationBudgetError) as excinfo:
        exploration_batch(post, 0.01, 5)
    assert excinfo.value.partial == [0] * 5


def test_exploration_batch_grows_as_threshold_shrinks():
    rng = np.random.default_rng(15)
    coords = np.stack(np.meshgrid(np.linspace(0, 1, 6), np.linspace(0, 1, 6)),
                      axis=-1).reshape(-1, 2)
    prior = MtgpPrior(se_kernel_matrix(coords, 1.0, 0.25), np.eye(2), 0.04)
    post = MtgpPosterior.from_prior(prior)
    tau = float(post.block_traces().max())
    sizes = [len(exploration_batch(post, tau * 0.5**level, 10_000))
             for level in range(1, 5)]
    assert sizes == sorted(sizes)
    assert sizes[-1] > sizes[0]


def test_greedy_walk_criterion_non_increasing():
    rng = np.random.default_rng(16)
    for _ in range(5):
        prior = random_prior(rng)
        _, criteria = greedy_selection_walk(MtgpPosterior.from_prior(prior), 30)
        assert (np.diff(criteria) <= 1e-9).all()


def test_snapshot_csv(tmp_path):
    prior = random_prior(np.random.default_rng(17), max_vertices=3, max_tasks=2)
    post = MtgpPosterior.from_prior(prior)
    path = tmp_path / "posterior.csv"
    from multicover.gp import snapshot_csv

    snapshot_csv(post, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "vertex,task,mean,block_trace"
    assert len(lines) == 1 + prior.vertex_count * prior.task_count
