import numpy as np
import pytest

from multicover import (
    CommSchedule,
    Covering,
    DemandField,
    LinearServiceModel,
    RegretTrace,
    accumulate,
    build_grid,
    equitable_partition,
    initial_state,
    instantaneous_regret,
    loglog_slope,
    multitask_centers,
    multitask_cost,
    run_to_convergence,
)
from multicover.oracles import brute_force_regret

from helpers import random_instance


def converged_instance(seed):
    rng = np.random.default_rng(seed)
    env = build_grid(5, 5)
    model = LinearServiceModel(rng.uniform(0.4, 2.4, size=(3, 2)))
    field = DemandField(rng.uniform(0.0, 1.0, size=(25, 2)))
    state = initial_state(env, model, field, rng.integers(0, 25, size=3))
    run = run_to_convergence(state, CommSchedule(), env, model, field)
    return env, model, field, run.final


@pytest.mark.parametrize("seed", range(5))
def test_zero_regret_at_mcep(seed):
    env, model, field, final = converged_instance(seed)
    assert instantaneous_regret(env, model, field, final.config, final.cov) == \
        pytest.approx(0.0, abs=1e-9)


def test_partition_gap_only_when_config_at_centers():
    env = build_grid(1, 5)
    model = LinearServiceModel(np.array([[1.0], [2.0]]))
    field = DemandField(np.ones((5, 1)))
    # covering assigns everything to the slower robot: equitable gap is positive
    cov = Covering.from_sets([[[], [0, 1, 2, 3, 4]]], 5)
    config = multitask_centers(env, model, field, cov, config=np.array([0, 0]))
    r = instantaneous_regret(env, model, field, config, cov)
    current = multitask_cost(env, model, field, config, cov).total
    best_cov = equitable_partition(env, model, field, config)
    expected = current - multitask_cost(env, model, field, config, best_cov).total
    assert r == pytest.approx(expected, abs=1e-12)
    assert r > 0


def test_regret_matches_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(15):
        env, model, field, config, cov = random_instance(rng, max_vertices=5)
        fast = instantaneous_regret(env, model, field, config, cov)
        slow = brute_force_regret(env, model, field, config, cov)
        assert fast == pytest.approx(slow, abs=1e-9)


def test_regret_nonnegative():
    rng = np.random.default_rng(2)
    for _ in range(40):
        env, model, field, config, cov = random_instance(rng)
        assert instantaneous_regret(env, model, field, config, cov) >= -1e-9


def test_regret_positive_off_mcep():
    env, model, field, final = converged_instance(7)
    rng = np.random.default_rng(3)
    found = 0
    while found < 20:
        config = final.config.copy()
        config[rng.integers(len(config))] = rng.integers(env.vertex_count)
        if np.array_equal(config, final.config):
            continue
        r = instantaneous_regret(env, model, field, config, final.cov)
        if r > 1e-9:
            found += 1
    assert found == 20


def test_accumulate_and_trace():
    trace = RegretTrace()
    accumulate(trace, 1.5, "exploration")
    assert trace.cumulative == [1.5]
    accumulate(trace, 0.25, "coverage")
    accumulate(trace, 0.0, "propagation")
    assert trace.phases == ["exploration", "coverage", "propagation"]
    assert trace.cumulative[-1] == pytest.approx(sum(trace.instantaneous))
    with pytest.raises(ValueError):
        accumulate(trace, float("nan"), "coverage")


def test_loglog_slope_linear_growth():
    trace = RegretTrace.from_values(np.ones(400))
    assert loglog_slope(trace, 0.5) == pytest.approx(1.0, abs=0.01)


def test_loglog_slope_two_thirds_growth():
    t = np.arange(1, 601, dtype=float)
    cumulative = t ** (2.0 / 3.0)
    inst = np.diff(np.concatenate([[0.0], cumulative]))
    trace = RegretTrace.from_values(inst)
    assert loglog_slope(trace, 0.5) == pytest.approx(2.0 / 3.0, abs=0.01)


def test_loglog_slope_rejects_nonpositive_window():
    trace = RegretTrace.from_values([0.0, 0.0, 1.0, 1.0])
    with pytest.raises(ValueError, match="positive"):
        loglog_slope(trace, 1.0)
    # trailing window avoiding the zeros is fine
    assert loglog_slope(trace, 0.5) > 0
