"""Federated multitask coverage: one-robot-at-a-time base-station updates.

Each contact relocates the contacting robot to a position minimizing the
best-assignment cost, then grows its sets by the vertices it now serves
strictly better than everyone else and sheds multiply-owned vertices it
serves no better than the best other robot.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Iterator

import numpy as np

from .coverage import ServiceModel, equitable_partition, h_inf, multitask_cost, service_costs
from .demand import DemandField
from .env import Covering, Environment, overlap_count


@dataclass
class FmcState:
    config: np.ndarray
    cov: Covering
    step: int = 0

    def copy(self) -> "FmcState":
        return FmcState(self.config.copy(), self.cov.copy(), self.step)

    def same_as(self, other: "FmcState") -> bool:
        return np.array_equal(self.config, other.config) and self.cov == other.cov


@dataclass
class StepReport:
    robot: int
    relocated: bool
    moved_to: int
    sets_changed: bool
    u1: float
    u2: float
    u3: int
    total_cost: float

    @property
    def changed(self) -> bool:
        return self.relocated or self.sets_changed


@dataclass
class CommSchedule:
    """Base-station contact sequence: exactly one robot per event.

    round-robin cycles 0..N-1 (inter-contact gap exactly N). bounded-random
    draws uniformly among robots idle for at least ``lower`` events, serving
    any robot that hits ``upper`` immediately; requires lower <= N <= upper.
    """

    mode: str = "round-robin"
    lower: int = 1
    upper: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("round-robin", "bounded-random"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if self.lower < 1:
            raise ValueError("lower contact bound must be >= 1")
        if self.upper is not None and self.upper <= self.lower:
            raise ValueError("upper contact bound must exceed lower")

    def contacts(self, n_robots: int) -> Iterator[int]:
        if self.mode == "round-robin":
            return self._round_robin(n_robots)
        return self._bounded_random(n_robots)

    @staticmethod
    def _round_robin(n_robots: int) -> Iterator[int]:
        t = 0
        while True:
            yield t % n_robots
            t += 1

    def _bounded_random(self, n_robots: int) -> Iterator[int]:
        upper = self.upper if self.upper is not None else max(2 * n_robots, self.lower + 1)
        if not (self.lower <= n_robots <= upper):
            raise ValueError("bounded-random schedule needs lower <= n_robots <= upper")
        rng = np.random.default_rng(self.seed)
        last = np.empty(n_robots, dtype=int)
        t = 0
        for i in range(n_robots):
            yield i
            last[i] = t
            t += 1
        while True:
            # Last-contact times are distinct, so at most one robot sits at the
            # upper gap bound; serving it keeps every gap within [lower, upper].
            gaps = t - last
            if gaps.max() >= upper:
                pick = int(gaps.argmax())
            else:
                pick = int(rng.choice(np.flatnonzero(gaps >= self.lower)))
            yield pick
            last[pick] = t
            t += 1


def candidate_relocation_costs(
    env: Environment,
    model: ServiceModel,
    field: DemandField,
    config: np.ndarray,
    robot: int,
) -> np.ndarray:
    """Best-assignment cost for each candidate position of one robot.

    Entry c is the cost with the robot moved to vertex c and every
    (vertex, task) served by its cheapest robot.
    """
    costs = service_costs(env, model, config)
    masked = costs.copy()
    masked[robot] = np.inf
    other_min = masked.min(axis=0)
    cand = np.zeros(env.vertex_count)
    for j in range(model.task_count):
        own = model.cost(robot, j, env.dist)
        cand += np.minimum(own, other_min[j][None, :]) @ field.values[:, j]
    return cand


def fmc_step(
    state: FmcState,
    robot: int,
    env: Environment,
    model: ServiceModel,
    field: DemandField,
) -> tuple[FmcState, StepReport]:
    """One base-station contact: relocate the robot, then update its sets."""
    config = state.config.copy()
    cand = candidate_relocation_costs(env, model, field, config, robot)
    best = cand.min()
    relocated = cand[config[robot]] > best
    if relocated:
        config[robot] = int(cand.argmin())

    costs = service_costs(env, model, config)
    masked = costs.copy()
    masked[robot] = np.inf
    other_min = masked.min(axis=0)

    owned = state.cov.owned.copy()
    others_own = np.delete(owned, robot, axis=1).any(axis=1)
    self_cost = costs[robot]
    gain = self_cost < other_min
    shed = owned[:, robot, :] & others_own & (self_cost >= other_min)
    new_row = (owned[:, robot, :] & ~shed) | gain
    sets_changed = not np.array_equal(new_row, owned[:, robot, :])
    owned[:, robot, :] = new_row

    new_state = FmcState(config, Covering(owned), state.step + 1)
    u1, u2, u3 = lyapunov_values(new_state, env, model, field)
    report = StepReport(
        robot=robot,
        relocated=bool(relocated),
        moved_to=int(config[robot]),
        sets_changed=sets_changed,
        u1=u1,
        u2=u2,
        u3=u3,
        total_cost=multitask_cost(env, model, field, config, new_state.cov).total,
    )
    return new_state, report


def lyapunov_values(
    state: FmcState,
    env: Environment,
    model: ServiceModel,
    field: DemandField,
) -> tuple[float, float, int]:
    """(U1, U2, U3): best-assignment cost, best-owner cost, total ownership count."""
    if not state.cov.covers_all():
        raise ValueError("covering leaves vertices unowned for some task")
    u1 = h_inf(env, model, field, state.config)
    costs = service_costs(env, model, state.config)
    owned_costs = np.where(state.cov.owned.transpose(1, 0, 2), costs, np.inf)
    u2 = float((owned_costs.min(axis=0) * field.values.T).sum())
    return u1, u2, overlap_count(state.cov)


def initial_state(
    env: Environment,
    model: ServiceModel,
    field: DemandField,
    config: np.ndarray,
    cov: Covering | None = None,
) -> FmcState:
    """Starting state; when no covering is given, each task gets the cheapest-robot partition."""
    if cov is None:
        cov = equitable_partition(env, model, field, config)
    return FmcState(np.asarray(config, dtype=int).copy(), cov.copy(), 0)


@dataclass
class FmcRun:
    states: list[FmcState]
    reports: list[StepReport]
    contacts: list[int]
    converged_step: int | None = dataclass_field(default=None)

    @property
    def final(self) -> FmcState:
        return self.states[-1]


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, run: FmcRun):
        super().__init__(message)
        self.run = run


def run_to_convergence(
    initial: FmcState,
    schedule: CommSchedule,
    env: Environment,
    model: ServiceModel,
    field: DemandField,
    max_steps: int = 100_000,
) -> FmcRun:
    """Iterate contacts until N consecutive ones leave the state unchanged.

    Returns the full trajectory and the first quiescent step (the index after
    the last state change). Raises ConvergenceError carrying the trajectory if
    max_steps is exhausted first.
    """
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    n = model.robot_count
    state = initial.copy()
    run = FmcRun([state], [], [])
    unchanged = 0
    last_change = -1
    for step, robot in enumerate(schedule.contacts(n)):
        if step >= max_steps:
            raise ConvergenceError(f"no quiescence within {max_steps} contacts", run)
        state, report = fmc_step(state, robot, env, model, field)
        run.states.append(state)
        run.reports.append(report)
        run.contacts.append(robot)
        if report.changed:
            unchanged = 0
            last_change = step
        else:
            unchanged += 1
            if unchanged >= n:
                run.converged_step = last_change + 1
                return run
    raise ConvergenceError("contact schedule exhausted", run)
