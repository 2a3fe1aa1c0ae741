"""Epoch-structured adaptive coverage: explore, propagate, cover.

Each epoch shrinks the exploration uncertainty target geometrically and runs
the federated coverage loop on the refreshed demand estimate for a
geometrically growing duration. A randomized baseline (run_rmlc) samples its
own region's most uncertain vertex with a probability tied to the residual
uncertainty instead of following a deterministic schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .coverage import ServiceModel, center_objective, equitable_partition, multitask_cost
from .demand import DemandField
from .env import Covering, Environment
from .federated import CommSchedule, FmcState, fmc_step
from .gp import ExplorationBudgetError, MtgpPosterior, MtgpPrior, exploration_batch
from .regret import RegretTrace, instantaneous_regret


@dataclass
class EpochConfig:
    alpha: float
    beta: float
    horizon: int
    tau: float | None = None
    max_epochs: int = 60

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.beta <= 1:
            raise ValueError("beta must exceed 1")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")

    @classmethod
    def theorem_matched(cls, beta: float, horizon: int, **kwargs) -> "EpochConfig":
        """Epoch schedule with alpha tied to beta**(-2/3)."""
        return cls(alpha=beta ** (-2.0 / 3.0), beta=beta, horizon=horizon, **kwargs)


@dataclass
class RmlcConfig:
    kappa: float = 0.1

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")


@dataclass
class StepRecord:
    step: int
    phase: str
    epoch: int
    regret: float
    cumulative: float
    cost_true: float
    cost_estimated: float
    max_block_trace: float


@dataclass
class PhaseSpan:
    epoch: int
    phase: str
    start: int
    end: int  # exclusive


@dataclass
class AdaptiveRun:
    trace: RegretTrace
    records: list[StepRecord]
    state: FmcState
    positions: np.ndarray
    posterior: MtgpPosterior
    spans: list[PhaseSpan] = dataclass_field(default_factory=list)


@dataclass
class ExplorationPlan:
    threshold: float
    batch: list[int]
    assignment: list[int]
    routes: list[list[int]]

    @property
    def duration(self) -> int:
        return max((len(r) for r in self.routes), default=0)


def nearest_neighbor_route(env: Environment, points, start: int) -> list[int]:
    """Order points by repeated nearest-from-current, lowest vertex on ties."""
    remaining = sorted(int(p) for p in points)
    route: list[int] = []
    current = int(start)
    while remaining:
        dists = env.dist[current, remaining]
        k = int(np.argmin(dists))
        current = remaining.pop(k)
        route.append(current)
    return route


def exploration_anchors(
    env: Environment,
    model: ServiceModel,
    estimate: DemandField,
    cov: Covering,
    positions: np.ndarray,
) -> np.ndarray:
    """Per-robot anchor vertices for sample assignment: the robot's center.

    Robots whose sets carry no estimated demand (including robots owning
    nothing) anchor at their current position instead of a degenerate argmin.
    """
    anchors = np.empty(cov.robot_count, dtype=int)
    for i in range(cov.robot_count):
        obj = center_objective(env, model, estimate, cov, i)
        anchors[i] = positions[i] if obj.max() <= 0 else int(obj.argmin())
    return anchors


def _assign_and_route(batch, centers, env: Environment) -> tuple[list[int], list[list[int]]]:
    assignment = [int(np.argmin(env.dist[centers, v])) for v in batch]
    routes = [
        nearest_neighbor_route(env, [v for v, r in zip(batch, assignment) if r == i], centers[i])
        for i in range(len(centers))
    ]
    return assignment, routes


def exploration_phase(
    epoch: int,
    post: MtgpPosterior,
    centers: np.ndarray,
    env: Environment,
    alpha: float,
    tau: float,
    max_points: int = 1_000_000,
) -> ExplorationPlan:
    """Plan the epoch's sampling: greedy batch, nearest-center assignment, routes.

    The plan is covariance-only (no measurements involved) and leaves ``post``
    untouched. An empty batch means the uncertainty target is already met.
    """
    if epoch < 1:
        raise ValueError("epochs are numbered from 1")
    threshold = (alpha**epoch) * tau
    batch = exploration_batch(post, threshold, max_points)
    assignment, routes = _assign_and_route(batch, centers, env)
    return ExplorationPlan(threshold, batch, assignment, routes)


def propagation_phase(
    samples: list[tuple[int, np.ndarray]],
    post: MtgpPosterior,
) -> DemandField:
    """Fold the epoch's samples into the posterior; return the clamped mean estimate."""
    for vertex, obs in samples:
        post.update(int(vertex), obs)
    values = np.maximum(0.0, post.mean).reshape(post.vertex_count, post.task_count)
    return DemandField(values)


def coverage_duration(beta: float, epoch: int) -> int:
    return math.ceil(beta**epoch)


def coverage_phase(
    epoch: int,
    state: FmcState,
    estimate: DemandField,
    contacts,
    env: Environment,
    model: ServiceModel,
    beta: float,
    max_steps: int | None = None,
) -> tuple[FmcState, list[FmcState]]:
    """Run ceil(beta**epoch) coverage contacts on the estimated demand."""
    steps = coverage_duration(beta, epoch)
    if max_steps is not None:
        steps = min(steps, max_steps)
    states = []
    for _ in range(steps):
        state, _ = fmc_step(state, next(contacts), env, model, estimate)
        states.append(state)
    return state, states


def _initial_positions(env: Environment, n_robots: int, rng: np.random.Generator) -> np.ndarray:
    replace = n_robots > env.vertex_count
    return np.sort(rng.choice(env.vertex_count, size=n_robots, replace=replace)).astype(int)


def _clamped_mean_field(post: MtgpPosterior) -> DemandField:
    values = np.maximum(0.0, post.mean).reshape(post.vertex_count, post.task_count)
    return DemandField(values)


def run_dsmlc(
    env: Environment,
    model: ServiceModel,
    true_field: DemandField,
    prior: MtgpPrior,
    epoch_cfg: EpochConfig,
    schedule: CommSchedule,
    seed: int,
    initial_config: np.ndarray | None = None,
    demand_oracle: bool = False,
) -> AdaptiveRun:
    """Deterministic sequencing of exploration, propagation, and coverage.

    Regret is charged every simulated step against the true field: exploration
    steps move robots along their sampling routes with the covering frozen,
    propagation costs one step per robot, coverage follows the federated
    update on the current estimate. With demand_oracle the estimate is pinned
    to the true field (sampling still runs on schedule).
    """
    rng = np.random.default_rng(seed)
    n = model.robot_count
    noise_sd = math.sqrt(prior.noise_var)

    if initial_config is None:
        config = _initial_positions(env, n, rng)
    else:
        config = np.asarray(initial_config, dtype=int).copy()
    estimate = true_field if demand_oracle else _clamped_mean_field(
        MtgpPosterior.from_prior(prior)
    )
    state = FmcState(config.copy(), equitable_partition(env, model, estimate, config), 0)
    positions = config.copy()
    post = MtgpPosterior.from_prior(prior)
    tau = epoch_cfg.tau if epoch_cfg.tau is not None else float(post.block_traces().max())

    trace = RegretTrace()
    records: list[StepRecord] = []
    spans: list[PhaseSpan] = []
    contacts = schedule.contacts(n)
    step = 0
    horizon = epoch_cfg.horizon

    def record(phase: str, epoch: int) -> None:
        regret = instantaneous_regret(env, model, true_field, positions, state.cov)
        trace.append(regret, phase)
        records.append(
            StepRecord(
                step=step,
                phase=phase,
                epoch=epoch,
                regret=regret,
                cumulative=trace.cumulative[-1],
                cost_true=multitask_cost(env, model, true_field, positions, state.cov).total,
                cost_estimated=multitask_cost(env, model, estimate, positions, state.cov).total,
                max_block_trace=float(post.block_traces().max()),
            )
        )

    for epoch in range(1, epoch_cfg.max_epochs + 1):
        if step >= horizon:
            break

        # Exploration: plan against the current posterior, cap at what the
        # remaining horizon could possibly execute.
        anchors = exploration_anchors(env, model, estimate, state.cov, positions)
        cap = n * (horizon - step) + n
        try:
            plan = exploration_phase(epoch, post, anchors, env,
                                     epoch_cfg.alpha, tau, max_points=cap)
        except ExplorationBudgetError as err:
            # More samples needed than the horizon can execute; run what fits.
            assignment, routes = _assign_and_route(err.partial, anchors, env)
            plan = ExplorationPlan((epoch_cfg.alpha**epoch) * tau, err.partial,
                                   assignment, routes)

        collected: list[tuple[int, np.ndarray]] = []
        start = step
        for k in range(plan.duration):
            if step >= horizon:
                break
            for i in range(n):
                if k < len(plan.routes[i]):
                    v = plan.routes[i][k]
                    positions[i] = v
                    obs = true_field.values[v] + rng.normal(0.0, noise_sd, size=model.task_count)
                    collected.append((v, obs))
            record("exploration", epoch)
            step += 1
        if step > start:
            spans.append(PhaseSpan(epoch, "exploration", start, step))
        state = FmcState(positions.copy(), state.cov, state.step)

        # Propagation: one upload step per robot, then the estimate refresh.
        start = step
        for _ in range(n):
            if step >= horizon:
                break
            record("propagation", epoch)
            step += 1
        if step > start:
            spans.append(PhaseSpan(epoch, "propagation", start, step))
        new_estimate = propagation_phase(collected, post)
        if not demand_oracle:
            estimate = new_estimate

        # Coverage: federated updates on the estimate, regret on the truth.
        start = step
        duration = coverage_duration(epoch_cfg.beta, epoch)
        for _ in range(duration):
            if step >= horizon:
                break
            state, _ = fmc_step(state, next(contacts), env, model, estimate)
            positions = state.config.copy()
            record("coverage", epoch)
            step += 1
        if step > start:
            spans.append(PhaseSpan(epoch, "coverage", start, step))
    else:
        if step < horizon:
            raise RuntimeError(
                f"horizon {horizon} not reached within {epoch_cfg.max_epochs} epochs"
            )

    return AdaptiveRun(trace, records, state, positions, post, spans)


def run_rmlc(
    env: Environment,
    model: ServiceModel,
    true_field: DemandField,
    prior: MtgpPrior,
    rmlc_cfg: RmlcConfig,
    schedule: CommSchedule,
    seed: int,
    horizon: int = 1000,
    initial_config: np.ndarray | None = None,
) -> AdaptiveRun:
    """Randomized learning-and-coverage baseline.

    Per step one robot contacts the base station (uploading its buffered
    samples, refreshing the estimate, receiving one federated coverage update,
    and taking away a posterior snapshot); then every robot either follows its
    suggested position or, with probability tied to its region's residual
    uncertainty, samples its region's most uncertain vertex. Robots act on the
    snapshot from their own last contact, matching the one-at-a-time
    information exchange of the federated model.
    """
    rng = np.random.default_rng(seed)
    n = model.robot_count
    noise_sd = math.sqrt(prior.noise_var)

    if initial_config is None:
        config = _initial_positions(env, n, rng)
    else:
        config = np.asarray(initial_config, dtype=int).copy()
    post = MtgpPosterior.from_prior(prior)
    estimate = _clamped_mean_field(post)
    state = FmcState(config.copy(), equitable_partition(env, model, estimate, config), 0)
    positions = config.copy()
    pending: list[list[tuple[int, np.ndarray]]] = [[] for _ in range(n)]
    known_traces = [post.block_traces() for _ in range(n)]
    known_region = [state.cov.owned[:, i, :].any(axis=0) for i in range(n)]
    contacts = schedule.contacts(n)

    trace = RegretTrace()
    records: list[StepRecord] = []
    for step in range(horizon):
        robot = next(contacts)
        for vertex, obs in pending[robot]:
            post.update(vertex, obs)
        pending[robot] = []
        estimate = _clamped_mean_field(post)
        state, _ = fmc_step(state, robot, env, model, estimate)
        known_traces[robot] = post.block_traces()
        known_region[robot] = state.cov.owned[:, robot, :].any(axis=0)

        for i in range(n):
            verts = np.flatnonzero(known_region[i])
            max_unc = float(known_traces[i][verts].max()) if verts.size else 0.0
            p_sample = max_unc / (max_unc + rmlc_cfg.kappa)
            if rng.random() < p_sample:
                target = int(verts[np.argmax(known_traces[i][verts])])
                positions[i] = target
                obs = true_field.values[target] + rng.normal(0.0, noise_sd, size=model.task_count)
                pending[i].append((target, obs))
            else:
                positions[i] = state.config[i]

        regret = instantaneous_regret(env, model, true_field, positions, state.cov)
        trace.append(regret, "coverage")
        records.append(
            StepRecord(
                step=step,
                phase="coverage",
                epoch=0,
                regret=regret,
                cumulative=trace.cumulative[-1],
                cost_true=multitask_cost(env, model, true_field, positions, state.cov).total,
                cost_estimated=multitask_cost(env, model, estimate, positions, state.cov).total,
                max_block_trace=float(post.block_traces().max()),
            )
        )

    return AdaptiveRun(trace, records, state, positions, post,
                       [PhaseSpan(0, "coverage", 0, horizon)])
