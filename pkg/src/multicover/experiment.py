"""Experiment harness: config parsing, scenario construction, runs, artifacts.

A run directory holds, per seed, the delimited traces plus rendered SVG
figures, with a machine-readable summary at the top level. All outputs except
the summary timestamp are byte-deterministic in (config, seed).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field as dataclass_field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import plots
from .coverage import LinearServiceModel, ServiceModel
from .demand import DemandField, random_kernels, synthesize_gaussian_mixture
from .dsmlc import EpochConfig, RmlcConfig, run_dsmlc, run_rmlc
from .env import Covering, Environment, environment_from_json, partition_map
from .federated import CommSchedule, fmc_step, initial_state
from .gp import MtgpPrior, se_kernel_matrix, snapshot_csv
from .regret import RegretTrace, instantaneous_regret, loglog_slope


class ConfigError(ValueError):
    """Invalid experiment configuration; names the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class ExperimentConfig:
    environment: dict
    robots: dict
    demand: dict
    prior: dict
    algorithm: dict
    horizon: int
    seeds: list[int]
    output_dir: str

    REQUIRED = ("environment", "robots", "demand", "prior", "algorithm",
                "horizon", "seeds", "output_dir")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        for key in cls.REQUIRED:
            if key not in doc:
                raise ConfigError(key, "missing required field")
        if not isinstance(doc["horizon"], int) or doc["horizon"] < 1:
            raise ConfigError("horizon", "must be a positive integer")
        if not doc["seeds"]:
            raise ConfigError("seeds", "must list at least one seed")
        algo = doc["algorithm"].get("name")
        if algo not in ("dsmlc", "rmlc", "fmc"):
            raise ConfigError("algorithm.name", f"unknown algorithm {algo!r}")
        return cls(
            environment=doc["environment"],
            robots=doc["robots"],
            demand=doc["demand"],
            prior=doc["prior"],
            algorithm=doc["algorithm"],
            horizon=doc["horizon"],
            seeds=list(doc["seeds"]),
            output_dir=doc["output_dir"],
        )

    def to_dict(self) -> dict:
        return {
            "environment": self.environment,
            "robots": self.robots,
            "demand": self.demand,
            "prior": self.prior,
            "algorithm": self.algorithm,
            "horizon": self.horizon,
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def default_firefighting_config(output_dir: str = "out") -> dict:
    """The stock heterogeneous two-task scenario on a 21x21 grid.

    Nine robots, two tasks; three robots (indices 1, 3, 6) carry the cheaper
    task-2 capability. Demand kernels are fixed documented defaults (three
    per task).
    """
    return {
        "environment": {"grid": [21, 21], "weight": 1.0},
        "robots": {
            "count": 9,
            "tasks": 2,
            "coefficient_rule": {
                "base": [1.0, 2.3],
                "scale": [0.2, 0.25],
                "floor": 0.25,
                "capable": {"task": 1, "robots": [1, 3, 6], "base": 1.5, "scale": 0.25},
            },
        },
        "demand": {
            "kernels": [
                [[110, 1.0, 2.5], [323, 0.8, 3.0], [184, 0.6, 2.0]],
                [[352, 1.0, 2.0], [98, 0.7, 2.5], [234, 0.5, 3.0]],
            ]
        },
        "prior": {
            "sigma_v2": 1.0,
            "length_scale": 0.18,
            "correlation": 0.65,
            "noise_sigma": 0.2,
            "mean": 0.0,
            "unit_coords": True,
        },
        "algorithm": {"name": "dsmlc", "alpha": 0.5, "beta": 2.0},
        "horizon": 2000,
        "seeds": [0],
        "output_dir": output_dir,
    }


@dataclass
class Scenario:
    env: Environment
    model: ServiceModel
    field: DemandField
    prior: MtgpPrior
    coefficients: np.ndarray


def _unit_coords(coords: np.ndarray) -> np.ndarray:
    lo = coords.min(axis=0)
    span = (coords.max(axis=0) - lo).max()
    if span <= 0:
        return coords - lo
    return (coords - lo) / span


def _build_model(robots: dict, rng: np.random.Generator) -> np.ndarray:
    n = robots.get("count")
    m = robots.get("tasks")
    if not isinstance(n, int) or n < 1:
        raise ConfigError("robots.count", "must be a positive integer")
    if not isinstance(m, int) or m < 1:
        raise ConfigError("robots.tasks", "must be a positive integer")
    if "coefficients" in robots:
        coeffs = np.asarray(robots["coefficients"], dtype=float)
        if coeffs.shape != (n, m):
            raise ConfigError("robots.coefficients", f"expected shape ({n}, {m})")
        if (coeffs <= 0).any():
            raise ConfigError("robots.coefficients", "must be strictly positive")
        return coeffs
    rule = robots.get("coefficient_rule")
    if rule is None:
        raise ConfigError("robots", "needs coefficients or coefficient_rule")
    base, scale = rule.get("base"), rule.get("scale")
    if base is None or len(base) != m:
        raise ConfigError("robots.coefficient_rule.base", f"needs {m} entries")
    if scale is None or len(scale) != m:
        raise ConfigError("robots.coefficient_rule.scale", f"needs {m} entries")
    floor = float(rule.get("floor", 0.25))
    xi = rng.standard_normal(n)
    coeffs = np.maximum(floor, np.asarray(base)[None, :] + np.asarray(scale)[None, :] * xi[:, None])
    capable = rule.get("capable")
    if capable is not None:
        task = capable["task"]
        if not (0 <= task < m):
            raise ConfigError("robots.coefficient_rule.capable.task", "task index out of range")
        idx = list(capable["robots"])
        if any(i < 0 or i >= n for i in idx):
            raise ConfigError("robots.coefficient_rule.capable.robots", "robot index out of range")
        coeffs[idx, task] = np.maximum(
            floor, capable["base"] + capable["scale"] * xi[idx]
        )
    return coeffs


def build_scenario(config: ExperimentConfig, seed: int) -> Scenario:
    """Construct the immutable inputs for one seeded run."""
    root = np.random.SeedSequence(seed)
    scen_seed, demand_seed = root.spawn(2)
    rng = np.random.default_rng(scen_seed)

    try:
        env = environment_from_json(config.environment)
    except (KeyError, ValueError) as err:
        raise ConfigError("environment", str(err)) from err

    coeffs = _build_model(config.robots, rng)
    model = LinearServiceModel(coeffs)

    demand = config.demand
    m = config.robots["tasks"]
    if "kernels" in demand:
        kernels = [[tuple(k) for k in task] for task in demand["kernels"]]
        if len(kernels) != m:
            raise ConfigError("demand.kernels", f"needs one kernel list per task ({m})")
    elif "random" in demand:
        per_task = int(demand["random"].get("per_task", 3))
        kernels = random_kernels(env, m, per_task,
                                 int(demand_seed.generate_state(1)[0] % 2**31))
    else:
        raise ConfigError("demand", "needs kernels or random")
    try:
        field = synthesize_gaussian_mixture(env, kernels)
    except ValueError as err:
        raise ConfigError("demand.kernels", str(err)) from err

    prior_doc = config.prior
    sigma_v2 = float(prior_doc.get("sigma_v2", 1.0))
    length_scale = float(prior_doc.get("length_scale", 0.18))
    noise_sigma = float(prior_doc.get("noise_sigma", 0.2))
    if noise_sigma <= 0:
        raise ConfigError("prior.noise_sigma", "must be positive")
    if env.coords is None:
        raise ConfigError("environment", "prior kernel needs vertex coordinates")
    coords = env.coords
    if prior_doc.get("unit_coords", True):
        coords = _unit_coords(coords)
    spatial = se_kernel_matrix(coords, sigma_v2, length_scale)
    if "task_cov" in prior_doc:
        task_cov = np.asarray(prior_doc["task_cov"], dtype=float)
        if task_cov.shape != (m, m):
            raise ConfigError("prior.task_cov", f"expected shape ({m}, {m})")
    else:
        rho = float(prior_doc.get("correlation", 0.0))
        if not -1.0 < rho < 1.0:
            raise ConfigError("prior.correlation", "must lie in (-1, 1)")
        task_cov = np.full((m, m), rho)
        np.fill_diagonal(task_cov, 1.0)
    mean_doc = prior_doc.get("mean", 0.0)
    dim = env.vertex_count * m
    mean = np.full(dim, float(mean_doc)) if np.isscalar(mean_doc) else np.asarray(mean_doc)
    try:
        prior = MtgpPrior(spatial, task_cov, noise_sigma**2, mean)
    except ValueError as err:
        raise ConfigError("prior", str(err)) from err
    return Scenario(env, model, field, prior, coeffs)


@dataclass
class RunArtifacts:
    out_dir: Path
    trace_csvs: list[Path] = dataclass_field(default_factory=list)
    snapshot_csvs: list[Path] = dataclass_field(default_factory=list)
    figure_svgs: list[Path] = dataclass_field(default_factory=list)
    summary_json: Path | None = None


def _fmt(x: float) -> str:
    return repr(float(x))


def write_adaptive_trace(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "phase", "epoch", "regret", "cumulative_regret",
                         "cost_true", "cost_estimated", "max_block_trace"])
        for r in records:
            writer.writerow([r.step, r.phase, r.epoch, _fmt(r.regret), _fmt(r.cumulative),
                             _fmt(r.cost_true), _fmt(r.cost_estimated),
                             _fmt(r.max_block_trace)])


def write_fmc_trace(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "robot_contacted", "relocated", "U1", "U2", "U3",
                         "total_cost"])
        for row in rows:
            step, robot, relocated, u1, u2, u3, cost = row
            writer.writerow([step, robot, int(relocated), _fmt(u1), _fmt(u2), u3,
                             _fmt(cost)])


def write_partition_map(cov: Covering, path) -> None:
    codes = partition_map(cov)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["vertex", "task", "owner_code"])
        for v in range(codes.shape[0]):
            for j in range(codes.shape[1]):
                writer.writerow([v, j, codes[v, j]])


def _run_fmc_known_demand(scenario: Scenario, horizon: int, seed) -> dict:
    """Known-demand federated coverage, traced per contact up to the horizon."""
    rng = np.random.default_rng(seed)
    n = scenario.model.robot_count
    replace = n > scenario.env.vertex_count
    config = np.sort(rng.choice(scenario.env.vertex_count, size=n, replace=replace))
    state = initial_state(scenario.env, scenario.model, scenario.field, config)
    schedule = CommSchedule("round-robin")
    contacts = schedule.contacts(n)
    rows = []
    regrets = RegretTrace()
    unchanged = 0
    converged = None
    for step in range(horizon):
        state, report = fmc_step(state, next(contacts), scenario.env, scenario.model,
                                 scenario.field)
        rows.append((step, report.robot, report.relocated, report.u1, report.u2,
                     report.u3, report.total_cost))
        regrets.append(
            instantaneous_regret(scenario.env, scenario.model, scenario.field,
                                 state.config, state.cov),
            "coverage",
        )
        if report.changed:
            unchanged = 0
        else:
            unchanged += 1
            if unchanged >= n and converged is None:
                converged = step - n + 1
                break
    return {"rows": rows, "state": state, "regrets": regrets, "converged": converged}


def run_experiment(config: ExperimentConfig) -> RunArtifacts:
    """Execute the configured algorithm for every seed and write all artifacts."""
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = RunArtifacts(out_dir)
    algo = config.algorithm["name"]

    with open(out_dir / "config.json", "w") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    summaries = []
    for seed in config.seeds:
        scenario = build_scenario(config, seed)
        seed_dir = out_dir / f"seed-{seed}"
        fig_dir = seed_dir / "figures"
        fig_dir.mkdir(parents=True, exist_ok=True)
        run_seed = np.random.SeedSequence(seed).spawn(3)[2]

        scenario.field.to_csv(seed_dir / "demand.csv")
        trace_csv = seed_dir / "trace.csv"
        summary = {"algorithm": algo, "seed": seed, "T": config.horizon,
                   "final_cumulative_regret": None, "slope": None, "converged_step": None}

        if algo == "fmc":
            result = _run_fmc_known_demand(scenario, config.horizon, run_seed)
            write_fmc_trace(result["rows"], trace_csv)
            write_partition_map(result["state"].cov, seed_dir / "partition_map.csv")
            summary["final_cumulative_regret"] = result["regrets"].cumulative[-1]
            summary["converged_step"] = result["converged"]
            trace_for_slope = result["regrets"]
        else:
            schedule = CommSchedule("round-robin")
            if algo == "dsmlc":
                epoch_cfg = EpochConfig(
                    alpha=float(config.algorithm.get("alpha", 0.5)),
                    beta=float(config.algorithm.get("beta", 2.0)),
                    horizon=config.horizon,
                    max_epochs=int(config.algorithm.get("max_epochs", 60)),
                )
                run = run_dsmlc(scenario.env, scenario.model, scenario.field,
                                scenario.prior, epoch_cfg, schedule, run_seed)
            else:
                rmlc_cfg = RmlcConfig(kappa=float(config.algorithm.get("kappa", 0.1)))
                run = run_rmlc(scenario.env, scenario.model, scenario.field,
                               scenario.prior, rmlc_cfg, schedule, run_seed,
                               horizon=config.horizon)
            write_adaptive_trace(run.records, trace_csv)
            write_partition_map(run.state.cov, seed_dir / "partition_map.csv")
            snapshot_path = seed_dir / "posterior.csv"
            snapshot_csv(run.posterior, snapshot_path)
            artifacts.snapshot_csvs.append(snapshot_path)
            summary["final_cumulative_regret"] = run.trace.cumulative[-1]
            trace_for_slope = run.trace

        try:
            summary["slope"] = loglog_slope(trace_for_slope, 0.5)
        except ValueError:
            summary["slope"] = None

        artifacts.trace_csvs.append(trace_csv)
        artifacts.snapshot_csvs.append(seed_dir / "partition_map.csv")
        artifacts.figure_svgs.extend(
            render_seed_figures(seed_dir, scenario.env.grid_shape, algo)
        )
        summaries.append(summary)

    summary_path = out_dir / "summary.json"
    with open(summary_path, "w") as fh:
        json.dump(
            {"generated_at": datetime.now(timezone.utc).isoformat(), "runs": summaries},
            fh, indent=2, sort_keys=True,
        )
        fh.write("\n")
    artifacts.summary_json = summary_path
    return artifacts


def render_seed_figures(seed_dir: Path, grid_shape, algo: str) -> list[Path]:
    """Render every figure derivable from one seed directory's CSVs."""
    seed_dir = Path(seed_dir)
    fig_dir = seed_dir / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    out: list[Path] = []

    trace_csv = seed_dir / "trace.csv"
    out.append(plots.plot_trace(trace_csv, fig_dir / "trace.svg"))
    if algo in ("dsmlc", "rmlc"):
        try:
            out.append(plots.plot_loglog_regret(trace_csv, fig_dir / "regret_loglog.svg"))
        except plots.PlotDataError:
            pass

    if grid_shape is not None:
        rows, cols = grid_shape
        demand_csv = seed_dir / "demand.csv"
        field = DemandField.from_csv(demand_csv)
        for j in range(field.task_count):
            out.append(
                plots.plot_grid_heatmap(field.values[:, j].reshape(rows, cols),
                                        fig_dir / f"demand_task{j}.svg",
                                        f"demand, task {j}")
            )
        pm_csv = seed_dir / "partition_map.csv"
        if pm_csv.exists():
            codes = _read_partition_map(pm_csv)
            for j in range(codes.shape[1]):
                out.append(
                    plots.plot_grid_heatmap(codes[:, j].reshape(rows, cols).astype(float),
                                            fig_dir / f"partition_task{j}.svg",
                                            f"ownership, task {j}", cmap="tab10")
                )
        post_csv = seed_dir / "posterior.csv"
        if post_csv.exists():
            traces = _read_block_traces(post_csv)
            out.append(
                plots.plot_grid_heatmap(traces.reshape(rows, cols),
                                        fig_dir / "uncertainty.svg",
                                        "posterior block trace")
            )
    return out


def _read_partition_map(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append((int(row["vertex"]), int(row["task"]), int(row["owner_code"])))
    nv = max(r[0] for r in rows) + 1
    nt = max(r[1] for r in rows) + 1
    codes = np.zeros((nv, nt), dtype=int)
    for v, j, code in rows:
        codes[v, j] = code
    return codes


def _read_block_traces(path) -> np.ndarray:
    values = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            values[int(row["vertex"])] = float(row["block_trace"])
    return np.array([values[v] for v in range(max(values) + 1)])


def emit_plots(artifacts: RunArtifacts) -> list[Path]:
    """Re-render every figure from the run's CSVs (deterministic output)."""
    with open(artifacts.out_dir / "config.json") as fh:
        doc = json.load(fh)
    env = environment_from_json(doc["environment"])
    algo = doc["algorithm"]["name"]
    figures: list[Path] = []
    for seed in doc["seeds"]:
        seed_dir = artifacts.out_dir / f"seed-{seed}"
        if not (seed_dir / "trace.csv").exists():
            raise plots.PlotDataError(f"missing trace CSV {seed_dir / 'trace.csv'}")
        figures.extend(render_seed_figures(seed_dir, env.grid_shape, algo))
    artifacts.figure_svgs = figures
    return figures
