"""Multi-robot multitask coverage control on graph environments.

Library surface: graph environments and coverings, the multitask coverage
cost with its centers/equitable-partition fixed points, the federated
coverage state machine, a Kronecker-structured multitask GP with greedy
sampling, regret accounting, the adaptive epoch algorithm with a randomized
baseline, and an experiment harness emitting CSV traces and SVG figures.
"""

from .coverage import (
    CallableServiceModel,
    CostBreakdown,
    LinearServiceModel,
    McepReport,
    ServiceModel,
    equitable_partition,
    h_inf,
    is_mcep,
    multitask_centers,
    multitask_cost,
)
from .demand import DemandField, random_kernels, synthesize_gaussian_mixture
from .dsmlc import (
    AdaptiveRun,
    EpochConfig,
    RmlcConfig,
    coverage_phase,
    exploration_phase,
    propagation_phase,
    run_dsmlc,
    run_rmlc,
)
from .env import (
    Covering,
    DisconnectedGraphError,
    Environment,
    all_pairs_distances,
    as_configuration,
    build_grid,
    environment_from_json,
    from_edges,
    is_partition,
    overlap_count,
    partition_map,
)
from .federated import (
    CommSchedule,
    ConvergenceError,
    FmcRun,
    FmcState,
    StepReport,
    fmc_step,
    initial_state,
    lyapunov_values,
    run_to_convergence,
)
from .experiment import (
    ConfigError,
    ExperimentConfig,
    RunArtifacts,
    Scenario,
    build_scenario,
    default_firefighting_config,
    emit_plots,
    run_experiment,
)
from .gp import (
    BoundCheck,
    ConditioningError,
    ExplorationBudgetError,
    MtgpPosterior,
    MtgpPrior,
    exploration_batch,
    greedy_select,
    max_info_gain_bound_check,
    mutual_information,
    posterior_update,
    se_kernel_matrix,
    uncertainty_reduction_bound_check,
    vertex_block,
)
from .regret import RegretTrace, accumulate, instantaneous_regret, loglog_slope

__version__ = "0.1.0"
