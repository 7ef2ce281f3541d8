"""Batched linear bandits: arm elimination on a doubly-exponential schedule.

The library half provides the algorithm (`run_blae`), two baselines, a
regularized G-optimal design solver, a batched ridge estimator, and a
seeded simulation environment. The benchmark half (`blae.bench`,
``blae`` on the command line) runs paired replicated experiments to
delimited result files and renders comparison figures; `blae.verify`
holds Monte Carlo checks of the confidence, design, and covering bounds
the algorithm relies on.
"""

from .algorithm import (
    BLAEConfig,
    allocate,
    beta1,
    beta2,
    eliminate,
    epsilon_threshold,
    run_blae,
)
from .baselines import (
    PhaElimDConfig,
    RSOFULConfig,
    algorithm_names,
    get_algorithm,
    register_algorithm,
    run_phaelim_d,
    run_rs_oful,
)
from .bench import ExperimentConfig, ResultRecord, load_results, run_experiment, summarize
from .core import (
    ArmSet,
    BanditInstance,
    RunTrace,
    ScheduleParams,
    batch_budget,
    batch_count_bound,
    checkpoint_rounds,
)
from .design import (
    DesignConvergenceError,
    DesignProblem,
    DesignWeights,
    design_bound,
    leverage,
    solve_design,
)
from .envsim import Environment, InstanceSpec, load_instance, sample_instance, save_instance
from .estimator import (
    BatchData,
    Estimate,
    accumulate,
    estimate_batch,
    mahalanobis_inv,
    max_pairwise_norm,
    solve_rls,
)
from .verify import (
    ConcentrationReport,
    CoverReport,
    build_cover,
    check_concentration,
    check_design_bound,
)

__version__ = "0.1.0"

__all__ = [
    "ArmSet",
    "BanditInstance",
    "BLAEConfig",
    "BatchData",
    "ConcentrationReport",
    "CoverReport",
    "DesignConvergenceError",
    "DesignProblem",
    "DesignWeights",
    "Environment",
    "Estimate",
    "ExperimentConfig",
    "InstanceSpec",
    "PhaElimDConfig",
    "ResultRecord",
    "RSOFULConfig",
    "RunTrace",
    "ScheduleParams",
    "accumulate",
    "algorithm_names",
    "allocate",
    "batch_budget",
    "batch_count_bound",
    "beta1",
    "beta2",
    "build_cover",
    "check_concentration",
    "check_design_bound",
    "checkpoint_rounds",
    "design_bound",
    "eliminate",
    "epsilon_threshold",
    "estimate_batch",
    "get_algorithm",
    "leverage",
    "load_instance",
    "load_results",
    "mahalanobis_inv",
    "max_pairwise_norm",
    "register_algorithm",
    "run_blae",
    "run_experiment",
    "run_phaelim_d",
    "run_rs_oful",
    "sample_instance",
    "save_instance",
    "solve_design",
    "solve_rls",
    "summarize",
    "__version__",
]
