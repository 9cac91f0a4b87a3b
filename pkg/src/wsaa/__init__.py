"""Kernel-weighted sample average approximation for contextual decisions.

The package estimates the optimal conditional expected cost of a decision
given covariates, solves the weighted problem exactly or under a compute
budget, allocates budgets between sample size and solver iterations, and
builds normal-limit confidence intervals whose coverage the Monte Carlo
harness can check end to end.
"""

from .budget import (
    AllocationPlan,
    allocate,
    initial_gap_psi,
    kappa_star,
    theoretical_rate,
    theta_for_projected_gd,
)
from .costs import (
    Expectile,
    FeasibleBox,
    Newsvendor,
    Quartic,
    WsaaProblem,
    cost_gradient,
    cost_hessian,
    cost_subgradient,
    cost_value,
    wsaa_grad,
    wsaa_hessian,
    wsaa_objective,
    wsaa_subgrad,
)
from .harness import ExperimentConfig, fit_loglog_slope, run_experiment
from .infer import (
    IntervalReport,
    confidence_interval,
    direct_variance_estimate,
    error_decomposition,
    sample_cond_variance,
    variance_estimate,
)
from .kernels import (
    BandwidthSchedule,
    EmptyNeighborhoodError,
    KernelSpec,
    WeightVector,
    bandwidth,
    kde,
    kernel_eval,
    kernel_r2,
    nw_weights,
    sum_sq_weights,
)
from .simulate import (
    NewsvendorDgp,
    QuarticDgp,
    RngStream,
    WeatherDgp,
    covariate_quantile,
    load_dataset_csv,
    make_quartic_cost,
    make_simulator,
    oracle_optimal_value,
    sample_conditional,
    sample_dataset,
    save_dataset_csv,
)
from .solve import (
    ConvergenceReport,
    Linear,
    SolverConfig,
    SolverTrace,
    Sublinear,
    Superlinear,
    projected_gradient_armijo,
    projected_newton,
    projected_subgradient,
    solve_exact,
    verify_convergence_class,
)
from .tune import BudgetedSolveSpec, CvGrid, kfold_cv

__version__ = "0.1.0"
