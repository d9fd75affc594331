"""Trust-region methods for noisy minimization with pluggable stochastic
oracles, worst-case noise constructions, and complexity-bound calculators."""

from .core import (
    ConfigurationError,
    IterationRecord,
    Objective,
    QuadraticModel,
    RunTrace,
    TrParams,
    builtin_objective,
    model_decrease,
    model_eval,
    scale_objective,
    standard_start,
)
from .oracles import (
    FirstOracle,
    GradientPopulation,
    SecondOracle,
    ZerothOracle,
    fd2_gradient,
    fd_gradient,
    fd_hessian,
    minibatch_gradient_oracle,
    optimal_sigma,
    sample_subexponential_noise,
    substream,
)
from .subproblem import cauchy_step, eigen_step, jacobi_eigh, min_eigenpair, second_order_step
from .solver import compute_rho, run_tr1, run_tr2, write_summary_json, write_trace_csv
from .theory import (
    BoundReport,
    FirstOrderConstants,
    SecondOrderConstants,
    TraceAnchors,
    azuma_tail,
    beta,
    constants_first,
    constants_second,
    epsilon_floor,
    failure_prob,
    iteration_bound,
    optimal_p_hat,
    p0,
)
from .adversarial import (
    AdversarialGradientOracle,
    AdversaryParams,
    YSolution,
    adversarial_noise_pair,
    recover_gradient,
    solve_least_gain,
    solve_most_loss,
    solve_reject,
)
from .bench import (
    ExperimentSpec,
    ProfileData,
    convergence_test,
    data_profile,
    monte_carlo_tail,
    performance_profile,
    r_sweep,
    run_adversarial_experiment,
    stabilization_level,
)

__version__ = "0.1.0"
