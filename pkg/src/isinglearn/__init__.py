"""Structure and parameter learning for binary pairwise Markov random
fields via an l1-penalized log-determinant surrogate likelihood with
cycle-inequality cutting planes.

Top-level workflow: synthesize or load +/-1 data, form empirical mean
parameters, call fit() to run the cutting-plane solver, then inspect the
recovered IsingModel, its cuts, and surrogate log-likelihoods.  Exact
brute-force oracles (small p), pseudo-likelihood baselines, and an
experiment harness with a CLI round out the package.
"""

from .exact import (
    OracleLimit,
    exact_avg_loglik,
    exact_log_partition,
    exact_mean_parameters,
)
from .experiments import (
    ExperimentConfig,
    Metrics,
    load_experiment_config,
    precision_recall,
    run_experiment,
    run_likelihood_experiment,
    run_rate_experiment,
    run_structure_experiment,
)
from .model import (
    DomainError,
    IsingModel,
    MeanVector,
    SuspensionWeights,
    edge_set,
    iter_pairs,
    load_model,
    model_digest,
    moment_matrix,
    pair_count,
    param_matrix,
    parameter_vector,
    save_model,
    sufficient_statistics,
    suspension_weights,
)
from .pseudolikelihood import (
    AsymmetricEstimate,
    LassoFit,
    fit_pseudo,
    logistic_lasso,
    symmetrize,
)
from .separation import CycleInequality, cycle_to_matrix, separate, violation
from .solver import (
    FitResult,
    SolverConfig,
    SolverState,
    auto_lambda,
    joint_objective,
    fit,
    inner_solve,
    kkt_residuals,
    load_fit_file,
    recover_eta,
    recover_theta,
    surrogate_loglik,
    surrogate_logpartition,
    write_fit_result,
)
from .synthetic import (
    Dataset,
    GraphSpec,
    SamplerConfig,
    assign_parameters,
    empirical_means,
    gibbs_sample,
    load_samples,
    make_graph,
    save_samples,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "DomainError",
    "IsingModel",
    "MeanVector",
    "SuspensionWeights",
    "iter_pairs",
    "pair_count",
    "param_matrix",
    "moment_matrix",
    "suspension_weights",
    "sufficient_statistics",
    "parameter_vector",
    "edge_set",
    "save_model",
    "load_model",
    "model_digest",
    "OracleLimit",
    "exact_log_partition",
    "exact_mean_parameters",
    "exact_avg_loglik",
    "CycleInequality",
    "cycle_to_matrix",
    "violation",
    "separate",
    "SolverConfig",
    "SolverState",
    "FitResult",
    "auto_lambda",
    "joint_objective",
    "inner_solve",
    "fit",
    "recover_theta",
    "recover_eta",
    "kkt_residuals",
    "surrogate_logpartition",
    "surrogate_loglik",
    "write_fit_result",
    "load_fit_file",
    "GraphSpec",
    "SamplerConfig",
    "Dataset",
    "make_graph",
    "assign_parameters",
    "gibbs_sample",
    "empirical_means",
    "save_samples",
    "load_samples",
    "LassoFit",
    "AsymmetricEstimate",
    "logistic_lasso",
    "fit_pseudo",
    "symmetrize",
    "Metrics",
    "ExperimentConfig",
    "precision_recall",
    "run_structure_experiment",
    "run_likelihood_experiment",
    "run_rate_experiment",
    "run_experiment",
    "load_experiment_config",
]
