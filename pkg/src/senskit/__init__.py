"""Probabilistic sensitivity measures from a single input/output sample.

Implements variance-based (eta), density-based (delta) and cdf-based
(beta) global sensitivity measures with frequentist one-sample point
estimators, Dirichlet-process partition estimators with credible intervals
(Bayesian bootstrap and Polya urn), and two partition-free Bayesian
nonparametric estimators (joint bivariate-normal mixture and conditional
mixture of regressions)."""

__version__ = "0.1.0"

from .bayes_partition import (DpSpec, bb_augment, default_dp_spec,
                              estimate_bayes_partition,
                              posterior_measure_draws, pu_augment)
from .conditional_mixture import (ConditionalMixturePrior,
                                  RegressionMixtureDraw,
                                  bnc_conditional_density, bnc_measures,
                                  fit_bnc)
from .estimators import (BayesPartitionSensitivity,
                         ConditionalMixtureSensitivity, EmpiricalMarginal,
                         JointMixtureSensitivity, PartitionSensitivity)
from .frequentist import (beta_diamond, delta_diamond, delta_star,
                          eta_diamond, eta_star, point_estimate)
from .joint_mixture import (JointMixturePrior, MixtureDraw,
                            bnj_conditional_density, bnj_measures, fit_bnj)
from .measures import (BETA, DELTA, ETA, MEASURES, MeasureDrawSet,
                       PointEstimate, PosteriorDraws)
from .sample import (DegenerateSampleError, EmpiricalCdf, Grid,
                     InvalidPartitionError, KernelDensity, Partition,
                     Sample, empirical_quantiles, grid_supremum,
                     make_equiprobable_partition, trapezoid,
                     trivial_partition)
from .simulators import (OracleTable, OracleUnavailableError, SimulatorSpec,
                         correlated_linear_21, gamma_ratio_2,
                         gaussian_conditional_oracle, generate_sample,
                         linear_gaussian, oracle_values)
from .study import (CsvFormatError, RunConfig, StudyResult,
                    heuristic_partition_size, ingest_csv, rmse_study, run,
                    write_sample_csv)

__all__ = [
    "BETA", "DELTA", "ETA", "MEASURES",
    "BayesPartitionSensitivity", "ConditionalMixturePrior",
    "ConditionalMixtureSensitivity", "CsvFormatError",
    "DegenerateSampleError", "DpSpec", "EmpiricalCdf", "EmpiricalMarginal",
    "Grid", "InvalidPartitionError", "JointMixturePrior",
    "JointMixtureSensitivity", "KernelDensity", "MeasureDrawSet",
    "MixtureDraw", "OracleTable", "OracleUnavailableError", "Partition",
    "PartitionSensitivity", "PointEstimate", "PosteriorDraws",
    "RegressionMixtureDraw", "RunConfig", "Sample", "SimulatorSpec",
    "StudyResult", "bb_augment", "beta_diamond", "bnc_conditional_density",
    "bnc_measures", "bnj_conditional_density", "bnj_measures",
    "correlated_linear_21", "default_dp_spec", "delta_diamond",
    "delta_star", "empirical_quantiles", "estimate_bayes_partition",
    "eta_diamond", "eta_star", "fit_bnc", "fit_bnj", "gamma_ratio_2",
    "gaussian_conditional_oracle", "generate_sample", "grid_supremum",
    "heuristic_partition_size", "ingest_csv", "linear_gaussian",
    "make_equiprobable_partition", "oracle_values", "point_estimate",
    "posterior_measure_draws", "pu_augment", "rmse_study", "run",
    "trapezoid", "trivial_partition", "write_sample_csv",
]
