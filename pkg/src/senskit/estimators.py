"""Scikit-learn style estimators: ``fit(X, y)`` computes probabilistic
sensitivity measures of y with respect to every input column, exposing
point estimates (and credible intervals for the Bayesian variants) as
fitted attributes."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, check_X_y

from . import bayes_partition, conditional_mixture, frequentist, joint_mixture
from .measures import MEASURES, check_measures
from .sample import (KernelDensity, Sample, empirical_quantiles,
                     make_equiprobable_partition)


class EmpiricalMarginal:
    """Stand-in for an unknown input marginal: Gaussian-KDE density with
    quantile-interpolation inverse cdf. Used by the partition-free
    estimators when the true input distribution is not supplied."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float).ravel()
        self._kde = KernelDensity(values)
        self._values = values

    def pdf(self, x):
        return self._kde(np.asarray(x, dtype=float))

    def ppf(self, q):
        return empirical_quantiles(self._values, q)


def _as_seed_sequence(random_state):
    if isinstance(random_state, np.random.SeedSequence):
        return random_state
    if isinstance(random_state, np.random.Generator):
        return np.random.SeedSequence(int(random_state.integers(2 ** 63)))
    return np.random.SeedSequence(random_state)


class BaseSensitivityEstimator(BaseEstimator):
    """Shared fit machinery; subclasses implement one input at a time."""

    _has_intervals = False

    def fit(self, X, y):
        """Estimate the configured measures for every analyzed input.

        Parameters
        ----------
        X : array-like of shape (n_samples, n_features)
            Input realizations.
        y : array-like of shape (n_samples,)
            Simulator output.
        """
        X, y = check_X_y(X, y, y_numeric=True)
        sample = Sample(x=X, y=y)
        self.sample_ = sample
        self.n_features_in_ = sample.k
        self.input_names_ = list(sample.input_names)
        self.measures_ = check_measures(self.measures)
        inputs = self.inputs
        if inputs is None:
            inputs = range(sample.k)
        self.analyzed_inputs_ = [int(i) for i in inputs]
        for i in self.analyzed_inputs_:
            if not 0 <= i < sample.k:
                raise ValueError("input index %d outside [0, %d)"
                                 % (i, sample.k))

        k, m = sample.k, len(self.measures_)
        self.point_ = np.full((k, m), np.nan)
        self.lower_ = np.full((k, m), np.nan)
        self.upper_ = np.full((k, m), np.nan)
        self.draws_ = {}
        seeds = _as_seed_sequence(
            getattr(self, "random_state", None)).spawn(sample.k)
        for i in self.analyzed_inputs_:
            self._fit_one_input(sample, i, seeds[i])
        return self

    def rank_inputs(self, measure=None):
        """Analyzed inputs ordered by decreasing point estimate."""
        check_is_fitted(self, "point_")
        measure = self.measures_[0] if measure is None else measure
        col = self.measures_.index(measure)
        order = np.argsort(
            [-self.point_[i, col] for i in self.analyzed_inputs_])
        return [self.analyzed_inputs_[j] for j in order]

    def results_rows(self):
        """Long-format result rows (one per analyzed input and measure)."""
        check_is_fitted(self, "point_")
        rows = []
        for i in self.analyzed_inputs_:
            for j, measure in enumerate(self.measures_):
                rows.append({
                    "measure": measure,
                    "input": self.input_names_[i],
                    "point": float(self.point_[i, j]),
                    "lo95": (float(self.lower_[i, j])
                             if self._has_intervals else None),
                    "hi95": (float(self.upper_[i, j])
                             if self._has_intervals else None),
                })
        return rows


class PartitionSensitivity(BaseSensitivityEstimator):
    """Frequentist one-sample estimates on an equiprobable partition.

    Parameters
    ----------
    n_bins : int or None
        Partition size M; None applies the 2.5 n^(1/3) heuristic.
    route : {'pdf', 'cdf'}
        Smoothing route for eta and delta (beta is always cdf-based).
    measures : sequence of {'eta', 'delta', 'beta'}
    inputs : sequence of int or None
        0-based input columns to analyze; None analyzes all.
    """

    def __init__(self, n_bins=None, route="pdf",
                 measures=MEASURES, inputs=None):
        self.n_bins = n_bins
        self.route = route
        self.measures = measures
        self.inputs = inputs

    def _resolved_bins(self, n):
        from .study import heuristic_partition_size
        return (heuristic_partition_size(n)
                if self.n_bins is None else int(self.n_bins))

    def _fit_one_input(self, sample, i, seed):
        partition = make_equiprobable_partition(
            sample, i, self._resolved_bins(sample.n))
        for j, measure in enumerate(self.measures_):
            est = frequentist.point_estimate(
                sample, partition, measure, route=self.route)
            self.point_[i, j] = est.value


class BayesPartitionSensitivity(BaseSensitivityEstimator):
    """Partition-dependent Bayesian estimates with credible intervals.

    Every bin is augmented to the full sample size from its Dirichlet-
    process posterior, by the Bayesian bootstrap (``scheme='bb'``) or the
    Polya urn (``scheme='pu'``); measure draws over replicates give the
    point estimate (mean) and 95% interval (quantiles).

    Parameters
    ----------
    scheme : {'pu', 'bb'}
    n_bins : int or None
        Partition size M; None applies the 2.5 n^(1/3) heuristic.
    n_draws : int
        Number of augmentation replicates S.
    alpha : float or None
        DP concentration; None uses the 0.1 n / M default.
    measures, inputs : as in PartitionSensitivity.
    random_state : int, Generator, SeedSequence or None
    """

    _has_intervals = True

    def __init__(self, scheme="pu", n_bins=None, n_draws=100, alpha=None,
                 measures=MEASURES, inputs=None, random_state=None):
        self.scheme = scheme
        self.n_bins = n_bins
        self.n_draws = n_draws
        self.alpha = alpha
        self.measures = measures
        self.inputs = inputs
        self.random_state = random_state

    def _fit_one_input(self, sample, i, seed):
        from .study import heuristic_partition_size
        n_bins = (heuristic_partition_size(sample.n)
                  if self.n_bins is None else int(self.n_bins))
        partition = make_equiprobable_partition(sample, i, n_bins)
        spec = bayes_partition.default_dp_spec(sample, n_bins)
        if self.alpha is not None:
            spec = bayes_partition.DpSpec(alpha=float(self.alpha),
                                          base=spec.base)
        draws = bayes_partition.posterior_measure_draws(
            sample, partition, spec=spec, measures=self.measures_,
            scheme=self.scheme, n_draws=self.n_draws, seed=seed)
        for j, measure in enumerate(self.measures_):
            pd = draws[measure]
            self.point_[i, j] = pd.point
            self.lower_[i, j], self.upper_[i, j] = pd.interval()
            self.draws_[(i, measure)] = pd.draws


class _MixtureSensitivity(BaseSensitivityEstimator):
    """Common machinery of the two partition-free estimators."""

    _has_intervals = True

    def _marginal_of(self, sample, i):
        dists = self.input_distributions
        if dists is None:
            return EmpiricalMarginal(sample.x[:, i])
        try:
            return dists[i]
        except TypeError:
            raise ValueError(
                "input_distributions must be indexable by input position")

    def _fit_one_input(self, sample, i, seed):
        draw_set = self._draw_measures(sample, i, seed)
        for j, measure in enumerate(self.measures_):
            self.point_[i, j] = draw_set.point(measure)
            self.lower_[i, j], self.upper_[i, j] = draw_set.interval(measure)
            self.draws_[(i, measure)] = draw_set.draws[measure]


class JointMixtureSensitivity(_MixtureSensitivity):
    """Partition-free estimates from a Dirichlet-process mixture of
    bivariate normals over (input, output).

    Parameters
    ----------
    input_distributions : sequence of frozen distributions or None
        Known marginal of each input (pdf and ppf required); None falls
        back to an empirical stand-in per input.
    n_draws : int
        Stored MCMC draws S.
    burn_in : int or None
        None uses the 10 n convention.
    max_components : int
        Truncation level of the mixture.
    measures, inputs, random_state : as above.
    """

    def __init__(self, input_distributions=None, n_draws=1000, burn_in=None,
                 max_components=50, measures=MEASURES, inputs=None,
                 random_state=None):
        self.input_distributions = input_distributions
        self.n_draws = n_draws
        self.burn_in = burn_in
        self.max_components = max_components
        self.measures = measures
        self.inputs = inputs
        self.random_state = random_state

    def _draw_measures(self, sample, i, seed):
        draws = joint_mixture.fit_bnj(
            sample, i, burn_in=self.burn_in, n_draws=self.n_draws,
            seed=seed, max_components=self.max_components)
        return joint_mixture.bnj_measures(
            draws, self._marginal_of(sample, i), input_index=i)


class ConditionalMixtureSensitivity(_MixtureSensitivity):
    """Partition-free estimates from a mixture of linear regressions with
    covariate-dependent normalized-kernel weights.

    Parameters as in JointMixtureSensitivity.
    """

    def __init__(self, input_distributions=None, n_draws=1000, burn_in=None,
                 max_components=50, measures=MEASURES, inputs=None,
                 random_state=None):
        self.input_distributions = input_distributions
        self.n_draws = n_draws
        self.burn_in = burn_in
        self.max_components = max_components
        self.measures = measures
        self.inputs = inputs
        self.random_state = random_state

    def _draw_measures(self, sample, i, seed):
        draws = conditional_mixture.fit_bnc(
            sample, i, burn_in=self.burn_in, n_draws=self.n_draws,
            seed=seed, max_components=self.max_components)
        return conditional_mixture.bnc_measures(
            draws, self._marginal_of(sample, i), input_index=i)
