"""Partition-dependent Bayesian estimators.

A Dirichlet-process prior is placed on the within-bin output distribution.
Each bin is enlarged to the full sample size with synthetic values drawn
either i.i.d. from the DP posterior mean (Bayesian bootstrap, ``bb``) or
sequentially from the predictive urn (Polya urn, ``pu``). Replicating the
augmentation yields Monte Carlo draws of every measure, hence point
estimates and credible intervals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .frequentist import bin_outputs
from .measures import (BETA, DELTA, ETA, MEASURES, PosteriorDraws,
                       check_measures)
from .sample import (DegenerateSampleError, Grid, KernelDensity,
                     as_generator, silverman_bandwidth)

SCHEME_BB = "bb"
SCHEME_PU = "pu"


@dataclass(frozen=True)
class DpSpec:
    """Dirichlet-process prior: concentration ``alpha`` and a parametric
    base measure (frozen scipy distribution) fit empirically from y."""

    alpha: float
    base: object

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


def posterior_mixture_weight(alpha, count):
    """Mass the DP posterior mean puts on the base measure: a/(a + n_m)."""
    return alpha / (alpha + count)


def default_dp_spec(sample, n_bins):
    """Default prior: alpha = 0.1 n / M; base measure matched to the output
    support (method-of-moments Beta when y lies in (0, 1), otherwise a
    normal with the sample moments)."""
    y = sample.y
    alpha = 0.1 * sample.n / n_bins
    mean = y.mean()
    var = y.var()
    if var <= 0:
        raise DegenerateSampleError("output variance is zero")
    if 0.0 < y.min() and y.max() < 1.0:
        common = mean * (1.0 - mean) / var - 1.0
        if common > 0:
            return DpSpec(alpha=alpha,
                          base=stats.beta(mean * common,
                                          (1.0 - mean) * common))
    return DpSpec(alpha=alpha, base=stats.norm(mean, np.sqrt(var)))


def _check_target(values, target_size):
    values = np.asarray(values, dtype=float).ravel()
    if target_size < values.size:
        raise ValueError("target size %d is below the current bin size %d"
                         % (target_size, values.size))
    return values, target_size - values.size


def bb_augment(bin_values, target_size, spec, rng_seed=None):
    """I.i.d. draws from the DP posterior mean of one bin.

    Each synthetic value independently comes from the base measure with
    probability alpha/(alpha + n_m) and otherwise resamples a bin member
    uniformly. Returns only the new values.
    """
    values, count = _check_target(bin_values, target_size)
    if count == 0:
        return np.empty(0)
    rng = as_generator(rng_seed)
    from_base = rng.random(count) < posterior_mixture_weight(
        spec.alpha, values.size)
    n_base = int(from_base.sum())
    out = np.empty(count)
    if n_base:
        out[from_base] = spec.base.ppf(rng.random(n_base))
    if count - n_base:
        out[~from_base] = values[rng.integers(0, values.size,
                                              count - n_base)]
    return out


def pu_augment(bin_values, target_size, spec, rng_seed=None):
    """Sequential draws from the DP posterior of one bin via the Polya urn.

    Step j draws from the base measure with probability alpha/(alpha + j)
    and otherwise reinforces a uniform pick from everything seen so far,
    original members and previously generated values alike.
    """
    values, count = _check_target(bin_values, target_size)
    if count == 0:
        return np.empty(0)
    rng = as_generator(rng_seed)
    sizes = np.arange(values.size, target_size)
    from_base = rng.random(count) < posterior_mixture_weight(
        spec.alpha, sizes)
    n_base = int(from_base.sum())
    base_vals = spec.base.ppf(rng.random(n_base)) if n_base else None
    picks = rng.random(count)
    pool = np.empty(target_size)
    pool[:values.size] = values
    b = 0
    for t in range(count):
        j = values.size + t
        if from_base[t]:
            pool[j] = base_vals[b]
            b += 1
        else:
            pool[j] = pool[int(picks[t] * j)]
    return pool[values.size:]


_AUGMENT = {SCHEME_BB: bb_augment, SCHEME_PU: pu_augment}


def _augmented_grid(sample, spec, size=512):
    """Fixed quadrature grid wide enough for every augmented bin: the data
    range extended to the bulk of the base measure, padded by three
    marginal bandwidths."""
    base_lo, base_hi = spec.base.ppf([1e-6, 1.0 - 1e-6])
    pad = 3.0 * silverman_bandwidth(sample.y)
    lo = min(sample.y.min(), base_lo) - pad
    hi = max(sample.y.max(), base_hi) + pad
    return Grid(np.linspace(lo, hi, size))


def posterior_measure_draws(sample, partition, spec=None, measures=MEASURES,
                            scheme=SCHEME_PU, n_draws=100, seed=None,
                            half=True):
    """Monte Carlo draws of the requested measures under one augmentation
    scheme.

    Per replicate, every bin is extended to the full sample size and the
    one-sample formulas are evaluated with marginal quantities taken from
    the original output vector and conditional quantities from the extended
    vectors. Augmentation streams are split per (replicate, bin) so results
    are reproducible and order-independent.

    Returns
    -------
    dict mapping measure name to PosteriorDraws
    """
    measures = check_measures(measures)
    if scheme not in _AUGMENT:
        raise ValueError("scheme must be one of %r" % (sorted(_AUGMENT),))
    if n_draws < 1:
        raise ValueError("need at least one replicate")
    if spec is None:
        spec = default_dp_spec(sample, partition.n_bins)
    augment = _AUGMENT[scheme]

    n = sample.n
    bins = bin_outputs(sample, partition)
    weights = partition.bin_counts / n
    ybar = sample.y.mean()
    s2 = sample.y.var()
    if s2 <= 0:
        raise DegenerateSampleError("output variance is zero")
    sorted_y = np.sort(sample.y)
    grid = f_y = None
    if DELTA in measures:
        grid = _augmented_grid(sample, spec)
        f_y = KernelDensity(sample.y)(grid.points)

    root = (seed if isinstance(seed, np.random.SeedSequence)
            else np.random.SeedSequence(seed))
    streams = root.spawn(n_draws * partition.n_bins)
    out = {m: np.empty(n_draws) for m in measures}
    for s in range(n_draws):
        acc = dict.fromkeys(measures, 0.0)
        for m_idx, (w, y_m) in enumerate(zip(weights, bins)):
            rng = np.random.default_rng(
                streams[s * partition.n_bins + m_idx])
            new = augment(y_m, n, spec, rng)
            ext = np.concatenate([y_m, new]) if new.size else y_m
            if ETA in measures:
                acc[ETA] += w * (ext.mean() - ybar) ** 2 / s2
            if DELTA in measures:
                acc[DELTA] += w * _l1_gap(ext, f_y, grid)
            if BETA in measures:
                acc[BETA] += w * _ks_gap(ext, sorted_y)
        for m in measures:
            v = acc[m]
            if m == DELTA:
                v = np.clip((0.5 if half else 1.0) * v, 0.0, 1.0)
            elif m == BETA:
                v = np.clip(v, 0.0, 1.0)
            out[m][s] = v
    return {
        m: PosteriorDraws(input_index=partition.input_index, measure=m,
                          scheme=scheme, n_bins=partition.n_bins,
                          draws=out[m])
        for m in measures
    }


def _l1_gap(ext, f_y, grid):
    """L1 distance between the extended-bin KDE and the marginal KDE."""
    if np.ptp(ext) == 0:
        return 2.0  # point mass against a continuous density
    f_m = KernelDensity(ext)(grid.points)
    return float(np.trapezoid(np.abs(f_y - f_m), grid.points))


def _ks_gap(ext, sorted_y):
    """Sup over the extended values of the gap between the marginal and
    extended-bin empirical cdfs. Extended vectors are tie-heavy, so both
    cdfs are evaluated right-continuously via rank searches."""
    sm = np.sort(ext)
    f_m = np.searchsorted(sm, sm, side="right") / sm.size
    f_y = np.searchsorted(sorted_y, sm, side="right") / sorted_y.size
    return float(np.abs(f_y - f_m).max())


def estimate_bayes_partition(sample, partition, spec=None, measure=ETA,
                             scheme=SCHEME_PU, n_draws=100, seed=None):
    """Draws of a single measure; see :func:`posterior_measure_draws`."""
    return posterior_measure_draws(
        sample, partition, spec=spec, measures=(measure,), scheme=scheme,
        n_draws=n_draws, seed=seed)[measure]
