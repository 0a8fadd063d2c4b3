"""Frequentist one-sample point estimators for the three sensitivity
measures, computed from a sample and an equiprobable partition."""

from __future__ import annotations

import warnings

import numpy as np

from .measures import BETA, DELTA, ETA, PointEstimate
from .sample import (DegenerateSampleError, Grid, InvalidPartitionError,
                     KernelDensity, silverman_bandwidth, trapezoid)


def bin_outputs(sample, partition):
    """Output vector of each partition bin."""
    return [sample.y[m] for m in partition.bin_members]


def _output_moments(y):
    ybar = float(y.mean())
    s2 = float(y.var())  # population variance, denominator n
    if s2 <= 0:
        raise DegenerateSampleError("output variance is zero")
    return ybar, s2


def _weights(partition):
    counts = partition.bin_counts
    return counts / counts.sum()


def _eta_estimate(value, partition):
    flagged = bool(value > 1.0)
    if flagged:
        warnings.warn("eta estimate %.4f exceeds 1; reported as computed"
                      % value, RuntimeWarning, stacklevel=3)
    return PointEstimate(input_index=partition.input_index, measure=ETA,
                         value=float(value), n_bins=partition.n_bins,
                         flagged=flagged)


def eta_star(sample, partition):
    """Variance-based estimate from within-bin means:
    sum_m (n_m/n) (ybar_m - ybar)^2 / s2_y."""
    ybar, s2 = _output_moments(sample.y)
    w = _weights(partition)
    gaps = np.array([y_m.mean() - ybar for y_m in bin_outputs(sample, partition)])
    return _eta_estimate(np.sum(w * gaps ** 2) / s2, partition)


def step_cdf_gap_integral(values_m, values_y):
    """Exact integral of (F_m - F_Y) over the real line for two empirical
    step cdfs, summing over the pooled jump points."""
    t = np.unique(np.concatenate([values_m, values_y]))
    sm = np.sort(values_m)
    sy = np.sort(values_y)
    f_m = np.searchsorted(sm, t, side="right") / sm.size
    f_y = np.searchsorted(sy, t, side="right") / sy.size
    return float(np.sum(np.diff(t) * (f_m - f_y)[:-1]))


def eta_diamond(sample, partition):
    """Variance-based estimate via survival-function integrals of the
    empirical cdfs; the piecewise-constant integrands are integrated
    exactly between jump points."""
    ybar, s2 = _output_moments(sample.y)
    w = _weights(partition)
    gaps = np.array([
        step_cdf_gap_integral(y_m, sample.y)
        for y_m in bin_outputs(sample, partition)
    ])
    return _eta_estimate(np.sum(w * gaps ** 2) / s2, partition)


def shared_density_grid(sample, partition, size=512):
    """Evaluation grid wide enough for the marginal and every bin KDE."""
    bandwidths = [silverman_bandwidth(sample.y)]
    for y_m in bin_outputs(sample, partition):
        if y_m.size >= 2 and y_m.std(ddof=1) > 0:
            bandwidths.append(silverman_bandwidth(y_m))
    pad = 3.0 * max(bandwidths)
    return Grid(np.linspace(sample.y.min() - pad, sample.y.max() + pad, size))


def delta_star(sample, partition, grid=None, half=True):
    """Density-based estimate: weighted L1 distance between the marginal
    KDE and each within-bin KDE.

    ``half`` applies the 1/2 normalization that keeps the estimate in
    [0, 1]; disable it to reproduce the raw (unhalved) L1 convention.
    """
    bins = bin_outputs(sample, partition)
    _check_bin_sizes(bins, minimum=2)
    if grid is None:
        grid = shared_density_grid(sample, partition)
    f_y = KernelDensity(sample.y)(grid.points)
    total = 0.0
    for w, y_m in zip(_weights(partition), bins):
        f_m = KernelDensity(y_m)(grid.points)
        total += w * trapezoid(np.abs(f_y - f_m), grid)
    value = 0.5 * total if half else total
    return PointEstimate(input_index=partition.input_index, measure=DELTA,
                         value=float(np.clip(value, 0.0, 1.0)),
                         n_bins=partition.n_bins)


def _check_bin_sizes(bins, minimum):
    if any(y_m.size < minimum for y_m in bins):
        raise InvalidPartitionError(
            "partition is too fine: a bin has fewer than %d members"
            % minimum)


def _positive_intervals(diff_on_grid, grid_points, refine):
    """Intervals of the grid where a smooth difference function is positive,
    located by sign changes and sharpened by bisection."""
    d = np.asarray(diff_on_grid)
    sign = d > 0
    edges = []
    if sign[0]:
        edges.append(grid_points[0])
    for i in np.nonzero(sign[:-1] != sign[1:])[0]:
        lo, hi = grid_points[i], grid_points[i + 1]
        f_lo = d[i]
        for _ in range(10):
            mid = 0.5 * (lo + hi)
            f_mid = refine(mid)
            if (f_lo > 0) == (f_mid > 0):
                lo, f_lo = mid, f_mid
            else:
                hi = mid
        edges.append(0.5 * (lo + hi))
    if sign[-1]:
        edges.append(grid_points[-1])
    return list(zip(edges[0::2], edges[1::2]))


def delta_diamond(sample, partition, grid=None):
    """Density-based estimate by the Scheffe route: the L1 distance equals
    twice the probability-mass difference on the set where the bin density
    exceeds the marginal one, read off the two empirical cdfs."""
    bins = bin_outputs(sample, partition)
    _check_bin_sizes(bins, minimum=2)
    if grid is None:
        grid = shared_density_grid(sample, partition)
    kde_y = KernelDensity(sample.y)
    f_y = kde_y(grid.points)
    sy = np.sort(sample.y)
    total = 0.0
    for w, y_m in zip(_weights(partition), bins):
        kde_m = KernelDensity(y_m)
        f_m = kde_m(grid.points)

        def refine(t, kde_m=kde_m):
            return kde_m(t) - kde_y(t)

        sm = np.sort(y_m)
        mass_gap = 0.0
        for a, b in _positive_intervals(f_m - f_y, grid.points, refine):
            p_m = (np.searchsorted(sm, b, side="right")
                   - np.searchsorted(sm, a, side="right")) / sm.size
            p_y = (np.searchsorted(sy, b, side="right")
                   - np.searchsorted(sy, a, side="right")) / sy.size
            mass_gap += p_m - p_y
        # the exceedance set makes the mass difference nonnegative; clamp
        # the sampling artifacts that break it
        total += w * max(mass_gap, 0.0)
    return PointEstimate(input_index=partition.input_index, measure=DELTA,
                         value=float(np.clip(total, 0.0, 1.0)),
                         n_bins=partition.n_bins)


def beta_diamond(sample, partition):
    """Cdf-based estimate: weighted maximum over all observed outputs of the
    gap between the marginal and within-bin empirical cdfs."""
    _check_bin_sizes(bin_outputs(sample, partition), minimum=1)
    sy = np.sort(sample.y)
    n = sy.size
    # right-continuous marginal cdf at its own sorted values (ties share
    # the rank of their last copy)
    f_y = np.searchsorted(sy, sy, side="right") / n
    total = 0.0
    for w, y_m in zip(_weights(partition), bin_outputs(sample, partition)):
        sm = np.sort(y_m)
        f_m = np.searchsorted(sm, sy, side="right") / sm.size
        total += w * np.abs(f_y - f_m).max()
    return PointEstimate(input_index=partition.input_index, measure=BETA,
                         value=float(np.clip(total, 0.0, 1.0)),
                         n_bins=partition.n_bins)


_PDF_ROUTE = {ETA: eta_star, DELTA: delta_star, BETA: beta_diamond}
_CDF_ROUTE = {ETA: eta_diamond, DELTA: delta_diamond, BETA: beta_diamond}


def point_estimate(sample, partition, measure, route="pdf", grid=None):
    """Dispatch one measure estimate along the pdf or cdf route. Beta has a
    single (cdf) estimator, used by both routes."""
    if route not in ("pdf", "cdf"):
        raise ValueError("route must be 'pdf' or 'cdf'")
    fn = (_PDF_ROUTE if route == "pdf" else _CDF_ROUTE)[measure]
    if measure == DELTA:
        return fn(sample, partition, grid=grid)
    return fn(sample, partition)
