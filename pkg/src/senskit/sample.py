"""Core data model: input/output samples, equiprobable partitions, empirical
distributions, Gaussian kernel densities and the shared numerical kernels
(trapezoidal quadrature, grid suprema, empirical quantiles)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class InvalidPartitionError(ValueError):
    """Requested partition cannot be built from the sample."""


class DegenerateSampleError(ValueError):
    """Sample carries no usable variability (e.g. constant output)."""


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Sample:
    """A single uncertainty-propagation sample: n input vectors paired with
    n scalar outputs.

    Parameters
    ----------
    x : ndarray of shape (n, k)
        Input realizations, one row per simulator run.
    y : ndarray of shape (n,)
        Output realizations.
    input_names : sequence of str, optional
        Labels for the k input columns. Defaults to ``x1 .. xk``.
    """

    x: np.ndarray
    y: np.ndarray
    input_names: tuple = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if x.ndim != 2:
            raise ValueError("x must be a 2-d array of shape (n, k)")
        n, k = x.shape
        if n < 2:
            raise ValueError("need at least two observations, got %d" % n)
        if k < 1:
            raise ValueError("need at least one input column")
        if len(y) != n:
            raise ValueError(
                "x has %d rows but y has %d entries" % (n, len(y)))
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("sample contains NaN or infinite entries")
        names = self.input_names
        if names is None:
            names = tuple("x%d" % (j + 1) for j in range(k))
        else:
            names = tuple(str(s) for s in names)
            if len(names) != k:
                raise ValueError(
                    "expected %d input names, got %d" % (k, len(names)))
        object.__setattr__(self, "x", _readonly(x))
        object.__setattr__(self, "y", _readonly(y))
        object.__setattr__(self, "input_names", names)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def k(self):
        return self.x.shape[1]


@dataclass(frozen=True)
class Partition:
    """Equiprobable binning of one input column into ``n_bins`` ordered bins.

    ``bin_members[m]`` holds the row indices whose input value falls in the
    m-th bin; bins are ordered left to right along the input axis.
    """

    input_index: int
    n_bins: int
    bin_members: tuple

    def __post_init__(self):
        members = tuple(np.asarray(m, dtype=np.intp) for m in self.bin_members)
        object.__setattr__(self, "bin_members", members)
        if len(members) != self.n_bins:
            raise InvalidPartitionError(
                "expected %d bins, got %d" % (self.n_bins, len(members)))

    @property
    def bin_counts(self):
        return np.array([len(m) for m in self.bin_members])

    @property
    def n(self):
        return int(self.bin_counts.sum())


def make_equiprobable_partition(sample, input_index, n_bins):
    """Split the realizations of one input into ``n_bins`` equal-count bins.

    Bin boundaries sit at empirical quantiles of the input column: the rows
    are ordered by input value (ties broken by original row index) and dealt
    into consecutive bins. When n is not divisible by ``n_bins`` the surplus
    observations go to the leftmost bins, so every count is floor(n/M) or
    ceil(n/M).

    Parameters
    ----------
    sample : Sample
    input_index : int
        0-based input column.
    n_bins : int
        Number of bins M, with 2 <= M <= n. Use :func:`trivial_partition`
        for the degenerate single-bin case.

    Returns
    -------
    Partition
    """
    n = sample.n
    if not 0 <= input_index < sample.k:
        raise ValueError(
            "input_index %d outside [0, %d)" % (input_index, sample.k))
    if n_bins < 2:
        raise InvalidPartitionError(
            "n_bins must be at least 2, got %d" % n_bins)
    if n_bins > n:
        raise InvalidPartitionError(
            "cannot split %d observations into %d bins" % (n, n_bins))
    order = np.argsort(sample.x[:, input_index], kind="stable")
    base, surplus = divmod(n, n_bins)
    counts = np.full(n_bins, base, dtype=int)
    counts[:surplus] += 1
    edges = np.concatenate([[0], np.cumsum(counts)])
    members = tuple(order[edges[m]:edges[m + 1]] for m in range(n_bins))
    return Partition(input_index=input_index, n_bins=n_bins,
                     bin_members=members)


def trivial_partition(sample, input_index=0):
    """Single-bin partition holding the whole sample (M = 1)."""
    return Partition(input_index=input_index, n_bins=1,
                     bin_members=(np.arange(sample.n),))


class EmpiricalCdf:
    """Right-continuous empirical cdf of a sample of values."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            raise ValueError("cannot build an empirical cdf from no values")
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain NaN or infinite entries")
        self.sorted_values = np.sort(values)
        self.n = values.size

    def __call__(self, y):
        ranks = np.searchsorted(self.sorted_values, y, side="right")
        return ranks / self.n

    evaluate = __call__


def silverman_bandwidth(values):
    """Silverman's rule of thumb, h = 0.9 min(sd, IQR/1.34) n^(-1/5).

    Falls back to the standard deviation when the IQR is zero.
    """
    values = np.asarray(values, dtype=float).ravel()
    n = values.size
    sd = np.std(values, ddof=1)
    if sd <= 0:
        raise DegenerateSampleError(
            "kernel density needs a sample with positive spread")
    q75, q25 = np.percentile(values, [75, 25])
    iqr = q75 - q25
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * spread * n ** (-0.2)


class KernelDensity:
    """Gaussian kernel density estimate f(y) = mean_j phi((y - c_j)/h)/h."""

    def __init__(self, values, bandwidth=None):
        values = np.asarray(values, dtype=float).ravel()
        if values.size < 2:
            raise ValueError("kernel density needs at least two values")
        if bandwidth is None:
            bandwidth = silverman_bandwidth(values)
        if bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        self.centers = values
        self.bandwidth = float(bandwidth)

    def __call__(self, grid_points):
        pts = np.asarray(grid_points, dtype=float)
        z = (pts[..., None] - self.centers) / self.bandwidth
        out = np.exp(-0.5 * z * z).sum(axis=-1)
        out /= self.centers.size * self.bandwidth * np.sqrt(2.0 * np.pi)
        return out

    density = __call__

    def default_grid(self, size=512):
        """Evaluation grid covering the kernel tails, [min - 3h, max + 3h]."""
        lo = self.centers.min() - 3.0 * self.bandwidth
        hi = self.centers.max() + 3.0 * self.bandwidth
        return Grid(np.linspace(lo, hi, size))


@dataclass(frozen=True)
class Grid:
    """Strictly increasing quadrature/supremum grid."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        if pts.size < 2:
            raise ValueError("grid needs at least two points")
        if not np.all(np.diff(pts) > 0):
            raise ValueError("grid points must be strictly increasing")
        object.__setattr__(self, "points", _readonly(pts))

    @property
    def size(self):
        return self.points.size


def default_output_grid(y, size=512):
    """Default quadrature grid over the output space: ``size`` equally
    spaced points spanning the data range padded by three KDE bandwidths."""
    return KernelDensity(y).default_grid(size)


def trapezoid(f_values, grid):
    """Trapezoidal rule on a (possibly nonuniform) grid."""
    f = np.asarray(f_values, dtype=float)
    pts = grid.points if isinstance(grid, Grid) else np.asarray(grid, float)
    if f.shape[-1] != pts.size:
        raise ValueError(
            "got %d function values on a %d-point grid" % (f.shape[-1], pts.size))
    return np.trapezoid(f, pts, axis=-1)


def grid_supremum(f_values):
    """Supremum approximated by the maximum over grid values."""
    f = np.asarray(f_values, dtype=float)
    if f.size == 0:
        raise ValueError("cannot take the supremum of an empty vector")
    return float(f.max())


def empirical_quantiles(draws, probs):
    """Linear-interpolation (type 7) sample quantiles.

    Parameters
    ----------
    draws : array_like
        Nonempty sample.
    probs : array_like
        Probabilities in [0, 1].
    """
    draws = np.asarray(draws, dtype=float).ravel()
    if draws.size == 0:
        raise ValueError("cannot take quantiles of an empty sample")
    probs = np.asarray(probs, dtype=float)
    if np.any((probs < 0) | (probs > 1)):
        raise ValueError("quantile probabilities must lie in [0, 1]")
    return np.quantile(draws, probs)


def as_generator(seed):
    """Normalize a seed / Generator argument to a numpy Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
