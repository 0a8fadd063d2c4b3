"""Measure vocabulary and result containers shared by all estimators.

Three probabilistic sensitivity measures are supported: the variance-based
ratio ``eta``, the density-based (L1) importance ``delta`` and the cdf-based
(Kolmogorov-Smirnov) importance ``beta``. ``delta`` and ``eta`` each admit a
pdf-smoothing route and a cdf route; ``beta`` is cdf-based only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sample import empirical_quantiles

ETA = "eta"
DELTA = "delta"
BETA = "beta"
MEASURES = (ETA, DELTA, BETA)


def check_measures(measures):
    """Normalize and validate a measure selection."""
    if isinstance(measures, str):
        measures = (measures,)
    out = tuple(str(m).lower() for m in measures)
    bad = [m for m in out if m not in MEASURES]
    if bad:
        raise ValueError("unknown measures %r; choose from %r"
                         % (bad, list(MEASURES)))
    if not out:
        raise ValueError("at least one measure is required")
    return out


@dataclass(frozen=True)
class PointEstimate:
    """One frequentist point estimate for an (input, measure) pair.

    ``flagged`` marks values reported as computed but outside the measure's
    theoretical range (an eta estimate above one, for instance).
    """

    input_index: int
    measure: str
    value: float
    n_bins: int
    flagged: bool = False


@dataclass(frozen=True)
class PosteriorDraws:
    """Monte Carlo draws of one sensitivity measure for one input.

    The point estimate is the draw mean; credible intervals come from the
    empirical quantiles of the draws.
    """

    input_index: int
    measure: str
    scheme: str
    n_bins: int
    draws: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "draws", np.asarray(self.draws, dtype=float).ravel())
        if self.draws.size < 1:
            raise ValueError("need at least one posterior draw")

    @property
    def n_draws(self):
        return self.draws.size

    @property
    def point(self):
        return float(self.draws.mean())

    def interval(self, level=0.95):
        half = (1.0 - level) / 2.0
        lo, hi = empirical_quantiles(self.draws, [half, 1.0 - half])
        return float(lo), float(hi)


@dataclass(frozen=True)
class MeasureDrawSet:
    """Per-draw measure values from a partition-free posterior sample."""

    input_index: int
    scheme: str
    draws: dict  # measure -> ndarray of per-draw values
    n_skipped: int = 0

    def measures(self):
        return tuple(self.draws)

    def point(self, measure):
        return float(np.mean(self.draws[measure]))

    def interval(self, measure, level=0.95):
        half = (1.0 - level) / 2.0
        lo, hi = empirical_quantiles(self.draws[measure],
                                     [half, 1.0 - half])
        return float(lo), float(hi)
