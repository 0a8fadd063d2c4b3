"""Partition-free estimation from the conditional density: an infinite
mixture of linear regressions whose covariate-dependent weights are
normalized Gaussian kernels.

The sampler augments the normalized-kernel weights with their joint
(mixture-of-experts) representation and then collapses all component
parameters, scanning allocations against closed-form Student-t / normal
predictives; new components enter through the prior predictive, which is
what lets local regression experts nucleate. Weights, kernel locations
and regressions are reinstantiated from their conjugate posteriors for
each stored draw. Measures integrate against the known input marginal."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.special import gammaln, ndtr

from .joint_mixture import stick_breaking_weights
from .measures import BETA, DELTA, ETA, MeasureDrawSet
from .sample import Grid, Sample, as_generator, trapezoid

logger = logging.getLogger(__name__)


def convex_hull_coefficient_spans(x, y):
    """Half-ranges of the slopes and intercepts of the convex-hull edges of
    the scatter, used to scale the regression-coefficient prior so that
    local linear components can span the data envelope."""
    pts = np.column_stack([x, y])
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return None
    verts = pts[hull.vertices]
    nxt = np.roll(verts, -1, axis=0)
    dx = nxt[:, 0] - verts[:, 0]
    dy = nxt[:, 1] - verts[:, 1]
    keep = np.abs(dx) > 1e-9 * max(np.ptp(x), 1e-12)
    if not np.any(keep):
        return None
    slopes = dy[keep] / dx[keep]
    intercepts = verts[keep, 1] - slopes * verts[keep, 0]
    return (float(np.ptp(intercepts)) / 2.0, float(np.ptp(slopes)) / 2.0)


@dataclass(frozen=True)
class ConditionalMixturePrior:
    """Base measure of the regression mixture.

    ``coef_location`` and the diagonal scales ``coef_spans`` define the
    normal prior N(b0, sigma_l * C^-1) on each component's (intercept,
    slope); the shared kernel precision and the per-component residual
    precision carry Gamma(1, 1) priors; kernel locations are normal around
    ``kernel_location`` with precision tau / ``kernel_precision_factor``.
    """

    coef_location: np.ndarray   # b0, shape (2,)
    coef_spans: np.ndarray      # (c_a, c_b), diag of C^-1 is their squares
    kernel_location: float      # mu0
    alpha: float = 1.0
    sigma_shape: float = 1.0
    sigma_rate: float = 1.0
    tau_shape: float = 1.0
    tau_rate: float = 1.0
    kernel_precision_factor: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "coef_location",
                           np.asarray(self.coef_location, dtype=float))
        spans = np.asarray(self.coef_spans, dtype=float)
        if np.any(spans <= 0):
            raise ValueError("coefficient spans must be positive")
        object.__setattr__(self, "coef_spans", spans)

    @property
    def coef_precision(self):
        """C = diag(1/c_a^2, 1/c_b^2)."""
        return np.diag(1.0 / self.coef_spans ** 2)

    @classmethod
    def from_sample(cls, sample, input_index, **kwargs):
        """Empirical hyperparameters: least-squares coefficients for the
        prior location, convex-hull envelope spans for the prior scales."""
        x = sample.x[:, input_index]
        y = sample.y
        design = np.column_stack([np.ones_like(x), x])
        b0, *_ = np.linalg.lstsq(design, y, rcond=None)
        spans = convex_hull_coefficient_spans(x, y)
        if spans is None:
            # (near-)degenerate scatter: scale by the residual spread
            resid = y - design @ b0
            floor = max(float(resid.std()), 1e-9 * max(float(y.std()), 1e-9))
            spans = (floor, floor / max(float(x.std()), 1e-9))
        c_a = max(spans[0], 1e-9 * max(float(np.abs(y).max()), 1.0))
        c_b = max(spans[1], 1e-12)
        return cls(coef_location=b0, coef_spans=(c_a, c_b),
                   kernel_location=float(x.mean()), **kwargs)


@dataclass(frozen=True)
class RegressionMixtureDraw:
    """One posterior draw: J regression components with kernel weights."""

    intercepts: np.ndarray
    slopes: np.ndarray
    variances: np.ndarray
    kernel_weights: np.ndarray
    kernel_locations: np.ndarray
    kernel_precision: float

    def __post_init__(self):
        for name in ("intercepts", "slopes", "variances", "kernel_weights",
                     "kernel_locations"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=float))
        if np.any(self.variances <= 0) or self.kernel_precision <= 0:
            raise ValueError("variances and kernel precision must be positive")
        w = self.kernel_weights
        if w.size == 0 or np.any(w <= 0):
            raise ValueError("kernel weights must be positive")
        object.__setattr__(self, "kernel_weights", w / w.sum())

    @property
    def n_components(self):
        return self.kernel_weights.size

    def weights_at(self, x):
        """Normalized covariate-dependent mixture weights, shape (J, ...)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        d2 = (x[None, :] - self.kernel_locations[:, None]) ** 2
        kern = self.kernel_weights[:, None] * np.exp(
            -0.5 * self.kernel_precision * d2)
        return kern / np.maximum(kern.sum(axis=0), 1e-300)


def _nig_regression_draw(rng, x, y, prior):
    """Conjugate draw of (intercept, slope, variance) for one component."""
    prec0 = prior.coef_precision
    b0 = prior.coef_location
    if x.size:
        design = np.column_stack([np.ones_like(x), x])
        prec_n = prec0 + design.T @ design
        rhs = prec0 @ b0 + design.T @ y
        mean_n = np.linalg.solve(prec_n, rhs)
        shape = prior.sigma_shape + 0.5 * x.size
        rate = prior.sigma_rate + 0.5 * (
            y @ y + b0 @ prec0 @ b0 - mean_n @ prec_n @ mean_n)
        rate = max(rate, 1e-12)
    else:
        prec_n, mean_n = prec0, b0
        shape, rate = prior.sigma_shape, prior.sigma_rate
    var = 1.0 / rng.gamma(shape, 1.0 / rate)
    cov = var * np.linalg.inv(prec_n)
    coef = rng.multivariate_normal(mean_n, cov)
    return coef[0], coef[1], var


def _slice_sample(log_density, x0, width, rng, max_steps=30):
    """One univariate slice-sampling update (stepping out and shrinkage)."""
    f0 = log_density(x0)
    level = f0 + np.log(rng.random())
    lo = x0 - width * rng.random()
    hi = lo + width
    for _ in range(max_steps):
        if log_density(lo) < level:
            break
        lo -= width
    for _ in range(max_steps):
        if log_density(hi) < level:
            break
        hi += width
    for _ in range(100):
        cand = lo + (hi - lo) * rng.random()
        if log_density(cand) >= level:
            return cand
        if cand < x0:
            lo = cand
        else:
            hi = cand
    return x0  # pragma: no cover - numerically stuck slice


def _log1m_exp(w):
    """log(1 - exp(-w)) for w > 0."""
    return np.log1p(-np.exp(-np.maximum(w, 1e-300)))


class _Standardizer:
    """Affine map between data units and the sampler's internal units."""

    def __init__(self, x, y):
        self.mx, self.sx = float(x.mean()), float(x.std())
        self.my, self.sy = float(y.mean()), float(y.std())
        if self.sx <= 0 or self.sy <= 0:
            raise ValueError("input and output must both vary")

    def forward(self, x, y):
        return (x - self.mx) / self.sx, (y - self.my) / self.sy

    def draw_to_data_units(self, intercepts, slopes, variances, omega, mu,
                           tau):
        b = self.sy * slopes / self.sx
        a = self.my + self.sy * intercepts - b * self.mx
        return dict(intercepts=a, slopes=b,
                    variances=self.sy ** 2 * variances,
                    kernel_weights=omega,
                    kernel_locations=self.mx + self.sx * mu,
                    kernel_precision=tau / self.sx ** 2)


def fit_bnc(sample, input_index, prior=None, burn_in=None, n_draws=1000,
            seed=None, max_components=50):
    """Posterior sample of the regression mixture for one input.

    The sampler treats the conditional model exactly: the intractable
    normalizing sum of the covariate-dependent weights is expanded through
    per-observation geometric latent counts whose category picks carry the
    denominator's information into conjugate stick-breaking weight updates
    and into slice moves for the kernel locations and shared precision.
    Allocations and per-component regressions remain exact conjugate steps.
    Data are standardized internally (the Gamma(1, 1) priors on the two
    precisions presume unit-scale data); stored draws are mapped back to
    data units.

    Returns
    -------
    list of RegressionMixtureDraw
    """
    x_raw = np.asarray(sample.x[:, input_index], dtype=float)
    y_raw = np.asarray(sample.y, dtype=float)
    if not (np.all(np.isfinite(x_raw)) and np.all(np.isfinite(y_raw))):
        raise ValueError("data contain NaN or infinite entries")
    n = x_raw.size
    if n < 10:
        raise ValueError("need at least 10 observations")
    if burn_in is None:
        burn_in = 10 * n
    if burn_in < 0 or n_draws < 1:
        raise ValueError("burn_in must be >= 0 and n_draws >= 1")
    scaler = _Standardizer(x_raw, y_raw)
    x, y = scaler.forward(x_raw, y_raw)
    if prior is None:
        prior = ConditionalMixturePrior.from_sample(
            Sample(x=x[:, None], y=y), 0)
    rng = as_generator(seed)
    n_slots = max_components
    mu0 = prior.kernel_location
    kpf = prior.kernel_precision_factor
    alpha = prior.alpha

    # localized start in standardized units (x variance is 1)
    tau = 9.0
    mu = np.quantile(x, np.linspace(0.01, 0.99, n_slots))
    dist2 = (x[:, None] - mu[None, :]) ** 2
    z = np.argmin(dist2, axis=1)
    omega = stick_breaking_weights(
        rng, np.bincount(z, minlength=n_slots), alpha)
    intercepts = np.empty(n_slots)
    slopes = np.empty(n_slots)
    variances = np.empty(n_slots)

    draws = []
    for sweep in range(burn_in + n_draws):
        counts = np.bincount(z, minlength=n_slots)
        for ell in range(n_slots):
            sel = z == ell if counts[ell] else slice(0, 0)
            intercepts[ell], slopes[ell], variances[ell] = \
                _nig_regression_draw(rng, x[sel], y[sel], prior)

        # allocations; the weight denominator is shared within each row
        kern = np.exp(-0.5 * tau * dist2)
        resid = y[:, None] - intercepts[None, :] - slopes[None, :] * x[:, None]
        logp = (np.log(omega)
                - 0.5 * tau * dist2
                - 0.5 * resid * resid / variances[None, :]
                - 0.5 * np.log(variances[None, :]))
        z = np.argmax(logp + rng.gumbel(size=logp.shape), axis=1)
        counts = np.bincount(z, minlength=n_slots)

        # geometric expansion of the weight denominators
        denom = np.clip(kern @ omega, 1e-10, 1.0 - 1e-12)
        n_rejected = np.minimum(
            np.floor(np.log(rng.random(n)) / np.log1p(-denom)), 500.0
        ).astype(np.intp)
        rows = np.repeat(np.arange(n), n_rejected)
        if rows.size:
            pick_logp = (np.log(omega)[None, :]
                         + _log1m_exp(0.5 * tau * dist2[rows, :]))
            picks = np.argmax(
                pick_logp + rng.gumbel(size=pick_logp.shape), axis=1)
            pick_counts = np.bincount(picks, minlength=n_slots)
        else:
            picks = rows
            pick_counts = np.zeros(n_slots, dtype=np.intp)

        omega = stick_breaking_weights(rng, counts + pick_counts, alpha)

        # kernel locations: slice moves where data or picks are involved
        involved = (counts > 0) | (pick_counts > 0)
        for ell in np.nonzero(involved)[0]:
            xa = x[z == ell]
            xp = x[rows[picks == ell]] if rows.size else x[:0]

            def log_density(m, xa=xa, xp=xp):
                val = (-0.5 * tau / kpf * (m - mu0) ** 2
                       - 0.5 * tau * np.square(xa - m).sum())
                if xp.size:
                    val += _log1m_exp(0.5 * tau * np.square(xp - m)).sum()
                return val

            mu[ell] = _slice_sample(log_density, mu[ell],
                                    width=1.0 / np.sqrt(tau), rng=rng)
        dist2 = (x[:, None] - mu[None, :]) ** 2

        # shared kernel precision: slice move on log(tau)
        assigned_d2 = dist2[np.arange(n), z].sum()
        loc_q = ((mu[involved] - mu0) ** 2).sum() / kpf
        n_involved = int(involved.sum())
        pick_d2 = dist2[rows, picks] if rows.size else None

        def log_density_tau(lt):
            t = np.exp(lt)
            val = (prior.tau_shape * lt - prior.tau_rate * t
                   + 0.5 * n_involved * lt
                   - 0.5 * t * (loc_q + assigned_d2))
            if pick_d2 is not None:
                val += _log1m_exp(0.5 * t * pick_d2).sum()
            return val

        tau = np.exp(_slice_sample(log_density_tau, np.log(tau),
                                   width=0.5, rng=rng))

        # refresh uninvolved kernels from the prior under the new precision
        idle = ~involved
        if idle.any():
            mu[idle] = mu0 + np.sqrt(kpf / tau) * rng.standard_normal(
                int(idle.sum()))
            dist2[:, idle] = (x[:, None] - mu[None, idle]) ** 2

        if sweep >= burn_in:
            occ = np.nonzero(counts)[0]
            draws.append(RegressionMixtureDraw(**scaler.draw_to_data_units(
                intercepts[occ].copy(), slopes[occ].copy(),
                variances[occ].copy(), omega[occ].copy(), mu[occ].copy(),
                tau)))
    return draws


def bnc_conditional_density(draw, x, grid):
    """Conditional density of y given x on a grid, for one draw."""
    w = draw.weights_at(x)[:, 0]
    yg = grid.points if isinstance(grid, Grid) else np.asarray(grid, float)
    means = draw.intercepts + draw.slopes * float(x)
    sd = np.sqrt(draw.variances)
    zz = (yg[None, :] - means[:, None]) / sd[:, None]
    dens = np.exp(-0.5 * zz * zz) / (sd[:, None] * np.sqrt(2 * np.pi))
    return (w[:, None] * dens).sum(axis=0)


def default_x_grid(input_distribution, size=201, mass=0.999):
    """Uniform grid over the central probability mass of the input law."""
    half = (1.0 - mass) / 2.0
    lo, hi = input_distribution.ppf([half, 1.0 - half])
    return Grid(np.linspace(lo, hi, size))


def default_y_grid(draws, x_lo, x_hi, size=512, spread=5.0):
    """Grid covering the regression lines over the x-range plus residual
    tails, pooled over draws."""
    lo = np.inf
    hi = -np.inf
    for d in draws:
        line = np.concatenate([d.intercepts + d.slopes * x_lo,
                               d.intercepts + d.slopes * x_hi])
        pad = spread * np.sqrt(d.variances.max())
        lo = min(lo, line.min() - pad)
        hi = max(hi, line.max() + pad)
    return Grid(np.linspace(lo, hi, size))


def bnc_measures(draws, input_distribution, input_index=0, x_grid=None,
                 y_grid=None):
    """Per-draw sensitivity measures for a regression-mixture sample.

    The marginal output density of each draw is the conditional mixed over
    the known input marginal; measures then follow by nested quadrature.

    Returns
    -------
    MeasureDrawSet
    """
    if not draws:
        raise ValueError("need at least one posterior draw")
    if x_grid is None:
        x_grid = default_x_grid(input_distribution)
    xg = x_grid.points
    if y_grid is None:
        y_grid = default_y_grid(draws, xg[0], xg[-1])
    yg = y_grid.points
    f_x = input_distribution.pdf(xg)

    eta = []
    delta = []
    beta = []
    skipped = 0
    for draw in draws:
        w_cond = draw.weights_at(xg)              # (J, Gx)
        lines = (draw.intercepts[:, None]
                 + draw.slopes[:, None] * xg[None, :])  # (J, Gx)
        sd = np.sqrt(draw.variances)

        cond_pdf = np.zeros((xg.size, yg.size))
        cond_cdf = np.zeros((xg.size, yg.size))
        for ell in range(draw.n_components):
            zz = (yg[None, :] - lines[ell][:, None]) / sd[ell]
            cond_pdf += (w_cond[ell][:, None]
                         * np.exp(-0.5 * zz * zz) / (sd[ell]
                                                     * np.sqrt(2 * np.pi)))
            cond_cdf += w_cond[ell][:, None] * ndtr(zz)

        f_y = trapezoid(cond_pdf.T * f_x[None, :], x_grid)   # (Gy,)
        cdf_y = trapezoid(cond_cdf.T * f_x[None, :], x_grid)
        mu_y = trapezoid(yg * f_y, y_grid)
        v_y = trapezoid((yg - mu_y) ** 2 * f_y, y_grid)
        if v_y <= 0:
            skipped += 1
            logger.warning("skipping degenerate regression-mixture draw")
            continue

        mean_cond = (w_cond * lines).sum(axis=0)             # (Gx,)
        mu_tilde = trapezoid(mean_cond * f_x, x_grid)
        v_between = trapezoid((mean_cond - mu_tilde) ** 2 * f_x, x_grid)
        eta.append(v_between / v_y)

        l1_y = trapezoid(np.abs(f_y[None, :] - cond_pdf), y_grid)
        delta.append(0.5 * trapezoid(l1_y * f_x, x_grid))

        ks = np.abs(cdf_y[None, :] - cond_cdf).max(axis=1)
        beta.append(trapezoid(ks * f_x, x_grid))

    if not eta:
        raise ValueError("every posterior draw was degenerate")
    return MeasureDrawSet(
        input_index=input_index, scheme="bnc",
        draws={ETA: np.array(eta), DELTA: np.array(delta),
               BETA: np.array(beta)},
        n_skipped=skipped)


def marginal_mean_two_ways(draw, input_distribution, x_grid=None,
                           y_grid=None):
    """Fubini check: the marginal mean computed from the mixed marginal
    density and from the conditional-mean curve must agree."""
    if x_grid is None:
        x_grid = default_x_grid(input_distribution)
    xg = x_grid.points
    if y_grid is None:
        y_grid = default_y_grid([draw], xg[0], xg[-1])
    yg = y_grid.points
    f_x = input_distribution.pdf(xg)
    w_cond = draw.weights_at(xg)
    lines = draw.intercepts[:, None] + draw.slopes[:, None] * xg[None, :]
    mean_cond = (w_cond * lines).sum(axis=0)
    via_cond = trapezoid(mean_cond * f_x, x_grid)

    sd = np.sqrt(draw.variances)
    cond_pdf = np.zeros((xg.size, yg.size))
    for ell in range(draw.n_components):
        zz = (yg[None, :] - lines[ell][:, None]) / sd[ell]
        cond_pdf += (w_cond[ell][:, None]
                     * np.exp(-0.5 * zz * zz) / (sd[ell] * np.sqrt(2 * np.pi)))
    f_y = trapezoid(cond_pdf.T * f_x[None, :], x_grid)
    via_marginal = trapezoid(yg * f_y, y_grid)
    return float(via_cond), float(via_marginal)
