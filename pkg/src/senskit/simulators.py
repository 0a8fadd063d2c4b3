"""Built-in test simulators with known sensitivity measures, quasi-Monte
Carlo input generation and analytical / quadrature oracles."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.stats import qmc

from .sample import Grid, Sample, as_generator, trapezoid

GAMMA_RATIO_2 = "gamma-ratio-2"
LINEAR_21 = "linear-21"
EXTERNAL_CSV = "external-csv"


class OracleUnavailableError(ValueError):
    """No analytical sensitivity values exist for this simulator."""


@dataclass(frozen=True)
class SimulatorSpec:
    """Descriptor of a deterministic test simulator.

    Parameters
    ----------
    kind : str
        One of ``gamma-ratio-2``, ``linear-21`` or ``external-csv``.
    input_distributions : tuple of frozen scipy distributions
        Marginal law of each input.
    correlation : ndarray of shape (k, k) or None
        Input correlation matrix (Gaussian copula); None means independence.
    coefficients : ndarray or None
        Linear-model coefficients (linear simulators only).
    """

    kind: str
    input_distributions: tuple
    correlation: np.ndarray = None
    coefficients: np.ndarray = None

    def __post_init__(self):
        if self.correlation is not None:
            corr = np.asarray(self.correlation, dtype=float)
            if corr.shape != (self.k, self.k):
                raise ValueError("correlation matrix must be k x k")
            if not np.allclose(corr, corr.T):
                raise ValueError("correlation matrix must be symmetric")
            # cholesky doubles as the positive-definiteness check
            np.linalg.cholesky(corr)
            object.__setattr__(self, "correlation", corr)
        if self.coefficients is not None:
            object.__setattr__(
                self, "coefficients",
                np.asarray(self.coefficients, dtype=float))

    @property
    def k(self):
        return len(self.input_distributions)

    def evaluate(self, x):
        """Apply the deterministic response function row-wise."""
        x = np.atleast_2d(x)
        if self.kind == GAMMA_RATIO_2:
            return x[:, 0] / (x[:, 0] + x[:, 1])
        if self.kind == LINEAR_21:
            return x @ self.coefficients
        raise ValueError("simulator kind %r has no response function"
                         % self.kind)


def gamma_ratio_2():
    """Two-input simulator y = x1/(x1 + x2) with iid Gamma(3, 1) inputs."""
    return SimulatorSpec(
        kind=GAMMA_RATIO_2,
        input_distributions=(stats.gamma(3.0), stats.gamma(3.0)),
    )


def linear_gaussian(coefficients, rho=0.5):
    """Linear simulator y = sum(a_i x_i) with Normal(1, 1) inputs under
    constant pairwise correlation ``rho``."""
    a = np.asarray(coefficients, dtype=float)
    k = a.size
    corr = np.full((k, k), rho) + (1.0 - rho) * np.eye(k)
    return SimulatorSpec(
        kind=LINEAR_21,
        input_distributions=tuple(stats.norm(1.0, 1.0) for _ in range(k)),
        correlation=corr,
        coefficients=a,
    )


def correlated_linear_21():
    """The 21-input correlated linear simulator: a = (-4)x7, 2x7, 1x7."""
    return linear_gaussian([-4.0] * 7 + [2.0] * 7 + [1.0] * 7, rho=0.5)


def _uniform_block(n, k, seed, sequence):
    if sequence == "quasi_random":
        sob = qmc.Sobol(d=k, scramble=True, seed=as_generator(seed))
        with warnings.catch_warnings():
            # n is typically not a power of two; the balance warning is
            # advisory and the scrambled sequence stays valid
            warnings.simplefilter("ignore", UserWarning)
            return sob.random(n)
    if sequence == "pseudo_random":
        return as_generator(seed).random((n, k))
    raise ValueError("sequence must be 'quasi_random' or 'pseudo_random'")


def generate_sample(spec, n, seed=0, sequence="quasi_random"):
    """Draw an input/output sample from a built-in simulator.

    Inputs come from a scrambled Sobol sequence (``quasi_random``) or a
    seeded PRNG (``pseudo_random``), pushed through a Gaussian copula when a
    correlation matrix is present and through inverse-cdf transforms to the
    marginals. The deterministic response is evaluated row by row.

    Returns
    -------
    Sample
    """
    if spec.kind == EXTERNAL_CSV:
        raise ValueError("external-csv samples are ingested, not generated")
    if n < 2:
        raise ValueError("need n >= 2 simulator runs")
    u = _uniform_block(n, spec.k, seed, sequence)
    # guard the open unit interval before any ppf call
    tiny = np.finfo(float).tiny
    u = np.clip(u, tiny, 1.0 - 1e-16)
    if spec.correlation is not None:
        z = stats.norm.ppf(u)
        z = z @ np.linalg.cholesky(spec.correlation).T
        cols = []
        for j, dist in enumerate(spec.input_distributions):
            if getattr(dist.dist, "name", "") == "norm":
                cols.append(dist.mean() + dist.std() * z[:, j])
            else:
                cols.append(dist.ppf(stats.norm.cdf(z[:, j])))
        x = np.column_stack(cols)
    else:
        x = np.column_stack([
            dist.ppf(u[:, j])
            for j, dist in enumerate(spec.input_distributions)
        ])
    return Sample(x=x, y=spec.evaluate(x))


@dataclass(frozen=True)
class OracleTable:
    """Analytical sensitivity values, one row per input."""

    eta: np.ndarray
    delta: np.ndarray
    beta: np.ndarray

    def value(self, measure, input_index):
        return float(getattr(self, measure)[input_index])


def oracle_values(spec):
    """Analytical values of the three measures for the built-in simulators.

    ``gamma-ratio-2``: (eta, delta, beta) = (0.496, 0.315, 0.289) for both
    inputs. ``linear-21``: per-group values for the coefficient groups
    1-7, 8-14 and 15-21.
    """
    if spec.kind == GAMMA_RATIO_2:
        two = np.ones(2)
        return OracleTable(eta=0.496 * two, delta=0.315 * two,
                           beta=0.289 * two)
    if spec.kind == LINEAR_21 and spec.k == 21:
        groups = np.repeat([0, 1, 2], 7)
        return OracleTable(
            eta=np.array([0.309, 0.064, 0.092])[groups],
            delta=np.array([0.212, 0.084, 0.102])[groups],
            beta=np.array([0.205, 0.083, 0.101])[groups],
        )
    raise OracleUnavailableError(
        "no analytical sensitivity values for simulator kind %r" % spec.kind)


def gaussian_conditional_oracle(spec, input_index, n_x=400, n_y=4001):
    """Independent quadrature oracle for linear-Gaussian simulators.

    Both Y and Y | X_i are normal with closed-form moments, so the three
    measures reduce to one-dimensional quadrature over the input axis.
    Used to cross-check the tabulated analytical values.

    Returns
    -------
    (eta, delta, beta) : tuple of float
    """
    if spec.kind != LINEAR_21:
        raise ValueError("closed-form conditionals exist only for the "
                         "linear-Gaussian simulator")
    a = spec.coefficients
    corr = spec.correlation if spec.correlation is not None else np.eye(spec.k)
    var_y = float(a @ corr @ a)
    if var_y <= 0:
        raise ValueError("response has zero variance")
    mu_y = float(a.sum())  # all inputs have mean 1
    c = float((corr @ a)[input_index])  # cov(Y, X_i); var(X_i) = 1
    eta = c * c / var_y

    cond_var = max(var_y - c * c, 0.0)
    sd_y = np.sqrt(var_y)
    # Gauss-Legendre over the input axis, weighted by the N(1, 1) marginal
    nodes, wts = np.polynomial.legendre.leggauss(n_x)
    x_lo, x_hi = 1.0 - 6.0, 1.0 + 6.0
    xg = 0.5 * (nodes + 1) * (x_hi - x_lo) + x_lo
    wg = 0.5 * (x_hi - x_lo) * wts * stats.norm.pdf(xg, 1.0, 1.0)

    grid = Grid(np.linspace(mu_y - 6 * sd_y, mu_y + 6 * sd_y, n_y))
    yg = grid.points
    f_y = stats.norm.pdf(yg, mu_y, sd_y)
    F_y = stats.norm.cdf(yg, mu_y, sd_y)
    if cond_var == 0.0:
        # Y is a deterministic function of this input: the conditional law is
        # a point mass, so eta = 1, the L1 separation is total (delta = 1) and
        # the KS sup against the continuous marginal averages to 3/4
        return 1.0, 1.0, 0.75
    tau = np.sqrt(cond_var)
    mu_c = mu_y + c * (xg - 1.0)
    zc = (yg[None, :] - mu_c[:, None]) / tau
    f_c = np.exp(-0.5 * zc * zc) / (tau * np.sqrt(2 * np.pi))
    F_c = stats.norm.cdf(zc)
    l1 = trapezoid(np.abs(f_c - f_y), grid)
    ks = np.abs(F_c - F_y).max(axis=1)
    delta = float(np.sum(wg * 0.5 * l1))
    beta = float(np.sum(wg * ks))
    return eta, delta, beta
