import numpy as np
import pytest
from scipy import stats

from senskit.joint_mixture import (JointMixturePrior, MixtureDraw,
                                   bnj_conditional_density, bnj_measures,
                                   default_y_grid, fit_bnj)
from senskit.sample import Grid, Sample, trapezoid


def single_component(cov, mean=(0.0, 0.0)):
    return MixtureDraw(weights=[1.0], means=[list(mean)],
                       covariances=[cov])


class TestMixtureDraw:
    def test_weights_renormalized(self):
        d = MixtureDraw(weights=[2.0, 2.0],
                        means=[[0, 0], [1, 1]],
                        covariances=[np.eye(2), np.eye(2)])
        assert np.allclose(d.weights, [0.5, 0.5])

    def test_rejects_non_pd_covariance(self):
        with pytest.raises(ValueError):
            single_component([[1.0, 1.5], [1.5, 1.0]])

    def test_marginal_moments_single(self):
        d = single_component([[2.0, 0.3], [0.3, 5.0]], mean=(1.0, -2.0))
        mean, var = d.marginal_moments()
        assert mean == -2.0 and var == 5.0


class TestConditionalDensity:
    def test_independence_equals_marginal_component(self):
        d = single_component([[1.0, 0.0], [0.0, 4.0]], mean=(0.0, 1.0))
        g = Grid(np.linspace(-9, 11, 801))
        for x in (-2.0, 0.0, 3.0):
            dens = bnj_conditional_density(d, x, g)
            assert np.allclose(dens, stats.norm(1.0, 2.0).pdf(g.points),
                               atol=1e-12)

    def test_bivariate_conditioning_formula(self):
        d = single_component([[1.0, 0.5], [0.5, 1.0]])
        g = Grid(np.linspace(-6, 6, 3001))
        dens = bnj_conditional_density(d, 1.0, g)
        mean = trapezoid(dens * g.points, g)
        var = trapezoid(dens * (g.points - mean) ** 2, g)
        assert mean == pytest.approx(0.5, abs=1e-6)
        assert var == pytest.approx(0.75, abs=1e-6)

    def test_normalization_random_draws(self):
        rng = np.random.default_rng(0)
        g = Grid(np.linspace(-30, 30, 1024))
        for _ in range(100):
            cov = rng.uniform(0.3, 2.0, size=2)
            rho = rng.uniform(-0.8, 0.8)
            off = rho * np.sqrt(cov[0] * cov[1])
            d = MixtureDraw(
                weights=rng.dirichlet([1.0] * 3),
                means=rng.normal(0, 2, size=(3, 2)),
                covariances=[[[cov[0], off], [off, cov[1]]]] * 3)
            dens = bnj_conditional_density(d, rng.normal(), g)
            assert trapezoid(dens, g) == pytest.approx(1.0, abs=0.01)


class TestMeasures:
    def test_exact_independence_gives_zero(self):
        d = single_component([[1.0, 0.0], [0.0, 3.0]], mean=(1.0, 2.0))
        ms = bnj_measures([d], stats.norm(1.0, 1.0))
        assert ms.draws["eta"][0] == pytest.approx(0.0, abs=1e-10)
        assert ms.draws["delta"][0] <= 0.02
        assert ms.draws["beta"][0] <= 0.02

    def test_mixture_variance_identity(self):
        rng = np.random.default_rng(1)
        draws = []
        for _ in range(5):
            v = rng.uniform(0.5, 2.0, size=(2, 2))
            covs = [np.diag(row) for row in v]
            draws.append(MixtureDraw(weights=rng.dirichlet([1, 1]),
                                     means=rng.normal(0, 1, (2, 2)),
                                     covariances=covs))
        grid = default_y_grid(draws, size=2048, spread=7.0)
        for d in draws:
            mean, var = d.marginal_moments()
            w, mu2 = d.weights, d.means[:, 1]
            sd2 = np.sqrt(d.covariances[:, 1, 1])
            f = (w[:, None] * stats.norm.pdf(
                grid.points[None, :], mu2[:, None], sd2[:, None])).sum(0)
            num_var = trapezoid(f * (grid.points - mean) ** 2, grid)
            assert num_var == pytest.approx(var, rel=0.01)

    def test_label_permutation_invariance(self):
        d = MixtureDraw(weights=[0.3, 0.7],
                        means=[[0, 0], [2, 1]],
                        covariances=[np.eye(2), [[1, 0.4], [0.4, 2]]])
        flipped = MixtureDraw(weights=d.weights[::-1],
                              means=d.means[::-1],
                              covariances=d.covariances[::-1])
        dist = stats.norm(0.5, 1.2)
        a = bnj_measures([d], dist)
        b = bnj_measures([flipped], dist)
        for measure in ("eta", "delta", "beta"):
            assert a.draws[measure][0] == pytest.approx(
                b.draws[measure][0], rel=1e-10)

    def test_draw_bounds(self):
        rng = np.random.default_rng(2)
        xy = rng.multivariate_normal([0, 0], [[1, 0.6], [0.6, 1]], 300)
        s = Sample(x=xy[:, :1], y=xy[:, 1])
        draws = fit_bnj(s, 0, burn_in=200, n_draws=100, seed=3)
        ms = bnj_measures(draws, stats.norm(0, 1))
        assert np.all(ms.draws["eta"] <= 1.0 + 0.02)
        for measure in ("delta", "beta"):
            assert np.all((ms.draws[measure] >= 0)
                          & (ms.draws[measure] <= 1))


class TestSampler:
    def test_single_cluster_recovers_mean(self):
        rng = np.random.default_rng(3)
        xy = rng.multivariate_normal([1, -7], [[1, -5.5], [-5.5, 98]], 500)
        s = Sample(x=xy[:, :1], y=xy[:, 1])
        draws = fit_bnj(s, 0, burn_in=300, n_draws=200, seed=7)
        means = np.array([d.marginal_moments()[0] for d in draws])
        spread = max(means.std(), 1e-3)
        assert abs(means.mean() - s.y.mean()) < 3 * spread

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(4)
        xy = rng.normal(size=(80, 2))
        s = Sample(x=xy[:, :1], y=xy[:, 1])
        for d in fit_bnj(s, 0, burn_in=50, n_draws=30, seed=8):
            assert d.weights.sum() == pytest.approx(1.0, rel=1e-12)

    def test_two_separated_clusters_modal_count(self):
        rng = np.random.default_rng(5)
        a = rng.multivariate_normal([-10, -10], [[1, 0.5], [0.5, 1]], 200)
        b = rng.multivariate_normal([10, 10], [[1, -0.3], [-0.3, 1]], 200)
        s = Sample(x=np.vstack([a, b])[:, :1], y=np.vstack([a, b])[:, 1])
        draws = fit_bnj(s, 0, burn_in=800, n_draws=400, seed=21)
        modal = np.argmax(np.bincount([d.n_components for d in draws]))
        assert modal in (2, 3)

    def test_chain_determinism(self):
        rng = np.random.default_rng(6)
        xy = rng.normal(size=(60, 2))
        s = Sample(x=xy[:, :1], y=xy[:, 1])
        a = fit_bnj(s, 0, burn_in=40, n_draws=10, seed=9)
        b = fit_bnj(s, 0, burn_in=40, n_draws=10, seed=9)
        for da, db in zip(a, b):
            assert np.array_equal(da.weights, db.weights)
            assert np.array_equal(da.means, db.means)

    def test_prior_from_sample_anchors(self):
        rng = np.random.default_rng(7)
        x = rng.normal(2.0, 3.0, 100)
        y = rng.normal(-1.0, 0.5, 100)
        prior = JointMixturePrior.from_sample(
            Sample(x=x[:, None], y=y), 0)
        assert prior.anchor_mean[0] == pytest.approx(x.mean())
        assert prior.anchor_cov[1, 1] == pytest.approx(y.var())
        assert prior.alpha == 1.0 and prior.df == 4.0
