import numpy as np
import pytest

from senskit.frequentist import (beta_diamond, delta_diamond, delta_star,
                                 eta_diamond, eta_star, point_estimate,
                                 step_cdf_gap_integral)
from senskit.sample import (DegenerateSampleError, InvalidPartitionError,
                            Sample, make_equiprobable_partition)
from senskit.simulators import gamma_ratio_2, generate_sample

ORACLE = {"eta": 0.496, "delta": 0.315, "beta": 0.289}


def index_sample(y):
    y = np.asarray(y, dtype=float)
    return Sample(x=np.arange(len(y), dtype=float)[:, None], y=y)


@pytest.fixture(scope="module")
def gamma_900():
    sample = generate_sample(gamma_ratio_2(), 900, seed=1)
    return sample, make_equiprobable_partition(sample, 0, 9)


class TestEtaEstimators:
    def test_hand_example(self):
        s = index_sample([1.0, 2.0, 3.0, 4.0])
        p = make_equiprobable_partition(s, 0, 2)
        assert eta_star(s, p).value == pytest.approx(0.8)
        assert eta_diamond(s, p).value == pytest.approx(0.8)

    def test_zero_when_bin_means_equal_global(self):
        s = index_sample([1.0, 3.0, 1.0, 3.0, 1.0, 3.0])
        p = make_equiprobable_partition(s, 0, 3)
        assert eta_star(s, p).value == pytest.approx(0.0)
        assert eta_diamond(s, p).value == pytest.approx(0.0, abs=1e-12)

    def test_star_equals_diamond_exactly_on_random_samples(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            y = rng.normal(size=60)
            s = Sample(x=rng.normal(size=(60, 2)), y=y)
            p = make_equiprobable_partition(s, rng.integers(0, 2), 6)
            assert eta_star(s, p).value == pytest.approx(
                eta_diamond(s, p).value, rel=1e-10, abs=1e-12)

    def test_step_integral_equals_mean_difference(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=20)
        b = rng.normal(size=50)
        # integrating (F_a - F_b) over the line recovers mean(b) - mean(a)
        assert step_cdf_gap_integral(a, b) == pytest.approx(
            b.mean() - a.mean(), rel=1e-10)

    def test_zero_output_variance_rejected(self):
        s = index_sample(np.ones(8))
        p = make_equiprobable_partition(s, 0, 2)
        with pytest.raises(DegenerateSampleError):
            eta_star(s, p)

    def test_gamma_ratio_point(self, gamma_900):
        sample, part = gamma_900
        assert 0.40 <= eta_star(sample, part).value <= 0.60


class TestDeltaEstimators:
    def test_identical_bins_give_zero(self):
        y = np.tile([0.1, 0.5, 0.9, 0.3], 4)
        s = index_sample(np.concatenate([y, y]))
        # bins (first half, second half) hold identical output values
        p = make_equiprobable_partition(s, 0, 2)
        assert delta_star(s, p).value < 0.06
        assert delta_diamond(s, p).value < 0.06

    def test_disjoint_supports_give_one(self):
        from senskit.sample import Grid
        rng = np.random.default_rng(6)
        y = np.concatenate([rng.normal(0, 0.3, 40),
                            rng.normal(1000, 0.3, 40)])
        s = index_sample(y)
        p = make_equiprobable_partition(s, 0, 2)
        # far-separated clumps blow up the marginal bandwidth, so a grid
        # fine enough for the within-bin spikes must be supplied
        grid = Grid(np.linspace(-700, 1700, 48001))
        assert delta_star(s, p, grid=grid).value == pytest.approx(
            1.0, abs=0.01)

    def test_half_switch(self, gamma_900):
        sample, part = gamma_900
        halved = delta_star(sample, part).value
        raw = delta_star(sample, part, half=False).value
        assert raw == pytest.approx(2 * halved, rel=1e-9)

    def test_routes_agree_smooth_case(self, gamma_900):
        sample, part = gamma_900
        star = delta_star(sample, part).value
        diamond = delta_diamond(sample, part).value
        assert abs(star - diamond) < 0.02

    def test_gamma_ratio_points(self, gamma_900):
        sample, part = gamma_900
        assert 0.25 <= delta_star(sample, part).value <= 0.40
        assert 0.25 <= delta_diamond(sample, part).value <= 0.40

    def test_too_fine_partition_rejected(self):
        s = index_sample(np.arange(6.0))
        p = make_equiprobable_partition(s, 0, 5)  # one bin has 1 member
        with pytest.raises(InvalidPartitionError):
            delta_star(s, p)


class TestBetaEstimator:
    def test_hand_example(self):
        s = index_sample([1.0, 2.0, 3.0, 4.0])
        p = make_equiprobable_partition(s, 0, 2)
        assert beta_diamond(s, p).value == pytest.approx(0.5)

    def test_identical_bins_give_zero(self):
        y = np.tile([0.1, 0.5, 0.9, 0.3], 4)
        s = index_sample(np.concatenate([y, y]))
        p = make_equiprobable_partition(s, 0, 2)
        assert beta_diamond(s, p).value == pytest.approx(0.0)

    def test_gamma_ratio_point(self, gamma_900):
        sample, part = gamma_900
        assert 0.22 <= beta_diamond(sample, part).value <= 0.36


class TestInvariances:
    def test_permutation_within_bins(self, gamma_900):
        sample, part = gamma_900
        rng = np.random.default_rng(7)
        perm = np.concatenate([rng.permutation(m) for m in part.bin_members])
        shuffled = Sample(x=sample.x[perm], y=sample.y[perm])
        part2 = make_equiprobable_partition(shuffled, 0, 9)
        for fn in (eta_star, beta_diamond):
            assert fn(sample, part).value == pytest.approx(
                fn(shuffled, part2).value, rel=1e-12)

    def test_beta_exact_under_monotone_transform(self, gamma_900):
        sample, part = gamma_900
        transformed = Sample(x=sample.x, y=np.exp(3.0 * sample.y))
        part2 = make_equiprobable_partition(transformed, 0, 9)
        assert beta_diamond(sample, part).value == beta_diamond(
            transformed, part2).value

    def test_delta_exact_under_affine_transform(self, gamma_900):
        sample, part = gamma_900
        transformed = Sample(x=sample.x, y=5.0 * sample.y - 2.0)
        part2 = make_equiprobable_partition(transformed, 0, 9)
        assert delta_star(sample, part).value == pytest.approx(
            delta_star(transformed, part2).value, rel=1e-9)

    def test_independence_noise_floor(self):
        spec = gamma_ratio_2()
        for seed in range(20):
            sample = generate_sample(spec, 900, seed=seed)
            rng = np.random.default_rng(1000 + seed)
            broken = Sample(x=sample.x, y=rng.permutation(sample.y))
            part = make_equiprobable_partition(broken, 0, 9)
            assert eta_star(broken, part).value < 0.15
            assert delta_star(broken, part).value < 0.15
            assert beta_diamond(broken, part).value < 0.15

    def test_refinement_consistency(self):
        spec = gamma_ratio_2()
        coarse, fine = [], []
        for seed in range(20):
            for n, m, bucket in ((300, 3, coarse), (900, 9, fine)):
                sample = generate_sample(spec, n, seed=seed)
                part = make_equiprobable_partition(sample, 0, m)
                bucket.append(
                    abs(eta_star(sample, part).value - ORACLE["eta"])
                    + abs(delta_star(sample, part).value - ORACLE["delta"])
                    + abs(beta_diamond(sample, part).value - ORACLE["beta"]))
        assert np.mean(fine) < np.mean(coarse)


def test_point_estimate_dispatch(gamma_900):
    sample, part = gamma_900
    assert point_estimate(sample, part, "eta", "pdf").value == \
        eta_star(sample, part).value
    assert point_estimate(sample, part, "delta", "cdf").value == \
        delta_diamond(sample, part).value
    # beta has a single estimator on both routes
    assert point_estimate(sample, part, "beta", "pdf").value == \
        point_estimate(sample, part, "beta", "cdf").value
    with pytest.raises(ValueError):
        point_estimate(sample, part, "eta", "nope")
