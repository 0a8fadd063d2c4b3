import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from senskit.sample import (DegenerateSampleError, EmpiricalCdf, Grid,
                            InvalidPartitionError, KernelDensity, Sample,
                            empirical_quantiles, grid_supremum,
                            make_equiprobable_partition, trapezoid,
                            trivial_partition)


def make_sample(x_col, y=None):
    x_col = np.asarray(x_col, dtype=float)
    y = x_col if y is None else np.asarray(y, dtype=float)
    return Sample(x=x_col[:, None], y=y)


class TestSample:
    def test_shape_and_names(self):
        s = Sample(x=np.arange(6.0).reshape(3, 2), y=[1.0, 2.0, 3.0])
        assert s.n == 3 and s.k == 2
        assert s.input_names == ("x1", "x2")

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            Sample(x=np.array([[1.0], [np.nan]]), y=[1.0, 2.0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            Sample(x=np.ones((3, 1)), y=[1.0, 2.0])

    def test_rejects_single_row(self):
        with pytest.raises(ValueError):
            Sample(x=np.ones((1, 1)), y=[1.0])

    def test_arrays_are_frozen(self):
        s = make_sample([1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            s.y[0] = 9.0


class TestPartition:
    def test_exact_division(self):
        s = make_sample([0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
        p = make_equiprobable_partition(s, 0, 3)
        assert [sorted(m) for m in p.bin_members] == [[0, 1], [2, 3], [4, 5]]
        assert list(p.bin_counts) == [2, 2, 2]

    def test_exact_division_larger(self):
        s = make_sample(np.linspace(0, 1, 300))
        p = make_equiprobable_partition(s, 0, 15)
        assert np.all(p.bin_counts == 20)

    def test_leftmost_surplus(self):
        # 7 observations into 3 bins: ceil(7/3) = 3 goes to the first bin
        s = make_sample(np.arange(7.0))
        p = make_equiprobable_partition(s, 0, 3)
        assert list(p.bin_counts) == [3, 2, 2]

    def test_bins_ordered_along_input(self):
        rng = np.random.default_rng(0)
        s = make_sample(rng.normal(size=40))
        p = make_equiprobable_partition(s, 0, 5)
        x = s.x[:, 0]
        for left, right in zip(p.bin_members, p.bin_members[1:]):
            assert x[left].max() <= x[right].min()

    def test_ties_broken_by_row_index(self):
        s = make_sample([1.0, 1.0, 1.0, 1.0], y=[0.0, 1.0, 2.0, 3.0])
        p = make_equiprobable_partition(s, 0, 2)
        assert sorted(p.bin_members[0]) == [0, 1]

    def test_m_bounds(self):
        s = make_sample(np.arange(5.0))
        with pytest.raises(InvalidPartitionError):
            make_equiprobable_partition(s, 0, 1)
        with pytest.raises(InvalidPartitionError):
            make_equiprobable_partition(s, 0, 6)

    def test_trivial_partition(self):
        s = make_sample(np.arange(5.0))
        p = trivial_partition(s, 0)
        assert p.n_bins == 1 and len(p.bin_members[0]) == 5

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(4, 60), m=st.integers(2, 8), seed=st.integers(0, 99))
    def test_cover_and_count_invariants(self, n, m, seed):
        if m > n:
            return
        rng = np.random.default_rng(seed)
        s = make_sample(rng.normal(size=n))
        p = make_equiprobable_partition(s, 0, m)
        joined = np.sort(np.concatenate(p.bin_members))
        assert np.array_equal(joined, np.arange(n))
        counts = p.bin_counts
        assert counts.sum() == n
        assert set(counts) <= {n // m, -(-n // m)}


class TestEmpiricalCdf:
    def test_simple_counts(self):
        f = EmpiricalCdf([1.0, 2.0, 3.0])
        assert f(2.0) == pytest.approx(2.0 / 3.0)
        assert f(0.5) == 0.0
        assert f(3.0) == 1.0

    def test_all_ties(self):
        f = EmpiricalCdf([5.0, 5.0, 5.0])
        assert f(5.0) == 1.0
        assert f(4.999) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            EmpiricalCdf([])

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 999))
    def test_monotone_with_unit_range(self, seed):
        rng = np.random.default_rng(seed)
        f = EmpiricalCdf(rng.normal(size=17))
        grid = np.linspace(-4, 4, 101)
        vals = f(grid)
        assert np.all(np.diff(vals) >= 0)
        assert vals[0] == 0.0 and vals[-1] == 1.0


class TestKernelDensity:
    def test_two_kernel_closed_form(self):
        kd = KernelDensity([-1.0, 1.0], bandwidth=1.0)
        # average of two unit normals evaluated one unit from their centers
        assert kd(np.array([0.0]))[0] == pytest.approx(0.2419707, abs=1e-6)

    def test_large_sample_density_at_zero(self):
        rng = np.random.default_rng(1)
        kd = KernelDensity(rng.standard_normal(10_000))
        assert 0.35 <= kd(np.array([0.0]))[0] <= 0.45

    def test_normalization_within_one_percent(self):
        rng = np.random.default_rng(2)
        for draw in (rng.standard_normal(50), rng.exponential(2.0, 200)):
            kd = KernelDensity(draw)
            grid = kd.default_grid()
            total = trapezoid(kd(grid.points), grid)
            assert abs(total - 1.0) < 0.01

    def test_zero_variance_rejected(self):
        with pytest.raises(DegenerateSampleError):
            KernelDensity([3.0, 3.0, 3.0])


class TestNumericKernels:
    def test_trapezoid_constant(self):
        assert trapezoid([1.0, 1.0, 1.0], Grid([0.0, 0.5, 1.0])) == 1.0

    def test_trapezoid_linear_exact(self):
        assert trapezoid([0.0, 1.0], Grid([0.0, 1.0])) == pytest.approx(0.5)

    def test_trapezoid_quadratic(self):
        g = Grid(np.linspace(0, 1, 1001))
        assert trapezoid(g.points ** 2, g) == pytest.approx(1 / 3, abs=1e-6)

    def test_trapezoid_length_mismatch(self):
        with pytest.raises(ValueError):
            trapezoid([1.0, 2.0], Grid([0.0, 0.5, 1.0]))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 999), a=st.floats(-3, 3), b=st.floats(-3, 3))
    def test_trapezoid_linear_in_f_and_affine_exact(self, seed, a, b):
        rng = np.random.default_rng(seed)
        pts = np.sort(rng.uniform(-2, 2, size=12))
        pts += np.arange(12) * 1e-9  # enforce strict increase
        g = Grid(pts)
        f1 = rng.normal(size=12)
        f2 = rng.normal(size=12)
        lhs = trapezoid(2.5 * f1 - 0.5 * f2, g)
        rhs = 2.5 * trapezoid(f1, g) - 0.5 * trapezoid(f2, g)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
        affine = a * pts + b
        exact = 0.5 * a * (pts[-1] ** 2 - pts[0] ** 2) + b * (pts[-1] - pts[0])
        assert trapezoid(affine, g) == pytest.approx(exact, rel=1e-9, abs=1e-9)

    def test_supremum(self):
        assert grid_supremum([0.1, 0.9, 0.3]) == 0.9
        assert grid_supremum(np.zeros(5)) == 0.0
        with pytest.raises(ValueError):
            grid_supremum([])

    def test_identical_sample_cdf_difference_sup_is_zero(self):
        rng = np.random.default_rng(3)
        values = rng.normal(size=30)
        f = EmpiricalCdf(values)
        grid = np.linspace(values.min() - 1, values.max() + 1, 64)
        assert grid_supremum(np.abs(f(grid) - f(grid))) == 0.0


class TestQuantiles:
    def test_type7_median(self):
        assert empirical_quantiles(np.arange(1.0, 101.0), 0.5) == 50.5

    def test_extremes(self):
        draws = np.array([3.0, 1.0, 2.0])
        assert empirical_quantiles(draws, 0.0) == 1.0
        assert empirical_quantiles(draws, 1.0) == 3.0

    def test_constant(self):
        assert np.all(empirical_quantiles(np.full(9, 4.2),
                                          [0.1, 0.5, 0.9]) == 4.2)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            empirical_quantiles([1.0], [1.5])
        with pytest.raises(ValueError):
            empirical_quantiles([], [0.5])

    def test_grid_requires_increasing(self):
        with pytest.raises(ValueError):
            Grid([0.0, 0.0, 1.0])
