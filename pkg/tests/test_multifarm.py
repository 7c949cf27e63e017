import itertools

import numpy as np
import pytest
from oracles import REF1, RefFarm, independent_sum_cdf_grid
from scipy import stats

from windsum.copulas import Gumbel, Independence
from windsum.errors import DomainError
from windsum.marginals import GumbelMax, PowerCurve, Weibull, farm_output_distribution
from windsum.mcs import ks_distance, sample_independent_sum
from windsum.multifarm import (
    MAX_FARMS,
    aggregate_recursive,
    critical_points,
    dependent_sum,
    subset_sums,
)
from windsum.pairsum import SumOptions, sum_distribution


def farms_with_ratings(ratings):
    laws = [Weibull(2.0, 10.0), GumbelMax(10.0, 8.0), Weibull(2.5, 9.0), GumbelMax(9.0, 6.0)]
    return [farm_output_distribution(laws[i % 4], PowerCurve(rated=r)) for i, r in enumerate(ratings)]


class TestCriticalPoints:
    def test_single(self):
        cp = critical_points([100])
        assert cp.points.tolist() == [0.0, 100.0]
        assert cp.segments == [(0.0, 100.0)]

    def test_three(self):
        cp = critical_points([100, 150, 200])
        assert cp.points.tolist() == [0, 100, 150, 200, 250, 300, 350, 450]
        assert cp.n_subsets == 8
        assert len(cp.segments) == 7

    def test_dedup(self):
        cp = critical_points([100, 100])
        assert cp.points.tolist() == [0.0, 100.0, 200.0]
        assert cp.multiplicity.tolist() == [1, 2, 1]

    def test_float_dedup(self):
        cp = critical_points([0.1, 0.2, 0.3])
        # 0.1 + 0.2 and 0.3 differ in floating point but are one point
        assert cp.points.size == 7
        assert cp.multiplicity.tolist() == [1, 1, 1, 2, 1, 1, 1]

    @pytest.mark.parametrize("n", range(1, MAX_FARMS + 1))
    def test_subset_count(self, n):
        rng = np.random.default_rng(n)
        rated = rng.uniform(10, 200, n)
        cp = critical_points(rated)
        assert subset_sums(rated).size == 2 ** n
        assert cp.n_subsets == 2 ** n
        assert cp.multiplicity.sum() == 2 ** n
        assert cp.points[0] == 0.0
        assert cp.points[-1] == pytest.approx(rated.sum(), rel=1e-12)
        assert np.all(np.diff(cp.points) > 0)

    def test_subset_sums_by_enumeration(self):
        rated = [3.0, 5.0, 11.0, 17.0]
        brute = sorted(sum(c) for k in range(5) for c in itertools.combinations(rated, k))
        assert sorted(subset_sums(rated).tolist()) == brute

    @pytest.mark.parametrize("rated", [[], [100, 0], [100, -5], [np.inf], [1.0] * (MAX_FARMS + 1)])
    def test_invalid(self, rated):
        with pytest.raises(DomainError):
            critical_points(rated)


class TestGeneralEngine:
    def test_matches_pair_formulas(self, unequal_pair, gumbel):
        a, b = unequal_pair
        ref = sum_distribution(a, b, gumbel)
        gen = dependent_sum(a, b, gumbel)
        np.testing.assert_allclose(gen.atom_locs, [0, 80, 130, 210])
        np.testing.assert_allclose(gen.atom_masses, ref.impulses, atol=1e-12)
        s = np.linspace(0.25, 209.75, 420)
        np.testing.assert_allclose(gen.pdf(s), ref.density(s), atol=1e-9)
        np.testing.assert_allclose(gen.cdf(s), ref.cdf(s), atol=1e-9)

    def test_equal_ratings_merge(self, farm1, farm2, gumbel, default_sum):
        gen = dependent_sum(farm1, farm2, gumbel)
        assert gen.atom_locs.tolist() == [0.0, 100.0, 200.0]
        np.testing.assert_allclose(gen.atom_masses, default_sum.distribution.atom_masses, atol=1e-12)


class TestAggregate:
    def test_identity(self, farm1):
        assert aggregate_recursive([farm1]) is farm1

    def test_two_farms_equal_pair_sum(self, farm1, farm2, gumbel, default_sum):
        agg = aggregate_recursive([farm1, farm2], [gumbel], options=SumOptions(gmm_components=6))
        s = np.linspace(0, 200, 801)
        np.testing.assert_array_equal(agg.cdf(s), default_sum.cdf(s))
        np.testing.assert_array_equal(agg.pdf(s), default_sum.distribution.pdf(s))
        np.testing.assert_array_equal(agg.atom_masses, default_sum.distribution.atom_masses)

    def test_copula_count(self, farm1):
        with pytest.raises(DomainError):
            aggregate_recursive([farm1, farm1, farm1], [Independence()])
        with pytest.raises(DomainError):
            aggregate_recursive([])

    def test_bad_order(self, farm1):
        with pytest.raises(DomainError):
            aggregate_recursive([farm1] * 3, order=[0, 0, 1])

    def test_three_independent_atoms(self, farm1):
        agg = aggregate_recursive([farm1] * 3)
        assert agg.kind == "recursive"
        assert agg.mass_at(0.0) == pytest.approx(REF1.zero ** 3, abs=1e-12)
        assert agg.mass_at(0.0) == pytest.approx(6.815e-4, abs=2e-4)
        assert agg.mass_at(300.0) == pytest.approx(REF1.full ** 3, abs=1e-12)
        assert agg.mass_at(100.0) == pytest.approx(3 * REF1.full * REF1.zero ** 2, abs=1e-12)
        assert agg.audit_normalization() <= 1e-6

    def test_three_independent_against_sampling(self, farm1):
        agg = aggregate_recursive([farm1] * 3)
        x = sample_independent_sum([farm1] * 3, 1_000_000, seed=17)
        assert ks_distance(agg.cdf, x, agg.cdf_left) <= 0.01

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_independent_against_convolution(self, n):
        ratings = [60.0, 100.0, 80.0, 120.0][:n]
        farms = farms_with_ratings(ratings)
        laws = [stats.weibull_min(2.0, scale=10.0), stats.gumbel_r(10.0, 8.0),
                stats.weibull_min(2.5, scale=9.0), stats.gumbel_r(9.0, 6.0)]
        refs = [RefFarm(laws[i % 4], rated=r) for i, r in enumerate(ratings)]
        agg = aggregate_recursive(farms)
        x, c = independent_sum_cdf_grid(refs, 0.05)
        assert np.max(np.abs(agg.cdf(x) - c)) <= 1e-6
        assert agg.audit_normalization() <= 1e-6

    def test_atoms_on_critical_points(self):
        ratings = [50.0, 80.0, 100.0]
        agg = aggregate_recursive(farms_with_ratings(ratings), [Gumbel(2.0), Gumbel(3.0)])
        points = critical_points(ratings).points
        for loc in agg.atom_locs:
            assert np.min(np.abs(points - loc)) < 1e-9
        assert agg.atom_locs.size == points.size
        assert agg.audit_normalization() <= 1e-6
        s = np.linspace(0, 230, 2000)
        assert np.all(np.diff(agg.cdf(s)) >= 0)
        assert agg.pdf(s).min() >= -1e-12

    def test_order_matters_under_dependence(self):
        farms = farms_with_ratings([50.0, 80.0, 100.0])
        cps = [Gumbel(3.0), Gumbel(1.5)]
        a = aggregate_recursive(farms, cps, order="given")
        b = aggregate_recursive(farms, cps, order=[2, 1, 0])
        s = np.linspace(0, 230, 101)
        assert np.max(np.abs(a.cdf(s) - b.cdf(s))) > 1e-4
        c = aggregate_recursive(farms, order="given")
        d = aggregate_recursive(farms, order=[2, 1, 0])
        np.testing.assert_allclose(c.cdf(s), d.cdf(s), atol=1e-8)

    def test_ascending_is_default(self):
        farms = farms_with_ratings([100.0, 50.0, 80.0])
        cps = [Gumbel(2.0), Gumbel(2.0)]
        a = aggregate_recursive(farms, cps)
        b = aggregate_recursive(farms, cps, order=[1, 2, 0])
        s = np.linspace(0, 230, 51)
        np.testing.assert_array_equal(a.cdf(s), b.cdf(s))
