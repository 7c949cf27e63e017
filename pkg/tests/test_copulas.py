import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from windsum.copulas import CHUNK, Gumbel, Independence, chunked, kendall_tau, make_copula
from windsum.errors import ConstructionError, DomainError

mp.mp.dps = 40


def mp_gumbel(alpha):
    a = mp.mpf(alpha)

    def C(u, v):
        return mp.exp(-((-mp.log(u)) ** a + (-mp.log(v)) ** a) ** (1 / a))

    return C


def mp_partial_u(alpha, u, v):
    C = mp_gumbel(alpha)
    return mp.diff(lambda x: C(x, mp.mpf(v)), mp.mpf(u))


def mp_density(alpha, u, v):
    C = mp_gumbel(alpha)
    return mp.diff(lambda x, y: C(x, y), (mp.mpf(u), mp.mpf(v)), (1, 1))


def empirical_tau(x, y):
    return stats.kendalltau(x, y).statistic


class TestValues:
    def test_independence(self):
        cp = Independence()
        assert cp.cdf(0.5, 0.5) == 0.25
        assert cp.partial_u(0.3, 0.7) == 0.7
        assert cp.partial_v(0.3, 0.7) == 0.3
        assert cp.density(0.2, 0.9) == 1.0

    def test_gumbel_cdf_at_half(self):
        # S = 2 (ln 2)^a; C = exp(-S^(1/a)) = 2^(-2^(1/a))
        expected = float(mp_gumbel(3.65)(mp.mpf("0.5"), mp.mpf("0.5")))
        assert expected == pytest.approx(2.0 ** (-(2.0 ** (1 / 3.65))), rel=1e-14)
        assert Gumbel(3.65).cdf(0.5, 0.5) == pytest.approx(expected, rel=1e-13)
        assert expected == pytest.approx(0.4325286, abs=5e-8)

    def test_gumbel_partial_at_half(self):
        expected = float(mp_partial_u(3.65, "0.5", "0.5"))
        assert Gumbel(3.65).partial_u(0.5, 0.5) == pytest.approx(expected, rel=1e-12)
        assert Gumbel(3.65).partial_v(0.5, 0.5) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.5229844, abs=5e-8)

    def test_gumbel_density_at_half(self):
        cp = Gumbel(3.65)
        expected = float(mp_density(3.65, "0.5", "0.5"))
        assert cp.density(0.5, 0.5) == pytest.approx(expected, rel=1e-12)
        h = 1e-4
        fd = (cp.cdf(0.5 + h, 0.5 + h) - cp.cdf(0.5 + h, 0.5 - h)
              - cp.cdf(0.5 - h, 0.5 + h) + cp.cdf(0.5 - h, 0.5 - h)) / (4 * h * h)
        assert cp.density(0.5, 0.5) == pytest.approx(fd, rel=1e-4)

    @pytest.mark.parametrize("alpha", [1.0, 1.5, 3.65, 8.0, 20.0])
    def test_against_high_precision(self, alpha):
        cp = Gumbel(alpha)
        C = mp_gumbel(alpha)
        for u, v in [(0.1, 0.9), (0.3, 0.3), (0.75, 0.2), (0.95, 0.99), (0.02, 0.5)]:
            assert cp.cdf(u, v) == pytest.approx(float(C(mp.mpf(u), mp.mpf(v))), rel=1e-12)
            assert cp.partial_u(u, v) == pytest.approx(float(mp_partial_u(alpha, u, v)), rel=1e-10)
            assert cp.density(u, v) == pytest.approx(float(mp_density(alpha, u, v)), rel=1e-9)

    def test_gumbel_one_is_independence(self):
        g, i = Gumbel(1.0), Independence()
        u, v = np.meshgrid(np.linspace(0.01, 0.99, 40), np.linspace(0.01, 0.99, 40))
        np.testing.assert_allclose(g.cdf(u, v), i.cdf(u, v), atol=1e-12)
        np.testing.assert_allclose(g.partial_u(u, v), i.partial_u(u, v), atol=1e-12)
        np.testing.assert_allclose(g.density(u, v), 1.0, atol=1e-10)
        assert g.density(0.3, 0.7) == pytest.approx(1.0, abs=1e-10)


class TestBoundaries:
    @pytest.mark.parametrize("cp", [Independence(), Gumbel(1.0), Gumbel(3.65), Gumbel(50.0)])
    def test_grounded_and_margins(self, cp):
        x = np.linspace(0, 1, 51)
        np.testing.assert_array_equal(cp.cdf(x, 0.0), 0.0)
        np.testing.assert_array_equal(cp.cdf(0.0, x), 0.0)
        np.testing.assert_allclose(cp.cdf(x, 1.0), x, atol=1e-15)
        np.testing.assert_allclose(cp.cdf(1.0, x), x, atol=1e-15)

    def test_partial_at_v_one(self):
        assert Gumbel(3.65).partial_u(0.4, 1.0) == 1.0
        assert Gumbel(3.65).partial_u(0.4, 0.0) == 0.0

    def test_domain_errors(self):
        cp = Gumbel(2.0)
        with pytest.raises(DomainError):
            cp.cdf(1.2, 0.5)
        with pytest.raises(DomainError):
            cp.cdf(np.nan, 0.5)
        with pytest.raises(DomainError):
            cp.partial_u(0.0, 0.5)
        with pytest.raises(DomainError):
            cp.partial_v(0.5, 0.0)
        with pytest.raises(DomainError):
            cp.density(0.0, 0.5)
        with pytest.raises(DomainError):
            cp.density(0.5, 1.0)

    @pytest.mark.parametrize("alpha", [0.5, -1.0, np.inf, np.nan])
    def test_bad_alpha(self, alpha):
        with pytest.raises(ConstructionError):
            Gumbel(alpha)

    def test_factory(self):
        assert make_copula("gumbel", 2) == Gumbel(2.0)
        assert make_copula("Independence") == Independence()
        with pytest.raises(ConstructionError):
            make_copula("clayton", 2)
        with pytest.raises(ConstructionError):
            make_copula("gumbel")


class TestProperties:
    @pytest.mark.parametrize("alpha", [1.0, 2.0, 3.65, 8.0])
    def test_frechet_bounds(self, alpha, rng):
        u, v = rng.random((2, 10_000))
        c = Gumbel(alpha).cdf(u, v)
        assert np.all(c >= np.maximum(u + v - 1, 0) - 1e-12)
        assert np.all(c <= np.minimum(u, v) + 1e-12)

    @pytest.mark.parametrize("alpha", [1.0, 2.0, 3.65, 8.0])
    def test_two_increasing(self, alpha, rng):
        cp = Gumbel(alpha)
        a = np.sort(rng.random((10_000, 2)), axis=1)
        b = np.sort(rng.random((10_000, 2)), axis=1)
        vol = cp.cdf(a[:, 1], b[:, 1]) - cp.cdf(a[:, 0], b[:, 1]) - cp.cdf(a[:, 1], b[:, 0]) + cp.cdf(a[:, 0], b[:, 0])
        assert vol.min() >= -1e-12

    @settings(max_examples=100, deadline=None)
    @given(alpha=st.floats(1.0, 15.0), u=st.floats(0.001, 0.999), v1=st.floats(0.0, 1.0), v2=st.floats(0.0, 1.0))
    def test_partial_is_conditional_cdf(self, alpha, u, v1, v2):
        cp = Gumbel(alpha)
        lo, hi = sorted((v1, v2))
        p_lo, p_hi = cp.partial_u(u, lo), cp.partial_u(u, hi)
        assert 0.0 <= p_lo <= p_hi + 1e-12 <= 1.0 + 1e-12

    @pytest.mark.parametrize("alpha", [2.0, 3.65])
    def test_density_integrates_to_volume(self, alpha):
        cp = Gumbel(alpha)
        eps = 0.05
        total = integrate.dblquad(lambda v, u: cp.density(u, v), eps, 1 - eps, eps, 1 - eps,
                                  epsabs=1e-10, epsrel=1e-10)[0]
        vol = cp.cdf(1 - eps, 1 - eps) - 2 * cp.cdf(eps, 1 - eps) + cp.cdf(eps, eps)
        assert total == pytest.approx(vol, abs=1e-5)

    def test_exchangeable(self, rng):
        cp = Gumbel(3.65)
        u, v = rng.random((2, 500))
        np.testing.assert_allclose(cp.cdf(u, v), cp.cdf(v, u), rtol=1e-14)
        assert cp.flipped() is cp


class TestKendallTau:
    def test_closed_forms(self):
        assert kendall_tau(Independence()) == 0.0
        assert kendall_tau(Gumbel(1.0)) == 0.0
        assert kendall_tau(Gumbel(3.65)) == pytest.approx(0.726027, abs=5e-7)

    @pytest.mark.parametrize("alpha", [1.5, 3.65, 8.0])
    def test_numerical_integration(self, alpha):
        # tau = 4 E[C(U, V)] - 1 with C and c written out here, independently of the package
        a = alpha

        def C_and_c(u, v):
            x, y = -np.log(u), -np.log(v)
            S = x ** a + y ** a
            C = np.exp(-S ** (1 / a))
            c = C * (x * y) ** (a - 1) / (u * v) * S ** (2 / a - 2) * (1 + (a - 1) * S ** (-1 / a))
            return C, c

        def integrand(v, u):
            C, c = C_and_c(u, v)
            return C * c

        val = integrate.dblquad(integrand, 0, 1, 0, 1, epsabs=1e-9, epsrel=1e-9)[0]
        assert 4 * val - 1 == pytest.approx(kendall_tau(Gumbel(alpha)), abs=1e-5)


class TestSampler:
    def test_deterministic(self):
        cp = Gumbel(3.65)
        a = cp.sample(10_000, seed=3)
        b = cp.sample(10_000, seed=3)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, cp.sample(10_000, seed=4))

    def test_workers_do_not_change_output(self):
        cp = Gumbel(3.65)
        np.testing.assert_array_equal(cp.sample(20_000, seed=9), cp.sample(20_000, seed=9, workers=4))

    def test_prefix_stable_across_n(self):
        cp = Gumbel(2.0)
        np.testing.assert_array_equal(cp.sample(3 * CHUNK, 5)[:CHUNK], cp.sample(CHUNK + 1, 5)[:CHUNK])

    def test_zero_samples_rejected(self):
        with pytest.raises(DomainError):
            Gumbel(2.0).sample(0)
        with pytest.raises(DomainError):
            chunked(0, 1, lambda rng, k: rng.random(k))

    def test_independence_tau(self):
        uv = Independence().sample(100_000, seed=1)
        assert abs(empirical_tau(uv[:, 0], uv[:, 1])) <= 0.01

    @pytest.mark.parametrize("alpha", [1.0, 1.5, 3.65, 8.0])
    def test_margins_uniform(self, alpha):
        uv = Gumbel(alpha).sample(100_000, seed=11)
        assert np.all((uv > 0) & (uv < 1))
        for j in range(2):
            assert stats.kstest(uv[:, j], "uniform").statistic <= 0.006

    @pytest.mark.parametrize("alpha", [1.5, 8.0])
    def test_tau_other_alpha(self, alpha):
        uv = Gumbel(alpha).sample(50_000, seed=2)
        assert empirical_tau(uv[:, 0], uv[:, 1]) == pytest.approx(1 - 1 / alpha, abs=0.01)

    def test_rectangle_frequencies(self):
        cp = Gumbel(3.65)
        uv = cp.sample(400_000, seed=21)
        for (u0, u1), (v0, v1) in [((0, 0.3), (0, 0.3)), ((0.2, 0.6), (0.5, 0.9)), ((0.8, 1), (0.8, 1))]:
            freq = np.mean((uv[:, 0] > u0) & (uv[:, 0] <= u1) & (uv[:, 1] > v0) & (uv[:, 1] <= v1))
            p = cp.cdf(u1, v1) - cp.cdf(u0, v1) - cp.cdf(u1, v0) + cp.cdf(u0, v0)
            se = np.sqrt(p * (1 - p) / uv.shape[0])
            assert abs(freq - p) <= 4 * se + 1e-12
