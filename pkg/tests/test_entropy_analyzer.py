import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from chunglu_cutoff.analyzers.entropy_analyzer import (
    DegreeLawEngine,
    EntropyAnalyzer,
    chernoff_k_max,
    class_degree_laws,
    degree_law_exact,
    degree_law_from_parameters,
    entropy_stats_empirical,
    entropy_stats_exact,
    entropy_stats_mc,
    gaussian_profile_table,
    gaussian_tail,
    lower_tail_threshold_c,
    lyapunov_diagnostic,
    mixture_moments,
    nondegeneracy_check,
    poisson_binomial_pmf,
    q_t,
    reciprocal_degree_bias,
    remove_bernoulli,
)
from chunglu_cutoff.data.models import DegreeLaw, EntropicStats, EstimationMethod, WeightProfile
from chunglu_cutoff.data.profiles import constant_profile, two_class_profile
from chunglu_cutoff.utils.errors import ParameterError


def _brute_force_pmf(params):
    pmf = np.array([1.0])
    for p in params:
        pmf = np.convolve(pmf, [1 - p, p])
    return pmf


class TestPoissonBinomial:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=25))
    def test_matches_brute_force(self, params):
        exact = _brute_force_pmf(params)
        fast = poisson_binomial_pmf(np.array(params))
        assert np.allclose(fast, exact[: fast.size], atol=1e-12)
        assert fast.sum() == pytest.approx(1.0, abs=1e-9)

    def test_equal_parameters_are_binomial(self):
        pmf = poisson_binomial_pmf(np.full(40, 0.1))
        assert np.allclose(pmf, stats.binom.pmf(np.arange(41), 40, 0.1), atol=1e-14)

    def test_truncation_keeps_prefix(self):
        params = np.linspace(0.01, 0.3, 30)
        full = poisson_binomial_pmf(params)
        cut = poisson_binomial_pmf(params, k_max=5)
        assert cut.size == 6
        assert np.allclose(cut, full[:6])

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.floats(min_value=0.0, max_value=0.9), min_size=1, max_size=15),
        st.floats(min_value=0.0, max_value=0.45),
    )
    def test_removing_a_bernoulli_inverts_adding_it(self, params, p):
        base = _brute_force_pmf(params)
        grown = np.convolve(base, [1 - p, p])
        back = remove_bernoulli(grown, np.array([p]))[0]
        assert np.allclose(back[: base.size], base, atol=1e-9)

    def test_removing_a_certain_edge_shifts(self):
        base = np.array([0.2, 0.5, 0.3])
        grown = np.convolve(base, [0.0, 1.0])
        assert np.allclose(remove_bernoulli(grown, np.array([1.0]))[0][:3], base)


class TestDegreeLaws:
    def test_chernoff_cut_grows_with_mean(self):
        assert chernoff_k_max(2.0, 1000) < chernoff_k_max(20.0, 1000) <= 1000
        assert chernoff_k_max(50.0, 10) == 10

    def test_exact_law_mean(self, two_class):
        law = degree_law_exact(two_class, 0)
        assert law.mean == pytest.approx(law.analytic_mean, rel=1e-9)
        assert law.truncated_mass < 1e-11
        assert law.pmf.sum() == pytest.approx(1.0)

    def test_engine_matches_per_vertex_laws(self, two_class):
        engine = DegreeLawEngine(two_class)
        for x in (0, 59, 60, 199):
            direct = degree_law_exact(two_class, x).pmf
            law = engine.vertex_law(x)
            width = min(direct.size, law.size)
            assert np.allclose(law[:width], direct[:width], atol=1e-10)

    def test_mixture_is_mu_in_average(self, two_class):
        engine = DegreeLawEngine(two_class)
        mixture = engine.mixture()
        manual = np.zeros(mixture.size)
        for x in range(two_class.n):
            law = degree_law_exact(two_class, x).pmf
            manual[: law.size] += engine.mu_in[x] * law[: mixture.size]
        assert mixture.sum() == pytest.approx(1.0)
        assert np.allclose(mixture, manual, atol=1e-10)

    def test_law_from_parameters(self):
        law = degree_law_from_parameters(np.array([1.0, 1.0, 0.5]))
        assert np.allclose(law.pmf[:4], [0.0, 0.0, 0.5, 0.5])
        assert law.mean == pytest.approx(2.5)
        assert law.k_max <= 3

    def test_class_limit(self):
        w = np.linspace(1.5, 3.0, 80)
        with pytest.raises(ParameterError):
            DegreeLawEngine(WeightProfile(w_plus=w, w_minus=w))

    def test_one_law_per_class(self, two_class):
        laws = class_degree_laws(two_class)
        assert sorted(laws) == [1.5, 3.0]
        assert laws[3.0].mean > laws[1.5].mean

    def test_reciprocal_bias_vanishes_for_fixed_degree(self):
        law = DegreeLaw(pmf=[0, 0, 0, 1.0], mean=3.0, analytic_mean=3.0, source_class=1.0)
        assert reciprocal_degree_bias(law) == pytest.approx(0.0)

    def test_reciprocal_bias_is_positive_for_random_degree(self, two_class):
        assert reciprocal_degree_bias(degree_law_exact(two_class, 0)) > 0

    def test_lower_tail_constant(self, two_class):
        c = lower_tail_threshold_c(two_class)
        assert c >= 0.0
        assert c * math.log(two_class.n) < degree_law_exact(two_class, 100).analytic_mean


class TestEntropicStatistics:
    def test_constant_weights_are_binomial(self):
        n = 300
        profile = constant_profile(n, 2.0)
        p = 4 * math.log(n) / n
        k = np.arange(n)
        pmf = stats.binom.pmf(k, n - 1, p)
        logs = np.log(np.maximum(k, 1))
        H = float(np.dot(pmf, logs))
        var = float(np.dot(pmf, (logs - H) ** 2))
        es = entropy_stats_exact(profile)
        assert es.method == EstimationMethod.EXACT
        assert es.H == pytest.approx(H, rel=1e-9)
        assert es.sigma2 == pytest.approx(var, rel=1e-7)
        assert es.t_ent == pytest.approx(math.log(n) / H, rel=1e-9)

    def test_monte_carlo_agrees_with_exact(self, two_class):
        exact = entropy_stats_exact(two_class)
        mc = entropy_stats_mc(two_class, 40_000, seed=3)
        assert mc.method == EstimationMethod.MONTE_CARLO
        assert abs(mc.H - exact.H) <= 4 * mc.ci_halfwidth / 1.96
        assert mc.sigma2 == pytest.approx(exact.sigma2, rel=0.1)

    def test_monte_carlo_needs_samples(self, two_class):
        with pytest.raises(ParameterError):
            entropy_stats_mc(two_class, 10, seed=0)

    def test_empirical_on_cycle_is_degenerate(self, cycle5):
        es = entropy_stats_empirical(cycle5)
        assert es.H == 0.0
        assert math.isinf(es.t_ent)

    def test_empirical_on_complete_graph(self, k4):
        es = entropy_stats_empirical(k4)
        assert es.H == pytest.approx(math.log(3))
        assert es.sigma2 == pytest.approx(0.0)

    def test_mixture_moments_point_mass(self):
        H, var = mixture_moments(np.array([0.0, 0.0, 0.0, 0.0, 1.0]))
        assert H == pytest.approx(math.log(4))
        assert var == 0.0


class TestQt:
    def test_point_mass_mixture(self, const_profile):
        mixture = np.array([0.0, 0.0, 1.0])
        t = 5
        below = q_t(const_profile, t, 0.9 * 2.0 ** -t, 2000, seed=1, mixture=mixture)
        above = q_t(const_profile, t, 1.1 * 2.0 ** -t, 2000, seed=1, mixture=mixture)
        assert below.value == 1.0
        assert above.value == 0.0

    def test_bad_arguments(self, const_profile):
        with pytest.raises(ParameterError):
            q_t(const_profile, 0, 0.1, 100, seed=0)
        with pytest.raises(ParameterError):
            q_t(const_profile, 3, 0.1, 100, seed=0, mode="something-else")

    @pytest.mark.parametrize("theta", [0.0, -0.5, 1.0, 1.5])
    def test_theta_outside_unit_interval(self, two_class, theta):
        with pytest.raises(ParameterError):
            q_t(two_class, 3, theta, 100, seed=1)

    def test_gaussian_table_far_right_of_window(self, const_profile):
        # lambda large enough that theta_lambda > 1: no log-sum lies below a negative level
        table = gaussian_profile_table(const_profile, [50.0], 4, 200, seed=0)
        assert table.loc[0, "log_theta"] > 0
        assert table.loc[0, "q"] == 0.0

    def test_gaussian_table_near_tail_at_center(self):
        profile = two_class_profile(2000, 3.0, 1.5, 0.3)
        table = gaussian_profile_table(profile, [0.0], t=20, samples=20_000, seed=4)
        assert list(table.columns) == ["lambda", "log_theta", "q", "ci_lo", "ci_hi", "gauss", "abs_diff"]
        assert table.loc[0, "gauss"] == 0.5
        assert table.loc[0, "abs_diff"] < 0.1


def test_gaussian_tail():
    assert gaussian_tail(0.0) == 0.5
    assert gaussian_tail(1.0) == pytest.approx(0.158655, abs=1e-6)


class TestNondegeneracy:
    def test_threshold(self):
        es = EntropicStats.from_moments(10_000, 2.0, 1.0, EstimationMethod.EXACT)
        report = nondegeneracy_check(es, 10_000, 2.0)
        lnln = math.log(math.log(10_000))
        assert report.threshold == pytest.approx(lnln ** 2.5 / math.log(10_000) ** 0.5)
        assert report.ok == (1.0 > report.threshold)

    def test_limit_threshold(self):
        es = EntropicStats.from_moments(1000, 2.0, 1.0, EstimationMethod.EXACT)
        report = nondegeneracy_check(es, 1000, math.inf)
        assert report.threshold == pytest.approx(math.log(math.log(1000)) ** 3 / math.log(1000))

    def test_small_n_rejected(self):
        es = EntropicStats.from_moments(10, 1.0, 1.0, EstimationMethod.EXACT)
        with pytest.raises(ParameterError):
            nondegeneracy_check(es, 10, 0.5)


class TestLyapunov:
    def test_exact_and_monte_carlo_agree(self, two_class):
        report = lyapunov_diagnostic(two_class, t=10, delta=1.0, samples=50_000, seed=2)
        assert report.exact_ratio is not None
        assert report.mc_ratio == pytest.approx(report.exact_ratio, rel=0.15)

    def test_decays_with_t(self, two_class):
        short = lyapunov_diagnostic(two_class, t=5, delta=1.0, samples=5000)
        long = lyapunov_diagnostic(two_class, t=50, delta=1.0, samples=5000)
        assert long.exact_ratio == pytest.approx(short.exact_ratio / math.sqrt(10), rel=1e-9)

    def test_zero_variance_gives_zero(self):
        report = lyapunov_diagnostic(constant_profile(10, 10.0), t=4, delta=1.0, samples=1000)
        assert report.exact_ratio == 0.0
        assert report.mc_ratio == 0.0


class TestAnalyzer:
    def test_exact_path(self, two_class):
        analyzer = EntropyAnalyzer({"samples": 2000, "seed": 1})
        result = analyzer.analyze(two_class)
        assert result["stats"]["method"] == "exact"
        assert set(result["reciprocal_bias"]) == {"1.5", "3.0"}
        assert result["stats"]["nondegeneracy"] is not None

    def test_falls_back_to_monte_carlo(self):
        w = np.linspace(1.5, 3.0, 100)
        es = EntropyAnalyzer({"samples": 2000, "seed": 1}).stats(WeightProfile(w_plus=w, w_minus=w))
        assert es.method == EstimationMethod.MONTE_CARLO
        assert es.samples == 2000
