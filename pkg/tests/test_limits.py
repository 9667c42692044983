import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from nast.hermite import kappa
from nast.limits import (
    MomentCurves,
    assemble_rescaled,
    calibration,
    covariance_match,
    fbm_moment_invariance,
    ks_pvalue,
    ks_test,
    limit_covariance,
    moment_curves,
    qq_data,
    reference_law,
    rescaled_samples,
    slope_fit,
)
from nast.simulate import SpectralSynthesizer, make_rng
from nast.spectra import ParamLRD, filtered_density, variance_of
from nast.wavelets import make_wavelet

LRD = ParamLRD(1.0, 0.75, 4.0, 1.0)
OU = ParamLRD(1.0, 1.0, 1.0, 1.0)
DB4 = make_wavelet("daubechies", K=4)
MEX = make_wavelet("mexican-hat")
FAMILIES = ["standard-normal", "folded-normal", "standardized-chi2-chaos"]


def lrd_paths(n, count, seed, model=LRD):
    syn = SpectralSynthesizer(model, n)
    return (syn.sample_values(make_rng(seed, i)) for i in range(count))


class TestReferenceLaws:
    @pytest.mark.parametrize("family", FAMILIES)
    @given(p=st.floats(0.001, 0.999))
    @settings(max_examples=40, deadline=None)
    def test_quantile_inverts_cdf(self, family, p):
        ref = reference_law(family)
        assert float(ref.cdf(ref.ppf(p))) == pytest.approx(p, abs=1e-8)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_cdf_monotone(self, family):
        x = np.linspace(-6, 12, 5001)
        assert np.all(np.diff(reference_law(family).cdf(x)) >= 0)

    def test_chi2_standardized(self):
        x = reference_law("standardized-chi2-chaos").sample(400_000, np.random.default_rng(1))
        assert abs(x.mean()) < 0.01 and x.var() == pytest.approx(1.0, abs=0.02)

    def test_folded_cdf(self):
        ref = reference_law("folded-normal")
        assert float(ref.cdf(1.0)) == pytest.approx(2 * stats.norm.cdf(1.0) - 1)
        assert float(ref.cdf(-1.0)) == 0.0

    def test_empirical(self):
        ref = reference_law("empirical", samples=np.arange(10.0))
        assert float(ref.cdf(4.5)) == pytest.approx(0.5)
        with pytest.raises(ValueError):
            reference_law("empirical", samples=[1.0])

    def test_unknown(self):
        with pytest.raises(ValueError, match="unknown reference"):
            reference_law("cauchy")


class TestKS:
    @pytest.mark.parametrize("family", FAMILIES)
    def test_calibration(self, family):
        assert calibration(family, n=10_000, runs=100, seed=3).passed

    def test_gross_mismatch(self):
        x = np.random.default_rng(0).standard_normal(10_000)
        assert ks_test(x, "folded-normal").pvalue < 1e-6

    def test_pvalue_matches_scipy(self):
        x = np.random.default_rng(1).standard_normal(5000) * 1.03
        ours = ks_test(x, "standard-normal", alpha=None)
        ref = stats.kstest(x, "norm", method="asymp")
        assert ours.statistic == pytest.approx(ref.statistic, rel=1e-12)
        assert ours.pvalue == pytest.approx(ref.pvalue, rel=0.05)

    def test_decimation_shrinks_evidence(self):
        D = 0.02
        assert ks_pvalue(D, 10_000 / 4) > ks_pvalue(D, 10_000)

    def test_too_few(self):
        with pytest.raises(ValueError, match="at least 200"):
            ks_test(np.zeros(100), "standard-normal")

    @pytest.mark.parametrize("family", ["standard-normal", "standardized-chi2-chaos"])
    def test_qq_matched(self, family):
        ref = reference_law(family)
        qq = qq_data(ref.sample(10_000, np.random.default_rng(4)), ref)
        assert qq.shape == (99, 3)
        assert np.max(np.abs(qq[:, 1] - qq[:, 2])) < 0.1


class TestRescaled:
    def test_identity_is_gaussian(self):
        # scaled by the exact variance: sample standardization would bias the p-values upward
        sd = math.sqrt(2**5 * variance_of(filtered_density(filtered_density(LRD, DB4, 1), DB4, 5)))
        ps = []
        for seed in range(30):
            s = rescaled_samples(lrd_paths(2**16, 4, 100 + seed), DB4, 1, 5, activation="identity", center=False)
            ps.append(ks_test(s.raw / sd, "standard-normal", alpha=None).pvalue)
        assert stats.kstest(ps, "uniform").pvalue > 0.01

    def test_too_few_samples(self):
        with pytest.raises(ValueError, match="longer or more paths"):
            rescaled_samples(lrd_paths(2**14, 1, 0), DB4, 1, 6)

    def test_decimated_near_independent(self):
        s = rescaled_samples(lrd_paths(2**18, 8, 5), DB4, 1, 7)
        assert abs(s.lag1_autocorr) < 0.1
        assert s.spacing == 4 * 2**7

    def test_assemble_standardizes(self):
        chunks = [np.arange(150.0), np.arange(150.0) + 3]
        s = assemble_rescaled(chunks, 4, 0)
        assert s.values.mean() == pytest.approx(0.0, abs=1e-12)
        assert s.values.std(ddof=1) == pytest.approx(1.0)

    def test_rate(self):
        # raw variance of 2^{j2/2} U * psi_j2 is stable in j2; without the factor it drifts fourfold
        paths = list(lrd_paths(2**20, 8, 6))
        right = {j2: rescaled_samples(paths, DB4, 1, j2).raw.var() for j2 in (8, 10)}
        wrong = {j2: rescaled_samples(paths, DB4, 1, j2, rate=0.0).raw.var() for j2 in (8, 10)}
        assert 0.8 <= right[8] / right[10] <= 1.25
        assert wrong[8] / wrong[10] >= 2.0


class TestCovariance:
    def test_mexican_hat_closed_form(self):
        # |Psi|^2 = 2 pi A^2 lam^4 exp(-lam^2); its cosine transform is a Gaussian times a quartic
        A2 = (2.0 / (math.sqrt(3.0) * math.pi**0.25)) ** 2
        s = np.array([0.0, 0.5, 1.0, 2.0, 8.0])
        exact = 2 * math.pi * A2 * math.sqrt(math.pi) * np.exp(-s**2 / 4) * (s**4 - 12 * s**2 + 12) / 16
        np.testing.assert_allclose(limit_covariance(MEX, 1.0, s), exact, rtol=1e-8, atol=1e-12)

    def test_lag_zero_is_norm(self):
        assert limit_covariance(DB4, 0.5, [0.0])[0] == pytest.approx(0.25 * 2 * math.pi, rel=1e-6)

    def test_daubechies_autocorrelation(self):
        # independent route: time-domain autocorrelation of the cascade-sampled wavelet
        t = np.linspace(-1, 4, 500001)
        dt = t[1] - t[0]
        psi = DB4.time(t)
        lags = np.array([0.5, 1.0, 1.5, 2.0])
        ref = [2 * math.pi * np.sum(psi[k:] * psi[:-k]) * dt for k in np.rint(lags / dt).astype(int)]
        np.testing.assert_allclose(limit_covariance(DB4, 1.0, lags), ref, atol=1e-4)

    def test_match_ensemble(self):
        k = kappa(LRD, DB4, 1).series
        rep = covariance_match(lrd_paths(2**19, 16, 7), DB4, 1, 7, k)
        d = rep.details
        assert abs(d["variance_rel_error"]) <= 0.05
        assert abs(d["z"][-1]) <= 3  # lag 8: decayed to zero
        assert abs(d["z"][2]) <= 3  # lag 1
        assert rep.passed


class TestSlopes:
    @given(st.floats(-2, 2), st.floats(-5, 5))
    @settings(max_examples=30)
    def test_exact_line(self, a, b):
        js = np.arange(6.0)
        fit = slope_fit(js, a * js + b)
        assert fit.slope == pytest.approx(a, abs=1e-9)
        assert fit.intercept == pytest.approx(b, abs=1e-9)

    def test_propagated_error(self):
        js = np.arange(4.0)
        fit = slope_fit(js, js, se=np.ones(4))
        # OLS slope weights (j - mean) / sum (j - mean)^2
        assert fit.slope_se == pytest.approx(1 / math.sqrt(5.0))

    def test_too_few(self):
        with pytest.raises(ValueError, match="at least 4"):
            slope_fit([1, 2, 3], [1, 2, 3])

    def test_moment_curve_slope(self):
        curves = moment_curves(lrd_paths(2**18, 6, 8), DB4, [1], list(range(4, 9)), first_scales=[1, 2, 3])
        fit = curves.second_slope(1, (4, 8))
        assert fit.slope == pytest.approx(-0.5, abs=0.08)
        assert curves.first.shape == (6, 3) and curves.second.shape == (6, 1, 5)


def synthetic_curves(intercepts, rng, paths=12):
    js = list(range(6, 11))
    j1s = list(range(1, len(intercepts) + 1))
    first = np.ones((paths, len(j1s)))
    second = np.empty((paths, len(j1s), len(js)))
    for a, c in enumerate(intercepts):
        second[:, a, :] = c * 2.0 ** (-0.5 * np.array(js)) * (1 + 0.01 * rng.standard_normal((paths, len(js))))
    return MomentCurves(j1s, js, j1s, first, np.ones(paths), second)


class TestInvariance:
    def test_equal_intercepts(self):
        rep = fbm_moment_invariance(synthetic_curves([1.0, 1.0, 1.0], np.random.default_rng(0)))
        assert rep.details["verdict"] == "j1-independent" and rep.passed

    def test_distinct_intercepts(self):
        rep = fbm_moment_invariance(synthetic_curves([1.0, 1.2, 1.4], np.random.default_rng(0)),
                                    expect_invariant=False)
        assert rep.details["verdict"] == "j1-dependent" and rep.passed

    def test_slopes_reported(self):
        rep = fbm_moment_invariance(synthetic_curves([1.0, 1.0], np.random.default_rng(1)))
        for slope, se in rep.details["slopes"].values():
            assert slope == pytest.approx(-0.5, abs=0.02)
