import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from nast.scattering import cwt, guard_margin
from nast.simulate import (
    FBMSynthesizer,
    SpectralSynthesizer,
    fbm,
    gaussian_stationary,
    load_path,
    make_rng,
    save_path,
    warp_path,
)
from nast.spectra import ParamLRD, TabulatedSpectrum, covariance
from nast.wavelets import make_wavelet

OU = ParamLRD(1.0, 1.0, 1.0, 1.0)
LRD = ParamLRD(1.0, 0.75, 4.0, 1.0)


class TestStationary:
    def test_ou_variance(self):
        syn = SpectralSynthesizer(OU, 2**16)
        v = [np.var(syn.sample_values(make_rng(1, i))) for i in range(200)]
        assert np.mean(v) == pytest.approx(math.pi, rel=0.02)

    def test_zero_density(self):
        zero = TabulatedSpectrum(lam=np.array([1e-3, 1.0]), values=np.array([1.0, 1.0]),
                                 evaluator=lambda x: np.zeros_like(np.asarray(x, dtype=float)))
        assert np.all(gaussian_stationary(zero, 256).values == 0.0)

    def test_lrd_autocovariance(self):
        n, paths = 2**14, 200
        syn = SpectralSynthesizer(LRD, n)
        lags = np.array([1, 4, 16])
        est = np.empty((paths, lags.size))
        for i in range(paths):
            x = syn.sample_values(make_rng(2, i))
            est[i] = [np.mean(x * np.roll(x, -k)) for k in lags]
        se = est.std(axis=0, ddof=1) / math.sqrt(paths)
        ref = covariance(LRD, lags.astype(float))
        assert np.all(np.abs(est.mean(axis=0) - ref) <= 3 * se)

    def test_marginal_is_gaussian(self):
        syn = SpectralSynthesizer(LRD, 64)
        x = np.array([syn.sample_values(make_rng(3, i))[0] for i in range(10_000)])
        assert stats.kstest(x / math.sqrt(syn.variance), "norm").pvalue > 0.01

    def test_stationary_variance(self):
        syn = SpectralSynthesizer(OU, 2**12)
        X = np.array([syn.sample_values(make_rng(4, i)) for i in range(1000)])
        groups = [X[:, k * 512] for k in range(8)]
        assert stats.bartlett(*groups).pvalue > 0.01

    def test_reproducible(self):
        a = gaussian_stationary(LRD, 1024, seed=7, stream=3)
        b = gaussian_stationary(LRD, 1024, seed=7, stream=3)
        c = gaussian_stationary(LRD, 1024, seed=7, stream=4)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)
        assert np.array_equal(a.regenerate().values, a.values)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError, match="power of two"):
            SpectralSynthesizer(OU, 1000)


class TestFBM:
    def test_brownian_variance(self):
        syn = FBMSynthesizer(0.5, 256)
        B = np.array([p for i in range(40_000) for p in syn.sample_pair(make_rng(5, i))])
        t = np.array([16, 64, 255])
        np.testing.assert_allclose(B[:, t].var(axis=0), t, rtol=0.02)

    @pytest.mark.parametrize("H", [0.3, 0.7])
    def test_self_similarity(self, H):
        syn = FBMSynthesizer(H, 512)
        B = np.array([p for i in range(10_000) for p in syn.sample_pair(make_rng(6, i))])
        for t in (32, 128, 255):
            assert B[:, 2 * t].var() / B[:, t].var() == pytest.approx(2 ** (2 * H), rel=0.02)

    @pytest.mark.parametrize("H", [0.05, 0.3, 0.5, 0.7, 0.95])
    def test_embedding_nonnegative(self, H):
        assert FBMSynthesizer(H, 2**12).min_eigenvalue >= -1e-10

    def test_pair_independent(self):
        syn = FBMSynthesizer(0.3, 128)
        pairs = [syn.sample_pair(make_rng(8, i)) for i in range(4000)]
        a = np.array([p[0][-1] for p in pairs])
        b = np.array([p[1][-1] for p in pairs])
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(4000)

    def test_filtered_scaling(self):
        H, dt, n = 0.3, 1 / 16, 2**16
        w = make_wavelet("mexican-hat")
        syn = FBMSynthesizer(H, n, dt)
        g = guard_margin(w, [3], dt)
        var = np.zeros(4)
        for i in range(20):
            for x in syn.sample_pair(make_rng(9, i)):
                var += [np.var(cwt(x, w, j, dt)[g:-g]) for j in range(4)]
        np.testing.assert_allclose(var[1:] / var[0], 2.0 ** (2 * H * np.arange(1, 4)), rtol=0.02)

    def test_metadata_roundtrip(self, tmp_path):
        p = fbm(0.3, 2**10, seed=3, stream=2, part=1)
        f = save_path(p, tmp_path / "b.txt")
        q = load_path(f)
        np.testing.assert_array_equal(q.values, p.values)
        np.testing.assert_array_equal(q.regenerate().values, p.values)


class TestWarp:
    def test_zero_is_identity(self):
        x = gaussian_stationary(OU, 256).values
        np.testing.assert_array_equal(warp_path(x, 0.0), x)

    @given(st.integers(-20, 20))
    def test_constant_is_shift(self, c):
        x = np.sin(np.arange(128) * 0.3) + np.cos(np.arange(128) * 1.1)
        np.testing.assert_allclose(warp_path(x, float(c)), np.roll(x, c), atol=1e-12)

    def test_small_sine_monotone(self):
        x = gaussian_stationary(OU, 4096, dt=0.1).values
        t = np.arange(4096) * 0.1
        d = [np.mean((warp_path(x, e * np.sin(0.05 * t), 0.1) - x) ** 2) for e in (0.05, 0.025, 0.0125)]
        assert d[0] > d[1] > d[2] > 0

    def test_steep_deformation_rejected(self):
        with pytest.raises(ValueError, match="exceeds 1/2"):
            warp_path(np.zeros(64), np.arange(64.0))


@given(st.integers(0, 2**32), st.integers(0, 1000))
@settings(max_examples=20, deadline=None)
def test_rng_streams_deterministic(seed, stream):
    a = make_rng(seed, stream).standard_normal(4)
    b = make_rng(seed, stream).standard_normal(4)
    assert np.array_equal(a, b)
