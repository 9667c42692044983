"""Monte-Carlo checks of the scattering limit theorems.

Reference laws, Kolmogorov-Smirnov and quantile-quantile comparisons,
rescaled-process sampling, covariance matching and regression of the
scaling slopes of normalized scattering moments.  Ensembles are passed as
iterables of 1-D arrays so that long runs stream one path at a time.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import fft as sfft
from scipy import stats

from .scattering import get_activation, guard_margin, multiplier
from .wavelets import Wavelet

__all__ = [
    "ReferenceLaw",
    "reference_law",
    "StatReport",
    "RescaledSample",
    "rescaled_samples",
    "rescaled_path",
    "assemble_rescaled",
    "ks_test",
    "ks_pvalue",
    "qq_data",
    "calibration",
    "covariance_match",
    "limit_covariance",
    "SlopeFit",
    "slope_fit",
    "MomentCurves",
    "moment_curves",
    "moments_path",
    "assemble_moments",
    "fbm_moment_invariance",
]


# --------------------------------------------------------------------------
# reference laws


@dataclass
class ReferenceLaw:
    """Continuous reference distribution with CDF and quantile function."""

    family: str
    cdf: Callable = field(repr=False)
    ppf: Callable = field(repr=False)
    sampler: Callable | None = field(default=None, repr=False)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        if self.sampler is not None:
            return self.sampler(size, rng)
        return self.ppf(rng.uniform(size=size))


def _chi2_std_cdf(x):
    x = np.asarray(x, dtype=float)
    return stats.chi2.cdf(math.sqrt(2.0) * x + 1.0, 1)


def _chi2_std_ppf(p):
    return (stats.chi2.ppf(np.asarray(p, dtype=float), 1) - 1.0) / math.sqrt(2.0)


def reference_law(family: str, samples=None) -> ReferenceLaw:
    """Reference law by family name.

    ``standard-normal``; ``folded-normal`` (law of ``|Z|``, CDF ``2 Phi - 1``);
    ``standardized-chi2-chaos`` (law of ``(Z^2 - 1)/sqrt 2``); ``empirical``
    (piecewise-linear CDF through ``samples`` at plotting positions
    ``(i - 1/2)/N``).
    """
    if family == "standard-normal":
        return ReferenceLaw(family, stats.norm.cdf, stats.norm.ppf,
                            lambda n, rng: rng.standard_normal(n))
    if family == "folded-normal":
        return ReferenceLaw(
            family,
            lambda x: np.clip(2.0 * stats.norm.cdf(np.asarray(x, dtype=float)) - 1.0, 0.0, 1.0),
            lambda p: stats.norm.ppf(0.5 * (1.0 + np.asarray(p, dtype=float))),
            lambda n, rng: np.abs(rng.standard_normal(n)),
        )
    if family == "standardized-chi2-chaos":
        return ReferenceLaw(family, _chi2_std_cdf, _chi2_std_ppf,
                            lambda n, rng: (rng.standard_normal(n) ** 2 - 1.0) / math.sqrt(2.0))
    if family == "empirical":
        if samples is None or len(samples) < 2:
            raise ValueError("empirical reference needs at least two samples")
        xs = np.unique(np.asarray(samples, dtype=float))
        ps = (np.arange(1, xs.size + 1) - 0.5) / xs.size

        def cdf(x):
            return np.interp(np.asarray(x, dtype=float), xs, ps, left=0.0, right=1.0)

        def ppf(p):
            return np.interp(np.asarray(p, dtype=float), ps, xs)

        return ReferenceLaw(family, cdf, ppf)
    raise ValueError(f"unknown reference family {family!r}")


# --------------------------------------------------------------------------
# reports and tests


@dataclass
class StatReport:
    """Outcome of one statistical check."""

    test: str
    statistic: float
    pvalue: float | None
    n: float
    passed: bool | None = None
    seeds: list = field(default_factory=list)
    config_hash: str = ""
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def ks_pvalue(D: float, n: float) -> float:
    """Asymptotic two-sided KS p-value with Stephens' small-sample correction."""
    rn = math.sqrt(n)
    return float(stats.kstwobign.sf((rn + 0.12 + 0.11 / rn) * D))


def ks_test(samples, reference: ReferenceLaw | str, decimation: float = 1.0, alpha: float | None = 0.01) -> StatReport:
    """Two-sided KS test against ``reference``.

    ``decimation`` divides the sample count to give the effective size used
    for the p-value (1 when samples are already near-independent).
    """
    ref = reference_law(reference) if isinstance(reference, str) else reference
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size < 200:
        raise ValueError(f"KS test needs at least 200 samples, got {x.size}")
    F = ref.cdf(x)
    n = x.size
    D = float(max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n)))
    neff = n / decimation
    p = ks_pvalue(D, neff)
    return StatReport(f"ks-{ref.family}", D, p, neff, None if alpha is None else p > alpha,
                      details={"raw_n": n, "decimation": decimation})


def qq_data(samples, reference: ReferenceLaw | str, m: int = 99) -> np.ndarray:
    """Rows ``(p, empirical quantile, reference quantile)`` at ``p = k/(m+1)``."""
    ref = reference_law(reference) if isinstance(reference, str) else reference
    p = np.arange(1, m + 1) / (m + 1.0)
    return np.column_stack([p, np.quantile(np.asarray(samples, dtype=float), p), ref.ppf(p)])


def calibration(reference: ReferenceLaw | str, n: int = 10_000, runs: int = 100, seed: int = 0,
                alpha: float = 0.01) -> StatReport:
    """KS p-values of samples drawn from ``reference`` itself, tested for uniformity."""
    ref = reference_law(reference) if isinstance(reference, str) else reference
    ps = np.empty(runs)
    for k in range(runs):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, k])))
        ps[k] = ks_test(ref.sample(n, rng), ref, alpha=None).pvalue
    meta = stats.kstest(ps, "uniform")
    return StatReport(f"calibration-{ref.family}", float(meta.statistic), float(meta.pvalue), runs,
                      bool(meta.pvalue > alpha), seeds=list(range(runs)), details={"pvalues": ps.tolist()})


# --------------------------------------------------------------------------
# rescaled samples


@dataclass
class RescaledSample:
    """Decimated values of ``2^{rate j2} (A1(X * psi_j1) * psi_j2)(t_k)``."""

    values: np.ndarray  # standardized by the sample std
    raw: np.ndarray  # rescaled, not standardized
    spacing: int
    per_path: int
    paths: int
    guard: int
    lag1_autocorr: float

    @property
    def n(self) -> int:
        return int(self.values.size)


def _interior(n: int, guard: int) -> slice:
    if 2 * guard >= n:
        raise ValueError(f"guard {guard} leaves no interior in a path of length {n}; use longer paths")
    return slice(guard, n - guard)


def rescaled_path(x, wavelet: Wavelet, j1: float, j2: float, activation="modulus", rate: float = 0.5,
                  dt: float = 1.0, spacing: int | None = None, guard: int | None = None,
                  center: bool = True) -> np.ndarray:
    """Decimated ``2^{rate j2} (A1(x * psi_j1) * psi_j2)(t_k)`` for one path.

    Times ``t_k`` are interior samples ``spacing`` apart (default
    ``4 2^{j2} / dt``).  ``center`` removes the path mean of the first layer
    before the second convolution (the wavelet annihilates it in exact
    arithmetic).
    """
    act = get_activation(activation)
    if spacing is None:
        spacing = int(math.ceil(4 * 2.0**j2 / dt))
    x = np.asarray(x, dtype=float)
    n = x.size
    gd = guard_margin(wavelet, [j1, j2], dt) if guard is None else guard
    sl = _interior(n, gd)
    u = act(sfft.irfft(sfft.rfft(x) * multiplier(wavelet, j1, n, dt), n))
    if center:
        u = u - u.mean()
    v = sfft.irfft(sfft.rfft(u) * multiplier(wavelet, j2, n, dt), n)
    idx = np.arange(sl.start, sl.stop, spacing)
    return v[idx] * 2.0 ** (rate * j2)


def assemble_rescaled(chunks: Sequence[np.ndarray], spacing: int, guard: int) -> RescaledSample:
    """Pool per-path decimated values, standardize, and measure the lag-1 autocorrelation."""
    if len(chunks) == 0:
        raise ValueError("empty ensemble")
    raw = np.concatenate(chunks)
    if raw.size < 200:
        raise ValueError(f"only {raw.size} decimated samples (< 200); use longer or more paths")
    m, s = raw.mean(), raw.std(ddof=1)
    num = sum(float(np.sum((a[1:] - m) * (a[:-1] - m))) for a in chunks if a.size > 2)
    den = sum(float(np.sum((a - m) ** 2)) for a in chunks if a.size > 2)
    rho1 = num / den if den > 0 else 0.0
    return RescaledSample((raw - m) / s, raw, spacing, int(chunks[0].size), len(chunks), guard, rho1)


def rescaled_samples(paths: Iterable, wavelet: Wavelet, j1: float, j2: float, activation="modulus",
                     rate: float = 0.5, dt: float = 1.0, spacing: int | None = None,
                     guard: int | None = None, center: bool = True) -> RescaledSample:
    """Rescaled second-layer outputs pooled over an ensemble (see ``rescaled_path``).

    ``rate`` is 1/2 in the Gaussian regime and ``(2 alpha + beta) r / 2``
    otherwise.
    """
    if spacing is None:
        spacing = int(math.ceil(4 * 2.0**j2 / dt))
    gd = guard_margin(wavelet, [j1, j2], dt) if guard is None else guard
    chunks = [rescaled_path(x, wavelet, j1, j2, activation, rate, dt, spacing, gd, center) for x in paths]
    return assemble_rescaled(chunks, spacing, gd)


# --------------------------------------------------------------------------
# covariance of the rescaled process


def limit_covariance(wavelet: Wavelet, kappa: float, lags) -> np.ndarray:
    """``kappa^2 int exp(i lam s) |Psi(lam)|^2 dlam`` at macroscopic lags ``s``."""
    from .spectra import _tail_cutoff, half_line_rule, integrate_half_line

    lags = np.atleast_1d(np.asarray(lags, dtype=float))
    expo = 2.0 * wavelet.alpha if math.isfinite(wavelet.alpha) else 8.0
    cut, _ = _tail_cutoff(wavelet.fourier_abs2, 1.0)
    lam, w = half_line_rule(expo, 1.0, cut, t_max=float(np.max(np.abs(lags), initial=0.0)))
    g = w * wavelet.fourier_abs2(lam)
    out = 2.0 * np.cos(np.outer(lags, lam)) @ g
    # beyond the cutoff only lag 0 keeps a non-oscillating tail; take it from the full-line integral
    at0 = lags == 0
    if np.any(at0):
        out[at0] = 2.0 * integrate_half_line(wavelet.fourier_abs2, expo, 1.0)
    return kappa**2 * out


def covariance_match(paths: Iterable, wavelet: Wavelet, j1: float, j2: float, kappa: float,
                     activation="modulus", lags=(0.0, 0.5, 1.0, 2.0, 8.0), dt: float = 1.0,
                     spacing: int | None = None, guard: int | None = None, z: float = 3.0,
                     var_tol: float = 0.05) -> StatReport:
    """Empirical covariance of ``2^{j2/2} (A1(X * psi_j1) * psi_j2)`` at lags
    ``s 2^{j2}`` against the Gaussian-limit covariance.

    Lag 0 is judged by relative error (``var_tol``); other lags by z-scores
    from the spread of per-path estimates.
    """
    act = get_activation(activation)
    lags = np.asarray(lags, dtype=float)
    shifts = np.rint(lags * 2.0**j2 / dt).astype(int)
    if spacing is None:
        spacing = int(math.ceil(4 * 2.0**j2 / dt))
    per = []
    for x in paths:
        x = np.asarray(x, dtype=float)
        n = x.size
        gd = guard_margin(wavelet, [j1, j2], dt) if guard is None else guard
        u = act(sfft.irfft(sfft.rfft(x) * multiplier(wavelet, j1, n, dt), n))
        u = u - u.mean()
        v = sfft.irfft(sfft.rfft(u) * multiplier(wavelet, j2, n, dt), n) * 2.0 ** (j2 / 2.0)
        sl = _interior(n, gd + int(shifts.max()))
        idx = np.arange(sl.start, sl.stop, max(1, spacing // 4))
        per.append([float(np.mean(v[idx] * v[idx + s])) for s in shifts])
    per = np.asarray(per)
    k = per.shape[0]
    if k < 2:
        raise ValueError("need at least two paths")
    emp = per.mean(axis=0)
    se = per.std(axis=0, ddof=1) / math.sqrt(k)
    theory = limit_covariance(wavelet, kappa, lags)
    zs = np.where(se > 0, (emp - theory) / np.where(se > 0, se, 1.0), 0.0)
    rel0 = float(emp[0] / theory[0] - 1.0) if lags[0] == 0 else float("nan")
    ok_lags = [abs(zz) <= z for l, zz in zip(lags, zs) if l != 0]
    passed = (abs(rel0) <= var_tol if lags[0] == 0 else True) and all(ok_lags)
    return StatReport("covariance-match", float(np.max(np.abs(emp - theory))), None, k, passed,
                      details={"lags": lags.tolist(), "empirical": emp.tolist(), "se": se.tolist(),
                               "theory": theory.tolist(), "z": zs.tolist(), "variance_rel_error": rel0})


# --------------------------------------------------------------------------
# moment curves and slopes


@dataclass
class SlopeFit:
    slope: float
    slope_se: float
    intercept: float
    intercept_se: float
    js: np.ndarray
    values: np.ndarray


def slope_fit(js, values, se=None, replicates=None) -> SlopeFit:
    """Ordinary least-squares line through ``(j, value)``.

    Standard errors come from delete-one ``replicates`` (rows of values
    recomputed without one path) when given, else from the per-point
    errors ``se`` propagated through the OLS weights.
    """
    js = np.asarray(js, dtype=float)
    values = np.asarray(values, dtype=float)
    if js.size < 4:
        raise ValueError(f"slope fit needs at least 4 points, got {js.size}")
    X = np.vstack([np.ones_like(js), js]).T
    P = np.linalg.pinv(X)  # rows: intercept and slope weights
    b0, b1 = P @ values
    if replicates is not None:
        reps = np.asarray(replicates, dtype=float) @ P.T
        k = reps.shape[0]
        cov = (k - 1) / k * ((reps - reps.mean(axis=0)).T @ (reps - reps.mean(axis=0)))
        s0, s1 = math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])
    elif se is not None:
        se = np.asarray(se, dtype=float)
        s0 = math.sqrt(float(np.sum(P[0] ** 2 * se**2)))
        s1 = math.sqrt(float(np.sum(P[1] ** 2 * se**2)))
    else:
        resid = values - X @ np.array([b0, b1])
        s2 = float(resid @ resid) / max(js.size - 2, 1)
        cov = s2 * np.linalg.inv(X.T @ X)
        s0, s1 = math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])
    return SlopeFit(float(b1), s1, float(b0), s0, js, values)


@dataclass
class MomentCurves:
    """Per-path pooled moments for first- and second-order normalized scattering moments.

    ``first[p, a]`` is the interior mean of ``|X * psi_j|`` for
    ``j = first_scales[a]``, ``base[p]`` the same at scale 0, and
    ``second[p, a, b]`` the mean of ``||X * psi_j1| * psi_{j1 + js[b]}|`` for
    ``j1 = j1s[a]``.
    """

    j1s: list
    js: list
    first_scales: list
    first: np.ndarray
    base: np.ndarray
    second: np.ndarray

    @property
    def paths(self) -> int:
        return int(self.first.shape[0])

    def _jack(self, stat: Callable[[np.ndarray], np.ndarray]):
        """Statistic on pooled sums and its delete-one-path replicates."""
        k = self.paths
        full = stat(np.ones(k, dtype=bool))
        reps = []
        for i in range(k):
            m = np.ones(k, dtype=bool)
            m[i] = False
            reps.append(stat(m))
        reps = np.asarray(reps)
        se = np.sqrt((k - 1) / k * np.sum((reps - reps.mean(axis=0)) ** 2, axis=0))
        return full, se, reps

    def second_moment(self, j1: float):
        """``log2 S(j1, j1 + j)`` over ``js`` with jackknife errors and replicates."""
        a = self.j1s.index(j1)
        f = self.first_scales.index(j1)

        def stat(m):
            return np.log2(self.second[m, a, :].mean(axis=0) / self.first[m, f].mean())

        return self._jack(stat)

    def first_moment(self):
        """``log2 (E|X * psi_j1| / E|X * psi|)`` over ``j1s``."""

        def stat(m):
            return np.log2(self.first[m].mean(axis=0) / self.base[m].mean())

        return self._jack(stat)

    def second_slope(self, j1: float, jrange=None) -> SlopeFit:
        val, se, reps = self.second_moment(j1)
        sel = self._sel(self.js, jrange)
        return slope_fit(np.asarray(self.js)[sel], val[sel], replicates=reps[:, sel])

    def first_slope(self, jrange=None) -> SlopeFit:
        val, se, reps = self.first_moment()
        sel = self._sel(self.first_scales, jrange)
        return slope_fit(np.asarray(self.first_scales)[sel], val[sel], replicates=reps[:, sel])

    def limit_intercept(self, j1: float, slope: float, jrange=None) -> tuple[float, float]:
        """Mean over ``j`` in range of ``2^{-slope j} S(j1, j1 + j)`` (the corollaries'
        limit with its theoretical rate), with jackknife error."""
        a = self.j1s.index(j1)
        f = self.first_scales.index(j1)
        sel = self._sel(self.js, jrange)
        jj = np.asarray(self.js, dtype=float)[sel]

        def stat(m):
            s = self.second[m, a, :][:, sel].mean(axis=0) / self.first[m, f].mean()
            return np.array([np.mean(s * 2.0 ** (-slope * jj))])

        full, se, _ = self._jack(stat)
        return float(full[0]), float(se[0])

    @staticmethod
    def _sel(grid, jrange):
        g = np.asarray(grid, dtype=float)
        if jrange is None:
            return np.ones(g.size, dtype=bool)
        return (g >= jrange[0]) & (g <= jrange[1])


def moments_path(x, wavelet: Wavelet, j1s: Sequence[float], js: Sequence[float],
                 first_scales: Sequence[float] | None = None, dt: float = 1.0, guard: int | None = None,
                 activation="modulus"):
    """Pooled moments of one path: ``(first row, base, second rows)`` as in ``MomentCurves``.

    The path is transformed once per first-layer scale; the second layer
    reuses the spectrum of ``A(x * psi_j1)`` for every ``j``.
    """
    act = get_activation(activation)
    j1s, js = list(j1s), list(js)
    fs = sorted(set(j1s) | set(first_scales or []))
    x = np.asarray(x, dtype=float)
    n = x.size
    top = max([max(j1s) + max(js)] + fs)
    gd = guard_margin(wavelet, [max(fs), top], dt) if guard is None else guard
    sl = _interior(n, gd)
    xh = sfft.rfft(x)
    base = float(np.mean(np.abs(sfft.irfft(xh * multiplier(wavelet, 0, n, dt), n)[sl])))
    f_row, s_row = [], []
    for j1 in fs:
        u = act(sfft.irfft(xh * multiplier(wavelet, j1, n, dt), n))
        f_row.append(float(np.mean(np.abs(u[sl]))))
        if j1 not in j1s:
            continue
        uh = sfft.rfft(u)
        s_row.append([float(np.mean(np.abs(sfft.irfft(uh * multiplier(wavelet, j1 + j, n, dt), n)[sl])))
                      for j in js])
    return f_row, base, s_row


def assemble_moments(rows: Sequence, j1s: Sequence[float], js: Sequence[float],
                     first_scales: Sequence[float] | None = None) -> MomentCurves:
    if len(rows) < 2:
        raise ValueError("need at least two paths for jackknife errors")
    fs = sorted(set(j1s) | set(first_scales or []))
    F = np.asarray([r[0] for r in rows])
    B = np.asarray([r[1] for r in rows])
    S = np.asarray([r[2] for r in rows])
    return MomentCurves(list(j1s), list(js), fs, F, B, S)


def moment_curves(paths: Iterable, wavelet: Wavelet, j1s: Sequence[float], js: Sequence[float],
                  first_scales: Sequence[float] | None = None, dt: float = 1.0, guard: int | None = None,
                  activation="modulus") -> MomentCurves:
    """First- and second-order normalized moments over an ensemble (one pass per path).

    First-order moments are taken over ``first_scales`` (default ``j1s``)
    plus scale 0.
    """
    rows = [moments_path(x, wavelet, j1s, js, first_scales, dt, guard, activation) for x in paths]
    return assemble_moments(rows, j1s, js, first_scales)


def fbm_moment_invariance(curves: MomentCurves, jrange=(6, 10), slope: float = -0.5, z: float = 3.0,
                          expect_invariant: bool = True) -> StatReport:
    """Compare the limit intercepts ``lim 2^{-slope j} S(j1, j1 + j)`` across ``j1``.

    The verdict ``j1-independent`` holds when every pairwise difference is
    within ``z`` standard errors (errors of the two intercepts combined).
    """
    ints = {j1: curves.limit_intercept(j1, slope, jrange) for j1 in curves.j1s}
    worst = 0.0
    for a in curves.j1s:
        for b in curves.j1s:
            if a < b:
                (va, sa), (vb, sb) = ints[a], ints[b]
                worst = max(worst, abs(va - vb) / math.sqrt(sa**2 + sb**2))
    slopes = {j1: curves.second_slope(j1, jrange) for j1 in curves.j1s}
    invariant = worst <= z
    return StatReport(
        "fbm-moment-invariance", worst, None, curves.paths, invariant == expect_invariant,
        details={"verdict": "j1-independent" if invariant else "j1-dependent",
                 "intercepts": {str(k): v for k, v in ints.items()},
                 "slopes": {str(k): (s.slope, s.slope_se) for k, s in slopes.items()}},
    )
