"""Hermite expansions of activations and the constants of the scattering limit laws.

Hermite polynomials are the probabilists' ones, ``He_0 = 1, He_1 = y,
He_2 = y^2 - 1``, orthogonal under the standard normal density with
``E[He_l(Z)^2] = l!``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import interpolate, special

from .scattering import Activation, get_activation
from .spectra import (
    GeneralizedFBM,
    SpectralModel,
    TabulatedSpectrum,
    covariance_table,
    filtered_density,
    integrate_half_line,
    lfold_convolution_at_zero,
    riesz_power_convolution,
    variance_of,
)

__all__ = [
    "hermite_poly",
    "gaussian_expectation",
    "HermiteExpansion",
    "expand",
    "bivariate_covariance",
    "KappaResult",
    "kappa",
    "wavelet_l2_sq",
    "filtered_table",
    "ThetaResult",
    "theta1",
    "theta1_limit",
    "LimitLaw",
    "nu_theta2",
    "NonCLTConstants",
    "abs_chi2_reference",
    "second_chaos_spectrum",
    "mixture_samples",
    "mixture_abs_mean",
    "delta_method_limit",
    "regime",
]

E_ABS_CHI2 = 4.0 * math.exp(-0.5) / math.sqrt(2.0 * math.pi)  # E|Z^2 - 1|


def hermite_poly(ell: int, y):
    """Probabilists' Hermite polynomial ``He_ell(y)`` by three-term recurrence."""
    if ell < 0:
        raise ValueError("Hermite degree must be non-negative")
    y = np.asarray(y, dtype=float)
    h0 = np.ones_like(y)
    if ell == 0:
        return h0
    h1 = y.copy()
    for k in range(1, ell):
        h0, h1 = h1, y * h1 - k * h0
    return h1


def _normalized_hermite_table(L: int, y: np.ndarray) -> np.ndarray:
    """Rows ``He_l(y) / sqrt(l!)`` for ``l = 0..L`` (stable normalized recurrence)."""
    out = np.empty((L + 1, y.size))
    out[0] = 1.0
    if L >= 1:
        out[1] = y
    for k in range(1, L):
        out[k + 1] = (y * out[k] - math.sqrt(k) * out[k - 1]) / math.sqrt(k + 1)
    return out


@lru_cache(maxsize=8)
def _gl(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _gauss_rule(breaks=(), half_width: float = 14.0, panel: float = 0.25, order: int = 20):
    """Nodes/weights of ``int g(z) phi(z) dz`` (phi folded in) split at ``breaks``."""
    pts = sorted({-half_width, half_width, *[b for b in breaks if -half_width < b < half_width]})
    x, w = _gl(order)
    nodes, weights = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        m = max(1, int(math.ceil((b - a) / panel)))
        e = np.linspace(a, b, m + 1)
        h = np.diff(e)
        mid = 0.5 * (e[:-1] + e[1:])
        nodes.append((mid[:, None] + 0.5 * h[:, None] * x[None, :]).ravel())
        weights.append((0.5 * h[:, None] * w[None, :]).ravel())
    z = np.concatenate(nodes)
    wt = np.concatenate(weights) * np.exp(-0.5 * z**2) / math.sqrt(2 * math.pi)
    return z, wt


def gaussian_expectation(func, sigma: float = 1.0, kinks=()) -> float:
    """``E[func(sigma Z)]`` by kink-split composite Gauss-Legendre."""
    z, w = _gauss_rule([k / sigma for k in kinks])
    return float(np.dot(w, func(sigma * z)))


@dataclass
class HermiteExpansion:
    """Coefficients ``C_l = E[A(sigma Z) He_l(Z)] / sqrt(l!)`` for ``l = 0..L``."""

    activation: str
    sigma: float
    coefficients: np.ndarray
    rank: int | None
    truncation: int
    energy: float
    tail_mass: float

    @property
    def mean(self) -> float:
        return float(self.coefficients[0])

    def partial_energy(self) -> float:
        return float(np.sum(self.coefficients**2))


def expand(activation, sigma: float = 1.0, L: int | None = None, tail_tol: float = 1e-6,
           cap: int = 64) -> HermiteExpansion:
    """Hermite coefficients of ``A(sigma .)``.

    With ``L=None`` the truncation is the smallest even level with relative
    tail mass below ``tail_tol``, capped at ``cap``; the remaining tail
    ``E[A(sigma Z)^2] - sum C_l^2`` is reported.
    """
    act = get_activation(activation)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    z, w = _gauss_rule([k / sigma for k in act.kinks])
    a = act(sigma * z)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{act.name}(sigma Z) is not square integrable")
    # divergent growth check: the integrand must vanish at the truncation edge
    edge = np.abs(act(sigma * np.array([-14.0, 14.0]))) ** 2 * math.exp(-0.5 * 14.0**2)
    if np.any(edge > 1e-20):
        raise ValueError(f"{act.name} grows too fast for a Gaussian expansion")
    energy = float(np.dot(w, a * a))
    Lmax = cap if L is None else int(L)
    table = _normalized_hermite_table(Lmax, z)
    coef = table @ (w * a)
    if L is None:
        cum = np.cumsum(coef**2)
        ok = np.nonzero(energy - cum <= tail_tol * max(energy, 1e-300))[0]
        Lsel = int(ok[0]) if ok.size else cap
        coef = coef[: Lsel + 1]
    tol = 1e-8 * math.sqrt(max(energy, 0.0))
    nz = [l for l in range(1, coef.size) if abs(coef[l]) > tol]
    rank = nz[0] if nz else None
    tail = _tail_estimate(coef, tol)
    return HermiteExpansion(act.name, float(sigma), coef, rank, coef.size - 1, energy, tail)


def _tail_estimate(coef: np.ndarray, tol: float) -> float:
    """Extrapolated ``sum_{l>L} C_l^2`` from the decay of the last coefficients.

    Each parity class is fitted separately by a power law (algebraic decay of
    kinked activations) or a geometric law (analytic ones), whichever fits
    the upper half of the computed levels better.
    """
    L = coef.size - 1
    total = 0.0
    for parity in (0, 1):
        ell = np.arange(max(parity, 2 + parity, L // 2 + ((L // 2 + parity) % 2)), L + 1, 2)
        c2 = coef[ell] ** 2
        keep = c2 > tol**2
        if keep.sum() < 3 or not keep[-1]:
            continue
        x, y = ell[keep].astype(float), np.log(c2[keep])
        fits = []
        for feat in (np.log(x), x):
            A = np.vstack([np.ones_like(x), feat]).T
            sol, *_ = np.linalg.lstsq(A, y, rcond=None)
            fits.append((float(np.sum((A @ sol - y) ** 2)), sol))
        (_, pw), (_, ge) = fits
        nxt = np.arange(L + 1 + (L + 1 + parity) % 2, L + 200001, 2, dtype=float)
        nxt = nxt[(nxt % 2) == parity]
        if fits[0][0] <= fits[1][0] and pw[1] < -1.0:
            terms = np.exp(pw[0]) * nxt ** pw[1]
            far = nxt[-1] + 2.0
            total += float(terms.sum()) + np.exp(pw[0]) * far ** (pw[1] + 1) / (-(pw[1] + 1)) / 2.0
        elif ge[1] < 0:
            total += float(np.sum(np.exp(ge[0] + ge[1] * nxt)))
    return total


# --------------------------------------------------------------------------
# bivariate moments


def bivariate_covariance(activation, sigma: float, rho) -> np.ndarray:
    """``Cov(A(sigma Y1), A(sigma Y2))`` for standard normals with correlation ``rho``.

    Computed as ``E[A(sigma Z1) m(Z1)]`` with the conditional mean
    ``m(z) = E[A(sigma (rho z + sqrt(1-rho^2) Z'))]``, both by kink-split
    Gauss-Legendre quadrature; independent of the Hermite coefficients.
    """
    act = get_activation(activation)
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    z1, w1 = _gauss_rule([k / sigma for k in act.kinks], half_width=9.5, panel=0.4, order=16)
    a1 = act(sigma * z1)
    mean = float(np.dot(w1, a1))
    xg, wg = _gl(16)
    out = np.empty(rho.shape)
    for i, r in enumerate(rho):
        if abs(r) >= 1.0:
            out[i] = float(np.dot(w1, a1 * act(sigma * np.sign(r) * z1))) - mean**2
            continue
        c = math.sqrt(1.0 - r * r)
        # inner nodes: split at each kink of A at z' = (k/sigma - r z1) / c
        bks = np.sort(np.array([[(k / sigma - r * zz) / c for k in act.kinks] for zz in z1]), axis=1) \
            if act.kinks else np.zeros((z1.size, 0))
        lo, hi = -9.5, 9.5
        edges = np.concatenate([np.full((z1.size, 1), lo), np.clip(bks, lo, hi), np.full((z1.size, 1), hi)], axis=1)
        inner = np.zeros(z1.size)
        npan = 12
        for s in range(edges.shape[1] - 1):
            a_, b_ = edges[:, s], edges[:, s + 1]
            width = (b_ - a_) / npan
            for p in range(npan):
                left = a_ + p * width
                zz = left[:, None] + 0.5 * width[:, None] * (xg[None, :] + 1.0)
                ww = 0.5 * width[:, None] * wg[None, :] * np.exp(-0.5 * zz**2) / math.sqrt(2 * math.pi)
                inner += np.sum(ww * act(sigma * (r * z1[:, None] + c * zz)), axis=1)
        out[i] = float(np.dot(w1, a1 * inner)) - mean**2
    return out


@lru_cache(maxsize=32)
def _activation_covariance(name: str, sigma: float) -> "_CovarianceOfActivation":
    return _CovarianceOfActivation(name, sigma)


class _CovarianceOfActivation:
    """``Cov(A(sigma Y(0)), A(sigma Y(t)))`` as a function of the correlation,
    interpolated in ``theta = arcsin(rho)`` on Chebyshev nodes, where it is analytic."""

    def __init__(self, activation, sigma: float, nodes: int = 65):
        k = np.arange(nodes)
        theta = 0.5 * np.pi * np.cos(np.pi * (k + 0.5) / nodes)
        vals = bivariate_covariance(activation, sigma, np.sin(theta))
        self._interp = interpolate.BarycentricInterpolator(theta, vals)

    def __call__(self, rho):
        return self._interp(np.arcsin(np.clip(rho, -1.0, 1.0)))


# --------------------------------------------------------------------------
# CLT constants


def regime(model: SpectralModel, wavelet, rank: int) -> tuple[str, float]:
    """``("clt" | "nonclt", (2 alpha + beta) r)`` for the filtered input."""
    val = (2.0 * wavelet.alpha + model.beta) * rank
    return ("clt" if val > 1.0 else "nonclt"), val


@dataclass
class KappaResult:
    series: float
    integral: float
    sigma: float
    rank: int
    terms: np.ndarray
    truncation: int
    tail_mass: float
    truncation_bound: float
    gamma: float

    @property
    def relative_gap(self) -> float:
        if self.integral == 0:
            return 0.0 if self.series == 0 else math.inf
        return abs(self.series - self.integral) / self.integral


def kappa(model: SpectralModel, wavelet, j1: float, activation="modulus", L: int | None = None,
          table=None) -> KappaResult:
    """Amplitude of the Gaussian limit, by the Hermite series and by the covariance integral.

    Series: ``kappa^2 = sum_{l>=r} C_{sigma,l}^2 sigma^{-2l} g^{*l}(0)`` with
    ``g`` the density of ``X * psi_j1`` and ``sigma^2`` its variance.
    Integral: ``kappa^2 = (2 pi)^-1 int Cov(A(Y(0)), A(Y(t))) dt``.
    """
    act = get_activation(activation)
    if table is None:
        table = filtered_table(model, wavelet, j1)
    sigma = math.sqrt(table.values[0])
    exp = expand(act, sigma, L=L)
    r = exp.rank
    if r is None:
        raise ValueError(f"{act.name} has no non-constant Hermite component")
    gamma = 2.0 * wavelet.alpha + model.beta
    if gamma * r <= 1.0:
        raise ValueError(
            f"non-CLT regime: (2 alpha + beta) r = {gamma * r:.4g} <= 1; use nu_theta2"
        )
    ells = np.arange(r, exp.truncation + 1)
    ells = ells[np.abs(exp.coefficients[r:]) > 0]
    rho = table.values / table.values[0]
    from .spectra import CovarianceTable

    norm = CovarianceTable(table.lags, rho, table.source, table.kinked)
    I = np.atleast_1d(norm.power_integral(ells)) if ells.size else np.zeros(0)
    terms = exp.coefficients[ells] ** 2 * I
    # clamp round-off: a lone linear term integrates to ~0 when the wavelet kills low frequencies
    series = math.sqrt(max(float(terms.sum()), 0.0))
    cov = _activation_covariance(act.name, round(sigma, 14))
    ra = CovarianceTable(table.lags, cov(rho), table.source, table.kinked)
    integral = math.sqrt(max(float(ra.power_integral(1)), 0.0))
    absr = CovarianceTable(table.lags, np.abs(rho), table.source, table.kinked).power_integral(r)
    return KappaResult(series=series, integral=integral, sigma=sigma, rank=r, terms=terms,
                       truncation=exp.truncation, tail_mass=exp.tail_mass,
                       truncation_bound=max(exp.tail_mass, exp.energy - exp.partial_energy()) * absr,
                       gamma=gamma)


@lru_cache(maxsize=16)
def filtered_table(model: SpectralModel, wavelet, j1: float):
    """Covariance table of ``X * psi_j1`` (cached)."""
    return covariance_table(filtered_density(model, wavelet, j1))


def wavelet_l2_sq(wavelet) -> float:
    """``int |Psi(lam)|^2 dlam`` over the real line."""
    expo = 2.0 * wavelet.alpha if math.isfinite(wavelet.alpha) else 8.0
    return 2.0 * integrate_half_line(wavelet.fourier_abs2, expo, 1.0)


@dataclass
class ThetaResult:
    theta: float
    kappa: KappaResult
    sigma: float
    psi_norm: float


def theta1(model: SpectralModel, wavelet, j1: float, activation="modulus") -> ThetaResult:
    """CLT intercept ``2^{-j1/2} kappa sigma_j1^{-1} ||Psi||`` of the second-order moment."""
    k = kappa(model, wavelet, j1, activation)
    norm = math.sqrt(wavelet_l2_sq(wavelet))
    return ThetaResult(2.0 ** (-j1 / 2.0) * k.series / k.sigma * norm, k, k.sigma, norm)


def theta1_limit(model: SpectralModel, wavelet, activation="modulus", L: int | None = None) -> float:
    """Large-``j1`` limit ``||Psi|| [sum_l C_l^2 Qn^{*l}(0)]^{1/2}`` with
    ``Qn = Q / ||Q||_1`` and ``Q = |Psi|^2 |lam|^{beta-1}``."""
    beta = model.beta
    expo = 2.0 * wavelet.alpha + beta - 1.0

    def q(lam):
        lam = np.abs(np.asarray(lam, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            v = wavelet.fourier_abs2(lam) * lam ** (beta - 1.0)
        return np.where(lam == 0, 0.0, v)

    mass = 2.0 * integrate_half_line(q, expo, 1.0)

    def qn(lam):
        return q(lam) / mass

    grid = np.geomspace(1e-6, 1e3, 8)
    Q = TabulatedSpectrum(lam=grid, values=qn(grid), exponent=expo, evaluator=qn, scale=1.0,
                          band=1.0, source="normalized Q")
    exp = expand(activation, 1.0, L=L)
    r = exp.rank
    ells = np.arange(r, exp.truncation + 1)
    ells = ells[np.abs(exp.coefficients[r:]) > 0]
    vals = np.atleast_1d(lfold_convolution_at_zero(Q, ells))
    return math.sqrt(wavelet_l2_sq(wavelet)) * math.sqrt(float(np.sum(exp.coefficients[ells] ** 2 * vals)))


# --------------------------------------------------------------------------
# limit laws


@dataclass
class LimitLaw:
    """Descriptor of a limiting marginal law: ``center + scale * L`` where ``L``
    is the standardized law named by ``family``."""

    family: str
    scale: float = 1.0
    center: float = 0.0
    rate_exponent: float = 0.5
    params: dict = field(default_factory=dict)


def abs_chi2_reference(samples: int = 10**6, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo ``E|Z^2 - 1| / sqrt 2`` with its standard error."""
    rng = np.random.Generator(np.random.PCG64(seed))
    z = rng.standard_normal(samples)
    v = np.abs(z * z - 1.0) / math.sqrt(2.0)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(samples))


# frozen Monte-Carlo value of E|Z^2 - 1| / sqrt 2 (10^6 samples, seed 0)
E_ABS_STD_CHI2 = 0.6847471


def second_chaos_spectrum(wavelet, gamma: float, nodes: int = 1200, x_max: float = 400.0) -> np.ndarray:
    """Eigenvalues of the operator with kernel ``Psi(x - y) |x y|^{-(1-gamma)/2}``.

    The double Wiener-Ito integral with kernel ``Psi(l1 + l2) / |l1 l2|^{(1-gamma)/2}``
    has the law ``sum_k mu_k (Z_k^2 - 1)``; a single dominant eigenvalue gives
    the standardized chi-square law.  Nystrom discretization on a symmetric
    grid graded towards the singular origin.
    """
    if not 0 < gamma < 0.5:
        raise ValueError("second-chaos limit needs 0 < 2 alpha + beta < 1/2")
    e = (1.0 - gamma) / 2.0
    p = 4.0
    m = nodes // 2
    # x = x_max u^p on (0, x_max]: Gauss-Legendre in u over graded panels
    xg, wg = _gl(8)
    panels = m // 8
    ue = np.linspace(0.0, 1.0, panels + 1)
    u = (0.5 * (ue[:-1] + ue[1:])[:, None] + 0.5 * np.diff(ue)[:, None] * xg[None, :]).ravel()
    wu = (0.5 * np.diff(ue)[:, None] * wg[None, :]).ravel()
    x = x_max * u**p
    w = x_max * p * u ** (p - 1) * wu * x ** (-2 * e)
    X = np.concatenate([-x[::-1], x])
    W = np.concatenate([w[::-1], w])
    K = np.real(wavelet.fourier(X[:, None] - X[None, :]))
    sw = np.sqrt(W)
    A = sw[:, None] * K * sw[None, :]
    mu = np.linalg.eigvalsh(0.5 * (A + A.T))
    return mu[np.argsort(-np.abs(mu))]


def mixture_samples(mu: np.ndarray, size: int = 10**6, seed: int = 0, top: int = 64,
                    total: float | None = None) -> np.ndarray:
    """Standardized samples of ``sum_k mu_k (Z_k^2 - 1)``.

    The ``top`` largest eigenvalues are sampled exactly; the remainder is
    replaced by a Gaussian of the same variance.  ``total`` is the exact
    ``sum_k mu_k^2`` when known; mass the discretization missed is then
    added to the Gaussian remainder.
    """
    mu = np.asarray(mu, dtype=float)
    mu = mu[np.argsort(-np.abs(mu))]
    rng = np.random.Generator(np.random.PCG64(seed))
    head = mu[:top]
    tot = float(np.sum(mu**2)) if total is None else max(float(total), float(np.sum(mu**2)))
    rest = tot - float(np.sum(head**2))
    out = np.zeros(size)
    for m in head:
        z = rng.standard_normal(size)
        out += m * (z * z - 1.0)
    out += math.sqrt(2.0 * rest) * rng.standard_normal(size)
    return out / math.sqrt(2.0 * tot)


def mixture_abs_mean(mu: np.ndarray, size: int = 10**6, seed: int = 0, total: float | None = None) -> float:
    """``E|L|`` of the standardized chi-square mixture with weights ``mu``."""
    return float(np.mean(np.abs(mixture_samples(mu, size, seed, total=total))))


@dataclass
class NonCLTConstants:
    nu: float
    rank: int
    sigma: float
    gamma: float
    var_I: float
    e_abs_I_single: float
    e_abs_I_variance: float
    theta2_printed: float
    theta2_derived: float
    theta2_printed_variance: float
    theta2_derived_variance: float
    law: LimitLaw
    eigenvalues: np.ndarray | None = None
    e_abs_std_mixture: float | None = None
    theta2_mixture: float | None = None


def nu_theta2(model: SpectralModel, wavelet, j1: float, activation="modulus", spectrum: bool = False) -> NonCLTConstants:
    """Constants of the non-Gaussian (non-CLT) limit.

    ``nu = C_{sigma,r} / sqrt(r!) 2^{j1 alpha r} sigma^{-r} C_Psi(0)^r C_X(0)^{r/2}``.
    For ``r = 2`` the intercept of ``2^{j(2 alpha + beta)} S(j1, j1 + j)`` is
    assembled with both candidate prefactors, ``1/(2^{3/2} sqrt(pi))`` and
    ``sqrt(pi)/2 C_2 = 1/2``, and with two evaluations of ``E|I_2|``: the
    single-chaos identity ``s^2 E|Z^2-1|``, ``s^2 = int |Psi|^2 |lam|^{gamma-1}``,
    and the exact variance ``2 c_2 int |Psi|^2 |lam|^{2 gamma - 1}`` combined
    with the chi-square shape.
    """
    act = get_activation(activation)
    g = filtered_density(model, wavelet, j1)
    sigma = math.sqrt(variance_of(g))
    exp = expand(act, sigma, L=8)
    r = exp.rank
    gamma = 2.0 * wavelet.alpha + model.beta
    if isinstance(model, GeneralizedFBM):
        gamma = 2.0 * (wavelet.alpha - model.H)
    if not gamma * r < 1.0:
        raise ValueError(f"CLT regime: (2 alpha + beta) r = {gamma * r:.4g} >= 1; use kappa")
    cx = model.c_zero()
    if cx <= 0:
        raise ValueError("C_X(0) must be positive")
    cpsi = wavelet.c_psi0()
    nu = (exp.coefficients[r] / math.sqrt(math.factorial(r)) * 2.0 ** (j1 * wavelet.alpha * r)
          * sigma ** (-r) * cpsi**r * cx ** (r / 2.0))

    def w_pow(p):
        expo = 2.0 * wavelet.alpha + p

        def h(lam):
            lam = np.abs(np.asarray(lam, dtype=float))
            with np.errstate(divide="ignore", invalid="ignore"):
                v = wavelet.fourier_abs2(lam) * lam**p
            return np.where(lam == 0, 0.0, v)

        return 2.0 * integrate_half_line(h, expo, 1.0)

    var_I = math.factorial(r) * riesz_power_convolution(gamma, r) * w_pow(r * gamma - 1.0)
    s2 = w_pow(gamma - 1.0)
    if r == 2:
        e_single = s2 * E_ABS_CHI2
        e_var = math.sqrt(var_I / 2.0) * E_ABS_CHI2
        law = LimitLaw("standardized-chi2-chaos", scale=abs(nu) * math.sqrt(var_I), rate_exponent=gamma * r / 2.0,
                       params={"r": 2})
    elif r == 1:
        e_single = e_var = math.sqrt(var_I) * math.sqrt(2.0 / math.pi)
        law = LimitLaw("gaussian-LRD", scale=abs(nu) * math.sqrt(var_I), rate_exponent=gamma / 2.0,
                       params={"r": 1})
    else:
        e_single = e_var = float("nan")
        law = LimitLaw(f"hermite-rank-{r}", scale=abs(nu) * math.sqrt(var_I), rate_exponent=gamma * r / 2.0,
                       params={"r": r})
    base = 2.0 ** (-j1 * model.beta) * sigma ** (-2) * cpsi**2 * cx
    printed = 1.0 / (2.0**1.5 * math.sqrt(math.pi))
    derived = math.sqrt(math.pi) / 2.0 * expand(act, 1.0, L=4).coefficients[2] if r == 2 else float("nan")
    mu = e_mix = th_mix = None
    if spectrum and r == 2:
        mu = second_chaos_spectrum(wavelet, gamma)
        # the exact Hilbert-Schmidt mass is var_I / 2
        e_mix = mixture_abs_mean(mu, total=var_I / 2.0)
        th_mix = base * derived * math.sqrt(var_I) * e_mix
    return NonCLTConstants(
        nu=float(nu), rank=r, sigma=sigma, gamma=gamma, var_I=var_I,
        e_abs_I_single=e_single, e_abs_I_variance=e_var,
        theta2_printed=base * printed * e_single, theta2_derived=base * derived * e_single,
        theta2_printed_variance=base * printed * e_var, theta2_derived_variance=base * derived * e_var,
        law=law, eigenvalues=mu, e_abs_std_mixture=e_mix, theta2_mixture=th_mix,
    )


def delta_method_limit(A2, base: LimitLaw) -> LimitLaw:
    """Limit law after a second activation.

    Differentiable at 0 with nonzero slope: same family, scaled by
    ``|A2'(0)|`` and centred at ``A2(0)``.  Homogeneous of degree ``chi``:
    push-forward of the family, rate exponent multiplied by ``chi``.
    """
    act = get_activation(A2)
    if act.name == "identity":
        return base
    if act.differentiable_at_zero and act.derivative_at_zero:
        return LimitLaw(base.family, base.scale * abs(act.derivative_at_zero), act.value_at_zero,
                        base.rate_exponent, dict(base.params))
    if act.homogeneity is not None:
        chi = act.homogeneity
        if act.name == "modulus" and base.family == "gaussian":
            fam = "folded-normal"
        else:
            fam = f"{act.name}({base.family})"
        return LimitLaw(fam, base.scale**chi, 0.0, base.rate_exponent * chi, dict(base.params))
    raise ValueError(f"{act.name} is neither differentiable at 0 with nonzero slope nor homogeneous: unsupported by the corollaries")
