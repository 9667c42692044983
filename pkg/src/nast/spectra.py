"""Spectral density models, covariances and self-convolutions at the origin.

Densities are even functions on the real line with the convention
``R(t) = int f(lam) exp(i lam t) dlam``.  Every model records its behavior
near the origin, ``f(lam) ~ c |lam|**exponent``, which the quadrature uses to
integrate the singularity exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special

__all__ = [
    "SpectralModel",
    "ParamLRD",
    "GeneralizedFBM",
    "TabulatedSpectrum",
    "CovarianceTable",
    "model_from_config",
    "eval_density",
    "half_line_rule",
    "integrate_half_line",
    "covariance",
    "covariance_table",
    "binned_masses",
    "covariance_from_masses",
    "variance_of",
    "filtered_density",
    "variance_sigma_j",
    "lfold_convolution_at_zero",
    "riesz_constant",
    "power_law_convolution",
    "hybrid_grid",
    "riesz_power_convolution",
    "export_two_column",
]


# --------------------------------------------------------------------------
# quadrature


@lru_cache(maxsize=16)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def half_line_rule(exponent: float, scale: float, lam_max: float, t_max: float = 0.0,
                   order: int = 16, per_octave: int = 3, lo: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``int_0^lam_max g(lam) dlam`` where ``g ~ lam**exponent`` at 0.

    The first panel ``[0, lo*scale]`` uses the substitution
    ``lam = a v**(1/(exponent+1))`` so the power singularity becomes smooth.
    Further panels are geometric up to ``scale`` and uniform beyond, with
    widths small enough to resolve ``cos(lam t)`` for ``|t| <= t_max``.
    """
    if exponent <= -1:
        raise ValueError(f"density is not integrable at 0 (exponent {exponent} <= -1)")
    a = lo * scale
    x, w = _gauss_legendre(32)
    p = 1.0 / (exponent + 1.0)
    # int_0^a g(lam) dlam, lam = a v^p, dlam = a p v^(p-1) dv
    nodes = [a * x**p]
    weights = [a * p * x ** (p - 1.0) * w]
    xg, wg = _gauss_legendre(order)
    max_w = 8.0 / t_max if t_max > 0 else np.inf
    # geometric panels from a up to the switch point
    switch = min(scale, lam_max)
    edges = [a]
    ratio = 2.0 ** (1.0 / per_octave)
    while edges[-1] < switch:
        nxt = min(edges[-1] * ratio, switch, edges[-1] + max_w)
        edges.append(nxt)
    # uniform panels up to lam_max
    width = min(0.25 * scale, max_w)
    if lam_max > edges[-1]:
        n_uni = int(math.ceil((lam_max - edges[-1]) / width))
        edges.extend(np.linspace(edges[-1], lam_max, n_uni + 1)[1:].tolist())
    e = np.asarray(edges)
    lo_e, hi_e = e[:-1], e[1:]
    h = hi_e - lo_e
    nodes.append((lo_e[:, None] + h[:, None] * xg[None, :]).ravel())
    weights.append((h[:, None] * wg[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def _tail_cutoff(g: Callable, scale: float, rel: float = 1e-14, cap: float = 2.0**14) -> tuple[float, float]:
    """Cutoff where ``lam g(lam)`` has fallen below ``rel`` of its peak, and the
    local log-slope of ``g`` there (for a power-law tail correction)."""
    ks = np.arange(-20, 60)
    lam = scale * 2.0 ** (ks / 4.0)
    vals = np.abs(g(lam)) * lam
    peak = float(np.max(vals[np.isfinite(vals)]))
    # running max from the right gives an envelope robust to zeros of g
    env = np.maximum.accumulate(vals[::-1])[::-1]
    imax = int(np.argmax(vals))
    cut = lam[-1]
    for i in range(imax, lam.size):
        if env[i] < rel * peak:
            cut = lam[i]
            break
    cut = min(cut, cap * scale)
    # envelope slope over the last two octaves before the cutoff
    probe = np.geomspace(cut / 4, cut, 64)
    gp = np.abs(g(probe))
    e1 = np.max(gp[:32]) if np.any(gp[:32] > 0) else 0.0
    e2 = np.max(gp[32:]) if np.any(gp[32:] > 0) else 0.0
    if e1 > 0 and e2 > 0:
        slope = math.log(e2 / e1) / math.log(probe[48] / probe[16])
    else:
        slope = -np.inf
    return cut, slope


def integrate_half_line(g: Callable, exponent: float, scale: float = 1.0,
                        lam_max: float | None = None) -> float:
    """``int_0^inf g(lam) dlam`` for ``g ~ lam**exponent`` near 0 and a decaying tail."""
    if lam_max is None:
        lam_max, slope = _tail_cutoff(g, scale)
    else:
        slope = -np.inf
    lam, w = half_line_rule(exponent, scale, lam_max)
    val = float(np.dot(w, g(lam)))
    if np.isfinite(slope) and slope < -1.0:
        # int_L^inf g(L) (lam/L)^s dlam = g(L) L / (-s-1)
        val += float(np.abs(g(np.array([lam_max])))[0]) * lam_max / (-slope - 1.0)
    return val


# --------------------------------------------------------------------------
# models


class SpectralModel:
    """Even spectral density ``f`` with ``f(lam) ~ c0 |lam|**exponent`` near 0."""

    kind: str = "model"
    exponent: float = 0.0
    integrable: bool = True
    scale: float = 1.0

    def density(self, lam):
        raise NotImplementedError

    def __call__(self, lam):
        return self.density(lam)

    @property
    def beta(self) -> float:
        """Long-memory exponent: ``f(lam) ~ |lam|**(beta - 1)`` near 0."""
        return self.exponent + 1.0

    def c_zero(self) -> float:
        """``lim f(lam) |lam|**(-exponent)`` as ``lam -> 0``."""
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ParamLRD(SpectralModel):
    """``f(lam) = c1 / (|lam|**(1-beta1) (lam**2 + c2)**beta2)``.

    ``beta1 = 1`` gives a short-range model; ``beta1 = beta2 = 1`` is the
    Ornstein-Uhlenbeck spectrum with ``R(t) = c1 pi exp(-|t|)`` when ``c2 = 1``.
    """

    c1: float = 1.0
    beta1: float = 0.75
    beta2: float = 4.0
    c2: float = 1.0
    kind = "param-lrd"

    def __post_init__(self):
        if not self.c1 > 0:
            raise ValueError(f"c1 must be positive, got {self.c1}")
        if not 0 < self.beta1 <= 1:
            raise ValueError(f"beta1 must lie in (0, 1], got {self.beta1}")
        if not self.beta2 > 0.5 - 0.5 * self.beta1 + 1e-12:
            raise ValueError(f"beta2 too small for an integrable density: {self.beta2}")
        if not self.c2 > 0:
            raise ValueError(f"c2 must be positive, got {self.c2}")

    @property
    def exponent(self) -> float:
        return self.beta1 - 1.0

    @property
    def scale(self) -> float:
        return math.sqrt(self.c2)

    @property
    def short_range(self) -> bool:
        return self.beta1 == 1.0

    def density(self, lam):
        lam = np.abs(np.asarray(lam, dtype=float))
        with np.errstate(divide="ignore"):
            return self.c1 / (lam ** (1.0 - self.beta1) * (lam**2 + self.c2) ** self.beta2)

    def c_zero(self) -> float:
        return self.c1 / self.c2**self.beta2

    def to_config(self) -> dict:
        return {"kind": self.kind, "c1": self.c1, "beta1": self.beta1,
                "beta2": self.beta2, "c2": self.c2}


@dataclass(frozen=True)
class GeneralizedFBM(SpectralModel):
    """Generalized spectral density of fractional Brownian motion,
    ``f(lam) = (2 pi)**-1 |lam|**-(2H+1)``.  Not integrable; only filtered
    versions with a wavelet of ``alpha > H`` are."""

    H: float = 0.5
    kind = "generalized-fbm"
    integrable = False

    def __post_init__(self):
        if not 0 < self.H < 1:
            raise ValueError(f"Hurst index must lie in (0, 1), got {self.H}")

    @property
    def exponent(self) -> float:
        return -(2.0 * self.H + 1.0)

    def density(self, lam):
        lam = np.abs(np.asarray(lam, dtype=float))
        with np.errstate(divide="ignore"):
            return lam ** (-(2.0 * self.H + 1.0)) / (2.0 * math.pi)

    def c_zero(self) -> float:
        return 1.0 / (2.0 * math.pi)

    def to_config(self) -> dict:
        return {"kind": self.kind, "H": self.H}


@dataclass(frozen=True, eq=False)
class TabulatedSpectrum(SpectralModel):
    """Density given on a positive grid, with optional exact evaluator.

    Between nodes the density is interpolated log-log; below the first node a
    power law with the declared ``exponent`` is used, above the last node the
    final log-log slope is continued.
    """

    lam: np.ndarray = field(default_factory=lambda: np.array([1.0]))
    values: np.ndarray = field(default_factory=lambda: np.array([1.0]))
    exponent: float = 0.0
    evaluator: Callable | None = None
    scale: float = 1.0
    source: str = "table"
    band: float | None = None
    kind = "tabulated"

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        if np.any(lam <= 0) or np.any(np.diff(lam) <= 0):
            raise ValueError("tabulated grid must be positive and increasing")
        if self.exponent <= -1:
            raise ValueError(f"exponent {self.exponent} is not integrable at 0")
        if self.band is None:
            object.__setattr__(self, "band", self.scale)

    def density(self, lam):
        lam = np.abs(np.asarray(lam, dtype=float))
        if self.evaluator is not None:
            return self.evaluator(lam)
        x = np.log(self.lam)
        y = np.log(np.maximum(self.values, 1e-300))
        with np.errstate(divide="ignore"):
            ll = np.log(lam)
        out = np.exp(np.interp(ll, x, y))
        low = lam < self.lam[0]
        out = np.where(low, self.values[0] * (lam / self.lam[0]) ** self.exponent, out)
        if self.lam.size > 1:
            s = (y[-1] - y[-2]) / (x[-1] - x[-2])
            out = np.where(lam > self.lam[-1], self.values[-1] * (lam / self.lam[-1]) ** s, out)
        return out

    def c_zero(self) -> float:
        lam0 = self.lam[0] * 1e-3
        return float(self.density(lam0) / lam0**self.exponent)

    def loglog_slope_near_zero(self, decades: float = 2.0) -> float:
        lam = self.lam[0] * np.array([10**-decades, 1.0])
        f = self.density(lam)
        return float(np.diff(np.log(f))[0] / np.diff(np.log(lam))[0])

    def to_config(self) -> dict:
        return {"kind": self.kind, "source": self.source, "exponent": self.exponent}


def model_from_config(cfg: dict) -> SpectralModel:
    """Build a model from a mapping with a ``kind`` key."""
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    if kind == "param-lrd":
        allowed = {"c1", "beta1", "beta2", "c2"}
        cls: type = ParamLRD
    elif kind == "generalized-fbm":
        allowed = {"H"}
        cls = GeneralizedFBM
    elif kind == "tabulated":
        path = cfg.pop("path")
        exponent = float(cfg.pop("exponent", 0.0))
        data = np.loadtxt(path)
        return TabulatedSpectrum(lam=data[:, 0], values=data[:, 1], exponent=exponent, source=str(path))
    else:
        raise ValueError(f"unknown spectral model kind {kind!r}")
    extra = set(cfg) - allowed
    if extra:
        raise ValueError(f"unexpected keys for {kind}: {sorted(extra)}")
    return cls(**{k: float(v) for k, v in cfg.items()})


def eval_density(model: SpectralModel, lam):
    return model.density(lam)


# --------------------------------------------------------------------------
# covariance


@dataclass
class CovarianceTable:
    """Covariance ``R`` sampled on a uniform lag grid ``t_k = k dt, k >= 0``."""

    lags: np.ndarray
    values: np.ndarray
    source: str = ""
    kinked: bool = False

    @property
    def variance(self) -> float:
        return float(self.values[0])

    def power_integral(self, ell, extrapolate: bool = True) -> np.ndarray | float:
        """``(2 pi)**-1 int R(t)**ell dt`` over the real line.

        Trapezoid rule over the full period of the even table, cut where
        ``|R|**ell`` drops below ``1e-17 R(0)**ell``.  For tables flagged
        ``kinked`` (the step could not resolve the density's tail) and with
        ``extrapolate``, steps ``dt`` and ``2 dt`` are combined by Richardson
        extrapolation, removing the ``O(dt**2)`` error of a kink of ``R`` at
        the origin.  Resolved tables are left alone: there the trapezoid rule
        is already spectrally accurate and the coarse step would alias.
        """
        ells = np.atleast_1d(np.asarray(ell))
        dt = self.lags[1] - self.lags[0]
        out = np.empty(ells.shape, dtype=float)

        def trap(v, h):
            return h * (v[0] + 2.0 * v[1:-1].sum() + v[-1]) / (2.0 * math.pi)

        v = self.values
        # decreasing envelope of |R|; the integrand is cut where (env / R0)**ell < 1e-17
        env = np.maximum.accumulate(np.abs(v[::-1]))[::-1] / abs(v[0])
        neg_env = -env
        for i, l in enumerate(ells):
            cut = int(np.searchsorted(neg_env, -(1e-17 ** (1.0 / max(int(l), 1)))))
            cut = min(v.size, max(cut + 8, 9))
            cut -= (cut - 1) % 2  # odd length keeps the coarse grid aligned
            rl = v[:cut] ** int(l)
            fine = trap(rl, dt)
            if extrapolate and self.kinked and (rl.size - 1) % 2 == 0 and rl.size > 4:
                coarse = trap(rl[::2], 2.0 * dt)
                fine = (4.0 * fine - coarse) / 3.0
            out[i] = fine
        return out if np.ndim(ell) else float(out[0])

    def to_dict(self) -> dict:
        return {"source": self.source, "kinked": self.kinked, "lags": self.lags.tolist(),
                "values": self.values.tolist()}


def _cov_from_rule(g: Callable, lam: np.ndarray, w: np.ndarray, t: np.ndarray) -> np.ndarray:
    gw = w * g(lam)
    out = np.empty(t.size)
    step = max(1, int(4e6 // max(lam.size, 1)))
    for s in range(0, t.size, step):
        out[s:s + step] = 2.0 * np.cos(np.outer(t[s:s + step], lam)) @ gw
    return out


def covariance(model: SpectralModel, t) -> np.ndarray:
    """``R(t) = int f(lam) cos(lam t) dlam`` at the given lags."""
    if not model.integrable:
        raise ValueError(f"{model.kind} density is not integrable; filter it with a wavelet first")
    t = np.abs(np.asarray(t, dtype=float))
    g = model.density
    lam_max, slope = _tail_cutoff(g, model.scale)
    lam, w = half_line_rule(model.exponent, model.scale, lam_max, t_max=float(t.max(initial=0.0)))
    R = _cov_from_rule(g, lam, w, t.ravel()).reshape(t.shape)
    if np.isfinite(slope) and slope < -1.0:
        # tail correction only matters near t = 0 where cos ~ 1
        tail = 2.0 * float(g(np.array([lam_max]))[0]) * lam_max / (-slope - 1.0)
        R = R + tail * np.where(t * lam_max < 1e-3, 1.0, 0.0)
    return R


def binned_masses(model: SpectralModel, n: int, dt: float, exact_bins: int = 64,
                  max_images: int = 32) -> np.ndarray:
    """Spectral mass per DFT bin for a length-``n`` grid of step ``dt``.

    Returns ``F[k]`` for ``k = 0..n//2``: the integral of the alias-folded
    density ``sum_m f(lam + 2 pi m / dt)`` over the bin of width
    ``2 pi / (n dt)`` centred at ``lam_k = 2 pi k / (n dt)``.  The sampled
    covariance is then ``R(m dt) = F[0] + 2 sum_{0<k<n/2} F[k] cos(lam_k m dt)
    + F[n/2] cos(pi m)``.  Bins use the midpoint value, which makes the
    sampled covariance the exact periodization of ``R`` by Poisson
    summation.  When the density is singular at 0 the first ``exact_bins``
    bins are integrated instead, so that no bin carries infinite mass.
    """
    if n < 4 or n % 2:
        raise ValueError(f"grid length must be even and >= 4, got {n}")
    if model.exponent <= -1:
        raise ValueError(f"density not integrable at 0 (exponent {model.exponent})")
    dlam = 2.0 * math.pi / (n * dt)
    period = 2.0 * math.pi / dt
    K = n // 2
    lam = dlam * np.arange(K + 1)
    f = model.density
    direct = np.empty(K + 1)
    direct[1:] = f(lam[1:]) * dlam
    direct[0] = 0.0
    images = np.zeros(K + 1)
    ref = float(np.max(direct)) if K > 0 else 1.0
    for m in range(1, max_images + 1):
        img = (f(lam + m * period) + f(np.abs(lam - m * period))) * dlam
        images += img
        if float(np.max(img)) < 1e-17 * ref:
            break
    else:
        # power-law tail of the images beyond max_images
        lm = (max_images + 0.5) * period
        g1, g2 = f(np.array([lm, 2.0 * lm]))
        if g1 > 0 and g2 > 0:
            slope = math.log(g2 / g1) / math.log(2.0)
            if slope < -1.0:
                images += 2.0 * g1 * lm / (-slope - 1.0) / period * dlam
    if model.exponent < 0:
        # bins near the singular origin are integrated; lam = a v^p removes the power singularity
        p = 1.0 / (model.exponent + 1.0)
        x32, w32 = _gauss_legendre(32)
        a = 0.5 * dlam
        direct[0] = 2.0 * float(np.dot(a * p * x32 ** (p - 1.0) * w32, f(a * x32**p)))
        xg, wg = _gauss_legendre(16)
        for k in range(1, min(exact_bins, K)):
            lo, hi = lam[k] - 0.5 * dlam, lam[k] + 0.5 * dlam
            direct[k] = float(np.dot((hi - lo) * wg, f(lo + (hi - lo) * xg)))
    else:
        direct[0] = float(f(np.array([0.0]))[0]) * dlam
    F = direct + images
    if not np.all(np.isfinite(F)):
        raise ValueError("non-finite spectral mass; check the model near the origin")
    return F


def covariance_from_masses(F: np.ndarray, n: int) -> np.ndarray:
    """Periodic covariance ``R(m dt), m = 0..n-1`` from one-sided bin masses."""
    return np.fft.irfft(np.asarray(F, dtype=float) * n, n)


def covariance_table(model: SpectralModel, rel: float = 1e-12, dt: float | None = None,
                     n: int | None = None, max_n: int = 2**22) -> CovarianceTable:
    """Covariance on a uniform lag grid, computed from folded bin masses by FFT.

    The step resolves the density up to where it is negligible (at most 64
    points per unit of the model's widest frequency scale); the period
    doubles until ``|R| < rel R(0)`` over the far half of the grid.
    """
    if not model.integrable:
        raise ValueError(f"{model.kind} density is not integrable; filter it with a wavelet first")
    sc = model.scale
    band = getattr(model, "band", sc)
    kinked = False
    if dt is None:
        lam_c, _ = _tail_cutoff(model.density, sc, rel=1e-13)
        kinked = lam_c > 64.0 * band
        # step pi / (2 lam_c) keeps the l-fold spectra of R**l below the sampling rate for l <= 3
        dt = math.pi / min(2.0 * lam_c, 64.0 * band)
    fixed = n is not None
    if n is None:
        n = 2 ** int(math.ceil(math.log2(max(512.0 / (sc * dt), 1024))))
    while True:
        F = binned_masses(model, n, dt)
        R = covariance_from_masses(F, n)
        half = R[: n // 2 + 1]
        far = np.abs(half[n // 4:])
        if fixed or far.max() < rel * abs(R[0]) or 2 * n > max_n:
            break
        n *= 2
    lags = dt * np.arange(n // 2 + 1)
    return CovarianceTable(lags=lags, values=half.copy(), source=repr(model), kinked=kinked)


def variance_of(model: SpectralModel) -> float:
    """``R(0) = 2 int_0^inf f``."""
    return 2.0 * integrate_half_line(model.density, model.exponent, model.scale)


# --------------------------------------------------------------------------
# wavelet-filtered densities


def filtered_density(model: SpectralModel, wavelet, j: float = 0.0, gain: float = 1.0) -> TabulatedSpectrum:
    """Density of ``X * psi_j``: ``|gain Psi(2**j lam)|**2 f(lam)``.

    The exponent near 0 is ``2 alpha + beta - 1``.  Raises if the result is
    not integrable (generalized fBm needs ``alpha > H``).
    """
    alpha = float(wavelet.alpha)
    expo = 2.0 * alpha + model.exponent if math.isfinite(alpha) else 8.0
    if expo <= -1.0:
        if isinstance(model, GeneralizedFBM):
            raise ValueError(
                f"filtered fBm density diverges at 0: wavelet alpha={alpha} must exceed H={model.H}"
            )
        raise ValueError(f"filtered density not integrable at 0 (exponent {expo})")
    s = 2.0**j

    def ev(lam):
        lam = np.abs(np.asarray(lam, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            v = gain**2 * wavelet.fourier_abs2(s * lam) * model.density(lam)
        return np.where(lam == 0, 0.0 if expo > 0 else np.inf, v)

    grid = hybrid_grid() / s
    if model.integrable:
        scale, band = min(1.0 / s, model.scale), max(1.0 / s, model.scale)
    else:
        scale = band = 1.0 / s
    return TabulatedSpectrum(lam=grid, values=ev(grid), exponent=expo, evaluator=ev,
                             scale=scale, band=band, source=f"|Psi(2^{j} lam)|^2 f for {model!r}, {wavelet!r}")


def variance_sigma_j(model: SpectralModel, wavelet, j: float, gain: float = 1.0) -> float:
    """``sigma_j**2 = Var(X * psi_j) = int |Psi(2**j lam)|**2 f(lam) dlam``."""
    g = filtered_density(model, wavelet, j, gain)
    return variance_of(g)


def lfold_convolution_at_zero(g: SpectralModel, ell, table: CovarianceTable | None = None):
    """``g^{*ell}(0) = (2 pi)**-1 int R(t)**ell dt`` where ``R`` is the covariance of ``g``.

    Requires ``ell * gamma > 1`` with ``gamma = exponent + 1``, otherwise the
    self-convolution diverges at the origin.
    """
    gamma = g.exponent + 1.0
    ells = np.atleast_1d(np.asarray(ell))
    bad = ells[ells * gamma <= 1.0]
    if bad.size:
        raise ValueError(
            f"ell-fold convolution diverges at 0 for ell={int(bad[0])}: ell*gamma={bad[0] * gamma:.4g} <= 1"
        )
    if table is None:
        table = covariance_table(g)
    return table.power_integral(ell)


# --------------------------------------------------------------------------
# Riesz kernels


def power_law_convolution(gamma1: float, gamma2: float, lam: float = 1.0) -> float:
    """``int |x|^(g1-1) |lam - x|^(g2-1) dx`` over the real line, by quadrature.

    Each endpoint singularity ``t^(g-1)`` is removed by ``t = a u^(1/g)`` and
    each algebraic tail ``t^(g1+g2-2)`` by ``t = a u^(-1/(1-g1-g2))``, leaving
    bounded integrands on ``[0, 1]`` for tanh-sinh quadrature.
    """
    import mpmath

    g1, g2 = gamma1, gamma2
    if not (g1 > 0 and g2 > 0 and g1 + g2 < 1):
        raise ValueError("power-law convolution needs gamma1, gamma2 > 0 and gamma1 + gamma2 < 1")
    lam = abs(float(lam))
    c = g1 + g2
    with mpmath.workdps(30):
        L = mpmath.mpf(lam)

        def inner(ga, gb):
            # int_0^{L/2} t^(ga-1) (L - t)^(gb-1) dt
            h = L / 2
            return h**ga / ga * mpmath.quad(lambda u: (L - h * u ** (1 / ga)) ** (gb - 1), [0, 1])

        def outer(ga, gb):
            # int_0^inf t^(ga-1) (L + t)^(gb-1) dt, split at t = L
            near = L**ga / ga * mpmath.quad(lambda u: (L + L * u ** (1 / ga)) ** (gb - 1), [0, 1])

            def far_integrand(u):  # tanh-sinh never evaluates u = 0
                t = L * u ** (-1 / (1 - c))
                return t ** (ga - 1) * (L + t) ** (gb - 1) * L / (1 - c) * u ** (-1 / (1 - c) - 1)

            return near + mpmath.quad(far_integrand, [0, 1])

        val = inner(g1, g2) + inner(g2, g1) + outer(g1, g2) + outer(g2, g1)
    return float(val)


def riesz_constant(gamma1: float, gamma2: float) -> float:
    """Constant in ``|x|^(g1-1) * |x|^(g2-1) = c |x|^(g1+g2-1)`` on the real line.

    Valid for ``g1, g2 > 0`` and ``g1 + g2 < 1``.
    """
    if not (gamma1 > 0 and gamma2 > 0 and gamma1 + gamma2 < 1):
        raise ValueError("Riesz composition needs gamma1, gamma2 > 0 and gamma1 + gamma2 < 1")
    g1, g2 = gamma1, gamma2
    return (
        math.sqrt(math.pi)
        * special.gamma(g1 / 2) * special.gamma(g2 / 2) * special.gamma((1 - g1 - g2) / 2)
        / (special.gamma((1 - g1) / 2) * special.gamma((1 - g2) / 2) * special.gamma((g1 + g2) / 2))
    )


def riesz_power_convolution(gamma: float, r: int) -> float:
    """Constant ``c_r`` in ``(|x|^(gamma-1))^{*r} = c_r |x|^(r gamma - 1)``, for ``r gamma < 1``."""
    if not (gamma > 0 and r * gamma < 1):
        raise ValueError("r-fold Riesz composition needs gamma > 0 and r*gamma < 1")
    return (
        math.pi ** ((r - 1) / 2)
        * special.gamma(gamma / 2) ** r * special.gamma((1 - r * gamma) / 2)
        / (special.gamma((1 - gamma) / 2) ** r * special.gamma(r * gamma / 2))
    )


def hybrid_grid(lo: float = 1e-6, knee: float = 1.0, hi: float = 64.0, per_decade: int = 256,
                step: float | None = None) -> np.ndarray:
    """``per_decade`` log-spaced points on ``[lo, knee]`` followed by uniform
    spacing (default ``knee / per_decade``) up to ``hi``."""
    decades = math.log10(knee / lo)
    logs = np.logspace(math.log10(lo), math.log10(knee), int(round(decades * per_decade)) + 1)
    h = knee / per_decade if step is None else step
    lin = knee + h * np.arange(1, int(math.floor((hi - knee) / h)) + 1)
    return np.concatenate([logs, lin])


def export_two_column(path, x, y, header: dict | None = None) -> Path:
    """Write ``x y`` columns with a JSON sidecar (``<path>.json``) describing them."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.column_stack([np.asarray(x), np.asarray(y)]), fmt="%.17g")
    if header is not None:
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(header, indent=2, default=str))
    return path
