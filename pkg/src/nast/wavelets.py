"""Mother and father wavelets, dyadic filter banks and admissibility checks.

All wavelets use the L1 dilation convention ``psi_j(t) = 2**-j psi(t / 2**j)``,
so the Fourier transform of ``psi_j`` is ``Psi(2**j * lam)``.  Fourier
transforms follow ``Psi(lam) = int exp(-i lam t) psi(t) dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import special

__all__ = [
    "Wavelet",
    "Daubechies",
    "MexicanHat",
    "RealMorlet",
    "Cauchy",
    "Morse",
    "Meyer",
    "Father",
    "GaussianFather",
    "ComplementFather",
    "MeyerFather",
    "Filterbank",
    "LittlewoodPaleyReport",
    "make_wavelet",
    "daubechies_taps",
    "fourier_eval",
    "sample_filter",
    "littlewood_paley_report",
    "vanishing_moments",
]


def daubechies_taps(K: int) -> np.ndarray:
    """Low-pass Daubechies filter with ``K`` taps (``K/2`` vanishing moments).

    Taps are normalized so that ``sum(h) = sqrt(2)`` and ordered as the
    reconstruction filter (for ``K = 4``: ``(1+sqrt3, 3+sqrt3, 3-sqrt3,
    1-sqrt3) / (4 sqrt2)``).  Computed by spectral factorization of the
    Daubechies polynomial, keeping the roots inside the unit circle.
    """
    if K < 2 or K % 2 or K > 40:
        raise ValueError(f"Daubechies tap count must be even in [2, 40], got {K}")
    N = K // 2
    # P(y) = sum_k binom(N-1+k, k) y^k with y = (2 - z - 1/z) / 4
    poly = np.zeros(1)
    for k in range(N):
        coef = math.comb(N - 1 + k, k)
        # y^k as a Laurent polynomial in z, multiplied by z^(N-1)
        term = np.array([1.0])
        for _ in range(k):
            term = np.convolve(term, np.array([-0.25, 0.5, -0.25]))
        padded = np.zeros(2 * N - 1)
        off = (N - 1) - k
        padded[off:off + term.size] = coef * term
        if poly.size < padded.size:
            poly = np.pad(poly, (0, padded.size - poly.size))
        poly = poly + padded
    lfac = np.array([1.0 + 0j])
    if N > 1:
        roots = np.roots(poly)
        inside = roots[np.abs(roots) < 1.0]
        for r in inside:
            lfac = np.convolve(lfac, np.array([1.0, -r]))
    lfac = np.real(lfac)
    lfac = lfac / lfac.sum()
    binom = np.array([math.comb(N, k) for k in range(N + 1)], dtype=float) / 2.0**N
    h = np.convolve(binom, lfac) * math.sqrt(2.0)
    # orientation matching the classical D4 listing
    if h[0] < h[-1] and N > 1:
        h = h[::-1]
    return h


class Wavelet:
    """Base class for mother wavelets.

    Subclasses provide ``fourier`` (complex values allowed) and ``time``.
    ``alpha`` is the low-frequency exponent: ``|Psi(lam)| ~ C_psi0 |lam|**alpha``.
    """

    name: str = "wavelet"
    alpha: float = 0.0
    vanishing: int | None = None
    vanishes_near_origin: bool = False
    real_fourier: bool = False
    # time window [lo, hi] outside which psi is negligible (None: heavy tail)
    support: tuple[float, float] | None = None

    def fourier(self, lam):
        raise NotImplementedError

    def fourier_abs2(self, lam):
        """``|Psi(lam)|**2``."""
        return np.abs(self.fourier(lam)) ** 2

    def time(self, t):
        """Time-domain values; default is numerical inversion of ``fourier``."""
        return _numerical_inverse(self, np.asarray(t, dtype=float))

    @property
    def key(self) -> tuple:
        return (self.name,) + tuple(self.params().values())

    def params(self) -> dict:
        return {}

    def to_config(self) -> dict:
        return {"name": self.name, **self.params()}

    def c_psi0(self) -> float:
        """``C_Psi(0) = lim |Psi(lam)| / lam**alpha`` as ``lam -> 0+``."""
        if self.vanishes_near_origin:
            return 0.0
        lam = 1e-6
        return float(np.sqrt(self.fourier_abs2(lam)) / lam**self.alpha)

    def l2_norm_sq(self) -> float:
        """``||Psi||^2_{L2} = int |Psi(lam)|^2 dlam`` over the real line."""
        from .spectra import integrate_half_line

        def g(lam):
            return np.abs(self.fourier(lam)) ** 2 + np.abs(self.fourier(-lam)) ** 2

        return integrate_half_line(g, exponent=2 * min(self.alpha, 8.0), scale=1.0)

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"

    def __eq__(self, other):
        return isinstance(other, Wavelet) and self.key == other.key

    def __hash__(self):
        return hash(self.key)


class Daubechies(Wavelet):
    """Daubechies wavelet with ``K`` taps; ``alpha = K/2`` vanishing moments."""

    name = "daubechies"
    levels = 12

    def __init__(self, K: int = 4):
        self.K = int(K)
        self.h = daubechies_taps(self.K)
        self.g = np.array([(-1) ** k * self.h[self.K - 1 - k] for k in range(self.K)])
        self.alpha = self.K / 2.0
        self.vanishing = self.K // 2
        self.support = (0.0, float(self.K - 1))
        # center of mass of the low-pass filter; factored out of the product
        self._center = float(np.dot(np.arange(self.K), self.h) / self.h.sum())

    def params(self) -> dict:
        return {"K": self.K}

    def _m0_centered(self, w):
        z = np.exp(-1j * w)
        acc = np.zeros_like(z)
        for hk in self.h[::-1]:
            acc = acc * z + hk
        return acc / math.sqrt(2.0) * np.exp(1j * w * self._center)

    def _m1(self, w):
        z = np.exp(-1j * w)
        acc = np.zeros_like(z)
        for gk in self.g[::-1]:
            acc = acc * z + gk
        return acc / math.sqrt(2.0)

    def scaling_fourier(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = np.exp(-1j * lam * self._center)
        lmax = float(np.max(np.abs(lam))) if lam.size else 0.0
        nfac = int(np.ceil(np.log2(max(lmax, 1.0)))) + 30
        w = lam / 2.0
        for _ in range(nfac):
            out = out * self._m0_centered(w)
            w = w / 2.0
        return out

    def fourier(self, lam):
        lam = np.asarray(lam, dtype=float)
        return self._m1(lam / 2.0) * self.scaling_fourier(lam / 2.0)

    def _m0_abs2(self, c2, s2):
        # |m0(w)|^2 = cos^{2N}(w/2) sum_{k<N} binom(N-1+k, k) sin^{2k}(w/2),
        # taking c2 = cos^2(w/2) and s2 = sin^2(w/2) separately to avoid cancellation
        N = self.K // 2
        acc = np.zeros_like(s2)
        for k in range(N - 1, -1, -1):
            acc = acc * s2 + math.comb(N - 1 + k, k)
        return c2**N * acc

    def fourier_abs2(self, lam):
        lam = np.abs(np.asarray(lam, dtype=float))
        # |m1(lam/2)|^2 = |m0(lam/2 + pi)|^2: cos and sin swap roles
        q = lam / 4.0
        out = self._m0_abs2(np.sin(q) ** 2, np.cos(q) ** 2)
        lmax = float(np.max(lam)) if lam.size else 0.0
        # 1 - |m0(w)|^2 = O(w^{2N}); stop once the factors equal 1 to double precision
        nfac = int(np.ceil(np.log2(max(lmax, 1.0)))) + int(np.ceil(60.0 / self.K)) + 4
        q = lam / 8.0  # half-angle of the first factor m0(lam / 4)
        c = np.cos(q)
        s2 = np.sin(q) ** 2
        for _ in range(nfac):
            c2 = c * c
            out = out * self._m0_abs2(c2, s2)
            q = q / 2.0
            # half-angle step: exact recursion once the angle is below pi/2, trig above
            neg = q > 0.5 * math.pi
            c2h = 0.5 * (1.0 + c)
            with np.errstate(divide="ignore", invalid="ignore"):
                s2 = np.where(c2h > 0, s2 / (4.0 * c2h), 1.0)
            c = np.sqrt(c2h)
            if neg.any():
                qn = q[neg]
                c[neg] = np.cos(qn)
                s2[neg] = np.sin(qn) ** 2
        return out

    @cached_property
    def _cascade(self):
        """phi and psi on the dyadic grid of step 2**-levels over [0, K-1]."""
        K, h = self.K, self.h
        # phi at integers: eigenvector of M[i, j] = sqrt2 h[2i - j]
        M = np.zeros((K, K))
        for i in range(K):
            for j in range(K):
                k = 2 * i - j
                if 0 <= k < K:
                    M[i, j] = math.sqrt(2.0) * h[k]
        vals, vecs = np.linalg.eig(M)
        v = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
        v = v / v.sum()
        phi = v  # values at 0..K-1 (grid step 1)
        L = self.levels
        for m in range(1, L + 1):
            # grid step 2**-m: phi(i / 2^m) = sqrt2 sum_k h_k phi_old[i - k 2^(m-1)]
            n_new = (K - 1) * 2**m + 1
            idx = np.arange(n_new)
            new = np.zeros(n_new)
            for k in range(K):
                o = idx - k * 2 ** (m - 1)
                ok = (o >= 0) & (o < phi.size)
                new[ok] += h[k] * phi[o[ok]]
            phi = math.sqrt(2.0) * new
        # psi(i / 2^L) = sqrt2 sum_k g_k phi[2i - k 2^L]
        n_psi = (K - 1) * 2**L + 1
        idx = np.arange(n_psi)
        psi = np.zeros(n_psi)
        for k in range(K):
            o = 2 * idx - k * 2**L
            ok = (o >= 0) & (o < phi.size)
            psi[ok] += math.sqrt(2.0) * self.g[k] * phi[o[ok]]
        t_psi = idx / 2.0**L
        return t_psi, psi

    def time(self, t):
        t = np.asarray(t, dtype=float)
        tg, psi = self._cascade
        return np.interp(t, tg, psi, left=0.0, right=0.0)


class MexicanHat(Wavelet):
    """Mexican hat (second derivative of a Gaussian), L2-normalized; alpha = 2."""

    name = "mexican-hat"
    alpha = 2.0
    vanishing = 2
    real_fourier = True
    support = (-12.0, 12.0)
    _A = 2.0 / (math.sqrt(3.0) * math.pi**0.25)

    def fourier(self, lam):
        lam = np.asarray(lam, dtype=float)
        return self._A * math.sqrt(2 * math.pi) * lam**2 * np.exp(-(lam**2) / 2.0)

    def time(self, t):
        t = np.asarray(t, dtype=float)
        return self._A * (1.0 - t**2) * np.exp(-(t**2) / 2.0)


class RealMorlet(Wavelet):
    """Odd-phase real Morlet ``c sin(w0 t) exp(-t^2/2)``; alpha = 1, one vanishing moment.

    The cosine phase has an even transform vanishing like ``lam**2``; only
    the sine phase realizes ``alpha = 1``.
    """

    name = "real-morlet"
    alpha = 1.0
    vanishing = 1

    def __init__(self, w0: float = 5.0):
        self.w0 = float(w0)
        self.support = (-14.0, 14.0)
        # L2 normalization of c sin(w0 t) e^{-t^2/2}
        self._c = 1.0 / math.sqrt(0.5 * math.sqrt(math.pi) * (1 - math.exp(-self.w0**2)))

    def params(self) -> dict:
        return {"w0": self.w0}

    def fourier(self, lam):
        lam = np.asarray(lam, dtype=float)
        # -i c sqrt(2pi) exp(-(lam^2 + w0^2)/2) sinh(w0 lam), written stably
        a = -((lam - self.w0) ** 2) / 2.0
        b = -((lam + self.w0) ** 2) / 2.0
        val = 0.5 * (np.exp(a) - np.exp(b))
        return -1j * self._c * math.sqrt(2 * math.pi) * val

    def c_psi0(self) -> float:
        return self._c * math.sqrt(2 * math.pi) * math.exp(-self.w0**2 / 2.0) * self.w0

    def time(self, t):
        t = np.asarray(t, dtype=float)
        return self._c * np.sin(self.w0 * t) * np.exp(-(t**2) / 2.0)


class Cauchy(Wavelet):
    """Real part of the Cauchy wavelet, even-extended: ``Psi(lam) = |lam|^alpha e^{-|lam|}``."""

    name = "cauchy"
    real_fourier = True

    def __init__(self, alpha: float = 0.05):
        if not alpha > 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        self.alpha = float(alpha)
        self.support = None

    def params(self) -> dict:
        return {"alpha": self.alpha}

    def fourier(self, lam):
        lam = np.abs(np.asarray(lam, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = lam**self.alpha * np.exp(-lam)
        return np.where(lam == 0, 0.0, out)

    def c_psi0(self) -> float:
        return 1.0

    def time(self, t):
        t = np.asarray(t, dtype=float)
        a = self.alpha
        return (
            special.gamma(a + 1)
            / math.pi
            * np.cos((a + 1) * np.arctan(t))
            * (1 + t**2) ** (-(a + 1) / 2.0)
        )


class Morse(Wavelet):
    """Real part of the generalized Morse wavelet, peak-normalized to 1."""

    name = "morse"
    real_fourier = True

    def __init__(self, alpha: float = 0.5, gamma: float = 3.0):
        if not alpha > 0 or not gamma > 0:
            raise ValueError("Morse wavelet needs alpha > 0 and gamma > 0")
        self.alpha = float(alpha)
        self.gamma = float(gamma)
        self.support = None
        # analytic normalization K = 2 (e gamma / alpha)^(alpha/gamma); real part halves it
        self._K = 2.0 * (math.e * self.gamma / self.alpha) ** (self.alpha / self.gamma)

    def params(self) -> dict:
        return {"alpha": self.alpha, "gamma": self.gamma}

    def fourier(self, lam):
        lam = np.abs(np.asarray(lam, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 0.5 * self._K * lam**self.alpha * np.exp(-(lam**self.gamma))
        return np.where(lam == 0, 0.0, out)

    def c_psi0(self) -> float:
        return 0.5 * self._K


def _meyer_nu(x):
    x = np.clip(x, 0.0, 1.0)
    return x**4 * (35 - 84 * x + 70 * x**2 - 20 * x**3)


class Meyer(Wavelet):
    """Meyer wavelet (zero phase); its transform vanishes on ``|lam| < 2pi/3``."""

    name = "meyer"
    alpha = math.inf
    vanishes_near_origin = True
    real_fourier = True
    support = (-40.0, 40.0)

    def fourier(self, lam):
        w = np.abs(np.asarray(lam, dtype=float))
        out = np.zeros_like(w)
        a = (w >= 2 * np.pi / 3) & (w <= 4 * np.pi / 3)
        b = (w > 4 * np.pi / 3) & (w <= 8 * np.pi / 3)
        out[a] = np.sin(np.pi / 2 * _meyer_nu(3 * w[a] / (2 * np.pi) - 1))
        out[b] = np.cos(np.pi / 2 * _meyer_nu(3 * w[b] / (4 * np.pi) - 1))
        return out

    @cached_property
    def _grid(self):
        # band-limited, so an inverse DFT on a fine grid is exact up to the (negligible) wrap-around
        n, dt = 2**18, 1.0 / 64
        lam = 2 * np.pi * np.fft.rfftfreq(n, dt)
        psi = np.fft.fftshift(np.fft.irfft(self.fourier(lam), n)) / dt
        return (np.arange(n) - n // 2) * dt, psi

    def time(self, t):
        tg, psi = self._grid
        return np.interp(np.asarray(t, dtype=float), tg, psi, left=0.0, right=0.0)

    def c_psi0(self) -> float:
        return 0.0


def make_wavelet(name: str, **params) -> Wavelet:
    """Build a wavelet from its config name.

    Accepted names: ``daubechies-K`` (or ``daubechies`` with ``K=``),
    ``real-morlet``, ``mexican-hat``, ``cauchy``, ``morse``, ``meyer``.
    """
    key = name.lower()
    if key.startswith("daubechies"):
        K = params.pop("K", None)
        if K is None:
            tail = key.split("-", 1)[1] if "-" in key else "4"
            K = int(tail)
        if params:
            raise ValueError(f"unexpected parameters for {name}: {sorted(params)}")
        if K < 2 or K > 20 or K % 2:
            raise ValueError(f"Daubechies-K needs even K in 2..20, got {K}")
        return Daubechies(int(K))
    builders: dict[str, Callable[..., Wavelet]] = {
        "real-morlet": RealMorlet,
        "mexican-hat": MexicanHat,
        "cauchy": Cauchy,
        "morse": Morse,
        "meyer": Meyer,
    }
    if key not in builders:
        raise ValueError(f"unknown wavelet {name!r}")
    try:
        return builders[key](**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name}: {exc}") from None


def fourier_eval(wavelet: Wavelet, lam):
    """``Psi(lam)`` for any wavelet."""
    return wavelet.fourier(lam)


def _numerical_inverse(wavelet: Wavelet, t: np.ndarray) -> np.ndarray:
    from .spectra import half_line_rule

    lam, w = half_line_rule(
        exponent=min(wavelet.alpha, 4.0) if math.isfinite(wavelet.alpha) else 4.0,
        scale=1.0,
        lam_max=60.0,
        t_max=float(np.max(np.abs(t))) if t.size else 0.0,
    )
    psi = wavelet.fourier(lam)
    # psi(t) = (1/pi) int_0^inf Re[Psi(lam) e^{i lam t}] dlam for real psi
    out = np.empty(t.shape)
    flat = t.ravel()
    res = np.empty(flat.size)
    for s in range(0, flat.size, 512):
        tt = flat[s:s + 512]
        ph = np.exp(1j * np.outer(tt, lam))
        res[s:s + 512] = np.real(ph @ (w * psi)) / np.pi
    out[...] = res.reshape(t.shape)
    return out


def sample_filter(wavelet: Wavelet, j: int, dt: float, half_support: float) -> tuple[np.ndarray, np.ndarray]:
    """Taps of ``psi_j(t) = 2**-j psi(t / 2**j)`` on ``t = k dt``, ``|t| <= half_support``.

    Raises ``ValueError`` if the L1 mass outside the window exceeds 1e-6 of
    the total, reporting the half-support needed.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    scale = 2.0**j
    M = int(round(half_support / dt))
    t = np.arange(-M, M + 1) * dt
    taps = wavelet.time(t / scale) / scale
    # tail mass check on a wider window
    need = _required_half_support(wavelet, j, dt)
    if half_support < need:
        raise ValueError(
            f"half-support {half_support} too small for {wavelet!r} at j={j}: need >= {need:.6g}"
        )
    return t, taps


def _required_half_support(wavelet: Wavelet, j: int, dt: float, tol: float = 1e-6) -> float:
    scale = 2.0**j
    if wavelet.support is not None:
        lo, hi = wavelet.support
        wide = max(abs(lo), abs(hi)) * 2.0
    else:
        wide = 2.0**14
    u = np.linspace(-wide, wide, 400001)
    a = np.abs(wavelet.time(u))
    cum = np.cumsum(a) * (u[1] - u[0])
    total = cum[-1]
    # smallest symmetric window [-h, h] (in units of psi) leaving < tol mass outside
    pos = u[u >= 0]
    left = np.interp(-pos, u, cum)
    right = cum[-1] - np.interp(pos, u, cum)
    outside = (left + right) / total
    idx = np.argmax(outside < tol)
    h = pos[idx] if outside[idx] < tol else wide
    return float(h * scale + dt)


@dataclass(frozen=True)
class Father:
    """Low-pass (father) wavelet given by its transform ``Phi`` with ``Phi(0) = 1``."""

    name: str = "father"

    def fourier(self, lam):
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianFather(Father):
    width: float = 1.0
    name: str = "gaussian"

    def fourier(self, lam):
        lam = np.asarray(lam, dtype=float)
        return np.exp(-0.5 * (self.width * lam) ** 2)


@dataclass(frozen=True)
class ComplementFather(Father):
    """``|Phi(mu)|^2 = 1 - sum_{k<0} |c Psi(2^k mu)|^2`` (tight low-pass complement)."""

    mother: Wavelet = None
    gain: float = 1.0
    name: str = "complement"

    def fourier(self, lam):
        mu = np.abs(np.asarray(lam, dtype=float))
        acc = np.zeros_like(mu)
        for k in range(-1, -80, -1):
            acc += np.abs(self.gain * self.mother.fourier(2.0**k * mu)) ** 2
        return np.sqrt(np.clip(1.0 - acc, 0.0, None))


@dataclass(frozen=True)
class MeyerFather(Father):
    name: str = "meyer"

    def fourier(self, lam):
        # dilated one octave so that |Phi(2 lam)|^2 + |Psi(lam)|^2 = |Phi(lam)|^2 with the Meyer mother
        w = 0.5 * np.abs(np.asarray(lam, dtype=float))
        out = np.where(w <= 2 * np.pi / 3, 1.0, 0.0)
        b = (w > 2 * np.pi / 3) & (w <= 4 * np.pi / 3)
        out = np.where(b, np.cos(np.pi / 2 * _meyer_nu(3 * w / (2 * np.pi) - 1)), out)
        return out


def _octave_sup(mother: Wavelet, gain: float = 1.0) -> float:
    """sup over lam of sum_{j in Z} |gain Psi(2^j lam)|^2 (one octave suffices)."""
    lam = 2.0 ** np.linspace(0.0, 1.0, 2049)
    acc = np.zeros_like(lam)
    for j in range(-60, 61):
        acc += np.abs(gain * mother.fourier(2.0**j * lam)) ** 2
    return float(acc.max())


@dataclass
class Filterbank:
    """Mother wavelet at scales ``j_min <= j < J`` plus a father at scale ``J``.

    ``gain`` multiplies every mother filter (Littlewood-Paley normalization).
    """

    mother: Wavelet
    father: Father
    J: int
    j_min: int = 1
    dt: float = 1.0
    gain: float = 1.0

    @property
    def scales(self) -> list[int]:
        return list(range(self.j_min, self.J))

    def psi_hat(self, j: int, lam):
        return self.gain * self.mother.fourier(2.0**j * np.asarray(lam, dtype=float))

    def phi_hat(self, lam):
        return self.father.fourier(2.0**self.J * np.asarray(lam, dtype=float))

    def lp_sum(self, lam):
        lam = np.asarray(lam, dtype=float)
        acc = np.abs(self.phi_hat(lam)) ** 2
        for j in self.scales:
            acc = acc + np.abs(self.psi_hat(j, lam)) ** 2
        return acc

    @classmethod
    def normalized(cls, mother: Wavelet, J: int, j_min: int = 1, dt: float = 1.0,
                   father: str = "gaussian") -> "Filterbank":
        """Bank whose Littlewood-Paley sum stays below 1.

        The mother is rescaled by ``1/sqrt(sup sum_j |Psi(2^j lam)|^2)``; a
        Gaussian father is widened until the full dyadic bank satisfies the
        bound, or the exact complement is used (``father="complement"``).
        """
        sup = _octave_sup(mother)
        gain = 1.0 / math.sqrt(sup) if sup > 1.0 else 1.0
        if father == "complement":
            fa: Father = ComplementFather(mother=mother, gain=gain)
        elif father == "meyer":
            fa = MeyerFather()
        elif father == "gaussian":
            fa = GaussianFather(width=_gaussian_father_width(mother, gain))
        else:
            raise ValueError(f"unknown father {father!r}")
        return cls(mother=mother, father=fa, J=J, j_min=j_min, dt=dt, gain=gain)


def _gaussian_father_width(mother: Wavelet, gain: float) -> float:
    mu = np.concatenate([2.0 ** np.linspace(-12, 6, 4000)])
    acc = np.zeros_like(mu)
    for k in range(-1, -80, -1):
        acc += np.abs(gain * mother.fourier(2.0**k * mu)) ** 2
    room = 1.0 - acc

    def ok(s):
        return np.all(np.exp(-((s * mu) ** 2)) <= room + 1e-12)

    lo, hi = 1e-3, 1.0
    while not ok(hi):
        hi *= 2.0
        if hi > 1e6:
            raise ValueError(f"no Gaussian father keeps the LP sum below 1 for {mother!r}")
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class LittlewoodPaleyReport:
    sup: float
    argmax: float
    tolerance: float
    passed: bool
    rescale: float


def littlewood_paley_report(bank: Filterbank, lam=None, tol: float = 1e-3) -> LittlewoodPaleyReport:
    """Sup of the Littlewood-Paley sum over ``lam`` (default log grid up to Nyquist)."""
    if lam is None:
        lo = 2.0 ** (-bank.J - 2)
        lam = np.geomspace(lo, np.pi / bank.dt, 20000)
    lam = np.asarray(lam, dtype=float)
    s = bank.lp_sum(lam)
    i = int(np.argmax(s))
    sup = float(s[i])
    return LittlewoodPaleyReport(
        sup=sup,
        argmax=float(lam[i]),
        tolerance=tol,
        passed=sup <= 1.0 + tol,
        rescale=1.0 if sup <= 1.0 else 1.0 / math.sqrt(sup),
    )


def vanishing_moments(wavelet: Wavelet, tol: float = 1e-6, max_order: int = 12) -> int:
    """Number of leading vanishing moments of ``psi``.

    Moments are normalized by ``int |t|^l |psi(t)| dt`` so ``tol`` is relative.
    """
    if wavelet.support is None:
        raise ValueError(f"{wavelet!r} has a heavy tail; moments are not defined")
    lo, hi = wavelet.support
    if isinstance(wavelet, Daubechies):
        t, psi = wavelet._cascade
        dt = t[1] - t[0]
    else:
        t = np.linspace(lo, hi, 200001)
        dt = t[1] - t[0]
        psi = wavelet.time(t)
    center = 0.5 * (lo + hi)
    u = t - center
    for n in range(max_order + 1):
        m = np.sum(u**n * psi) * dt
        ref = np.sum(np.abs(u) ** n * np.abs(psi)) * dt
        if abs(m) >= tol * ref:
            return n
    return max_order + 1
