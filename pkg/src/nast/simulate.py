"""Sample paths of stationary Gaussian processes and fractional Brownian motion.

Randomness comes from ``numpy`` PCG64 generators seeded by the pair
``(seed, stream)``, so every path can be regenerated bit-identically from
its metadata.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .spectra import SpectralModel, binned_masses, model_from_config

__all__ = [
    "SamplePath",
    "make_rng",
    "SpectralSynthesizer",
    "gaussian_stationary",
    "FBMSynthesizer",
    "fbm",
    "warp_path",
    "save_path",
    "load_path",
]


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """PCG64 generator for the pair ``(seed, stream)``."""
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative integers")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream)])))


def _check_pow2(n: int) -> None:
    if n < 2 or n & (n - 1):
        raise ValueError(f"path length must be a power of two, got {n}")


@dataclass
class SamplePath:
    """Uniformly sampled realization with the metadata needed to regenerate it."""

    values: np.ndarray
    dt: float
    seed: int
    stream: int
    model: dict
    method: str
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.values.shape[-1])

    def metadata(self) -> dict:
        return {"n": self.n, "dt": self.dt, "seed": self.seed, "stream": self.stream,
                "model": self.model, "method": self.method, **self.extra}

    def regenerate(self) -> "SamplePath":
        """Rebuild the path from its metadata."""
        if self.method == "spectral-synthesis":
            m = model_from_config(self.model)
            return gaussian_stationary(m, self.n, self.dt, self.seed, self.stream)
        if self.method == "circulant-embedding":
            return fbm(self.model["H"], self.n, self.dt, self.seed, self.stream,
                       part=self.extra.get("part", 0))
        raise ValueError(f"cannot regenerate a path made by {self.method!r}")


class SpectralSynthesizer:
    """Reusable spectral synthesis for one ``(model, n, dt)``.

    Each DFT bin gets an independent complex Gaussian amplitude whose
    variance is the bin's folded spectral mass; the zero-frequency bin is 0
    so paths have mean zero, and the Nyquist bin is real.  The resulting
    periodic process has covariance ``2 sum_k F_k cos(lam_k t)``.
    """

    def __init__(self, model: SpectralModel, n: int, dt: float = 1.0):
        if not model.integrable:
            raise ValueError(f"{model.kind} density is not integrable; use fbm() or filter first")
        _check_pow2(n)
        self.model, self.n, self.dt = model, n, dt
        F = binned_masses(model, n, dt)
        F[0] = 0.0
        self.masses = F
        scale = np.sqrt(F / 2.0)
        scale[-1] = math.sqrt(F[-1])
        self._scale = scale * n

    @property
    def variance(self) -> float:
        """Exact variance of the synthesized (periodic) process."""
        return float(2.0 * self.masses[1:-1].sum() + self.masses[-1])

    def sample_values(self, rng: np.random.Generator) -> np.ndarray:
        K = self.n // 2
        z = rng.standard_normal(2 * (K + 1)).view(np.complex128)
        z[-1] = z[-1].real  # real Nyquist amplitude, variance F[n/2]
        return np.fft.irfft(z * self._scale, self.n)

    def sample(self, seed: int, stream: int = 0) -> SamplePath:
        vals = self.sample_values(make_rng(seed, stream))
        return SamplePath(vals, self.dt, seed, stream, self.model.to_config(), "spectral-synthesis")


def gaussian_stationary(model: SpectralModel, n: int, dt: float = 1.0, seed: int = 0,
                        stream: int = 0) -> SamplePath:
    """Zero-mean stationary Gaussian path with spectral density ``model``."""
    return SpectralSynthesizer(model, n, dt).sample(seed, stream)


class FBMSynthesizer:
    """Exact fractional Brownian motion on a grid by circulant embedding of
    fractional Gaussian noise; ``Var(B(1)) = 1`` and ``B(0) = 0``.

    One FFT yields two independent paths (real and imaginary parts),
    addressed by ``part`` in {0, 1}.
    """

    def __init__(self, H: float, n: int, dt: float = 1.0):
        if not 0 < H < 1:
            raise ValueError(f"Hurst index must lie in (0, 1), got {H}")
        _check_pow2(n)
        self.H, self.n, self.dt = float(H), n, dt
        k = np.arange(n + 1, dtype=float)
        gam = 0.5 * (np.abs(k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))
        gam *= dt ** (2 * H)
        row = np.concatenate([gam, gam[-2:0:-1]])
        eig = np.fft.fft(row).real
        lo = eig.min()
        if lo < -1e-10 * eig.max():
            raise ValueError(f"circulant embedding is not positive definite (min eigenvalue {lo:.3g})")
        if lo < 0:
            warnings.warn(f"clipping circulant eigenvalues at 0 (min {lo:.3g})", RuntimeWarning)
        self._amp = np.sqrt(np.clip(eig, 0.0, None) / (2 * n))
        self.min_eigenvalue = float(lo)

    def sample_pair(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        m = 2 * self.n
        w = rng.standard_normal(2 * m).view(np.complex128) * self._amp
        y = np.fft.fft(w)[: self.n]
        out = []
        for inc in (y.real, y.imag):
            b = np.empty(self.n)
            b[0] = 0.0
            np.cumsum(inc[:-1], out=b[1:])
            out.append(b)
        return out[0], out[1]

    def sample(self, seed: int, stream: int = 0, part: int = 0) -> SamplePath:
        pair = self.sample_pair(make_rng(seed, stream))
        return SamplePath(pair[part], self.dt, seed, stream, {"kind": "generalized-fbm", "H": self.H},
                          "circulant-embedding", {"part": int(part)})


def fbm(H: float, n: int, dt: float = 1.0, seed: int = 0, stream: int = 0, part: int = 0) -> SamplePath:
    """Fractional Brownian motion path with ``Var(B(t)) = t**(2H)``."""
    return FBMSynthesizer(H, n, dt).sample(seed, stream, part)


def warp_path(path: SamplePath | np.ndarray, tau, dt: float | None = None):
    """Deformed path ``X(t_k - tau(t_k))`` by periodic 4-point cubic interpolation.

    ``tau`` holds deformation samples in time units (or a scalar).  Requires
    ``max |tau'| <= 1/2``.
    """
    if isinstance(path, SamplePath):
        x, step = path.values, path.dt
    else:
        x, step = np.asarray(path, dtype=float), (1.0 if dt is None else dt)
    n = x.shape[-1]
    tau = np.broadcast_to(np.asarray(tau, dtype=float), (n,))
    if n > 1:
        slope = np.max(np.abs(np.diff(np.append(tau, tau[0])))) / step
        if slope > 0.5 + 1e-12:
            raise ValueError(f"deformation slope {slope:.4g} exceeds 1/2")
    pos = np.arange(n) - tau / step
    base = np.floor(pos)
    u = pos - base
    i0 = base.astype(np.int64)
    # Lagrange weights for nodes -1, 0, 1, 2
    w = (
        -u * (u - 1) * (u - 2) / 6.0,
        (u + 1) * (u - 1) * (u - 2) / 2.0,
        -(u + 1) * u * (u - 2) / 2.0,
        (u + 1) * u * (u - 1) / 6.0,
    )
    out = np.zeros_like(x)
    for off, wk in zip((-1, 0, 1, 2), w):
        out = out + wk * x[..., (i0 + off) % n]
    if isinstance(path, SamplePath):
        return SamplePath(out, path.dt, path.seed, path.stream, path.model, path.method,
                          {**path.extra, "warped": True})
    return out


def save_path(path: SamplePath, file) -> Path:
    """Write values as one column of text and metadata to ``<file>.json``."""
    file = Path(file)
    file.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(file, path.values, fmt="%.17g")
    file.with_suffix(file.suffix + ".json").write_text(json.dumps(path.metadata(), indent=2, sort_keys=True))
    return file


def load_path(file) -> SamplePath:
    file = Path(file)
    meta = json.loads(file.with_suffix(file.suffix + ".json").read_text())
    vals = np.loadtxt(file, ndmin=1)
    extra = {k: v for k, v in meta.items() if k not in {"n", "dt", "seed", "stream", "model", "method"}}
    return SamplePath(vals, meta["dt"], meta["seed"], meta["stream"], meta["model"], meta["method"], extra)
