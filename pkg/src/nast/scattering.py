"""Neural activation scattering: wavelet cascades with pointwise activations.

Paths are treated as periodic.  Every convolution is a circular product in
the Fourier domain with the exact transfer function ``Psi(2**j lam_k)`` at
the DFT frequencies ``lam_k = 2 pi k / (n dt)``; this keeps heavy-tailed
wavelets (Cauchy) exact where truncated taps would not be.
"""

from __future__ import annotations

import itertools
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import fft as sfft
from scipy.special import expit

from .wavelets import Filterbank, Wavelet, _required_half_support

__all__ = [
    "Activation",
    "get_activation",
    "ACTIVATIONS",
    "multiplier",
    "guard_margin",
    "cwt",
    "nast",
    "ScatteringTree",
    "full_tree",
    "EnergyLedger",
    "energy_ledger",
    "energy_ledger_from_arrays",
    "jackknife_ratio",
    "normalized_second_moment",
    "deformation_distance",
    "deformation_strength",
]


# --------------------------------------------------------------------------
# activations


@dataclass(frozen=True)
class Activation:
    """Pointwise nonlinearity with the regularity flags the limit theory needs.

    ``homogeneity`` is the exponent ``chi`` with ``A(c x) = c**chi A(x)`` for
    ``c > 0`` (None if not homogeneous).  ``kinks`` lists points where ``A``
    is not smooth; quadrature splits there.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    lipschitz: float
    value_at_zero: float
    derivative_at_zero: float | None = None
    homogeneity: float | None = None
    kinks: tuple[float, ...] = ()

    def __call__(self, x):
        return self.func(x)

    @property
    def differentiable_at_zero(self) -> bool:
        return self.derivative_at_zero is not None

    @property
    def lemma1_eligible(self) -> bool:
        return self.lipschitz <= 1.0 and self.value_at_zero == 0.0

    def verify_lipschitz(self, lo: float = -20.0, hi: float = 20.0, n: int = 200001) -> float:
        """Largest difference quotient on a dense grid."""
        x = np.linspace(lo, hi, n)
        y = self.func(x)
        return float(np.max(np.abs(np.diff(y)) / np.diff(x)))

    @classmethod
    def from_table(cls, x, y, name: str = "custom-table") -> "Activation":
        """Piecewise-linear activation through the points ``(x, y)``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(np.diff(x) <= 0):
            raise ValueError("activation table abscissae must increase")
        slopes = np.diff(y) / np.diff(x)
        lo_s, hi_s = slopes[0], slopes[-1]

        def f(u):
            u = np.asarray(u, dtype=float)
            out = np.interp(u, x, y)
            out = np.where(u < x[0], y[0] + lo_s * (u - x[0]), out)
            return np.where(u > x[-1], y[-1] + hi_s * (u - x[-1]), out)

        a0 = float(f(0.0))
        inner = (x > x[0]) & (x < x[-1])
        return cls(name, f, float(np.max(np.abs(slopes))), a0, None, None, tuple(x[inner]))


def _modulus(x):
    return np.abs(x)


def _relu(x):
    return np.maximum(x, 0.0)


def _shifted_sigmoid(x):
    return expit(x) - 0.5


def _identity(x):
    return np.asarray(x, dtype=float)


ACTIVATIONS: dict[str, Activation] = {
    "modulus": Activation("modulus", _modulus, 1.0, 0.0, None, 1.0, (0.0,)),
    "relu": Activation("relu", _relu, 1.0, 0.0, None, 1.0, (0.0,)),
    "tanh": Activation("tanh", np.tanh, 1.0, 0.0, 1.0, None, ()),
    "shifted-sigmoid": Activation("shifted-sigmoid", _shifted_sigmoid, 0.25, 0.0, 0.25, None, ()),
    "identity": Activation("identity", _identity, 1.0, 0.0, 1.0, 1.0, ()),
}


def get_activation(name: str | Activation) -> Activation:
    if isinstance(name, Activation):
        return name
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; choose from {sorted(ACTIVATIONS)}") from None


# --------------------------------------------------------------------------
# wavelet transform


_CACHE: "OrderedDict[tuple, np.ndarray]" = OrderedDict()
_CACHE_SIZE = 24


def multiplier(filt, j: float | None, n: int, dt: float = 1.0, gain: float = 1.0) -> np.ndarray:
    """Transfer function on the ``rfft`` grid of a length-``n`` path.

    ``filt`` is a mother ``Wavelet`` (evaluated at ``2**j lam``) or any
    object with a ``fourier`` method (a father, evaluated at ``2**j lam``).
    Real-valued transforms are stored as float64.
    """
    key = (getattr(filt, "key", repr(filt)), j, n, dt, gain)
    hit = _CACHE.get(key)
    if hit is not None:
        _CACHE.move_to_end(key)
        return hit
    lam = 2.0 * np.pi * np.arange(n // 2 + 1) / (n * dt)
    arg = lam if j is None else 2.0**j * lam
    vals = np.asarray(filt.fourier(arg))
    if getattr(filt, "real_fourier", False) or not np.iscomplexobj(vals):
        vals = np.real(vals).astype(float)
    vals = gain * vals
    if isinstance(filt, Wavelet):
        vals[0] = 0.0
    _CACHE[key] = vals
    if len(_CACHE) > _CACHE_SIZE:
        _CACHE.popitem(last=False)
    return vals


def guard_margin(wavelet: Wavelet, scales: Iterable[float], dt: float = 1.0) -> int:
    """Samples discarded at each end after cascading filters at ``scales``.

    Each stage contributes ``max(8, h) 2**j / dt`` where ``h`` is the
    wavelet's half-support leaving < 1e-6 of its L1 mass outside.
    """
    h = 8.0
    if wavelet.support is not None:
        h = max(8.0, _required_half_support(wavelet, 0, 0.0))
    return int(sum(math.ceil(h * 2.0**j / dt) for j in scales))


def cwt(x, wavelet: Wavelet, j: float, dt: float = 1.0, gain: float = 1.0, workers: int | None = None):
    """Circular convolution ``x * psi_j`` along the last axis."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if 16.0 * 2.0**j > n * dt:
        raise ValueError(f"scale 2^{j} too large for a signal of duration {n * dt}")
    m = multiplier(wavelet, j, n, dt, gain)
    return sfft.irfft(sfft.rfft(x, workers=workers) * m, n, workers=workers)


def lowpass(x, father, J: float, dt: float = 1.0, workers: int | None = None):
    """Circular convolution with the father wavelet at scale ``J``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    m = multiplier(father, J, n, dt)
    return sfft.irfft(sfft.rfft(x, workers=workers) * m, n, workers=workers)


def nast(x, scales: Sequence[float], activations: Sequence, wavelet: Wavelet, dt: float = 1.0,
         gain: float = 1.0):
    """``A_n(...A_2(A_1(x * psi_j1) * psi_j2)... * psi_jn)`` on the full periodic path."""
    if len(scales) == 0:
        raise ValueError("at least one scale is required")
    if len(activations) != len(scales):
        raise ValueError("need one activation per scale")
    y = np.asarray(x, dtype=float)
    for j, a in zip(scales, activations):
        y = get_activation(a)(cwt(y, wavelet, j, dt, gain))
    return y


# --------------------------------------------------------------------------
# trees


@dataclass
class ScatteringTree:
    """Scattering outputs keyed by scale path; series are guard-trimmed interiors."""

    U: dict[tuple, np.ndarray]
    S: dict[tuple, np.ndarray]
    order: int
    scales: list
    activations: list
    guard: int

    def nodes(self, m: int | None = None) -> list[tuple]:
        return [k for k in self.U if m is None or len(k) == m]

    def export_rows(self) -> list[tuple]:
        """Rows ``(path-key, order, pooled-value, interior-mean, interior-var)``."""
        rows = []
        for k, u in self.U.items():
            s = self.S.get(k)
            pooled = float(np.mean(s)) if s is not None else float("nan")
            rows.append(("-".join(map(str, k)) or "root", len(k), pooled, float(u.mean()), float(u.var())))
        return rows


def full_tree(x, bank: Filterbank, order: int, activations: Sequence, pooled: bool = True,
              increasing_only: bool = False, max_nodes: int = 5000, guard: int | None = None) -> ScatteringTree:
    """All NAST outputs up to ``order`` over the bank's scales.

    ``increasing_only`` keeps paths ``j1 < j2 < ...`` (frequency-decreasing);
    otherwise the full product of scales is used.
    """
    if len(activations) < order:
        raise ValueError("need one activation per order")
    acts = [get_activation(a) for a in activations[:order]]
    scales = bank.scales
    count = 1 + sum(len(scales) ** m for m in range(1, order + 1))
    if count > max_nodes:
        raise ValueError(f"tree would have {count} nodes, above the budget of {max_nodes}")
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if guard is None:
        guard = guard_margin(bank.mother, [max(scales)] * order + [bank.J], bank.dt)
    if 2 * guard >= n:
        raise ValueError(f"guard margin {guard} leaves no interior for length {n}")
    sl = slice(guard, n - guard)

    def pool(u):
        return lowpass(u, bank.father, bank.J, bank.dt)[..., sl]

    U: dict[tuple, np.ndarray] = {(): x[..., sl]}
    S: dict[tuple, np.ndarray] = {}
    if pooled:
        S[()] = pool(x)
    full = {(): x}
    for m in range(1, order + 1):
        nxt = {}
        for key, u in full.items():
            if len(key) != m - 1:
                continue
            uhat = sfft.rfft(u)
            for j in scales:
                if increasing_only and key and j <= key[-1]:
                    continue
                v = acts[m - 1](sfft.irfft(uhat * multiplier(bank.mother, j, n, bank.dt, bank.gain), n))
                nk = key + (j,)
                nxt[nk] = v
                U[nk] = v[..., sl]
                if pooled:
                    S[nk] = pool(v)
        full.update(nxt)
    return ScatteringTree(U=U, S=S, order=order, scales=list(scales),
                          activations=acts, guard=guard)


# --------------------------------------------------------------------------
# energies


@dataclass
class EnergyLedger:
    """Per-order energies (mean power per sample) with standard errors over paths."""

    input_energy: float
    input_se: float
    order_energy: list[float]
    order_se: list[float]
    pooled_energy: list[float]
    pooled_total: float
    pooled_total_se: float
    monotone: bool
    bounded: bool
    diff_z: list[float]
    bound_z: float


def energy_ledger(trees: Sequence[ScatteringTree], z: float = 2.0) -> EnergyLedger:
    """Monte-Carlo check of the energy chain across orders.

    ``order_energy[m] = sum over order-m nodes of E|U|^2`` (order 0 is the
    input).  Monotonicity and the pooled-energy bound are judged on paired
    per-path differences, allowing ``z`` standard errors.
    """
    if len(trees) < 2:
        raise ValueError("need at least two paths for standard errors")
    for t in trees:
        bad = [a.name for a in t.activations if not a.lemma1_eligible]
        if bad:
            raise ValueError(f"activation {bad[0]!r} is not non-expansive with A(0) = 0")
    order = trees[0].order
    E = np.zeros((len(trees), order + 1))
    P = np.zeros((len(trees), order + 1))
    for i, t in enumerate(trees):
        for m in range(order + 1):
            E[i, m] = sum(float(np.mean(t.U[k] ** 2)) for k in t.nodes(m))
            P[i, m] = sum(float(np.mean(t.S[k] ** 2)) for k in t.nodes(m))
    return energy_ledger_from_arrays(E, P, z)


def energy_ledger_from_arrays(E, P, z: float = 2.0) -> EnergyLedger:
    """Ledger from per-path order energies ``E[i, m]`` and pooled energies ``P[i, m]``."""
    E = np.asarray(E, dtype=float)
    P = np.asarray(P, dtype=float)
    if E.shape[0] < 2:
        raise ValueError("need at least two paths for standard errors")
    order = E.shape[1] - 1
    n = E.shape[0]
    mean = E.mean(axis=0)
    se = E.std(axis=0, ddof=1) / math.sqrt(n)
    diffs = E[:, 1:] - E[:, :-1]
    dz = []
    for m in range(order):
        d = diffs[:, m]
        s = d.std(ddof=1) / math.sqrt(n)
        dz.append(float(d.mean() / s) if s > 0 else (0.0 if d.mean() <= 0 else math.inf))
    tot = P.sum(axis=1)
    excess = tot - E[:, 0]
    es = excess.std(ddof=1) / math.sqrt(n)
    bz = float(excess.mean() / es) if es > 0 else (0.0 if excess.mean() <= 0 else math.inf)
    return EnergyLedger(
        input_energy=float(mean[0]), input_se=float(se[0]),
        order_energy=mean.tolist(), order_se=se.tolist(),
        pooled_energy=P.mean(axis=0).tolist(),
        pooled_total=float(tot.mean()), pooled_total_se=float(tot.std(ddof=1) / math.sqrt(n)),
        monotone=all(v <= z for v in dz), bounded=bz <= z, diff_z=dz, bound_z=bz,
    )


# --------------------------------------------------------------------------
# normalized moments


def jackknife_ratio(num, den) -> tuple[float, float]:
    """Ratio of means ``mean(num) / mean(den)`` with delete-one jackknife error."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    k = num.size
    est = num.mean() / den.mean()
    if k < 2:
        return float(est), float("nan")
    loo = (num.sum() - num) / (den.sum() - den)
    se = math.sqrt((k - 1) / k * np.sum((loo - loo.mean()) ** 2))
    return float(est), float(se)


def normalized_second_moment(paths, j1: float, j2: float, wavelet: Wavelet, dt: float = 1.0,
                             guard: int | None = None) -> tuple[float, float]:
    """``E||X*psi_j1| * psi_j2| / E|X*psi_j1|`` pooled over time and paths.

    Returns the estimate and its delete-one-path jackknife standard error.
    """
    X = np.atleast_2d(np.asarray(paths, dtype=float))
    n = X.shape[-1]
    if guard is None:
        guard = guard_margin(wavelet, [j1, j2], dt)
    sl = slice(guard, n - guard)
    u1 = np.abs(cwt(X, wavelet, j1, dt))
    den = np.abs(u1[:, sl]).mean(axis=1)
    if np.all(den == 0):
        raise ValueError("first-layer output is identically zero")
    num = np.abs(cwt(u1, wavelet, j2, dt))[:, sl].mean(axis=1)
    return jackknife_ratio(num, den)


# --------------------------------------------------------------------------
# deformations


def deformation_strength(tau, dt: float = 1.0) -> dict:
    """Grid versions of the quantities entering the deformation bound.

    Derivatives are periodic central differences and the sup of
    ``|tau(s) - tau(t)|`` is taken over the grid.
    """
    tau = np.asarray(tau, dtype=float)
    d1 = (np.roll(tau, -1) - np.roll(tau, 1)) / (2 * dt)
    d2 = (np.roll(tau, -1) - 2 * tau + np.roll(tau, 1)) / dt**2
    s1 = float(np.max(np.abs(d1)))
    s2 = float(np.max(np.abs(d2)))
    spread = float(tau.max() - tau.min())
    if s1 == 0:
        K = 0.0
    else:
        K = (s1 * max(math.log(spread / s1) if spread > 0 else 0.0, 1.0) + s2) ** 2
    return {"sup_tau": float(np.max(np.abs(tau))), "sup_dtau": s1, "sup_d2tau": s2,
            "spread": spread, "K": K}


@dataclass
class DeformationReport:
    distance: float
    distance_se: float
    K: float
    translation_term: float
    input_energy: float
    ratio_to_bound: float


def deformation_distance(paths, tau, bank: Filterbank, order: int, activations: Sequence,
                         guard: int | None = None) -> DeformationReport:
    """``E||S_J L_tau X - S_J X||^2`` over all nodes up to ``order``, with the
    structural terms of the bound (its constant is unknown, so only the
    ratio of distance to bound terms is reported)."""
    from .simulate import warp_path

    X = np.atleast_2d(np.asarray(paths, dtype=float))
    tau = np.broadcast_to(np.asarray(tau, dtype=float), (X.shape[-1],))
    st = deformation_strength(tau, bank.dt)
    d = np.empty(X.shape[0])
    e = np.empty(X.shape[0])
    for i, x in enumerate(X):
        a = full_tree(x, bank, order, activations, guard=guard)
        b = full_tree(warp_path(x, tau, bank.dt), bank, order, activations, guard=guard)
        d[i] = sum(float(np.mean((b.S[k] - a.S[k]) ** 2)) for k in a.S)
        e[i] = float(np.mean(x**2))
    E = float(e.mean())
    trans = 2.0 ** (-2 * bank.J) * (order + 1) * st["sup_tau"] ** 2 * E
    bound = (order + 1) ** 2 * st["K"] * E + trans
    dist = float(d.mean())
    return DeformationReport(
        distance=dist,
        distance_se=float(d.std(ddof=1) / math.sqrt(d.size)) if d.size > 1 else float("nan"),
        K=st["K"], translation_term=trans, input_energy=E,
        ratio_to_bound=dist / bound if bound > 0 else (0.0 if dist == 0 else math.inf),
    )
