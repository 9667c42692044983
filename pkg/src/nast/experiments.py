"""Validation pipelines driven by experiment configs.

Each target maps a validated config to a list of ``StatReport`` objects
and an overall verdict.  Paths are generated from ``(seed, index)`` inside
the workers, so the results do not depend on the number of threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import hermite, limits, scattering
from .config import ConfigError, config_hash
from .simulate import FBMSynthesizer, SpectralSynthesizer, make_rng
from .spectra import GeneralizedFBM, model_from_config, power_law_convolution, riesz_power_convolution
from .wavelets import Filterbank, make_wavelet

__all__ = ["RunResult", "run_target", "build_model", "build_wavelet", "path_source", "sample_path", "map_paths",
           "constants_table",
           "check_regime"]


@dataclass
class RunResult:
    target: str
    passed: bool
    reports: list
    artifacts: dict = field(default_factory=dict)


def build_model(cfg: dict):
    m = {k: v for k, v in cfg["model"].items() if v is not None}
    if m["kind"] == "generalized-fbm":
        m.pop("c1", None)
        m.pop("c2", None)
    try:
        return model_from_config(m)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key 'model': {exc}") from None


def build_wavelet(cfg: dict):
    w = {k: v for k, v in cfg["wavelet"].items() if v is not None}
    name = w.pop("name")
    try:
        return make_wavelet(name, **w)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key 'wavelet': {exc}") from None


# --------------------------------------------------------------------------
# path generation (module-level so worker processes can pickle it)

_SYNTH: dict = {}


def _synth(model_cfg: tuple, n: int, dt: float):
    key = (model_cfg, n, dt)
    if key not in _SYNTH:
        model = model_from_config(dict(model_cfg))
        if isinstance(model, GeneralizedFBM):
            _SYNTH[key] = FBMSynthesizer(model.H, n, dt)
        else:
            _SYNTH[key] = SpectralSynthesizer(model, n, dt)
    return _SYNTH[key]


def _make_path(model_cfg: tuple, n: int, dt: float, seed: int, index: int) -> np.ndarray:
    syn = _synth(model_cfg, n, dt)
    if isinstance(syn, FBMSynthesizer):
        # one circulant draw gives two independent paths
        pair = syn.sample_pair(make_rng(seed, index // 2))
        return pair[index % 2]
    return syn.sample_values(make_rng(seed, index))


def _model_key(model) -> tuple:
    return tuple(sorted(model.to_config().items()))


def _apply(func, model_key, n, dt, seed, index):
    return func(_make_path(model_key, n, dt, seed, index))


def sample_path(model, n: int, dt: float, seed: int, index: int):
    """``SamplePath`` number ``index`` of the ensemble, identical to the one the validators use."""
    syn = _synth(_model_key(model), n, dt)
    if isinstance(syn, FBMSynthesizer):
        return syn.sample(seed, index // 2, index % 2)
    return syn.sample(seed, index)


def path_source(model, n: int, dt: float, seed: int, count: int):
    """Generator of ``count`` paths for ``model``."""
    key = _model_key(model)
    for i in range(count):
        yield _make_path(key, n, dt, seed, i)


def map_paths(func, model, n: int, dt: float, seed: int, count: int, threads: int = 1) -> list:
    """``[func(path_i) for i < count]`` in index order, optionally over worker processes."""
    key = _model_key(model)
    job = partial(_apply, func, key, n, dt, seed)
    if threads <= 1:
        return [job(i) for i in range(count)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, range(count), chunksize=max(1, count // (4 * threads))))


# --------------------------------------------------------------------------
# regime checks


def check_regime(model, wavelet, activation: str, j1: float, target: str) -> tuple[int, float]:
    """Hermite rank ``r`` and ``(2 alpha + beta) r``; raises ``ConfigError`` on a regime mismatch."""
    from .spectra import variance_sigma_j

    if isinstance(model, GeneralizedFBM):
        gamma = 2.0 * (wavelet.alpha - model.H)
        sigma = 1.0
    else:
        gamma = 2.0 * wavelet.alpha + model.beta
        sigma = math.sqrt(variance_sigma_j(model, wavelet, j1))
    r = hermite.expand(activation, sigma, L=8).rank
    if r is None:
        raise ConfigError(f"activation {activation!r} has no non-constant Hermite component")
    val = gamma * r
    if target == "clt" and val <= 1.0:
        raise ConfigError(f"non-CLT regime: (2α+β)r = {val:.3g} < 1 (Gaussian-limit theorem needs > 1)")
    if target == "nonclt" and val >= 1.0:
        raise ConfigError(f"CLT regime: (2α+β)r = {val:.3g} > 1 (non-Gaussian limit theorem needs < 1)")
    return r, val


# --------------------------------------------------------------------------
# targets


def _ensemble(cfg):
    e = cfg["ensemble"]
    return e["length"], e["dt"], e["seed"], e["paths"]


def _clt(cfg, threads, chash) -> RunResult:
    model, wavelet = build_model(cfg), build_wavelet(cfg)
    act = cfg["activations"][0]
    j1, j2 = cfg["scales"]["j1"][0], cfg["scales"]["j2"]
    check_regime(model, wavelet, act, j1, "clt")
    n, dt, seed, count = _ensemble(cfg)
    a = cfg["analysis"]
    spacing = a["spacing"] or int(math.ceil(4 * 2.0**j2 / dt))
    guard = scattering.guard_margin(wavelet, [j1, j2], dt)
    func = partial(limits.rescaled_path, wavelet=wavelet, j1=j1, j2=j2, activation=act, rate=0.5, dt=dt,
                   spacing=spacing, guard=guard)
    rs = limits.assemble_rescaled(map_paths(func, model, n, dt, seed, count, threads), spacing, guard)
    ref = a["reference"] or "standard-normal"
    ks = limits.ks_test(rs.values, ref, alpha=a["alpha"])
    ks.seeds, ks.config_hash = [seed], chash
    ks.details.update({"spacing": rs.spacing, "per_path": rs.per_path, "paths": rs.paths, "guard": rs.guard})
    reports = [ks]
    dec = limits.StatReport("decimation-lag1", abs(rs.lag1_autocorr), None, rs.n, abs(rs.lag1_autocorr) < 0.1,
                            [seed], chash)
    reports.append(dec)
    if not isinstance(model, GeneralizedFBM):
        k = hermite.kappa(model, wavelet, j1, act)
        target_var = k.series**2 * hermite.wavelet_l2_sq(wavelet)
        ratio = float(np.var(rs.raw, ddof=1) / target_var)
        reports.append(limits.StatReport("variance-vs-kappa", ratio - 1.0, None, rs.n,
                                         abs(ratio - 1.0) <= a["variance_tol"], [seed], chash,
                                         {"empirical": float(np.var(rs.raw, ddof=1)), "theory": target_var}))
    qq = limits.qq_data(rs.values, ref)
    return RunResult("clt", all(r.passed for r in reports), reports, {"qq": qq, "samples": rs.values})


def _nonclt(cfg, threads, chash) -> RunResult:
    model, wavelet = build_model(cfg), build_wavelet(cfg)
    act = cfg["activations"][0]
    j1, j2 = cfg["scales"]["j1"][0], cfg["scales"]["j2"]
    r, val = check_regime(model, wavelet, act, j1, "nonclt")
    n, dt, seed, count = _ensemble(cfg)
    a = cfg["analysis"]
    spacing = a["spacing"] or int(math.ceil(4 * 2.0**j2 / dt))
    guard = scattering.guard_margin(wavelet, [j1, j2], dt)
    func = partial(limits.rescaled_path, wavelet=wavelet, j1=j1, j2=j2, activation=act, rate=val / 2.0,
                   dt=dt, spacing=spacing, guard=guard)
    rs = limits.assemble_rescaled(map_paths(func, model, n, dt, seed, count, threads), spacing, guard)
    ref = a["reference"] or "standardized-chi2-chaos"
    ks = limits.ks_test(rs.values, ref, alpha=a["alpha"])
    ks.seeds, ks.config_hash = [seed], chash
    ks.details.update({"spacing": rs.spacing, "per_path": rs.per_path, "paths": rs.paths, "rank": r})
    reports = [ks]
    thr = a["reject_normal_below"]
    if thr is not None:
        kn = limits.ks_test(rs.values, "standard-normal", alpha=None)
        kn.passed = kn.pvalue < thr
        kn.test = "ks-standard-normal-rejects"
        kn.seeds, kn.config_hash = [seed], chash
        reports.append(kn)
    qq = limits.qq_data(rs.values, ref)
    return RunResult("nonclt", all(r.passed for r in reports), reports, {"qq": qq, "samples": rs.values})


def _curves(cfg, model, wavelet, threads, j1s=None):
    n, dt, seed, count = _ensemble(cfg)
    sc = cfg["scales"]
    j1s = j1s or sc["j1"]
    js = sc["js"] or list(range(0, 11))
    # circular synthesis is exactly stationary on the torus, so only fBm needs a guard
    guard = None if isinstance(model, GeneralizedFBM) else 0
    func = partial(limits.moments_path, wavelet=wavelet, j1s=j1s, js=js, first_scales=sc["first"], dt=dt,
                   guard=guard, activation=cfg["activations"][0])
    rows = map_paths(func, model, n, dt, seed, count, threads)
    return limits.assemble_moments(rows, j1s, js, sc["first"])


def _slope_rows(curves: limits.MomentCurves):
    rows = []
    for a, j1 in enumerate(curves.j1s):
        val, se, _ = curves.second_moment(j1)
        rows += [(j1, j, float(v), float(s)) for j, v, s in zip(curves.js, val, se)]
    return rows


def _slope(cfg, threads, chash) -> RunResult:
    model, wavelet = build_model(cfg), build_wavelet(cfg)
    a = cfg["analysis"]
    curves = _curves(cfg, model, wavelet, threads)
    seed = cfg["ensemble"]["seed"]
    expected = a["slope"] if a["slope"] is not None else -0.5
    reports = []
    fits = {}
    for j1 in curves.j1s:
        f = curves.second_slope(j1, a["jrange"])
        fits[j1] = f
        reports.append(limits.StatReport(f"second-order-slope-j1={j1}", f.slope, None, curves.paths,
                                         abs(f.slope - expected) <= a["slope_tol"], [seed], chash,
                                         {"slope_se": f.slope_se, "expected": expected}))
    if a["first_slope"] is not None:
        f = curves.first_slope(a["first_range"])
        reports.append(limits.StatReport("first-order-slope", f.slope, None, curves.paths,
                                         abs(f.slope - a["first_slope"]) <= a["slope_tol"], [seed], chash,
                                         {"slope_se": f.slope_se, "expected": a["first_slope"],
                                          "range": a["first_range"]}))
    if not isinstance(model, GeneralizedFBM):
        act = cfg["activations"][0]
        r, val = check_regime(model, wavelet, act, curves.j1s[0], "any")
        for j1 in curves.j1s:
            meas, se = curves.limit_intercept(j1, expected, a["jrange"])
            if val > 1.0:
                theory = hermite.theta1(model, wavelet, j1, act).theta
                rel = meas / theory - 1.0
                reports.append(limits.StatReport(f"intercept-j1={j1}", rel, None, curves.paths,
                                                 abs(rel) <= a["intercept_tol"], [seed], chash,
                                                 {"measured": meas, "measured_se": se, "theta": theory}))
            else:
                c = hermite.nu_theta2(model, wavelet, j1, act)
                reports.append(limits.StatReport(
                    f"intercept-j1={j1}", meas, None, curves.paths, None, [seed], chash,
                    {"measured_se": se, "printed_prefactor_single_chaos": c.theta2_printed,
                     "derived_prefactor_single_chaos": c.theta2_derived,
                     "printed_prefactor_exact_variance": c.theta2_printed_variance,
                     "derived_prefactor_exact_variance": c.theta2_derived_variance}))
    fit_params = {str(j1): {"slope": f.slope, "slope_se": f.slope_se, "intercept": f.intercept}
                  for j1, f in fits.items()}
    passed = all(r.passed for r in reports if r.passed is not None)
    return RunResult("slope", passed, reports, {"slope_rows": _slope_rows(curves), "fits": fit_params})


def _fbm_invariance(cfg, threads, chash) -> RunResult:
    model, wavelet = build_model(cfg), build_wavelet(cfg)
    a = cfg["analysis"]
    seed = cfg["ensemble"]["seed"]
    curves = _curves(cfg, model, wavelet, threads)
    expect = a["expect"] or ("j1-independent" if isinstance(model, GeneralizedFBM) else "j1-dependent")
    rep = limits.fbm_moment_invariance(curves, a["jrange"], a["slope"] or -0.5, a["z"],
                                       expect_invariant=expect == "j1-independent")
    rep.seeds, rep.config_hash = [seed], chash
    reports = [rep]
    for j1, (s, se) in rep.details["slopes"].items():
        reports.append(limits.StatReport(f"slope-j1={j1}", s, None, curves.paths,
                                         abs(s - (a["slope"] or -0.5)) <= a["slope_tol"], [seed], chash,
                                         {"slope_se": se}))
    if a["contrast"]:
        sub = dict(cfg)
        sub["model"] = {**{k: None for k in cfg["model"]}, **a["contrast"]}
        cmodel = build_model(sub)
        cc = _curves(cfg, cmodel, wavelet, threads)
        crep = limits.fbm_moment_invariance(cc, a["jrange"], a["slope"] or -0.5, a["z"], expect_invariant=False)
        crep.test = "contrast-stationary-input"
        crep.seeds, crep.config_hash = [seed], chash
        reports.append(crep)
    return RunResult("fbm-invariance", all(r.passed for r in reports), reports,
                     {"slope_rows": _slope_rows(curves)})


def _energy_one(x, bank, order, act):
    t = scattering.full_tree(x, bank, order, [act] * order)
    E = [sum(float(np.mean(t.U[k] ** 2)) for k in t.nodes(m)) for m in range(order + 1)]
    P = [sum(float(np.mean(t.S[k] ** 2)) for k in t.nodes(m)) for m in range(order + 1)]
    return E, P


def _energy(cfg, threads, chash) -> RunResult:
    model, wavelet = build_model(cfg), build_wavelet(cfg)
    n, dt, seed, count = _ensemble(cfg)
    J = cfg["scales"]["J"][0]
    order = cfg["scales"]["order"]
    bank = Filterbank.normalized(wavelet, J, dt=dt, father="complement")
    reports = []
    for act in cfg["activations"]:
        if not scattering.get_activation(act).lemma1_eligible:
            raise ConfigError(f"activation {act!r} is not non-expansive with A(0) = 0")
        rows = map_paths(partial(_energy_one, bank=bank, order=order, act=act), model, n, dt, seed, count, threads)
        led = scattering.energy_ledger_from_arrays([r[0] for r in rows], [r[1] for r in rows], z=2.0)
        reports.append(limits.StatReport(f"energy-{act}", max(led.diff_z + [led.bound_z]), None, count,
                                         led.monotone and led.bounded, [seed], chash,
                                         {"order_energy": led.order_energy, "order_se": led.order_se,
                                          "pooled_total": led.pooled_total, "input_energy": led.input_energy,
                                          "diff_z": led.diff_z, "bound_z": led.bound_z}))
    return RunResult("energy", all(r.passed for r in reports), reports)


def _shift_one(x, bank, order, acts, shift):
    a = scattering.full_tree(x, bank, order, acts, guard=0)
    b = scattering.full_tree(np.roll(x, shift), bank, order, acts, guard=0)
    num = sum(float(np.mean((b.S[k] - a.S[k]) ** 2)) for k in a.S)
    den = sum(float(np.mean(a.S[k] ** 2)) for k in a.S)
    return num, den


def _deformation(cfg, threads, chash) -> RunResult:
    model, wavelet = build_model(cfg), build_wavelet(cfg)
    n, dt, seed, count = _ensemble(cfg)
    order = cfg["scales"]["order"]
    acts = (cfg["activations"] * order)[:order]
    a = cfg["analysis"]
    shift = a["shift"]
    ratio_max = a["ratio_max"] if a["ratio_max"] is not None else 1.0 / 3.0
    dist = []
    for J in cfg["scales"]["J"]:
        bank = Filterbank.normalized(wavelet, J, dt=dt, father="complement")
        rows = map_paths(partial(_shift_one, bank=bank, order=order, acts=acts, shift=shift),
                         model, n, dt, seed, count, threads)
        num = np.array([r[0] for r in rows])
        den = np.array([r[1] for r in rows])
        dist.append((J, float(num.mean()), float(num.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0,
                     float(num.mean() / den.mean())))
    reports = []
    for (J0, d0, _, _), (J1, d1, _, _) in zip(dist[:-1], dist[1:]):
        ratio = d1 / d0 if d0 > 0 else 0.0
        reports.append(limits.StatReport(f"translation-ratio-J={J0}->{J1}", ratio, None, count,
                                         ratio <= ratio_max, [seed], chash, {"reference": 0.25}))
    return RunResult("deformation", all(r.passed for r in reports), reports,
                     {"distances": [{"J": J, "distance": d, "se": s, "relative": r} for J, d, s, r in dist]})


def _constants(cfg, threads, chash) -> RunResult:
    model, wavelet = build_model(cfg), build_wavelet(cfg)
    act = cfg["activations"][0]
    reports = []
    for j1 in cfg["scales"]["j1"]:
        r, val = check_regime(model, wavelet, act, j1, "any")
        if val > 1.0:
            k = hermite.kappa(model, wavelet, j1, act)
            th = hermite.theta1(model, wavelet, j1, act)
            reports.append(limits.StatReport(f"kappa-series-vs-integral-j1={j1}", k.relative_gap, None, 0,
                                             k.relative_gap <= 0.01, [], chash,
                                             {"series": k.series, "integral": k.integral, "theta": th.theta,
                                              "truncation_bound": k.truncation_bound, "rank": r}))
        else:
            c = hermite.nu_theta2(model, wavelet, j1, act)
            reports.append(limits.StatReport(f"nonclt-constants-j1={j1}", c.nu, None, 0, None, [], chash,
                                             {"nu": c.nu, "var_I": c.var_I, "rank": r,
                                              "theta2_printed": c.theta2_printed,
                                              "theta2_derived": c.theta2_derived,
                                              "theta2_derived_variance": c.theta2_derived_variance}))
    gamma = 2.0 * wavelet.alpha + model.beta
    for g in (0.1, 0.2, 0.3):
        num = power_law_convolution(g, g)
        rel = num / riesz_power_convolution(g, 2) - 1.0
        reports.append(limits.StatReport(f"riesz-gamma={g}", rel, None, 0, abs(rel) <= 1e-3, [], chash))
    passed = all(r.passed for r in reports if r.passed is not None)
    return RunResult("constants", passed, reports, {"gamma": gamma})


def constants_table(cfg: dict) -> dict:
    """Limit-theorem constants for every ``j1`` in the config."""
    model, wavelet = build_model(cfg), build_wavelet(cfg)
    act = cfg["activations"][0]
    rows = []
    for j1 in cfg["scales"]["j1"]:
        r, val = check_regime(model, wavelet, act, j1, "any")
        row = {"j1": j1, "rank": r, "regime_value": val, "regime": "clt" if val > 1.0 else "nonclt"}
        if isinstance(model, GeneralizedFBM):
            rows.append(row)
            continue
        if val > 1.0:
            th = hermite.theta1(model, wavelet, j1, act)
            k = th.kappa
            row.update({"sigma": k.sigma, "kappa_series": k.series, "kappa_integral": k.integral,
                        "kappa_relative_gap": k.relative_gap, "truncation": k.truncation,
                        "truncation_bound": k.truncation_bound, "theta": th.theta,
                        "psi_norm": th.psi_norm})
        else:
            c = hermite.nu_theta2(model, wavelet, j1, act)
            row.update({"sigma": c.sigma, "gamma": c.gamma, "nu": c.nu, "var_I": c.var_I,
                        "theta2_printed": c.theta2_printed, "theta2_derived": c.theta2_derived,
                        "theta2_printed_variance": c.theta2_printed_variance,
                        "theta2_derived_variance": c.theta2_derived_variance})
        rows.append(row)
    return {"name": cfg["name"], "config_hash": config_hash(cfg), "activation": act,
            "wavelet": wavelet.to_config(), "model": model.to_config(), "rows": rows}


_TARGETS = {
    "clt": _clt,
    "nonclt": _nonclt,
    "slope": _slope,
    "fbm-invariance": _fbm_invariance,
    "energy": _energy,
    "deformation": _deformation,
    "constants": _constants,
}


def run_target(cfg: dict, threads: int = 1) -> RunResult:
    """Run the pipeline named by ``cfg['target']``."""
    return _TARGETS[cfg["target"]](cfg, threads, config_hash(cfg))
