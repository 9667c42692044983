"""Command-line runner: ``nast simulate|validate|plotdata|constants|manifest``.

Exit codes: 0 when every criterion holds, 2 for configuration errors
(including a regime that contradicts the requested target), 3 when a
statistical criterion fails.  Report files hold no timestamps; those go to
``run.log`` in the output directory.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
import sys
from importlib import resources
from pathlib import Path

import click
import numpy as np
import yaml

from . import experiments
from .config import ConfigError, TARGETS, config_hash, load_config, validate_config
from .simulate import save_path

EXIT_OK, EXIT_CONFIG, EXIT_FAIL = 0, 2, 3
HIST_EDGES = np.linspace(-6.0, 6.0, 61)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def _log(out: Path, msg: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    with open(out / "run.log", "a") as fh:
        fh.write(f"{stamp} {msg}\n")


def configs_dir() -> Path:
    return Path(str(resources.files("nast") / "configs"))


def resolve_config(path: str) -> Path:
    """A path as given, or the name of a shipped config."""
    p = Path(path)
    if p.exists():
        return p
    shipped = configs_dir() / path
    if shipped.exists():
        return shipped
    raise ConfigError(f"config file {path!r} not found")


def _load(path: str, seed: int | None, out: str | None) -> dict:
    cfg = load_config(resolve_config(path))
    if seed is not None:
        cfg["ensemble"]["seed"] = seed
    if out is not None:
        cfg["output"]["dir"] = out
    return validate_config(cfg)


def _fail_config(exc: Exception) -> None:
    click.echo(f"config error: {exc}", err=True)
    sys.exit(EXIT_CONFIG)


def build_report(cfg: dict, result: experiments.RunResult) -> dict:
    art = dict(result.artifacts)
    samples = art.pop("samples", None)
    if samples is not None:
        counts, _ = np.histogram(samples, bins=HIST_EDGES)
        art["histogram"] = {"edges": HIST_EDGES, "counts": counts,
                            "below": int(np.sum(samples < HIST_EDGES[0])),
                            "above": int(np.sum(samples >= HIST_EDGES[-1]))}
    return {"name": cfg["name"], "target": result.target, "config_hash": config_hash(cfg), "config": cfg,
            "passed": result.passed, "reports": [r.to_dict() for r in result.reports], "artifacts": art}


def run_validation(cfg: dict, threads: int) -> tuple[dict, Path]:
    result = experiments.run_target(cfg, threads)
    report = build_report(cfg, result)
    out = Path(cfg["output"]["dir"])
    path = dump_json(report, out / f"{cfg['name']}-{cfg['target']}.json")
    _log(out, f"validate {cfg['name']} target={cfg['target']} hash={report['config_hash']} "
              f"passed={result.passed}")
    return report, path


def _echo_report(report: dict) -> None:
    for r in report["reports"]:
        flag = {True: "PASS", False: "FAIL", None: "INFO"}[r["passed"]]
        p = "" if r["pvalue"] is None else f" p={r['pvalue']:.4g}"
        click.echo(f"  [{flag}] {r['test']}: statistic={r['statistic']:.6g}{p} n={r['n']}")


@click.group()
def main():
    """Nonlinear activation scattering experiments."""


@main.command()
@click.option("--config", "config_path", required=True, help="Config file or shipped config name.")
@click.option("--seed", type=int, default=None, help="Override the ensemble seed.")
@click.option("--out", default=None, help="Output directory.")
@click.option("--count", type=int, default=None, help="Number of paths to write (default output.save_paths or 1).")
def simulate(config_path, seed, out, count):
    """Write ensemble paths (one value per line) with JSON sidecars."""
    try:
        cfg = _load(config_path, seed, out)
        model = experiments.build_model(cfg)
    except ConfigError as exc:
        _fail_config(exc)
    e = cfg["ensemble"]
    k = count or cfg["output"]["save_paths"] or 1
    k = min(k, e["paths"])
    outdir = Path(cfg["output"]["dir"])
    for i in range(k):
        p = experiments.sample_path(model, e["length"], e["dt"], e["seed"], i)
        f = save_path(p, outdir / f"{cfg['name']}-seed{e['seed']}-path{i:04d}.txt")
        click.echo(str(f))
    _log(outdir, f"simulate {cfg['name']} hash={config_hash(cfg)} paths={k}")


def _read_manifest(path: Path) -> list[dict]:
    try:
        data = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"manifest {str(path)!r} not found") from None
    entries = data.get("entries") if isinstance(data, dict) else None
    if not isinstance(entries, list):
        raise ConfigError(f"manifest {str(path)!r} has no 'entries' list")
    for i, e in enumerate(entries):
        for key in ("config", "figure", "expected"):
            if key not in e:
                raise ConfigError(f"manifest entry {i} is missing key {key!r}")
        if e["expected"] not in ("pass", "fail"):
            raise ConfigError(f"manifest entry {i}: expected must be 'pass' or 'fail'")
    return entries


@main.command()
@click.argument("target", required=False, type=click.Choice(TARGETS))
@click.option("--config", "config_path", default=None, help="Config file or shipped config name.")
@click.option("--all", "run_all", is_flag=True, help="Run every entry of the manifest.")
@click.option("--manifest", "manifest_path", default=None, help="Manifest file (default: shipped).")
@click.option("--seed", type=int, default=None, help="Override the ensemble seed.")
@click.option("--threads", type=int, default=1, show_default=True, help="Worker processes.")
@click.option("--out", default=None, help="Output directory.")
def validate(target, config_path, run_all, manifest_path, seed, threads, out):
    """Run a validation target and write a JSON report."""
    if run_all:
        try:
            mpath = Path(manifest_path) if manifest_path else configs_dir() / "manifest.yaml"
            entries = _read_manifest(mpath)
            cfgs = [_load(str(mpath.parent / e["config"]), seed, out) for e in entries]
        except ConfigError as exc:
            _fail_config(exc)
        summary, ok = [], True
        for e, cfg in zip(entries, cfgs):
            try:
                report, path = run_validation(cfg, threads)
            except ConfigError as exc:
                _fail_config(exc)
            verdict = "pass" if report["passed"] else "fail"
            match = verdict == e["expected"]
            ok &= match
            click.echo(f"{e['figure']} ({e['config']}): {verdict}, expected {e['expected']}"
                       f" -> {'OK' if match else 'MISMATCH'}")
            _echo_report(report)
            summary.append({"config": e["config"], "figure": e["figure"], "target": cfg["target"],
                            "expected": e["expected"], "verdict": verdict, "report": path.name,
                            "config_hash": report["config_hash"]})
        odir = Path(out) if out else Path(cfgs[0]["output"]["dir"]) if cfgs else Path("results")
        dump_json({"entries": summary, "all_as_expected": ok}, odir / "manifest-summary.json")
        sys.exit(EXIT_OK if ok else EXIT_FAIL)
    if config_path is None:
        _fail_config(ConfigError("--config is required unless --all is given"))
    try:
        cfg = _load(config_path, seed, out)
        if target is not None and target != cfg["target"]:
            cfg["target"] = target
        report, path = run_validation(cfg, threads)
    except ConfigError as exc:
        _fail_config(exc)
    click.echo(f"{cfg['name']} [{cfg['target']}] -> {'PASS' if report['passed'] else 'FAIL'} ({path})")
    _echo_report(report)
    sys.exit(EXIT_OK if report["passed"] else EXIT_FAIL)


def _write_rows(path: Path, rows, header: list[str]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for h in header:
            fh.write(f"# {h}\n")
        for row in rows:
            fh.write(" ".join(f"{float(v):.10g}" for v in row) + "\n")
    return path


@main.command()
@click.argument("report_path")
@click.option("--out", default=None, help="Output directory (default: next to the report).")
def plotdata(report_path, out):
    """Write QQ, histogram and slope tables from a report as plain text columns."""
    rp = Path(report_path)
    if not rp.exists():
        click.echo(f"error: report {report_path!r} not found", err=True)
        sys.exit(EXIT_CONFIG)
    rep = json.loads(rp.read_text())
    odir = Path(out) if out else rp.parent
    stem = rp.stem
    art = rep.get("artifacts", {})
    written = []
    if "qq" in art:
        written.append(_write_rows(odir / f"{stem}.qq.txt", art["qq"],
                                   ["p empirical_quantile reference_quantile"]))
    if "histogram" in art:
        h = art["histogram"]
        edges, counts = np.asarray(h["edges"]), np.asarray(h["counts"], dtype=float)
        total = counts.sum() + h["below"] + h["above"]
        dens = counts / (total * np.diff(edges))
        rows = np.column_stack([edges[:-1], edges[1:], counts, dens])
        written.append(_write_rows(odir / f"{stem}.hist.txt", rows,
                                   [f"below={h['below']} above={h['above']}", "left right count density"]))
    if "slope_rows" in art:
        header = [f"fit j1={k}: slope={v['slope']:.6g} slope_se={v['slope_se']:.3g} intercept={v['intercept']:.6g}"
                  for k, v in sorted(art.get("fits", {}).items(), key=lambda kv: float(kv[0]))]
        written.append(_write_rows(odir / f"{stem}.slope.txt", art["slope_rows"],
                                   header + ["j1 j log2_moment log2_se"]))
    if "distances" in art:
        rows = [(d["J"], d["distance"], d["se"], d["relative"]) for d in art["distances"]]
        written.append(_write_rows(odir / f"{stem}.distance.txt", rows, ["J distance se relative"]))
    for w in written:
        click.echo(str(w))


@main.command()
@click.option("--config", "config_path", required=True, help="Config file or shipped config name.")
@click.option("--out", default=None, help="Also write the table as JSON here.")
def constants(config_path, out):
    """Print the limit-theorem constants for each first-layer scale."""
    try:
        cfg = _load(config_path, None, out)
        table = experiments.constants_table(cfg)
    except ConfigError as exc:
        _fail_config(exc)
    text = json.dumps(_jsonable(table), indent=2, sort_keys=True)
    click.echo(text)
    if out:
        dump_json(table, Path(out) / f"{cfg['name']}-constants.json")


@main.command()
@click.option("--manifest", "manifest_path", default=None, help="Manifest file (default: shipped).")
def manifest(manifest_path):
    """List the shipped figure configs with their expected verdicts."""
    try:
        mpath = Path(manifest_path) if manifest_path else configs_dir() / "manifest.yaml"
        entries = _read_manifest(mpath)
    except ConfigError as exc:
        _fail_config(exc)
    for e in entries:
        note = f"  ({e['note']})" if e.get("note") else ""
        click.echo(f"{e['config']:<18} {e['figure']:<12} expected={e['expected']}{note}")


if __name__ == "__main__":
    main()
