import json
from pathlib import Path

import numpy as np
import pytest
import yaml
from click.testing import CliRunner
from hypothesis import given, settings, strategies as st

from nast.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, HIST_EDGES, configs_dir, main
from nast.config import ConfigError, config_hash, load_config, validate_config

LRD = {"kind": "param-lrd", "c1": 1.0, "beta1": 0.75, "beta2": 4.0, "c2": 1.0}


def base_config(**over):
    cfg = {"schema": 1, "name": "tiny", "target": "clt", "model": dict(LRD),
           "wavelet": {"name": "daubechies", "K": 4}, "activations": ["modulus", "modulus"],
           "scales": {"j1": [1], "j2": 5}, "ensemble": {"paths": 4, "length": 2**16, "seed": 0},
           "analysis": {"reference": "standard-normal"}}
    cfg.update(over)
    return cfg


def write(tmp_path, cfg, name="c.cfg"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return str(p)


def invoke(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


class TestConfig:
    def test_defaults_filled(self):
        cfg = validate_config(base_config())
        assert cfg["analysis"]["alpha"] == 0.01 and cfg["scales"]["order"] == 2

    def test_unknown_key(self):
        raw = base_config()
        raw["model"]["gamma"] = 1
        with pytest.raises(ConfigError, match="unknown key 'model.gamma'"):
            validate_config(raw)

    def test_missing_key(self):
        raw = base_config()
        del raw["wavelet"]["name"]
        with pytest.raises(ConfigError, match="missing required key 'wavelet.name'"):
            validate_config(raw)

    def test_wrong_type(self):
        with pytest.raises(ConfigError, match="'ensemble.paths' has type str"):
            validate_config(base_config(ensemble={"paths": "many"}))

    @pytest.mark.parametrize("length", [1000, 8])
    def test_length(self, length):
        with pytest.raises(ConfigError, match="power of two"):
            validate_config(base_config(ensemble={"length": length}))

    def test_bad_target(self):
        with pytest.raises(ConfigError, match="target"):
            validate_config(base_config(target="everything"))

    @given(st.randoms())
    @settings(max_examples=20)
    def test_hash_ignores_key_order(self, rnd):
        def shuffled(d):
            if not isinstance(d, dict):
                return d
            keys = list(d)
            rnd.shuffle(keys)
            return {k: shuffled(d[k]) for k in keys}

        cfg = validate_config(base_config())
        assert config_hash(shuffled(cfg)) == config_hash(cfg)

    def test_hash_sees_values(self):
        a = validate_config(base_config())
        b = validate_config(base_config(ensemble={"paths": 5, "length": 2**16}))
        assert config_hash(a) != config_hash(b)

    @pytest.mark.parametrize("path", sorted(p.name for p in configs_dir().glob("*.cfg")))
    def test_shipped_configs_valid(self, path):
        load_config(configs_dir() / path)


class TestSimulate:
    def fbm_cfg(self, tmp_path):
        cfg = base_config(model={"kind": "generalized-fbm", "H": 0.3}, wavelet={"name": "mexican-hat"},
                          ensemble={"paths": 2, "length": 2**16, "seed": 4})
        return write(tmp_path, cfg)

    def test_fbm_length(self, tmp_path):
        res = invoke("simulate", "--config", self.fbm_cfg(tmp_path), "--out", str(tmp_path / "a"))
        assert res.exit_code == EXIT_OK
        f = Path(res.output.split()[0])
        assert np.loadtxt(f).size == 65536
        assert json.loads(f.with_suffix(".txt.json").read_text())["seed"] == 4

    def test_byte_identical(self, tmp_path):
        cfg = self.fbm_cfg(tmp_path)
        for d in ("a", "b"):
            assert invoke("simulate", "--config", cfg, "--out", str(tmp_path / d), "--count", "2").exit_code == 0
        for name in sorted(p.name for p in (tmp_path / "a").glob("tiny-*")):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_missing_key_exit(self, tmp_path):
        raw = base_config()
        del raw["model"]["kind"]
        res = CliRunner().invoke(main, ["simulate", "--config", write(tmp_path, raw)])
        assert res.exit_code == EXIT_CONFIG
        assert "model.kind" in res.output

    def test_missing_file(self):
        res = CliRunner().invoke(main, ["simulate", "--config", "no-such.cfg"])
        assert res.exit_code == EXIT_CONFIG


@pytest.fixture(scope="module")
def clt_report(tmp_path_factory):
    d = tmp_path_factory.mktemp("clt")
    cfg = write(d, base_config(ensemble={"paths": 8, "length": 2**17, "seed": 1}))
    res = CliRunner().invoke(main, ["validate", "--config", cfg, "--out", str(d / "out")])
    assert res.exit_code in (EXIT_OK, EXIT_FAIL), res.output
    return d, cfg, d / "out" / "tiny-clt.json"


class TestValidate:
    def test_regime_mismatch(self):
        res = CliRunner().invoke(main, ["validate", "clt", "--config", "fig3.cfg"])
        assert res.exit_code == EXIT_CONFIG
        assert "non-CLT regime: (2α+β)r = 0.6 < 1" in res.output

    def test_report_contents(self, clt_report):
        rep = json.loads(clt_report[2].read_text())
        assert rep["target"] == "clt" and len(rep["config_hash"]) == 16
        assert {r["test"] for r in rep["reports"]} >= {"ks-standard-normal"}
        np.testing.assert_array_equal(rep["artifacts"]["histogram"]["edges"], HIST_EDGES)

    def test_deterministic(self, clt_report):
        d, cfg, first = clt_report
        before = first.read_bytes()
        res = CliRunner().invoke(main, ["validate", "--config", cfg, "--out", str(d / "out")])
        assert res.exit_code in (EXIT_OK, EXIT_FAIL)
        assert first.read_bytes() == before
        assert "validate tiny" in (d / "out" / "run.log").read_text()

    def test_plotdata(self, clt_report):
        d, _, rep = clt_report
        assert invoke("plotdata", str(rep), "--out", str(d / "plots")).exit_code == 0
        qq = np.loadtxt(d / "plots" / "tiny-clt.qq.txt")
        assert qq.shape == (99, 3)
        hist = np.loadtxt(d / "plots" / "tiny-clt.hist.txt")
        np.testing.assert_allclose(hist[:, 0], HIST_EDGES[:-1], atol=1e-9)

    def test_plotdata_missing(self, tmp_path):
        res = CliRunner().invoke(main, ["plotdata", str(tmp_path / "none.json")])
        assert res.exit_code == EXIT_CONFIG

    def test_slope_header(self, tmp_path):
        cfg = base_config(target="slope", scales={"j1": [1, 2], "js": [2, 3, 4, 5, 6], "first": [1, 2, 3, 4]},
                          ensemble={"paths": 3, "length": 2**16},
                          analysis={"slope": -0.5, "slope_tol": 0.2, "jrange": [2, 6], "first_slope": -0.3,
                                    "first_range": [1, 4], "intercept_tol": 1.0})
        res = CliRunner().invoke(main, ["validate", "--config", write(tmp_path, cfg), "--out", str(tmp_path)])
        assert res.exit_code in (EXIT_OK, EXIT_FAIL), res.output
        assert invoke("plotdata", str(tmp_path / "tiny-slope.json")).exit_code == 0
        lines = (tmp_path / "tiny-slope.slope.txt").read_text().splitlines()
        assert lines[0].startswith("# fit j1=1: slope=") and lines[1].startswith("# fit j1=2: slope=")
        rows = np.loadtxt(tmp_path / "tiny-slope.slope.txt")
        assert rows.shape == (10, 4)
        rep = json.loads((tmp_path / "tiny-slope.json").read_text())
        fit = rep["artifacts"]["fits"]["1"]
        sel = rows[:5]
        np.testing.assert_allclose(np.polyfit(sel[:, 1], sel[:, 2], 1)[0], fit["slope"], rtol=1e-6)


class TestOtherCommands:
    def test_constants(self):
        res = invoke("constants", "--config", "constants.cfg")
        assert res.exit_code == 0
        table = json.loads(res.output)
        assert table  # one entry per first-layer scale
        assert "0.046" in res.output

    def test_manifest_lists_every_config(self):
        res = invoke("manifest")
        shipped = {p.name for p in configs_dir().glob("*.cfg")}
        listed = {line.split()[0] for line in res.output.splitlines()}
        assert listed == shipped

    def test_all_with_manifest(self, tmp_path):
        energy = base_config(name="e", target="energy", activations=["modulus", "relu"], scales={"J": [4], "order": 2},
                             ensemble={"paths": 6, "length": 2**12})
        write(tmp_path, energy, "e.cfg")
        good = {"entries": [{"config": "e.cfg", "figure": "energy", "expected": "pass"}]}
        (tmp_path / "m.yaml").write_text(yaml.safe_dump(good))
        res = CliRunner().invoke(main, ["validate", "--all", "--manifest", str(tmp_path / "m.yaml"),
                                        "--out", str(tmp_path / "o")])
        assert res.exit_code == EXIT_OK, res.output
        summary = json.loads((tmp_path / "o" / "manifest-summary.json").read_text())
        assert summary["all_as_expected"] and summary["entries"][0]["verdict"] == "pass"
        bad = {"entries": [{"config": "e.cfg", "figure": "energy", "expected": "fail"}]}
        (tmp_path / "m.yaml").write_text(yaml.safe_dump(bad))
        res = CliRunner().invoke(main, ["validate", "--all", "--manifest", str(tmp_path / "m.yaml"),
                                        "--out", str(tmp_path / "o")])
        assert res.exit_code == EXIT_FAIL and "MISMATCH" in res.output

    def test_bad_manifest(self, tmp_path):
        (tmp_path / "m.yaml").write_text("entries:\n  - {config: x.cfg}\n")
        res = CliRunner().invoke(main, ["manifest", "--manifest", str(tmp_path / "m.yaml")])
        assert res.exit_code == EXIT_CONFIG
