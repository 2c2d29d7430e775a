import json
import subprocess
import sys

import pytest

from killing_yano import catalog, cli
from killing_yano.catalog import GuardError, ParameterRecord
from killing_yano.cli import ConfigError, RunConfig, main, run


def test_kna4_all_suites_pass(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["verify", "--metric", "kerr_nut_ads", "--dim-m", "2", "--odd", "0",
                 "--points", "4", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["summary"]["pass"]
    assert set(rep["config"]["suites"]) == {"cky", "foliation", "weyl", "spin", "identities"}
    assert "PASS" in capsys.readouterr().out


def test_lmp5_foliation_and_negative_cky():
    rep = run(RunConfig("lmp5", ParameterRecord(m=2, eps=1), ("cky", "foliation"), points=3))
    assert rep.passed
    neg = [r for r in rep.records if r["kind"] == "negative"]
    assert neg and all(r["residual"] >= 1e-3 for r in neg)
    assert "cky.g4_candidate_residual" in rep.informational
    assert rep.informational["lmp5.einstein_residual"]["max"] > 0


def test_lmp5_all_suites_fails_on_one_bracket():
    code = main(["verify", "--metric", "lmp5", "--dim-m", "2", "--odd", "1", "--points", "3",
                 "--quiet"])
    assert code == 1
    rep = run(RunConfig("lmp5", ParameterRecord(m=2, eps=1), ("identities",), points=3))
    assert rep.summary["failed"] == ["identities.bracket[V_1,V^1]"]
    assert rep.informational["identities.brackets_corrected_max"] < 1e-10


@pytest.mark.parametrize("argv", [
    ["verify", "--metric", "kerr_nut_ads", "--suite", ""],
    ["verify", "--metric", "schwarzschild"],
    ["verify", "--metric", "lmp5", "--dim-m", "2", "--odd", "1", "--suite", "spin"],
    ["verify", "--metric", "kerr_nut_ads", "--suite", "bogus"],
    ["verify", "--metric", "kerr_nut_ads", "--points", "0"],
    ["verify", "--config", "/nonexistent/run.toml"],
])
def test_config_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "error:" in capsys.readouterr().err


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig("flat", suites=())
    with pytest.raises(ConfigError):
        RunConfig("flat", tolerances={"default": -1.0})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"metric": "flat", "colour": "red"})
    cfg = RunConfig("flat", tolerances={"cky.residual": 1e-6})
    assert cfg.tol("cky.residual") == 1e-6
    assert cfg.tol("spin.clifford") == 1e-12
    assert cfg.tol("other") == 1e-8
    assert cfg.floor == 1e-3


def test_toml_roundtrip_and_cli_override(tmp_path):
    cfg = RunConfig("kerr_nut_ads", ParameterRecord(m=2, eps=1, a=(0.5, 2 + 1j)), ("cky",),
                    points=2, seed=9, tolerances={"default": 1e-7})
    path = tmp_path / "run.toml"
    cfg.dump(path)
    back = RunConfig.load(path)
    assert back.to_dict() == cfg.to_dict()
    args = cli._parser().parse_args(["verify", "--config", str(path), "--points", "5"])
    merged = cli.config_from_args(args)
    assert merged.points == 5 and merged.seed == 9 and merged.suites == ("cky",)


def test_reports_deterministic(tmp_path):
    cfg = dict(metric="orthotoric", params=ParameterRecord(m=2), suites=("cky", "hamiltonian"),
               points=3)
    a = run(RunConfig(**cfg, out=str(tmp_path / "a.json")))
    b = run(RunConfig(**cfg, out=str(tmp_path / "b.json")))
    ja = (tmp_path / "a.json").read_text().replace("a.json", "X")
    jb = (tmp_path / "b.json").read_text().replace("b.json", "X")
    assert ja == jb
    s = a.summary
    for check, mx in s["max"].items():
        assert mx == max(r["residual"] for r in a.records if r["check"] == check)
    assert len(a.informational["cky.normal_form_skipped"]) == 3


def test_guard_error(monkeypatch):
    tight = catalog.build_kerr_nut_ads(2, 0, box=((0.4, 0.40001), (0.4, 0.40001), (-1, 1), (-1, 1)))
    with pytest.raises(GuardError):
        run(RunConfig("kerr_nut_ads", suites=("cky",), points=3), model=tight)
    monkeypatch.setattr(catalog, "build", lambda metric_id, params: tight)
    assert main(["verify", "--metric", "kerr_nut_ads", "--suite", "cky", "--points", "3"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "killing_yano", "verify", "--metric", "flat",
                          "--dim-m", "2", "--points", "2", "--quiet"], capture_output=True)
    assert res.returncode == 0
