import json
import os

import pytest

from hierlab.cli import main, merge_reports
from hierlab.errors import ConfigError

TINY = """\
[scenario]
name = {name}
kind = {kind}

[model]
K = 1

[time]
t1 = 0.2
dt = 2e-3
"""


def write(tmp_path, name, kind, extra=""):
    p = tmp_path / f"{name}.ini"
    p.write_text(TINY.format(name=name, kind=kind) + extra)
    return str(p)


def out_dir(path, name):
    (d,) = [e for e in os.listdir(path) if e.startswith(name + "-")]
    return os.path.join(path, d)


def test_duality_scenario_passes(tmp_path, monkeypatch):
    monkeypatch.delenv("HIERLAB_OUT", raising=False)
    cfg = write(tmp_path, "dual", "duality")
    assert main(["duality", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    d = out_dir(tmp_path / "out", "dual")
    with open(os.path.join(d, "residuals.csv")) as fh:
        assert fh.readline().strip() == "t,k,residual,bound"
    report = json.load(open(os.path.join(d, "report.json")))
    assert report["verdict"] == "PASS" and report["schema"] == 1
    assert report["results"]["nominal"]["direction"] == "both_small"
    assert report["results"]["negative_control"]["direction"] == "both_large"


def test_malformed_config_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[scenario]\nname = x\nkind = duality\n[model]\nK: 1\nwat\n")
    assert main(["duality", "--config", str(p)]) == 2
    err = capsys.readouterr().err
    assert "line 5" in err and "column 1" in err


def test_unknown_key_exits_2_with_location(tmp_path, capsys):
    cfg = write(tmp_path, "u", "duality", "[chaos]\n   nn = 3\n")
    assert main(["duality", "--config", cfg]) == 2
    assert "(line 12, column 4)" in capsys.readouterr().err


def test_chaos_beyond_cap_exits_3(tmp_path):
    cfg = write(tmp_path, "big", "chaos", "[chaos]\nn_list = 2, 40\ncap = 30\n")
    assert main(["chaos", "--config", cfg]) == 3


def test_failing_verdict_exits_1(tmp_path):
    cfg = write(tmp_path, "strict", "existence", "[tolerances]\nresidual = 1e-30\n")
    assert main(["existence", "--config", cfg]) == 1


def test_integrator_guard_exits_1(tmp_path):
    cfg = write(tmp_path, "coarse", "existence").replace("", "")
    text = open(cfg).read().replace("dt = 2e-3", "dt = 0.1").replace("K = 1", "K = 3")
    open(cfg, "w").write(text)
    assert main(["existence", "--config", cfg]) == 1


def test_regimes_json(capsys):
    assert main(["regimes", "2", "1/3", "2", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["results"]["covered"] is True
    assert "Han-Fang" in out["results"]["regimes"]
    assert main(["regimes", "3", "0", "2", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["results"]["covered"] is False
    assert main(["regimes", "3", "3/2", "4"]) == 0


def test_regimes_bad_args_exit_2():
    assert main(["regimes", "0", "1", "2"]) == 2
    assert main(["regimes", "1", "x", "2"]) == 2


def test_determinism_byte_identical(tmp_path, monkeypatch):
    monkeypatch.delenv("HIERLAB_OUT", raising=False)
    cfg = write(tmp_path, "chaos", "chaos", "[chaos]\nn_list = 2, 3, 4\nt1 = 0.2\n")
    for run in ("a", "b"):
        assert main(["chaos", "--config", cfg, "--out", str(tmp_path / run)]) == 0
    a, b = out_dir(tmp_path / "a", "chaos"), out_dir(tmp_path / "b", "chaos")
    assert os.path.basename(a) == os.path.basename(b)
    for f in ("chaos.csv", "report.json"):
        assert open(os.path.join(a, f), "rb").read() == open(os.path.join(b, f), "rb").read()


def test_env_overrides_out(tmp_path, monkeypatch):
    monkeypatch.setenv("HIERLAB_OUT", str(tmp_path / "env"))
    cfg = write(tmp_path, "ch", "chaos", "[chaos]\nn_list = 2, 3\n")
    assert main(["chaos", "--config", cfg, "--out", str(tmp_path / "flag")]) == 0
    assert os.path.isdir(tmp_path / "env") and not os.path.exists(tmp_path / "flag")


def test_seed_flag_changes_digest(tmp_path, monkeypatch):
    monkeypatch.delenv("HIERLAB_OUT", raising=False)
    cfg = write(tmp_path, "ch", "chaos", "[chaos]\nn_list = 2, 3\n")
    main(["chaos", "--config", cfg, "--out", str(tmp_path / "o")])
    main(["chaos", "--config", cfg, "--out", str(tmp_path / "o"), "--seed", "7"])
    assert len(os.listdir(tmp_path / "o")) == 2


def test_batch_with_jobs(tmp_path, monkeypatch):
    monkeypatch.delenv("HIERLAB_OUT", raising=False)
    a = write(tmp_path, "c1", "chaos", "[chaos]\nn_list = 2, 3\n")
    b = write(tmp_path, "r1", "regimes")
    assert main(["run", "--config", a, "--config", b, "--jobs", "2", "--out", str(tmp_path / "o")]) == 0
    assert sorted(e.split("-")[0] for e in os.listdir(tmp_path / "o")) == ["c1", "r1"]
    c = write(tmp_path, "c2", "chaos", "[chaos]\nn_list = 2, 4\n")
    assert main(["chaos", "--config", a, "--config", c, "--jobs", "2"]) == 0


def test_report_merge(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("HIERLAB_OUT", raising=False)
    ch = write(tmp_path, "ch", "chaos", "[chaos]\nn_list = 2, 3\n")
    rg = write(tmp_path, "rg", "regimes")
    out = tmp_path / "o"
    main(["chaos", "--config", ch, "--out", str(out)])
    main(["regimes", "--config", rg, "--out", str(out)])
    p1 = os.path.join(out_dir(out, "ch"), "report.json")
    p2 = os.path.join(out_dir(out, "rg"), "report.json")
    capsys.readouterr()
    assert main(["report", p1]) == 0
    assert json.loads(capsys.readouterr().out) == json.load(open(p1))
    assert main(["report", p1, p2]) == 0
    merged = json.loads(capsys.readouterr().out)
    assert isinstance(merged, list) and len(merged) == 2
    assert [m["kind"] for m in merged] == ["chaos", "regimes"]
    other = json.load(open(p2))
    other["schema"] = 2
    p3 = tmp_path / "v2.json"
    p3.write_text(json.dumps(other))
    assert main(["report", p1, str(p3)]) == 2


def test_merge_reports_function():
    r = {"schema": 1, "kind": "chaos"}
    assert merge_reports([r]) is r
    with pytest.raises(ConfigError):
        merge_reports([r, {"schema": 0}])
    with pytest.raises(ConfigError):
        merge_reports([])
