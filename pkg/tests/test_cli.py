import json
import math
import subprocess
import sys

import pytest
import yaml

from relanticonc import report
from relanticonc.cli import run
from relanticonc.config import RunConfig, load_dist, merge, read_vector, resolve_vector
from relanticonc.errors import ConfigError


def _vec(tmp_path, name, values):
    p = tmp_path / name
    p.write_text("# coefficients\n" + "\n".join(map(str, values)) + "\n")
    return str(p)


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_lcd_command(tmp_path, capsys):
    assert run(["lcd", _vec(tmp_path, "a.txt", [1, 0]), "--gamma", "0.2"]) == 0
    out = _json(capsys)
    assert out["result"]["theta_star"] == pytest.approx(10 / 11, abs=1e-8)
    assert out["report"] == "lcd" and out["config"]["options"]["gamma"] == 0.2
    assert "workers" not in out["config"]


def test_estimate_exact_and_capability(tmp_path, capsys):
    a, b = _vec(tmp_path, "a.txt", [1, 1]), _vec(tmp_path, "b.txt", [1, -1])
    assert run(["estimate", "--alpha-file", a, "--beta-file", b, "--dist", "rademacher"]) == 0
    assert _json(capsys)["result"]["value"] == 0.5
    big = _vec(tmp_path, "big.txt", [1] * 30)
    assert run(["estimate", "--alpha-file", big, "--beta-file", big, "--dist", "rademacher", "--method", "exact"]) == 3
    err = capsys.readouterr().err
    assert err.startswith("error code=3") and "mc" in err


def test_bounds_cauchy_and_constants(tmp_path, capsys):
    assert run(["bounds", "--theorem", "cauchy_interval", "--a", "-5", "--ell", "0.1"]) == 0
    assert _json(capsys)["result"]["rhs"] == pytest.approx(0.2 / (math.pi * 24.01))
    a, b = _vec(tmp_path, "a.txt", [20, 0]), _vec(tmp_path, "b.txt", [0, 1])
    assert run(["bounds", "--theorem", "logconcave", "--alpha-file", a, "--beta-file", b, "--constant", "C=2"]) == 0
    assert _json(capsys)["result"]["rhs"] == pytest.approx(0.1)


@pytest.mark.parametrize(
    "argv,code,key",
    [
        (["nonsense"], 2, "argv"),
        (["estimate", "--dist", "laplace:bb=1"], 2, "dist.bb"),
        (["levelset", "--density", "gaussian", "--resolution", "31"], 4, None),
        (["bounds", "--theorem", "logconcave", "--constant", "Z=1"], 2, None),
    ],
)
def test_exit_codes(argv, code, key, capsys):
    assert run(argv) == code
    err = capsys.readouterr().err.strip()
    assert err.startswith(f"error code={code}") and "\n" not in err
    if key:
        assert key in err


def test_config_file_merge_and_unknown_key(tmp_path, capsys):
    a = _vec(tmp_path, "a.txt", [1, 0])
    cfg = tmp_path / "run.yaml"
    cfg.write_text(yaml.safe_dump({"command": "lcd", "inputs": {"vector": a}, "options": {"gamma": 0.05}}))
    assert run(["lcd", "--config", str(cfg)]) == 0
    assert _json(capsys)["result"]["theta_star"] == pytest.approx(0.95, abs=1e-8)
    assert run(["lcd", "--config", str(cfg), "--gamma", "0.2"]) == 0  # flag wins
    assert _json(capsys)["result"]["theta_star"] == pytest.approx(10 / 11, abs=1e-8)
    cfg.write_text(yaml.safe_dump({"command": "lcd", "inputs": {"vector": a}, "options": {"gama": 0.05}}))
    assert run(["lcd", "--config", str(cfg)]) == 2
    assert "options.gama" in capsys.readouterr().err
    cfg.write_text("command: [lcd\n")
    assert run(["lcd", "--config", str(cfg)]) == 2


def test_stress_writes_report_and_trace(tmp_path):
    out = tmp_path / "s.json"
    code = run(["stress", "--dist", "rademacher", "--n", "4", "--restarts", "1", "--steps", "5", "--constant", "C_lcd=0", "-o", str(out)])
    assert code == 0  # a large ratio is a finding, not a failed check
    rep = json.loads(out.read_text())
    assert rep["report"] == "stress" and rep["pass"] is None
    assert (tmp_path / "s_trace.csv").read_text().startswith("step,ratio\n0,")


def test_failed_check_exits_one_after_writing(tmp_path, capsys, monkeypatch):
    from relanticonc import cli

    monkeypatch.setitem(cli.COMMAND_FNS, "lcd", lambda cfg: (report.envelope("lcd", cfg.effective(), {}, passed=False), False))
    out = tmp_path / "o.json"
    assert run(["lcd", "-o", str(out)]) == 1
    assert json.loads(out.read_text())["pass"] is False
    assert capsys.readouterr().err.startswith("error code=1")


def test_report_aggregates(tmp_path, capsys):
    paths = []
    for i, theta in enumerate(("0.1", "0.3")):
        p = tmp_path / f"l{i}.json"
        assert run(["levelset", "--density", "gaussian", "--resolution", "401", "--theta", theta, "-o", str(p)]) == 0
        paths.append(str(p))
    assert run(["report", *paths]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "scenario,lhs,rhs,ratio,pass"
    assert len(lines) > 2


def test_report_rejects_non_reports(tmp_path, capsys):
    p = tmp_path / "x.json"
    p.write_text("[1, 2]")
    assert run(["report", str(p)]) == 2


def test_dumps_deterministic():
    obj = {"b": [1.0, math.inf, float("nan")], "a": 0.1, "c": 3}
    text = report.dumps(obj)
    assert text == report.dumps(dict(reversed(list(obj.items()))))
    assert '"a": 0.10000000000000001' in text and '"inf"' in text and '"c": 3' in text
    assert json.loads(text)["b"][1] == "inf"


def test_row_ratio():
    assert report.row("s", 0.5, 0.0)["ratio"] == math.inf
    r = report.row("s", 0.1, 0.2)
    assert r["ratio"] == 0.5 and r["pass"] is True


def test_runconfig_validation():
    with pytest.raises(ConfigError):
        RunConfig(command="lcd", format="xml")
    with pytest.raises(ConfigError) as e:
        RunConfig.from_dict({"command": "lcd", "colour": 1})
    assert e.value.key == "colour"
    with pytest.raises(ConfigError):
        RunConfig(command="lcd", workers=0)
    eff = RunConfig(command="lcd", dist={"family": "laplace"}).effective()
    assert eff["dist"]["b"] == 1.0 and "workers" not in eff


def test_config_helpers(tmp_path):
    assert merge({"a": 1, "o": {"x": 1}}, {"a": None, "o": {"y": 2}}) == {"a": 1, "o": {"x": 1, "y": 2}}
    assert load_dist("laplace:b=2")["b"] == 2.0
    p = tmp_path / "v.txt"
    p.write_text("1\n\n# skip\n2.5 # inline\n")
    assert read_vector(p).tolist() == [1.0, 2.5]
    p.write_text("x\n")
    with pytest.raises(ConfigError):
        read_vector(p)
    assert resolve_vector("ones", 3, "v").tolist() == [1.0, 1.0, 1.0]
    assert (resolve_vector({"random": "sign", "seed": 1}, 5, "v") == resolve_vector({"random": "sign", "seed": 1}, 5, "v")).all()
    with pytest.raises(ConfigError):
        resolve_vector([1, 2], 3, "v")


def test_console_script_runs(tmp_path):
    a = _vec(tmp_path, "a.txt", [1, 0])
    proc = subprocess.run([sys.executable, "-m", "relanticonc.cli", "lcd", a, "--gamma", "0.2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["theta_star"] == pytest.approx(10 / 11, abs=1e-8)
