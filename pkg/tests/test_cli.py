import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from pckhdmr import bench
from pckhdmr.cli import EXIT_CONFIG, main
from pckhdmr.experiments import ExperimentConfig
from pckhdmr.hdmr import BuildConfig, HdmrModel, build

FAST = ["--n-validation", "200"]


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _csv(text):
    head, _, body = text.partition("\n")
    assert head.startswith("# ")
    meta = json.loads(head[2:])
    return meta, list(csv.DictReader(io.StringIO(body))), body


def test_fit_csv_layout(capsys):
    code, out, _ = _run(capsys, "fit", "--function", "table3/1", "--seed", "4", *FAST)
    assert code == 0
    meta, rows, _ = _csv(out)
    assert meta["experiment"] == "fit" and meta["config"]["seed"] == 4
    assert len(rows) == 1
    assert rows[0]["seed"] == "4"
    assert rows[0]["config_hash"] == meta["config_hash"]
    assert float(rows[0]["r2"]) > 0.99


def test_json_format(capsys):
    code, out, _ = _run(capsys, "fit", "--function", "table3/1", "--format", "json", *FAST)
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"meta", "columns", "rows"}
    assert doc["rows"][0]["method"] == "pc-kriging-hdmr"


def test_rerun_gives_identical_body(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"functions": ["table3/2"], "methods": ["pce-hdmr", "kriging-hdmr"],
                               "n_validation": 300, "seed": 11}))
    outs = []
    for k in range(2):
        path = tmp_path / f"out{k}.csv"
        assert _run(capsys, "accuracy", "--config", str(cfg), "--out", str(path))[0] == 0
        outs.append(path.read_text())
    assert _csv(outs[0])[2] == _csv(outs[1])[2]
    _, rows, _ = _csv(outs[0])
    assert [r["method"] for r in rows] == ["pce-hdmr", "kriging-hdmr"]
    assert all(r["seed"] == "11" for r in rows)


@pytest.mark.parametrize("argv", [
    ["fit", "--function", "table3/9"],
    ["fit", "--method", "svr-hdmr"],
    ["cost", "--method", "kriging-full"],
    ["fit", "--seed", "-1"],
    ["fit", "--C", "1.5"],
    ["nonsense"],
])
def test_config_errors_give_record(capsys, argv, monkeypatch):
    calls = []
    monkeypatch.setattr(bench.BenchmarkFunction, "__call__", lambda self, x: calls.append(x))
    code, out, err = _run(capsys, *argv)
    assert code == EXIT_CONFIG
    assert out == ""
    rec = json.loads(err.strip().splitlines()[-1])
    assert rec["error"] == "config" and rec["message"]
    assert calls == [], "rejected config must not evaluate anything"


def test_runtime_error_record(capsys, monkeypatch):
    def boom(self, x):
        raise RuntimeError("solver exploded")
    monkeypatch.setattr(bench.BenchmarkFunction, "__call__", boom)
    code, out, err = _run(capsys, "fit", "--function", "table3/1", *FAST)
    assert code == 1 and out == ""
    rec = json.loads(err)
    assert rec["error"] == "runtime" and "solver exploded" in rec["message"]


def test_missing_config_file(capsys, tmp_path):
    code, _, err = _run(capsys, "fit", "--config", str(tmp_path / "nope.json"))
    assert code == EXIT_CONFIG and json.loads(err)["error"] == "config"


def test_save_model_round_trip(tmp_path, capsys):
    path = tmp_path / "m.json"
    code, out, _ = _run(capsys, "fit", "--function", "table3/3", "--method", "kriging-hdmr",
                        "--save-model", str(path), *FAST)
    assert code == 0 and path.exists()
    m = HdmrModel.load(path)
    bf = bench.get_function("table3/3")
    ref = build(bf, bf.space, cfg=BuildConfig(backend="kriging", seed=0))
    X = bf.space.uniform(np.random.default_rng(0), 100)
    np.testing.assert_allclose(m(X), ref(X), rtol=1e-12, atol=1e-12)


def test_coupling_additive_identity_and_seed_robustness(capsys):
    code, out, _ = _run(capsys, "coupling", "--function", "additive/5", "--replicates", "3")
    assert code == 0
    _, rows, _ = _csv(out)
    assert len(rows) == 15
    for r in rows:
        i = int(r["row"])
        assert [int(r[f"x{j}"]) for j in range(1, 6)] == [int(j == i) for j in range(1, 6)]


def test_c_sweep_cardinality(capsys):
    code, out, _ = _run(capsys, "c-sweep", "--function", "table3/1", "--C", "0.2,0.5",
                        "--replicates", "3", *FAST)
    assert code == 0
    _, rows, _ = _csv(out)
    assert sum(r["kind"] == "median" for r in rows) == 2
    assert sum(r["kind"] == "replicate" for r in rows) == 6
    assert {r["seed"] for r in rows if r["kind"] == "replicate"} == {"0", "1", "2"}


def test_c_sweep_defaults():
    cfg = ExperimentConfig.create("c-sweep")
    assert cfg.replicates == 10 and cfg.functions == ["rosenbrock9"]


def test_cost_and_sensitivity_small(capsys):
    code, out, _ = _run(capsys, "cost", "--function", "cost/10", "--method", "pc-kriging-hdmr")
    assert code == 0
    _, rows, _ = _csv(out)
    assert rows[0]["full_second_order"] == "2276"
    assert int(rows[0]["pc-kriging-hdmr"]) <= 250
    code, out, _ = _run(capsys, "sensitivity", "--function", "table3/1", "--mc-samples", "2000")
    assert code == 0
    _, rows, _ = _csv(out)
    assert [r["order"] for r in rows] == ["1", "1", "2"]


def test_never_evaluates_outside_box(capsys, monkeypatch):
    orig = bench.BenchmarkFunction.__call__

    def checked(self, x):
        x = np.asarray(x, dtype=float)
        assert np.all(x >= self.space.lower) and np.all(x <= self.space.upper), self.name
        return orig(self, x)
    monkeypatch.setattr(bench.BenchmarkFunction, "__call__", checked)
    assert _run(capsys, "cantilever", "--budget", "60", "--n-validation", "300")[0] == 0
    assert _run(capsys, "accuracy", "--function", "table3/2", *FAST)[0] == 0


def test_module_entry_point(tmp_path):
    out = tmp_path / "o.json"
    proc = subprocess.run([sys.executable, "-m", "pckhdmr", "fit", "--function", "table3/1",
                           "--format", "json", "--out", str(out), *FAST],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["rows"][0]["function"] == "table3/1"
    proc = subprocess.run([sys.executable, "-m", "pckhdmr", "fit", "--function", "bogus"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_CONFIG
    assert json.loads(proc.stderr)["type"] == "ConfigError"
