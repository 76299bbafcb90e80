import csv
import json

import numpy as np
import pytest

from evidencepath.cli import MAX_TRACE_ROWS, main, resolve_config, ConfigError
from evidencepath.ladders import sigmoid_ladder


def _run(tmp_path, name, **cfg):
    cfg.setdefault("output_dir", str(tmp_path / name))
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg))
    return main(["run", "--config", str(path)]), tmp_path / name


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_ladders_command(capsys):
    assert main(["ladders", "--kind", "sigmoid", "--n", "7", "--alpha", "5"]) == 0
    got = np.array([float(v) for v in capsys.readouterr().out.split()])
    assert np.array_equal(got, sigmoid_ladder(7, 5.0))


def test_truth_radiata(capsys):
    assert main(["truth", "--benchmark", "radiata"]) == 0
    assert abs(float(capsys.readouterr().out.strip()) - 8.857108) < 1e-5


def test_truth_radiocarbon_orders(capsys):
    assert main(["truth", "--benchmark", "radiocarbon", "--orders", "4", "6"]) == 0
    v = float(capsys.readouterr().out.strip())
    assert main(["truth", "--benchmark", "radiocarbon", "--orders", "6", "4"]) == 0
    assert float(capsys.readouterr().out.strip()) == pytest.approx(-v, abs=1e-9)


def test_truth_unavailable(capsys):
    assert main(["truth", "--benchmark", "ggm"]) == 1


def test_run_writes_outputs(tmp_path):
    code, out = _run(tmp_path, "a", benchmark="radiata", n_iter=3000, seed=3)
    assert code == 0
    rows = _rows(out / "summary.csv")
    assert len(rows) == 5
    assert {r["seed"] for r in rows} == {"3"}
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["ladder"] == "sigmoid"
    assert report["settings"]["prior"]["covariance_scaled_by_noise_variance"] is True
    assert "adjusted density" in report["sign_convention"]
    assert report["truth"] == pytest.approx(8.8571)
    est = [float(r["estimate"]) for r in rows]
    assert report["metrics"]["mean"] == pytest.approx(np.mean(est))


def test_rerun_is_identical_apart_from_timing(tmp_path):
    _, a = _run(tmp_path, "a", benchmark="radiocarbon", n_iter=3000, repeats=3)
    _, b = _run(tmp_path, "b", benchmark="radiocarbon", n_iter=3000, repeats=3)
    strip = lambda rows: [{k: v for k, v in r.items() if k != "wall_ms"} for r in rows]
    assert strip(_rows(a / "summary.csv")) == strip(_rows(b / "summary.csv"))


def test_reversed_direction_negates(tmp_path):
    _, a = _run(tmp_path, "f", benchmark="radiocarbon", n_iter=3000, repeats=2)
    _, b = _run(tmp_path, "r", benchmark="radiocarbon", n_iter=3000, repeats=2, direction="reversed")
    ra, rb = json.loads((a / "report.json").read_text()), json.loads((b / "report.json").read_text())
    assert rb["truth"] == pytest.approx(-ra["truth"])
    assert rb["sign_convention"] != ra["sign_convention"]
    assert rb["metrics"]["mean"] == pytest.approx(-ra["metrics"]["mean"], abs=0.5)


def test_ti_run(tmp_path):
    code, out = _run(tmp_path, "ti", benchmark="radiocarbon", method="ti-standard", n_iter=2000, K=10,
                     repeats=2)
    assert code == 0
    rows = _rows(out / "summary.csv")
    assert [r["method"] for r in rows] == ["ti-standard"] * 2


def test_trace_files(tmp_path):
    code, out = _run(tmp_path, "t", benchmark="radiocarbon", n_iter=3000, repeats=2, trace=True)
    assert code == 0
    for name in ("trace.csv", "trace_1.csv"):
        rows = _rows(out / name)
        assert 0 < len(rows) <= MAX_TRACE_ROWS
        assert float(rows[-1]["tau"]) == 1.0


def test_unknown_key_lists_allowed(tmp_path, capsys):
    code, _ = _run(tmp_path, "x", benchmark="radiata", n_iters=10)
    assert code == 2
    err = capsys.readouterr().err
    assert "n_iters" in err and "allowed keys" in err and "n_iter" in err


def test_ti_budget_rule():
    with pytest.raises(ConfigError, match="10 steps per rung"):
        resolve_config({"benchmark": "radiata", "method": "ti-standard", "K": 100, "n_iter": 999})
    resolve_config({"benchmark": "radiata", "method": "ti-standard", "K": 100, "n_iter": 1000})


@pytest.mark.parametrize("method", ["jarzynski", "neti", "bogus"])
def test_unsupported_methods(method):
    with pytest.raises(ConfigError):
        resolve_config({"benchmark": "radiata", "method": method})


def test_bad_values():
    with pytest.raises(ConfigError):
        resolve_config({"benchmark": "radiata", "direction": "sideways"})
    with pytest.raises(ConfigError):
        resolve_config({"method": "neti-diff"})
    with pytest.raises(ConfigError):
        resolve_config({"benchmark": "radiata", "repeats": 0})


def test_unknown_benchmark(tmp_path, capsys):
    code, _ = _run(tmp_path, "u", benchmark="nope")
    assert code == 2
