import csv
import json

import pytest

from osl import __version__
from osl.cli import config_hash, main


def run(tmp_path, *argv):
    return main(list(argv) + ["--out-dir", str(tmp_path)])


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_verify_mixed_fixture(tmp_path):
    assert run(tmp_path, "verify-mixed", "--config", "thm1_power.json") == 0
    rows = read_csv(tmp_path / "mixed.csv")
    assert len(rows) == 61
    rep = json.loads((tmp_path / "mixed.json").read_text())
    assert rep["version"] == __version__ and len(rep["config_hash"]) == 64
    assert {r["config_hash"] for r in rows} == {rep["config_hash"]}
    assert (tmp_path / "mixed.png").stat().st_size > 0


def test_weight_constants_fixture(tmp_path):
    code = run(tmp_path, "weight-constants", "--space", "grid256.json", "--weight",
               "pow_-0.25.json", "--u", "pow_-0.25.json", "--p", "2")
    assert code == 0
    rep = json.loads((tmp_path / "weight_constants.json").read_text())
    for key in ("a_1", "a_inf", "a_p", "rh", "a_p_u"):
        assert key in rep["constants"], key
        val = rep["constants"][key]
        for x in (val.values() if isinstance(val, dict) else [val]):
            assert x >= 1.0 - 1e-12


@pytest.mark.parametrize("content", ["", "{}", "{not json", '{"space": {"kind": "moon"}}'])
def test_config_errors(tmp_path, capsys, content):
    cfg = write(tmp_path, "cfg.json", content)
    assert run(tmp_path, "verify-mixed", "--config", cfg) == 1
    assert "config error" in capsys.readouterr().err


def test_missing_field_reports_path(tmp_path, capsys):
    cfg = write(tmp_path, "cfg.json", {"space": "grid256.json", "kernel": "hilbert", "eps": 0.5})
    assert run(tmp_path, "sparse-dominate", "--config", cfg) == 1
    assert "'f'" in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert run(tmp_path, "verify-mixed", "--config", "no_such_file.json") == 1
    assert "no_such_file.json" in capsys.readouterr().err


def test_sparse_zero_certificate(tmp_path):
    assert run(tmp_path, "sparse-dominate", "--config", "sparse_zero.json") == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["holds"] and cert["carleson_family_size"] == 0
    assert all(float(r["abs_Tbf"]) == 0 for r in read_csv(tmp_path / "domination.csv"))


def test_dyadic_build_single_point(tmp_path):
    assert run(tmp_path, "dyadic-build", "--points", "1") == 0
    systems = json.loads((tmp_path / "systems.json").read_text())["systems"]
    assert all(len(s["cubes"]) == 1 for s in systems)


def test_dyadic_build_hk(tmp_path):
    assert run(tmp_path, "dyadic-build", "--space", "hk128.json") == 0
    inv = json.loads((tmp_path / "invariants.json").read_text())
    assert inv["covering"]["failures"] == []


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, "verify-mixed", "--config", "thm1_power.json", "--seed", "3") == 0
    assert (a / "mixed.csv").read_bytes() == (b / "mixed.csv").read_bytes()
    assert (a / "mixed.json").read_bytes() == (b / "mixed.json").read_bytes()
    assert b"\r\n" in (a / "mixed.csv").read_bytes()


def test_hash_changes_with_config(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(a, "dyadic-build", "--points", "8")
    run(b, "dyadic-build", "--points", "16")
    ha = json.loads((a / "systems.json").read_text())["config_hash"]
    hb = json.loads((b / "systems.json").read_text())["config_hash"]
    assert ha != hb
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})


def test_budget_failure(tmp_path, capsys):
    assert run(tmp_path, "verify-mixed", "--config", "thm1_power.json", "--budget", "1e-6") == 2
    assert "budget failure" in capsys.readouterr().err
    assert (tmp_path / "mixed.csv").exists()


def test_hypothesis_failure(tmp_path, capsys):
    w = write(tmp_path, "w.json", {"kind": "step", "at": 0.5, "lo": 1e-200, "hi": 1e200})
    assert run(tmp_path, "weight-constants", "--space", "grid256.json", "--weight", w) == 3
    assert "hypothesis failure" in capsys.readouterr().err


def test_data_dir_env(tmp_path, monkeypatch):
    data = tmp_path / "data"
    data.mkdir()
    write(data, "tiny.json", {"kind": "uniform", "n": 16, "shifts": 1})
    monkeypatch.setenv("OSL_DATA_DIR", str(data))
    monkeypatch.chdir(tmp_path)
    assert run(tmp_path / "out", "dyadic-build", "--space", "tiny.json") == 0
    monkeypatch.delenv("OSL_DATA_DIR")
    assert run(tmp_path / "out", "dyadic-build", "--space", "tiny.json") == 1


def test_hormander(tmp_path):
    cfg = write(tmp_path, "h.json", {"space": {"kind": "uniform", "n": 64, "shifts": 3},
                                     "kernel": "hilbert"})
    assert run(tmp_path, "hormander", "--config", cfg) == 0
    rep = json.loads((tmp_path / "hormander.json").read_text())
    assert rep["kernel"] == "hilbert" and rep["H1"] > 0


def test_threads_flag(tmp_path, monkeypatch):
    monkeypatch.delenv("OMP_NUM_THREADS", raising=False)
    assert run(tmp_path, "dyadic-build", "--points", "4", "--threads", "1") == 0
    import os
    assert os.environ["OMP_NUM_THREADS"] == "1"
