import csv
import json

import pytest

from plate_junction.cli import ConfigError, RunConfig, main, parse_levels


@pytest.mark.parametrize("text,want", [("1..4", [1, 2, 3, 4]), ("2-3", [2, 3]), ("3", [3]), ("1,3", [1, 3]), ([2, 1], [1, 2])])
def test_parse_levels(text, want):
    assert parse_levels(text) == want


@pytest.mark.parametrize("text", ["0..2", "a..b", ""])
def test_bad_levels(text):
    with pytest.raises(ConfigError):
        parse_levels(text)


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(experiment="example1", theta=3.5).validate()
    with pytest.raises(ConfigError):
        RunConfig(experiment="example1", constraint_mode="multipliers").validate()
    with pytest.raises(ConfigError):
        RunConfig(experiment="nope").validate()


def test_example1_outputs(tmp_path):
    out = tmp_path / "ex1"
    assert main(["example1", "--levels", "1..2", "--out", str(out)]) == 0
    rows = list(csv.reader(open(out / "convergence.csv")))
    assert len(rows) == 3
    header = rows[0]
    assert sum(h.endswith("_order") for h in header) == 12
    assert len(header) == 3 + 24
    # scientific notation with 7 significant digits
    assert "e" in rows[2][3] and len(rows[2][3].split("e")[0].replace("-", "").replace(".", "")) == 7
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["status"] == "ok"
    assert all(d["relative_residual"] <= 1e-10 for d in diag["levels"])
    assert "ref order" in (out / "convergence.md").read_text()


def test_outputs_are_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["example2", "--levels", "1", "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "convergence.csv").read_bytes() == (tmp_path / "b" / "convergence.csv").read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"experiment": "example2", "levels": "1..2", "out": str(tmp_path / "cfg")}))
    assert main(["--config", str(cfg), "--levels", "1", "--infsup"]) == 0
    rows = list(csv.reader(open(tmp_path / "cfg" / "convergence.csv")))
    assert len(rows) == 2
    diag = json.loads((tmp_path / "cfg" / "diagnostics.json").read_text())
    assert diag["levels"][0]["beta_h"] > 0


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"experiment": "example1", "colour": 3}')
    assert main(["--config", str(cfg)]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_selftest(tmp_path):
    out = tmp_path / "self"
    assert main(["selftest", "--out", str(out)]) == 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert all(d["passed"] for d in diag["levels"])
