import csv
import json
import math

import numpy as np
import pytest

from latticeloc.cli import (
    ConfigError,
    main,
    parse_config,
    parse_config_text,
    run_command,
)
from latticeloc.io import SCHEMA_VERSION, Report, Table, dumps, format_float, write_report

MINIMAL = """
command = "vacuum"
[lattice]
dimension = 1
sites_per_axis = 64
spacing = 1.0
mass = 0.5
"""

GOLDEN = ["bell", "commutator", "elp", "localise", "oracle_n1", "oracle_n2", "oracle_n3", "renorm",
          "spread", "spread_natural", "vacuum", "vacuum_massless", "vacuum_sweep"]


def _close(a, b, path="$"):
    if isinstance(b, dict):
        assert isinstance(a, dict) and a.keys() == b.keys(), path
        for k in b:
            _close(a[k], b[k], f"{path}.{k}")
    elif isinstance(b, list):
        assert isinstance(a, list) and len(a) == len(b), path
        for i, (x, y) in enumerate(zip(a, b)):
            _close(x, y, f"{path}[{i}]")
    elif isinstance(b, float) and not isinstance(b, bool):
        assert isinstance(a, (int, float)), path
        assert math.isclose(a, b, rel_tol=1e-7, abs_tol=1e-12), (path, a, b)
    else:
        assert a == b, (path, a, b)


def test_minimal_config_defaults():
    cfg = parse_config_text(MINIMAL)
    assert cfg.lattice["boundary"] == "periodic"
    assert cfg.lattice["stencil"] == "forward"
    assert cfg.output == {"path": "results", "format": "both"}
    assert cfg.experiment["axis"] == 0


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="masss"):
        parse_config_text(MINIMAL.replace("mass =", "masss ="))
    with pytest.raises(ConfigError, match="windw"):
        parse_config_text(MINIMAL + "[experiment]\nwindw = [1.0, 2.0]\n")
    with pytest.raises(ConfigError, match="extra"):
        parse_config_text("extra = 1\n" + MINIMAL)


def test_parse_error_has_line_number():
    with pytest.raises(ConfigError, match="line 4"):
        parse_config_text('command = "vacuum"\n[lattice]\ndimension = 1\nspacing = = 2\n')


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "nope.toml")


def test_missing_required_keys():
    with pytest.raises(ConfigError, match="region"):
        parse_config_text(MINIMAL.replace('"vacuum"', '"elp"') + "[experiment]\ncenters = [1.0]\n")
    with pytest.raises(ConfigError, match="lattice"):
        parse_config_text('command = "vacuum"\n')
    with pytest.raises(ConfigError, match="mass"):
        parse_config_text(MINIMAL.replace("mass = 0.5", ""))


def test_command_mismatch():
    with pytest.raises(ConfigError):
        parse_config_text(MINIMAL, "renorm")
    cfg = parse_config_text(MINIMAL)
    with pytest.raises(ConfigError):
        run_command("bell", cfg)


def test_round_trip(configs_dir):
    for path in sorted(configs_dir.glob("*.toml")):
        cfg = parse_config(path)
        again = parse_config_text(cfg.to_toml())
        assert again == cfg, path.name


def test_json_formatting():
    assert format_float(1.0) == "1.0"
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(-math.inf) == "-inf"
    text = dumps({"a": [1.0, 2], "b": math.nan, "c": np.float64(1e-300), "d": True})
    back = json.loads(text)
    assert back == {"a": [1.0, 2], "b": "nan", "c": 1e-300, "d": True}


def test_write_report_formats(tmp_path):
    rep = Report("demo", {"x": 0.1, "nested": {"y": 2.5}},
                 {"tab": Table.from_columns(d=[1, 2, 3], value=[0.5, 0.25, 1 / 3])}, {"ok": True})
    files = write_report(rep, tmp_path / "csv", "csv")
    assert {f.name for f in files} == {"demo_tab.csv", "demo_summary.csv"}
    rows = list(csv.reader(open(tmp_path / "csv" / "demo_tab.csv")))
    assert rows[0] == ["d", "value"]
    files = write_report(rep, tmp_path / "json", "json")
    payload = json.loads(files[0].read_text())
    assert payload["schema_version"] == SCHEMA_VERSION
    write_report(rep, tmp_path / "both", "both")
    payload = json.loads((tmp_path / "both" / "demo.json").read_text())
    rows = list(csv.reader(open(tmp_path / "both" / "demo_tab.csv")))[1:]
    np.testing.assert_allclose([float(r[1]) for r in rows], payload["tables"]["tab"]["value"], rtol=1e-12)
    summary = dict(csv.reader(open(tmp_path / "both" / "demo_summary.csv")))
    assert float(summary["nested.y"]) == payload["result"]["nested"]["y"]
    with pytest.raises(ValueError):
        write_report(rep, tmp_path, "xml")


def test_unequal_columns():
    with pytest.raises(ValueError):
        Table.from_columns(a=[1, 2], b=[1])


@pytest.mark.parametrize("name", GOLDEN)
def test_golden(name, configs_dir, golden_dir, tmp_path):
    cfg = parse_config(configs_dir / f"{name}.toml")
    assert main([cfg.command, "--config", str(configs_dir / f"{name}.toml"), "--out", str(tmp_path),
                 "--format", "json"]) == 0
    got = json.loads((tmp_path / f"{cfg.command}.json").read_text())
    _close(got, json.loads((golden_dir / f"{name}.json").read_text()))


def test_determinism_byte_identical(configs_dir, tmp_path):
    for name in ("vacuum", "localise", "renorm"):
        cfg = configs_dir / f"{name}.toml"
        command = parse_config(cfg).command
        main([command, "--config", str(cfg), "--out", str(tmp_path / "a"), "--format", "both"])
        main([command, "--config", str(cfg), "--out", str(tmp_path / "b"), "--format", "both"])
        for f in sorted((tmp_path / "a").iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_assert_flag_sets_exit_status(tmp_path, capsys):
    assert main(["bell", "--out", str(tmp_path)]) == 0
    assert main(["bell", "--out", str(tmp_path), "--assert"]) == 1
    assert "check failed" in capsys.readouterr().err


def test_assert_passes_on_good_config(configs_dir, tmp_path):
    assert main(["renorm", "--config", str(configs_dir / "renorm.toml"), "--out", str(tmp_path), "--assert"]) == 0


def test_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(MINIMAL.replace("mass =", "masss ="))
    assert main(["vacuum", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "masss" in capsys.readouterr().err
    assert main(["vacuum", "--out", str(tmp_path)]) == 2
    # module errors carry the subcommand name
    bad.write_text(MINIMAL + "[experiment]\nwindow = [10.0, 12.0]\n")
    assert main(["vacuum", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "vacuum:" in capsys.readouterr().err


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["bell", "--out", str(blocker / "sub")]) == 2


def test_threads_hint(configs_dir, tmp_path, monkeypatch):
    cfg = configs_dir / "vacuum_sweep.toml"
    main(["vacuum", "--config", str(cfg), "--out", str(tmp_path / "one"), "--format", "json"])
    monkeypatch.setenv("LATTICELOC_THREADS", "3")
    main(["vacuum", "--config", str(cfg), "--out", str(tmp_path / "three"), "--format", "json"])
    assert (tmp_path / "one" / "vacuum.json").read_bytes() == (tmp_path / "three" / "vacuum.json").read_bytes()
    monkeypatch.setenv("LATTICELOC_THREADS", "many")
    assert main(["vacuum", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2


def test_cli_reference_outputs(configs_dir, tmp_path):
    main(["vacuum", "--config", str(configs_dir / "vacuum.toml"), "--out", str(tmp_path)])
    fit = json.loads((tmp_path / "vacuum.json").read_text())["result"]["falloff"]
    assert fit["scale"] == pytest.approx(5.01, abs=0.01)
    header = next(csv.reader(open(tmp_path / "vacuum_correlator.csv")))
    assert header == ["distance_lattice_units", "distance_physical", "value"]
    main(["oracle", "--config", str(configs_dir / "oracle_n3.toml"), "--out", str(tmp_path)])
    assert json.loads((tmp_path / "oracle.json").read_text())["result"]["all_pass"]
