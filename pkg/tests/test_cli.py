import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from quadpath import cli
from quadpath.config import parse_config, resolve_path
from quadpath.output import csv_columns, emit_csv, emit_plots, log_table, read_csv
from quadpath.simulator import run_scenario
import dataclasses

SHORT = ["--t-end", "0.2"]


def short_log(mode="state", t_end=0.2):
    cfg = dataclasses.replace(parse_config(resolve_path("helix_state")), t_end=t_end,
                              controller_mode=mode)
    return (cfg,) + run_scenario(cfg)


@pytest.mark.parametrize("mode, ncols", [("state", 27), ("output", 47)])
def test_csv_columns_and_round_trip(tmp_path, mode, ncols):
    _, log, _ = short_log(mode)
    path = emit_csv(log, tmp_path / "log.csv")
    header, data = read_csv(path)
    assert header == list(csv_columns(mode)) and len(header) == ncols
    assert header[:4] == ["t", "x", "y", "z"] and header[19:27] == ["u1", "u2", "u3", "u4", "F1", "F2", "F3", "F4"]
    assert data.shape == (len(log), ncols)
    assert data.tobytes() == log_table(log).tobytes()


def test_one_step_log_gives_two_line_csv(tmp_path):
    cfg, log, _ = short_log(t_end=0.002)
    one = dataclasses.replace(log, **{f.name: getattr(log, f.name)[:1] for f in dataclasses.fields(log)
                                      if isinstance(getattr(log, f.name), np.ndarray)})
    lines = emit_csv(one, tmp_path / "one.csv").read_text().splitlines()
    assert len(lines) == 2 and len(lines[1].split(",")) == 27


def test_svgs_are_well_formed_with_one_polyline_per_series(tmp_path):
    cfg, log, m = short_log("output")
    from quadpath.output import reference_points
    paths = emit_plots(log, m, tmp_path, reference_points(cfg, log))
    counts = {p.name: len(ET.parse(p).getroot().findall("{http://www.w3.org/2000/svg}polyline")) for p in paths}
    assert counts == {"deviations.svg": 4, "controls.svg": 4, "path_xy.svg": 2, "path_xz.svg": 2}


def test_validate_every_bundled_scenario(capsys):
    for name in ("helix_state", "helix_output", "line_state", "circle_output"):
        assert cli.main(["validate", "--config", name]) == 0


def test_run_success_writes_artifacts(tmp_path):
    out = tmp_path / "run"
    code = cli.main(["run", "--config", "line_state", "--out", str(out), "--t-end", "15"])
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert {"log.csv", "report.json", "MANIFEST", "scenario.cfg", "deviations.svg", "controls.svg",
            "path_xy.svg", "path_xz.svg"} <= names
    header, data = read_csv(out / "log.csv")
    assert data.shape[0] == 15001  # one row per step plus the final state
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "complete" and report["metrics"]["objectives_met"] is True
    assert (out / "MANIFEST").read_text().startswith("status: complete")


def test_run_objectives_not_met_exit_1(tmp_path):
    assert cli.main(["run", "--config", "helix_state", "--out", str(tmp_path), *SHORT]) == 1


def test_reports_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        cli.main(["run", "--config", "helix_state", "--out", str(d), *SHORT])
    ra, rb = (json.loads((d / "report.json").read_text()) for d in (a, b))
    ra.pop("wall_clock_s"), rb.pop("wall_clock_s")
    assert ra == rb
    assert (a / "log.csv").read_bytes() == (b / "log.csv").read_bytes()


def test_config_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("curve.type = line\nreference.v_star = 1\ndt = -0.1\n")
    assert cli.main(["validate", "--config", str(bad)]) == 2
    assert "bad.cfg:3" in capsys.readouterr().err
    assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert cli.main(["sweep", "--config", "helix_state", "--param", "curve.type", "--values", "1"]) == 2
    assert cli.main(["sweep", "--config", "helix_state", "--param", "k", "--values", "a,b"]) == 2


def test_abort_exit_3_keeps_manifest(tmp_path):
    cfg = tmp_path / "centre.cfg"
    cfg.write_text("curve.type = circle\ncurve.radius = 1\nreference.v_star = 0.1\n"
                   "initial.e1 = 0.999999999\nt_end = 1\n")
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 3
    manifest = (out / "MANIFEST").read_text()
    assert manifest.startswith("status: aborted") and "detail:" in manifest
    assert json.loads((out / "report.json").read_text())["status"] == "aborted"


def test_unwritable_output_exit_4(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["run", "--config", "helix_state", "--out", str(blocker / "sub"), *SHORT]) == 4


def test_overrides_apply(tmp_path):
    out = tmp_path / "o"
    cli.main(["run", "--config", "helix_state", "--out", str(out), "--mode", "output",
              "--dt", "0.002", "--t-end", "0.1"])
    header, data = read_csv(out / "log.csv")
    assert len(header) == 47 and data.shape[0] == 51


def test_sweep_table(tmp_path):
    out = tmp_path / "sw"
    code = cli.main(["sweep", "--config", "helix_output", "--param", "k", "--values", "5,10",
                     "--out", str(out), *SHORT])
    assert code == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0].startswith("k,status,speed_error,distance") and len(rows) == 3
    assert (out / "k=5.0" / "log.csv").exists() and (out / "k=10.0" / "MANIFEST").exists()
