import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from frictpair import cli
from frictpair.integrators import simulate

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

FIG4A = dict(
    params=dict(m1=1.0, m2=1.0, a1=0.0, a2=200.0, b=0.05),
    initial=dict(x1=0.0, v1=0.15, x2=0.0, v2=0.0),
    t_end=6.0,
    variant="closed_form",
    integrator=dict(kind="event_rk4", h=1e-3, event_tol_t=1e-9),
)


def write(path: Path, doc) -> Path:
    path.write_text(doc if isinstance(doc, str) else yaml.safe_dump(doc))
    return path


def read_csv(path: Path) -> list[list[str]]:
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_fig3a_stays_stuck(tmp_path):
    assert cli.main(["run", str(SCENARIOS / "fig3a.yaml"), "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "trajectory.csv")
    assert rows[0] == cli.TRAJ_HEADER
    assert {r[8] for r in rows[1:]} == {"stick"}
    assert read_csv(tmp_path / "o" / "events.csv") == [cli.EVENT_HEADER]


def test_run_fig4a_summary(tmp_path):
    assert cli.main(["run", str(SCENARIOS / "fig4a.yaml"), "--out", str(tmp_path / "o")]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert tuple(summary) == cli.SUMMARY_KEYS
    assert summary["sync_time"] == pytest.approx(4.7, abs=0.2)
    assert summary["x_star"] == pytest.approx(5e-4) and summary["e_cr"] == pytest.approx(2.5e-5)
    for name in ("bodies.svg", "relative.svg", "switching_plane.svg"):
        assert (tmp_path / "o" / name).read_text().startswith("<svg")
    assert not [p for p in (tmp_path / "o").iterdir() if p.name.startswith(".")]


def test_csv_round_trips_bit_for_bit(tmp_path):
    sc, opts = cli.parse_scenario(FIG4A)
    traj = simulate(sc)
    write(tmp_path / "s.yaml", FIG4A)
    assert cli.cmd_run(str(tmp_path / "s.yaml"), str(tmp_path / "o")) == 0
    data, modes = cli.read_trajectory_csv(tmp_path / "o" / "trajectory.csv", sc.params)
    for k, col in enumerate(("t", "x1", "v1", "x2", "v2")):
        assert np.array_equal(data[:, k], getattr(traj, col))
    assert np.array_equal(data[:, 7], traj.energy)
    assert np.array_equal(modes, traj.mode)


@pytest.mark.parametrize("doc", [
    "params: {m1: 1\n  oops",
    "- just\n- a list\n",
    dict(FIG4A, colour="red"),
    dict(FIG4A, params=dict(FIG4A["params"], mu=0.3)),
    {k: v for k, v in FIG4A.items() if k != "t_end"},
    dict(FIG4A, variant="magic"),
    dict(FIG4A, params=dict(FIG4A["params"], b="lots")),
    dict(FIG4A, integrator=dict(kind="euler", h=1e-4, event_tol_t=1e-9)),
])
def test_parse_errors_exit_1_without_outputs(tmp_path, doc):
    out = tmp_path / "o"
    assert cli.main(["run", str(write(tmp_path / "s.yaml", doc)), "--out", str(out)]) == cli.EXIT_PARSE
    assert not out.exists()


@pytest.mark.parametrize("change", [
    dict(params=dict(FIG4A["params"], b=0.0)),
    dict(params=dict(FIG4A["params"], m1=-1.0)),
    dict(t_end=-2.0),
    dict(integrator=dict(kind="event_rk4", h=1e-3, event_tol_t=1e-2)),
])
def test_validation_errors_exit_2(tmp_path, change, capsys):
    out = tmp_path / "o"
    assert cli.main(["run", str(write(tmp_path / "s.yaml", dict(FIG4A, **change))), "--out", str(out)]) == 2
    assert "validation error" in capsys.readouterr().err
    assert not out.exists()


def test_numeric_strings_are_accepted(tmp_path):
    text = (SCENARIOS / "fig4a.yaml").read_text().replace("1.0e-3", "1e-3").replace("1.0e-9", "1e-9")
    sc, _ = cli.parse_scenario(yaml.safe_load(text))
    assert sc.integrator.h == 1e-3 and sc.integrator.event_tol_t == 1e-9


def test_integration_failure_exits_3(tmp_path, capsys):
    doc = dict(FIG4A, params=dict(m1=1, m2=1, a1=0, a2=500, b=0.5), variant="simplified",
               integrator=dict(kind="euler", h=1.0), t_end=1e4)
    assert cli.main(["run", str(write(tmp_path / "s.yaml", doc)), "--out", str(tmp_path / "o")]) == 3
    assert "t=" in capsys.readouterr().err


def test_svg_does_not_change_numbers(tmp_path):
    write(tmp_path / "s.yaml", FIG4A)
    cli.main(["run", str(tmp_path / "s.yaml"), "--out", str(tmp_path / "a")])
    cli.main(["run", str(tmp_path / "s.yaml"), "--out", str(tmp_path / "b"), "--svg"])
    for name in ("trajectory.csv", "events.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "b" / "switching_plane.svg").exists()
    assert not (tmp_path / "a" / "switching_plane.svg").exists()


def test_geometry_examples(tmp_path, capsys):
    for b, expected in ((0.5, (0.005, 0.0025)), (0.05, (5e-4, 2.5e-5))):
        path = write(tmp_path / "g.yaml", dict(FIG4A, params=dict(FIG4A["params"], b=b)))
        assert cli.main(["geometry", str(path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert (out["x_star"], out["e_cr"]) == pytest.approx(expected)
        assert out["half_period"] == pytest.approx(0.31416, abs=1e-5)
    path = write(tmp_path / "g.yaml", dict(FIG4A, params=dict(FIG4A["params"], b=-1)))
    assert cli.main(["geometry", str(path)]) == 2


CRITICAL = dict(
    params=dict(m1=1.0, m2=1.0, a1=0.0, a2=200.0, b=0.5),
    initial=dict(x1=0.0, v1=math.sqrt(1.05 * 0.0025), x2=0.0, v2=math.sqrt(1.05 * 0.0025)),
    t_end=60.0,
    variant="filippov",
    record_every=5,
    output=dict(outcome_tol=1e-12),
)


@pytest.mark.parametrize("doc", [
    CRITICAL,
    dict(FIG4A, params=dict(FIG4A["params"], b=0.5), initial=dict(x1=0, v1=0.05, x2=0, v2=0)),
    dict(FIG4A, initial=dict(x1=0, v1=0, x2=0, v2=0)),
], ids=["critical", "merged", "origin"])
def test_classify_reproduces_run_summary(tmp_path, capsys, doc):
    path = write(tmp_path / "s.yaml", doc)
    assert cli.main(["run", str(path), "--out", str(tmp_path / "o")]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    capsys.readouterr()
    assert cli.main(["classify", str(tmp_path / "o" / "trajectory.csv"), "--params", str(path)]) == 0
    assert json.loads(capsys.readouterr().out) == summary["outcome"]


def test_classify_detects_tampering(tmp_path):
    path = write(tmp_path / "s.yaml", CRITICAL)
    cli.main(["run", str(path), "--out", str(tmp_path / "o")])
    csv_path = tmp_path / "o" / "trajectory.csv"
    rows = read_csv(csv_path)
    rows[100][7] = repr(float(rows[100][7]) * (1 + 1e-9))
    with open(tmp_path / "bad.csv", "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    assert cli.main(["classify", str(tmp_path / "bad.csv"), "--params", str(path)]) == 4
    rows[0][0] = "time"
    with open(tmp_path / "hdr.csv", "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    assert cli.main(["classify", str(tmp_path / "hdr.csv"), "--params", str(path)]) == 4


def test_classify_truncated_csv_exits_5(tmp_path):
    path = write(tmp_path / "s.yaml", CRITICAL)
    cli.main(["run", str(path), "--out", str(tmp_path / "o")])
    lines = (tmp_path / "o" / "trajectory.csv").read_text().splitlines(keepends=True)
    (tmp_path / "short.csv").write_text("".join(lines[:400]))
    assert cli.main(["classify", str(tmp_path / "short.csv"), "--params", str(path)]) == 5


def sweep_doc(values, **base_changes):
    return dict(base=dict(FIG4A, t_end=10.0, **base_changes), sweep={"params.b": values})


def test_sweep_fig4b_bundles_and_overlay(tmp_path):
    assert cli.main(["sweep", str(SCENARIOS / "fig4b_sweep.yaml"), "--out", str(tmp_path / "s"), "-j", "1"]) == 0
    rows = read_csv(tmp_path / "s" / "index.csv")
    assert rows[0][:3] == ["id", "dir", "params.b"]
    assert [r[2] for r in rows[1:]] == ["0.05", "0.2", "0.5"]
    for r in rows[1:]:
        assert r[3] == "ok"
        assert (tmp_path / "s" / r[1] / "summary.json").exists()
    assert (tmp_path / "s" / "overlay_relative.svg").read_text().count("<polyline") == 3
    # regression data: first stick onset comes earlier with more friction, but the
    # eps = 1e-3 synchronisation time is not monotone in b
    sync = [float(r[4]) for r in rows[1:]]
    assert sync == pytest.approx([4.756, 1.747, 2.001], abs=2e-3)
    firsts = []
    for r in rows[1:]:
        ev = read_csv(tmp_path / "s" / r[1] / "events.csv")
        firsts.append(next(float(e[0]) for e in ev[1:] if e[1] == "StickOnset"))
    assert firsts == sorted(firsts, reverse=True)


def test_sweep_is_independent_of_parallelism(tmp_path):
    path = write(tmp_path / "w.yaml", sweep_doc([0.05, 0.2, 0.5]))
    assert cli.main(["sweep", str(path), "--out", str(tmp_path / "a"), "-j", "1"]) == 0
    assert cli.main(["sweep", str(path), "--out", str(tmp_path / "b"), "-j", "2"]) == 0
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*"))
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*"))
    assert files_a == files_b
    for rel in files_a:
        if (tmp_path / "a" / rel).is_file():
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_single_value_sweep_equals_run(tmp_path):
    path = write(tmp_path / "w.yaml", sweep_doc([0.05]))
    cli.main(["sweep", str(path), "--out", str(tmp_path / "s")])
    run = write(tmp_path / "r.yaml", dict(FIG4A, t_end=10.0))
    cli.main(["run", str(run), "--out", str(tmp_path / "r")])
    for name in ("trajectory.csv", "events.csv", "summary.json"):
        assert (tmp_path / "s" / "run_0000" / name).read_bytes() == (tmp_path / "r" / name).read_bytes()


def test_sweep_records_failures(tmp_path):
    path = write(tmp_path / "w.yaml", sweep_doc([0.05, -1.0]))
    assert cli.main(["sweep", str(path), "--out", str(tmp_path / "s"), "-j", "1"]) == 0
    rows = read_csv(tmp_path / "s" / "index.csv")
    assert [r[3] for r in rows[1:]] == ["ok", "validation_error"]
    assert "b must be > 0" in rows[2][-1]
    assert not (tmp_path / "s" / "run_0001").exists()
    path = write(tmp_path / "w2.yaml", sweep_doc([-1.0, -2.0]))
    assert cli.main(["sweep", str(path), "--out", str(tmp_path / "t"), "-j", "1"]) != 0


def test_sweep_size_is_bounded(tmp_path):
    doc = dict(base=FIG4A, sweep={"params.b": list(np.linspace(0.1, 1, 101)),
                                  "params.a2": list(np.linspace(100, 200, 100))})
    doc["sweep"] = {k: [float(v) for v in vals] for k, vals in doc["sweep"].items()}
    assert cli.main(["sweep", str(write(tmp_path / "w.yaml", doc)), "--out", str(tmp_path / "s")]) == 2
    assert not (tmp_path / "s").exists()


def test_sweep_parse_errors(tmp_path):
    bad = write(tmp_path / "w.yaml", dict(base=FIG4A, sweep={"params.b": 0.3}))
    assert cli.main(["sweep", str(bad), "--out", str(tmp_path / "s")]) == 1
    bad = write(tmp_path / "w.yaml", dict(base=FIG4A, sweep={"params.b": [0.3]}, extra=1))
    assert cli.main(["sweep", str(bad), "--out", str(tmp_path / "s")]) == 1
