"""Command-line front end.

Scenario files are YAML mappings::

    params: {m1: 1, m2: 1, a1: 0, a2: 200, b: 0.05}
    initial: {x1: 0, v1: 0.15, x2: 0, v2: 0}
    t_end: 6
    variant: closed_form            # closed_form | simplified | filippov
    integrator: {kind: event_rk4, h: 1e-3, event_tol_t: 1e-9}   # or {kind: euler, h: 1e-4}
    forcing: {kind: zero}           # constant: value; sinusoid: amplitude, omega, phase
    initial_mode: auto              # auto | stick | slip+ | slip-
    record_every: 1
    tol_v: 1e-9
    output: {svg: false, sync_eps: 1e-3, outcome_tol: null}

Sweep files hold the same mapping under ``base`` plus ``sweep``, a mapping
from dotted field names (``params.b``) to explicit value lists.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import itertools
import json
import math
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import plots
from .analysis import InsufficientDataError, classify_outcome, sliding_geometry, stick_intervals, sync_time
from .core import Forcing, Mode, Params, ParameterError, State, validate
from .dynamics import ModelVariant
from .integrators import Euler, EventRK4, IntegrationError, Scenario, Trajectory, simulate

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_INTEGRATION, EXIT_SCHEMA, EXIT_DATA = range(6)
MAX_SWEEP = 10_000
TRAJ_HEADER = ["t", "x1", "v1", "x2", "v2", "z", "zdot", "E", "mode"]
EVENT_HEADER = ["t", "kind", "x1", "v1", "x2", "v2"]
SUMMARY_KEYS = ("sync_time", "outcome", "e_cr", "x_star", "stick_intervals", "terminal_energy")
ENERGY_RTOL = 1e-12  # tamper check on the E column


class ParseError(ValueError):
    """Unreadable or structurally wrong input document."""


class SchemaError(ValueError):
    """A trajectory CSV does not match the run output schema."""


# -- scenario documents -----------------------------------------------------------

_SECTIONS = {
    "params": {"m1", "m2", "a1", "a2", "b"},
    "initial": {"x1", "v1", "x2", "v2"},
    "integrator": {"kind", "h", "event_tol_t"},
    "forcing": {"kind", "value", "amplitude", "omega", "phase"},
    "output": {"svg", "sync_eps", "outcome_tol"},
}
_TOP = set(_SECTIONS) | {"t_end", "variant", "initial_mode", "record_every", "tol_v"}
_REQUIRED = ("params", "initial", "t_end")


@dataclass(frozen=True)
class OutputOptions:
    svg: bool = False
    sync_eps: float = 1e-3
    outcome_tol: float | None = None  # absolute energy tolerance; None -> 1e-6 * e_cr

    def tol_for(self, p: Params) -> float:
        return self.outcome_tol if self.outcome_tol is not None else 1e-6 * sliding_geometry(p).e_cr


def _num(value, where: str) -> float:
    # YAML 1.1 reads "1e-3" as a string, so numeric strings are accepted
    if isinstance(value, bool):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    raise ParseError(f"{where}: expected a number, got {value!r}")


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name, {})
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise ParseError(f"{name}: expected a mapping")
    unknown = set(sec) - _SECTIONS[name]
    if unknown:
        raise ParseError(f"{name}: unknown keys {sorted(map(str, unknown))}")
    return sec


def load_document(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a mapping at top level")
    return doc


def parse_params(doc: dict) -> Params:
    sec = _section(doc, "params")
    missing = _SECTIONS["params"] - set(sec) - {"a1"}
    if missing:
        raise ParseError(f"params: missing {sorted(missing)}")
    vals = {k: _num(sec.get(k, 0.0), f"params.{k}") for k in ("m1", "m2", "a1", "a2", "b")}
    return Params(**vals)


def parse_scenario(doc: dict) -> tuple[Scenario, OutputOptions]:
    """Scenario and output options from a parsed document.

    Raises ParseError for structural problems and ValueError (including
    ParameterError) for physically invalid values.
    """
    unknown = set(doc) - _TOP
    if unknown:
        raise ParseError(f"unknown keys {sorted(map(str, unknown))}")
    for key in _REQUIRED:
        if key not in doc:
            raise ParseError(f"missing required key {key!r}")
    p = validate(parse_params(doc))

    ini = _section(doc, "initial")
    s0 = State(*(_num(ini.get(k, 0.0), f"initial.{k}") for k in ("x1", "v1", "x2", "v2")))

    variant_name = doc.get("variant", "closed_form")
    try:
        variant = ModelVariant(variant_name)
    except ValueError:
        raise ParseError(f"variant: unknown {variant_name!r}") from None

    isec = _section(doc, "integrator")
    kind = isec.get("kind", "event_rk4")
    if kind == "euler":
        if "event_tol_t" in isec:
            raise ParseError("integrator: event_tol_t only applies to event_rk4")
        integ = Euler(_num(isec.get("h", 1e-4), "integrator.h"))
    elif kind == "event_rk4":
        integ = EventRK4(_num(isec.get("h", 1e-3), "integrator.h"),
                         _num(isec.get("event_tol_t", 1e-9), "integrator.event_tol_t"))
    else:
        raise ParseError(f"integrator.kind: unknown {kind!r}")

    fsec = _section(doc, "forcing")
    fkind = fsec.get("kind", "zero")
    allowed = {"zero": {"kind"}, "constant": {"kind", "value"},
               "sinusoid": {"kind", "amplitude", "omega", "phase"}}
    if fkind not in allowed:
        raise ParseError(f"forcing.kind: unknown {fkind!r}")
    extra = set(fsec) - allowed[fkind]
    if extra:
        raise ParseError(f"forcing: keys {sorted(extra)} do not apply to {fkind}")
    if fkind == "zero":
        forcing = Forcing.zero()
    elif fkind == "constant":
        forcing = Forcing.constant(_num(fsec.get("value", 0.0), "forcing.value"))
    else:
        forcing = Forcing.sinusoid(_num(fsec.get("amplitude", 0.0), "forcing.amplitude"),
                                   _num(fsec.get("omega", 0.0), "forcing.omega"),
                                   _num(fsec.get("phase", 0.0), "forcing.phase"))

    mode_name = doc.get("initial_mode", "auto")
    if mode_name in (None, "auto"):
        mode = None
    else:
        try:
            mode = Mode(mode_name)
        except ValueError:
            raise ParseError(f"initial_mode: unknown {mode_name!r}") from None

    rec = doc.get("record_every", 1)
    if isinstance(rec, bool) or not isinstance(rec, int):
        raise ParseError("record_every: expected an integer")

    osec = _section(doc, "output")
    svg = osec.get("svg", False)
    if not isinstance(svg, bool):
        raise ParseError("output.svg: expected true or false")
    tol = osec.get("outcome_tol")
    opts = OutputOptions(svg, _num(osec.get("sync_eps", 1e-3), "output.sync_eps"),
                         None if tol is None else _num(tol, "output.outcome_tol"))
    if not opts.sync_eps > 0:
        raise ValueError("output.sync_eps must be > 0")
    if opts.outcome_tol is not None and not opts.outcome_tol >= 0:
        raise ValueError("output.outcome_tol must be >= 0")

    sc = Scenario(p, s0, _num(doc["t_end"], "t_end"), variant, integ, forcing, mode, rec,
                  _num(doc.get("tol_v", 1e-9), "tol_v"))
    return sc, opts


# -- output bundles -----------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))  # shortest round-tripping form, at most 17 significant digits


def trajectory_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJ_HEADER)
    z, zd = traj.z, traj.zdot
    for i in range(len(traj)):
        w.writerow([_fmt(traj.t[i]), _fmt(traj.x1[i]), _fmt(traj.v1[i]), _fmt(traj.x2[i]),
                    _fmt(traj.v2[i]), _fmt(z[i]), _fmt(zd[i]), _fmt(traj.energy[i]),
                    Mode.from_code(int(traj.mode[i])).value])
    return buf.getvalue()


def events_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENT_HEADER)
    for ev in traj.events:
        s = ev.state_at
        w.writerow([_fmt(ev.time), ev.label, _fmt(s.x1), _fmt(s.v1), _fmt(s.x2), _fmt(s.v2)])
    return buf.getvalue()


def outcome_dict(p: Params, traj: Trajectory, tol: float) -> dict:
    try:
        return classify_outcome(p, traj, tol).as_dict()
    except InsufficientDataError as exc:
        return {"class": "Unclassified", "reason": str(exc)}


def summary(traj: Trajectory, opts: OutputOptions) -> dict:
    p = traj.scenario.params
    geo = sliding_geometry(p)
    return {
        "sync_time": sync_time(traj, opts.sync_eps),
        "outcome": outcome_dict(p, traj, opts.tol_for(p)),
        "e_cr": geo.e_cr,
        "x_star": geo.x_star,
        "stick_intervals": [[iv.t_start, iv.t_end] for iv in stick_intervals(traj)],
        "terminal_energy": float(traj.energy[-1]),
    }


def bundle_files(traj: Trajectory, opts: OutputOptions) -> dict[str, str]:
    files = {
        "trajectory.csv": trajectory_csv(traj),
        "events.csv": events_csv(traj),
        "summary.json": json.dumps(summary(traj, opts), indent=2) + "\n",
    }
    if opts.svg:
        files["bodies.svg"] = plots.body_portraits(traj)
        files["relative.svg"] = plots.relative_portrait(traj)
        files["switching_plane.svg"] = plots.switching_plane(traj)
    return files


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_bundle(out_dir: Path, files: dict[str, str]):
    """Write every file of a bundle into a fresh sibling directory, then swap it in."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=out_dir.parent, prefix=f".{out_dir.name}."))
    try:
        for name, text in files.items():
            (tmp / name).write_text(text)
        if out_dir.exists():
            # keep unrelated files; replace ours one by one
            for name in files:
                os.replace(tmp / name, out_dir / name)
            shutil.rmtree(tmp)
        else:
            os.replace(tmp, out_dir)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


# -- commands -----------------------------------------------------------------------


def _err(msg: str):
    print(f"frictpair: {msg}", file=sys.stderr)


def _load_scenario(path) -> tuple[Scenario, OutputOptions]:
    return parse_scenario(load_document(path))


def cmd_run(path: str, out_dir: str, svg: bool = False) -> int:
    try:
        sc, opts = _load_scenario(path)
    except ParseError as exc:
        _err(f"parse error: {exc}")
        return EXIT_PARSE
    except ValueError as exc:
        _err(f"validation error: {exc}")
        return EXIT_VALIDATION
    if svg:
        opts = OutputOptions(True, opts.sync_eps, opts.outcome_tol)
    try:
        traj = simulate(sc)
    except IntegrationError as exc:
        _err(f"integration failed: {exc}")
        return EXIT_INTEGRATION
    write_bundle(Path(out_dir), bundle_files(traj, opts))
    return EXIT_OK


def cmd_geometry(path: str) -> int:
    try:
        doc = load_document(path)
        p = parse_params(doc)
    except ParseError as exc:
        _err(f"parse error: {exc}")
        return EXIT_PARSE
    try:
        validate(p)
    except ParameterError as exc:
        _err(f"validation error: {exc}")
        return EXIT_VALIDATION
    g = sliding_geometry(p)
    print(json.dumps({"x_star": g.x_star, "e_cr": g.e_cr, "half_period": g.half_period,
                      "rays": [[g.x_star, 0.0, 0.0], [-g.x_star, 0.0, 0.0]]}))
    return EXIT_OK


def read_trajectory_csv(path: str | Path, p: Params) -> tuple[np.ndarray, np.ndarray]:
    """Columns (n, 8) and mode codes from a run CSV; raises SchemaError."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if not rows or rows[0] != TRAJ_HEADER:
        raise SchemaError(f"header must be {','.join(TRAJ_HEADER)}")
    body = rows[1:]
    data = np.empty((len(body), 8))
    modes = np.empty(len(body), dtype=np.int8)
    for i, row in enumerate(body):
        if len(row) != len(TRAJ_HEADER):
            raise SchemaError(f"row {i + 2}: expected {len(TRAJ_HEADER)} fields")
        try:
            data[i] = [float(v) for v in row[:8]]
            modes[i] = Mode(row[8]).direction
        except ValueError as exc:
            raise SchemaError(f"row {i + 2}: {exc}") from None
    if not np.all(np.isfinite(data)):
        raise SchemaError("non-finite values")
    if len(body) > 1 and np.any(np.diff(data[:, 0]) <= 0):
        raise SchemaError("time column must increase")
    x1, v1, v2 = data[:, 1], data[:, 2], data[:, 4]
    e = 0.5 * p.a2 * x1 * x1 + 0.5 * p.m1 * v1 * v1 + 0.5 * p.m2 * v2 * v2
    scale = float(np.max(np.abs(e))) if len(e) else 0.0
    if np.any(np.abs(e - data[:, 7]) > ENERGY_RTOL * scale):
        raise SchemaError("energy column does not match the states")
    return data, modes


def cmd_classify(csv_path: str, params_path: str) -> int:
    try:
        sc, opts = _load_scenario(params_path)
    except ParseError as exc:
        _err(f"parse error: {exc}")
        return EXIT_PARSE
    except ValueError as exc:
        _err(f"validation error: {exc}")
        return EXIT_VALIDATION
    p = sc.params
    try:
        data, modes = read_trajectory_csv(csv_path, p)
    except SchemaError as exc:
        _err(f"schema error: {exc}")
        return EXIT_SCHEMA
    if len(data) == 0:
        _err("insufficient data: empty trajectory")
        return EXIT_DATA
    traj = Trajectory(data[:, 0], data[:, 1], data[:, 2], data[:, 3], data[:, 4], modes,
                      data[:, 7], [], sc)
    try:
        out = classify_outcome(p, traj, opts.tol_for(p)).as_dict()
    except InsufficientDataError as exc:
        _err(f"insufficient data: {exc}")
        return EXIT_DATA
    print(json.dumps(out))
    return EXIT_OK


# -- sweeps -------------------------------------------------------------------------


def _set_dotted(doc: dict, key: str, value):
    parts = key.split(".")
    node = doc
    for part in parts[:-1]:
        nxt = node.setdefault(part, {})
        if not isinstance(nxt, dict):
            raise ParseError(f"sweep key {key!r}: {part} is not a mapping")
        node = nxt
    node[parts[-1]] = value


def parse_sweep(doc: dict) -> tuple[dict, list[str], list[tuple]]:
    """(base document, swept keys, value combinations in product order)."""
    unknown = set(doc) - {"base", "sweep"}
    if unknown:
        raise ParseError(f"unknown keys {sorted(map(str, unknown))}")
    base, sweep = doc.get("base"), doc.get("sweep")
    if not isinstance(base, dict):
        raise ParseError("base: expected a mapping")
    if not isinstance(sweep, dict) or not sweep:
        raise ParseError("sweep: expected a non-empty mapping of field -> value list")
    keys = [str(k) for k in sweep]
    lists = []
    for k in keys:
        vals = sweep[k]
        if not isinstance(vals, list) or not vals:
            raise ParseError(f"sweep.{k}: expected a non-empty list")
        lists.append(vals)
    size = math.prod(len(v) for v in lists)
    if size > MAX_SWEEP:
        raise ValueError(f"sweep has {size} combinations, limit is {MAX_SWEEP}")
    return base, keys, list(itertools.product(*lists))


def _combo_doc(base: dict, keys: list[str], combo: tuple) -> dict:
    doc = copy.deepcopy(base)
    for k, v in zip(keys, combo):
        _set_dotted(doc, k, v)
    return doc


def _bundle_name(i: int) -> str:
    return f"run_{i:04d}"


def _run_combo(args) -> dict:
    """Worker: run one combination into its own bundle directory."""
    i, doc, out_dir, svg = args
    row = {"id": i, "dir": _bundle_name(i), "status": "ok", "sync_time": "", "outcome": "",
           "terminal_energy": "", "error": ""}
    overlay = None
    try:
        sc, opts = parse_scenario(doc)
        if svg:
            opts = OutputOptions(True, opts.sync_eps, opts.outcome_tol)
        traj = simulate(sc)
        files = bundle_files(traj, opts)
        write_bundle(Path(out_dir) / row["dir"], files)
        summ = json.loads(files["summary.json"])
        row.update(sync_time="" if summ["sync_time"] is None else _fmt(summ["sync_time"]),
                   outcome=summ["outcome"]["class"], terminal_energy=_fmt(summ["terminal_energy"]))
        if opts.svg:
            keep = plots._decimate(len(traj))
            overlay = (traj.z[keep], traj.zdot[keep])
    except ParseError as exc:
        row.update(status="parse_error", error=str(exc))
    except IntegrationError as exc:
        row.update(status="integration_error", error=str(exc))
    except ValueError as exc:
        row.update(status="validation_error", error=str(exc))
    return {"row": row, "overlay": overlay}


def cmd_sweep(path: str, out_dir: str, jobs: int | None = None) -> int:
    try:
        base, keys, combos = parse_sweep(load_document(path))
        # fail fast on a broken base before spawning anything
        base_sc, base_opts = parse_scenario(base)
    except ParseError as exc:
        _err(f"parse error: {exc}")
        return EXIT_PARSE
    except ValueError as exc:
        _err(f"validation error: {exc}")
        return EXIT_VALIDATION
    jobs = jobs or os.cpu_count() or 1
    out = Path(out_dir)
    tasks = [(i, _combo_doc(base, keys, c), str(out), base_opts.svg) for i, c in enumerate(combos)]
    if jobs == 1 or len(tasks) == 1:
        results = [_run_combo(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_run_combo, tasks))

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "dir", *keys, "status", "sync_time", "outcome", "terminal_energy", "error"])
    for combo, res in zip(combos, results):
        r = res["row"]
        w.writerow([r["id"], r["dir"], *combo, r["status"], r["sync_time"], r["outcome"],
                    r["terminal_energy"], r["error"]])
    write_atomic(out / "index.csv", buf.getvalue())
    series = [(", ".join(f"{k}={v}" for k, v in zip(keys, combo)), *res["overlay"])
              for combo, res in zip(combos, results) if res["overlay"] is not None]
    if series:
        write_atomic(out / "overlay_relative.svg", plots.relative_overlay(series))
    failed = [res["row"] for res in results if res["row"]["status"] != "ok"]
    for r in failed:
        _err(f"{r['dir']}: {r['status']}: {r['error']}")
    return EXIT_OK if len(failed) < len(results) else EXIT_INTEGRATION


# -- entry point --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="frictpair", description="Stick-slip friction pair simulator.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="simulate one scenario")
    r.add_argument("file")
    r.add_argument("--out", default="out")
    r.add_argument("--svg", action="store_true", help="also write SVG phase portraits")
    s = sub.add_parser("sweep", help="run a parameter sweep")
    s.add_argument("file")
    s.add_argument("--out", default="sweep_out")
    s.add_argument("-j", "--jobs", type=int, default=None)
    g = sub.add_parser("geometry", help="print the sliding-strip geometry")
    g.add_argument("file")
    c = sub.add_parser("classify", help="classify a trajectory CSV")
    c.add_argument("csv")
    c.add_argument("--params", required=True)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.file, args.out, args.svg)
    if args.command == "sweep":
        if args.jobs is not None and args.jobs < 1:
            _err("-j must be >= 1")
            return EXIT_PARSE
        return cmd_sweep(args.file, args.out, args.jobs)
    if args.command == "geometry":
        return cmd_geometry(args.file)
    return cmd_classify(args.csv, args.params)


if __name__ == "__main__":
    sys.exit(main())
