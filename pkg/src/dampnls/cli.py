"""Command-line front end and run orchestration.

A run is described by one JSON document::

    {"grid":    {"n": 4096, "L": 3.0},
     "time":    {"dt0": 1e-3, "dt_min": 1e-12, "t_max": 5.0, "grad_stop": 120.0,
                 "tail_tol": 1e-9, "order": 4},
     "damping": {"kind": "gaussian", "params": {"amplitude": 0.01}},
     "initial": {"kind": "scaled_ground_state", "params": {"c": 1.05}},
     "output":  {"dir": "damped", "cadence": 5}}

Relative output directories resolve against ``$DAMPNLS_OUTPUT_ROOT`` (or the
working directory).  Nothing in a run is random and no timestamps are
written, so rerunning a config on the same build reproduces every file.
"""
from __future__ import annotations

import argparse
from concurrent.futures import ProcessPoolExecutor
import copy
from dataclasses import asdict, dataclass, field
import hashlib
import itertools
import json
import logging
import math
import os
from pathlib import Path
import sys

import jsonschema
import numpy as np

from . import __version__
from .blowup import (REPORT_COLUMNS, ModulationSeries, NoBlowupError, blowup_report, estimate_T,
                     post_transient_mask, rate_fit)
from .dynamics import SolverConfig, evolve, grad_norm, make_damping, make_initial_data
from .grid import Grid
from .groundstate import GRAD_SQ, build_tables, shooting_oracle, q_closed_form
from .invariants import LEDGER_COLUMNS, law_residuals, mass_bound_check
from .io import (line_plot_svg, read_csv, read_field, read_json, sha256, write_csv, write_field,
                 write_json)
from .modulation import MODULATION_COLUMNS, decompose_series, default_frame
from .operators import identity_residuals

log = logging.getLogger("dampnls")

OUTPUT_ROOT_ENV = "DAMPNLS_OUTPUT_ROOT"
TRAJECTORY_COLUMNS = ["t", "dt", "mass", "energy", "momentum", "grad_norm", "lambda_est"]
MAX_SWEEP_CELLS = 1000

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["grid", "time", "damping", "initial", "output"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "grid": {"type": "object", "required": ["n", "L"], "additionalProperties": False,
                 "properties": {"n": {"type": "integer", "minimum": 64}, "L": _POS}},
        "time": {"type": "object", "additionalProperties": False,
                 "required": ["dt0", "t_max"],
                 "properties": {"dt0": _POS, "dt_min": _POS, "t_max": _POS, "grad_stop": _POS,
                                "tail_tol": _POS, "safety": _POS,
                                "order": {"enum": [2, 4]}, "dealias": {"type": "boolean"}}},
        "damping": {"type": "object", "required": ["kind"], "additionalProperties": False,
                    "properties": {"kind": {"enum": ["zero", "constant", "gaussian", "tanh-step",
                                                     "tabulated"]},
                                   "params": {"type": "object"}}},
        "initial": {"type": "object", "required": ["kind"], "additionalProperties": False,
                    "properties": {"kind": {"enum": ["scaled_ground_state", "boosted", "file",
                                                     "warm_start"]},
                                   "params": {"type": "object"}}},
        "output": {"type": "object", "required": ["dir"], "additionalProperties": False,
                   "properties": {"dir": {"type": "string", "minLength": 1},
                                  "cadence": {"type": "integer", "minimum": 1},
                                  "snapshots": {"enum": ["csv", "binary", "none"]},
                                  "snapshot_every": {"type": "integer", "minimum": 1},
                                  "plots": {"type": "boolean"}}},
        "analysis": {"type": "object", "additionalProperties": False,
                     "properties": {"modulation": {"type": "boolean"},
                                    "window": {"enum": ["post-transient", "all"]},
                                    "frame": {"type": "object", "additionalProperties": False,
                                              "properties": {"n": {"type": "integer",
                                                                   "minimum": 64},
                                                             "L": _POS}}}},
    },
}

DEFAULTS = {
    "name": "run",
    "grid": {"n": 1024, "L": 16.0},
    "time": {"dt0": 1e-3, "dt_min": 1e-12, "t_max": 1.0, "grad_stop": 1e3, "tail_tol": 1e-10,
             "safety": 1.0, "order": 2, "dealias": True},
    "damping": {"kind": "zero", "params": {}},
    "initial": {"kind": "scaled_ground_state", "params": {"c": 1.05}},
    "output": {"cadence": 10, "snapshots": "csv", "snapshot_every": 1, "plots": True},
    "analysis": {"modulation": True, "window": "post-transient", "frame": {"n": 1024, "L": 16.0}},
}

SWEEP_SCHEMA = {
    "type": "object",
    "required": ["base", "axes", "output"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "base": {"type": "object"},
        "axes": {"type": "object", "minProperties": 1,
                 "additionalProperties": {"type": "array", "minItems": 1}},
        "workers": {"type": "integer", "minimum": 1},
        "output": {"type": "object", "required": ["dir"],
                   "properties": {"dir": {"type": "string", "minLength": 1}}},
    },
}


class ConfigError(ValueError):
    """Schema violations, one entry per offending path."""

    def __init__(self, errors: list[str]):
        super().__init__("invalid config:\n  " + "\n  ".join(errors))
        self.errors = errors


def _validate(doc, schema) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError([f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}"
                           for e in errors])


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "params":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config(raw: dict) -> dict:
    """Validate ``raw`` and fill in every default (the manifest echoes this)."""
    _validate(raw, CONFIG_SCHEMA)
    cfg = _merge(DEFAULTS, raw)
    cfg["grid"]["L"] = float(cfg["grid"]["L"])
    return cfg


def load_config(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<root>: not valid JSON ({exc})"]) from exc
    return resolve_config(raw)


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "."))


def resolve_output(dir_: str) -> Path:
    p = Path(dir_)
    return p if p.is_absolute() else output_root() / p


def run_id(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def solver_config(cfg: dict) -> SolverConfig:
    tm = cfg["time"]
    return SolverConfig(n_points=int(cfg["grid"]["n"]), half_width=float(cfg["grid"]["L"]),
                        dt0=tm["dt0"], dt_min=tm["dt_min"], safety=tm["safety"],
                        grad_stop=tm["grad_stop"], tail_tol=tm["tail_tol"],
                        dealias=tm["dealias"], cadence=int(cfg["output"]["cadence"]),
                        t_max=tm["t_max"], order=tm["order"])


# --------------------------------------------------------------------------- manifest


@dataclass
class RunManifest:
    run_id: str
    config: dict
    version: str
    solver: dict = field(default_factory=dict)
    damping: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    stop_reason: str | None = None
    stage: str = "initial"
    failed: bool = False
    error: str | None = None
    files: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def record(self, out: Path, *paths) -> None:
        for p in paths:
            p = Path(p)
            self.files[str(p.relative_to(out))] = {"sha256": sha256(p), "bytes": p.stat().st_size}

    def write(self, out: Path) -> Path:
        return write_json(out / "manifest.json", self.to_dict())


def _trajectory_rows(traj) -> list[dict]:
    return [{"t": s.t, "dt": s.dt_used, "mass": s.mass, "energy": s.energy,
             "momentum": s.momentum, "grad_norm": s.grad_norm, "lambda_est": s.lambda_est}
            for s in traj.samples]


def _snapshot_name(i: int, fmt: str) -> str:
    return f"snapshots/u_{i:06d}.{'bin' if fmt == 'binary' else 'csv'}"


def _modulation_window(cfg: dict, grad: np.ndarray) -> np.ndarray:
    if cfg["analysis"]["window"] == "all":
        return np.ones(grad.size, dtype=bool)
    mask = post_transient_mask(grad)
    return mask if mask.any() else np.ones(grad.size, dtype=bool)


def _frame(cfg: dict):
    fr = cfg["analysis"]["frame"]
    return default_frame(int(fr["n"]), float(fr["L"]))


def _modulation_stage(cfg, grid, times, fields, grad):
    mask = _modulation_window(cfg, grad)
    idx = np.nonzero(mask)[0]
    idx = [i for i in idx if fields[i] is not None]
    states = decompose_series(grid, [times[i] for i in idx], [fields[i] for i in idx],
                              _frame(cfg))
    return states


def _write_plots(out: Path, traj_t, grad, series: ModulationSeries | None, T) -> list[Path]:
    paths = [line_plot_svg(out / "plots" / "lambda_vs_t.svg",
                           [(traj_t, math.sqrt(GRAD_SQ) / np.asarray(grad), "|Q_x|/|u_x|")]
                           + ([(series.t, series.lam, "lambda (modulation)")] if series else []),
                           title="scale", xlabel="t", ylabel="lambda")]
    if T is not None:
        tau = T - np.asarray(traj_t)
        keep = tau > 0
        paths.append(line_plot_svg(out / "plots" / "grad_vs_T_minus_t.svg",
                                   [(tau[keep], np.asarray(grad)[keep], "|u_x|")],
                                   title="gradient growth", xlabel="T_est - t", ylabel="|u_x|",
                                   logx=True, logy=True))
    if series is not None and len(series):
        paths.append(line_plot_svg(out / "plots" / "e2qd_vs_s.svg",
                                   [(series.s, series.e2_qd, "(eps_2, Q_d)")],
                                   title="(eps_2, Q_d)", xlabel="s", ylabel="(eps_2, Q_d)"))
    return paths


def _report_stage(cfg, out, traj_cols, series, stop_reason, sup_a, alpha):
    report = blowup_report(traj_cols["t"], traj_cols["grad_norm"], traj_cols["energy"], series,
                           stop_reason, sup_a, alpha)
    d = report.to_dict()
    if "mass" in traj_cols:
        mb = mass_bound_check(traj_cols["t"], traj_cols["mass"], sup_a)
        d["checks"]["mass_bound"] = {"passed": bool(mb.passed), "margin": mb.worst_margin}
    paths = [write_json(out / "report.json", d),
             write_csv(out / "report.csv", report.samples, REPORT_COLUMNS)]
    return report, paths


def run_experiment(config, out_dir=None) -> RunManifest:
    """initial data -> evolve -> decompose -> ledger -> blow-up report -> plots.

    A failing stage stops the pipeline; everything written so far stays on
    disk and the manifest names the stage and the error.
    """
    cfg = resolve_config(config)
    out = Path(out_dir) if out_dir is not None else resolve_output(cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(run_id=run_id(cfg), config=cfg, version=__version__)
    try:
        man.stage = "initial"
        scfg = solver_config(cfg)
        man.solver = scfg.to_dict()
        grid = scfg.grid
        damping = make_damping(grid, cfg["damping"]["kind"], cfg["damping"].get("params"))
        man.damping = damping.summary()
        init = make_initial_data(grid, cfg["initial"]["kind"], cfg["initial"].get("params"), scfg)
        man.initial = {**init.summary(),
                       "lambda0_est": math.sqrt(GRAD_SQ) / grad_norm(grid, init.u)}

        man.stage = "evolve"
        traj = evolve(init.u, scfg, damping)
        man.stop_reason = traj.stop_reason
        rows = _trajectory_rows(traj)
        man.record(out, write_csv(out / "trajectory.csv", rows, TRAJECTORY_COLUMNS))
        fmt = cfg["output"]["snapshots"]
        every = int(cfg["output"]["snapshot_every"])
        if fmt != "none":
            last = len(traj) - 1
            for i, s in enumerate(traj.samples):
                if i % every == 0 or i == last:
                    man.record(out, write_field(out / _snapshot_name(i, fmt), grid.x, s.u,
                                                binary=fmt == "binary"))

        man.stage = "ledger"
        led = law_residuals(traj.t, traj.fields, grid, damping)
        man.record(out, write_csv(out / "ledger.csv", led.rows(), LEDGER_COLUMNS))

        series = None
        if cfg["analysis"]["modulation"]:
            man.stage = "modulation"
            states = _modulation_stage(cfg, grid, traj.t, traj.fields, traj.column("grad_norm"))
            man.record(out, write_csv(out / "modulation.csv", [s.row() for s in states],
                                      MODULATION_COLUMNS))
            series = ModulationSeries.from_states(states)
            conv = series.converged_only()
            if len(conv):
                man.initial["m"] = float(conv.lam[0])

            man.stage = "report"
            cols = {"t": traj.t, "grad_norm": traj.column("grad_norm"),
                    "energy": traj.column("energy"), "mass": traj.column("mass")}
            report, paths = _report_stage(cfg, out, cols, series, traj.stop_reason,
                                          damping.sup_a, init.alpha)
            man.record(out, *paths)
        else:
            report = None

        if cfg["output"]["plots"]:
            man.stage = "plots"
            T = report.T_est if report is not None else None
            man.record(out, *_write_plots(out, traj.t, traj.column("grad_norm"), series, T))
        man.stage = "done"
    except Exception as exc:  # recorded in the manifest, then surfaced to the caller
        man.failed = True
        man.error = f"{type(exc).__name__}: {exc}"
        log.error("run %s failed during %s: %s", man.run_id, man.stage, man.error)
    man.write(out)
    return man


# --------------------------------------------------------------------------- post-processing from disk


def _load_run(run_dir: Path):
    man = read_json(run_dir / "manifest.json")
    cfg = man["config"]
    traj = read_csv(run_dir / "trajectory.csv")
    return man, cfg, traj


def _load_fields(run_dir: Path, cfg: dict, n: int):
    fmt = cfg["output"]["snapshots"]
    fields = []
    for i in range(n):
        p = run_dir / _snapshot_name(i, fmt if fmt != "none" else "binary")
        fields.append(read_field(p)[1] if p.exists() else None)
    return fields


def _refresh_manifest(run_dir: Path, *paths) -> None:
    """Re-hash files a post-processing command rewrote."""
    doc = read_json(run_dir / "manifest.json")
    for p in paths:
        p = Path(p)
        doc["files"][str(p.relative_to(run_dir))] = {"sha256": sha256(p),
                                                    "bytes": p.stat().st_size}
    write_json(run_dir / "manifest.json", doc)


def decompose_run(run_dir) -> Path:
    run_dir = Path(run_dir)
    _, cfg, traj = _load_run(run_dir)
    scfg = solver_config(cfg)
    fields = _load_fields(run_dir, cfg, traj["t"].size)
    states = _modulation_stage(cfg, scfg.grid, traj["t"], fields, traj["grad_norm"])
    path = write_csv(run_dir / "modulation.csv", [s.row() for s in states], MODULATION_COLUMNS)
    _refresh_manifest(run_dir, path)
    return path


def ledger_run(run_dir) -> Path:
    run_dir = Path(run_dir)
    _, cfg, traj = _load_run(run_dir)
    grid = solver_config(cfg).grid
    damping = make_damping(grid, cfg["damping"]["kind"], cfg["damping"].get("params"))
    fields = _load_fields(run_dir, cfg, traj["t"].size)
    keep = [i for i, f in enumerate(fields) if f is not None]
    led = law_residuals(traj["t"][keep], [fields[i] for i in keep], grid, damping)
    path = write_csv(run_dir / "ledger.csv", led.rows(), LEDGER_COLUMNS)
    _refresh_manifest(run_dir, path)
    return path


def report_run(run_dir) -> Path:
    run_dir = Path(run_dir)
    man, cfg, traj = _load_run(run_dir)
    mod_path = run_dir / "modulation.csv"
    if not mod_path.exists():
        decompose_run(run_dir)
    series = ModulationSeries.from_columns(read_csv(mod_path))
    _, paths = _report_stage(cfg, run_dir, traj, series, man.get("stop_reason") or "",
                             float(man["damping"]["sup_a"]), float(man["initial"]["alpha"]))
    _refresh_manifest(run_dir, *paths)
    return paths[0]


# --------------------------------------------------------------------------- sweep


def _set_path(doc: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    cur = doc
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
    cur[keys[-1]] = value


SWEEP_COLUMNS_TAIL = ["stop_reason", "t_end", "n_steps", "grad_growth", "T_est", "C_star",
                      "error"]


def run_cell(cell_cfg: dict) -> dict:
    """Evolve one sweep cell and fit ``T`` and ``C*`` from its trajectory."""
    row = {"stop_reason": "", "t_end": float("nan"), "n_steps": 0, "grad_growth": float("nan"),
           "T_est": float("nan"), "C_star": float("nan"), "error": ""}
    try:
        cfg = resolve_config(cell_cfg)
        scfg = solver_config(cfg)
        grid = scfg.grid
        damping = make_damping(grid, cfg["damping"]["kind"], cfg["damping"].get("params"))
        init = make_initial_data(grid, cfg["initial"]["kind"], cfg["initial"].get("params"), scfg)
        traj = evolve(init.u, scfg, damping, store_fields=False)
        g = traj.column("grad_norm")
        row.update(stop_reason=traj.stop_reason, t_end=traj[-1].t, n_steps=traj.n_steps,
                   grad_growth=float(g.max() / g[0]))
        try:
            T = estimate_T(traj.t, math.sqrt(GRAD_SQ) / g).T
            row["T_est"] = T
            row["C_star"] = rate_fit(traj.t, g, T).C_star
        except (NoBlowupError, ValueError):
            pass
    except Exception as exc:  # a failing cell is recorded, never fatal to the sweep
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep(sweep_cfg: dict, out_dir=None, workers: int | None = None) -> Path:
    """Run the cartesian product of ``axes`` over ``base``; rows sorted by cell key."""
    _validate(sweep_cfg, SWEEP_SCHEMA)
    axes = sweep_cfg["axes"]
    names = list(axes)
    cells = list(itertools.product(*(axes[n] for n in names)))
    if len(cells) > MAX_SWEEP_CELLS:
        raise ConfigError([f"axes: sweep has {len(cells)} cells, limit is {MAX_SWEEP_CELLS}"])
    configs = []
    for values in cells:
        c = copy.deepcopy(sweep_cfg["base"])
        for n, v in zip(names, values):
            _set_path(c, n, v)
        configs.append(c)
    workers = workers or sweep_cfg.get("workers", 1)
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, configs))
    else:
        results = [run_cell(c) for c in configs]
    rows = []
    for values, res in zip(cells, results):
        row = {n: v for n, v in zip(names, values)}
        row["cell"] = ";".join(f"{n}={v}" for n, v in zip(names, values))
        row.update(res)
        rows.append(row)
    rows.sort(key=lambda r: tuple(_sort_key(r[n]) for n in names))
    out = Path(out_dir) if out_dir is not None else resolve_output(sweep_cfg["output"]["dir"])
    return write_csv(out / "sweep.csv", rows, ["cell"] + names + SWEEP_COLUMNS_TAIL)


def _sort_key(v):
    return (0, float(v), "") if isinstance(v, (int, float)) else (1, 0.0, json.dumps(v))


# --------------------------------------------------------------------------- commands


GROUNDSTATE_PROFILE_COLUMNS = ["x", "Q", "Q_d", "Q_dd", "W"]


def groundstate_rows(n: int = 1024, L: float = 16.0) -> tuple[list[dict], list[dict]]:
    """Constants (name, value) and profile samples of the ground-state table."""
    grid = Grid(n, L)
    tab = build_tables(grid)
    xs, q = shooting_oracle()
    consts = dict(tab.constants())
    consts["shooting_gap"] = float(np.max(np.abs(q - q_closed_form(xs))))
    consts["ode_residual_max"] = float(np.max(np.abs(-grid.derivative(tab.Q, 2) + tab.Q
                                                      - tab.Q ** 5)))
    const_rows = [{"name": k, "value": float(v)} for k, v in consts.items()]
    prof_rows = [{"x": a, "Q": b, "Q_d": c, "Q_dd": d, "W": e}
                 for a, b, c, d, e in zip(grid.x, tab.Q, tab.Q_d, tab.Q_dd, tab.W)]
    return const_rows, prof_rows


def cmd_groundstate(args) -> int:
    consts, profiles = groundstate_rows(args.n, args.L)
    print("name,value")
    for r in consts:
        print(f"{r['name']},{r['value']!r}")
    if args.out:
        out = resolve_output(args.out)
        write_csv(out / "groundstate_constants.csv", consts, ["name", "value"])
        write_csv(out / "groundstate_profiles.csv", profiles, GROUNDSTATE_PROFILE_COLUMNS)
    return 0


def cmd_operators(args) -> int:
    tab = build_tables(Grid(args.n, args.L))
    worst = 0.0
    print(f"{'identity':<20s}  {'L2 residual':>12s}")
    for name, r in identity_residuals(tab):
        print(f"{name:<20s}  {r:12.3e}")
        worst = max(worst, r)
    if args.check and worst >= args.tol:
        print(f"FAIL: worst residual {worst:.3e} >= {args.tol:.1e}")
        return 1
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    man = run_experiment(cfg, args.out)
    print(json.dumps({"run_id": man.run_id, "stage": man.stage, "stop_reason": man.stop_reason,
                      "error": man.error}, indent=2))
    return 1 if man.failed else 0


def cmd_decompose(args) -> int:
    print(decompose_run(args.run))
    return 0


def cmd_ledger(args) -> int:
    print(ledger_run(args.run))
    return 0


def cmd_report(args) -> int:
    print(report_run(args.run))
    return 0


def cmd_sweep(args) -> int:
    doc = json.loads(Path(args.config).read_text())
    print(sweep(doc, args.out, args.workers))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dampnls", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("groundstate", help="print ground-state constants and oracle gaps")
    g.add_argument("--n", type=int, default=1024)
    g.add_argument("--L", type=float, default=16.0)
    g.add_argument("--out", help="also write constants and profile CSVs here")
    g.set_defaults(func=cmd_groundstate)

    o = sub.add_parser("operators", help="residuals of the linearized-operator identities")
    o.add_argument("--check", action="store_true", help="exit 1 if any residual >= --tol")
    o.add_argument("--tol", type=float, default=1e-7)
    o.add_argument("--n", type=int, default=1024)
    o.add_argument("--L", type=float, default=16.0)
    o.set_defaults(func=cmd_operators)

    s = sub.add_parser("simulate", help="run a config end to end")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="override the output directory")
    s.set_defaults(func=cmd_simulate)

    for name, func, help_ in (("decompose", cmd_decompose, "write modulation.csv for a run"),
                              ("ledger", cmd_ledger, "write ledger.csv for a run"),
                              ("blowup-report", cmd_report, "write report.json and report.csv")):
        c = sub.add_parser(name, help=help_)
        c.add_argument("--run", required=True)
        c.set_defaults(func=func)

    w = sub.add_parser("sweep", help="run a parameter sweep")
    w.add_argument("--config", required=True)
    w.add_argument("--out")
    w.add_argument("--workers", type=int)
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
