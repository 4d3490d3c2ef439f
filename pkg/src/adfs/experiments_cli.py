"""Command-line front end: run named scenarios, emit CSV/JSON artifacts.

Two subcommands.  ``run`` propagates every variant of a scenario and
writes per-variant artifacts plus a machine-readable ``summary.json``;
``sweep`` re-runs the scenario's first variant over a parameter grid
and writes one CSV row per grid point.  All numeric CSV fields use 17
significant digits so repeated runs are bit-identical; files follow
RFC 4180 (CRLF, '.' decimal).

Artifacts, per variant (suffixed ``__<variant>`` when a scenario has
several):

``trajectory.csv``
    ``t,purity,fidelity,bloch_x,bloch_y,bloch_z,trace_err,herm_err,min_eig``
``xi.csv``
    ``t,xi_state,xi_lindblad`` on the same record grid.
``bound.json``
    Purity floor: final/sup values, per-term diagnostics, and the full
    path on the refinement grid.
``sta_fields.csv``
    ``t,omega_re,omega_im,omega_cd_re,omega_cd_im``; ``omega`` is the
    drive the model applies, ``omega_cd`` the part beyond the
    degeneracy-engineering field.
``diagnostics.csv``
    ``t,coherent_leak,backflow,dfs_population,comp_population`` from the
    co-moving-frame purity-flow split.

Initial-state sweeps (``fig3``) write one long-format ``surface.csv``
with columns ``phi0,t,fidelity`` instead of per-variant trajectories;
schedule-level emissions (xi, bound) are written once since every
variant shares the schedule.

Exit codes: 0 success, 2 usage/config error, 3 numerical failure.
``ADFS_THREADS`` caps the sweep worker pool.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .adiabatic_monitor import adiabatic_report, purity_lower_bound
from .dfs_analysis import DfsDecomposition, check_conditions
from .lindblad_integrator import (
    PositivityError,
    PropagateOptions,
    accumulate_frame_phases,
    propagate,
    rotating_frame_diagnostics,
)
from .operator_model import evaluate
from .squeezed_qubit_example import (
    OVERRIDE_KEYS,
    SCENARIO_NAMES,
    AnalyticQubitPath,
    Scenario,
    ScenarioVariant,
    build_model,
    control_omega,
    initial_state,
    scenario,
)

__all__ = ["main", "run_scenario", "run_sweep"]

SCHEMA_VERSION = 1
EMIT_CHOICES = ("trajectory", "xi", "bound", "sta_fields", "diagnostics")
DEFAULT_EMIT = ("trajectory", "xi", "bound")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

TRAJECTORY_HEADER = (
    "t", "purity", "fidelity", "bloch_x", "bloch_y", "bloch_z",
    "trace_err", "herm_err", "min_eig",
)


class UsageError(ValueError):
    """Configuration problem that maps to exit code 2."""


def _fmt(x) -> str:
    return "%.17g" % float(x)


def _write_csv(path: str, header: Sequence[str], rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _json_safe(x):
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_json_safe(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if np.isfinite(v) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _write_json(path: str, doc: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_json_safe(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_overrides(pairs: Sequence[str]) -> dict:
    """``k=v`` strings to a typed override dict; ``dt`` aliases ``dt_max``."""
    out: dict = {}
    for item in pairs:
        if "=" not in item:
            raise UsageError(f"override {item!r} is not of the form key=value")
        key, _, raw = item.partition("=")
        key = key.strip()
        if key == "dt":
            key = "dt_max"
        if key == "control":
            out[key] = raw.strip()
            continue
        try:
            val = float(raw)
        except ValueError:
            raise UsageError(f"override {key!r}: {raw!r} is not a number")
        out[key] = int(val) if key == "n_record" else val
    return out


def _parse_emit(text: Optional[str]) -> Tuple[str, ...]:
    if text is None:
        return DEFAULT_EMIT
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    if not items:
        raise UsageError("--emit given but empty")
    bad = [s for s in items if s not in EMIT_CHOICES]
    if bad:
        raise UsageError(f"unknown emit flags {bad}; choose from {EMIT_CHOICES}")
    return items


def _variant_suffix(scn: Scenario, variant: ScenarioVariant) -> str:
    # surface scenarios share one schedule, so their schedule-level
    # artifacts are written once, unsuffixed
    if scn.kind == "surface" or len(scn.variants) == 1:
        return ""
    return f"__{variant.name}"


def _decomposition_from_frame(frame) -> DfsDecomposition:
    return DfsDecomposition(
        dfs_basis=frame.dfs,
        comp_basis=frame.comp,
        eigenvalues=frame.eigenvalues,
        proj_dfs=frame.dfs @ frame.dfs.conj().T,
        proj_comp=frame.comp @ frame.comp.conj().T,
    )


def _max_condition_residual(model, path, times) -> float:
    worst = 0.0
    for t in times:
        ops = evaluate(model, float(t))
        rep = check_conditions(ops, _decomposition_from_frame(path.frame(float(t))))
        worst = max(worst, rep.max_residual())
    return worst


def _fidelity_target(path: AnalyticQubitPath):
    def target(t: float) -> np.ndarray:
        return path.frame(t).dfs[:, 0]

    return target


def _trajectory_rows(record):
    for k in range(record.times.size):
        yield (
            _fmt(record.times[k]),
            _fmt(record.purity[k]),
            _fmt(record.fidelity[k]),
            _fmt(record.bloch[k, 0]),
            _fmt(record.bloch[k, 1]),
            _fmt(record.bloch[k, 2]),
            _fmt(record.trace_err[k]),
            _fmt(record.herm_err[k]),
            _fmt(record.min_eig[k]),
        )


def _xi_table(model, path, times):
    xs = np.empty(times.size)
    xl = np.empty(times.size)
    for k, t in enumerate(times):
        rep = adiabatic_report(model, float(t), path)
        xs[k] = rep.xi_state
        xl[k] = max(rep.xi_lindblad) if rep.xi_lindblad else 0.0
    return xs, xl


def _bound_doc(scn_name: str, vname: str, model, path) -> dict:
    terms = purity_lower_bound(
        model, path, n_grid=129, refine_tol=1e-6, max_refinements=5
    )
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": scn_name,
        "variant": vname,
        "bound": terms.bound,
        "bound_sup": terms.bound_sup,
        "deficit_sup": terms.deficit_sup,
        "boundary_term": terms.boundary_term,
        "integral_terms": terms.integral_terms,
        "strong_conditions": list(terms.strong_conditions),
        "converged": terms.converged,
        "finite": terms.finite,
        "n_grid": terms.n_grid,
        "times": terms.times,
        "bound_path": terms.bound_path,
    }


def _sta_rows(model, sch, times):
    for t in times:
        ops = evaluate(model, float(t))
        omega = complex(ops.hamiltonian[0, 1])
        r, th = float(sch.r(t)), float(sch.theta(t))
        omega_cd = omega - complex(control_omega(r, th, sch.gamma))
        yield (
            _fmt(t), _fmt(omega.real), _fmt(omega.imag),
            _fmt(omega_cd.real), _fmt(omega_cd.imag),
        )


def _diagnostics_rows(model, path, record):
    times = record.times
    phases = accumulate_frame_phases(model, path, times)
    frame_0 = path.frame(float(times[0]))
    for k, t in enumerate(times):
        ops = evaluate(model, float(t))
        frame_t = path.frame(float(t))
        basis_dt = path.basis_derivative(float(t))
        diag = rotating_frame_diagnostics(
            ops, frame_t, frame_0, basis_dt, phases[k], record.states[k]
        )
        yield (
            _fmt(t),
            _fmt(diag.coherent_leak),
            _fmt(diag.backflow),
            _fmt(float(np.trace(diag.rho_d).real)),
            _fmt(float(np.trace(diag.rho_c).real)),
        )


def _schedule_dict(sch) -> dict:
    return {
        "r0": sch.r0, "theta0": sch.theta0, "mu": sch.mu,
        "nu": sch.nu, "gamma": sch.gamma, "o": sch.offset_o,
    }


def _execute_variant(scn: Scenario, variant: ScenarioVariant, out_dir: str,
                     emit: Tuple[str, ...]) -> dict:
    """Run one variant, write its files, and return its summary entry."""
    suffix = _variant_suffix(scn, variant)
    model = build_model(variant.schedule, control=variant.control,
                        t_final=variant.t_final)
    path = AnalyticQubitPath(variant.schedule)
    times = np.linspace(0.0, variant.t_final, variant.n_record)
    opts = PropagateOptions(
        dt_max=variant.dt_max,
        record_states="diagnostics" in emit,
        fidelity_target=_fidelity_target(path),
    )
    entry: dict = {
        "control": variant.control,
        "schedule": _schedule_dict(variant.schedule),
        "t_final": variant.t_final,
        "n_record": variant.n_record,
        "files": {},
        "status": "ok",
    }
    try:
        record = propagate(model, initial_state(variant), times, opts)
    except PositivityError as exc:
        entry["status"] = "failed"
        entry["error"] = str(exc)
        return entry

    entry["kernel"] = record.kernel
    entry["n_steps"] = record.n_steps_total
    entry["dt_used"] = record.dt_used
    entry["final_purity"] = float(record.purity[-1])
    entry["final_fidelity"] = float(record.fidelity[-1])
    k_min = int(np.argmin(record.purity))
    entry["min_purity"] = float(record.purity[k_min])
    entry["t_min_purity"] = float(record.times[k_min])
    entry["max_trace_err"] = float(np.max(record.trace_err))
    entry["max_herm_err"] = float(np.max(record.herm_err))
    probe = np.linspace(0.0, variant.t_final, 7)
    entry["max_condition_residual"] = _max_condition_residual(model, path, probe)

    if "trajectory" in emit and scn.kind != "surface":
        name = f"trajectory{suffix}.csv"
        _write_csv(os.path.join(out_dir, name), TRAJECTORY_HEADER,
                   _trajectory_rows(record))
        entry["files"]["trajectory"] = name
    if scn.kind == "surface":
        entry["surface_rows"] = [
            (float(variant.initial[1]), record.times, record.fidelity)
        ]

    if "xi" in emit:
        xs, xl = _xi_table(model, path, times)
        name = f"xi{suffix}.csv"
        _write_csv(
            os.path.join(out_dir, name),
            ("t", "xi_state", "xi_lindblad"),
            ((_fmt(t), _fmt(a), _fmt(b)) for t, a, b in zip(times, xs, xl)),
        )
        entry["files"]["xi"] = name
        entry["max_xi_state"] = float(np.max(xs))
        entry["max_xi_lindblad"] = float(np.max(xl))
        entry["xi_at_purity_min"] = float(xs[k_min])

    if "bound" in emit:
        doc = _bound_doc(scn.name, variant.name, model, path)
        name = f"bound{suffix}.json"
        _write_json(os.path.join(out_dir, name), doc)
        entry["files"]["bound"] = name
        entry["bound"] = doc["bound"]
        entry["bound_sup"] = doc["bound_sup"]
        entry["deficit_sup"] = doc["deficit_sup"]

    if "sta_fields" in emit:
        name = f"sta_fields{suffix}.csv"
        _write_csv(
            os.path.join(out_dir, name),
            ("t", "omega_re", "omega_im", "omega_cd_re", "omega_cd_im"),
            _sta_rows(model, variant.schedule, times),
        )
        entry["files"]["sta_fields"] = name

    if "diagnostics" in emit:
        name = f"diagnostics{suffix}.csv"
        _write_csv(
            os.path.join(out_dir, name),
            ("t", "coherent_leak", "backflow", "dfs_population",
             "comp_population"),
            _diagnostics_rows(model, path, record),
        )
        entry["files"]["diagnostics"] = name

    return entry


def run_scenario(name: str, out_dir: str, overrides: Optional[dict] = None,
                 emit: Tuple[str, ...] = DEFAULT_EMIT) -> int:
    """Run every variant of a scenario; returns the process exit code."""
    try:
        scn = scenario(name, overrides)
    except ValueError as exc:
        raise UsageError(str(exc))
    os.makedirs(out_dir, exist_ok=True)

    variants: Dict[str, dict] = {}
    status = EXIT_OK
    try:
        if scn.kind == "surface":
            # schedule-level emissions are shared; run them once
            shared = tuple(e for e in emit if e != "trajectory")
            rows: List[tuple] = []
            for k, v in enumerate(scn.variants):
                per_variant = ("trajectory",) if k else ("trajectory",) + shared
                entry = _execute_variant(scn, v, out_dir, per_variant)
                if entry["status"] == "failed":
                    status = EXIT_NUMERIC
                for phi0, ts, fid in entry.pop("surface_rows", []):
                    rows.extend((phi0, float(t), float(f)) for t, f in zip(ts, fid))
                variants[v.name] = entry
            if "trajectory" in emit:
                _write_csv(
                    os.path.join(out_dir, "surface.csv"),
                    ("phi0", "t", "fidelity"),
                    ((_fmt(a), _fmt(b), _fmt(c)) for a, b, c in rows),
                )
                for entry in variants.values():
                    entry["files"]["surface"] = "surface.csv"
        else:
            for v in scn.variants:
                entry = _execute_variant(scn, v, out_dir, emit)
                if entry["status"] == "failed":
                    status = EXIT_NUMERIC
                variants[v.name] = entry
    except ValueError as exc:
        # config-level defect surfaced while building or gridding a variant
        raise UsageError(str(exc))

    summary = {
        "schema_version": SCHEMA_VERSION,
        "scenario": scn.name,
        "kind": scn.kind,
        "overrides": overrides or {},
        "emit": list(emit),
        "exit_status": status,
        "variants": variants,
    }
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    return status


# ---------------------------------------------------------------------------
# Parameter sweeps


def _load_grid(path: str) -> Tuple[List[str], List[tuple]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read grid file {path}: {exc}")
    if not isinstance(doc, dict) or not doc:
        raise UsageError("grid file must be a non-empty JSON object of lists")
    keys = ["dt_max" if k == "dt" else k for k in doc.keys()]
    values = []
    for k in doc:
        v = doc[k]
        if not isinstance(v, list) or not v:
            raise UsageError(f"grid entry {k!r} must be a non-empty list")
        values.append(v)
    return keys, list(itertools.product(*values))


def _sweep_variant(name: str, merged: dict) -> ScenarioVariant:
    """First variant of the scenario under merged overrides.

    A swept ramp rate rescales the horizon (t_final = pi / rate) unless
    t_final itself is pinned, matching how the named scenarios size
    their horizons.
    """
    scn = scenario(name, merged)
    v = scn.variants[0]
    if "t_final" not in merged and ("mu" in merged or "nu" in merged):
        rate = max(abs(v.schedule.mu), abs(v.schedule.nu))
        if rate > 0.0:
            v = replace(v, t_final=float(np.pi / rate))
    return v


def _sweep_row(name: str, keys: List[str], point: tuple, base: dict) -> dict:
    merged = dict(base)
    merged.update({k: (p if k == "control" else float(p))
                   for k, p in zip(keys, point)})
    row = {k: p for k, p in zip(keys, point)}
    try:
        v = _sweep_variant(name, merged)
        model = build_model(v.schedule, control=v.control, t_final=v.t_final)
        path = AnalyticQubitPath(v.schedule)
        times = np.linspace(0.0, v.t_final, v.n_record)
        opts = PropagateOptions(
            dt_max=v.dt_max,
            record_states=False,
            fidelity_target=_fidelity_target(path),
        )
        record = propagate(model, initial_state(v), times, opts)
    except PositivityError as exc:
        row.update(final_purity=float("nan"), final_fidelity=float("nan"),
                   min_purity=float("nan"), status="failed", error=str(exc))
        return row
    except ValueError as exc:
        row.update(final_purity=float("nan"), final_fidelity=float("nan"),
                   min_purity=float("nan"), status="failed", error=str(exc))
        return row
    row.update(
        final_purity=float(record.purity[-1]),
        final_fidelity=float(record.fidelity[-1]),
        min_purity=float(np.min(record.purity)),
        status="ok",
        error="",
    )
    return row


def _n_workers() -> int:
    env = os.environ.get("ADFS_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"ADFS_THREADS must be an integer, got {env!r}")
        if n < 1:
            raise UsageError(f"ADFS_THREADS must be >= 1, got {n}")
        return n
    return min(8, os.cpu_count() or 1)


def run_sweep(name: str, grid_path: str, out_dir: str,
              overrides: Optional[dict] = None) -> int:
    """Run the grid; one CSV row per point, order-stable."""
    if name not in SCENARIO_NAMES:
        raise UsageError(f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}")
    keys, points = _load_grid(grid_path)
    base = dict(overrides or {})
    bad = sorted((set(keys) | set(base)) - set(OVERRIDE_KEYS))
    if bad:
        raise UsageError(f"unknown grid/override keys {bad}; allowed: {OVERRIDE_KEYS}")
    os.makedirs(out_dir, exist_ok=True)

    with ThreadPoolExecutor(max_workers=_n_workers()) as pool:
        rows = list(pool.map(
            lambda p: _sweep_row(name, keys, p, base), points
        ))

    header = tuple(keys) + ("final_purity", "final_fidelity", "min_purity",
                            "status", "error")
    csv_rows = []
    n_failed = 0
    for row in rows:
        if row["status"] != "ok":
            n_failed += 1
        csv_rows.append(
            tuple(_fmt(row[k]) if k != "control" else str(row[k]) for k in keys)
            + (_fmt(row["final_purity"]), _fmt(row["final_fidelity"]),
               _fmt(row["min_purity"]), row["status"], row["error"])
        )
    _write_csv(os.path.join(out_dir, "sweep.csv"), header, csv_rows)
    _write_json(os.path.join(out_dir, "summary.json"), {
        "schema_version": SCHEMA_VERSION,
        "scenario": name,
        "grid_keys": keys,
        "n_rows": len(rows),
        "n_failed": n_failed,
        "exit_status": EXIT_NUMERIC if n_failed else EXIT_OK,
    })
    return EXIT_NUMERIC if n_failed else EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adfs",
        description="Propagate squeezed-qubit scenarios and emit CSV/JSON artifacts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario, all variants")
    p_run.add_argument("--scenario", required=True, metavar="NAME")
    p_run.add_argument("--override", action="append", default=[],
                       metavar="K=V", help="schedule/control override, repeatable")
    p_run.add_argument("--out", required=True, metavar="DIR")
    p_run.add_argument("--emit", default=None, metavar="LIST",
                       help=f"comma-separated subset of {','.join(EMIT_CHOICES)}")

    p_sweep = sub.add_parser("sweep", help="sweep a parameter grid")
    p_sweep.add_argument("--scenario", required=True, metavar="NAME")
    p_sweep.add_argument("--grid", required=True, metavar="FILE",
                         help="JSON object mapping override keys to value lists")
    p_sweep.add_argument("--override", action="append", default=[],
                         metavar="K=V")
    p_sweep.add_argument("--out", required=True, metavar="DIR")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        overrides = _parse_overrides(args.override)
        if args.command == "run":
            return run_scenario(args.scenario, args.out, overrides,
                                _parse_emit(args.emit))
        return run_sweep(args.scenario, args.grid, args.out, overrides)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
