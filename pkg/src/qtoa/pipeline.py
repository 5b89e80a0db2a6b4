"""Orchestration of the coarse-grain / eigensolve / evolve / analyse runs.

Each command writes its artifacts into an output directory and always
finishes by writing ``manifest.json`` with the resolved configuration,
per-stage timings, invariant checks and, on failure, the error.
"""
from __future__ import annotations

import csv
import json
import math
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .analysis import (
    arrival_report,
    deformation_sweep,
    density_profile,
    parity_kernel_residual,
    reflected_potential_eigen_check,
    tke_residual,
)
from .config import RunConfig
from .errors import ConfigError, NoArrivalError
from .kernels import KernelFactor, assemble_kernel
from .propagator import EvolutionConfig, WavefunctionState, evolve_and_record, evolve_to
from .spectral import build_grid, build_operator_matrix, select_eigenpairs, solve_spectrum

__all__ = ["COMMANDS", "run_pipeline", "PipelineRun"]

COMMANDS = ("kernel", "spectrum", "evolve", "arrival", "conjugacy", "parity", "sweep")


def _version() -> str:
    try:
        from importlib.metadata import version

        return version("artifact")
    except Exception:  # not installed
        return "unknown"


def _fmt(x) -> str:
    return "%.17g" % x


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _clean(value):
    """Replace non-finite floats so the JSON stays standard."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def write_json(path: Path, data):
    Path(path).write_text(json.dumps(_clean(data), indent=2, default=_json_default, allow_nan=False) + "\n")


class PipelineRun:
    """One command execution: holds the stage timings, checks and outputs."""

    def __init__(self, config: RunConfig, command: str, out_dir):
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        self.config = config
        self.command = command
        self.out = Path(out_dir)
        self.timings = {}
        self.checks = {}
        self.files = []
        self.notes = []

    @contextmanager
    def stage(self, name):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = time.perf_counter() - start

    def check(self, name, value, limit, passed=None):
        ok = bool(value < limit) if passed is None else bool(passed)
        self.checks[name] = {"value": value, "limit": limit, "pass": ok}

    def emit(self, name):
        self.files.append(name)
        return self.out / name

    # ---------------------------------------------------------------- stages

    def factor(self, scheme=None):
        c = self.config
        return KernelFactor(scheme if scheme is not None else c.scheme, c.potential, c.params, c.kernel.method, c.kernel.policy)

    def spectrum(self):
        c = self.config
        with self.stage("grid"):
            grid = build_grid(c.l, c.N)
        kernel = assemble_kernel(self.factor())
        with self.stage("matrix"):
            matrix = build_operator_matrix(kernel, grid)
        self.check("hermiticity_residual", matrix.hermiticity_residual(), 1e-12 * max(1.0, float(np.max(np.abs(matrix.matrix)))))
        with self.stage("eigensolve"):
            spec = solve_spectrum(matrix, c.arrival_point)
        tau_max = float(np.max(np.abs(spec.eigenvalues)))
        self.check("pairing_residual", spec.pairing_residual(), 1e-10)
        self.check("orthonormality_residual", spec.orthonormality_residual(), 1e-10)
        with self.stage("write_spectrum"):
            write_csv(
                self.emit("eigenvalues.csv"),
                ["index", "tau", "classification", "parity_overlap"],
                ([p.index, p.eigenvalue, p.classification.value, p.parity.real] for p in spec),
            )
        self.notes.append(f"max |tau| = {tau_max:.6g}")
        return grid, kernel, matrix, spec

    def selected(self, spec):
        sel = self.config.selection
        if sel.indices is not None:
            return [spec[i] for i in sel.indices]
        return select_eigenpairs(spec, self.config.params, sel.classification, sel.count, sel.max_edge_ratio)

    def write_eigenfunctions(self, grid, pairs):
        header = ["q"]
        for p in pairs:
            header += [f"re_psi_{p.index}", f"im_psi_{p.index}"]
        rows = []
        for i, q in enumerate(grid.points):
            row = [q]
            for p in pairs:
                row += [p.psi[i].real, p.psi[i].imag]
            rows.append(row)
        write_csv(self.emit("eigenfunctions.csv"), header, rows)

    def evolve(self, grid, pair):
        c = self.config
        ev = c.evolution
        tau = abs(pair.eigenvalue)
        steps = max(int(math.ceil(ev.horizon * tau / ev.dt)), 2)
        stride = max(1, steps // ev.min_samples)
        state = WavefunctionState(grid, pair.psi)
        series = evolve_and_record(
            state, c.potential, c.params, EvolutionConfig(ev.dt, steps, stride, ev.record_density, emit_warnings=False)
        )
        for msg in series.warnings:
            self.notes.append(f"eigenfunction {pair.index}: {msg}")
        drift = float(np.max(np.abs(series.norm - series.norm[0])))
        self.check(f"norm_drift_{pair.index}", drift, 1e-10)
        write_csv(
            self.emit(f"observables_{pair.index}.csv"),
            ["t", "mean_q", "var_q", "norm"],
            zip(series.times, series.mean_q, series.var_q, series.norm),
        )
        if series.density is not None:
            write_csv(
                self.emit(f"density_{pair.index}.csv"),
                ["t", "q", "density"],
                ((t, q, d) for t, row in zip(series.times, series.density) for q, d in zip(grid.points, row)),
            )
        return state, series

    def diagnostics(self, grid, kernel, matrix, spec=None):
        c = self.config
        out = {}
        with self.stage("conjugacy"):
            try:
                rep = tke_residual(self.factor(), c.potential, c.params, c.conjugacy.box, c.conjugacy.h, c.conjugacy.samples)
                out["tke"] = {
                    "residual": rep.residual, "diagonal_error": rep.diagonal_error,
                    "antidiagonal_error": rep.antidiagonal_error, "h": rep.step, "box": list(c.conjugacy.box),
                }
            except Exception as exc:  # recorded, not fatal for the diagnostics file
                out["tke"] = {"error": str(exc)}
        if grid is not None:
            with self.stage("parity"):
                out["parity_kernel_residual"] = parity_kernel_residual(kernel, grid, matrix)
                out["potential_even"] = bool(c.potential.is_even)
                if spec is not None:
                    mags = np.abs([p.parity for p in spec])
                    out["parity_overlap_min"] = float(mags.min())
                    out["parity_overlap_max"] = float(mags.max())
        return out

    # -------------------------------------------------------------- commands

    def run(self):
        c = self.config
        cmd = self.command
        if cmd == "kernel":
            lo, hi = c.kernel.dump_range
            s = np.linspace(lo, hi, c.kernel.dump_points)
            Q, P = np.meshgrid(s, s, indexing="ij")
            with self.stage("kernel"):
                T = self.factor()(Q, P)
            write_csv(self.emit("kernel.csv"), ["q", "q_prime", "T"], zip(Q.ravel(), P.ravel(), np.ravel(T)))
            return
        if cmd == "conjugacy":
            write_json(self.emit("diagnostics.json"), self.diagnostics(None, None, None))
            return
        if cmd == "sweep":
            self.sweep()
            return

        grid, kernel, matrix, spec = self.spectrum()
        if cmd == "parity":
            diag = self.diagnostics(grid, kernel, matrix, spec)
            if not c.potential.is_even:
                with self.stage("reflection"):
                    rc = reflected_potential_eigen_check(c.potential, self.factor(), grid, spec)
                diag["reflection"] = {
                    "eigenvalue_mismatch": rc.eigenvalue_mismatch, "eigenvalue_scale": rc.scale,
                    "min_overlap": rc.min_overlap,
                }
            write_json(self.emit("diagnostics.json"), diag)
            return
        pairs = self.selected(spec)
        if not pairs:
            self.notes.append("no eigenfunction matched the selection")
        self.write_eigenfunctions(grid, pairs)
        if cmd == "spectrum":
            return
        for pair in pairs:
            with self.stage(f"evolve_{pair.index}"):
                state, series = self.evolve(grid, pair)
            if cmd == "evolve":
                continue
            with self.stage(f"arrival_{pair.index}"):
                try:
                    rep = arrival_report(series, pair.eigenvalue, c.arrival_point, pair.classification)
                    data = rep.to_dict()
                    prof = density_profile(evolve_to(state, c.potential, c.params, rep.t_minvar, c.evolution.dt).psi, grid)
                    data.update(peak_density=prof.peak, peak_position=prof.peak_position, fwhm=prof.fwhm)
                except NoArrivalError as exc:
                    data = {"eigenvalue": pair.eigenvalue, "classification": pair.classification.value,
                            "arrival": None, "reason": str(exc)}
                data["index"] = pair.index
            write_json(self.emit(f"arrival_{pair.index}.json"), data)
        if cmd == "arrival":
            write_json(self.emit("diagnostics.json"), self.diagnostics(grid, kernel, matrix, spec))

    def sweep(self):
        c = self.config
        grid, kernel, matrix, spec = self.spectrum()
        pairs = self.selected(spec)
        if not pairs:
            raise NoArrivalError("no eigenfunction matched the selection for the sweep")
        pair = pairs[0]
        with self.stage("sweep"):
            entries = deformation_sweep(
                self.factor(), c.sweep_alphas, grid, pair.psi, c.evolution.dt, c.evolution.horizon,
                reference_tau=pair.eigenvalue,
            )
        rows = []
        for e in entries:
            r = e.report
            rows.append([
                e.alpha, e.eigenvalue if e.eigenvalue is not None else math.nan, e.overlap, str(e.tracked),
                r.t_minvar if r else math.nan, e.deviation if r else math.nan,
                e.profile.peak_position if e.profile else math.nan, str(e.degraded), e.note,
            ])
        write_csv(
            self.emit("sweep.csv"),
            ["alpha", "tau", "overlap", "tracked", "t_minvar", "minvar_deviation", "peak_position", "degraded", "note"],
            rows,
        )
        write_json(
            self.emit("sweep.json"),
            {"reference_index": pair.index, "reference_tau": pair.eigenvalue,
             "entries": [{"alpha": e.alpha, "tau": e.eigenvalue, "overlap": e.overlap, "tracked": e.tracked,
                          "report": e.report.to_dict() if e.report else None, "degraded": e.degraded,
                          "note": e.note} for e in entries]},
        )

    def manifest(self, status, error=None):
        return {
            "command": self.command,
            "status": status,
            "error": error,
            "version": _version(),
            "config": self.config.echo() if self.config is not None else None,
            "timings": self.timings,
            "checks": self.checks,
            "files": self.files,
            "notes": self.notes,
        }


def run_pipeline(config: RunConfig, command: str = "arrival", out_dir=None) -> dict:
    """Run one command; returns the manifest (also written to disk).

    Exceptions propagate after the manifest has been written.
    """
    out = Path(out_dir or config.output or "qtoa-out")
    out.mkdir(parents=True, exist_ok=True)
    run = PipelineRun(config, command, out)
    try:
        run.run()
    except Exception as exc:
        manifest = run.manifest("failed", f"{type(exc).__name__}: {exc}")
        write_json(out / "manifest.json", manifest)
        raise
    manifest = run.manifest("ok")
    write_json(out / "manifest.json", manifest)
    return manifest
