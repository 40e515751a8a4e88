"""Dispatch a scenario to the library and write its CSV and summary files."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field, replace

from .calibration import (
    CalibrationError,
    calibrate,
    ideal_cnot,
    run_truth_table,
    temperature_sweep,
)
from .cell import mc_shot_distribution, propagate_control, propagate_target
from .medium import oracle_compare
from .polarization import fidelity, mod_pi_distance
from .scenario import Scenario, serialize_scenario, with_cell

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_CALIBRATION = 2
EXIT_TRUTH_TABLE = 3
EXIT_IO = 4

TRUTH_TABLE_COLUMNS = (
    "control_in_rad",
    "target_in_rad",
    "control_out_rad",
    "target_out_rad",
    "expected_target_rad",
    "distance_rad",
    "fidelity",
    "pass",
)
SIMULATE_COLUMNS = (
    "control_in_rad",
    "target_in_rad",
    "control_out_rad",
    "target_out_rad",
    "total_rotation_rad",
    "rotatory_power_rad_per_m",
    "ideal_target_rad",
    "fidelity",
)
SHOT_COLUMNS = ("shot", "polarization_C_per_m2", "total_rotation_rad", "target_out_rad")
CALIBRATION_COLUMNS = ("name", "value")
ORACLE_COLUMNS = ("x", "samples", "seed", "P_formula", "P_mc", "P_mc_std_error", "ratio")
TEMPERATURE_SWEEP_COLUMNS = (
    "T",
    "recalibrated",
    "residual_rad",
    "free_1",
    "free_1_value",
    "free_2",
    "free_2_value",
    "w_parallel_rad",
    "w_perp_rad",
    "fixed_mean_fidelity",
)
PARAMETER_SWEEP_COLUMNS = ("parameter", "value", "pass_count", "max_distance_rad", "mean_fidelity")


@dataclass
class RunReport:
    kind: str
    exit_code: int
    summary: list[str] = field(default_factory=list)
    tables: dict[str, tuple[tuple[str, ...], list[tuple]]] = field(default_factory=dict)
    extra_files: dict[str, str] = field(default_factory=dict)
    files: list[str] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def summary_text(self) -> str:
        return "\n".join(self.summary) + "\n"


def fmt(v) -> str:
    """Shortest round-trip rendering for CSV cells."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _truth_table(s: Scenario, report: RunReport) -> None:
    cell = s.cell
    if s.run.free:
        try:
            cal = calibrate(s.calibration_problem())
        except CalibrationError as exc:
            report.summary.append(f"calibration failed: {exc}")
            report.exit_code = EXIT_CALIBRATION
            return
        cell = cal.cell
        report.summary.append(f"calibrated {_params(cal.params)} residual={cal.residual:.3e} rad")
    table = run_truth_table(cell, s.run.tolerance)
    rows = [
        (r.control_in, r.target_in, r.control_out, r.target_out, r.expected_target, r.distance, r.fidelity, r.passed)
        for r in table.rows
    ]
    report.tables["truth_table"] = (TRUTH_TABLE_COLUMNS, rows)
    report.data["truth_table"] = table
    report.summary.append(f"truth table: {table.pass_count}/4 rows pass at tolerance {s.run.tolerance:g} rad")
    for r in table.rows:
        report.summary.append(
            f"  ({r.control_in:.6f}, {r.target_in:.6f}) -> ({r.control_out:.6f}, {r.target_out:.6f})"
            f"  distance={r.distance:.3e}  {'PASS' if r.passed else 'FAIL'}"
        )
    if not table.passed:
        report.exit_code = EXIT_TRUTH_TABLE


def _params(params: dict) -> str:
    return " ".join(f"{k}={v!r}" for k, v in params.items())


def _simulate(s: Scenario, report: RunReport) -> None:
    gamma, tau = s.gamma, s.tau
    ctrl = propagate_control(s.cell, gamma)
    tgt = propagate_target(s.cell, tau, gamma)
    _, ideal = ideal_cnot(gamma, tau)
    row = (gamma, tau, ctrl.out_angle, tgt.out_angle, tgt.total_rotation, tgt.rotatory_power, ideal, fidelity(tgt.out_angle, ideal))
    report.tables["simulate"] = (SIMULATE_COLUMNS, [row])
    report.data["control"], report.data["target"] = ctrl, tgt
    report.summary.append(f"control {gamma!r} -> {ctrl.out_angle!r}")
    report.summary.append(
        f"target {tau!r} -> {tgt.out_angle!r} (total rotation {tgt.total_rotation!r} rad, "
        f"{tgt.total_rotation / math.pi:.6f} pi)"
    )
    if s.mc.shots > 0:
        shots = mc_shot_distribution(s.cell, gamma, tau, s.mc.shots, s.mc.molecules_per_shot, s.mc.seed)
        rows = [(i, float(p), float(t), float(o)) for i, (p, t, o) in enumerate(zip(shots.polarizations, shots.total_rotations, shots.out_angles))]
        report.tables["simulate_shots"] = (SHOT_COLUMNS, rows)
        report.data["shots"] = shots
        dev = shots.deviations
        report.summary.append(
            f"{s.mc.shots} shots x {s.mc.molecules_per_shot} molecules: output spread {float(dev.std(ddof=1)) if dev.size > 1 else 0.0:.3e} rad"
        )


def _calibrate(s: Scenario, report: RunReport) -> None:
    try:
        cal = calibrate(s.calibration_problem())
    except CalibrationError as exc:
        report.summary.append(f"calibration failed: {exc}")
        report.exit_code = EXIT_CALIBRATION
        return
    report.data["calibration"] = cal
    rows = [(k, v) for k, v in cal.params.items()]
    rows += [("residual_rad", cal.residual), ("w_parallel_rad", cal.w_parallel), ("w_perp_rad", cal.w_perp), ("evaluations", cal.evaluations)]
    report.tables["calibration"] = (CALIBRATION_COLUMNS, rows)
    calibrated = with_cell(s, cal.cell, kind="truth-table", free=(), bounds=())
    report.extra_files["calibrated.scn"] = serialize_scenario(calibrated)
    report.summary.append(f"calibrated {_params(cal.params)}")
    report.summary.append(
        f"residual={cal.residual:.3e} rad  winding=({cal.w_parallel / math.pi:.6f} pi, {cal.w_perp / math.pi:.6f} pi)"
        f"  evaluations={cal.evaluations}"
    )


def _sweep(s: Scenario, report: RunReport) -> None:
    sw = s.sweep
    if sw.parameter == "T":
        rows_out = temperature_sweep(s.calibration_problem(), sw.values)
        f1, f2 = s.run.free
        rows = []
        for r in rows_out:
            c = r.recalibrated
            rows.append(
                (
                    r.T,
                    r.ok,
                    None if c is None else c.residual,
                    f1,
                    None if c is None else c.params[f1],
                    f2,
                    None if c is None else c.params[f2],
                    None if c is None else c.w_parallel,
                    None if c is None else c.w_perp,
                    r.fixed_fidelity,
                )
            )
            report.summary.append(
                f"T={r.T!r}: recalibration {'ok' if r.ok else 'FAILED'}"
                + ("" if r.fixed_fidelity is None else f", fixed-calibration mean fidelity {r.fixed_fidelity:.9f}")
            )
        report.tables["sweep"] = (TEMPERATURE_SWEEP_COLUMNS, rows)
        report.data["sweep"] = rows_out
        if rows_out[0].recalibrated is None:
            report.exit_code = EXIT_CALIBRATION
        return

    rows = []
    for v in sw.values:
        if sw.parameter in ("gamma", "tau"):
            gamma = v if sw.parameter == "gamma" else s.gamma
            tau = v if sw.parameter == "tau" else s.tau
            c_out, t_out = propagate_control(s.cell, gamma).out_angle, propagate_target(s.cell, tau, gamma).out_angle
            _, ideal = ideal_cnot(gamma, tau)
            d = mod_pi_distance(t_out, ideal)
            rows.append((sw.parameter, v, int(d <= s.run.tolerance), d, fidelity(t_out, ideal)))
        else:
            table = run_truth_table(s.cell.with_params(**{sw.parameter: v}), s.run.tolerance)
            rows.append((sw.parameter, v, table.pass_count, max(r.distance for r in table.rows), table.mean_fidelity))
        report.summary.append(f"{sw.parameter}={v!r}: mean fidelity {rows[-1][4]:.9f}")
    report.tables["sweep"] = (PARAMETER_SWEEP_COLUMNS, rows)


def _oracle(s: Scenario, report: RunReport) -> None:
    o = oracle_compare(s.solution, s.fields.E_C, s.mc.samples, s.mc.seed, s.mc.workers)
    report.data["oracle"] = o
    report.tables["oracle"] = (ORACLE_COLUMNS, [(o.x, o.samples, o.seed, o.P_formula, o.P_mc, o.P_mc_std_error, o.ratio)])
    report.summary.append(f"x = p E_C / kT = {o.x!r}")
    report.summary.append(f"closed form P = {o.P_formula!r} C/m^2")
    report.summary.append(f"sampled     P = {o.P_mc!r} +- {o.P_mc_std_error!r} C/m^2 ({o.samples} samples, seed {o.seed})")
    report.summary.append("ratio = undefined (both zero)" if o.ratio is None else f"ratio = {o.ratio!r} (pi*sqrt(2) = {math.pi * math.sqrt(2)!r})")


_DISPATCH = {
    "simulate": _simulate,
    "truth-table": _truth_table,
    "calibrate": _calibrate,
    "sweep": _sweep,
    "oracle": _oracle,
}


def run_scenario(s: Scenario, write: bool = True) -> RunReport:
    """Run the scenario's kind; files go to ``s.output.dir`` when ``write``."""
    report = RunReport(kind=s.run.kind, exit_code=EXIT_OK)
    _DISPATCH[s.run.kind](s, report)
    if write:
        try:
            _write(s, report)
        except OSError as exc:
            report.summary.append(f"cannot write output: {exc}")
            report.exit_code = EXIT_IO
    return report


def _write(s: Scenario, report: RunReport) -> None:
    os.makedirs(s.output.dir, exist_ok=True)
    contents: dict[str, str] = {}
    if "csv" in s.output.formats:
        for name, (cols, rows) in report.tables.items():
            contents[f"{name}.csv"] = csv_text(cols, rows)
    if "txt" in s.output.formats:
        contents[f"{s.run.kind}_summary.txt"] = report.summary_text()
    contents.update(report.extra_files)
    for name, text in contents.items():
        path = os.path.join(s.output.dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        report.files.append(path)


def override(s: Scenario, kind: str | None = None, seed: int | None = None, out: str | None = None, tolerance: float | None = None) -> Scenario:
    if kind is not None:
        s = replace(s, run=replace(s.run, kind=kind))
    if seed is not None:
        s = replace(s, mc=replace(s.mc, seed=seed))
    if out is not None:
        s = replace(s, output=replace(s.output, dir=out))
    if tolerance is not None:
        s = replace(s, run=replace(s.run, tolerance=tolerance))
    return s
