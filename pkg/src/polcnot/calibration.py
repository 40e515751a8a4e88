"""Ideal CNOT map, calibration of the cell, truth tables and fidelity studies.

A cell realizes the gate on the basis inputs when the target rotation is

    phi(gamma=0)    = 0    (mod pi)   control parallel: target unchanged
    phi(gamma=pi/2) = pi/2 (mod pi)   control perpendicular: target flipped

with phi(0) > phi(pi/2). Each admissible solution sits in a winding class
``(k_par, k_perp)`` with phi(0) = k_par * pi and phi(pi/2) = (k_perp + 1/2) * pi.
Calibration scans a grid over two free cell parameters, picks the smallest
admissible winding class the grid touches, and refines inside that class
with a bounded Nelder-Mead simplex.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence, Union

import numpy as np
from scipy import optimize

from .cell import CNOTCell, mc_shot_distribution, propagate_target, simulate_cell
from .polarization import (
    HORIZONTAL,
    VERTICAL,
    fidelity,
    mod_pi_distance,
    normalize_angle,
)

FREE_PARAMETERS = ("L", "E_C", "n", "T")

# (control_in, target_in) -> (control_out, target_out), straight from the gate table
TRUTH_TABLE: tuple[tuple[tuple[float, float], tuple[float, float]], ...] = (
    ((HORIZONTAL, HORIZONTAL), (HORIZONTAL, HORIZONTAL)),
    ((HORIZONTAL, VERTICAL), (HORIZONTAL, VERTICAL)),
    ((VERTICAL, HORIZONTAL), (VERTICAL, VERTICAL)),
    ((VERTICAL, VERTICAL), (VERTICAL, HORIZONTAL)),
)

Engine = Callable[[float, float], "tuple[float, float]"]


class CalibrationError(Exception):
    pass


class NoSolutionInBounds(CalibrationError):
    pass


class EvaluationCapExceeded(CalibrationError):
    pass


def ideal_cnot(gamma: float, tau: float) -> tuple[float, float]:
    """Control passes through; target leaves as tau - gamma (mod pi)."""
    return normalize_angle(gamma), normalize_angle(tau - gamma)


def basis_residuals(cell: CNOTCell, tau: float = 0.0) -> tuple[float, float]:
    """Distances (d0, d1) of the two basis congruences; independent of tau."""
    out_par = propagate_target(cell, tau, HORIZONTAL).out_angle
    out_perp = propagate_target(cell, tau, VERTICAL).out_angle
    return mod_pi_distance(out_par, tau), mod_pi_distance(out_perp, normalize_angle(tau - VERTICAL))


def calibration_residual(cell: CNOTCell, tau: float = 0.0) -> float:
    d0, d1 = basis_residuals(cell, tau)
    return math.hypot(d0, d1)


def winding_pair(cell: CNOTCell) -> tuple[float, float]:
    """Total target rotations (phi_parallel, phi_perp) at gamma = 0 and pi/2."""
    return (
        propagate_target(cell, 0.0, HORIZONTAL).total_rotation,
        propagate_target(cell, 0.0, VERTICAL).total_rotation,
    )


@dataclass(frozen=True)
class CalibrationProblem:
    """Cell template plus the two parameters calibration may move.

    ``min_rotation`` and ``max_rotation`` bound the total target rotation:
    the perpendicular-control rotation must reach ``min_rotation`` (the
    target winds through the cell) and the parallel one must stay below
    ``max_rotation``.
    """

    cell: CNOTCell
    free: tuple[str, str] = ("L", "E_C")
    bounds: tuple[tuple[float, float], tuple[float, float]] = ((1e-3, 1.0), (0.0, 1e7))
    min_rotation: float = 2 * math.pi
    max_rotation: float = 8 * math.pi
    tolerance: float = 1e-9
    grid: int = 64
    max_evaluations: int = 100_000

    def __post_init__(self) -> None:
        if len(self.free) != 2 or self.free[0] == self.free[1]:
            raise ValueError(f"exactly two distinct free parameters required, got {self.free!r}")
        for name in self.free:
            if name not in FREE_PARAMETERS:
                raise ValueError(f"free parameter must be one of {FREE_PARAMETERS}, got {name!r}")
        if len(self.bounds) != 2:
            raise ValueError("one (lo, hi) bound per free parameter required")
        for name, (lo, hi) in zip(self.free, self.bounds):
            if not (math.isfinite(lo) and math.isfinite(hi) and 0 <= lo < hi):
                raise ValueError(f"bounds for {name} must be finite with 0 <= lo < hi, got {(lo, hi)!r}")
            if name != "E_C" and lo == 0:
                raise ValueError(f"lower bound for {name} must be positive")
        if not (0 <= self.min_rotation < self.max_rotation and math.isfinite(self.max_rotation)):
            raise ValueError("winding bounds must satisfy 0 <= min_rotation < max_rotation < inf")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.grid < 2:
            raise ValueError("grid must have at least 2 points per axis")

    def cell_at(self, values: Sequence[float]) -> CNOTCell:
        return self.cell.with_params(**dict(zip(self.free, (float(v) for v in values))))


@dataclass(frozen=True)
class CalibrationResult:
    params: dict[str, float]
    residual: float
    w_parallel: float
    w_perp: float
    evaluations: int
    cell: CNOTCell = field(repr=False)

    @property
    def winding_class(self) -> tuple[int, int]:
        return _winding_class(self.w_parallel, self.w_perp)


def _winding_class(phi_par: float, phi_perp: float) -> tuple[int, int]:
    return round(phi_par / math.pi), round(phi_perp / math.pi - 0.5)


def _class_targets(k: tuple[int, int]) -> tuple[float, float]:
    return k[0] * math.pi, (k[1] + 0.5) * math.pi


def calibrate(problem: CalibrationProblem) -> CalibrationResult:
    evaluations = 0
    lo = np.array([b[0] for b in problem.bounds])
    span = np.array([b[1] - b[0] for b in problem.bounds])

    def rotations(u: np.ndarray) -> tuple[float, float]:
        nonlocal evaluations
        evaluations += 1
        return winding_pair(problem.cell_at(lo + span * u))

    # coarse scan, row-major over (first free, second free)
    axis = np.linspace(0.0, 1.0, problem.grid)
    best: dict[tuple[int, int], tuple[float, int, np.ndarray]] = {}
    for idx, (a, b) in enumerate(itertools.product(axis, axis)):
        u = np.array([a, b])
        phi_par, phi_perp = rotations(u)
        k = _winding_class(phi_par, phi_perp)
        t_par, t_perp = _class_targets(k)
        if not (t_perp >= problem.min_rotation and t_par <= problem.max_rotation and t_par > t_perp):
            continue
        res = math.hypot(phi_par - t_par, phi_perp - t_perp)
        if res >= math.pi / 4:
            continue
        if k not in best or res < best[k][0]:
            best[k] = (res, idx, u)
    if not best:
        raise NoSolutionInBounds(
            f"no grid point over {dict(zip(problem.free, problem.bounds))} comes within pi/4 of an admissible winding"
        )

    for k in sorted(best):
        t_par, t_perp = _class_targets(k)
        step = 1.0 / (problem.grid - 1)

        def objective(u: np.ndarray) -> float:
            phi_par, phi_perp = rotations(np.clip(u, 0.0, 1.0))
            return math.hypot(phi_par - t_par, phi_perp - t_perp)

        u = best[k][2]
        while evaluations < problem.max_evaluations:
            simplex = np.array([u, u + [step, 0.0], u + [0.0, step]])
            simplex = np.where(simplex > 1.0, simplex - 2 * step, simplex)
            r = optimize.minimize(
                objective,
                u,
                method="Nelder-Mead",
                bounds=[(0.0, 1.0), (0.0, 1.0)],
                options={
                    "initial_simplex": simplex,
                    "xatol": 1e-16,
                    "fatol": problem.tolerance * 1e-3,
                    "maxfev": problem.max_evaluations - evaluations,
                },
            )
            moved = float(np.max(np.abs(r.x - u)))
            u = np.clip(r.x, 0.0, 1.0)
            cell = problem.cell_at(lo + span * u)
            if calibration_residual(cell) <= problem.tolerance and r.fun <= problem.tolerance:
                w_par, w_perp = winding_pair(cell)
                return CalibrationResult(
                    params=dict(zip(problem.free, (float(v) for v in lo + span * u))),
                    residual=calibration_residual(cell),
                    w_parallel=w_par,
                    w_perp=w_perp,
                    evaluations=evaluations,
                    cell=cell,
                )
            if moved == 0.0:
                break  # stuck in this class, try the next one
            step = max(moved, 1e-12)
    raise EvaluationCapExceeded(
        f"refinement did not reach residual {problem.tolerance:g} within {problem.max_evaluations} evaluations"
    )


@dataclass(frozen=True)
class TruthTableRow:
    control_in: float
    target_in: float
    control_out: float
    target_out: float
    expected_control: float
    expected_target: float
    distance: float  # worst of control and target mod-pi distance
    fidelity: float  # target fidelity
    passed: bool


@dataclass(frozen=True)
class TruthTableReport:
    rows: tuple[TruthTableRow, ...]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def pass_count(self) -> int:
        return sum(r.passed for r in self.rows)

    @property
    def mean_fidelity(self) -> float:
        return sum(r.fidelity for r in self.rows) / len(self.rows)


def _as_engine(engine: Union[CNOTCell, Engine, str, None]) -> Engine:
    if engine is None or engine == "ideal":
        return ideal_cnot
    if isinstance(engine, CNOTCell):
        return lambda g, t: simulate_cell(engine, g, t)
    if callable(engine):
        return engine
    raise TypeError(f"cannot use {engine!r} as a gate engine")


def run_truth_table(engine: Union[CNOTCell, Engine, str, None] = "ideal", tolerance: float = 1e-6) -> TruthTableReport:
    run = _as_engine(engine)
    rows = []
    for (c_in, t_in), (c_exp, t_exp) in TRUTH_TABLE:
        c_out, t_out = run(c_in, t_in)
        dist = max(mod_pi_distance(c_out, c_exp), mod_pi_distance(t_out, t_exp))
        rows.append(
            TruthTableRow(c_in, t_in, c_out, t_out, c_exp, t_exp, dist, fidelity(t_out, t_exp), dist <= tolerance)
        )
    return TruthTableReport(tuple(rows), tolerance)


def mean_basis_fidelity(cell: CNOTCell) -> float:
    return run_truth_table(cell).mean_fidelity


@dataclass(frozen=True)
class NoiseConfig:
    shots: int
    molecules_per_shot: int
    seed: int = 0


@dataclass(frozen=True)
class FidelityPoint:
    gamma: float
    tau: float
    target_out: float
    ideal_target: float
    fidelity: float
    noisy_fidelity: float | None = None  # mean over shots


@dataclass(frozen=True)
class FidelityReport:
    points: tuple[FidelityPoint, ...]

    @property
    def mean_fidelity(self) -> float:
        return float(np.mean([p.fidelity for p in self.points]))

    @property
    def mean_noisy_fidelity(self) -> float | None:
        vals = [p.noisy_fidelity for p in self.points]
        if any(v is None for v in vals):
            return None
        return float(np.mean(vals))


def gate_fidelity_report(
    cell: CNOTCell, grid: Iterable[float], noise: NoiseConfig | None = None
) -> FidelityReport:
    """Target fidelity against the ideal map over every (gamma, tau) in grid x grid."""
    angles = list(grid)
    points = []
    for gamma, tau in itertools.product(angles, angles):
        _, t_out = simulate_cell(cell, gamma, tau)
        _, t_ideal = ideal_cnot(gamma, tau)
        noisy = None
        if noise is not None:
            sample = mc_shot_distribution(cell, gamma, tau, noise.shots, noise.molecules_per_shot, noise.seed)
            noisy = float(np.mean(np.cos(sample.out_angles - t_ideal) ** 2))
        points.append(FidelityPoint(gamma, tau, t_out, t_ideal, fidelity(t_out, t_ideal), noisy))
    return FidelityReport(tuple(points))


@dataclass(frozen=True)
class SweepRow:
    T: float
    recalibrated: CalibrationResult | None
    error: str | None
    fixed_fidelity: float | None  # mean basis fidelity of the reference calibration at this T

    @property
    def residual(self) -> float | None:
        return None if self.recalibrated is None else self.recalibrated.residual

    @property
    def ok(self) -> bool:
        return self.recalibrated is not None


def temperature_sweep(problem: CalibrationProblem, T_values: Sequence[float]) -> list[SweepRow]:
    """Recalibrate at each temperature and track drift of the first calibration.

    The reference cell is calibrated at ``T_values[0]``; its fidelity at every
    other temperature is reported without retuning.
    """
    T_values = [float(t) for t in T_values]
    if not T_values:
        raise ValueError("T_values must not be empty")
    if any(t <= 0 for t in T_values):
        raise ValueError("temperatures must be positive")
    if any(b < a for a, b in zip(T_values, T_values[1:])):
        raise ValueError("temperatures must be sorted")
    if "T" in problem.free:
        raise ValueError("temperature cannot be a free parameter of a temperature sweep")

    rows: list[SweepRow] = []
    reference: CNOTCell | None = None
    for i, T in enumerate(T_values):
        sub = replace(problem, cell=problem.cell.with_params(T=T))
        try:
            result, error = calibrate(sub), None
        except CalibrationError as exc:
            result, error = None, str(exc)
        if i == 0 and result is not None:
            reference = result.cell
        fixed = None if reference is None else mean_basis_fidelity(reference.with_params(T=T))
        rows.append(SweepRow(T, result, error, fixed))
    return rows
