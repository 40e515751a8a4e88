"""Propagation of control and target beams through the CNOT cell.

The control beam travels along B and leaves unchanged. The target beam
travels perpendicular to B and turns by ``rho(gamma) * L``, where the
rotatory power

    rho(gamma) = n * sigma0 + kappa * A * P(E_C) * g(gamma)

adds to the baseline optical activity a term set by how well the control
polarization lines up with the target propagation axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .medium import (
    FieldConfig,
    Solution,
    b_field_order_parameter,
    dipole_field_ratio,
    langevin_debye_polarization,
    mean_cosine,
    orientation_moments,
)
from .polarization import LinearPolarizationAngle, normalize_angle, signed_mod_pi_difference
from .streams import SHOT


def cos2_alignment(gamma: float) -> float:
    return math.cos(gamma) ** 2


# Pluggable; cos^2 interpolates the parallel (1) and perpendicular (0) extremes.
alignment_factor: Callable[[float], float] = cos2_alignment


@dataclass(frozen=True)
class CellGeometry:
    L: float  # path length of the target beam, m

    def __post_init__(self) -> None:
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"path length L must be positive and finite, got {self.L!r}")


@dataclass(frozen=True)
class CNOTCell:
    geometry: CellGeometry
    solution: Solution
    fields: FieldConfig

    @property
    def order_parameter(self) -> float:
        s = self.solution
        return b_field_order_parameter(s.molecule, self.fields.B, s.T, s.boltzmann)

    @property
    def polarization_density(self) -> float:
        return langevin_debye_polarization(self.solution, self.fields.E_C)

    def with_params(self, **params: float) -> CNOTCell:
        """Copy with any of ``L``, ``E_C``, ``B``, ``n``, ``T`` replaced."""
        geometry, solution, fields = self.geometry, self.solution, self.fields
        for name, value in params.items():
            if name == "L":
                geometry = CellGeometry(value)
            elif name in ("n", "T"):
                solution = replace(solution, **{name: value})
            elif name in ("E_C", "B"):
                fields = replace(fields, **{name: value})
            else:
                raise KeyError(f"unknown cell parameter {name!r}")
        return CNOTCell(geometry, solution, fields)


@dataclass(frozen=True)
class PropagationResult:
    out_angle: LinearPolarizationAngle
    total_rotation: float  # unwound, rad
    rotatory_power: float  # rad/m


def rotatory_power(
    cell: CNOTCell, gamma: float, polarization: float | None = None, g=None
) -> float:
    """Target-beam rotatory power in rad/m.

    ``polarization`` overrides the closed-form density (used by noise studies).
    """
    sol = cell.solution
    P = cell.polarization_density if polarization is None else polarization
    g = alignment_factor if g is None else g
    baseline = sol.n * sol.molecule.sigma0
    if sol.molecule.kappa == 0 or P == 0:
        return baseline
    return baseline + sol.molecule.kappa * cell.order_parameter * P * g(gamma)


def propagate_control(cell: CNOTCell, gamma: float) -> PropagationResult:
    return PropagationResult(out_angle=normalize_angle(gamma), total_rotation=0.0, rotatory_power=0.0)


def propagate_target(cell: CNOTCell, tau: float, gamma: float, polarization: float | None = None) -> PropagationResult:
    rho = rotatory_power(cell, gamma, polarization)
    total = rho * cell.geometry.L
    return PropagationResult(out_angle=normalize_angle(tau - total), total_rotation=total, rotatory_power=rho)


def slice_rotation(cell: CNOTCell, gamma: float, slices: int = 1000) -> float:
    """Accumulate the target rotation slice by slice (reference for rho * L)."""
    dz = cell.geometry.L / slices
    return math.fsum(rotatory_power(cell, gamma) * dz for _ in range(slices))


def simulate_cell(cell: CNOTCell, gamma: float, tau: float) -> tuple[float, float]:
    """Both beams against the same cell state; returns (control_out, target_out)."""
    return propagate_control(cell, gamma).out_angle, propagate_target(cell, tau, gamma).out_angle


@dataclass(frozen=True)
class ShotSample:
    out_angles: np.ndarray
    total_rotations: np.ndarray
    polarizations: np.ndarray
    analytic: PropagationResult

    @property
    def deviations(self) -> np.ndarray:
        """Signed mod-pi offsets of each shot from the analytic output."""
        return np.array([signed_mod_pi_difference(a, self.analytic.out_angle) for a in self.out_angles])


def shot_polarization_scale(cell: CNOTCell) -> float:
    """Factor turning a sampled mean projection <cos> into a polarization density.

    Chosen so the shot average reproduces the closed-form density exactly;
    the sampled values contribute only their relative fluctuation.
    """
    sol = cell.solution
    x = dipole_field_ratio(sol, cell.fields.E_C)
    npp = sol.n * sol.molecule.p
    if x < 1e-6:
        # limit of P / <cos> as x -> 0
        return npp * math.pi * math.sqrt(2.0)
    return cell.polarization_density / mean_cosine(x)


def mc_shot_distribution(
    cell: CNOTCell, gamma: float, tau: float, shots: int, molecules_per_shot: int, seed: int = 0
) -> ShotSample:
    """Output angles when each shot sees a finite sample of oriented molecules."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    if molecules_per_shot < 1:
        raise ValueError(f"molecules_per_shot must be >= 1, got {molecules_per_shot}")
    x = dipole_field_ratio(cell.solution, cell.fields.E_C)
    scale = shot_polarization_scale(cell)
    outs = np.empty(shots)
    totals = np.empty(shots)
    pols = np.empty(shots)
    for s in range(shots):
        mom = orientation_moments(x, molecules_per_shot, seed, stream=SHOT, index=s)
        pols[s] = scale * mom.mean_cos
        r = propagate_target(cell, tau, gamma, polarization=pols[s])
        outs[s] = r.out_angle
        totals[s] = r.total_rotation
    return ShotSample(outs, totals, pols, propagate_target(cell, tau, gamma))
