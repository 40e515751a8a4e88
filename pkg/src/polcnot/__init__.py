"""Simulation and calibration of an optical CNOT cell built from triactive molecules."""

from .calibration import (
    CalibrationProblem,
    CalibrationResult,
    EvaluationCapExceeded,
    NoSolutionInBounds,
    NoiseConfig,
    calibrate,
    gate_fidelity_report,
    ideal_cnot,
    run_truth_table,
    temperature_sweep,
)
from .cell import (
    CellGeometry,
    CNOTCell,
    PropagationResult,
    alignment_factor,
    mc_shot_distribution,
    propagate_control,
    propagate_target,
    rotatory_power,
    simulate_cell,
)
from .medium import (
    BOLTZMANN,
    FieldConfig,
    Solution,
    TriactiveMolecule,
    b_field_order_parameter,
    langevin_debye_polarization,
    mc_mean_polarization,
    oracle_compare,
    orientation_pdf,
)
from .polarization import (
    JonesVector,
    StokesVector,
    angle_to_jones,
    fidelity,
    jones_to_stokes,
    mod_pi_distance,
    normalize_angle,
    rotate_angle,
)
from .scenario import Scenario, ScenarioError, parse_scenario, serialize_scenario

__version__ = "0.1.0"
