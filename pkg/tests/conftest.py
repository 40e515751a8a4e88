import math

import pytest

from polcnot.calibration import CalibrationProblem, calibrate
from polcnot.cell import CellGeometry, CNOTCell
from polcnot.medium import NATURAL_BOLTZMANN, FieldConfig, Solution, TriactiveMolecule

# Natural units (k = 1, ideal magnetic locking). With sigma0 = n = 1 the
# perpendicular-control rotation is L itself, so L = 5 pi / 2 and
# E_C = 0.2 sqrt(2) / pi put the parallel rotation at 3 pi.
NATURAL_BOUNDS = ((0.5, 8.5), (0.0, 0.25))


def natural_cell(L=1.0, E_C=0.0, sigma0=1.0, kappa=1.0, n=1.0, T=1.0, B=math.inf, gamma=0.0):
    mol = TriactiveMolecule(p=1.0, m=1.0, sigma0=sigma0, kappa=kappa)
    sol = Solution(mol, n=n, T=T, boltzmann=NATURAL_BOLTZMANN)
    return CNOTCell(CellGeometry(L), sol, FieldConfig(B=B, E_C=E_C, gamma=gamma))


def natural_problem(**cell_kwargs):
    return CalibrationProblem(natural_cell(**cell_kwargs), free=("L", "E_C"), bounds=NATURAL_BOUNDS)


@pytest.fixture(scope="session")
def natural_calibration():
    return calibrate(natural_problem())


@pytest.fixture(scope="session")
def calibrated_cell(natural_calibration):
    return natural_calibration.cell


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
