"""Linear polarization states as directions modulo pi.

Angle 0 is the horizontal axis (in the plane of the bench drawing, the
``|1>`` state) and pi/2 is vertical (``|0>``). A positive rotation turns the
polarization from the 0-axis toward the pi/2-axis as seen looking along the
propagation direction; ``rotate_angle`` subtracts the rotation so that the
output of a medium with rotatory power ``rho`` over length ``L`` is
``theta - rho * L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# A polarization direction in [0, pi). Plain floats keep the arithmetic cheap.
LinearPolarizationAngle = float

HORIZONTAL: LinearPolarizationAngle = 0.0
VERTICAL: LinearPolarizationAngle = math.pi / 2

DEFAULT_ANGLE_TOL = 1e-9


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"angle must be finite, got {v!r}")


def normalize_angle(raw: float) -> LinearPolarizationAngle:
    """Reduce ``raw`` to its representative in [0, pi)."""
    _check_finite(raw)
    r = math.fmod(raw, math.pi)
    if r < 0.0:
        r += math.pi
    # fmod is exact, but the shift above can round up to pi itself
    if r >= math.pi:
        r = 0.0
    return r + 0.0  # drop the sign of -0.0


def rotate_angle(state: float, phi: float) -> LinearPolarizationAngle:
    """Rotate a polarization direction by ``phi`` radians (any winding)."""
    _check_finite(state, phi)
    return normalize_angle(state - phi)


def mod_pi_distance(a: float, b: float) -> float:
    """Distance between two directions on the circle of circumference pi.

    Returns a value in [0, pi/2].
    """
    d = abs(normalize_angle(a) - normalize_angle(b))
    return min(d, math.pi - d)


def signed_mod_pi_difference(a: float, b: float) -> float:
    """``a - b`` wrapped into [-pi/2, pi/2)."""
    d = normalize_angle(a - b)
    return d - math.pi if d >= math.pi / 2 else d


def angles_equal(a: float, b: float, tol: float = DEFAULT_ANGLE_TOL) -> bool:
    return mod_pi_distance(a, b) <= tol


def fidelity(a: float, b: float) -> float:
    """Squared overlap cos^2(a - b) of two linear polarization states."""
    return math.cos(a - b) ** 2


@dataclass(frozen=True)
class JonesVector:
    """Normalized pair of complex field amplitudes (horizontal, vertical).

    Two vectors compare equal when they differ only by a global phase.
    """

    a: complex
    b: complex

    def __post_init__(self) -> None:
        norm = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"Jones vector must have unit norm, got {norm!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b], dtype=complex)

    def inner(self, other: JonesVector) -> complex:
        return self.a.conjugate() * other.a + self.b.conjugate() * other.b

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, JonesVector):
            return NotImplemented
        return abs(abs(self.inner(other)) - 1.0) <= 1e-12

    def __hash__(self) -> int:
        # phase-invariant equality has no cheap consistent hash
        raise TypeError("JonesVector is unhashable")


@dataclass(frozen=True)
class StokesVector:
    s0: float
    s1: float
    s2: float
    s3: float

    @property
    def degree_of_polarization(self) -> float:
        return math.sqrt(self.s1**2 + self.s2**2 + self.s3**2) / self.s0

    def poincare_point(self) -> tuple[float, float, float]:
        """Unit vector on the Poincare sphere; linear states lie on the equator."""
        return (self.s1 / self.s0, self.s2 / self.s0, self.s3 / self.s0)


def angle_to_jones(state: float) -> JonesVector:
    return JonesVector(complex(math.cos(state)), complex(math.sin(state)))


def jones_to_stokes(j: JonesVector) -> StokesVector:
    a, b = j.a, j.b
    cross = a.conjugate() * b
    return StokesVector(
        s0=abs(a) ** 2 + abs(b) ** 2,
        s1=abs(a) ** 2 - abs(b) ** 2,
        s2=2.0 * cross.real,
        s3=2.0 * cross.imag,
    )


def angle_to_stokes(state: float) -> StokesVector:
    return jones_to_stokes(angle_to_jones(state))


def stokes_to_angle(s: StokesVector) -> LinearPolarizationAngle:
    """Direction of the linear part of ``s`` (half the Poincare azimuth)."""
    return normalize_angle(0.5 * math.atan2(s.s2, s.s1))
