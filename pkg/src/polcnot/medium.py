"""Solution of triactive molecules under the control beam.

Two routes to the polarization density live here. ``langevin_debye_polarization``
is the closed-form Langevin-Debye expression used by the gate model. The
Monte Carlo route samples in-plane dipole orientations from their Boltzmann
weight and averages them; it shares no code with the closed form and serves
as the cross-check.

Ideal magnetic locking is assumed for the orientation statistics: each dipole
precesses in the plane perpendicular to B, so only its in-plane angle is
random.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special

from .polarization import LinearPolarizationAngle, normalize_angle
from .streams import ORIENTATION_MEAN, block_generator, block_sizes

BOLTZMANN = 1.380649e-23  # J/K, exact SI value
NATURAL_BOLTZMANN = 1.0


@dataclass(frozen=True)
class TriactiveMolecule:
    """Electric dipole ``p`` (C m), magnetic moment ``m`` (J/T) and optical activity.

    The optical-activity axis is parallel to ``p`` and ``m`` is perpendicular
    to both, so no axis fields are stored. ``sigma0`` is the baseline rotation
    per unit length per unit number density; ``kappa`` is the extra rotation
    per unit length per unit polarization density along the activity axis.
    """

    p: float
    m: float
    sigma0: float = 1.0
    kappa: float = 1.0

    def __post_init__(self) -> None:
        if not self.p > 0:
            raise ValueError(f"dipole moment p must be positive, got {self.p!r}")
        if not self.m > 0:
            raise ValueError(f"magnetic moment m must be positive, got {self.m!r}")
        if not self.sigma0 >= 0:
            raise ValueError(f"sigma0 must be non-negative, got {self.sigma0!r}")
        if not self.kappa >= 0:
            raise ValueError(f"kappa must be non-negative, got {self.kappa!r}")


@dataclass(frozen=True)
class Solution:
    molecule: TriactiveMolecule
    n: float
    T: float
    boltzmann: float = BOLTZMANN

    def __post_init__(self) -> None:
        if not self.n > 0:
            raise ValueError(f"number density n must be positive, got {self.n!r}")
        if not self.T > 0:
            raise ValueError(f"temperature T must be positive, got {self.T!r}")
        if not self.boltzmann > 0:
            raise ValueError(f"Boltzmann constant must be positive, got {self.boltzmann!r}")

    @property
    def kT(self) -> float:
        return self.boltzmann * self.T


@dataclass(frozen=True)
class FieldConfig:
    """Magnetic flux density ``B`` (along the control beam), control amplitude
    ``E_C`` and control polarization ``gamma``.

    ``B = inf`` selects the ideal locked-precession limit.
    """

    B: float
    E_C: float
    gamma: LinearPolarizationAngle = 0.0

    def __post_init__(self) -> None:
        if not self.B >= 0:
            raise ValueError(f"B must be non-negative, got {self.B!r}")
        if not (self.E_C >= 0 and math.isfinite(self.E_C)):
            raise ValueError(f"E_C must be finite and non-negative, got {self.E_C!r}")


def langevin_debye_polarization(sol: Solution, E_C: float) -> float:
    """Mean polarization density n p^2 pi E_C / (sqrt(2) k T), in C/m^2."""
    if E_C < 0:
        raise ValueError(f"E_C must be non-negative, got {E_C!r}")
    p = sol.molecule.p
    return sol.n * p * p * math.pi * E_C / (math.sqrt(2.0) * sol.boltzmann * sol.T)


def dipole_field_ratio(sol: Solution, E_C: float) -> float:
    """Dimensionless coupling x = p E_C / (k T)."""
    return sol.molecule.p * E_C / sol.kT


def orientation_pdf(sol: Solution, fields: FieldConfig):
    """Boltzmann density of the in-plane dipole angle, normalized on [0, 2pi)."""
    x = dipole_field_ratio(sol, fields.E_C)
    gamma = fields.gamma
    # exp(x cos d) / (2 pi I0(x)) with the exponential scaling folded in
    norm = 2.0 * math.pi * special.i0e(x)

    def pdf(phi_mol):
        return np.exp(x * (np.cos(np.asarray(phi_mol) - gamma) - 1.0)) / norm

    return pdf


def mean_cosine(x: float) -> float:
    """Exact Boltzmann average <cos> = I1(x)/I0(x) for the in-plane dipole."""
    if x == 0:
        return 0.0
    return float(special.i1e(x) / special.i0e(x))


def sample_relative_angles(x: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw dipole angles relative to the field, density ~ exp(x cos d).

    Best-Fisher wrapped-Cauchy envelope; valid for every x >= 0.
    """
    if x < 1e-8:
        return rng.uniform(-math.pi, math.pi, size)
    tau = 1.0 + math.sqrt(1.0 + 4.0 * x * x)
    rho = (tau - math.sqrt(2.0 * tau)) / (2.0 * x)
    r = (1.0 + rho * rho) / (2.0 * rho)

    out = np.empty(size)
    filled = 0
    while filled < size:
        want = size - filled
        # acceptance is >= 0.65 for all x; oversample to usually finish in one pass
        batch = int(want * 1.6) + 16
        u1, u2, u3 = rng.random((3, batch))
        z = np.cos(math.pi * u1)
        f = (1.0 + r * z) / (r + z)
        c = x * (r - f)
        with np.errstate(divide="ignore", invalid="ignore"):
            accept = (c * (2.0 - c) - u2 > 0) | (np.log(c / u2) + 1.0 - c >= 0)
        theta = np.sign(u3[accept] - 0.5) * np.arccos(np.clip(f[accept], -1.0, 1.0))
        take = min(theta.size, want)
        out[filled : filled + take] = theta[:take]
        filled += take
    return out


@dataclass(frozen=True)
class OrientationMoments:
    """Sums over sampled dipole angles measured from the control direction."""

    count: int
    sum_cos: float
    sum_sin: float
    sum_cos2: float

    @property
    def mean_cos(self) -> float:
        return self.sum_cos / self.count

    @property
    def mean_sin(self) -> float:
        return self.sum_sin / self.count

    @property
    def cos_std_error(self) -> float:
        if self.count < 2:
            return math.inf
        var = (self.sum_cos2 - self.sum_cos**2 / self.count) / (self.count - 1)
        return math.sqrt(max(var, 0.0) / self.count)


def orientation_moments(
    x: float, samples: int, seed: int, stream: int = ORIENTATION_MEAN, index: int = 0, workers: int = 1
) -> OrientationMoments:
    """Accumulate orientation moments block by block.

    Blocks are reduced in order, so ``workers`` never changes the result.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    sizes = block_sizes(samples)

    def run(block: int) -> tuple[float, float, float]:
        d = sample_relative_angles(x, sizes[block], block_generator(seed, stream, index, block))
        c = np.cos(d)
        return float(c.sum()), float(np.sin(d).sum()), float((c * c).sum())

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]

    sc = ss = sc2 = 0.0
    for a, b, c in parts:
        sc += a
        ss += b
        sc2 += c
    return OrientationMoments(samples, sc, ss, sc2)


@dataclass(frozen=True)
class MCPolarization:
    magnitude: float  # C/m^2
    direction: LinearPolarizationAngle
    projection: float  # component along gamma, C/m^2
    std_error: float  # of the projection, C/m^2
    samples: int
    x: float


def mc_mean_polarization(
    sol: Solution, fields: FieldConfig, samples: int, seed: int = 0, workers: int = 1
) -> MCPolarization:
    """Monte Carlo estimate of n p <unit dipole> under the control field."""
    x = dipole_field_ratio(sol, fields.E_C)
    mom = orientation_moments(x, samples, seed, workers=workers)
    scale = sol.n * sol.molecule.p
    c, s = mom.mean_cos, mom.mean_sin
    return MCPolarization(
        magnitude=scale * math.hypot(c, s),
        direction=normalize_angle(fields.gamma + math.atan2(s, c)),
        projection=scale * c,
        std_error=scale * mom.cos_std_error,
        samples=samples,
        x=x,
    )


@dataclass(frozen=True)
class OracleReport:
    x: float
    P_formula: float
    P_mc: float
    P_mc_std_error: float
    ratio: float | None  # None when both sides vanish
    samples: int
    seed: int


def oracle_compare(sol: Solution, E_C: float, samples: int, seed: int = 0, workers: int = 1) -> OracleReport:
    """Report the closed form next to the sampled mean projection.

    In linear response the sampled slope is n p^2 E_C / (2 k T), so the
    ratio settles near pi * sqrt(2). Nothing is rescaled.
    """
    P_formula = langevin_debye_polarization(sol, E_C)
    mc = mc_mean_polarization(sol, FieldConfig(B=math.inf, E_C=E_C), samples, seed, workers)
    if E_C == 0:
        P_mc, ratio = 0.0, None
    else:
        P_mc = mc.projection
        ratio = P_formula / P_mc if P_mc != 0 else None
    return OracleReport(mc.x, P_formula, P_mc, mc.std_error, ratio, samples, seed)


def langevin(x: float) -> float:
    """coth(x) - 1/x, with the series near zero and the limit 1 at infinity."""
    if math.isinf(x):
        return 1.0
    ax = abs(x)
    if ax < 1e-4:
        return x / 3.0 - x**3 / 45.0
    if ax > 20:
        return math.copysign(1.0, x) - 1.0 / x
    return 1.0 / math.tanh(x) - 1.0 / x


def b_field_order_parameter(
    molecule: TriactiveMolecule, B: float, T: float, boltzmann: float = BOLTZMANN
) -> float:
    """Alignment of magnetic moments with B, from 0 (random) to 1 (locked)."""
    if B < 0:
        raise ValueError(f"B must be non-negative, got {B!r}")
    if not T > 0:
        raise ValueError(f"T must be positive, got {T!r}")
    return langevin(molecule.m * B / (boltzmann * T))
