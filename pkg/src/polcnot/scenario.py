"""Bench scenario files.

Line-oriented format::

    # comment
    [molecule]
    p = 1e-29          # C m
    [beams]
    gamma = 90 deg     # angles take a deg or rad suffix, rad by default

Sections come from a fixed set, each with a fixed set of keys. The parser
collects every problem it finds and raises ``ScenarioError`` carrying all
diagnostics at once.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from typing import Any, Callable

from .cell import CellGeometry, CNOTCell
from .medium import BOLTZMANN, FieldConfig, Solution, TriactiveMolecule
from .calibration import FREE_PARAMETERS, CalibrationProblem
from .polarization import normalize_angle

SECTIONS = ("molecule", "solution", "cell", "fields", "beams", "run", "sweep", "mc", "output")
RUN_KINDS = ("simulate", "truth-table", "calibrate", "sweep", "oracle")
SWEEP_PARAMETERS = ("T", "L", "E_C", "n", "B", "gamma", "tau")
FORMATS = ("csv", "txt")


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int  # 1-based
    column: int  # 1-based
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class ScenarioError(ValueError):
    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class RunSpec:
    kind: str
    tolerance: float = 1e-6
    free: tuple[str, ...] = ()
    bounds: tuple[tuple[float, float], ...] = ()  # aligned with ``free``
    min_rotation: float = 2 * math.pi
    max_rotation: float = 8 * math.pi
    residual_tolerance: float = 1e-9
    grid: int = 64
    max_evaluations: int = 100_000


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class MCSpec:
    samples: int = 1_000_000
    shots: int = 0
    molecules_per_shot: int = 10_000
    seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    formats: tuple[str, ...] = ("csv", "txt")


@dataclass(frozen=True)
class Scenario:
    cell: CNOTCell
    tau: float
    run: RunSpec
    sweep: SweepSpec | None = None
    mc: MCSpec = field(default_factory=MCSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    @property
    def molecule(self) -> TriactiveMolecule:
        return self.cell.solution.molecule

    @property
    def solution(self) -> Solution:
        return self.cell.solution

    @property
    def fields(self) -> FieldConfig:
        return self.cell.fields

    @property
    def gamma(self) -> float:
        return self.cell.fields.gamma

    def calibration_problem(self) -> CalibrationProblem:
        r = self.run
        return CalibrationProblem(
            cell=self.cell,
            free=tuple(r.free),
            bounds=tuple(r.bounds),
            min_rotation=r.min_rotation,
            max_rotation=r.max_rotation,
            tolerance=r.residual_tolerance,
            grid=r.grid,
            max_evaluations=r.max_evaluations,
        )


# ---------------------------------------------------------------- values

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf"
_ANGLE_RE = re.compile(rf"^({_NUMBER})\s*(deg|rad)?$")
_NUMBER_RE = re.compile(rf"^({_NUMBER})$")


def _number(text: str) -> float:
    if not _NUMBER_RE.match(text):
        raise ValueError(f"expected a number, got {text!r}")
    return float(text)


def _finite(text: str) -> float:
    v = _number(text)
    if not math.isfinite(v):
        raise ValueError(f"expected a finite number, got {text!r}")
    return v


def _positive(text: str) -> float:
    v = _finite(text)
    if not v > 0:
        raise ValueError(f"must be positive, got {text}")
    return v


def _nonneg(text: str) -> float:
    v = _finite(text)
    if v < 0:
        raise ValueError(f"must be non-negative, got {text}")
    return v


def _nonneg_or_inf(text: str) -> float:
    v = _number(text)
    if not v >= 0:
        raise ValueError(f"must be non-negative, got {text}")
    return v


def _angle(text: str) -> float:
    m = _ANGLE_RE.match(text)
    if not m:
        raise ValueError(f"expected an angle like '90 deg' or '1.5 rad', got {text!r}")
    v = float(m.group(1))
    if not math.isfinite(v):
        raise ValueError(f"angle must be finite, got {text!r}")
    return math.radians(v) if m.group(2) == "deg" else v


def _nonneg_angle(text: str) -> float:
    v = _angle(text)
    if v < 0:
        raise ValueError(f"must be non-negative, got {text}")
    return v


def _integer(minimum: int) -> Callable[[str], int]:
    def conv(text: str) -> int:
        v = _finite(text)
        if v != int(v):
            raise ValueError(f"expected an integer, got {text!r}")
        if v < minimum:
            raise ValueError(f"must be >= {minimum}, got {text}")
        return int(v)

    return conv


def _split_list(text: str) -> list[str]:
    items = [t.strip() for t in text.split(",")]
    if not text.strip() or any(not t for t in items):
        raise ValueError(f"expected a comma-separated list, got {text!r}")
    return items


def _choice(options: tuple[str, ...]) -> Callable[[str], str]:
    def conv(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text

    return conv


def _string(text: str) -> str:
    if text.startswith('"'):
        try:
            v = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"bad quoted string: {exc.msg}") from None
        if not isinstance(v, str):
            raise ValueError("expected a string")
        return v
    if not text:
        raise ValueError("expected a non-empty string")
    return text


def _free_list(text: str) -> tuple[str, ...]:
    items = tuple(_split_list(text))
    for it in items:
        if it not in FREE_PARAMETERS:
            raise ValueError(f"free parameter must be one of {', '.join(FREE_PARAMETERS)}, got {it!r}")
    if len(items) != 2 or items[0] == items[1]:
        raise ValueError("exactly two distinct free parameters required")
    return items


def _pair(text: str) -> tuple[float, float]:
    items = _split_list(text)
    if len(items) != 2:
        raise ValueError("expected 'lo, hi'")
    lo, hi = (_nonneg(t) for t in items)
    if not lo < hi:
        raise ValueError(f"expected lo < hi, got {lo!r}, {hi!r}")
    return lo, hi


def _formats(text: str) -> tuple[str, ...]:
    items = tuple(_split_list(text))
    for it in items:
        if it not in FORMATS:
            raise ValueError(f"format must be one of {', '.join(FORMATS)}, got {it!r}")
    return items


# section -> key -> (converter, required)
_REQUIRED, _OPTIONAL = True, False
SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], bool]]] = {
    "molecule": {
        "p": (_positive, _REQUIRED),
        "m": (_positive, _REQUIRED),
        "sigma0": (_nonneg, _REQUIRED),
        "kappa": (_nonneg, _REQUIRED),
    },
    "solution": {"n": (_positive, _REQUIRED), "T": (_positive, _REQUIRED), "boltzmann": (_positive, _OPTIONAL)},
    "cell": {"L": (_positive, _REQUIRED)},
    "fields": {"B": (_nonneg_or_inf, _REQUIRED), "E_C": (_nonneg, _REQUIRED)},
    "beams": {"gamma": (_angle, _OPTIONAL), "tau": (_angle, _OPTIONAL)},
    "run": {
        "kind": (_choice(RUN_KINDS), _REQUIRED),
        "tolerance": (_positive, _OPTIONAL),
        "free": (_free_list, _OPTIONAL),
        **{f"bounds_{p}": (_pair, _OPTIONAL) for p in FREE_PARAMETERS},
        "min_rotation": (_nonneg_angle, _OPTIONAL),
        "max_rotation": (_nonneg_angle, _OPTIONAL),
        "residual_tolerance": (_positive, _OPTIONAL),
        "grid": (_integer(2), _OPTIONAL),
        "max_evaluations": (_integer(1), _OPTIONAL),
    },
    "sweep": {"parameter": (_choice(SWEEP_PARAMETERS), _REQUIRED), "values": (lambda t: t, _REQUIRED)},
    "mc": {
        "samples": (_integer(1), _OPTIONAL),
        "shots": (_integer(0), _OPTIONAL),
        "molecules_per_shot": (_integer(1), _OPTIONAL),
        "seed": (_integer(0), _OPTIONAL),
        "workers": (_integer(1), _OPTIONAL),
    },
    "output": {"dir": (_string, _OPTIONAL), "formats": (_formats, _OPTIONAL)},
}
# sections that may be omitted entirely
OPTIONAL_SECTIONS = ("beams", "sweep", "mc", "output")


@dataclass
class _Entry:
    raw: str
    line: int
    key_col: int
    value_col: int
    value: Any = None


def _strip_comment(line: str) -> str:
    in_quote = False
    escaped = False
    for i, ch in enumerate(line):
        if in_quote:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_quote = False
        elif ch == '"':
            in_quote = True
        elif ch == "#":
            return line[:i]
    return line


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; raises ``ScenarioError`` listing every problem."""
    diags: list[ParseDiagnostic] = []
    sections: dict[str, dict[str, _Entry]] = {}
    header_line: dict[str, int] = {}
    current: str | None = None
    skip_section = False

    for lineno, full in enumerate(text.splitlines(), start=1):
        body = _strip_comment(full)
        stripped = body.strip()
        if not stripped:
            continue
        indent = len(body) - len(body.lstrip())
        if stripped.startswith("["):
            col = indent + 1
            if not stripped.endswith("]"):
                diags.append(ParseDiagnostic(lineno, col, "unterminated section header"))
                current, skip_section = None, True
                continue
            name = stripped[1:-1].strip()
            if name not in SECTIONS:
                diags.append(ParseDiagnostic(lineno, col, f"unknown section [{name}]"))
                current, skip_section = None, True
            elif name in sections:
                diags.append(ParseDiagnostic(lineno, col, f"duplicate section [{name}]"))
                current, skip_section = None, True
            else:
                sections[name] = {}
                header_line[name] = lineno
                current, skip_section = name, False
            continue
        if "=" not in body:
            diags.append(ParseDiagnostic(lineno, indent + 1, "expected 'key = value'"))
            continue
        key_part, _, value_part = body.partition("=")
        key = key_part.strip()
        key_col = indent + 1
        value = value_part.strip()
        value_col = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        if current is None:
            if not skip_section:
                diags.append(ParseDiagnostic(lineno, key_col, "key outside of any section"))
            continue
        if not key:
            diags.append(ParseDiagnostic(lineno, key_col, "missing key before '='"))
            continue
        if key not in SCHEMA[current]:
            diags.append(ParseDiagnostic(lineno, key_col, f"unknown key {key!r} in [{current}]"))
            continue
        if key in sections[current]:
            diags.append(ParseDiagnostic(lineno, key_col, f"duplicate key {key!r} in [{current}]"))
            continue
        if not value:
            diags.append(ParseDiagnostic(lineno, min(value_col, len(full)), f"missing value for {key!r}"))
            continue
        entry = _Entry(value, lineno, key_col, value_col)
        try:
            entry.value = SCHEMA[current][key][0](value)
        except ValueError as exc:
            diags.append(ParseDiagnostic(lineno, value_col, f"{key}: {exc}"))
        # stored even when invalid so it is not also reported as missing
        sections[current][key] = entry

    last_line = max(1, len(text.splitlines()))
    for name in SECTIONS:
        if name not in sections:
            if name not in OPTIONAL_SECTIONS:
                diags.append(ParseDiagnostic(last_line, 1, f"missing required section [{name}]"))
            continue
        for key, (_, required) in SCHEMA[name].items():
            if required and key not in sections[name]:
                diags.append(ParseDiagnostic(header_line[name], 1, f"missing required key {key!r} in [{name}]"))

    if diags:
        raise ScenarioError(diags)
    scenario = _build(sections, header_line, diags)
    if diags:
        raise ScenarioError(diags)
    return scenario


def _get(sections, section, key, default=None):
    entry = sections.get(section, {}).get(key)
    return default if entry is None else entry.value


def _build(sections, header_line, diags) -> Scenario | None:
    g = lambda s, k, d=None: _get(sections, s, k, d)  # noqa: E731
    molecule = TriactiveMolecule(g("molecule", "p"), g("molecule", "m"), g("molecule", "sigma0"), g("molecule", "kappa"))
    solution = Solution(molecule, g("solution", "n"), g("solution", "T"), g("solution", "boltzmann", BOLTZMANN))
    fields = FieldConfig(g("fields", "B"), g("fields", "E_C"), normalize_angle(g("beams", "gamma", 0.0)))
    cell = CNOTCell(CellGeometry(g("cell", "L")), solution, fields)

    run_entries = sections["run"]
    free = g("run", "free", ())
    bounds = []
    for p in free:
        b = g("run", f"bounds_{p}")
        if b is None:
            e = run_entries["free"]
            diags.append(ParseDiagnostic(e.line, e.key_col, f"missing required key 'bounds_{p}' in [run]"))
        else:
            bounds.append(b)
    defaults = RunSpec(kind="simulate")
    run = RunSpec(
        kind=g("run", "kind"),
        tolerance=g("run", "tolerance", defaults.tolerance),
        free=tuple(free),
        bounds=tuple(bounds),
        min_rotation=g("run", "min_rotation", defaults.min_rotation),
        max_rotation=g("run", "max_rotation", defaults.max_rotation),
        residual_tolerance=g("run", "residual_tolerance", defaults.residual_tolerance),
        grid=g("run", "grid", defaults.grid),
        max_evaluations=g("run", "max_evaluations", defaults.max_evaluations),
    )
    if not run.min_rotation < run.max_rotation:
        e = run_entries.get("min_rotation") or run_entries["max_rotation"]
        diags.append(ParseDiagnostic(e.line, e.value_col, "min_rotation must be below max_rotation"))

    sweep = None
    if "sweep" in sections:
        param = g("sweep", "parameter")
        ve = sections["sweep"]["values"]
        conv = _angle if param in ("gamma", "tau") else _positive if param in ("T", "L", "n") else _nonneg
        try:
            values = tuple(conv(t) for t in _split_list(ve.raw))
        except ValueError as exc:
            diags.append(ParseDiagnostic(ve.line, ve.value_col, f"values: {exc}"))
            values = ()
        if param == "T" and any(b < a for a, b in zip(values, values[1:])):
            diags.append(ParseDiagnostic(ve.line, ve.value_col, "values: temperatures must be sorted"))
        sweep = SweepSpec(param, values)

    mcd = MCSpec()
    mc = MCSpec(
        samples=g("mc", "samples", mcd.samples),
        shots=g("mc", "shots", mcd.shots),
        molecules_per_shot=g("mc", "molecules_per_shot", mcd.molecules_per_shot),
        seed=g("mc", "seed", mcd.seed),
        workers=g("mc", "workers", mcd.workers),
    )
    od = OutputSpec()
    output = OutputSpec(dir=g("output", "dir", od.dir), formats=g("output", "formats", od.formats))

    scenario = Scenario(cell=cell, tau=normalize_angle(g("beams", "tau", 0.0)), run=run, sweep=sweep, mc=mc, output=output)
    kind_entry = run_entries["kind"]
    for msg in runnable_problems(scenario):
        diags.append(ParseDiagnostic(kind_entry.line, kind_entry.value_col, msg))
    return scenario


def runnable_problems(s: Scenario, kind: str | None = None) -> list[str]:
    """Reasons the scenario cannot run as ``kind`` (default: its own kind)."""
    kind = kind or s.run.kind
    problems = []
    needs_calibration = kind == "calibrate" or (kind == "sweep" and s.sweep is not None and s.sweep.parameter == "T")
    if needs_calibration and len(s.run.free) != 2:
        problems.append(f"run kind {kind!r} needs 'free' and matching 'bounds_*' keys in [run]")
    if needs_calibration and "T" in s.run.free and kind == "sweep":
        problems.append("a temperature sweep cannot calibrate T")
    if kind == "sweep" and s.sweep is None:
        problems.append("run kind 'sweep' needs a [sweep] section")
    if kind == "sweep" and s.sweep is not None and not s.sweep.values:
        problems.append("[sweep] values must not be empty")
    return problems


# ---------------------------------------------------------------- output


def _num(v: float) -> str:
    return repr(float(v))


def serialize_scenario(s: Scenario) -> str:
    """Canonical text: fixed section order, sorted keys, round-trip floats."""
    mol, sol, f, r = s.molecule, s.solution, s.fields, s.run
    out: dict[str, dict[str, str]] = {
        "molecule": {"p": _num(mol.p), "m": _num(mol.m), "sigma0": _num(mol.sigma0), "kappa": _num(mol.kappa)},
        "solution": {"n": _num(sol.n), "T": _num(sol.T), "boltzmann": _num(sol.boltzmann)},
        "cell": {"L": _num(s.cell.geometry.L)},
        "fields": {"B": _num(f.B), "E_C": _num(f.E_C)},
        "beams": {"gamma": _num(f.gamma), "tau": _num(s.tau)},
        "run": {
            "kind": r.kind,
            "tolerance": _num(r.tolerance),
            "min_rotation": _num(r.min_rotation),
            "max_rotation": _num(r.max_rotation),
            "residual_tolerance": _num(r.residual_tolerance),
            "grid": str(r.grid),
            "max_evaluations": str(r.max_evaluations),
        },
        "mc": {
            "samples": str(s.mc.samples),
            "shots": str(s.mc.shots),
            "molecules_per_shot": str(s.mc.molecules_per_shot),
            "seed": str(s.mc.seed),
            "workers": str(s.mc.workers),
        },
        "output": {"dir": json.dumps(s.output.dir), "formats": ", ".join(s.output.formats)},
    }
    if r.free:
        out["run"]["free"] = ", ".join(r.free)
        for p, (lo, hi) in zip(r.free, r.bounds):
            out["run"][f"bounds_{p}"] = f"{_num(lo)}, {_num(hi)}"
    if s.sweep is not None:
        out["sweep"] = {"parameter": s.sweep.parameter, "values": ", ".join(_num(v) for v in s.sweep.values)}

    lines = []
    for name in SECTIONS:
        if name not in out:
            continue
        if lines:
            lines.append("")
        lines.append(f"[{name}]")
        for key in sorted(out[name]):
            lines.append(f"{key} = {out[name][key]}")
    return "\n".join(lines) + "\n"


def with_cell(s: Scenario, cell: CNOTCell, **run_changes: Any) -> Scenario:
    return replace(s, cell=cell, run=replace(s.run, **run_changes))
