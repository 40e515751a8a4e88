import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polcnot.cell import CellGeometry, CNOTCell
from polcnot.medium import BOLTZMANN, FieldConfig, Solution, TriactiveMolecule
from polcnot.scenario import (
    MCSpec,
    OutputSpec,
    RunSpec,
    Scenario,
    ScenarioError,
    SweepSpec,
    parse_scenario,
    serialize_scenario,
)

MINIMAL = """\
# natural-units bench
[molecule]
p = 1
m = 1
sigma0 = 1
kappa = 1

[solution]
n = 1
T = 1
boltzmann = 1

[cell]
L = 7.853981633974483

[fields]
B = inf
E_C = 0.09003163161571061

[run]
kind = truth-table
"""


def diagnostics(text):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    return info.value.diagnostics


def test_minimal_fixture():
    s = parse_scenario(MINIMAL)
    assert s.run.kind == "truth-table"
    assert s.molecule == TriactiveMolecule(1.0, 1.0, 1.0, 1.0)
    assert s.solution.boltzmann == 1.0
    assert s.fields.B == math.inf
    assert s.cell.geometry.L == 7.853981633974483
    assert s.gamma == 0.0 and s.tau == 0.0
    assert s.mc.seed == 0


def test_boltzmann_defaults_to_si():
    s = parse_scenario(MINIMAL.replace("boltzmann = 1\n", ""))
    assert s.solution.boltzmann == BOLTZMANN


@pytest.mark.parametrize(
    "text, expected",
    [("90 deg", math.pi / 2), ("90deg", math.pi / 2), ("1.25 rad", 1.25), ("1.25", 1.25), ("-45 deg", 3 * math.pi / 4)],
)
def test_angle_units(text, expected):
    s = parse_scenario(MINIMAL + f"\n[beams]\ngamma = {text}\n")
    assert s.gamma == pytest.approx(expected, abs=1e-15)


def test_scientific_notation_and_comments():
    s = parse_scenario(MINIMAL.replace("n = 1\n", "n = 2.5E+22   # per m^3\n"))
    assert s.solution.n == 2.5e22


def test_duplicate_key_reported_at_second_occurrence():
    text = MINIMAL.replace("m = 1\n", "m = 1\nm = 2\n")
    [d] = diagnostics(text)
    assert "duplicate key" in d.message
    assert (d.line, d.column) == (5, 1)


def test_all_errors_collected():
    text = MINIMAL.replace("p = 1\n", "p = -1\nfoo = 3\n").replace("[cell]\nL = 7.853981633974483\n", "[cell]\n")
    text += "[nonsense]\nkind = 1\n"
    msgs = [d.message for d in diagnostics(text)]
    assert any("p: must be positive" in m for m in msgs)
    assert any("unknown key 'foo'" in m for m in msgs)
    assert any("unknown section [nonsense]" in m for m in msgs)
    assert any("missing required key 'L' in [cell]" in m for m in msgs)


def test_missing_section_names_it():
    text = MINIMAL.replace("[fields]\nB = inf\nE_C = 0.09003163161571061\n", "")
    msgs = [d.message for d in diagnostics(text)]
    assert "missing required section [fields]" in msgs


def test_value_column_points_at_value():
    text = MINIMAL.replace("kappa = 1", "kappa =   abc")
    [d] = diagnostics(text)
    line = text.splitlines()[d.line - 1]
    assert line[d.column - 1 :].startswith("abc")


@pytest.mark.parametrize(
    "bad",
    [
        "[molecule\n",
        "just words\n",
        "[run]\n",
        "kind = simulate\n",
        "= 3\n",
        "[mc]\nsamples = 1.5\n",
        "[mc]\nseed = -1\n",
        '[output]\ndir = "unterminated\n',
        "[sweep]\nparameter = T\nvalues = 2, 1\n",
        "[sweep]\nparameter = T\n",
        "[run]\nkind = calibrate\n",
    ],
)
def test_diagnostics_index_real_positions(bad):
    text = MINIMAL + bad
    diags = diagnostics(text)
    lines = text.splitlines()
    for d in diags:
        assert 1 <= d.line <= len(lines)
        assert 1 <= d.column <= max(1, len(lines[d.line - 1]))


def test_calibrate_requires_bounds():
    text = MINIMAL.replace("kind = truth-table", "kind = calibrate\nfree = L, E_C\nbounds_L = 0.5, 8.5")
    msgs = [d.message for d in diagnostics(text)]
    assert any("bounds_E_C" in m for m in msgs)


def test_calibration_keys_parse():
    text = MINIMAL.replace(
        "kind = truth-table",
        "kind = calibrate\nfree = L, E_C\nbounds_L = 0.5, 8.5\nbounds_E_C = 0, 0.25\nmax_rotation = 1440 deg\ngrid = 32",
    )
    s = parse_scenario(text)
    prob = s.calibration_problem()
    assert prob.free == ("L", "E_C")
    assert prob.bounds == ((0.5, 8.5), (0.0, 0.25))
    assert prob.max_rotation == pytest.approx(8 * math.pi)
    assert prob.grid == 32


# ------------------------------------------------------------ round trip


def test_round_trip_minimal():
    s = parse_scenario(MINIMAL)
    text = serialize_scenario(s)
    assert parse_scenario(text) == s
    assert serialize_scenario(parse_scenario(text)) == text


def test_round_trip_keeps_full_precision():
    s = parse_scenario(MINIMAL.replace("n = 1\n", "n = 1.2345678901234567e+22\n"))
    assert parse_scenario(serialize_scenario(s)).solution.n == 1.2345678901234567e22


def test_serialized_sections_in_fixed_order():
    text = serialize_scenario(parse_scenario(MINIMAL + "\n[sweep]\nparameter = T\nvalues = 1, 2\n"))
    headers = [ln for ln in text.splitlines() if ln.startswith("[")]
    assert headers == ["[molecule]", "[solution]", "[cell]", "[fields]", "[beams]", "[run]", "[sweep]", "[mc]", "[output]"]


pos = st.floats(min_value=1e-30, max_value=1e30, allow_nan=False, allow_infinity=False)
nonneg = st.one_of(st.just(0.0), pos)
angle = st.floats(min_value=0.0, max_value=math.pi, exclude_max=True)


@st.composite
def scenarios(draw):
    mol = TriactiveMolecule(draw(pos), draw(pos), draw(nonneg), draw(nonneg))
    sol = Solution(mol, draw(pos), draw(pos), draw(st.one_of(st.just(BOLTZMANN), pos)))
    fields = FieldConfig(draw(st.one_of(st.just(math.inf), nonneg)), draw(nonneg), draw(angle))
    cell = CNOTCell(CellGeometry(draw(pos)), sol, fields)
    kind = draw(st.sampled_from(["simulate", "truth-table", "calibrate", "sweep", "oracle"]))
    free, bounds = (), ()
    if kind in ("calibrate", "sweep") or draw(st.booleans()):
        free = tuple(draw(st.permutations(["L", "E_C", "n"]))[:2])
        pairs = [sorted(draw(st.lists(pos, min_size=2, max_size=2, unique=True))) for _ in free]
        bounds = tuple((lo, hi) for lo, hi in pairs)
    lo_rot = draw(st.floats(min_value=0, max_value=10))
    run = RunSpec(
        kind=kind,
        tolerance=draw(pos),
        free=free,
        bounds=bounds,
        min_rotation=lo_rot,
        max_rotation=lo_rot + draw(st.floats(min_value=0.1, max_value=100)),
        residual_tolerance=draw(pos),
        grid=draw(st.integers(2, 200)),
        max_evaluations=draw(st.integers(1, 10**7)),
    )
    sweep = None
    if kind == "sweep" or draw(st.booleans()):
        param = draw(st.sampled_from(["T", "L", "E_C", "n", "B", "gamma", "tau"]))
        values = draw(st.lists(pos if param != "gamma" else angle, min_size=1, max_size=5))
        if param == "T":
            values = sorted(values)
        sweep = SweepSpec(param, tuple(values))
    mc = MCSpec(*(draw(st.integers(lo, 10**8)) for lo in (1, 0, 1, 0, 1)))
    output = OutputSpec(
        draw(st.text(min_size=1, max_size=20).filter(lambda t: "\n" not in t and "\r" not in t)),
        tuple(draw(st.lists(st.sampled_from(["csv", "txt"]), min_size=1, max_size=2, unique=True))),
    )
    return Scenario(cell, draw(angle), run, sweep, mc, output)


@given(scenarios())
@settings(max_examples=150, deadline=None)
def test_round_trip_property(s):
    text = serialize_scenario(s)
    back = parse_scenario(text)
    assert back == s
    assert serialize_scenario(back) == text
