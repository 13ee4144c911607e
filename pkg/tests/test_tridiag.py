import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thomascore.backends import FixedBackend
from thomascore.fixed_point import FixedFormat, Overflow
from thomascore.tridiag import (Singular, SingularPivot, SystemFormatError, TridiagonalSystem,
                                critical_path, dense_solve, loads_csv, read_csv, read_json,
                                residual, thomas_hw, thomas_reference, write_csv, write_json)

from conftest import dominant_systems, random_dominant

SOLVERS = [thomas_reference, thomas_hw]


def identity(y):
    n = len(y)
    return TridiagonalSystem(np.zeros(n), np.ones(n), np.zeros(n), y)


def exact_solve(sys):
    """Gaussian elimination on Fractions, no pivoting needed for dominant rows."""
    n = sys.n
    a = [Fraction(v) for v in sys.a]
    b = [Fraction(v) for v in sys.b]
    c = [Fraction(v) for v in sys.c]
    y = [Fraction(v) for v in sys.y]
    for i in range(1, n):
        m = a[i] / b[i - 1]
        b[i] -= m * c[i - 1]
        y[i] -= m * y[i - 1]
    x = [Fraction(0)] * n
    x[-1] = y[-1] / b[-1]
    for i in range(n - 2, -1, -1):
        x[i] = (y[i] - c[i] * x[i + 1]) / b[i]
    return x


# -- construction ---------------------------------------------------------------

def test_system_validation():
    with pytest.raises(ValueError):
        TridiagonalSystem([0], [1], [0], [1])
    with pytest.raises(ValueError):
        TridiagonalSystem([0, 1], [1, 1, 1], [0, 0], [1, 1])
    with pytest.raises(ValueError):
        TridiagonalSystem([1, 1], [1, 1], [0, 0], [1, 1])
    with pytest.raises(ValueError):
        TridiagonalSystem([0, 1], [1, 1], [0, 1], [1, 1])


def test_from_bands_zeroes_corners():
    s = TridiagonalSystem.from_bands([9, 1, 1], [4, 4, 4], [1, 1, 9], [0, 0, 0])
    assert s.a[0] == 0 and s.c[-1] == 0


def test_dense_and_matvec_agree(rng):
    s = random_dominant(rng, 9)
    x = rng.normal(size=9)
    assert np.allclose(s.to_dense() @ x, s.matvec(x))


# -- solver oracles ---------------------------------------------------------------

@pytest.mark.parametrize("solver", SOLVERS)
def test_identity_returns_rhs(solver):
    y = np.array([0.3, -1.2, 7.0, 0.0])
    tr = solver(identity(y))
    assert np.array_equal(tr.x, y)


def test_hw_identity_intermediates():
    y = np.array([0.3, -1.2, 7.0])
    tr = thomas_hw(identity(y))
    assert np.array_equal(tr.cd, np.zeros(3))
    assert np.array_equal(tr.zd, y)


@pytest.mark.parametrize("solver", SOLVERS + [lambda s: type("T", (), {"x": dense_solve(s)})])
def test_three_row_example(solver, small_system):
    assert np.allclose(solver(small_system).x, [1, 1, 1], rtol=0, atol=1e-15)


def test_reference_leaves_cd_zd_empty(small_system):
    tr = thomas_reference(small_system)
    assert np.all(np.isnan(tr.cd)) and np.all(np.isnan(tr.zd))


@pytest.mark.parametrize("solver", SOLVERS)
def test_zero_first_pivot(solver):
    s = TridiagonalSystem([0, 1, 1], [0, 4, 4], [1, 1, 0], [1, 1, 1])
    with pytest.raises(SingularPivot) as err:
        solver(s)
    assert err.value.row == 0


@pytest.mark.parametrize("solver", SOLVERS)
def test_zero_later_pivot(solver):
    # d1 = 1 - 1*1/1 = 0
    s = TridiagonalSystem([0, 1, 1], [1, 1, 4], [1, 1, 0], [1, 1, 1])
    with pytest.raises(SingularPivot) as err:
        solver(s)
    assert err.value.row == 1


def test_fixed_zero_pivot_uses_raw_zero():
    s = TridiagonalSystem([0, 1], [2 ** -40, 1], [0.5, 0], [1, 1])
    with pytest.raises(SingularPivot):
        thomas_hw(s, FixedBackend("[2,30]"))


def test_forward_pass_matches_recurrence(rng):
    s = random_dominant(rng, 12)
    tr = thomas_hw(s)
    assert tr.d[0] == s.b[0] and tr.z[0] == s.y[0]
    for i in range(1, s.n):
        assert tr.l[i] == s.a[i] / tr.d[i - 1]
        assert tr.d[i] == s.b[i] - tr.l[i] * s.c[i - 1]
        assert tr.z[i] == s.y[i] - tr.l[i] * tr.z[i - 1]
    assert np.array_equal(tr.cd, s.c / tr.d)
    assert np.array_equal(tr.zd, tr.z / tr.d)


@settings(max_examples=200)
@given(dominant_systems(max_n=64))
def test_solvers_match_each_other_and_dense(s):
    x_ref = thomas_reference(s).x
    x_hw = thomas_hw(s).x
    x_dense = dense_solve(s)
    scale = np.max(np.abs(x_dense))
    assert np.max(np.abs(x_hw - x_ref)) <= 1e-12 * scale
    assert np.max(np.abs(x_hw - x_dense)) <= 1e-10 * scale


@settings(max_examples=50)
@given(dominant_systems(max_n=24))
def test_matches_exact_rational_solution(s):
    exact = np.array([float(v) for v in exact_solve(s)])
    assert np.allclose(thomas_hw(s).x, exact, rtol=1e-12, atol=1e-14 * np.max(np.abs(exact)))


@settings(max_examples=100)
@given(dominant_systems(max_n=64))
def test_dense_residual_small(s):
    x = dense_solve(s)
    assert residual(s, x) <= 1e-10 * np.max(np.abs(s.y))


def test_residual_basics(small_system):
    assert residual(small_system, [1, 1, 1]) == 0.0
    assert residual(small_system, np.zeros(3)) == 6.0
    with pytest.raises(ValueError):
        residual(small_system, [1, 1])


def test_dense_singular_and_size_limit():
    s = TridiagonalSystem([0, 1], [1, 1], [1, 0], [1, 2])
    with pytest.raises(Singular):
        dense_solve(s)
    big = TridiagonalSystem(np.zeros(1025), np.ones(1025), np.zeros(1025), np.ones(1025))
    with pytest.raises(ValueError):
        dense_solve(big)


# -- fixed point ----------------------------------------------------------------------

def test_fixed_solution_close_to_real(rng):
    s = random_dominant(rng, 30, scale=0.4)
    s = s.with_rhs(s.y * 0.2)
    be = FixedBackend("[2,30]")
    x_fix = thomas_hw(s, be).x
    assert np.max(np.abs(x_fix - thomas_hw(s).x)) < 1e-7


def test_fixed_overflow_reports_row_and_variable():
    s = TridiagonalSystem([0, 0.5, 0.5], [1, 0.6, 1], [0.9, 0.9, 0], [1.5, 1.5, 1.5])
    with pytest.raises(Overflow) as err:
        thomas_hw(s, FixedBackend("[2,30]"))
    assert err.value.row >= 0 and err.value.variable in {"l", "d", "z", "cd", "zd", "x"}


def test_saturating_solve_records_events():
    s = TridiagonalSystem([0, 0.5, 0.5], [1, 0.6, 1], [0.9, 0.9, 0], [1.5, 1.5, 1.5])
    tr = thomas_hw(s, FixedBackend("[2,30]", overflow="saturate"))
    assert tr.overflow_events
    assert all(isinstance(r, int) and isinstance(v, str) for r, v in tr.overflow_events)


def test_experiment_systems_within_envelope_for_2_30():
    from thomascore.experiment import ExperimentConfig, run_experiment
    res = run_experiment(ExperimentConfig(samples=200, seed=7, formats=["[2,30]"],
                                          input_precision="float64"))
    s = res.summaries["[2,30]"]
    assert np.all(s.max_error_node <= s.envelope)


# -- dependency chain ------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 10, 100])
def test_critical_path_lengths(n):
    hw = critical_path(thomas_hw, n)
    ref = critical_path(thomas_reference, n)
    assert hw.length == 5 * n - 4
    assert ref.length == 6 * n - 5
    assert hw.counts["div"] == (n - 1) + 2 * n
    assert hw.counts["mul"] == (n - 1) * 2 + (n - 1)


# -- file formats -------------------------------------------------------------------

def test_csv_roundtrip(tmp_path, rng):
    s = random_dominant(rng, 7)
    write_csv(s, tmp_path / "s.csv")
    t = read_csv(tmp_path / "s.csv")
    for v in "abcy":
        assert np.array_equal(getattr(s, v), getattr(t, v))


def test_csv_header_optional_and_comments():
    s = loads_csv("# comment\n0,4,1,5\n\n1,4,1,6\n1,4,0,5\n")
    assert s.n == 3 and s.y[1] == 6


def test_csv_bad_row_names_line():
    with pytest.raises(SystemFormatError, match="line 3"):
        loads_csv("a,b,c,y\n0,4,1,5\n1,4,oops,6\n1,4,0,5\n")
    with pytest.raises(SystemFormatError, match="line 2"):
        loads_csv("a,b,c,y\n0,4,1\n1,4,0,5\n")


def test_csv_corner_entries_checked():
    with pytest.raises(SystemFormatError):
        loads_csv("1,4,1,5\n1,4,0,5\n")


def test_json_envelope(tmp_path, small_system):
    fmt = FixedFormat.parse("[2,22]")
    write_json(small_system, tmp_path / "s.json", fmt)
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["n"] == 3 and doc["format"] == "[2,22]"
    s, f = read_json(tmp_path / "s.json")
    assert f == fmt and np.array_equal(s.y, small_system.y)
    doc["n"] = 4
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    with pytest.raises(SystemFormatError):
        read_json(tmp_path / "bad.json")
