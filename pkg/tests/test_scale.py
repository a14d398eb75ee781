import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from harnacklab.errors import ConfigurationError, DomainError, NumericalError, OutOfRangeError
from harnacklab.scale import (GreenScale, decay_alpha, decay_power, default_grid, invert,
                              largest_admissible_alpha, load_table, regularize, tabulated,
                              verify_scale)


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 1.5, 3.0])
def test_power_law_constants_are_closed_form(p):
    g = GreenScale.power_law(p, 0.7)
    assert g.cD == 2.0 ** p and g.eta0 == 2.0 ** -p and g.alpha0 == 0.5
    assert verify_scale(g, default_grid(g)) == []
    assert g(2.0) == pytest.approx(0.7 * 2.0 ** -p, rel=1e-15)


def test_scalar_in_scalar_out():
    g = GreenScale.power_law(2.0)
    assert isinstance(g(1.5), float)
    assert g(np.array([1.0, 2.0])).shape == (2,)


@pytest.mark.parametrize("kw", [dict(cD=1.0), dict(alpha0=1.0), dict(eta0=0.0), dict(c=0.5),
                                dict(R0=0.0)])
def test_constructor_validation(kw):
    base = dict(evaluator=lambda r: 1 / r, cD=2.0, alpha0=0.5, eta0=0.5)
    base.update(kw)
    with pytest.raises(ConfigurationError):
        GreenScale(**base)


def test_violations_are_reported_per_invariant():
    # g = r^-1 claimed with too small doubling and decay constants
    g = GreenScale(lambda r: 1 / r, cD=1.5, alpha0=0.5, eta0=0.4)
    kinds = {v.invariant for v in verify_scale(g, np.geomspace(1e-3, 1e3, 16))}
    # the too-small eta0 also breaks the decay chain from the largest radius
    assert kinds == {"doubling", "decay", "blowup"}


def test_increasing_function_flagged():
    g = GreenScale(lambda r: np.where(r < 1, 1 / r, 2 / r), cD=8.0, alpha0=0.5, eta0=0.9)
    kinds = {v.invariant for v in verify_scale(g, np.geomspace(0.1, 10, 41))}
    assert "decreasing" in kinds


def test_bounded_function_has_no_decay():
    g = GreenScale(lambda r: 1 + 1 / (1 + r), cD=2.0, alpha0=0.5, eta0=0.99)
    bad = [v for v in verify_scale(g, np.geomspace(1e-4, 1e4, 64)) if v.invariant == "decay"]
    # near 0 the function is flat, so decay fails at the small radii
    assert bad and min(v.radius for v in bad) == pytest.approx(1e-4)


def test_grid_outside_range_rejected():
    g = GreenScale.power_law(1.0, R0=2.0)
    with pytest.raises(DomainError):
        verify_scale(g, [0.5, 2.0])
    with pytest.raises(DomainError):
        verify_scale(g, [])


def test_nonfinite_values_rejected():
    g = GreenScale(lambda r: np.where(r < 1, np.nan, 1 / r), cD=2.0, alpha0=0.5, eta0=0.5)
    with pytest.raises(DomainError):
        verify_scale(g, [0.5, 2.0])


@pytest.mark.parametrize("eta, m", [(1 / 32, 3), (1 / 64, 3), (1 / 65, 4), (0.99, 1)])
def test_decay_power_for_r_squared(eta, m):
    g = GreenScale.power_law(2.0)  # eta0 = 1/4
    assert decay_power(g, eta) == m
    assert decay_alpha(g, eta) == 0.5 ** m


@given(st.floats(0.05, 3.0), st.floats(1e-6, 0.999))
def test_decay_alpha_is_minimal(p, eta):
    g = GreenScale.power_law(p)
    m = decay_power(g, eta)
    assert g.eta0 ** m <= eta * (1 + 1e-12)
    assert m == 1 or g.eta0 ** (m - 1) > eta * (1 - 1e-12)
    a = decay_alpha(g, eta)
    r = default_grid(g, 32)
    assert np.all(g(r) <= eta * g(a * r) * (1 + 1e-12))


def test_largest_admissible_alpha_and_failure():
    g = GreenScale.power_law(2.0)
    a, m = largest_admissible_alpha(g, lambda al, r: g(r) <= g(al * r) / 16, upper=0.25)
    assert (a, m) == (0.125, 3)
    with pytest.raises(NumericalError):
        largest_admissible_alpha(g, lambda al, r: np.zeros_like(r, bool), upper=0.25, max_power=5)


def test_regularize_matches_nodes_and_stays_within_cD():
    raw = GreenScale(lambda r: np.floor(1 / r) + 1, cD=4.0, alpha0=0.25, eta0=0.5,
                     continuous=False)
    reg = regularize(raw)
    nodes = 2.0 ** np.arange(-10, 6)
    assert np.array_equal(reg(nodes), raw(nodes))
    r = np.geomspace(1e-3, 30, 500)
    ratio = reg(r) / raw(r)
    assert np.all(ratio <= raw.cD) and np.all(ratio >= 1 / raw.cD)
    assert np.all(np.diff(reg(r)) <= 0)


def test_regularize_finite_range_uses_left_limit():
    raw = GreenScale(lambda r: np.where(r >= 1.0, 0.5, 1 / r), cD=4.0, alpha0=0.5, eta0=0.75,
                     R0=1.0)
    reg = regularize(raw)
    assert reg(np.array([1.0]))[0] == pytest.approx(1.0)
    assert reg(0.25) == pytest.approx(4.0)
    assert reg(0.375) == pytest.approx(3.0)


@given(st.floats(0.1, 4.0), st.floats(-8, 8))
def test_invert_round_trip(p, logr):
    g = GreenScale.power_law(p, 2.0)
    r = 10.0 ** logr
    assert invert(g, g(r)) == pytest.approx(r, rel=1e-9)


def test_invert_vectorized_and_out_of_range():
    g = GreenScale.power_law(1.0, R0=10.0)
    r = invert(g, np.array([1.0, 4.0]))
    assert np.allclose(r, [1.0, 0.25], rtol=1e-12)
    with pytest.raises(OutOfRangeError, match="attainable interval"):
        invert(g, 0.05)
    with pytest.raises(OutOfRangeError):
        invert(g, -1.0)


def test_invert_discontinuous_scale_raises():
    g = GreenScale(lambda r: np.where(r < 1, 4 / r, 1 / r), cD=8.0, alpha0=0.5, eta0=0.5)
    with pytest.raises(NumericalError, match="regularize"):
        invert(g, 2.0)


def test_table_round_trip(tmp_path):
    r = np.geomspace(1e-2, 1e2, 40)
    f = tmp_path / "g.txt"
    f.write_text("# r g\n" + "\n".join(f"{float(a)!r} {float(b)!r}" for a, b in zip(r, r ** -1.5)) + "\n")
    g = GreenScale.from_table(f)
    assert g.R0 == pytest.approx(100.0)
    mid = np.geomspace(2e-2, 50, 17)
    assert np.allclose(g(mid), mid ** -1.5, rtol=1e-12)
    assert g(1e-4) == pytest.approx(1e-4 ** -1.5, rel=1e-9)
    assert g.cD == pytest.approx(2 ** 1.5, rel=1e-9)
    assert verify_scale(g, default_grid(g, 64, decades=4)) == []


@pytest.mark.parametrize("text, line", [
    ("1 2\n2 x\n", 2),
    ("1 2\n2\n", 2),
    ("1 2\n0.5 1\n", 2),
    ("1 2\n2 3\n", 2),
    ("# c\n1 -2\n", 2),
])
def test_table_errors_name_the_line(tmp_path, text, line):
    f = tmp_path / "t.txt"
    f.write_text(text)
    with pytest.raises(ConfigurationError, match=f":{line}:"):
        load_table(f)


def test_table_needs_two_lines(tmp_path):
    f = tmp_path / "t.txt"
    f.write_text("1 1\n")
    with pytest.raises(ConfigurationError):
        load_table(f)


def test_tabulated_flat_start_rejected():
    with pytest.raises(ConfigurationError):
        tabulated([1.0, 2.0, 3.0], [1.0, 1.0, 0.5])


def test_default_grid_finite_range():
    g = GreenScale.power_law(1.0, R0=5.0)
    r = default_grid(g)
    assert r[-1] < 5.0 and r[0] > 0 and math.isclose(r[-1] / r[0], 1e12, rel_tol=1e-9)
