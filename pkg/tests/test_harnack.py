import math

import numpy as np
import pytest
from scipy import integrate, special

from harnacklab.constants import build_constants
from harnacklab.errors import ConfigurationError, DomainError
from harnacklab.harnack import (Cell, HarmonicFunction, ball_grid, cell_family,
                                diffusion_global_check, empirical_harnack_constant, evaluate,
                                harnack_ratio, mean_value_check, pole_family)
from harnacklab.model import Ball, ProcessModel, exit_radial_mass
from harnacklab.montecarlo import sample_exit

CAUCHY1 = ProcessModel.stable(1, 1.0)
CAUCHY2 = ProcessModel.stable(2, 1.0)
STABLE31 = ProcessModel.stable(3, 1.0)
BM3 = ProcessModel.brownian(3)
MODELS = [CAUCHY1, CAUCHY2, STABLE31, ProcessModel.stable(3, 0.5), ProcessModel.stable(2, 1.5),
          ProcessModel.stable(1, 0.7)]


@pytest.fixture(scope="module")
def ref():
    return build_constants(STABLE31.scale, 3.0, 16.0)


def unit(d):
    return Ball((0.0,) * d, 1.0)


def bgr(d, a, x, z):
    """Exit density from the unit ball, written out from its closed form."""
    C = special.gamma(d / 2) * math.pi ** (-d / 2 - 1) * math.sin(math.pi * a / 2)
    x, z = np.atleast_1d(x), np.atleast_1d(z)
    return C * ((1 - x @ x) / (z @ z - 1)) ** (a / 2) * np.linalg.norm(x - z) ** -d


# ----------------------------------------------------------- evaluation

@pytest.mark.parametrize("model", MODELS, ids=lambda m: f"d{m.d}a{m.alpha}")
def test_constant_normalization(model, rng):
    d = model.d
    h = HarmonicFunction.constant(model, unit(d))
    pts = rng.standard_normal((100, d))
    pts *= (rng.random(100) ** (1 / d) * 0.999 / np.linalg.norm(pts, axis=1))[:, None]
    assert np.max(np.abs(evaluate(h, pts) - 1)) < 1e-10


def test_cauchy_line_side_values():
    h = HarmonicFunction.indicator(CAUCHY1, unit(1), Cell(sector=1))
    assert evaluate(h, 0.0) == pytest.approx(0.5, abs=1e-13)
    oracle = integrate.quad(lambda z: bgr(1, 1.0, 0.5, z), 1, np.inf)[0]
    assert oracle == pytest.approx(0.6666666666660442, abs=1e-9)
    assert evaluate(h, 0.5) == pytest.approx(oracle, abs=1e-12)
    other = HarmonicFunction.indicator(CAUCHY1, unit(1), Cell(sector=-1))
    assert evaluate(h, 0.3) + evaluate(other, 0.3) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("a, lo, hi, x", [(0.7, 1.0, 3.0, -0.4), (1.5, 2.0, np.inf, 0.8)])
def test_line_shell_quadrature_oracle(a, lo, hi, x):
    model = ProcessModel.stable(1, a)
    h = HarmonicFunction.indicator(model, unit(1), Cell(lo, hi, 1))
    oracle = integrate.quad(lambda z: bgr(1, a, x, z), lo, hi, limit=200)[0]
    assert evaluate(h, x) == pytest.approx(oracle, rel=1e-9)


@pytest.mark.parametrize("lo, hi, sector, x", [
    (1.0, 4.0, (0.0, math.pi / 2), (0.3, -0.2)),
    (1.5, np.inf, (math.pi, 1.5 * math.pi), (-0.6, -0.5)),
])
def test_disc_arc_oracle(lo, hi, sector, x):
    h = HarmonicFunction.indicator(CAUCHY2, unit(2), Cell(lo, hi, sector))
    xv = np.array(x)

    def f(t, u):
        rho = 1 + u * u  # removes the (rho - 1)^(-1/2) singularity
        z = rho * np.array([math.cos(t), math.sin(t)])
        return bgr(2, 1.0, xv, z) * rho * 2 * u

    u_hi = math.sqrt(hi - 1) if math.isfinite(hi) else np.inf
    u_lo = math.sqrt(lo - 1)
    if math.isfinite(u_hi):
        oracle = integrate.dblquad(f, u_lo, u_hi, sector[0], sector[1], epsabs=1e-13)[0]
    else:
        oracle = integrate.dblquad(f, u_lo, 30.0, sector[0], sector[1], epsabs=1e-13)[0]
        oracle += integrate.dblquad(f, 30.0, np.inf, sector[0], sector[1], epsabs=1e-13)[0]
    assert evaluate(h, xv) == pytest.approx(oracle, rel=1e-8)


def test_sphere_shell_matches_radial_mass():
    h = HarmonicFunction.indicator(STABLE31, unit(3), Cell(1.2, 5.0))
    for s in (0.0, 0.4, 0.9):
        assert evaluate(h, [s, 0, 0]) == pytest.approx(exit_radial_mass(STABLE31, s, 1.2, 5.0),
                                                        rel=1e-9)


def test_rotation_invariance_of_full_cells():
    h = HarmonicFunction.indicator(STABLE31, unit(3), Cell(1.0, 2.0))
    assert evaluate(h, [0.5, 0, 0]) == pytest.approx(evaluate(h, [0, 0.3, 0.4]), rel=1e-12)


def test_pole_function_is_exit_density():
    pole = np.array([1.3, -0.4])
    h = HarmonicFunction.extreme(CAUCHY2, unit(2), pole)
    x = np.array([0.2, 0.5])
    assert evaluate(h, x) == pytest.approx(bgr(2, 1.0, x, pole), rel=1e-12)
    assert evaluate(h, [2.0, 0.0]) == 0.0
    assert h.label == "pole (1.3, -0.4)"


def test_data_outside_the_ball():
    h = HarmonicFunction.mixture(CAUCHY1, unit(1), [(2.0, Cell(1, 2, 1)), (3.0, Cell(1, 2, -1))])
    assert np.array_equal(evaluate(h, np.array([[1.5], [-1.5], [3.0]])), [2.0, 3.0, 0.0])


def test_shifted_scaled_ball():
    big = HarmonicFunction.indicator(CAUCHY2, Ball((1.0, 2.0), 3.0), Cell(1.0, 2.0, (0.0, 1.0)))
    small = HarmonicFunction.indicator(CAUCHY2, unit(2), Cell(1.0, 2.0, (0.0, 1.0)))
    x = np.array([0.2, -0.3])
    assert evaluate(big, np.array([1.0, 2.0]) + 3 * x) == pytest.approx(evaluate(small, x), rel=1e-12)


def test_mc_crosscheck_side_value():
    z = sample_exit(CAUCHY1, unit(1), 0.5, seed=12, n=60000)
    p = np.mean(z[:, 0] > 0)
    h = HarmonicFunction.indicator(CAUCHY1, unit(1), Cell(sector=1))
    assert abs(p - evaluate(h, 0.5)) < 3 * math.sqrt(p * (1 - p) / z.shape[0])


def test_construction_errors():
    with pytest.raises(DomainError):
        Cell(2.0, 1.5)
    with pytest.raises(DomainError):
        HarmonicFunction.extreme(CAUCHY2, unit(2), [0.5, 0.0])
    with pytest.raises(ConfigurationError):
        HarmonicFunction(CAUCHY2, unit(2))
    with pytest.raises(DomainError):
        HarmonicFunction.mixture(CAUCHY2, unit(2), [(-1.0, Cell())])
    with pytest.raises(Exception):
        HarmonicFunction.constant(BM3, unit(3))
    with pytest.raises(ConfigurationError):
        evaluate(HarmonicFunction.indicator(STABLE31, unit(3), Cell(sector=1)), [0.1, 0, 0])


# ------------------------------------------------------------ mean value

def test_mean_value_constant_is_exact():
    h = HarmonicFunction.constant(CAUCHY2, unit(2))
    res = mean_value_check(h, Ball((0.0, 0.0), 0.5), (0.1, 0.0), 2000, seed=0)
    assert res.value == pytest.approx(1.0) and res.estimate.mean == pytest.approx(1.0)
    assert abs(res.residual) < 3


@pytest.mark.parametrize("h, inner, x", [
    (HarmonicFunction.indicator(CAUCHY2, unit(2), Cell(1.0, 3.0, (0.0, math.pi))),
     Ball((0.1, 0.0), 0.6), (0.3, 0.1)),
    (HarmonicFunction.extreme(STABLE31, unit(3), [1.5, 0.0, 0.0]), Ball((0.0,) * 3, 0.7),
     (0.2, 0.0, 0.0)),
    (HarmonicFunction.indicator(CAUCHY1, unit(1), Cell(1.0, 1.5, -1)), Ball((0.0,), 0.9), 0.4),
])
def test_mean_value_residuals(h, inner, x):
    res = mean_value_check(h, inner, x, 20000, seed=5)
    assert abs(res.residual) < 3, res.to_dict()


def test_mean_value_requires_compact_inner_ball():
    h = HarmonicFunction.constant(CAUCHY2, unit(2))
    with pytest.raises(DomainError):
        mean_value_check(h, Ball((0.0, 0.0), 1.0), (0.0, 0.0), 10, seed=0)
    with pytest.raises(DomainError):
        mean_value_check(h, Ball((0.0, 0.0), 0.5), (0.6, 0.0), 10, seed=0)


# --------------------------------------------------------------- Harnack

def test_ball_grid_inside():
    g = ball_grid(Ball((1.0, -1.0, 0.5), 0.25), 500)
    assert g.shape == (501, 3) and np.array_equal(g[0], [1.0, -1.0, 0.5])
    assert np.all(np.linalg.norm(g - g[0], axis=1) < 0.25)


def test_constant_family_ratio_one(ref):
    rep = harnack_ratio(CAUCHY2, (0.0, 0.0), 1.0, ref,
                        [HarmonicFunction.constant(CAUCHY2, Ball((0.0, 0.0), 1.05))], grid_n=256)
    assert rep.max_ratio == pytest.approx(1.0, abs=1e-9) and rep.passed


def test_cell_family_line(ref):
    fam = cell_family(CAUCHY1, 0.0, 1.0, 200)
    assert len(fam) == 200
    rep = harnack_ratio(CAUCHY1, 0.0, 1.0, ref, fam, grid_n=512)
    assert rep.passed and rep.excluded == 0 and 1 < rep.max_ratio < 1.01
    assert set(rep.to_dict()) == {"K", "max_ratio", "argmax", "pass", "inner_radius",
                                  "n_functions", "excluded"}


def test_empirical_constant_frozen(ref):
    assert empirical_harnack_constant(CAUCHY1, 0.0, 1.0, ref, 200) == pytest.approx(1.0074580, rel=1e-6)
    assert empirical_harnack_constant(CAUCHY2, (0.0, 0.0), 1.0, ref, 200) == pytest.approx(
        1.0149139, rel=1e-6)


def test_ratio_scale_and_translation_invariant(ref):
    a = harnack_ratio(CAUCHY2, (0.0, 0.0), 1.0, ref, pole_family(CAUCHY2, (0.0, 0.0), 1.0, 50),
                      grid_n=256)
    b = harnack_ratio(CAUCHY2, (3.0, -2.0), 7.0, ref, pole_family(CAUCHY2, (3.0, -2.0), 7.0, 50),
                      grid_n=256)
    assert b.max_ratio == pytest.approx(a.max_ratio, rel=1e-9)


def test_ratio_grows_with_inner_ball(ref):
    vals = [empirical_harnack_constant(CAUCHY2, (0.0, 0.0), 1.0, ref, 64, grid_n=256,
                                       inner_fraction=f) for f in (0.01, 0.1, 0.5)]
    assert vals[0] < vals[1] < vals[2]


def test_nearest_pole_attains_max(ref):
    fam = pole_family(CAUCHY1, 0.0, 1.0, 40)
    rep = harnack_ratio(CAUCHY1, 0.0, 1.0, ref, fam, grid_n=256, inner_fraction=0.5)
    assert rep.argmax in (fam[0].label, fam[1].label)


def test_vanishing_functions_excluded(ref):
    ball = Ball((0.0,), 1.05)
    fam = [HarmonicFunction.constant(CAUCHY1, ball),
           HarmonicFunction.indicator(CAUCHY1, ball, Cell(1e305, np.inf, 1))]
    rep = harnack_ratio(CAUCHY1, 0.0, 1.0, ref, fam, grid_n=64)
    assert rep.excluded == 1 and rep.rows[1].vanishing


def test_domain_margin_enforced(ref):
    fam = [HarmonicFunction.constant(CAUCHY1, Ball((0.0,), 1.0))]
    with pytest.raises(DomainError):
        harnack_ratio(CAUCHY1, 0.0, 1.0, ref, fam)


def test_diffusion_check():
    near = diffusion_global_check(BM3, np.zeros(3), 1.0, [2.5, 0, 0])
    # Newtonian kernel over B(0, 1/2) from |z| = 5/2: sup/inf -> 3/2
    assert 1.49 < near.ratio <= 1.5 and near.passed and near.bound == pytest.approx(4.0)
    far = diffusion_global_check(BM3, np.zeros(3), 1.0, [1e6, 0, 0])
    assert far.ratio == pytest.approx(1.0, abs=1e-5)
    with pytest.raises(DomainError):
        diffusion_global_check(BM3, np.zeros(3), 1.0, [1.5, 0, 0])
    with pytest.raises(ConfigurationError):
        diffusion_global_check(STABLE31, np.zeros(3), 1.0, [5, 0, 0])
