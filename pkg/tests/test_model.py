import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special
from scipy.spatial.transform import Rotation

from harnacklab.errors import ConfigurationError, DomainError
from harnacklab.model import (Ball, ProcessModel, ball_green, exit_constant, exit_normalization,
                              exit_radial_mass, green, green_matrix, levy_constant, levy_density,
                              newton_constant, poisson_kernel, riesz_constant,
                              sphere_poisson_kernel, triangle_constant, uniform_in_ball,
                              weak_decreasing_constant)
from harnacklab.scale import default_grid, verify_scale

STABLE_CASES = [(1, 1.0), (1, 0.5), (2, 1.0), (3, 1.0), (3, 1.5), (2, 1.7)]


def test_known_constants():
    # Newtonian kernel 1/(4 pi r) and the Riesz kernel for d=3, alpha=1: 1/(2 pi^2 r^2)
    assert newton_constant(3) == pytest.approx(1 / (4 * math.pi), rel=1e-15)
    assert riesz_constant(3, 1.0) == pytest.approx(1 / (2 * math.pi ** 2), rel=1e-15)
    # Cauchy process: jump density 1/(pi z^2); d=3, alpha=1: 1/(pi^2 |z|^4)
    assert levy_constant(1, 1.0) == pytest.approx(1 / math.pi, rel=1e-15)
    assert levy_constant(3, 1.0) == pytest.approx(1 / math.pi ** 2, rel=1e-15)
    assert exit_constant(1, 1.0) == pytest.approx(1 / math.pi, rel=1e-15)


def test_riesz_constant_tends_to_newton():
    assert riesz_constant(3, 2.0 - 1e-9) == pytest.approx(newton_constant(3), rel=1e-8)


def test_model_validation():
    with pytest.raises(ConfigurationError):
        ProcessModel.brownian(2)
    with pytest.raises(ConfigurationError):
        ProcessModel.stable(3, 2.0)
    with pytest.raises(ConfigurationError):
        ProcessModel("levy", 3)
    with pytest.raises(ConfigurationError):
        ProcessModel.stable(0, 1.0)
    with pytest.raises(ConfigurationError, match="recurrent"):
        ProcessModel.stable(1, 1.0).scale
    with pytest.raises(ConfigurationError, match="no scale data"):
        ProcessModel("tabulated", 3).scale


@pytest.mark.parametrize("d, a", [(2, 1.0), (3, 1.0), (3, 1.5), (3, 0.5)])
def test_stable_scale_passes_checks(d, a):
    g = ProcessModel.stable(d, a).scale
    assert verify_scale(g, default_grid(g)) == []
    assert g.cD == 2.0 ** (d - a)


def test_green_diagonal_and_values():
    m = ProcessModel.brownian(3)
    assert green(m, [0, 0, 0], [0, 0, 0]) == math.inf
    assert green(m, [0, 0, 0], [2, 0, 0]) == pytest.approx(1 / (8 * math.pi))
    x = np.random.default_rng(0).standard_normal((5, 3))
    M = green_matrix(m, x, x, diag=7.0)
    assert np.allclose(np.diag(M), 7.0)
    assert M[0, 1] == pytest.approx(green(m, x[0], x[1]), rel=1e-14)


@given(st.integers(0, 2 ** 32 - 1))
def test_green_isometry_invariance(seed):
    rng = np.random.default_rng(seed)
    m = ProcessModel.stable(3, 1.3)
    x, y = rng.standard_normal((2, 4, 3))
    R = Rotation.random(random_state=seed).as_matrix()
    t = rng.standard_normal(3)
    assert np.allclose(green(m, x @ R.T + t, y @ R.T + t), green(m, x, y), rtol=1e-12)


@pytest.mark.parametrize("d, a", STABLE_CASES)
def test_exit_law_normalization(d, a):
    m = ProcessModel.stable(d, a)
    for s in (0.0, 0.5, 0.9):
        assert exit_normalization(m, s) == pytest.approx(1.0, abs=1e-9)


def test_cauchy_exit_mass_beyond_two():
    # (2/pi) int_2^inf dz / (z sqrt(z^2-1)) = (2/pi)(pi/2 - pi/3) = 1/3
    m = ProcessModel.stable(1, 1.0)
    assert exit_radial_mass(m, 0.0, 2.0) == pytest.approx(1 / 3, rel=1e-10)


def test_poisson_kernel_against_direct_quadrature():
    m = ProcessModel.stable(2, 1.0)
    B = Ball((0.0, 0.0), 1.0)
    x = np.array([0.4, 0.0])
    # mass on 1.5 <= |z| < 3 by polar quadrature of the closed form
    f = lambda t, rho: poisson_kernel(m, B, x, [rho * np.cos(t), rho * np.sin(t)]) * rho  # noqa: E731
    val = integrate.dblquad(f, 1.5, 3.0, 0.0, 2 * math.pi, epsabs=0, epsrel=1e-11)[0]
    assert exit_radial_mass(m, 0.4, 1.5, 3.0) == pytest.approx(val, rel=1e-8)


def test_poisson_kernel_domain_errors():
    m = ProcessModel.stable(1, 1.0)
    B = Ball((0.0,), 1.0)
    with pytest.raises(DomainError):
        poisson_kernel(m, B, [1.0], [2.0])
    with pytest.raises(DomainError):
        poisson_kernel(m, B, [0.0], [0.5])
    with pytest.raises(ConfigurationError):
        poisson_kernel(ProcessModel.brownian(3), Ball((0, 0, 0), 1.0), [0, 0, 0], [2, 0, 0])


def test_sphere_poisson_kernel_integrates_to_one():
    B = Ball((0.0, 0.0, 0.0), 2.0)
    x = np.array([0.5, 0.7, -0.2])

    def f(phi, theta):
        z = 2.0 * np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
        return sphere_poisson_kernel(B, x, z) * 4.0 * np.sin(theta)
    val = integrate.dblquad(f, 0, math.pi, 0, 2 * math.pi, epsabs=0, epsrel=1e-11)[0]
    assert val == pytest.approx(1.0, rel=1e-9)


def _betainc_ball_green(d, a, x, y):
    # kappa |x-y|^(a-d) B(a/2, (d-a)/2) I_t(a/2, (d-a)/2), t = r0 / (1 + r0)
    r0 = (1 - x @ x) * (1 - y @ y) / ((x - y) @ (x - y))
    kappa = special.gamma(d / 2) / (2 ** a * np.pi ** (d / 2) * special.gamma(a / 2) ** 2)
    p, q = a / 2, d / 2 - a / 2
    return (kappa * np.linalg.norm(x - y) ** (a - d) * special.beta(p, q)
            * special.betainc(p, q, r0 / (1 + r0)))


@pytest.mark.parametrize("d, a", [(3, 1.0), (2, 1.0), (3, 1.5), (3, 0.5)])
@pytest.mark.parametrize("pair", [((0.3, 0, 0), (-0.2, 0.4, 0.1)), ((0.01, 0, 0), (0.02, 0, 0)),
                                  ((0.9, 0, 0), (-0.95, 0, 0))])
def test_ball_green_against_betainc(d, a, pair):
    x, y = (np.array(p[:d], dtype=float) for p in pair)
    m = ProcessModel.stable(d, a)
    assert ball_green(m, Ball(np.zeros(d), 1.0), x, y) == pytest.approx(
        _betainc_ball_green(d, a, x, y), rel=1e-10)


def test_ball_green_limits():
    m = ProcessModel.stable(3, 1.0)
    B = Ball((0.0, 0.0, 0.0), 1.0)
    x = np.array([0.1, 0, 0])
    assert ball_green(m, B, x, x) == math.inf
    assert ball_green(m, B, x, [1.5, 0, 0]) == 0.0
    # dominated by G and approaching it in a large ball
    y = np.array([0.0, 0.2, 0.0])
    assert ball_green(m, B, x, y) < green(m, x, y)
    big = Ball((0.0, 0.0, 0.0), 1e6)
    assert ball_green(m, big, x, y) == pytest.approx(green(m, x, y), rel=1e-5)


def test_levy_density_and_weak_decreasing():
    m = ProcessModel.stable(3, 1.0)
    assert levy_density(m, [0, 0, 0], [2, 0, 0]) == pytest.approx(1 / (16 * math.pi ** 2))
    wd = weak_decreasing_constant(m)
    assert wd.C0 == 1.0 and wd.doubling == pytest.approx(16.0, rel=1e-12)
    with pytest.raises(DomainError):
        levy_density(m, [0, 0, 0], [0, 0, 0])


def test_triangle_constant_bounded_by_two_to_the_p():
    # min(|x-z|, |y-z|) >= |x-y| / 2 gives min G <= 2^p G(x, y)
    m = ProcessModel.stable(3, 1.0)
    c = triangle_constant(m, 2000, Ball((0.0, 0.0, 0.0), 1.0), 0)
    assert 1.0 <= c <= 4.0
    assert c == triangle_constant(m, 2000, Ball((0.0, 0.0, 0.0), 1.0), 0)


def test_uniform_in_ball_radial_law(rng):
    pts = uniform_in_ball(rng, Ball((1.0, 2.0, 3.0), 2.0), 20000)
    r = np.linalg.norm(pts - [1, 2, 3], axis=1) / 2
    assert r.max() < 1
    # P(r < 1/2) = 1/8
    assert abs(np.mean(r < 0.5) - 0.125) < 4 * math.sqrt(0.125 * 0.875 / 20000)


def test_ball_validation():
    with pytest.raises(DomainError):
        Ball((0.0,), 0.0)
    b = Ball([1, 2], 1.0)
    assert b.center == (1.0, 2.0) and b.d == 2
    assert b.contains([[1.5, 2.0], [3.0, 2.0]]).tolist() == [True, False]
