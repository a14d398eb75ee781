"""Inner capacity and equilibrium measures as linear programs.

The capacity of a point cloud is ``max sum(mu)`` subject to ``G mu <= 1``
on the test points and ``mu >= 0``.  Every result carries a certified
bracket: the primal measure rescaled to exact feasibility gives a lower
bound, the solver's dual rescaled to exact dual feasibility an upper bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate
from scipy.optimize import linprog

from . import kernels
from .errors import ConfigurationError, DomainError, NumericalError, UnboundedError
from .model import Ball, ProcessModel, TABULATED, as_points, ball_volume, green_matrix
from .scale import GreenScale, default_grid

LP_GAP_TOL = 1e-6


@dataclass(frozen=True)
class DiscreteMeasure:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.shape[0]:
            raise DomainError(f"{pts.shape[0]} points but {w.shape[0]} weights")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite and nonnegative")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights)

    def __len__(self):
        return self.weights.shape[0]


@dataclass(frozen=True)
class CapacityResult:
    capacity: float
    measure: DiscreteMeasure
    constraint_residual: float
    duality_gap: float
    lower: float
    upper: float
    n_points: int
    self_potential: float = math.inf
    spacing: float | None = None
    slack: float | None = None
    coarse_capacity: float | None = None
    ball: Ball | None = field(default=None, compare=False)


def _solve(M: np.ndarray, cost: np.ndarray, fixed: np.ndarray | None = None):
    """max cost.x s.t. M x <= 1, x >= 0 with HiGHS; returns (x, dual y >= 0)."""
    n = M.shape[1]
    bounds = [(0.0, 0.0) if fixed is not None and fixed[i] else (0.0, None) for i in range(n)]
    res = linprog(-cost, A_ub=M, b_ub=np.ones(M.shape[0]), bounds=bounds, method="highs")
    if res.status == 3:
        raise UnboundedError("capacity LP is unbounded; the kernel matrix is degenerate")
    if res.status != 0:
        raise NumericalError(f"HiGHS failed on the capacity LP: {res.message}")
    return np.maximum(res.x, 0.0), np.maximum(-res.ineqlin.marginals, 0.0)


def _certify(mass: float, worst_primal: float, dual_mass: float, worst_dual: float):
    """Certified (lower, upper, relative gap) from constraint extremes."""
    lower = mass / max(1.0, worst_primal)
    upper = dual_mass / worst_dual if worst_dual > 0 else math.inf
    upper = max(upper, lower)
    gap = (upper - lower) / lower if lower > 0 else (0.0 if upper == 0 else math.inf)
    return lower, upper, gap


def capacity_lp(model: ProcessModel, support, test, *, self_potential: float | None = None,
                ) -> CapacityResult:
    """Capacity of ``support`` with potential constraints on ``test``.

    Without ``self_potential`` a support point that is also a test point
    sees G = inf and is forced to carry no mass (points are polar).  Passing
    a finite ``self_potential`` uses it in place of G on coincident pairs.
    """
    y = as_points(support, model.d).reshape(-1, model.d)
    x = as_points(test, model.d).reshape(-1, model.d)
    if y.shape[0] == 0:
        raise DomainError("support must be nonempty")
    diag = math.inf if self_potential is None else float(self_potential)
    K = green_matrix(model, x, y, diag=diag)
    polar = ~np.all(np.isfinite(K), axis=0)
    Kf = np.where(polar[None, :], 0.0, K)
    if np.all(polar):
        mu = np.zeros(y.shape[0])
        return CapacityResult(0.0, DiscreteMeasure(y, mu), 0.0, 0.0, 0.0, 0.0,
                              y.shape[0], diag)
    mu, nu = _solve(Kf, np.ones(y.shape[0]), fixed=polar)
    Kmu = Kf @ mu
    dual = (Kf.T @ nu)[~polar]
    lower, upper, gap = _certify(math.fsum(mu), float(Kmu.max()), math.fsum(nu), float(dual.min()))
    return CapacityResult(
        capacity=math.fsum(mu),
        measure=DiscreteMeasure(y, mu),
        constraint_residual=float(max(0.0, Kmu.max() - 1.0)),
        duality_gap=gap, lower=lower, upper=upper,
        n_points=y.shape[0], self_potential=diag,
    )


@dataclass(frozen=True)
class LatticeCloud:
    """Cell-centred cubic lattice points inside a ball, grouped into orbits.

    ``orbit[i]`` indexes the orbit of point i under the signed permutation
    group of the coordinates about the ball center; ``reps`` holds one
    point index per orbit.
    """
    points: np.ndarray
    spacing: float
    orbit: np.ndarray
    orbit_size: np.ndarray
    reps: np.ndarray

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def n_orbits(self) -> int:
        return self.reps.shape[0]


def _odd_lattice(d: int, R: float, h: float) -> np.ndarray:
    """Odd integer coordinates 2i+1 of the cells whose center lies in B(0, R)."""
    k = int(math.ceil(R / h)) + 1
    idx = 2 * np.arange(-k, k) + 1
    odd = np.stack(np.meshgrid(*([idx] * d), indexing="ij"), -1).reshape(-1, d)
    return odd[np.sum(odd.astype(float) ** 2, axis=1) < (2 * R / h) ** 2]


def lattice_spacing(d: int, radius: float, n_points: int, *, window: float = 0.03,
                    n_trials: int = 121) -> float:
    """Spacing h giving about ``n_points`` cells whose union matches the ball volume.

    The nominal spacing (V/n)^(1/d) is scanned over a relative ``window``
    and the value minimizing |n_cells h^d / V - 1| is kept, so that the
    discretized set has the volume of the ball it stands for.
    """
    V = ball_volume(d, radius)
    h0 = (V / n_points) ** (1.0 / d)
    best = (math.inf, h0)
    for h in h0 * np.linspace(1 - window, 1 + window, n_trials):
        err = abs(_odd_lattice(d, radius, h).shape[0] * h ** d / V - 1)
        if err < best[0]:
            best = (err, float(h))
    return best[1]


def lattice_cloud(ball: Ball, *, n_points: int | None = None,
                  spacing: float | None = None) -> LatticeCloud:
    """Centers c + (i + 1/2) h of lattice cells lying inside ``ball``."""
    d, R = ball.d, ball.radius
    if (n_points is None) == (spacing is None):
        raise ConfigurationError("give exactly one of n_points and spacing")
    h = lattice_spacing(d, R, n_points) if spacing is None else float(spacing)
    if not h > 0:
        raise DomainError("lattice spacing must be positive")
    odd = _odd_lattice(d, R, h)
    if odd.shape[0] == 0:
        raise DomainError(f"spacing {h:g} leaves no lattice cell inside radius {R:g}")
    # integer canonical form: sorted absolute odd coordinates
    key = np.sort(np.abs(odd), axis=1)
    _, orbit, size = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    orbit = orbit.ravel()
    order = np.argsort(orbit, kind="stable")
    odd, orbit = odd[order], orbit[order]
    starts = np.concatenate(([0], np.cumsum(size)[:-1]))
    pts = ball.c + 0.5 * h * odd
    return LatticeCloud(points=pts, spacing=h, orbit=orbit, orbit_size=size, reps=starts)


def cube_mean_power(p: float, d: int) -> float:
    """Mean of |u|^(-p) over the unit cube [-1/2, 1/2]^d, for p < d.

    Splitting the cube into 2d pyramids with apex at the center turns the
    mean into d/(d-p) times the integral of |(v, 1/2)|^(-p) over one face.
    """
    if not p < d:
        raise ConfigurationError(f"cell self-potential diverges: need exponent {p} < d = {d}")
    if d == 1:
        face = 2.0 ** p
    elif d == 2:
        face, _ = integrate.quad(lambda v: (v * v + 0.25) ** (-p / 2), -0.5, 0.5,
                                 epsabs=0, epsrel=1e-13)
    elif d == 3:
        face, _ = integrate.dblquad(lambda v, u: (u * u + v * v + 0.25) ** (-p / 2),
                                    -0.5, 0.5, -0.5, 0.5, epsabs=0, epsrel=1e-12)
    else:
        face, _ = integrate.nquad(lambda *v: (sum(t * t for t in v) + 0.25) ** (-p / 2),
                                  [(-0.5, 0.5)] * (d - 1), opts={"epsrel": 1e-10})
    return d / (d - p) * face


def cell_self_potential(model: ProcessModel, spacing: float) -> float:
    """Average of G(c, .) over a lattice cell of side ``spacing`` around c."""
    if model.kind == TABULATED:
        raise ConfigurationError("lattice capacities need a closed-form power-law kernel")
    p = model.green_exponent
    return model.green_amplitude * spacing ** (-p) * cube_mean_power(p, model.d)


def lattice_capacity(model: ProcessModel, cloud: LatticeCloud) -> CapacityResult:
    """Orbit-reduced capacity LP on a symmetric lattice cloud.

    The LP is invariant under the symmetry group, so averaging any optimum
    over the group gives a symmetric optimum: one weight per orbit and one
    constraint per orbit representative suffice.  The certificate is exact
    in the full space because potentials of symmetric measures are
    symmetric.
    """
    diag = cell_self_potential(model, cloud.spacing)
    rows = green_matrix(model, cloud.points[cloud.reps], cloud.points, diag=diag)
    M = np.add.reduceat(rows, cloud.reps, axis=1)
    size = cloud.orbit_size.astype(float)
    w, nu = _solve(M, size)
    Kmu = M @ w
    Klam = M @ (nu / size)
    mass = math.fsum(w * size)
    lower, upper, gap = _certify(mass, float(Kmu.max()), math.fsum(nu), float(Klam.min()))
    return CapacityResult(
        capacity=mass,
        measure=DiscreteMeasure(cloud.points, w[cloud.orbit]),
        constraint_residual=float(max(0.0, Kmu.max() - 1.0)),
        duality_gap=gap, lower=lower, upper=upper,
        n_points=cloud.n_points, self_potential=diag, spacing=cloud.spacing,
    )


def ball_capacity(model: ProcessModel, ball: Ball, n_points: int | None = None, *,
                  spacing: float | None = None, slack: bool = True) -> CapacityResult:
    """Capacity of ``ball`` from a lattice cloud of about ``n_points`` cells.

    With ``slack`` the LP is repeated on a cloud with 2^-d times as many
    cells and the relative difference of the two values is attached as the
    discretization slack (a two-level Richardson estimate with the
    conservative order 1 in the spacing).
    """
    if model.d != ball.d:
        raise DomainError(f"ball dimension {ball.d} does not match model dimension {model.d}")
    if spacing is None:
        if n_points is None or n_points < 8:
            raise DomainError("n_points must be >= 8")
        spacing = lattice_spacing(model.d, ball.radius, n_points)
    fine = lattice_capacity(model, lattice_cloud(ball, spacing=spacing))
    if not slack:
        return _with(fine, ball=ball)
    coarse_h = lattice_spacing(model.d, ball.radius, max(1, round(fine.n_points / 2 ** model.d)))
    coarse = lattice_capacity(model, lattice_cloud(ball, spacing=coarse_h))
    rel = abs(fine.capacity - coarse.capacity) / fine.capacity
    return _with(fine, slack=rel, coarse_capacity=coarse.capacity, ball=ball)


def _with(result: CapacityResult, **kw) -> CapacityResult:
    return replace(result, **kw)


def capacity_bounds(model: ProcessModel, radius: float, c0: float) -> tuple[float, float]:
    """(1/(c0 g(r)), c/g(r)): the lower and upper capacity bounds for B(x, r)."""
    g = model.scale(radius)
    return 1.0 / (c0 * g), model.scale.c / g


def compute_CG(scale, d: int, r_grid=None) -> float:
    """sup over r of d * int_0^r s^(d-1) g(s) ds / (r^d g(r)).

    The integral is split into dyadic pieces down to 2^-60 r; below that the
    local power-law envelope of g supplies the remainder.  ``scale`` may be
    a :class:`GreenScale` or any positive callable.
    """
    g = scale
    if r_grid is None:
        r_grid = default_grid(scale, 32, decades=6.0) if isinstance(scale, GreenScale) \
            else np.geomspace(1e-3, 1e3, 32)
    levels = 60
    out = 0.0
    for r in np.atleast_1d(np.asarray(r_grid, dtype=float)):
        eps = r * 2.0 ** -levels
        q = math.log(float(g(eps / 2)) / float(g(eps))) / math.log(2.0)
        if q >= d - 1e-9:
            raise NumericalError(
                f"int_0^r s^(d-1) g(s) ds diverges: local exponent of g at 0 is {q:.6g} "
                f">= d = {d}; need d > exponent")
        f = lambda s: s ** (d - 1) * float(g(s))  # noqa: E731
        pieces = [integrate.quad(f, r * 2.0 ** -(k + 1), r * 2.0 ** -k, epsabs=0, epsrel=1e-12)[0]
                  for k in range(levels)]
        tail = eps ** d * float(g(eps)) / (d - q)
        total = math.fsum(pieces) + tail
        out = max(out, d * total / (r ** d * float(g(r))))
    return out


def c0_from_CG(model: ProcessModel, C_G: float) -> float:
    """c0 = c * C_G; normalized volume measure on B(x, r) scaled by 1/(c0 g(r)) is feasible."""
    if C_G < 1:
        raise DomainError(f"C_G must be >= 1, got {C_G}")
    return model.scale.c * C_G


def equilibrium_potential(model: ProcessModel, result: CapacityResult, x):
    """G mu(x) for the measure in ``result``; the cell self-potential on atoms."""
    pts = as_points(x, model.d)
    flat = pts.reshape(-1, model.d)
    mu = result.measure
    if model.kind == TABULATED:
        vals = green_matrix(model, flat, mu.points, diag=result.self_potential) @ mu.weights
    else:
        a = model.green_amplitude
        diag = result.self_potential / a
        vals = a * kernels.potential(flat, mu.points, mu.weights, -model.green_exponent, diag)
    vals = vals.reshape(pts.shape[:-1])
    return vals if vals.ndim else float(vals)
