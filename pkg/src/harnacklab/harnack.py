"""Positive harmonic functions of the stable process and Harnack checks.

A harmonic function on B = B(x0, R') is given by bounded data on the
complement of B; inside B it is the exit-law average of the data.  For
data supported on a cell {lo <= |z - x0| / R' < hi, z in sector} the
angular integral reduces to the classical harmonic measure of the sector,
which leaves a single radial integral in v = R' / |z - x0|:

    h(x) = (1 - s^2)^(a/2) (2 / B(a/2, 1-a/2))
           * int v^(a-1) (1 - v^2)^(-a/2) (1 - s^2 v^2)^(-1) H(v (x - x0)/R') dv

with s = |x - x0| / R' and H the sector's harmonic measure for Brownian
motion in the unit ball.  The integral is done by Gauss-Jacobi quadrature
with the endpoint singularities as weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.stats import qmc

from . import kernels
from .constants import HarnackConstants
from .errors import ConfigurationError, DomainError
from .model import (BROWNIAN, STABLE, Ball, ProcessModel, as_points, exit_constant, green,
                    poisson_kernel)
from .montecarlo import EstimateWithError, exit_points, run_blocks

DOMAIN_MARGIN = 1.05
DEFAULT_GRID = 4096
VANISHING = 1e-300
MIN_NODES, MAX_NODES = 32, 4096
CHUNK = 2048


@dataclass(frozen=True)
class Cell:
    """Radial-angular cell of the ball complement, radii in units of R'.

    ``sector`` is None (all directions), +1 or -1 (a side, d = 1) or an
    angle interval (t1, t2) with t1 < t2 (an arc, d = 2).
    """
    lo: float = 1.0
    hi: float = math.inf
    sector: object = None

    def __post_init__(self):
        if not 1.0 <= self.lo < self.hi:
            raise DomainError(f"cell radii need 1 <= lo < hi, got {self.lo}, {self.hi}")

    def describe(self) -> str:
        if self.sector is None:
            where = "all directions"
        elif isinstance(self.sector, (int, float)):
            where = "side +" if self.sector > 0 else "side -"
        else:
            where = f"arc [{self.sector[0]:.6g}, {self.sector[1]:.6g})"
        return f"cell [{self.lo:.6g}, {self.hi:.6g}) {where}"

    def contains(self, rel: np.ndarray) -> np.ndarray:
        """Membership of points given relative to the center in units of R'."""
        rho = np.linalg.norm(rel, axis=-1)
        ok = (rho >= self.lo) & (rho < self.hi)
        if self.sector is None:
            return ok
        if isinstance(self.sector, (int, float)):
            return ok & (np.sign(rel[..., 0]) == np.sign(self.sector))
        t1, t2 = self.sector
        ang = np.arctan2(rel[..., 1], rel[..., 0])
        ang = t1 + np.mod(ang - t1, 2 * math.pi)
        return ok & (ang < t2)

    def sector_measure(self, q: np.ndarray) -> np.ndarray:
        """Brownian harmonic measure of the sector from q in the unit ball."""
        if self.sector is None:
            return np.ones(q.shape[:-1])
        d = q.shape[-1]
        if isinstance(self.sector, (int, float)):
            if d != 1:
                raise ConfigurationError("side sectors are only defined for d = 1")
            return (1 + np.sign(self.sector) * q[..., 0]) / 2
        if d != 2:
            raise ConfigurationError("arc sectors are only defined for d = 2")
        t1, t2 = self.sector
        rho = np.linalg.norm(q, axis=-1)
        phi = np.arctan2(q[..., 1], q[..., 0])
        return _arc_primitive(t2 - phi, rho) - _arc_primitive(t1 - phi, rho)


def _arc_primitive(t, rho):
    """Antiderivative in t of the disc Poisson kernel (1 - rho^2) / (2 pi (1 - 2 rho cos t + rho^2))."""
    return t / (2 * math.pi) + np.arctan2(rho * np.sin(t), 1 - rho * np.cos(t)) / math.pi


@dataclass(frozen=True)
class HarmonicFunction:
    """Positive harmonic function on ``ball`` with one of three data types.

    ``cells`` is a list of (weight, Cell) pairs; a constant is the single
    full cell.  ``pole`` makes h the exit density at that exterior point
    (an extreme harmonic function), in which case ``cells`` must be empty.
    """
    model: ProcessModel
    ball: Ball
    cells: tuple = ()
    pole: np.ndarray | None = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        self.model._require_stable("harmonic functions")
        if self.model.d != self.ball.d:
            raise DomainError("ball and model dimensions differ")
        if self.pole is not None:
            if self.cells:
                raise ConfigurationError("a pole function takes no cell data")
            pole = as_points(self.pole, self.model.d).reshape(self.model.d)
            if self.ball.dist(pole) <= self.ball.radius:
                raise DomainError("the pole must lie outside the ball")
            object.__setattr__(self, "pole", pole)
        elif not self.cells:
            raise ConfigurationError("harmonic function needs cell data or a pole")
        for w, _ in self.cells:
            if not (w >= 0 and math.isfinite(w)):
                raise DomainError("cell weights must be finite and nonnegative")

    @classmethod
    def constant(cls, model, ball, value: float = 1.0):
        return cls(model, ball, ((float(value), Cell()),), label=f"constant {value:g}")

    @classmethod
    def indicator(cls, model, ball, cell: Cell, weight: float = 1.0):
        return cls(model, ball, ((float(weight), cell),), label=cell.describe())

    @classmethod
    def mixture(cls, model, ball, cells):
        cells = tuple((float(w), c) for w, c in cells)
        return cls(model, ball, cells,
                   label="mixture " + " + ".join(f"{w:g} {c.describe()}" for w, c in cells))

    @classmethod
    def extreme(cls, model, ball, pole):
        pole = np.asarray(pole, dtype=float)
        return cls(model, ball, pole=pole,
                   label="pole (" + ", ".join(f"{v:.6g}" for v in np.ravel(pole)) + ")")

    def data(self, z) -> np.ndarray:
        """Boundary data at points z outside the ball (zero for pole functions)."""
        z = as_points(z, self.model.d)
        rel = (z - self.ball.c) / self.ball.radius
        out = np.zeros(z.shape[:-1])
        for w, cell in self.cells:
            out = out + w * cell.contains(rel)
        return out


def _node_count(s: np.ndarray) -> np.ndarray:
    raw = np.ceil(8 / np.sqrt(np.maximum(1 - s, 1e-300)))
    p2 = 2 ** np.ceil(np.log2(np.maximum(raw, 1)))
    return np.clip(p2, MIN_NODES, MAX_NODES).astype(int)


_RULES: dict = {}


def _jacobi_rule(n: int, a_right: float, b_left: float):
    """Nodes/weights on [0, 1] for weight (1 - v)^a_right v^b_left."""
    key = (n, a_right, b_left)
    if key not in _RULES:
        x, w = special.roots_jacobi(n, a_right, b_left)
        _RULES[key] = ((x + 1) / 2, w / 2 ** (1 + a_right + b_left))
    return _RULES[key]


def _cell_values(model: ProcessModel, cell: Cell, q: np.ndarray) -> np.ndarray:
    """h for the indicator of ``cell`` at points q (unit-ball coordinates)."""
    a = model.alpha
    s = np.linalg.norm(q, axis=1)
    v_lo = 0.0 if math.isinf(cell.hi) else 1.0 / cell.hi
    v_hi = 1.0 / cell.lo
    a_right = -a / 2 if v_hi == 1.0 else 0.0
    b_left = a - 1 if v_lo == 0.0 else 0.0
    pref = (1 - s * s) ** (a / 2) * 2 * math.sin(math.pi * a / 2) / math.pi
    out = np.empty(q.shape[0])
    n_nodes = _node_count(s)
    for n in np.unique(n_nodes):
        t, w = _jacobi_rule(int(n), a_right, b_left)
        v = v_lo + (v_hi - v_lo) * t
        scale = (v_hi - v_lo) ** (1 + a_right + b_left)
        # smooth remainder after removing the Jacobi weight
        f = (v ** (a - 1 - b_left)) * (1 - v * v) ** (-a / 2) / np.where(a_right != 0, (1 - v) ** a_right, 1.0)
        rows = np.nonzero(n_nodes == n)[0]
        for start in range(0, rows.size, CHUNK):
            rr = rows[start:start + CHUNK]
            qq = q[rr]
            pts = v[None, :, None] * qq[:, None, :]
            H = cell.sector_measure(pts)
            ss = s[rr][:, None]
            integrand = f[None, :] * H / (1 - ss * ss * v[None, :] ** 2)
            out[rr] = scale * (integrand @ w)
    return pref * out


def evaluate(h: HarmonicFunction, x) -> np.ndarray | float:
    """h at x: quadrature inside the ball, the data outside."""
    pts = as_points(x, h.model.d)
    flat = pts.reshape(-1, h.model.d)
    rel = (flat - h.ball.c) / h.ball.radius
    inside = np.einsum("ij,ij->i", rel, rel) < 1
    out = np.empty(flat.shape[0])
    if h.pole is not None:
        if inside.any():
            out[inside] = poisson_kernel(h.model, h.ball, flat[inside], h.pole)
        out[~inside] = 0.0
    else:
        out[~inside] = h.data(flat[~inside])
        if inside.any():
            q = rel[inside]
            acc = np.zeros(q.shape[0])
            for w, cell in h.cells:
                if w:
                    acc += w * _cell_values(h.model, cell, q)
            out[inside] = acc
    out = out.reshape(pts.shape[:-1])
    return out if out.ndim else float(out)


# -------------------------------------------------------------- mean value

@dataclass(frozen=True)
class MeanValueResult:
    value: float
    estimate: EstimateWithError
    residual: float

    def to_dict(self) -> dict:
        return {"value": self.value, "estimate": self.estimate.to_dict(), "residual": self.residual}


def mean_value_check(h: HarmonicFunction, inner: Ball, x, n: int, seed: int, *,
                     threads: int = 1) -> MeanValueResult:
    """Standardized residual of h(x) against h averaged over exits from ``inner``.

    For pole functions the point mass at the pole contributes the inner
    exit density at the pole, which is added exactly.
    """
    d = h.model.d
    x = as_points(x, d).reshape(d)
    if inner.dist(x) >= inner.radius:
        raise DomainError("x must lie inside the inner ball")
    if h.ball.dist(inner.center) + inner.radius >= h.ball.radius:
        raise DomainError("the inner ball must be compactly contained in the domain ball")

    def block(rng, m):
        z = exit_points(rng, h.model, inner.c, inner.radius, np.tile(x, (m, 1)))
        return np.asarray(evaluate(h, z), dtype=float).reshape(m)

    vals = np.concatenate(run_blocks(block, n, seed, threads=threads))
    est = EstimateWithError.from_samples(vals, seed)
    if h.pole is not None:
        est = EstimateWithError(est.mean + float(poisson_kernel(h.model, inner, x, h.pole)),
                                est.stderr, est.n, est.seed)
    value = float(evaluate(h, x))
    resid = (value - est.mean) / est.stderr if est.stderr > 0 else (0.0 if value == est.mean else math.inf)
    return MeanValueResult(value=value, estimate=est, residual=resid)


# ----------------------------------------------------------------- Harnack

def ball_grid(ball: Ball, n: int) -> np.ndarray:
    """Center plus ``n`` unscrambled Halton points mapped into the ball."""
    d = ball.d
    if d == 1:
        u = qmc.Halton(1, scramble=False).random(n + 1)[1:, 0]
        pts = (2 * u - 1)[:, None]
    else:
        u = qmc.Halton(d + 1, scramble=False).random(n + 1)[1:]
        u = np.clip(u, 1e-12, 1 - 1e-12)
        direction = special.ndtri(u[:, :d])
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        pts = direction * (u[:, d] ** (1 / d))[:, None]
    return np.vstack([ball.c, ball.c + ball.radius * pts])


@dataclass(frozen=True)
class RatioRow:
    label: str
    sup: float
    inf: float
    ratio: float
    vanishing: bool


@dataclass(frozen=True)
class HarnackReport:
    K: float
    max_ratio: float
    argmax: str
    passed: bool
    inner_radius: float
    rows: list = field(repr=False)
    excluded: int = 0

    def to_dict(self) -> dict:
        return {"K": self.K, "max_ratio": self.max_ratio, "argmax": self.argmax,
                "pass": self.passed, "inner_radius": self.inner_radius,
                "n_functions": len(self.rows), "excluded": self.excluded}


def _sup_inf(h: HarmonicFunction, grid: np.ndarray) -> tuple[float, float]:
    if h.pole is None:
        v = np.asarray(evaluate(h, grid))
        return float(v.max()), float(v.min())
    # exit density at the pole: weights per grid point times |x - pole|^-d
    a, d = h.model.alpha, h.model.d
    r2 = h.ball.radius ** 2
    w = exit_constant(d, a) * (r2 - np.sum((grid - h.ball.c) ** 2, axis=1)) ** (a / 2)
    lo, hi = kernels.minmax_weighted_power(grid, w, h.pole[None, :], -d)
    f = (np.sum((h.pole - h.ball.c) ** 2) - r2) ** (-a / 2)
    return float(hi[0] * f), float(lo[0] * f)


def harnack_ratio(model: ProcessModel, x0, R: float, constants: HarnackConstants, family,
                  grid_n: int = DEFAULT_GRID, *, inner_fraction: float | None = None) -> HarnackReport:
    """Largest sup/inf over B(x0, alpha^2 R) across ``family``; passes when <= K."""
    x0 = as_points(x0, model.d).reshape(model.d)
    frac = constants.alpha ** 2 if inner_fraction is None else inner_fraction
    inner = Ball(x0, frac * R)
    grid = ball_grid(inner, grid_n)
    rows = []
    for h in family:
        if h.ball.dist(x0) > 1e-12 * R or h.ball.radius < DOMAIN_MARGIN * R * (1 - 1e-12):
            raise DomainError(f"{h.label}: needs a domain B(x0, R') with R' >= {DOMAIN_MARGIN} R")
        sup, inf = _sup_inf(h, grid)
        vanish = inf < VANISHING
        rows.append(RatioRow(h.label, sup, inf, math.inf if vanish else sup / inf, vanish))
    kept = [r for r in rows if not r.vanishing]
    if not kept:
        raise DomainError("every family member vanishes numerically on the inner ball")
    best = max(kept, key=lambda r: r.ratio)
    return HarnackReport(K=constants.K, max_ratio=best.ratio, argmax=best.label,
                         passed=bool(best.ratio <= constants.K), inner_radius=inner.radius,
                         rows=rows, excluded=len(rows) - len(kept))


def pole_family(model: ProcessModel, x0, R: float, n: int, *, margin: float = DOMAIN_MARGIN,
                max_factor: float = 100.0) -> list[HarmonicFunction]:
    """``n`` extreme functions on B(x0, margin R) with poles on a radial-angular grid."""
    d = model.d
    x0 = as_points(x0, d).reshape(d)
    ball = Ball(x0, margin * R)
    if d == 1:
        n_dir = 2
        dirs = np.array([[1.0], [-1.0]])
    else:
        n_dir = max(2, int(round(math.sqrt(n))))
        if d == 2:
            t = 2 * math.pi * np.arange(n_dir) / n_dir
            dirs = np.stack([np.cos(t), np.sin(t)], 1)
        else:
            u = qmc.Halton(d, scramble=False).random(n_dir + 1)[1:]
            dirs = special.ndtri(np.clip(u, 1e-12, 1 - 1e-12))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    n_rad = math.ceil(n / n_dir)
    radii = ball.radius * (1 + np.geomspace(1e-3, max_factor, n_rad))
    poles = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)[:n]
    return [HarmonicFunction.extreme(model, ball, x0 + p) for p in poles]


def cell_family(model: ProcessModel, x0, R: float, n: int, *,
                margin: float = DOMAIN_MARGIN) -> list[HarmonicFunction]:
    """``n`` indicator-cell functions: radial shells times sides or arcs."""
    d = model.d
    x0 = as_points(x0, d).reshape(d)
    ball = Ball(x0, margin * R)
    if d == 1:
        sectors = [1, -1]
    elif d == 2:
        k = 4
        sectors = [(2 * math.pi * i / k, 2 * math.pi * (i + 1) / k) for i in range(k)]
    else:
        sectors = [None]
    n_rad = math.ceil(n / len(sectors))
    edges = np.concatenate([[1.0], 1 + np.geomspace(1e-3, 100.0, n_rad)])
    out = []
    for i in range(n_rad):
        for sec in sectors:
            out.append(HarmonicFunction.indicator(
                model, ball, Cell(float(edges[i]), float(edges[i + 1]), sec)))
    return out[:n]


def empirical_harnack_constant(model: ProcessModel, x0, R: float, constants: HarnackConstants,
                               n_extreme: int, *, grid_n: int = DEFAULT_GRID,
                               inner_fraction: float | None = None) -> float:
    """Largest sup/inf over extreme functions: a lower bound on the sharp constant."""
    fam = pole_family(model, x0, R, n_extreme)
    return harnack_ratio(model, x0, R, constants, fam, grid_n,
                         inner_fraction=inner_fraction).max_ratio


@dataclass(frozen=True)
class DiffusionCheck:
    ratio: float
    bound: float
    passed: bool

    def to_dict(self) -> dict:
        return {"ratio": self.ratio, "bound": self.bound, "pass": self.passed}


def diffusion_global_check(model: ProcessModel, x0, R: float, z_far, *,
                           grid_n: int = DEFAULT_GRID) -> DiffusionCheck:
    """sup/inf of G(., z_far) over B(x0, R/2) against (c cD)^2."""
    if model.kind != BROWNIAN:
        raise ConfigurationError("the diffusion bound applies to Brownian models")
    x0 = as_points(x0, model.d).reshape(model.d)
    z = as_points(z_far, model.d).reshape(model.d)
    if np.linalg.norm(z - x0) <= 2 * R:
        raise DomainError("z_far must lie outside B(x0, 2R)")
    grid = ball_grid(Ball(x0, R / 2), grid_n)
    v = np.asarray(green(model, grid, z))
    g = model.scale
    bound = (g.c * g.cD) ** 2
    ratio = float(v.max() / v.min())
    return DiffusionCheck(ratio=ratio, bound=bound, passed=ratio <= bound)
