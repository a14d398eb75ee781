"""Exact exit-law sampling, walk-on-spheres and the associated checks.

Randomness is organized in fixed-size blocks: block ``b`` of a run with
seed ``s`` draws from ``PCG64(SeedSequence(s, spawn_key=(b,)))``, so every
estimate depends on (inputs, seed) only, never on the number of worker
threads.  Block results are concatenated in block order before reduction.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .capacity import ball_capacity, equilibrium_potential
from .errors import ConfigurationError, DomainError, NumericalError
from .model import (BROWNIAN, STABLE, Ball, ProcessModel, as_points, exit_radial_mass,
                    levy_density, poisson_kernel, weak_decreasing_constant)
from .scale import largest_admissible_alpha

BLOCK_SIZE = 16384
# Brownian walks stop within this fraction of the domain radius from a sphere
EPS_SHELL = 1e-6
# exits from B(c, r) started farther than this fraction of r from c use WoS steps
REJECTION_LIMIT = 0.5
MAX_EXIT_ROUNDS = 100_000
CENSOR_WARN = 0.01


@dataclass(frozen=True)
class EstimateWithError:
    mean: float
    stderr: float
    n: int
    seed: int
    censored_fraction: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("an estimate needs n >= 1")

    @property
    def warning(self) -> bool:
        """True when more than 1% of the walks hit the step limit."""
        return self.censored_fraction > CENSOR_WARN

    @classmethod
    def from_samples(cls, values: np.ndarray, seed: int, censored: int = 0) -> "EstimateWithError":
        v = np.asarray(values, dtype=float)
        n = v.shape[0]
        mean = math.fsum(v.tolist()) / n
        var = math.fsum(((v - mean) ** 2).tolist()) / (n - 1) if n > 1 else 0.0
        return cls(mean=mean, stderr=math.sqrt(var / n), n=n, seed=seed,
                   censored_fraction=censored / n)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n, "seed": self.seed,
                "censored_fraction": self.censored_fraction, "warning": self.warning}


@dataclass(frozen=True)
class WosConfig:
    max_steps: int = 10_000
    boundary_shrink: float = 0.5
    seed: int = 0
    eps_shell: float = EPS_SHELL
    threads: int = 1
    block_size: int = BLOCK_SIZE

    def __post_init__(self):
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be >= 1")
        if not 0 < self.boundary_shrink < 1:
            raise ConfigurationError("boundary_shrink must lie in (0,1)")
        if self.threads < 1 or self.block_size < 1:
            raise ConfigurationError("threads and block_size must be >= 1")


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def run_blocks(fn, n: int, seed: int, *, threads: int = 1, block_size: int = BLOCK_SIZE):
    """Evaluate ``fn(rng, m)`` on consecutive blocks and return results in block order."""
    if n < 1:
        raise DomainError("sample count must be >= 1")
    sizes = [min(block_size, n - start) for start in range(0, n, block_size)]
    jobs = [(b, m) for b, m in enumerate(sizes)]
    if threads == 1:
        return [fn(block_rng(seed, b), m) for b, m in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: fn(block_rng(seed, job[0]), job[1]), jobs))


# ---------------------------------------------------------------- exit laws

def _directions(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    if d == 1:
        return np.where(rng.random(n) < 0.5, -1.0, 1.0)[:, None]
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def centered_exit(rng: np.random.Generator, model: ProcessModel, radius, n: int) -> np.ndarray:
    """Exit offsets z - c for a start at the center c of B(c, radius).

    Stable: |z - c| = radius / sqrt(U) with U ~ Beta(a/2, 1 - a/2), which is
    the radial marginal of the closed-form exit density; Brownian: the sphere.
    """
    radius = np.broadcast_to(np.asarray(radius, dtype=float), (n,))
    u = _directions(rng, n, model.d)
    if model.kind == STABLE:
        a = model.alpha
        rho = radius / np.sqrt(rng.beta(a / 2, 1 - a / 2, size=n))
    elif model.kind == BROWNIAN:
        rho = radius
    else:
        raise ConfigurationError(f"{model.label} has no exit sampler")
    return u * rho[:, None]


def exit_points(rng: np.random.Generator, model: ProcessModel, centers, radii, x,
                *, eps_shell: float = EPS_SHELL) -> np.ndarray:
    """Exact exit positions from B(centers[i], radii[i]) started at x[i].

    Starts within half the radius of the center are drawn by rejection from
    the centered law (acceptance ((1-s)|z-c|/|z-x|)^d).  Farther starts take
    exact exits from the largest ball around the current point inside the
    ball until they either leave or come within half the radius.  Brownian
    walks that come within ``eps_shell`` of the sphere are projected onto it.
    """
    d = model.d
    x = np.array(as_points(x, d).reshape(-1, d), dtype=float)
    n = x.shape[0]
    c = np.broadcast_to(as_points(centers, d), (n, d)).astype(float)
    r = np.broadcast_to(np.asarray(radii, dtype=float), (n,)).astype(float)
    if np.any(np.linalg.norm(x - c, axis=1) >= r):
        raise DomainError("start points must lie strictly inside their balls")
    out = np.empty((n, d))
    todo = np.arange(n)
    pos = x.copy()
    for _ in range(MAX_EXIT_ROUNDS):
        if todo.size == 0:
            return out
        dist = np.linalg.norm(pos[todo] - c[todo], axis=1)
        s = dist / r[todo]
        far = s > REJECTION_LIMIT
        done = np.zeros(todo.size, dtype=bool)

        idx = np.nonzero(far)[0]
        if idx.size:
            ii = todo[idx]
            step = pos[ii] + centered_exit(rng, model, r[ii] - dist[idx], idx.size)
            gap = r[ii] - np.linalg.norm(step - c[ii], axis=1)
            if model.kind == BROWNIAN:
                hit = gap < eps_shell * r[ii]
                rad = step[hit] - c[ii][hit]
                step[hit] = c[ii][hit] + rad * (r[ii][hit] / np.linalg.norm(rad, axis=1))[:, None]
            else:
                hit = gap <= 0
            out[ii[hit]] = step[hit]
            pos[ii[~hit]] = step[~hit]
            done[idx[hit]] = True

        idx = np.nonzero(~far)[0]
        if idx.size:
            ii = todo[idx]
            z = c[ii] + centered_exit(rng, model, r[ii], idx.size)
            zc = np.linalg.norm(z - c[ii], axis=1)
            zx = np.linalg.norm(z - pos[ii], axis=1)
            acc = rng.random(idx.size) < ((1 - s[idx]) * zc / zx) ** d
            out[ii[acc]] = z[acc]
            done[idx[acc]] = True
        todo = todo[~done]
    raise NumericalError(f"exit sampler did not finish {todo.size} points in {MAX_EXIT_ROUNDS} rounds")


def sample_exit(model: ProcessModel, ball: Ball, x, seed: int, n: int | None = None, *,
                threads: int = 1) -> np.ndarray:
    """Exit position(s) from ``ball`` started at ``x``; shape (d,) or (n, d)."""
    x = as_points(x, model.d).reshape(model.d)
    if ball.dist(x) >= ball.radius:
        raise DomainError("x must lie strictly inside the ball")
    m = 1 if n is None else n

    def block(rng, k):
        return exit_points(rng, model, ball.c, ball.radius, np.tile(x, (k, 1)))

    z = np.concatenate(run_blocks(block, m, seed, threads=threads))
    return z[0] if n is None else z


# ------------------------------------------------------------ walk-on-spheres

def _as_targets(target) -> list[Ball]:
    return [target] if isinstance(target, Ball) else list(target)


def _target_gap(targets: list[Ball], pos: np.ndarray) -> np.ndarray:
    """Signed distance to the union of target balls (negative inside)."""
    return np.min([t.dist(pos) - t.radius for t in targets], axis=0)


@dataclass(frozen=True)
class WalkOutcome:
    hit: np.ndarray
    censored: np.ndarray
    steps: np.ndarray


def _norm(v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", v, v))


def walk_on_spheres(rng: np.random.Generator, model: ProcessModel, target, domain: Ball,
                    x0, m: int, config: WosConfig) -> WalkOutcome:
    """Run ``m`` walks from x0 until they enter the target or leave the domain.

    Only live walkers are kept in the working arrays, which are compacted
    whenever a walk ends.
    """
    targets = _as_targets(target)
    d = model.d
    tc = [t.c for t in targets]
    tr = [t.radius for t in targets]
    dc, dr = domain.c, domain.radius
    brownian = model.kind == BROWNIAN
    eps = config.eps_shell * dr if brownian else 0.0
    shrink = config.boundary_shrink
    pos = np.tile(as_points(x0, d).reshape(d), (m, 1))
    ids = np.arange(m)
    hit = np.zeros(m, dtype=bool)
    censored = np.zeros(m, dtype=bool)
    steps = np.zeros(m, dtype=np.int64)
    for step in range(config.max_steps + 1):
        tg = _norm(pos - tc[0]) - tr[0]
        for c, r in zip(tc[1:], tr[1:]):
            np.minimum(tg, _norm(pos - c) - r, out=tg)
        dg = dr - _norm(pos - dc)
        in_target = tg <= eps
        ended = in_target | (dg <= eps)
        if ended.any():
            hit[ids[ended & in_target]] = True
            live = ~ended
            pos, ids, tg, dg = pos[live], ids[live], tg[live], dg[live]
        if ids.size == 0:
            break
        if step == config.max_steps:
            censored[ids] = True
            break
        rho = shrink * np.minimum(tg, dg)
        pos += centered_exit(rng, model, rho, ids.size)
        steps[ids] += 1
    return WalkOutcome(hit=hit, censored=censored, steps=steps)


def hitting_probability(model: ProcessModel, target, domain: Ball, x, config: WosConfig,
                        n: int) -> EstimateWithError:
    """Estimate P^x[T_target < tau_domain]; censored walks count as failures."""
    targets = _as_targets(target)
    x = as_points(x, model.d).reshape(model.d)
    if domain.dist(x) >= domain.radius:
        raise DomainError("x must lie inside the domain")
    for t in targets:
        if t.dist(domain.center) + t.radius > domain.radius:
            raise DomainError("target balls must lie inside the domain")

    def block(rng, m):
        w = walk_on_spheres(rng, model, targets, domain, x, m, config)
        return w.hit.astype(float), int(w.censored.sum())

    parts = run_blocks(block, n, config.seed, threads=config.threads, block_size=config.block_size)
    values = np.concatenate([p[0] for p in parts])
    return EstimateWithError.from_samples(values, config.seed, sum(p[1] for p in parts))


def shell_hitting_probability(d: int, a: float, b: float, s: float) -> float:
    """Brownian P[hit B(0,a) before leaving B(0,b)] from |x| = s, d >= 3."""
    p = 2 - d
    return (s ** p - b ** p) / (a ** p - b ** p)


# --------------------------------------------------------- iterated balayage

def radial_edges() -> np.ndarray:
    """Radial cell edges, in units of the outer radius, for exit histograms."""
    return np.array([1.0, 1.01, 1.05, 1.1, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0, np.inf])


def _cells(z: np.ndarray, center: np.ndarray, radius: float, edges: np.ndarray) -> np.ndarray:
    """Cell index: radial bin times two half-spaces split by the first coordinate."""
    rel = z - center
    rho = np.linalg.norm(rel, axis=1) / radius
    rbin = np.clip(np.searchsorted(edges, rho, side="right") - 1, 0, len(edges) - 2)
    return 2 * rbin + (rel[:, 0] >= 0)


@dataclass(frozen=True)
class TwoSampleReport:
    statistic: float
    critical: float
    dof: int
    cell_max_z: float
    counts_direct: np.ndarray = field(repr=False)
    counts_composite: np.ndarray = field(repr=False)
    passed: bool

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "critical": self.critical, "dof": self.dof,
                "cell_max_z": self.cell_max_z, "pass": self.passed}


def two_sample_chi2(a: np.ndarray, b: np.ndarray, *, level: float = 0.99,
                    min_expected: float = 100.0) -> TwoSampleReport:
    """Two-sample chi-square on equal-size histograms plus a per-cell 4 sigma check."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    used = (a + b) > 0
    stat = float(np.sum((a[used] - b[used]) ** 2 / (a[used] + b[used])))
    dof = int(used.sum()) - 1
    crit = float(stats.chi2.ppf(level, dof)) if dof > 0 else math.inf
    big = (a + b) / 2 >= min_expected
    z = np.abs(a[big] - b[big]) / np.sqrt(a[big] + b[big]) if big.any() else np.zeros(0)
    zmax = float(z.max()) if z.size else 0.0
    return TwoSampleReport(statistic=stat, critical=crit, dof=dof, cell_max_z=zmax,
                           counts_direct=a, counts_composite=b,
                           passed=bool(stat < crit and zmax <= 4.0))


def iterated_balayage_check(model: ProcessModel, x, r_small: float, r_large: float, n: int,
                            seed: int, *, threads: int = 1) -> TwoSampleReport:
    """Direct exit from B(x, r_large) against exit via B(x, r_small) first."""
    if not 0 < r_small <= r_large:
        raise DomainError("need 0 < r_small <= r_large")
    x = as_points(x, model.d).reshape(model.d)
    edges = radial_edges()
    K = 2 * (len(edges) - 1)

    def block(rng, m):
        start = np.tile(x, (m, 1))
        direct = exit_points(rng, model, x, r_large, start)
        first = exit_points(rng, model, x, r_small, start)
        inside = np.linalg.norm(first - x, axis=1) < r_large
        second = first.copy()
        if inside.any():
            second[inside] = exit_points(rng, model, x, r_large, first[inside])
        return (np.bincount(_cells(direct, x, r_large, edges), minlength=K),
                np.bincount(_cells(second, x, r_large, edges), minlength=K))

    parts = run_blocks(block, n, seed, threads=threads)
    a = np.sum([p[0] for p in parts], axis=0)
    b = np.sum([p[1] for p in parts], axis=0)
    return two_sample_chi2(a, b)


# --------------------------------------------------------- jump comparison

@dataclass(frozen=True)
class JumpComparison:
    cJ: float
    raw_sup: float
    y: np.ndarray | None
    z: np.ndarray | None
    limit_at_infinity: float
    refine_warning: bool
    diffusion: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return {"cJ": self.cJ, "raw_sup": self.raw_sup, "limit_at_infinity": self.limit_at_infinity,
                "y": None if self.y is None else self.y.tolist(),
                "z": None if self.z is None else self.z.tolist(),
                "refine_warning": self.refine_warning, "diffusion": self.diffusion,
                "note": self.note}


def _jump_ratio(model: ProcessModel, q: float, r: float, t, u, theta):
    """Density ratio at y = t q r e1 and z = (r / sqrt(u)) (cos theta, sin theta, 0...)."""
    d = model.d
    t, u, theta = np.broadcast_arrays(np.asarray(t, float), np.asarray(u, float),
                                      np.asarray(theta, float))
    y = np.zeros(t.shape + (d,))
    z = np.zeros(t.shape + (d,))
    y[..., 0] = t * q * r
    rho = r / np.sqrt(u)
    z[..., 0] = rho * np.cos(theta)
    if d > 1:
        z[..., 1] = rho * np.sin(theta)
    origin = np.zeros(d)
    num = poisson_kernel(model, Ball(origin, q * r), origin, z)
    den = poisson_kernel(model, Ball(origin, r), y, z)
    return num / den, y, z


def jump_comparison_constant(model: ProcessModel, alpha_ratio: float, n_y: int = 64,
                             n_z: int = 256, *, r: float = 1.0) -> JumpComparison:
    """sup over y in B(x, q r), z outside B(x, r) of the two exit densities' ratio.

    The supremum of eps_x^{B(x,qr)^c} / eps_y^{B(x,r)^c} on B(x,r)^c is
    maximized on a (t = |y|/(qr), u = r^2/|z|^2, angle) grid, then refined
    locally.  The returned ``cJ`` is max(1, raw_sup), the value passed on to
    the constant pipeline; ``raw_sup`` is the measured supremum.
    """
    if not 0 < alpha_ratio < 1:
        raise DomainError("alpha_ratio must lie in (0,1)")
    if model.kind == BROWNIAN:
        return JumpComparison(cJ=1.0, raw_sup=0.0, y=None, z=None, limit_at_infinity=0.0,
                              refine_warning=False, diffusion=True,
                              note="diffusion: holds trivially (the inner exit law charges only "
                                   "its own sphere, inside the outer ball)")
    model._require_stable("jump comparison")
    q, a = alpha_ratio, model.alpha
    t = np.linspace(0.0, 1.0, n_y)
    u = np.concatenate([np.geomspace(1e-12, 1e-2, n_z // 4, endpoint=False),
                        np.linspace(1e-2, 1.0, n_z - n_z // 4 + 1)[:-1]])
    theta = np.array([0.0, math.pi]) if model.d == 1 else np.linspace(0.0, math.pi, max(8, n_y // 2))
    T, U, TH = np.meshgrid(t, u, theta, indexing="ij")
    vals, _, _ = _jump_ratio(model, q, r, T, U, TH)
    k = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best = float(vals[k])
    start = np.array([T[k], U[k], TH[k]])
    refine_warning = bool(k[1] == 0 and u[0] > 0 and vals[k] < _limit(q, a, T[k]) * (1 - 1e-6))

    lo = np.array([0.0, 1e-15, 0.0])
    hi = np.array([1.0, 1.0 - 1e-12, math.pi])
    free = slice(0, 3) if model.d > 1 else slice(0, 2)

    def neg(v):
        full = start.copy()
        full[free] = v
        return -float(_jump_ratio(model, q, r, *full)[0])

    res = optimize.minimize(neg, start[free], method="L-BFGS-B",
                            bounds=list(zip(lo[free], hi[free])))
    if -res.fun > best:
        start[free] = res.x
        best = -res.fun
    val, y, z = _jump_ratio(model, q, r, *start)
    return JumpComparison(cJ=max(1.0, best), raw_sup=best, y=y, z=z,
                          limit_at_infinity=_limit(q, a, 1.0), refine_warning=refine_warning)


def _limit(q: float, a: float, t: float) -> float:
    """Ratio as |z| -> inf with |y| = t q r: (q^2 / (1 - t^2 q^2))^(a/2)."""
    return (q * q / (1 - t * t * q * q)) ** (a / 2)


@dataclass(frozen=True)
class JumpCellCheck:
    max_z: float
    ratio_ok: bool
    passed: bool
    cells: list = field(repr=False)

    def to_dict(self) -> dict:
        return {"max_z": self.max_z, "ratio_ok": self.ratio_ok, "pass": self.passed,
                "cells": self.cells}


def jump_mc_crosscheck(model: ProcessModel, alpha_ratio: float, result: JumpComparison, n: int,
                       seed: int, *, r: float = 1.0, threads: int = 1) -> JumpCellCheck:
    """Cell masses of both exit laws by sampling against the quadrature oracle.

    Cells are radial shells of B(x, r)^c.  Each empirical mass must lie
    within 4 stderr of the exact mass, and the exact cell ratios must not
    exceed the measured supremum.
    """
    q = alpha_ratio
    d = model.d
    y = np.asarray(result.y, dtype=float)
    s = float(np.linalg.norm(y)) / r
    edges = radial_edges()
    origin = np.zeros(d)

    def block(rng, m):
        zx = exit_points(rng, model, origin, q * r, np.zeros((m, d)))
        zy = exit_points(rng, model, origin, r, np.tile(y, (m, 1)))
        bx = np.searchsorted(edges, np.linalg.norm(zx, axis=1) / r, side="right") - 1
        by = np.searchsorted(edges, np.linalg.norm(zy, axis=1) / r, side="right") - 1
        # bin -1 collects the annulus q r < |z| < r, outside the comparison set
        return (np.bincount(bx + 1, minlength=len(edges)),
                np.bincount(by + 1, minlength=len(edges)))

    parts = run_blocks(block, n, seed, threads=threads)
    cx = np.sum([p[0] for p in parts], axis=0)[1:]
    cy = np.sum([p[1] for p in parts], axis=0)[1:]
    cells = []
    zmax = 0.0
    ratio_ok = True
    for i in range(len(edges) - 1):
        lo, hi = edges[i], edges[i + 1]
        px = exit_radial_mass(model, 0.0, lo / q, hi / q)
        py = exit_radial_mass(model, s, lo, hi)
        zs = []
        for p, cnt in ((px, cx[i]), (py, cy[i])):
            se = math.sqrt(max(p * (1 - p), 1e-300) / n)
            zs.append(abs(cnt / n - p) / se)
        zmax = max(zmax, *zs)
        ratio = px / py if py > 0 else math.inf
        ratio_ok &= ratio <= result.raw_sup * (1 + 1e-9)
        cells.append({"lo": lo, "hi": hi, "exact_x": px, "exact_y": py,
                      "mc_x": cx[i] / n, "mc_y": cy[i] / n, "z_x": zs[0], "z_y": zs[1],
                      "exact_ratio": ratio})
    return JumpCellCheck(max_z=zmax, ratio_ok=bool(ratio_ok),
                         passed=bool(zmax <= 4.0 and ratio_ok), cells=cells)


# ----------------------------------------------------------- Levy conditions

@dataclass(frozen=True)
class LevyReport:
    C: float
    a: float
    max_ratio: float
    violations: int
    n_checked: int
    C0: float
    doubling: float
    half_distance_ratio: float
    passed: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__} | {"pass": self.passed}


def check_levy_conditions(model: ProcessModel, C: float = 1.0, a: float = 3.0,
                          grid: int = 24, seed: int = 0) -> LevyReport:
    """n(x, z) <= C n(y, z) for y in B(x, r), z outside B(x, a r) with |x-z| >= |y-z|."""
    model._require_stable("the Levy density conditions")
    if a < 3:
        raise DomainError("a must be >= 3")
    d = model.d
    rng = np.random.default_rng(seed)
    x = np.zeros(d)
    r = 1.0
    ys = np.concatenate([np.zeros((1, d)),
                         _directions(rng, grid, d) * (rng.random(grid) ** (1 / d))[:, None] * r])
    radii = a * r * np.geomspace(1.0, 1e3, grid)
    zs = (_directions(rng, grid, d)[:, None, :] * radii[None, :, None]).reshape(-1, d)
    Y = np.repeat(ys, zs.shape[0], axis=0)
    Z = np.tile(zs, (ys.shape[0], 1))
    keep = np.linalg.norm(Z - x, axis=1) >= np.linalg.norm(Z - Y, axis=1)
    ratio = levy_density(model, x, Z[keep]) / levy_density(model, Y[keep], Z[keep])
    wd = weak_decreasing_constant(model)
    z1 = np.zeros(d)
    z1[0] = 4 * a * r
    half = levy_density(model, x, z1) / levy_density(model, z1 / 2, z1)
    viol = int(np.sum(ratio > C * (1 + 1e-12)))
    return LevyReport(C=C, a=a, max_ratio=float(ratio.max()), violations=viol,
                      n_checked=int(keep.sum()), C0=wd.C0, doubling=wd.doubling,
                      half_distance_ratio=float(half), passed=viol == 0 and half <= 1)


# -------------------------------------------------------- hitting estimates

def prop_alpha(model: ProcessModel, eta: float | None = None) -> float:
    """Largest alpha0^m < 1/2 with g((1 - 2 alpha) r) <= c eta g(alpha r) on the grid."""
    g = model.scale
    eta = 1 / (2 * g.c ** 3 * g.cD ** 2) if eta is None else eta
    alpha, _ = largest_admissible_alpha(
        g, lambda al, r: g((1 - 2 * al) * r) <= g.c * eta * g(al * r) * (1 + 1e-12), upper=0.5)
    return alpha


def lemma_alpha(model: ProcessModel) -> float:
    """Largest alpha0^m < 1/4 with g(r) <= (2 c^2 cD)^-1 g(alpha r) on the grid."""
    g = model.scale
    alpha, _ = largest_admissible_alpha(
        g, lambda al, r: g(r) <= g(al * r) / (2 * g.c ** 2 * g.cD) * (1 + 1e-12), upper=0.25)
    return alpha


@dataclass(frozen=True)
class HittingCell:
    target_radius: float
    start: float
    estimate: EstimateWithError
    bound: float
    passed: bool

    def to_dict(self) -> dict:
        return {"target_radius": self.target_radius, "start": self.start,
                "estimate": self.estimate.to_dict(), "bound": self.bound, "pass": self.passed}


def prop_hitting_sweep(model: ProcessModel, n: int, seed: int, *,
                       target_fractions=(0.2, 0.4, 0.6), start_fractions=(0.2, 0.5, 0.8),
                       r: float = 1.0, n_points: int = 4096, config: WosConfig | None = None,
                       ) -> list[HittingCell]:
    """Hitting lower bound eta g(alpha r) cap(A) for A = B(x0, rho) in B(x0, 2 alpha r).

    Target radii are fractions of 2 alpha r; the start |x| sits at the given
    fraction of the gap between the target sphere and the sphere of radius
    2 alpha r.  The walk is killed on leaving B(x0, r).
    """
    g = model.scale
    eta = 1 / (2 * g.c ** 3 * g.cD ** 2)
    alpha = prop_alpha(model, eta)
    d = model.d
    x0 = np.zeros(d)
    domain = Ball(x0, r)
    cfg = config or WosConfig(seed=seed)
    out = []
    for i, tf in enumerate(target_fractions):
        rho = tf * 2 * alpha * r
        cap = ball_capacity(model, Ball(x0, rho), n_points, slack=False).capacity
        bound = eta * float(g(alpha * r)) * cap
        for j, sf in enumerate(start_fractions):
            x = x0.copy()
            x[0] = rho + sf * (2 * alpha * r - rho)
            cell_cfg = WosConfig(max_steps=cfg.max_steps, boundary_shrink=cfg.boundary_shrink,
                                 seed=seed + 1000 * i + j, eps_shell=cfg.eps_shell,
                                 threads=cfg.threads)
            est = hitting_probability(model, Ball(x0, rho), domain, x, cell_cfg, n)
            out.append(HittingCell(rho, float(x[0]), est, bound,
                                   est.mean >= bound - 3 * est.stderr))
    return out


@dataclass(frozen=True)
class LemmaCell:
    start: float
    estimate: EstimateWithError
    potential: float
    gamma_bound: float
    passed: bool


def lemma_hitting_check(model: ProcessModel, a: float, b: float, starts, n: int, seed: int,
                        *, n_points: int = 4096, n_probe: int = 512) -> list[LemmaCell]:
    """P^x[T_A < tau_U] >= R_1^A(x) - gamma with A = B(0,a), U = B(0,b).

    R_1^A is the equilibrium potential of the discretized ball and gamma is
    its maximum over probe points on and outside the sphere of radius b.
    """
    d = model.d
    x0 = np.zeros(d)
    cap = ball_capacity(model, Ball(x0, a), n_points, slack=False)
    rng = np.random.default_rng(seed)
    probe = _directions(rng, n_probe, d) * (b * np.geomspace(1, 10, n_probe))[:, None]
    gamma = float(np.max(equilibrium_potential(model, cap, probe)))
    out = []
    for k, s in enumerate(starts):
        x = x0.copy()
        x[0] = s
        est = hitting_probability(model, Ball(x0, a), Ball(x0, b), x, WosConfig(seed=seed + k), n)
        pot = float(equilibrium_potential(model, cap, x))
        out.append(LemmaCell(float(s), est, pot, gamma, est.mean >= pot - gamma - 3 * est.stderr))
    return out
