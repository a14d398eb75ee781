"""Radial scaling functions g with doubling and weak upper decay.

A :class:`GreenScale` wraps a decreasing function ``g`` on ``(0, R0)`` with
the constants of the two-sided comparison ``c^-1 g(|x-y|) <= G(x, y) <= c
g(|x-y|)``, the doubling bound ``g(r/2) <= cD g(r)`` and the decay bound
``g(r) <= eta0 g(alpha0 r)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError, NumericalError, OutOfRangeError

# relative slack for float comparisons of exact inequalities
RTOL = 1e-12
INVERT_TOL = 1e-12
INVERT_MAXITER = 200
DEFAULT_GRID_SIZE = 256


@dataclass(frozen=True)
class GreenScale:
    evaluator: Callable[[np.ndarray], np.ndarray]
    cD: float
    alpha0: float
    eta0: float
    c: float = 1.0
    R0: float = math.inf
    name: str = "g"
    continuous: bool = True
    # (exponent, amplitude) when g(r) = amplitude * r**-exponent
    power: tuple[float, float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.cD > 1:
            raise ConfigurationError(f"doubling constant must exceed 1, got {self.cD}")
        if not 0 < self.alpha0 < 1:
            raise ConfigurationError(f"alpha0 must lie in (0,1), got {self.alpha0}")
        if not 0 < self.eta0 < 1:
            raise ConfigurationError(f"eta0 must lie in (0,1), got {self.eta0}")
        if not self.c >= 1:
            raise ConfigurationError(f"comparison constant c must be >= 1, got {self.c}")
        if not self.R0 > 0:
            raise ConfigurationError(f"R0 must be positive, got {self.R0}")

    def __call__(self, r):
        r_arr = np.asarray(r, dtype=float)
        out = np.asarray(self.evaluator(r_arr), dtype=float)
        return out if out.ndim else float(out)

    @classmethod
    def power_law(cls, exponent: float, amplitude: float = 1.0, *, c: float = 1.0,
                  R0: float = math.inf, name: str | None = None) -> "GreenScale":
        """g(r) = amplitude * r**-exponent with its exact constants."""
        if exponent <= 0:
            raise ConfigurationError("power-law exponent must be positive")
        p, a = float(exponent), float(amplitude)
        return cls(
            evaluator=lambda r: a * np.power(r, -p),
            cD=2.0 ** p,
            alpha0=0.5,
            eta0=2.0 ** -p,
            c=c,
            R0=R0,
            name=name or f"{a:g}*r^-{p:g}",
            power=(p, a),
        )

    @classmethod
    def from_table(cls, path, *, c: float = 1.0, alpha0: float = 0.5) -> "GreenScale":
        """Load a two-column (radius, value) table; see :func:`load_table`."""
        radii, values = load_table(path)
        return tabulated(radii, values, c=c, alpha0=alpha0, name=Path(path).name)


def load_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Parse a whitespace separated two-column file.

    Blank lines and ``#`` comments are skipped.  Radii must increase strictly,
    values must be finite, positive and non-increasing.  Errors name the line.
    """
    radii, values = [], []
    prev = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ConfigurationError(f"{path}:{lineno}: expected 2 columns, got {len(parts)}")
            try:
                r, v = float(parts[0]), float(parts[1])
            except ValueError:
                raise ConfigurationError(f"{path}:{lineno}: non-numeric entry {line!r}") from None
            if not (math.isfinite(r) and r > 0):
                raise ConfigurationError(f"{path}:{lineno}: radius must be finite and positive")
            if not (math.isfinite(v) and v > 0):
                raise ConfigurationError(f"{path}:{lineno}: value must be finite and positive")
            if prev is not None:
                if r <= prev[0]:
                    raise ConfigurationError(f"{path}:{lineno}: radii must increase strictly")
                if v > prev[1]:
                    raise ConfigurationError(f"{path}:{lineno}: values must be non-increasing")
            prev = (r, v)
            radii.append(r)
            values.append(v)
    if len(radii) < 2:
        raise ConfigurationError(f"{path}: need at least two data lines")
    return np.array(radii), np.array(values)


def tabulated(radii, values, *, c: float = 1.0, alpha0: float = 0.5,
              name: str = "table") -> GreenScale:
    """Log-log linear interpolation of tabulated values.

    Below the first radius the first segment's slope is continued so that g
    blows up at 0; R0 is the last tabulated radius.  The doubling and decay
    constants are measured on the table.
    """
    lr = np.log(np.asarray(radii, dtype=float))
    lv = np.log(np.asarray(values, dtype=float))
    slope0 = (lv[1] - lv[0]) / (lr[1] - lr[0])
    if slope0 >= 0:
        raise ConfigurationError("tabulated scale must decrease strictly near the smallest radius")

    def g(r):
        x = np.log(r)
        inner = np.interp(x, lr, lv)
        return np.exp(np.where(x < lr[0], lv[0] + slope0 * (x - lr[0]), inner))

    R0 = float(radii[-1])
    probe = np.exp(np.linspace(lr[0] - 10.0, np.log(R0) - 1e-12, 2048))
    cD = float(np.max(g(probe / 2) / g(probe)))
    eta0 = float(np.max(g(probe) / g(alpha0 * probe)))
    if eta0 >= 1:
        raise ConfigurationError("tabulated scale has no weak upper decay (eta0 >= 1)")
    return GreenScale(g, cD=max(cD, 1.0 + 1e-12), alpha0=alpha0, eta0=eta0, c=c,
                      R0=R0, name=name)


def default_grid(scale: GreenScale, n: int = DEFAULT_GRID_SIZE, *, decades: float = 12.0):
    """Log-spaced radii in (0, R0) spanning ``decades`` decades."""
    top = scale.R0 * (1 - 1e-9) if math.isfinite(scale.R0) else 10.0 ** (decades / 2)
    return np.geomspace(top * 10.0 ** -decades, top, n)


@dataclass(frozen=True)
class Violation:
    invariant: str
    radius: float
    detail: str


def verify_scale(scale: GreenScale, grid) -> list[Violation]:
    """Check monotonicity, doubling, decay and blow-up on ``grid``.

    Returns one :class:`Violation` per failing (invariant, radius) pair; an
    empty list means every invariant holds on the grid.
    """
    r = np.sort(np.asarray(grid, dtype=float).ravel())
    if r.size == 0:
        raise DomainError("grid must be nonempty")
    if np.any(r <= 0) or np.any(r >= scale.R0):
        raise DomainError(f"grid radii must lie in (0, R0={scale.R0})")
    gr = np.asarray(scale(r), dtype=float)
    for arr, rr in ((gr, r), (scale(r / 2), r / 2), (scale(scale.alpha0 * r), scale.alpha0 * r)):
        bad = ~np.isfinite(np.asarray(arr))
        if np.any(bad):
            raise DomainError(f"g is not finite at r={rr[np.argmax(bad)]!r}")
    out: list[Violation] = []
    inc = np.nonzero(gr[1:] > gr[:-1] * (1 + RTOL))[0]
    for i in inc:
        out.append(Violation("decreasing", float(r[i + 1]),
                             f"g({r[i + 1]:.6g})={gr[i + 1]:.6g} > g({r[i]:.6g})={gr[i]:.6g}"))
    g_half = np.asarray(scale(r / 2))
    for i in np.nonzero(g_half > scale.cD * gr * (1 + RTOL))[0]:
        out.append(Violation("doubling", float(r[i]),
                             f"g(r/2)/g(r)={g_half[i] / gr[i]:.6g} > cD={scale.cD:.6g}"))
    g_dec = np.asarray(scale(scale.alpha0 * r))
    for i in np.nonzero(gr > scale.eta0 * g_dec * (1 + RTOL))[0]:
        out.append(Violation("decay", float(r[i]),
                             f"g(r)/g(alpha0 r)={gr[i] / g_dec[i]:.6g} > eta0={scale.eta0:.6g}"))
    # unboundedness at 0, realized on the grid: the decay chain from the
    # largest to the smallest radius must multiply g by eta0**-m
    m = math.floor(math.log(r[-1] / r[0]) / math.log(1 / scale.alpha0) + 1e-9)
    if m >= 1 and gr[0] < gr[-1] * scale.eta0 ** -m * (1 - RTOL):
        out.append(Violation("blowup", float(r[0]),
                             f"g(rmin)/g(rmax)={gr[0] / gr[-1]:.6g} < eta0^-{m}={scale.eta0 ** -m:.6g}"))
    return out


def decay_alpha(scale: GreenScale, eta: float) -> float:
    """Return alpha0**m for the smallest m >= 1 with eta0**m <= eta."""
    if not 0 < eta < 1:
        raise DomainError(f"eta must lie in (0,1), got {eta}")
    return float(Fraction(scale.alpha0) ** decay_power(scale, eta))


def decay_power(scale: GreenScale, eta: float) -> int:
    eta0, target = Fraction(scale.eta0), Fraction(eta)
    m = max(1, math.floor(math.log(eta) / math.log(scale.eta0)) - 1)
    while eta0 ** m > target:
        m += 1
    while m > 1 and eta0 ** (m - 1) <= target:
        m -= 1
    return m


def largest_admissible_alpha(scale: GreenScale, condition, *, upper: float,
                             grid=None, max_power: int = 60) -> tuple[float, int]:
    """Largest alpha0**m < ``upper`` with ``condition(alpha, r)`` true on the grid.

    ``condition`` receives the candidate alpha and the radius array and
    returns a boolean array.
    """
    r = default_grid(scale) if grid is None else np.asarray(grid, dtype=float)
    for m in range(1, max_power + 1):
        a = scale.alpha0 ** m
        if a >= upper:
            continue
        if np.all(condition(a, r)):
            return a, m
    raise NumericalError(f"no admissible alpha0**m < {upper} within {max_power} powers")


def regularize(scale: GreenScale) -> GreenScale:
    """Continuous version of g, piecewise linear between dyadic radii.

    For R0 = inf the nodes are 2**n; otherwise R0 * 2**-n with the value at
    R0 replaced by the left limit.  The result agrees with g at the nodes and
    lies within a factor cD of g.
    """
    g = scale.evaluator
    R0 = scale.R0

    if math.isfinite(R0):
        top = g(np.array([np.nextafter(R0, 0.0)]))[0]

        def g_node(s):
            # s = node / R0 is an exact power of two in (0, 1]
            return np.where(s >= 1.0, top, g(np.minimum(s, 0.5) * R0))

        def g_reg(r):
            r = np.asarray(r, dtype=float)
            s = r / R0
            mant, expo = np.frexp(s)
            lo = np.ldexp(0.5, expo)
            hi = np.ldexp(1.0, expo)
            on_node = mant == 0.5
            glo = g_node(lo)
            ghi = g_node(np.minimum(hi, 1.0))
            t = (s - lo) / (hi - lo)
            return np.where(on_node, glo, glo + t * (ghi - glo))
    else:
        def g_reg(r):
            r = np.asarray(r, dtype=float)
            mant, expo = np.frexp(r)
            lo = np.ldexp(0.5, expo)
            hi = np.ldexp(1.0, expo)
            glo = g(lo)
            ghi = g(hi)
            t = (r - lo) / (hi - lo)
            return np.where(mant == 0.5, glo, glo + t * (ghi - glo))

    return replace(scale, evaluator=g_reg, name=f"regularized({scale.name})",
                   continuous=True, power=None)


def _attainable(scale: GreenScale):
    """Radius bracket [r_lo, r_hi] used for inversion and its g-range."""
    r_hi = np.nextafter(scale.R0, 0.0) if math.isfinite(scale.R0) else 1e300
    r_lo = 1e-300
    with np.errstate(over="ignore", divide="ignore"):
        g_lo = float(scale(r_lo))
        g_hi = float(scale(r_hi))
    return r_lo, r_hi, g_hi, g_lo


def invert(scale: GreenScale, v, *, tol: float = INVERT_TOL):
    """Radius r with g(r) = v by monotone bisection in log r.

    ``v`` may be an array.  Raises :class:`OutOfRangeError` when v lies
    outside the attainable interval and :class:`NumericalError` when the
    bracket collapses without meeting ``tol`` (g discontinuous at the root).
    """
    v_arr = np.atleast_1d(np.asarray(v, dtype=float))
    r_lo, r_hi, g_min, g_max = _attainable(scale)
    bad = (v_arr <= 0) | ~np.isfinite(v_arr) | (v_arr > g_max) | (v_arr < g_min)
    if np.any(bad):
        raise OutOfRangeError(
            f"value {v_arr[np.argmax(bad)]!r} outside the attainable interval "
            f"[{g_min:.6g}, {g_max:.6g}] of g on (0, R0)")
    lo = np.full(v_arr.shape, math.log(r_lo))
    hi = np.full(v_arr.shape, math.log(r_hi))
    with np.errstate(over="ignore", divide="ignore"):
        for _ in range(INVERT_MAXITER):
            mid = 0.5 * (lo + hi)
            gm = np.asarray(scale(np.exp(mid)), dtype=float)
            above = gm > v_arr
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            if np.all(hi - lo <= 4 * np.finfo(float).eps * np.maximum(np.abs(lo), 1.0)):
                break
        r_a, r_b = np.exp(lo), np.exp(hi)
        g_a = np.asarray(scale(r_a), dtype=float)
        g_b = np.asarray(scale(r_b), dtype=float)
    r = np.where(np.abs(g_a - v_arr) <= np.abs(g_b - v_arr), r_a, r_b)
    err = np.minimum(np.abs(g_a - v_arr), np.abs(g_b - v_arr)) / v_arr
    if np.any(err > tol):
        i = int(np.argmax(err))
        raise NumericalError(
            f"bisection could not reach tol={tol:g} for v={v_arr[i]!r} "
            f"(relative residual {err[i]:.3g}); regularize the scale first")
    return r if np.ndim(v) else float(r[0])
