"""Concrete isotropic process models on R^d.

Supported kinds are Brownian motion (d >= 3), the rotationally symmetric
alpha-stable process and a tabulated Green scale.  For the first two the
Green function, the ball exit law, the ball Green function and the Levy
density are available in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, special

from . import kernels
from .errors import ConfigurationError, DomainError, NumericalError
from .scale import GreenScale

BROWNIAN = "brownian"
STABLE = "stable"
TABULATED = "tabulated"
KINDS = (BROWNIAN, STABLE, TABULATED)

BALL_GREEN_RTOL = 1e-8


def riesz_constant(d: int, alpha: float) -> float:
    """A(d, alpha) with G(x, y) = A |x-y|^(alpha-d) for d > alpha."""
    return math.gamma((d - alpha) / 2) / (
        2.0 ** alpha * math.pi ** (d / 2) * math.gamma(alpha / 2))


def newton_constant(d: int) -> float:
    return math.gamma(d / 2 - 1) / (4 * math.pi ** (d / 2))


def exit_constant(d: int, alpha: float) -> float:
    """C(d, alpha) in the closed-form stable ball exit density."""
    return math.gamma(d / 2) * math.pi ** (-d / 2 - 1) * math.sin(math.pi * alpha / 2)


def levy_constant(d: int, alpha: float) -> float:
    """A_nu with Levy density A_nu |x-z|^(-d-alpha) for the fractional Laplacian."""
    return (alpha * 2.0 ** (alpha - 1) * math.gamma((d + alpha) / 2)
            / (math.pi ** (d / 2) * math.gamma(1 - alpha / 2)))


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^(d-1)."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


def ball_volume(d: int, r: float = 1.0) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * r ** d


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(np.asarray(self.center, dtype=float)))
        object.__setattr__(self, "center", c)
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise DomainError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def c(self) -> np.ndarray:
        return np.array(self.center)

    def dist(self, x) -> np.ndarray:
        """Distance of each row of x to the center."""
        x = as_points(x, self.d)
        return np.linalg.norm(x - self.c, axis=-1)

    def contains(self, x) -> np.ndarray:
        return self.dist(x) < self.radius


def as_points(x, d: int) -> np.ndarray:
    """Coerce a point or stack of points to shape (..., d)."""
    a = np.asarray(x, dtype=float)
    if d == 1 and (a.ndim == 0 or a.shape[-1] != 1):
        a = a[..., None]
    if a.shape[-1] != d:
        raise DomainError(f"expected points of dimension {d}, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class ProcessModel:
    kind: str
    d: int
    alpha: float = 2.0
    table: GreenScale | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if int(self.d) != self.d or self.d < 1:
            raise ConfigurationError(f"dimension must be a positive integer, got {self.d}")
        object.__setattr__(self, "d", int(self.d))
        if self.kind == BROWNIAN:
            if self.d < 3:
                raise ConfigurationError("Brownian model requires d >= 3 (transience)")
            object.__setattr__(self, "alpha", 2.0)
        elif self.kind == STABLE:
            if not 0 < self.alpha < 2:
                raise ConfigurationError(f"stability index must lie in (0,2), got {self.alpha}")
            object.__setattr__(self, "alpha", float(self.alpha))

    @classmethod
    def stable(cls, d: int, alpha: float) -> "ProcessModel":
        return cls(STABLE, d, alpha)

    @classmethod
    def brownian(cls, d: int = 3) -> "ProcessModel":
        return cls(BROWNIAN, d)

    @classmethod
    def tabulated(cls, scale: GreenScale, d: int) -> "ProcessModel":
        return cls(TABULATED, d, table=scale)

    @property
    def label(self) -> str:
        if self.kind == STABLE:
            return f"stable(d={self.d}, alpha={self.alpha:g})"
        if self.kind == BROWNIAN:
            return f"brownian(d={self.d})"
        return f"tabulated(d={self.d}, {self.table.name if self.table else 'unloaded'})"

    @property
    def transient(self) -> bool:
        return self.kind != STABLE or self.d > self.alpha

    @property
    def has_jumps(self) -> bool:
        return self.kind == STABLE

    @property
    def green_exponent(self) -> float:
        """p with G(x, y) = A |x-y|^(-p)."""
        self._require_closed_form()
        return self.d - self.alpha

    @cached_property
    def green_amplitude(self) -> float:
        self._require_transient()
        if self.kind == BROWNIAN:
            return newton_constant(self.d)
        return riesz_constant(self.d, self.alpha)

    @cached_property
    def scale(self) -> GreenScale:
        """The Green scale g with G = c g(|x-y|)."""
        if self.kind == TABULATED:
            if self.table is None:
                raise ConfigurationError("tabulated model has no scale data loaded")
            return self.table
        self._require_transient()
        return GreenScale.power_law(self.green_exponent, self.green_amplitude,
                                    name=self.label)

    def _require_closed_form(self):
        if self.kind == TABULATED:
            raise ConfigurationError(f"{self.label} has no closed-form kernels")

    def _require_transient(self):
        if not self.transient:
            raise ConfigurationError(
                f"{self.label} is recurrent (d <= alpha) and has no Green function")

    def _require_stable(self, what: str):
        if self.kind != STABLE:
            raise ConfigurationError(f"{what} is only available for stable models, not {self.label}")


def green(model: ProcessModel, x, y):
    """G(x, y); infinite on the diagonal.  Broadcasts over leading axes."""
    x = as_points(x, model.d)
    y = as_points(y, model.d)
    r = np.linalg.norm(x - y, axis=-1)
    if model.kind == TABULATED:
        g = model.scale
        with np.errstate(divide="ignore"):
            out = np.where(r > 0, g(np.where(r > 0, r, 1.0)), np.inf)
    else:
        a, p = model.green_amplitude, model.green_exponent
        with np.errstate(divide="ignore"):
            out = a * np.power(r, -p)
    return out if np.ndim(out) else float(out)


def green_matrix(model: ProcessModel, x, y, diag=np.inf) -> np.ndarray:
    """Dense matrix G(x_i, y_j) through the compiled kernel backend."""
    x = as_points(x, model.d).reshape(-1, model.d)
    y = as_points(y, model.d).reshape(-1, model.d)
    if model.kind == TABULATED:
        r = np.linalg.norm(x[:, None, :] - y[None, :, :], axis=-1)
        with np.errstate(divide="ignore"):
            return np.where(r > 0, model.scale(np.where(r > 0, r, 1.0)), diag)
    a = model.green_amplitude
    scaled_diag = diag / a if np.isfinite(diag) else diag
    return a * kernels.pairwise_power(x, y, -model.green_exponent, scaled_diag)


def poisson_kernel(model: ProcessModel, ball: Ball, x, z):
    """Density of the exit position from ``ball`` started at ``x``, evaluated at z.

    Stable models use the closed-form density on the ball complement.  For
    Brownian models the exit law lives on the sphere; see
    :func:`sphere_poisson_kernel`.
    """
    model._require_stable("the ball exit density")
    x = as_points(x, model.d)
    z = as_points(z, model.d)
    c, r = ball.c, ball.radius
    dx2 = np.sum((x - c) ** 2, axis=-1)
    dz2 = np.sum((z - c) ** 2, axis=-1)
    if np.any(dx2 >= r * r):
        raise DomainError("x must lie strictly inside the ball")
    if np.any(dz2 <= r * r):
        raise DomainError("z must lie strictly outside the ball")
    a = model.alpha
    dist = np.linalg.norm(x - z, axis=-1)
    out = (exit_constant(model.d, a) * ((r * r - dx2) / (dz2 - r * r)) ** (a / 2)
           * dist ** (-model.d))
    return out if np.ndim(out) else float(out)


def sphere_poisson_kernel(ball: Ball, x, z):
    """Classical harmonic measure density on the sphere (surface measure)."""
    d = ball.d
    x = as_points(x, d)
    z = as_points(z, d)
    r = ball.radius
    dx2 = np.sum((x - ball.c) ** 2, axis=-1)
    if np.any(dx2 >= r * r):
        raise DomainError("x must lie strictly inside the ball")
    out = (r * r - dx2) / (sphere_area(d) * r * np.linalg.norm(x - z, axis=-1) ** d)
    return out if np.ndim(out) else float(out)


def _lower_incomplete_integral(w: float, a: float, b: float) -> float:
    """int_0^w s^(a-1) (1+s)^(-b) ds for b > a > 0 by quadrature.

    With s = t^(1/a) the integrand becomes (1/a)(1 + t^(1/a))^(-b) on
    [0, w^a].  Beyond t = 1 the reciprocal u = 1/t leaves an algebraic
    endpoint weight u^(b/a - 2) at 0, which QUADPACK integrates exactly.
    """
    T = w ** a
    f = lambda t: (1 + t ** (1 / a)) ** (-b) / a  # noqa: E731
    lo, err_lo = integrate.quad(f, 0.0, min(T, 1.0), epsabs=0.0, epsrel=1e-12, limit=200)
    if T <= 1.0:
        return lo
    h = lambda u: (u ** (1 / a) + 1) ** (-b) / a  # noqa: E731
    wexp = b / a - 2
    full, e1 = integrate.quad(h, 0.0, 1.0, weight="alg", wvar=(wexp, 0.0),
                              epsabs=0.0, epsrel=1e-12, limit=200)
    head, e2 = integrate.quad(h, 0.0, 1.0 / T, weight="alg", wvar=(wexp, 0.0),
                              epsabs=0.0, epsrel=1e-12, limit=200)
    total = lo + full - head
    err = err_lo + e1 + e2
    if not err <= BALL_GREEN_RTOL * abs(total):
        raise NumericalError(
            f"ball Green quadrature did not converge: w={w:.6g}, a={a}, b={b}, "
            f"estimate={total:.6g}, error={err:.3g}")
    return total


def ball_green(model: ProcessModel, ball: Ball, x, y) -> float:
    """Green function of ``ball`` for the stable model; zero off the ball."""
    model._require_stable("the ball Green function")
    model._require_transient()
    x = as_points(x, model.d).reshape(model.d)
    y = as_points(y, model.d).reshape(model.d)
    r2 = ball.radius ** 2
    px = r2 - float(np.sum((x - ball.c) ** 2))
    py = r2 - float(np.sum((y - ball.c) ** 2))
    if px <= 0 or py <= 0:
        return 0.0
    dxy2 = float(np.sum((x - y) ** 2))
    if dxy2 == 0:
        return math.inf
    d, a = model.d, model.alpha
    w = px * py / (r2 * dxy2)
    kappa = math.gamma(d / 2) / (2.0 ** a * math.pi ** (d / 2) * math.gamma(a / 2) ** 2)
    return kappa * dxy2 ** ((a - d) / 2) * _lower_incomplete_integral(w, a / 2, d / 2)


def levy_density(model: ProcessModel, x, z):
    """Jump density n(x, z) = A_nu |x-z|^(-d-alpha)."""
    model._require_stable("the Levy density")
    x = as_points(x, model.d)
    z = as_points(z, model.d)
    r = np.linalg.norm(x - z, axis=-1)
    if np.any(r == 0):
        raise DomainError("levy density is undefined at x = z")
    out = levy_constant(model.d, model.alpha) * r ** (-model.d - model.alpha)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class WeakDecreasing:
    C0: float
    doubling: float
    amplitude: float


def weak_decreasing_constant(model: ProcessModel, grid=None) -> WeakDecreasing:
    """Grid estimates of sup n0(s)/n0(r) and sup n0(r)/n0(s) over r < s < 2r.

    The first is the weak-decreasing constant C0 (clipped below at 1, which
    is its value for any decreasing density); the second is the doubling
    ratio of the density, equal to 2^(d+alpha) for the power law.
    """
    model._require_stable("the Levy density")
    r = np.geomspace(1e-3, 1e3, 61) if grid is None else np.asarray(grid, dtype=float)
    frac = np.linspace(0.0, 1.0, 65)[1:-1]
    s = r[:, None] * (1 + frac[None, :])
    n0 = lambda t: levy_constant(model.d, model.alpha) * t ** (-model.d - model.alpha)  # noqa: E731
    up = n0(s) / n0(r)[:, None]
    # the open interval's endpoint s -> 2r is the supremum of the reverse ratio
    down = n0(r) / n0(2 * r)
    return WeakDecreasing(C0=max(1.0, float(up.max())), doubling=float(down.max()),
                          amplitude=levy_constant(model.d, model.alpha))


def triangle_constant(model: ProcessModel, n_triples: int, region: Ball, seed) -> float:
    """Largest sampled min(G(x,z), G(y,z)) / G(x,y) over triples in ``region``."""
    if n_triples < 1:
        raise DomainError("n_triples must be >= 1")
    rng = np.random.default_rng(seed)
    pts = uniform_in_ball(rng, region, 3 * n_triples).reshape(3, n_triples, model.d)
    x, y, z = pts
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.minimum(green(model, x, z), green(model, y, z)) / green(model, x, y)
    return float(np.max(np.atleast_1d(ratio)))


def uniform_in_ball(rng: np.random.Generator, ball: Ball, n: int) -> np.ndarray:
    d = ball.d
    v = rng.standard_normal((n, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    rad = ball.radius * rng.random(n) ** (1 / d)
    return ball.c + v * rad[:, None]


def exit_radial_mass(model: ProcessModel, s: float = 0.0, lo: float = 1.0,
                     hi: float = math.inf) -> float:
    """Mass the stable exit law from B(0,1), started at |x| = s, puts on lo <= |z| < hi.

    Radial-angular quadrature: for x on the first axis the angular integral
    over S^(d-1) reduces to one variable with the Jacobian of the sphere.
    The (rho - 1)^(-a/2) singularity at the sphere is handled by an
    algebraic QUADPACK weight.  Serves as the quadrature oracle for
    :func:`poisson_kernel` and for cell probabilities of exit samples.
    """
    model._require_stable("the ball exit density")
    if not (0 <= s < 1 and 1 <= lo <= hi):
        raise DomainError(f"need 0 <= s < 1 <= lo <= hi, got s={s}, lo={lo}, hi={hi}")
    d, a = model.d, model.alpha
    C = exit_constant(d, a)

    if d == 1:
        def angular(rho):
            return abs(rho - s) ** -1 + abs(rho + s) ** -1
    else:
        wd = sphere_area(d - 1)

        def angular(rho):
            f = lambda t: np.sin(t) ** (d - 2) * (rho * rho - 2 * rho * s * np.cos(t) + s * s) ** (-d / 2)  # noqa: E731
            val, _ = integrate.quad(f, 0, math.pi, epsabs=0, epsrel=1e-12, limit=200)
            return wd * val

    def smooth(rho):
        # exit density with the (rho - 1)^(-a/2) factor removed
        return C * ((1 - s * s) / (rho + 1)) ** (a / 2) * rho ** (d - 1) * angular(rho)

    def density(rho):
        return smooth(rho) * (rho - 1) ** (-a / 2)

    total = 0.0
    split = 2.0
    if lo < split:
        top = min(hi, split)
        if lo == 1.0:
            part, _ = integrate.quad(smooth, 1.0, top, weight="alg", wvar=(-a / 2, 0.0),
                                     epsabs=0, epsrel=1e-11, limit=200)
        else:
            part, _ = integrate.quad(density, lo, top, epsabs=0, epsrel=1e-11, limit=200)
        total += part
    if hi > split:
        start = max(lo, split)
        part, _ = integrate.quad(density, start, hi, epsabs=0, epsrel=1e-11, limit=200)
        total += part
    return total


def exit_normalization(model: ProcessModel, s: float = 0.0) -> float:
    """Total mass of the stable exit density from B(0,1) started at |x| = s."""
    return exit_radial_mass(model, s)
