"""The Harnack constant pipeline.

All constants are computed in exact rational arithmetic from the (binary
exact) float inputs and converted to float only for output, so rebuilding
from the same inputs is bit-identical.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, NumericalError, OutOfRangeError
from .scale import RTOL, GreenScale, default_grid, invert

MAX_ALPHA_POWER = 60


@dataclass(frozen=True)
class ConstantInputs:
    c: float
    cD: float
    c0: float
    cJ: float
    alpha0: float
    eta0: float
    R0: float
    R1: float


@dataclass(frozen=True)
class HarnackConstants:
    eta: float
    alpha: float
    beta: float
    gamma: float
    kappa: float
    j0: int
    m0: int
    m1: int
    K: float
    alpha_power: int
    inputs: ConstantInputs
    exact: dict = field(compare=False, repr=False)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in
               ("eta", "alpha", "beta", "gamma", "kappa", "j0", "m0", "m1", "K", "alpha_power")}
        out["inputs"] = asdict(self.inputs)
        out["exact"] = {k: str(v) for k, v in sorted(self.exact.items())}
        return out


def smallest_power_exceeding(base: Fraction, bound: Fraction) -> int:
    """Smallest integer j >= 1 with base**j > bound, for base > 1.

    The logarithm only supplies a starting point; the decision is made by
    exact rational comparison, stepping down then up as needed.
    """
    if base <= 1:
        raise DomainError("base must exceed 1")
    if bound < base:
        return 1
    j = max(1, math.ceil(math.log(float(bound)) / math.log(float(base))) - 1)
    while j > 1 and base ** (j - 1) > bound:
        j -= 1
    while not base ** j > bound:
        j += 1
    return j


def choose_alpha(scale: GreenScale, eta: Fraction, grid=None) -> tuple[Fraction, int]:
    """Largest alpha0**m < 1/4 with g(r) <= c cD^-1 eta g(alpha r) on the grid."""
    r = default_grid(scale) if grid is None else np.asarray(grid, dtype=float)
    factor = scale.c / scale.cD * float(eta)
    a0 = Fraction(scale.alpha0)
    gr = np.asarray(scale(r), dtype=float)
    for m in range(1, MAX_ALPHA_POWER + 1):
        a = a0 ** m
        if a >= Fraction(1, 4):
            continue
        ga = np.asarray(scale(float(a) * r), dtype=float)
        if np.all(gr <= factor * ga * (1 + RTOL)):
            return a, m
    raise NumericalError(
        f"no admissible alpha = alpha0^m < 1/4 within {MAX_ALPHA_POWER} powers of "
        f"alpha0={scale.alpha0}; the scale decays too slowly over the grid range")


def build_constants(scale: GreenScale, c0: float, cJ: float, R1: float = math.inf, *,
                    grid=None) -> HarnackConstants:
    """Run the constant pipeline from the scale constants, c0 and cJ."""
    if not c0 >= 1:
        raise DomainError(f"c0 must be >= 1, got {c0}")
    if not cJ > 0:
        raise DomainError(f"cJ must be positive, got {cJ}")
    if not R1 > 0:
        raise DomainError(f"R1 must be positive, got {R1}")
    c, cD = Fraction(scale.c), Fraction(scale.cD)
    C0, CJ = Fraction(c0), Fraction(cJ)
    eta = 1 / (2 * c ** 3 * cD ** 2)
    alpha, m_alpha = choose_alpha(scale, eta, grid)
    beta = eta / (6 * C0)
    gamma = min(Fraction(1, 6), beta / CJ)
    kappa = 3 * beta * gamma
    j0 = smallest_power_exceeding(1 + beta, cD)
    # smallest m with 2^m > N is the bit length of N
    m0 = (2 * j0).bit_length()
    m1 = smallest_power_exceeding(Fraction(2), 1 / alpha ** 2)
    K = cD ** (m0 + m1) / kappa
    exact = {"eta": eta, "alpha": alpha, "beta": beta, "gamma": gamma, "kappa": kappa, "K": K}
    return HarnackConstants(
        eta=float(eta), alpha=float(alpha), beta=float(beta), gamma=float(gamma),
        kappa=float(kappa), j0=j0, m0=m0, m1=m1, K=float(K), alpha_power=m_alpha,
        inputs=ConstantInputs(c=scale.c, cD=scale.cD, c0=float(c0), cJ=float(cJ),
                              alpha0=scale.alpha0, eta0=scale.eta0, R0=scale.R0, R1=float(R1)),
        exact=exact,
    )


def _check_radius(scale: GreenScale, constants: HarnackConstants, R: float):
    limit = min(scale.R0, constants.inputs.R1)
    if not 0 < R < limit:
        raise DomainError(f"R must lie in (0, min(R0, R1) = {limit:g}), got {R}")


def radii_sequence(scale: GreenScale, constants: HarnackConstants, R: float,
                   j_max: int) -> np.ndarray:
    """r_1 > r_2 > ... > r_jmax with g(r_j) = cD^m0 (1+beta)^(j-1) g(alpha^4 R)."""
    if j_max < 1:
        raise DomainError("j_max must be >= 1")
    _check_radius(scale, constants, R)
    a4R = constants.alpha ** 4 * R
    j = np.arange(j_max, dtype=float)
    log_target = (constants.m0 * math.log(scale.cD) + j * math.log1p(constants.beta)
                  + math.log(float(scale(a4R))))
    if np.any(log_target > 709.0):
        raise OutOfRangeError(
            f"g-values up to exp({log_target.max():.1f}) overflow; use a smaller j_max")
    try:
        r = invert(scale, np.exp(log_target))
    except OutOfRangeError as exc:
        raise OutOfRangeError(
            f"{exc}; choose a smaller R or extend the tabulation range") from None
    if np.any(np.diff(r) >= 0):
        raise NumericalError("radii sequence is not strictly decreasing")
    return r


def tail_envelope(constants: HarnackConstants, R: float, j_max: int) -> float:
    """Bound on sum_{j > j_max} r_j from r_{m j0 + k} < 2^-(m0+m) alpha^4 R."""
    j0, m0 = constants.j0, constants.m0
    m_last = (j_max - 1) // j0
    remaining = (m_last + 1) * j0 - j_max
    count = remaining + j0
    return count * 2.0 ** -(m0 + m_last) * constants.alpha ** 4 * R


@dataclass(frozen=True)
class SumCheck:
    sum: float
    tail: float
    bound: float
    ratio: float
    envelope_ok: bool
    j_max: int
    passed: bool


def check_sum_rj(scale: GreenScale, constants: HarnackConstants, R: float,
                 j_max: int | None = None) -> SumCheck:
    """Partial sum of the radii plus the block envelope against alpha^4 R."""
    j_max = 10 * constants.j0 if j_max is None else int(j_max)
    r = radii_sequence(scale, constants, R, j_max)
    total = math.fsum(r.tolist())
    tail = tail_envelope(constants, R, j_max)
    bound = constants.alpha ** 4 * R
    j = np.arange(1, j_max + 1)
    m = (j - 1) // constants.j0
    env = 2.0 ** -(constants.m0 + m) * bound
    # r_1 = 2^-m0 alpha^4 R holds with equality for power laws, so the
    # envelope is checked non-strictly up to rounding
    envelope_ok = bool(np.all(r <= env * (1 + RTOL)))
    return SumCheck(sum=total, tail=tail, bound=bound, ratio=(total + tail) / bound,
                    envelope_ok=envelope_ok, j_max=j_max,
                    passed=bool(total + tail < bound and envelope_ok))
