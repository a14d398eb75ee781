#!/usr/bin/env python3
"""Independent re-derivation of the Harnack constants for g(r) = r^-p.

Uses only the standard library (no numpy, no harnacklab) and a different
route from the package: the decay condition on alpha is solved in closed
form for the power law, and every integer is found by counting upward.

    python scripts/rederive_constants.py --c 1 --cD 4 --c0 3 --cJ 16
"""
from __future__ import annotations

import argparse
import json
from fractions import Fraction


def first_power_above(base: Fraction, bound: Fraction) -> int:
    j, value = 1, base
    while not value > bound:
        j += 1
        value *= base
    return j


def rederive(c: Fraction, cD: Fraction, c0: Fraction, cJ: Fraction,
             alpha0: Fraction = Fraction(1, 2)) -> dict:
    # for g = r^-p we have cD = 2^p, and g(r) <= c cD^-1 eta g(alpha r)
    # reads alpha^p <= c eta / cD; with alpha = 2^-m, alpha^p = cD^-m.
    if alpha0 != Fraction(1, 2):
        raise SystemExit("this script covers alpha0 = 1/2 only")
    eta = Fraction(1) / (2 * c ** 3 * cD ** 2)
    m = 1
    while not (alpha0 ** m < Fraction(1, 4) and cD ** -m <= c * eta / cD):
        m += 1
    alpha = alpha0 ** m
    beta = eta / (6 * c0)
    gamma = min(Fraction(1, 6), beta / cJ)
    kappa = 3 * beta * gamma
    j0 = first_power_above(1 + beta, cD)
    m0 = first_power_above(Fraction(2), Fraction(2 * j0))
    m1 = first_power_above(Fraction(2), 1 / alpha ** 2)
    K = cD ** (m0 + m1) / kappa
    return {"eta": eta, "alpha": alpha, "beta": beta, "gamma": gamma, "kappa": kappa,
            "j0": j0, "m0": m0, "m1": m1, "K": K}


def as_json(record: dict) -> dict:
    out = {}
    for k, v in record.items():
        out[k] = v if isinstance(v, int) else {"exact": str(v), "float": float(v)}
    return out


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--c", default="1")
    p.add_argument("--cD", default="4")
    p.add_argument("--c0", default="3")
    p.add_argument("--cJ", default="16")
    a = p.parse_args(argv)
    rec = rederive(Fraction(a.c), Fraction(a.cD), Fraction(a.c0), Fraction(a.cJ))
    print(json.dumps(as_json(rec), indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
