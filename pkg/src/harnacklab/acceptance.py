"""The acceptance matrix: eleven end-to-end checks with fixed geometries.

Each ``criterion_k(seed, threads)`` returns a :class:`CriterionResult`;
:func:`run_all` runs a selection in order.  Runtimes are measured but kept
out of :meth:`CriterionResult.to_dict` so that reports are reproducible.
"""
from __future__ import annotations

import importlib.util
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .capacity import ball_capacity, capacity_bounds
from .constants import build_constants, check_sum_rj, radii_sequence
from .errors import HarnackLabError
from .harnack import (Cell, HarmonicFunction, diffusion_global_check, harnack_ratio,
                      mean_value_check, pole_family)
from .model import Ball, ProcessModel
from .montecarlo import (WosConfig, hitting_probability, iterated_balayage_check,
                         jump_comparison_constant, jump_mc_crosscheck, prop_hitting_sweep,
                         shell_hitting_probability)
from .scale import default_grid, verify_scale

SCRIPT = Path(__file__).resolve().parents[2] / "scripts" / "rederive_constants.py"


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    details: dict = field(repr=False)
    seconds: float = field(default=0.0, compare=False)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.title}: {self.summary} ({self.seconds:.1f} s)"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "pass": self.passed,
                "summary": self.summary, "details": self.details}


def reference_constants():
    """The record for g(r) = r^-2 (stable d=3, alpha=1) with c0 = 3, cJ = 16."""
    return build_constants(ProcessModel.stable(3, 1.0).scale, 3.0, 16.0)


def _timed(fn):
    def run(seed: int = 0, threads: int = 1) -> CriterionResult:
        t = time.perf_counter()
        res = fn(seed, threads)
        return CriterionResult(res.number, res.title, res.passed, res.summary, res.details,
                               time.perf_counter() - t)
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def _result(number, title, passed, summary, details):
    return CriterionResult(number, title, bool(passed), summary, details)


@_timed
def criterion_1(seed, threads):
    """Scale checks with closed-form (cD, eta0), under 1 s."""
    t = time.perf_counter()
    cases = [("stable", 1, 1.0), ("stable", 2, 1.0), ("stable", 3, 1.0), ("stable", 3, 1.5),
             ("brownian", 3, 2.0)]
    rows = []
    for kind, d, a in cases:
        model = ProcessModel(kind, d, a)
        p = d - a
        row = {"model": model.label, "expected_cD": 2.0 ** p, "expected_eta0": 2.0 ** -p}
        try:
            g = model.scale
            viol = verify_scale(g, default_grid(g))
            row.update(cD=g.cD, eta0=g.eta0, violations=len(viol),
                       ok=not viol and g.cD == 2.0 ** p and g.eta0 == 2.0 ** -p)
        except HarnackLabError as exc:
            row.update(error=str(exc), ok=False)
        rows.append(row)
    elapsed = time.perf_counter() - t
    ok = sum(r["ok"] for r in rows)
    failed = [r["model"] for r in rows if not r["ok"]]
    summary = f"{ok}/{len(rows)} models pass" + (f"; failing: {', '.join(failed)}" if failed else "")
    return _result(1, "scale checks", ok == len(rows) and elapsed < 1.0, summary,
                   {"models": rows, "under_1s": elapsed < 1.0})


@_timed
def criterion_2(seed, threads):
    """Capacity sandwich at r in {0.5, 1, 2} and the scaling ratio, under 60 s."""
    t = time.perf_counter()
    model = ProcessModel.stable(3, 1.0)
    origin = np.zeros(3)
    rows = []
    caps = {}
    for r in (0.5, 1.0, 2.0):
        res = ball_capacity(model, Ball(origin, r), 4096)
        lo, hi = capacity_bounds(model, r, 3.0)
        caps[r] = res.capacity
        rows.append({"r": r, "capacity": res.capacity, "lower": lo, "upper": hi,
                     "slack": res.slack, "duality_gap": res.duality_gap, "n_points": res.n_points,
                     "ok": lo <= res.capacity <= hi * (1 + res.slack)})
    big = ball_capacity(model, Ball(origin, 2.0), 8 * 4096, slack=False)
    ratio = big.capacity / caps[1.0]
    elapsed = time.perf_counter() - t
    ok = all(r["ok"] for r in rows) and abs(ratio / 4 - 1) <= 0.02 and elapsed < 60
    return _result(2, "capacity sandwich", ok,
                   f"caps {', '.join(f'{caps[r]:.4g}' for r in caps)}; ratio {ratio:.4f}",
                   {"radii": rows, "scaling_ratio": ratio, "under_60s": elapsed < 60})


@_timed
def criterion_3(seed, threads):
    """Brownian concentric-shell hitting probabilities, n = 1e5, under 30 s."""
    t = time.perf_counter()
    model = ProcessModel.brownian(3)
    rows = []
    for i, s in enumerate((1.25, 1.5, 2.0, 2.5, 3.0)):
        est = hitting_probability(model, Ball(np.zeros(3), 1.0), Ball(np.zeros(3), 4.0),
                                  [s, 0.0, 0.0], WosConfig(seed=seed + i, threads=threads), 100000)
        exact = shell_hitting_probability(3, 1.0, 4.0, s)
        z = (est.mean - exact) / est.stderr
        rows.append({"start": s, "exact": exact, "estimate": est.to_dict(), "z": z,
                     "ok": abs(z) <= 3 and est.censored_fraction < 0.01})
    elapsed = time.perf_counter() - t
    ok = all(r["ok"] for r in rows) and elapsed < 30
    zmax = max(abs(r["z"]) for r in rows)
    return _result(3, "hitting oracle", ok, f"max |z| {zmax:.2f}",
                   {"geometries": rows, "under_30s": elapsed < 30})


@_timed
def criterion_4(seed, threads):
    """Hitting lower bound on a 3 x 3 sweep of target radius and start."""
    model = ProcessModel.stable(3, 1.0)
    g = model.scale
    eta = 1 / (2 * g.c ** 3 * g.cD ** 2)
    cells = prop_hitting_sweep(model, 100000, seed,
                               config=WosConfig(seed=seed, threads=threads))
    viol = sum(not c.passed for c in cells)
    margin = min((c.estimate.mean - c.bound) / c.estimate.stderr for c in cells)
    return _result(4, "hitting lower bound", viol == 0 and eta == 1 / 32,
                   f"{viol} violations in {len(cells)} cells; min margin {margin:.1f} stderr",
                   {"eta": eta, "cells": [c.to_dict() for c in cells]})


@_timed
def criterion_5(seed, threads):
    """Radii sum plus tail below alpha^4 R, and the exact first radius."""
    scale = ProcessModel.stable(3, 1.0).scale
    const = reference_constants()
    sc = check_sum_rj(scale, const, 1.0)
    r1 = float(radii_sequence(scale, const, 1.0, 1)[0])
    r1_exact = const.alpha ** 4 * 2.0 ** -11
    rel = abs(r1 / r1_exact - 1)
    ratio3 = float(f"{sc.ratio:.3g}")
    ok = sc.passed and ratio3 == 0.563 and rel <= 1e-12
    return _result(5, "radii sum", ok, f"(sum + tail) / alpha^4 R = {ratio3}; r_1 rel err {rel:.1e}",
                   {"sum": sc.sum, "tail": sc.tail, "bound": sc.bound, "ratio": sc.ratio,
                    "j_max": sc.j_max, "envelope_ok": sc.envelope_ok, "r1": r1,
                    "r1_expected": r1_exact, "r1_relative_error": rel})


def _load_rederivation():
    if not SCRIPT.exists():
        return None
    mod_spec = importlib.util.spec_from_file_location("rederive_constants", SCRIPT)
    mod = importlib.util.module_from_spec(mod_spec)
    mod_spec.loader.exec_module(mod)
    return mod


@_timed
def criterion_6(seed, threads):
    """Constant record against the independent re-derivation script."""
    const = reference_constants()
    expected = {"eta": Fraction(1, 32), "alpha": Fraction(1, 16), "beta": Fraction(1, 576),
                "gamma": Fraction(1, 9216), "kappa": Fraction(1, 1769472), "j0": 800, "m0": 11,
                "m1": 9, "K": 1769472 * Fraction(4) ** 20}
    mod = _load_rederivation()
    if mod is None:
        return _result(6, "constants pipeline", False, f"re-derivation script missing: {SCRIPT}",
                       {"record": const.to_dict()})
    other = mod.rederive(Fraction(1), Fraction(4), Fraction(3), Fraction(16))
    mismatches = []
    for key, exact in expected.items():
        mine = getattr(const, key)
        theirs = other[key]
        if isinstance(exact, int):
            same = mine == theirs == exact
        else:
            same = (mine == float(theirs) == float(exact)
                    and const.exact[key] == theirs == exact)
        if not same:
            mismatches.append(key)
    return _result(6, "constants pipeline", not mismatches,
                   "bit-identical to re-derivation" if not mismatches
                   else f"mismatch in {', '.join(mismatches)}",
                   {"record": const.to_dict(), "mismatches": mismatches})


@_timed
def criterion_7(seed, threads):
    """Jump comparison for d = 1, alpha = 1 at ratio 1/16."""
    model = ProcessModel.stable(1, 1.0)
    q = 1 / 16
    base = jump_comparison_constant(model, q)
    fine = jump_comparison_constant(model, q, 128, 512)
    far = jump_comparison_constant(model, q, r=10.0)
    refine = abs(fine.raw_sup / base.raw_sup - 1)
    r_dep = abs(far.raw_sup / base.raw_sup - 1)
    mc = jump_mc_crosscheck(model, q, base, 100000, seed, threads=threads)
    ok = (math.isfinite(base.cJ) and base.cJ >= 1 and refine <= 1e-3 and r_dep <= 1e-8
          and mc.passed)
    return _result(7, "jump comparison", ok,
                   f"cJ {base.cJ:g} (raw sup {base.raw_sup:.6g}); refinement {refine:.1e}; "
                   f"r-dependence {r_dep:.1e}; MC max z {mc.max_z:.2f}",
                   {"result": base.to_dict(), "refinement_change": refine,
                    "r_dependence": r_dep, "mc": mc.to_dict()})


@_timed
def criterion_8(seed, threads):
    """Harnack ratios for 200 extreme functions at three scales, under 5 min."""
    t = time.perf_counter()
    const = reference_constants()
    rows = []
    ok = True
    for d in (1, 2):
        model = ProcessModel.stable(d, 1.0)
        ratios = {}
        for R in (0.1, 1.0, 10.0):
            rep = harnack_ratio(model, np.zeros(d), R, const, pole_family(model, np.zeros(d), R, 200))
            ratios[R] = rep.max_ratio
            ok &= rep.passed and rep.excluded == 0
            rows.append({"d": d, "R": R, **rep.to_dict()})
        vals = list(ratios.values())
        spread = (max(vals) - min(vals)) / min(vals)
        ok &= spread < 1e-6
        rows.append({"d": d, "spread": spread})
    elapsed = time.perf_counter() - t
    ok &= elapsed < 300
    maxes = {r["d"]: r["max_ratio"] for r in rows if "max_ratio" in r}
    return _result(8, "Harnack inequality", ok,
                   "max ratio " + ", ".join(f"d={d}: {v:.6g}" for d, v in maxes.items())
                   + f" vs K {const.K:.4g}", {"rows": rows, "under_5min": elapsed < 300})


@_timed
def criterion_9(seed, threads):
    """Brownian G(., z) ratios over B(x0, R/2) for 20 placements of z."""
    model = ProcessModel.brownian(3)
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((20, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dist = 2.0 * (1 + np.geomspace(1e-3, 4.0, 20))
    rows = []
    for u, s in zip(dirs, dist):
        chk = diffusion_global_check(model, np.zeros(3), 1.0, u * s)
        rows.append({"distance": float(s), **chk.to_dict()})
    worst = max(r["ratio"] for r in rows)
    return _result(9, "diffusion bound", all(r["pass"] for r in rows),
                   f"max ratio {worst:.4f} <= 4", {"placements": rows})


@_timed
def criterion_10(seed, threads):
    """Two-stage against direct exit laws, d = 1, alpha = 1, n = 1e5."""
    rep = iterated_balayage_check(ProcessModel.stable(1, 1.0), [0.0], 1.0, 2.0, 100000, seed,
                                  threads=threads)
    return _result(10, "iterated balayage", rep.passed,
                   f"statistic {rep.statistic:.2f} < {rep.critical:.2f}; cell max z {rep.cell_max_z:.2f}",
                   rep.to_dict())


def harmonicity_cases():
    """(model, function) pairs used by the mean-value matrix."""
    m1, m2, m3 = (ProcessModel.stable(d, 1.0) for d in (1, 2, 3))
    return [
        (m1, HarmonicFunction.mixture(m1, Ball((0.0,), 1.0),
                                      [(1.0, Cell(1.0, 2.0, 1)), (0.5, Cell(1.2, math.inf, -1))])),
        (m2, HarmonicFunction.indicator(m2, Ball((0.0, 0.0), 1.0), Cell(1.0, 3.0, (0.0, 2.0)))),
        (m3, HarmonicFunction.extreme(m3, Ball((0.0, 0.0, 0.0), 1.0), [1.5, 0.0, 0.0])),
    ]


@_timed
def criterion_11(seed, threads):
    """Mean-value residuals on a 3 x 3 x 3 matrix of (model, inner ball, point)."""
    rows = []
    k = 0
    for model, h in harmonicity_cases():
        d = model.d
        for c, r in ((0.0, 0.5), (0.3, 0.4), (-0.2, 0.25)):
            inner = Ball((c,) + (0.0,) * (d - 1), r)
            for f in (0.0, 0.5, 0.9):
                x = np.array((c + f * r,) + (0.0,) * (d - 1))
                res = mean_value_check(h, inner, x, 20000, seed + k, threads=threads)
                k += 1
                rows.append({"model": model.label, "inner_center": c, "inner_radius": r,
                             "x": float(x[0]), **res.to_dict()})
    worst = max(abs(r["residual"]) for r in rows)
    return _result(11, "harmonicity", worst <= 4,
                   f"max |residual| {worst:.2f} over {len(rows)} cases", {"cases": rows})


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 12)}


def run_all(seed: int = 0, threads: int = 1, only=None, on_result=None) -> list[CriterionResult]:
    """Run the selected criteria (all by default) in order."""
    out = []
    for i in sorted(only or CRITERIA):
        res = CRITERIA[i](seed, threads)
        if on_result is not None:
            on_result(res)
        out.append(res)
    return out
