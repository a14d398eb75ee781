"""Command-line front end.

Exit codes: 0 when every requested check passes, 1 when a check fails,
2 for configuration or input errors, 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import reference_constants, run_all
from .capacity import ball_capacity, c0_from_CG, capacity_bounds, compute_CG
from .config import DEFAULTS, ExperimentConfig, load_config, parse_config
from .constants import build_constants
from .errors import ConfigurationError, DomainError, HarnackLabError
from .harnack import cell_family, harnack_ratio, pole_family
from .model import BROWNIAN, STABLE, Ball
from .montecarlo import (WosConfig, hitting_probability, iterated_balayage_check,
                         jump_comparison_constant, jump_mc_crosscheck, radial_edges,
                         sample_exit, shell_hitting_probability)
from .scale import default_grid, verify_scale

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _clean(obj):
    """JSON-ready copy: numpy scalars and arrays unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    fields = sorted({k for r in rows for k in r})
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(_clean(r))
    return buf.getvalue()


class Outcome:
    def __init__(self, payload: dict, passed: bool, rows: list[dict] | None = None):
        self.payload, self.passed, self.rows = payload, passed, rows


# ----------------------------------------------------------------- commands

def _constants_for(cfg: ExperimentConfig, model):
    c0 = cfg.c0
    if c0 is None:
        c0 = c0_from_CG(model, compute_CG(model.scale, model.d))
    cJ = cfg.cJ
    if cJ is None:
        if model.kind not in (STABLE, BROWNIAN):
            raise ConfigurationError("[constants] cJ: required for tabulated models")
        cJ = jump_comparison_constant(model, cfg.alpha_ratio).cJ
    return build_constants(model.scale, c0, cJ, cfg.R1)


def cmd_check_scale(cfg, args) -> Outcome:
    g = cfg.model().scale
    viol = verify_scale(g, default_grid(g))
    rows = [{"invariant": v.invariant, "radius": v.radius, "detail": v.detail} for v in viol]
    return Outcome({"model": cfg.model().label, "c": g.c, "cD": g.cD, "alpha0": g.alpha0,
                    "eta0": g.eta0, "R0": g.R0, "violations": rows, "pass": not viol},
                   not viol, rows)


def cmd_capacity(cfg, args) -> Outcome:
    model = cfg.model()
    res = ball_capacity(model, Ball(cfg.center, cfg.R), cfg.n_points)
    c0 = cfg.c0 if cfg.c0 is not None else c0_from_CG(model, compute_CG(model.scale, model.d))
    lo, hi = capacity_bounds(model, cfg.R, c0)
    ok = lo <= res.capacity <= hi * (1 + res.slack)
    payload = {"capacity": res.capacity, "n_points": res.n_points,
               "duality_gap": res.duality_gap, "bounds": {"lower": lo, "upper": hi},
               "slack": res.slack, "radius": cfg.R, "c0": c0, "pass": ok}
    return Outcome(payload, ok, [{k: v for k, v in payload.items() if k != "bounds"}
                                 | {"lower": lo, "upper": hi}])


def cmd_constants(cfg, args) -> Outcome:
    const = _constants_for(cfg, cfg.model())
    d = const.to_dict()
    return Outcome(d, True, [{k: v for k, v in d.items() if k not in ("inputs", "exact")}])


def _start(cfg) -> np.ndarray:
    x = np.array(cfg.center, dtype=float)
    x[0] += cfg.start
    return x


def cmd_hit(cfg, args) -> Outcome:
    model = cfg.model()
    x0 = np.array(cfg.center)
    est = hitting_probability(model, Ball(x0, cfg.target), Ball(x0, cfg.domain), _start(cfg),
                              WosConfig(max_steps=cfg.max_steps, seed=cfg.seed,
                                        threads=cfg.threads), cfg.n)
    out = est.to_dict()
    ok = not est.warning
    if model.kind == BROWNIAN:
        exact = shell_hitting_probability(model.d, cfg.target, cfg.domain, cfg.start)
        out["exact"] = exact
        out["z"] = (est.mean - exact) / est.stderr if est.stderr > 0 else 0.0
        ok &= abs(out["z"]) <= 3
    out["pass"] = ok
    return Outcome(out, ok, [out])


def cmd_exit(cfg, args) -> Outcome:
    model = cfg.model()
    x0 = np.array(cfg.center)
    ball = Ball(x0, cfg.domain)
    z = sample_exit(model, ball, _start(cfg), cfg.seed, cfg.n, threads=cfg.threads)
    rho = np.linalg.norm(z - x0, axis=1) / cfg.domain
    edges = radial_edges()
    counts = np.bincount(np.clip(np.searchsorted(edges, rho, side="right") - 1, 0, len(edges) - 2),
                         minlength=len(edges) - 1)
    rows = [{"lo": edges[i], "hi": edges[i + 1], "count": int(counts[i]),
             "fraction": counts[i] / cfg.n} for i in range(len(edges) - 1)]
    mean = z.mean(axis=0) - x0
    return Outcome({"n": cfg.n, "seed": cfg.seed, "start": _start(cfg).tolist(),
                    "mean_offset": mean.tolist(), "cells": rows, "pass": True}, True, rows)


def cmd_itbal(cfg, args) -> Outcome:
    rep = iterated_balayage_check(cfg.model(), cfg.center, cfg.r_small, cfg.r_large, cfg.n,
                                  cfg.seed, threads=cfg.threads)
    d = rep.to_dict() | {"n": cfg.n, "seed": cfg.seed}
    return Outcome(d, rep.passed, [d])


def cmd_cj(cfg, args) -> Outcome:
    model = cfg.model()
    res = jump_comparison_constant(model, cfg.alpha_ratio)
    out = res.to_dict()
    ok = math.isfinite(res.cJ) and res.cJ >= 1
    if not res.diffusion:
        mc = jump_mc_crosscheck(model, cfg.alpha_ratio, res, cfg.n, cfg.seed, threads=cfg.threads)
        out["mc"] = mc.to_dict()
        ok &= mc.passed
    out["pass"] = ok
    return Outcome(out, ok, [{k: v for k, v in out.items() if k != "mc"}])


def cmd_harnack(cfg, args) -> Outcome:
    model = cfg.model()
    const = reference_constants() if cfg.reference_constants else _constants_for(cfg, model)
    make = pole_family if cfg.family == "extreme" else cell_family
    fam = make(model, cfg.center, cfg.R, cfg.n_functions)
    rep = harnack_ratio(model, cfg.center, cfg.R, const, fam, cfg.grid_n)
    rows = [{"function": r.label, "sup": r.sup, "inf": r.inf, "ratio": r.ratio,
             "vanishing": r.vanishing} for r in rep.rows]
    return Outcome(rep.to_dict() | {"family": cfg.family, "R": cfg.R}, rep.passed, rows)


def cmd_report(cfg, args) -> Outcome:
    only = None
    if args.only:
        only = sorted({int(v) for v in args.only.split(",")})
    results = run_all(cfg.seed, cfg.threads, only,
                      on_result=lambda r: print(r.line(), file=sys.stderr, flush=True))
    ok = all(r.passed for r in results)
    return Outcome({"criteria": [r.to_dict() for r in results], "pass": ok,
                    "constants": reference_constants().to_dict()}, ok,
                   [{"number": r.number, "title": r.title, "pass": r.passed,
                     "summary": r.summary} for r in results])


COMMANDS = {"check-scale": cmd_check_scale, "capacity": cmd_capacity,
            "constants": cmd_constants, "harnack": cmd_harnack, "report": cmd_report}
SIMULATE = {"hit": cmd_hit, "exit": cmd_exit, "itbal": cmd_itbal, "cj": cmd_cj}


def _defaults_help() -> str:
    lines = ["configuration keys and defaults:"]
    for section, keys in DEFAULTS.items():
        for key, (default, desc) in keys.items():
            lines.append(f"  [{section}] {key} = {default or '(empty)'}  {desc}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI experiment config")
    common.add_argument("--seed", type=int, help="override [mc] seed")
    common.add_argument("--threads", type=int, help="override [mc] threads")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), help="override [output] format")
    p = argparse.ArgumentParser(prog="harnacklab", description=__doc__.splitlines()[0],
                                epilog=_defaults_help(),
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check-scale", parents=[common], help="verify the scale invariants")
    sub.add_parser("capacity", parents=[common], help="LP capacity of B(x0, R) with bounds")
    sub.add_parser("constants", parents=[common], help="the Harnack constant record")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo experiments")
    sim.add_argument("experiment", choices=sorted(SIMULATE))
    sim.add_argument("--n", type=int, help="override [mc] n")
    sim.add_argument("--max-steps", type=int, help="override [mc] max_steps")
    sub.add_parser("harnack", parents=[common], help="Harnack ratios over a function family")
    rep = sub.add_parser("report", parents=[common], help="run the acceptance matrix")
    rep.add_argument("--only", help="comma-separated criterion numbers")
    return p


def _config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.command == "report":
        cfg = parse_config("[model]\n", "<defaults>")
    else:
        raise ConfigurationError("--config is required for this command")
    over = {}
    for key in ("seed", "threads", "format"):
        if getattr(args, key, None) is not None:
            over[key] = getattr(args, key)
    if getattr(args, "n", None) is not None:
        over["n"] = args.n
    if getattr(args, "max_steps", None) is not None:
        over["max_steps"] = args.max_steps
    for key in ("seed", "threads", "n", "max_steps"):
        if key in over and over[key] < (0 if key == "seed" else 1):
            raise ConfigurationError(f"--{key.replace('_', '-')}: out of range: {over[key]}")
    if args.out:
        over["path"] = args.out
    return replace(cfg, **over)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    op = args.command if args.command != "simulate" else f"simulate {args.experiment}"
    try:
        cfg = _config(args)
        fn = SIMULATE[args.experiment] if args.command == "simulate" else COMMANDS[args.command]
        outcome = fn(cfg, args)
    except (ConfigurationError, DomainError) as exc:
        print(f"harnacklab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HarnackLabError as exc:
        print(f"harnacklab: numerical failure in {op}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = _rows_csv(outcome.rows or []) if cfg.format == "csv" else dumps(outcome.payload)
    if cfg.format == "csv" and args.command == "harnack":
        # the per-function rows go to the output, the summary to stderr
        sys.stderr.write(dumps(outcome.payload))
    if cfg.path:
        Path(cfg.path).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if outcome.passed else EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
