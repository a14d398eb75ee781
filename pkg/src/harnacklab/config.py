"""Experiment configuration: INI files with named sections.

Every key has a default (see :data:`DEFAULTS` and ``configs/reference.ini``)
but a file must at least contain a ``[model]`` section.  Errors name the
file, line, section and key.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigurationError
from .model import BROWNIAN, KINDS, STABLE, TABULATED, ProcessModel
from .scale import GreenScale

# section -> key -> (default, description); the CLI help is generated from this
DEFAULTS: dict[str, dict[str, tuple[str, str]]] = {
    "model": {
        "kind": ("stable", "stable | brownian | tabulated"),
        "d": ("3", "dimension"),
        "alpha": ("1.0", "stability index in (0,2); ignored for brownian"),
        "scale_file": ("", "two-column table of r, g(r) (tabulated kind only)"),
    },
    "geometry": {
        "x0": ("", "comma-separated center; empty for the origin"),
        "R": ("1.0", "Harnack radius; ball radius for capacity"),
        "target": ("1.0", "target ball radius a for simulate hit"),
        "domain": ("4.0", "domain ball radius b for simulate hit and exit"),
        "start": ("2.0", "distance of the start point from x0 along the first axis"),
        "r_small": ("1.0", "inner radius for simulate itbal"),
        "r_large": ("2.0", "outer radius for simulate itbal"),
        "alpha_ratio": ("0.0625", "inner/outer radius ratio for simulate cj"),
    },
    "mc": {
        "n": ("100000", "number of samples or walks"),
        "seed": ("0", "base seed"),
        "max_steps": ("10000", "walk-on-spheres step limit"),
        "threads": ("1", "worker threads (results do not depend on it)"),
    },
    "capacity": {
        "n_points": ("4096", "lattice cells in the ball"),
    },
    "constants": {
        "c0": ("", "capacity constant; empty to compute c * C_G"),
        "cJ": ("", "jump comparison constant; empty to measure it"),
        "R1": ("inf", "largest radius of the jump comparison"),
    },
    "harnack": {
        "family": ("extreme", "extreme | cells"),
        "n_functions": ("200", "family size"),
        "grid_n": ("4096", "grid points in the inner ball"),
        "reference_constants": ("yes", "use the d=3, alpha=1 record (c0=3, cJ=16) for K"),
    },
    "output": {
        "format": ("json", "json | csv"),
        "path": ("", "output file; empty for stdout"),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = STABLE
    d: int = 3
    alpha: float = 1.0
    scale_file: str = ""
    x0: tuple = ()
    R: float = 1.0
    target: float = 1.0
    domain: float = 4.0
    start: float = 2.0
    r_small: float = 1.0
    r_large: float = 2.0
    alpha_ratio: float = 0.0625
    n: int = 100000
    seed: int = 0
    max_steps: int = 10000
    threads: int = 1
    n_points: int = 4096
    c0: float | None = None
    cJ: float | None = None
    R1: float = math.inf
    family: str = "extreme"
    n_functions: int = 200
    grid_n: int = 4096
    reference_constants: bool = True
    format: str = "json"
    path: str = ""
    source: str = field(default="", compare=False)

    @property
    def center(self) -> tuple:
        return self.x0 if self.x0 else (0.0,) * self.d

    def model(self) -> ProcessModel:
        if self.kind == BROWNIAN:
            return ProcessModel.brownian(self.d)
        if self.kind == TABULATED:
            return ProcessModel.tabulated(GreenScale.from_table(self.scale_file), self.d)
        return ProcessModel.stable(self.d, self.alpha)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("source")
        out["x0"] = list(self.center)
        return out


def _lines(text: str) -> dict[tuple[str, str], int]:
    """Line number of every (section, key) for diagnostics."""
    where: dict[tuple[str, str], int] = {}
    section = ""
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            where[(section, "")] = i
        elif "=" in line:
            where[(section, line.split("=", 1)[0].strip().lower())] = i
    return where


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, where: dict, source: str):
        self.parser, self.where, self.source = parser, where, source

    def fail(self, section: str, key: str, msg: str):
        line = self.where.get((section, key.lower()), self.where.get((section, "")))
        loc = f"{self.source}:{line}" if line else self.source
        raise ConfigurationError(f"{loc}: [{section}] {key}: {msg}")

    def raw(self, section: str, key: str) -> str:
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        return DEFAULTS[section][key][0]

    def number(self, section, key, kind=float, *, lo=None, hi=None, lo_open=False,
               optional=False):
        text = self.raw(section, key)
        if optional and text == "":
            return None
        try:
            value = kind(text)
        except ValueError:
            self.fail(section, key, f"expected {kind.__name__}, got {text!r}")
        if kind is float and math.isnan(value):
            self.fail(section, key, "NaN is not allowed")
        if lo is not None and (value <= lo if lo_open else value < lo):
            self.fail(section, key, f"must be {'>' if lo_open else '>='} {lo}, got {value}")
        if hi is not None and value > hi:
            self.fail(section, key, f"must be <= {hi}, got {value}")
        return value

    def choice(self, section, key, options):
        value = self.raw(section, key).lower()
        if value not in options:
            self.fail(section, key, f"expected one of {sorted(options)}, got {value!r}")
        return value


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse and validate configuration text."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from None
    where = _lines(text)
    rd = _Reader(parser, where, source)
    for section in parser.sections():
        if section not in DEFAULTS:
            rd.fail(section, "", f"unknown section; expected one of {sorted(DEFAULTS)}")
        for key in parser.options(section):
            if key not in {k.lower() for k in DEFAULTS[section]}:
                rd.fail(section, key, "unknown key")
    if not parser.has_section("model"):
        raise ConfigurationError(f"{source}: missing required section [model]")

    kind = rd.choice("model", "kind", set(KINDS))
    d = rd.number("model", "d", int, lo=1)
    alpha = rd.number("model", "alpha", float, lo=0, hi=2, lo_open=True)
    if kind == STABLE and alpha >= 2:
        rd.fail("model", "alpha", "stable models need alpha < 2")
    if kind == BROWNIAN and d < 3:
        rd.fail("model", "d", "brownian models need d >= 3")
    scale_file = rd.raw("model", "scale_file")
    if kind == TABULATED:
        if not scale_file:
            rd.fail("model", "scale_file", "tabulated models need a scale file")
        path = Path(scale_file)
        if not path.is_absolute() and source not in ("<config>", ""):
            path = Path(source).parent / path
        if not path.exists():
            rd.fail("model", "scale_file", f"file not found: {path}")
        scale_file = str(path)

    x0_text = rd.raw("geometry", "x0")
    x0: tuple = ()
    if x0_text:
        try:
            x0 = tuple(float(v) for v in x0_text.split(","))
        except ValueError:
            rd.fail("geometry", "x0", f"expected comma-separated numbers, got {x0_text!r}")
        if len(x0) != d:
            rd.fail("geometry", "x0", f"expected {d} coordinates, got {len(x0)}")
    geo = {k: rd.number("geometry", k, float, lo=0, lo_open=True)
           for k in ("R", "target", "domain", "start", "r_small", "r_large")}
    if not geo["target"] < geo["start"] < geo["domain"]:
        rd.fail("geometry", "start", "need target < start < domain")
    if geo["r_small"] > geo["r_large"]:
        rd.fail("geometry", "r_small", "need r_small <= r_large")
    alpha_ratio = rd.number("geometry", "alpha_ratio", float, lo=0, hi=1, lo_open=True)
    if alpha_ratio >= 1:
        rd.fail("geometry", "alpha_ratio", "must be < 1")

    fmt = rd.choice("output", "format", {"json", "csv"})
    family = rd.choice("harnack", "family", {"extreme", "cells"})
    ref = rd.choice("harnack", "reference_constants", {"yes", "no", "true", "false", "1", "0"})
    return ExperimentConfig(
        kind=kind, d=d, alpha=alpha, scale_file=scale_file, x0=x0,
        alpha_ratio=alpha_ratio, **geo,
        n=rd.number("mc", "n", int, lo=1),
        seed=rd.number("mc", "seed", int, lo=0),
        max_steps=rd.number("mc", "max_steps", int, lo=1),
        threads=rd.number("mc", "threads", int, lo=1),
        n_points=rd.number("capacity", "n_points", int, lo=8),
        c0=rd.number("constants", "c0", float, lo=1, optional=True),
        cJ=rd.number("constants", "cJ", float, lo=0, lo_open=True, optional=True),
        R1=rd.number("constants", "R1", float, lo=0, lo_open=True),
        family=family,
        n_functions=rd.number("harnack", "n_functions", int, lo=1),
        grid_n=rd.number("harnack", "grid_n", int, lo=1),
        reference_constants=ref in ("yes", "true", "1"),
        format=fmt, path=rd.raw("output", "path"), source=source,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def reference_text() -> str:
    """A complete config listing every key with its default and description."""
    lines = ["# harnacklab experiment configuration; every key shows its default", ""]
    for section, keys in DEFAULTS.items():
        lines.append(f"[{section}]")
        for key, (default, desc) in keys.items():
            lines.append(f"# {desc}")
            lines.append(f"{key} = {default}")
        lines.append("")
    return "\n".join(lines)
