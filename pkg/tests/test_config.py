import configparser
import math

import pytest

from harnacklab.config import DEFAULTS, ExperimentConfig, load_config, parse_config, reference_text
from harnacklab.errors import ConfigurationError
from harnacklab.model import ProcessModel


def test_minimal_config_uses_defaults():
    cfg = parse_config("[model]\n")
    assert cfg == ExperimentConfig()
    assert cfg.center == (0.0, 0.0, 0.0)
    assert cfg.c0 is None and cfg.cJ is None and cfg.R1 == math.inf
    assert cfg.model() == ProcessModel.stable(3, 1.0)


def test_reference_text_round_trips():
    text = reference_text()
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_string(text)
    assert set(parser.sections()) == set(DEFAULTS)
    assert parse_config(text) == ExperimentConfig()


def test_shipped_configs_parse(tmp_path):
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    cfgs = {p.stem: load_config(p) for p in root.glob("*.ini")}
    assert cfgs["reference"].c0 == 3.0 and cfgs["reference"].cJ == 16.0
    assert cfgs["brownian_concentric"].model().kind == "brownian"
    assert cfgs["cauchy_plane"].family == "cells"


def test_values_and_center():
    cfg = parse_config("[model]\nkind = stable\nd = 2\nalpha = 1.5\n"
                       "[geometry]\nx0 = 1, -2\nR = 0.5\n[mc]\nseed = 9\nthreads = 3\n"
                       "[harnack]\nreference_constants = no\n")
    assert cfg.center == (1.0, -2.0) and cfg.R == 0.5 and cfg.seed == 9 and cfg.threads == 3
    assert not cfg.reference_constants
    assert cfg.to_dict()["x0"] == [1.0, -2.0] and "source" not in cfg.to_dict()


@pytest.mark.parametrize("text, needle", [
    ("", "missing required section [model]"),
    ("[model]\n[bogus]\n", "unknown section"),
    ("[model]\ncolour = red\n", "unknown key"),
    ("[model]\nd = 3\nalpha = two\n", "<config>:3: [model] alpha: expected float"),
    ("[model]\nalpha = 2.0\n", "stable models need alpha < 2"),
    ("[model]\nkind = brownian\nd = 2\n", "brownian models need d >= 3"),
    ("[model]\nkind = levy\n", "expected one of"),
    ("[model]\nkind = tabulated\n", "need a scale file"),
    ("[model]\n[geometry]\nx0 = 1, 2\n", "expected 3 coordinates"),
    ("[model]\n[geometry]\nstart = 5.0\n", "need target < start < domain"),
    ("[model]\n[geometry]\nr_small = 3\n", "need r_small <= r_large"),
    ("[model]\n[geometry]\nR = -1\n", "must be > 0"),
    ("[model]\n[mc]\nn = 0\n", "must be >= 1"),
    ("[model]\n[geometry]\nR = nan\n", "NaN is not allowed"),
    ("[model]\n[constants]\nc0 = 0.5\n", "must be >= 1"),
    ("[model\n", "<config>"),
])
def test_errors_name_location(text, needle):
    with pytest.raises(ConfigurationError) as exc:
        parse_config(text)
    assert needle in str(exc.value)


def test_error_line_numbers():
    text = "# comment\n[model]\nkind = stable\n\n[mc]\nseed = -1\n"
    with pytest.raises(ConfigurationError, match=r"cfg\.ini:6: \[mc\] seed"):
        parse_config(text, "cfg.ini")


def test_tabulated_scale_file_resolved_relative(tmp_path):
    (tmp_path / "g.txt").write_text("".join(f"{r} {r ** -2}\n" for r in (0.1, 1, 10, 100)))
    cfg_path = tmp_path / "t.ini"
    cfg_path.write_text("[model]\nkind = tabulated\nd = 3\nscale_file = g.txt\n")
    cfg = load_config(cfg_path)
    assert cfg.scale_file == str(tmp_path / "g.txt")
    cfg_path.write_text("[model]\nkind = tabulated\nscale_file = missing.txt\n")
    with pytest.raises(ConfigurationError, match="file not found"):
        load_config(cfg_path)


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigurationError, match="cannot read config"):
        load_config(tmp_path / "nope.ini")
