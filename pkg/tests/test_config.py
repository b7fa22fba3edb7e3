"""Config parsing: defaults, typed values, collected validation errors."""

import math

import pytest

from fnslab.config import (
    KIND_SUMMARIES,
    KINDS,
    ConfigError,
    parse_config,
    parse_config_file,
)
from fnslab.operators import TimeGrid


MINIMAL = """
[experiment]
kind = solve
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.kind == "solve"
    assert cfg.seed == 2026
    assert cfg.output == ""
    assert cfg.grid is None
    assert cfg.params.alpha == 0.75
    assert cfg.params.n == 2 and cfg.params.M == 32
    assert cfg.params.L == pytest.approx(2.0 * math.pi)
    assert cfg.options["data"] == "taylor-green"
    assert cfg.options["tol"] == 1e-8


def test_full_config_round_trip():
    cfg = parse_config("""
# leading comment
[experiment]
kind = solve
seed = 7
output = out/dir  # trailing comment
[parameters]
alpha = 0.6
n = 2
m = 64
l = 3.14
[grid]
t_min = 0.001
ratio = 1.5
count = 12
prepend = 2
[study]
data = random
band = 1, 4
amplitude = 0.25
""")
    assert cfg.seed == 7 and cfg.output == "out/dir"
    assert cfg.params.alpha == 0.6 and cfg.params.M == 64
    assert cfg.params.L == pytest.approx(3.14)
    assert isinstance(cfg.grid, TimeGrid)
    assert cfg.grid.count == 12 and cfg.grid.prepend == 2
    assert cfg.options["band"] == (1.0, 4.0)
    assert cfg.options["amplitude"] == 0.25
    assert cfg.echo["experiment"]["seed"] == "7"


def test_all_problems_reported_together():
    bad = """
[experiment]
kind = warp
[parameters]
alpha = 1.5
m = 33
[study]
data = random
"""
    with pytest.raises(ConfigError) as exc:
        parse_config(bad)
    msgs = exc.value.errors
    assert any("unknown kind 'warp'" in m for m in msgs)
    assert any("alpha = 1.5" in m for m in msgs)
    assert any("power of two" in m for m in msgs)
    assert len(msgs) >= 3


def test_scan_level_errors():
    bad = """
stray = 1
[experiment
kind = solve
[experiment]
kind = solve
kind = solve
[mystery]
x = 1
"""
    with pytest.raises(ConfigError) as exc:
        parse_config(bad)
    msgs = "\n".join(exc.value.errors)
    assert "outside any [section]" in msgs
    assert "malformed section header" in msgs
    assert "duplicate key 'kind'" in msgs
    assert "unknown section [mystery]" in msgs


def test_unknown_study_key_for_kind():
    bad = MINIMAL + "[study]\npairs = 12\n"
    with pytest.raises(ConfigError, match="unknown key 'pairs'"):
        parse_config(bad)


def test_bad_value_types_collected():
    bad = """
[experiment]
kind = kernel-check
[study]
mihlin = maybe
r_min = inf
"""
    with pytest.raises(ConfigError) as exc:
        parse_config(bad)
    msgs = "\n".join(exc.value.errors)
    assert "expected a boolean" in msgs
    assert "must be finite" in msgs


@pytest.mark.parametrize("alpha", ["0.5", "1.0", "0.3"])
def test_alpha_interval_is_open(alpha):
    bad = MINIMAL + f"[parameters]\nalpha = {alpha}\n"
    with pytest.raises(ConfigError, match="admissible interval"):
        parse_config(bad)


def test_cross_checks():
    with pytest.raises(ConfigError, match="needs n = 2"):
        parse_config(MINIMAL + "[parameters]\nn = 3\n")
    with pytest.raises(ConfigError, match="m >= 64"):
        parse_config("[experiment]\nkind = norm-equiv\n")
    with pytest.raises(ConfigError, match="at least 10 pairs"):
        parse_config("[experiment]\nkind = bilinear-check\n[study]\npairs = 4\n")
    with pytest.raises(ConfigError, match="set n = 2"):
        parse_config("[experiment]\nkind = decay-study\n[parameters]\nn = 1\n")
    with pytest.raises(ConfigError, match="unknown data"):
        parse_config(MINIMAL + "[study]\ndata = vortex-sheet\n")
    with pytest.raises(ConfigError, match="unknown case"):
        parse_config(
            "[experiment]\nkind = analyticity-study\n[study]\ncases = smooth\n"
        )


def test_missing_kind():
    with pytest.raises(ConfigError, match="missing required key 'kind'"):
        parse_config("[experiment]\nseed = 1\n")


def test_every_kind_has_a_summary():
    assert set(KIND_SUMMARIES) == set(KINDS)
    for kind in KINDS:
        if kind == "norm-equiv":
            text = f"[experiment]\nkind = {kind}\n[parameters]\nm = 64\n"
        else:
            text = f"[experiment]\nkind = {kind}\n"
        cfg = parse_config(text)
        assert cfg.kind == kind


def test_parse_config_file(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(MINIMAL, encoding="utf-8")
    assert parse_config_file(path).kind == "solve"
