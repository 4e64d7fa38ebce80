import pytest
from hypothesis import given, settings, strategies as st

from qnls.config import SCHEMA, ConfigError, load_config, parse_config

MINIMAL = """\
grid.n = 1
grid.m = 1024
grid.L = 16
nl.lambda = 0
nl.sigma = 1
solver.dt0 = 1e-3
solver.t_end = 1
"""


def test_minimal_parses_with_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg["grid.m"] == 1024 and cfg["grid.L"] == 16.0
    assert cfg["potential.kind"] == "free"
    assert cfg["init.kind"] == "gaussian"
    assert cfg["solver.record_every"] == 10
    assert cfg["output.csv"] == "observables.csv"
    assert cfg.sweep_points() == [{}]
    assert set(cfg.values) == set(SCHEMA)


def test_comments_and_blank_lines():
    cfg = parse_config("# header\n\n" + MINIMAL.replace("grid.L = 16", "grid.L = 16   # box"))
    assert cfg["grid.L"] == 16.0


def test_repulsive_needs_omega():
    with pytest.raises(ConfigError) as exc:
        parse_config(MINIMAL + "potential.kind = repulsive\n")
    assert exc.value.key == "potential.omega"
    assert "potential.omega" in str(exc.value)


def test_sigma_bound_in_three_dimensions():
    text = MINIMAL.replace("grid.n = 1", "grid.n = 3").replace("grid.m = 1024", "grid.m = 32")
    with pytest.raises(ConfigError) as exc:
        parse_config(text.replace("nl.sigma = 1", "nl.sigma = 2"))
    assert exc.value.key == "nl.sigma"
    assert "2/(n-2)" in str(exc.value)
    parse_config(text.replace("nl.sigma = 1", "nl.sigma = 1.9"))


@pytest.mark.parametrize(
    "extra,key,line",
    [
        ("grid.mm = 3\n", "grid.mm", 8),
        ("grid.m = 512\n", "grid.m", 8),
        ("solver.adapt = maybe\n", "solver.adapt", 8),
        ("nl.sigma = -1\n", None, None),
    ],
)
def test_errors_carry_key_and_line(extra, key, line):
    text = MINIMAL + extra
    if extra.startswith("nl.sigma"):
        text = MINIMAL.replace("nl.sigma = 1", "nl.sigma = -1")
        key, line = "nl.sigma", 5
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key
    assert exc.value.line == line


def test_type_mismatch():
    with pytest.raises(ConfigError, match="grid.m"):
        parse_config(MINIMAL.replace("grid.m = 1024", "grid.m = many"))
    with pytest.raises(ConfigError, match="power of two"):
        parse_config(MINIMAL.replace("grid.m = 1024", "grid.m = 1000"))


def test_missing_required():
    with pytest.raises(ConfigError) as exc:
        parse_config(MINIMAL.replace("solver.dt0 = 1e-3\n", ""))
    assert exc.value.key == "solver.dt0"


def test_snapshot_path_must_exist(tmp_path):
    with pytest.raises(ConfigError) as exc:
        parse_config(MINIMAL + "init.kind = snapshot\ninit.path = nowhere.nlsq\n", base_dir=tmp_path)
    assert exc.value.key == "init.path"


def test_sweep_axes_and_cap():
    cfg = parse_config(MINIMAL + "potential.kind = repulsive\npotential.omega = 1\n"
                       "sweep.potential.omega = 0.5, 1.0\nsweep.nl.lambda = -1, 0, 1\n")
    pts = cfg.sweep_points()
    assert len(pts) == 6
    assert pts[0] == {"potential.omega": 0.5, "nl.lambda": -1.0}
    with pytest.raises(ConfigError, match="cap"):
        parse_config(MINIMAL + "sweep.nl.lambda = 1, 2, 3\nsweep.max_runs = 2\n")
    with pytest.raises(ConfigError, match="at most"):
        parse_config(MINIMAL + "sweep.nl.lambda = 1\nsweep.nl.sigma = 1\nsweep.grid.L = 8\n")
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "sweep.init.kind = 1, 2\n")
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "sweep.nl.sigma = 1, -1\n")


def test_with_overrides_revalidates():
    cfg = parse_config(MINIMAL)
    assert cfg.with_overrides({"nl.lambda": -1.0})["nl.lambda"] == -1.0
    with pytest.raises(ConfigError):
        cfg.with_overrides({"grid.m": 100})


def test_load_config_resolves_relative(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(MINIMAL, encoding="utf-8")
    cfg = load_config(p)
    assert cfg.resolve("out.csv") == tmp_path / "out.csv"


_LINES = MINIMAL.splitlines()


@settings(max_examples=300, deadline=None)
@given(idx=st.integers(0, len(_LINES) - 1), pos=st.integers(0, 40),
       ch=st.sampled_from(list("abcdefghijklmnopqrstuvwxyz_.0123456789")))
def test_mutated_key_always_rejected(idx, pos, ch):
    key, value = _LINES[idx].split(" = ")
    pos = pos % (len(key) + 1)
    mutated = key[:pos] + ch + key[pos:]
    lines = list(_LINES)
    lines[idx] = f"{mutated} = {value}"
    with pytest.raises(ConfigError):
        parse_config("\n".join(lines))
