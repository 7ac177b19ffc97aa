import pytest

from varops.errors import ConfigError
from varops.grid import constant, make_grid
from varops.utils.config import (
    build_grid,
    build_ladder,
    build_operator,
    load_config,
    num_threads,
)
from varops.variation import make_ladder


def test_load_config_yaml(tmp_path):
    path = tmp_path / "strong.yaml"
    path.write_text("experiment: strong-type\nn: 64\nweight:\n  kind: power\n  alpha: 0.5\n")
    config = load_config(str(path))
    assert config == {
        "experiment": "strong-type",
        "n": 64,
        "weight": {"kind": "power", "alpha": 0.5},
    }


def test_load_config_json(tmp_path):
    path = tmp_path / "bmo.json"
    path.write_text('{"experiment": "bmo", "q": 4.0}')
    assert load_config(str(path))["q"] == 4.0


@pytest.mark.parametrize("text", ["- 1\n- 2\n", "a: [1, 2\n"])
def test_load_config_rejects_bad_files(tmp_path, text):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.yaml"))


def test_num_threads(monkeypatch):
    monkeypatch.setenv("VAROPS_THREADS", "3")
    assert num_threads() == 3
    for value in ("0", "many"):
        monkeypatch.setenv("VAROPS_THREADS", value)
        with pytest.raises(ConfigError):
            num_threads()
    monkeypatch.delenv("VAROPS_THREADS")
    assert num_threads() >= 1


def test_build_errors_become_config_errors():
    with pytest.raises(ConfigError):
        build_grid(1, 100, 16.0)
    with pytest.raises(ConfigError):
        build_ladder(make_grid(1, 16, length=8.0), 0)
    with pytest.raises(ConfigError):
        build_operator({"kind": "wavelet"}, 1)
    with pytest.raises(ConfigError):
        build_operator({"kind": "kernel", "preset": "riesz1"}, 1)


@pytest.mark.parametrize(
    "spec",
    [
        {"kind": "ball_average"},
        {"kind": "cube_average"},
        {"kind": "kernel", "preset": "hilbert"},
        {"kind": "ball_combination", "preset": "heat"},
    ],
)
def test_build_operator_families(spec):
    grid = make_grid(1, 16, length=8.0)
    ladder = make_ladder([0.5, 1.0, 2.0])
    fam = build_operator(spec, 1)(constant(grid, 1.0), ladder)
    assert fam.samples.shape == (16, 3)
