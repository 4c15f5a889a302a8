import pytest

from swarm_anneal.config import ConfigError, InitSpec, RunConfig, apply_overrides, from_dict, load_config


def test_defaults_valid():
    cfg = RunConfig()
    assert cfg.c_tol == 1e-8 and cfg.c_bracket_expansions == 60 and cfg.ot_tolerance == 1e-9
    assert cfg.integrator().h == pytest.approx(0.04)


def test_toml_roundtrip(tmp_path):
    cfg = RunConfig(method="csa", potential="six_hump_camel", init=InitSpec(kind="mixture", reference_size=300), n_particles=5, seed=4)
    path = tmp_path / "c.toml"
    path.write_text(cfg.to_toml(), encoding="utf-8")
    assert load_config(path) == cfg


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")


def test_bad_toml(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("method = = 3", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(p)


@pytest.mark.parametrize(
    "raw",
    [
        {"method": "sgd"},
        {"potential": "rosenbrock"},
        {"n_runs": 0},
        {"n_particles": 2.5},
        {"dt": -0.1},
        {"m": 1.0},
        {"kappa": 3},
        {"T": 0.0031},
        {"unknown_key": 1},
        {"init": {"kind": "file"}},
        {"init": {"kind": "swarm", "colour": 1}},
        {"init": {"reference_size": 3}, "n_particles": 5},
        {"schedule": {"kind": "cubic", "beta0": 1.0}},
        {"schedule": {"beta0": 1.0}},
    ],
)
def test_validation_errors(raw):
    with pytest.raises(ConfigError):
        from_dict(raw)


def test_overrides():
    cfg = apply_overrides(RunConfig(), {"method": "csa", "n_runs": 3, "init.kind": "langevin", "schedule.rate": 50.0, "seed": None})
    assert cfg.method == "csa" and cfg.n_runs == 3 and cfg.init.kind == "langevin" and cfg.schedule.rate == 50.0
    assert cfg.seed == RunConfig().seed


def test_integer_floats_coerced():
    assert from_dict({"n_runs": 4.0}).n_runs == 4


def test_shipped_configs_load():
    from pathlib import Path

    paths = sorted((Path(__file__).parent.parent / "configs").glob("*.toml"))
    assert len(paths) >= 10
    for p in paths:
        cfg = load_config(p)
        assert cfg.out.endswith(p.stem)
