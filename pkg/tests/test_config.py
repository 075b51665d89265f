from pathlib import Path

import pytest

from dral.acquisition import StrategyKind
from dral.config import apply_overrides, config_hash, load_config, parse_config
from dral.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


class TestLoad:
    @pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.toml")))
    def test_shipped_configs_parse(self, name):
        cfg = load_config(CONFIGS / name)
        assert cfg.T >= 1 and cfg.trials >= 1

    def test_desk_defaults(self):
        cfg = load_config(CONFIGS / "synth_se.toml")
        assert (cfg.grid.dim, cfg.grid.levels, cfg.T, cfg.trials) == (2, 11, 100, 10)
        assert cfg.noise_variance == 1e-4
        assert cfg.strategy is StrategyKind.CDR_VARIANCE_REDUCTION

    def test_overrides_are_toml_literals(self):
        cfg = load_config(CONFIGS / "synth_se.toml", ["T=5", "ambiguity.eta=0.1", "strategy=us", "name=quick"])
        assert (cfg.T, cfg.eta, cfg.strategy, cfg.name) == (5, 0.1, StrategyKind.US, "quick")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="config"):
            load_config(tmp_path / "nope.toml")

    def test_relative_dataset_path(self, tmp_path):
        (tmp_path / "c.toml").write_text('[grid]\nkind = "dataset"\npath = "data/x.csv"\ntarget = "y"\n')
        cfg = load_config(tmp_path / "c.toml")
        assert cfg.grid.path == str((tmp_path / "data" / "x.csv").resolve())


class TestValidation:
    @pytest.mark.parametrize(
        "raw, field",
        [
            ({"ambiguity": {"eta": -0.1}}, "ambiguity.eta"),
            ({"T": 0}, "T"),
            ({"trials": 0}, "trials"),
            ({"model": {"refit_every": -1}}, "model.refit_every"),
            ({"model": {"noise_variance": 0.0}}, "model.noise_variance"),
            ({"strategy": "bald"}, "strategy"),
            ({"T": "ten"}, "T"),
        ],
    )
    def test_field_named(self, raw, field):
        with pytest.raises(ConfigError) as exc:
            parse_config(raw)
        assert exc.value.field.startswith(field)
        assert field in str(exc.value)

    def test_bad_override_syntax(self):
        with pytest.raises(ConfigError):
            apply_overrides({}, ["T"])


class TestHash:
    def test_stable_under_reordering(self):
        a = parse_config({"T": 5, "ambiguity": {"eta": 0.1}, "kernel": {"kind": "se", "lengthscale": 0.3}})
        b = parse_config({"kernel": {"lengthscale": 0.3, "kind": "se"}, "ambiguity": {"eta": 0.1}, "T": 5})
        assert config_hash(a) == config_hash(b)

    def test_changes_with_content(self):
        assert config_hash(parse_config({"T": 5})) != config_hash(parse_config({"T": 6}))

    def test_round_trip(self):
        cfg = load_config(CONFIGS / "synth_matern.toml")
        assert parse_config(cfg.to_dict()) == cfg


def test_seed_list(monkeypatch):
    cfg = parse_config({"seed": 3, "trials": 2})
    assert cfg.seeds() == [3, 4]
    monkeypatch.setenv("DRAL_SEED_LIST", "1, 9")
    assert cfg.seeds() == [1, 9]
    monkeypatch.setenv("DRAL_SEED_LIST", "a,b")
    with pytest.raises(ConfigError):
        cfg.seeds()
