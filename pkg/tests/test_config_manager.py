"""
Tests for config_manager.py - layered settings, run settings and deadlines.
"""

import pytest

from sinkless_lb.config_manager import DEFAULTS, ConfigManager, Deadline, RunSettings
from sinkless_lb.error_handler import ConfigError, ParseError, TimeBudgetExceeded


@pytest.fixture
def config(tmp_path):
    return ConfigManager(config_dir=tmp_path / "cfg")


class TestConfigManager:
    """Tests for ConfigManager."""

    def test_defaults(self, config):
        """Test that nothing stored falls back to the built-in defaults."""
        assert config.get("delta") == 3
        assert config.get("node_budget") == 2 ** 27
        assert config.get("nonexistent", default="x") == "x"

    def test_set_persists(self, config, tmp_path):
        """Test that set writes YAML a new manager can read."""
        config.set("seed", 11)
        assert (tmp_path / "cfg" / "config.yaml").exists()
        assert ConfigManager(config_dir=tmp_path / "cfg").get("seed") == 11

    def test_profile_falls_back_to_default_profile(self, config):
        """Test the profile, then default profile, then defaults order."""
        config.set("delta", 4)
        config.set("samples", 50, profile="quick")
        assert config.get("delta", profile="quick") == 4
        assert config.get("samples", profile="quick") == 50
        assert config.get("samples") == DEFAULTS["samples"]

    def test_env_wins(self, config, monkeypatch):
        """Test that the environment beats every stored value."""
        config.set("delta", 4)
        monkeypatch.setenv("SINKLESS_LB_DELTA", "5")
        assert config.get_int("delta") == 5

    def test_config_dir_from_env(self, tmp_path, monkeypatch):
        """Test that SINKLESS_LB_CONFIG_DIR picks the directory."""
        monkeypatch.setenv("SINKLESS_LB_CONFIG_DIR", str(tmp_path / "elsewhere"))
        assert ConfigManager().config_dir == tmp_path / "elsewhere"

    def test_unknown_key(self, config):
        """Test that only known keys can be stored."""
        with pytest.raises(ConfigError, match="unknown key"):
            config.set("colour", "blue")

    def test_delete(self, config):
        """Test deleting a stored key."""
        config.set("seed", 3)
        assert config.delete("seed") is True
        assert config.delete("seed") is False
        assert config.get("seed") == 0

    def test_list_profiles(self, config):
        """Test that profiles appear as they are written."""
        assert config.list_profiles() == []
        config.set("seed", 1, profile="a")
        assert config.list_profiles() == ["a"]
        assert config.get_profile("a") == {"seed": 1}

    def test_malformed_yaml(self, tmp_path):
        """Test that a broken config file is a parse error."""
        cfg = tmp_path / "cfg"
        cfg.mkdir()
        (cfg / "config.yaml").write_text("default: [unclosed\n")
        with pytest.raises(ParseError):
            ConfigManager(config_dir=cfg)

    def test_not_a_mapping(self, tmp_path):
        """Test that the top level must map profiles."""
        cfg = tmp_path / "cfg"
        cfg.mkdir()
        (cfg / "config.yaml").write_text("- just\n- a list\n")
        with pytest.raises(ParseError, match="mapping"):
            ConfigManager(config_dir=cfg)


class TestCoercion:
    """Tests for get_int and get_float."""

    def test_scientific_int(self, config, monkeypatch):
        """Test that 1e3 reads as an integer."""
        monkeypatch.setenv("SINKLESS_LB_NODE_BUDGET", "1e3")
        assert config.get_int("node_budget") == 1000

    def test_bad_int(self, config, monkeypatch):
        """Test that a non-number is a config error."""
        monkeypatch.setenv("SINKLESS_LB_SEED", "abc")
        with pytest.raises(ConfigError, match="seed"):
            config.get_int("seed")

    def test_none_stays_none(self, config):
        """Test that an unset time budget stays None."""
        assert config.get_float("time_budget") is None

    def test_bad_float(self, config, monkeypatch):
        """Test that a non-number slack is a config error."""
        monkeypatch.setenv("SINKLESS_LB_SLACK", "lots")
        with pytest.raises(ConfigError):
            config.get_float("slack")


class TestRunSettings:
    """Tests for RunSettings.resolve."""

    def test_from_defaults(self, config):
        """Test settings built from the defaults alone."""
        settings = RunSettings.resolve(config)
        assert settings.node_budget == 2 ** 27
        assert settings.seed == 0
        assert settings.samples == 2000
        assert settings.time_budget is None

    def test_overrides_win(self, config):
        """Test that non-None overrides replace config values."""
        config.set("seed", 9)
        settings = RunSettings.resolve(config, seed=None, node_budget=100)
        assert settings.seed == 9
        assert settings.node_budget == 100

    def test_time_budget_sets_deadline(self, config):
        """Test that a time budget becomes the deadline."""
        settings = RunSettings.resolve(config, time_budget=-1.0)
        with pytest.raises(TimeBudgetExceeded):
            settings.deadline.check()


class TestDeadline:
    """Tests for Deadline."""

    def test_unbounded(self):
        """Test that no budget never expires."""
        Deadline(None).check()

    def test_expired(self):
        """Test that a negative budget is already spent."""
        with pytest.raises(TimeBudgetExceeded):
            Deadline(-1).check()

    def test_generous(self):
        """Test that a long budget does not expire immediately."""
        Deadline(3600).check()
