"""
Tests for the sinkless-lb command line.
"""

import json

import pytest

from sinkless_lb.cli.main import cli
from sinkless_lb.serialization import save_tree


def _json(result):
    assert result.exit_code == 0, result.output
    return json.loads(result.output)


# =============================================================================
# TREES
# =============================================================================

class TestValidateCommand:
    """Tests for the validate command."""

    def test_t2(self, runner):
        """Test that T_2 validates."""
        result = runner.invoke(cli, ["validate", "t2"])
        assert result.exit_code == 0, result.output

    def test_json(self, runner):
        """Test the JSON report."""
        data = _json(runner.invoke(cli, ["-o", "json", "validate", "t2", "--delta", "4"]))
        assert data["ok"] is True

    def test_literal_delta4_fails(self, runner):
        """Test that a failed check exits 1."""
        result = runner.invoke(cli, ["-o", "json", "validate", "t2-literal", "--delta", "4"])
        assert result.exit_code == 1

    def test_invalid_tree_file(self, runner, tmp_path, reflect_split_tree):
        """Test that a readable but unsolid tree exits 1 and names the failed check."""
        path = tmp_path / "rs.json"
        save_tree(reflect_split_tree, path)
        result = runner.invoke(cli, ["validate", str(path)])
        assert result.exit_code == 1
        assert "property-5" in result.output

    def test_missing_file(self, runner, tmp_path):
        """Test that a missing tree file exits 2."""
        result = runner.invoke(cli, ["validate", str(tmp_path / "absent.json")])
        assert result.exit_code == 2
        assert "no such file" in result.output

    def test_malformed_file(self, runner, tmp_path):
        """Test that a broken tree file exits 2."""
        path = tmp_path / "broken.json"
        path.write_text("[1, 2")
        assert runner.invoke(cli, ["validate", str(path)]).exit_code == 2

    def test_bad_delta(self, runner):
        """Test that delta outside 3..9 exits 2."""
        assert runner.invoke(cli, ["validate", "t2", "--delta", "2"]).exit_code == 2


class TestTransformCommand:
    """Tests for the transform command."""

    def test_implicit(self, runner):
        """Test the layer listing of F(T_2)."""
        data = _json(runner.invoke(cli, ["-o", "json", "transform", "t2"]))
        assert len(data["layers"]) == 28
        assert data["total"] == 2484488

    def test_explicit_prefix(self, runner, tmp_path):
        """Test materializing the first layers and saving them."""
        out = tmp_path / "f.json"
        data = _json(runner.invoke(
            cli, ["-o", "json", "transform", "t2", "--explicit", "--layer-limit", "5", "--out", str(out)],
        ))
        assert len(data["nodes"]) == 5
        assert json.loads(out.read_text()) == data

    def test_explicit_over_budget(self, runner):
        """Test that materializing F(T_2) for delta 4 exits 3."""
        result = runner.invoke(cli, ["transform", "t2", "--delta", "4", "--explicit"])
        assert result.exit_code == 3
        assert "Over budget" in result.output

    def test_node_budget_option(self, runner):
        """Test that --node-budget applies to materialization."""
        result = runner.invoke(cli, ["--node-budget", "3", "transform", "t2", "--explicit", "--layer-limit", "5"])
        assert result.exit_code == 3


class TestLabelingsCommand:
    """Tests for the labelings command."""

    def test_t2(self, runner):
        """Test that the lemmas hold on T_2."""
        data = _json(runner.invoke(cli, ["-o", "json", "labelings", "t2"]))
        assert all(found == [] for found in data.values())

    def test_edges(self, runner):
        """Test the per-edge listing."""
        data = _json(runner.invoke(cli, ["-o", "json", "labelings", "t2", "--edges"]))
        assert len(data) == 53


# =============================================================================
# INPUT TREES
# =============================================================================

@pytest.mark.integration
class TestBuildCommands:
    """Tests for build-input, check-distance and canonical-seq."""

    def test_build_input(self, runner, tmp_path):
        """Test the G_T summary and the step trace file."""
        trace = tmp_path / "steps.jsonl"
        data = _json(runner.invoke(cli, ["-o", "json", "build-input", "t2", "--trace", str(trace)]))
        assert len(data["graph"]["nodes"]) == 40
        assert len(trace.read_text().splitlines()) == 54

    def test_build_input_dot(self, runner):
        """Test DOT output of G_T."""
        result = runner.invoke(cli, ["-o", "dot", "build-input", "t2"])
        assert result.exit_code == 0
        assert "graph" in result.output

    def test_check_distance(self, runner):
        """Test that T_2 is distance-2 but not distance-3 correct."""
        assert runner.invoke(cli, ["check-distance", "t2", "-D", "2"]).exit_code == 0
        assert runner.invoke(cli, ["check-distance", "t2", "-D", "3"]).exit_code == 1

    def test_canonical_seq(self, runner):
        """Test the canonical mirror sequence."""
        rows = _json(runner.invoke(cli, ["-o", "json", "canonical-seq", "t2"]))
        assert len(rows) == 14
        assert [r["reflect"] for r in rows[:3]] == ["1", "12", "122"]

    def test_time_budget(self, runner):
        """Test that an exhausted time budget exits 3."""
        result = runner.invoke(cli, ["--time-budget", "-1", "build-input", "t2"])
        assert result.exit_code == 3


# =============================================================================
# ADVERSARY
# =============================================================================

@pytest.mark.integration
class TestAttackCommand:
    """Tests for the attack command."""

    def test_port1_det(self, runner, tmp_path):
        """Test a claimed failure of port1-det with both output files."""
        out, inst = tmp_path / "transcript.jsonl", tmp_path / "instance.json"
        data = _json(runner.invoke(
            cli,
            ["-o", "json", "attack", "t2", "--alg", "port1-det", "--out", str(out), "--instance-out", str(inst)],
        ))
        assert data["claim"] is True
        assert data["verdict"]["ok"] is False
        assert len(out.read_text().splitlines()) == 14
        assert json.loads(inst.read_text())["n"] == 120

    def test_oracle(self, runner):
        """Test the exact mode for uniform-single-out."""
        data = _json(runner.invoke(cli, ["-o", "json", "attack", "t2", "--alg", "uniform-single-out", "--mode", "oracle"]))
        assert data["event_probability"] == f"1/{3 ** 13}"

    def test_unknown_algorithm(self, runner):
        """Test that an unknown algorithm exits 2."""
        assert runner.invoke(cli, ["attack", "t2", "--alg", "telepathy"]).exit_code == 2

    def test_small_n(self, runner):
        """Test that an n below delta * |G_T| exits 2."""
        assert runner.invoke(cli, ["attack", "t2", "--alg", "port1-det", "--n", "50"]).exit_code == 2


class TestBoundCommand:
    """Tests for the bound command."""

    def test_small_n(self, runner):
        """Test that n = 1e6 at delta 4 only gives radius 1."""
        data = _json(runner.invoke(cli, ["-o", "json", "bound", "--n", "1e6", "--delta", "4"]))
        assert data["radius_lower_bound"] == 1
        assert data["i"] is None

    def test_tower(self, runner):
        """Test a tower that clears i = 2."""
        data = _json(runner.invoke(cli, ["-o", "json", "bound", "--n", "3^162", "--delta", "3"]))
        assert data["i"] == 2
        assert data["radius_lower_bound"] == 2

    def test_unparseable(self, runner):
        """Test that a bad n exits 2."""
        assert runner.invoke(cli, ["bound", "--n", "lots"]).exit_code == 2


# =============================================================================
# CONFIG
# =============================================================================

class TestConfigCommands:
    """Tests for the config command group."""

    def test_set_get_list(self, runner):
        """Test that a stored value is read back and marked as from the profile."""
        assert runner.invoke(cli, ["config", "set", "seed", "7"]).exit_code == 0
        assert "seed: 7" in runner.invoke(cli, ["config", "get", "seed"]).output
        listing = runner.invoke(cli, ["config", "list"]).output
        assert "seed: 7 (profile)" in listing
        assert "delta: 3 (default)" in listing

    def test_profiles(self, runner):
        """Test that profiles appear once something is stored in them."""
        assert "No profiles configured" in runner.invoke(cli, ["config", "profiles"]).output
        runner.invoke(cli, ["-p", "big", "config", "set", "delta", "4"])
        assert "big" in runner.invoke(cli, ["config", "profiles"]).output

    def test_delete(self, runner):
        """Test deleting a stored key."""
        runner.invoke(cli, ["config", "set", "samples", "10"])
        assert "Deleted" in runner.invoke(cli, ["config", "delete", "samples"]).output
        assert "not found" in runner.invoke(cli, ["config", "delete", "samples"]).output

    def test_unknown_key(self, runner):
        """Test that unknown keys are refused with exit 2."""
        assert runner.invoke(cli, ["config", "set", "colour", "blue"]).exit_code == 2

    def test_env_overrides(self, runner):
        """Test that an environment variable wins over the stored profile."""
        runner.invoke(cli, ["config", "set", "delta", "4"])
        result = runner.invoke(cli, ["config", "get", "delta"], env={"SINKLESS_LB_DELTA": "5"})
        assert "delta: 5" in result.output

    def test_bad_env_value(self, runner):
        """Test that a non-integer seed in the environment exits 2."""
        result = runner.invoke(cli, ["validate", "t2"], env={"SINKLESS_LB_SEED": "abc"})
        assert result.exit_code == 2

    @pytest.mark.parametrize("delta", [3, 4])
    def test_profile_delta(self, runner, delta):
        """Test that the configured delta picks the generated tree."""
        runner.invoke(cli, ["-p", "d", "config", "set", "delta", str(delta)])
        data = _json(runner.invoke(cli, ["-p", "d", "-o", "json", "transform", "t2", "--explicit", "--layer-limit", "1"]))
        assert len(data["nodes"]) == 1
        assert data["b"] == delta


class TestLogging:
    """Tests for the logging options."""

    def test_log_file(self, runner, tmp_path):
        """Test that --verbose --log-file records the attack steps."""
        log = tmp_path / "logs" / "run.log"
        result = runner.invoke(cli, ["-v", "--log-file", str(log), "attack", "t2", "--alg", "port1-det"])
        assert result.exit_code == 0, result.output
        assert "attacking port1-det" in log.read_text()
