"""
Tests for serialization.py - JSON, JSON Lines and DOT output.
"""

import json

import pytest

from sinkless_lb.error_handler import ParseError, UsageError
from sinkless_lb.ftransform import f_implicit
from sinkless_lb.olocal import run
from sinkless_lb.algorithms import Port1Det
from sinkless_lb.serialization import (
    implicit_to_dict,
    instance_from_dict,
    instance_to_dict,
    instance_to_dot,
    load_instance,
    load_tree,
    marked_from_dict,
    marked_to_dict,
    marked_to_dot,
    read_jsonl,
    save_instance,
    save_tree,
    trace_records,
    transcript_records,
    tree_from_dict,
    tree_to_dict,
    tree_to_dot,
    write_jsonl,
)


class TestTrees:
    """Tests for construction tree files."""

    def test_save_and_load(self, t2, temp_path):
        """Test that a saved tree loads back with the same nodes."""
        path = temp_path / "t2.json"
        save_tree(t2, path)
        loaded = load_tree(path)
        assert tree_to_dict(loaded) == tree_to_dict(t2)
        assert loaded.root == t2.root

    def test_missing_file(self, temp_path):
        """Test that a missing file is a parse error."""
        with pytest.raises(ParseError, match="no such file"):
            load_tree(temp_path / "absent.json")

    def test_not_json(self, temp_path):
        """Test that a non-JSON file is a parse error."""
        path = temp_path / "broken.json"
        path.write_text("{b: 3")
        with pytest.raises(ParseError):
            load_tree(path)

    def test_missing_keys(self):
        """Test that a tree needs b and nodes."""
        with pytest.raises(ParseError):
            tree_from_dict({"b": 3})

    def test_bad_ids(self):
        """Test that ids must be 0..n-1."""
        data = {"b": 3, "nodes": [{"id": 1, "label": "1", "parent": None, "children": []}]}
        with pytest.raises(ParseError, match="0..n-1"):
            tree_from_dict(data)

    def test_implicit_f(self, t2):
        """Test the layer listing of the implicit F(T_2)."""
        data = implicit_to_dict(f_implicit(t2))
        assert len(data["layers"]) == 28
        assert data["total"] == 2484488
        assert data["layers"][5]["pattern"] == "_2132"


class TestMarked:
    """Tests for marked tree files."""

    def test_round_trip(self, t2_trace):
        """Test that G_T survives a dict round trip."""
        G = t2_trace.final
        again = marked_from_dict(json.loads(json.dumps(marked_to_dict(G))))
        assert again.label_form() == G.label_form()
        assert again.marked == G.marked

    def test_malformed(self):
        """Test that missing keys are a parse error."""
        with pytest.raises(ParseError):
            marked_from_dict({"nodes": [{"id": 0}]})


class TestInstances:
    """Tests for instance files."""

    def test_save_and_load(self, path5, temp_path):
        """Test that an instance reloads with the same ports."""
        path = temp_path / "inst.json"
        save_instance(path5, path)
        assert load_instance(path) == path5

    def test_dict_shape(self, star3):
        """Test the n/edges layout."""
        assert instance_to_dict(star3) == {
            "n": 4, "edges": [[0, 1, 1, 1], [0, 2, 2, 1], [0, 3, 3, 1]],
        }

    def test_declared_n_mismatch(self):
        """Test that a wrong node count is refused."""
        with pytest.raises(UsageError):
            instance_from_dict({"n": 5, "edges": [[0, 1, 1, 1]]})

    def test_short_edge(self):
        """Test that edges need four fields."""
        with pytest.raises(ParseError):
            instance_from_dict({"edges": [[0, 1, 1]]})


class TestJsonLines:
    """Tests for JSON Lines records."""

    def test_write_and_read(self, temp_path):
        """Test that records come back in order."""
        path = temp_path / "records.jsonl"
        assert write_jsonl(path, [{"step": 1}, {"step": 2}]) == 2
        assert list(read_jsonl(path)) == [{"step": 1}, {"step": 2}]

    def test_bad_line(self, temp_path):
        """Test that a broken line names its line number."""
        path = temp_path / "records.jsonl"
        path.write_text('{"step": 1}\nnot json\n')
        with pytest.raises(ParseError, match=":2:"):
            list(read_jsonl(path))

    def test_missing(self, temp_path):
        """Test that reading a missing file is a parse error."""
        with pytest.raises(ParseError):
            list(read_jsonl(temp_path / "absent.jsonl"))

    def test_trace_records(self, t2, t2_trace):
        """Test one record per build step with measured distances attached."""
        records = trace_records(t2_trace)
        assert len(records) == len(t2)
        assert any("distance" in r for r in records)

    def test_transcript_records(self, path5):
        """Test that transcript records list the queried nodes."""
        transcript, _ = run(path5, [2, 4], Port1Det())
        assert [r["query"] for r in transcript_records(transcript)] == [2, 4]


class TestDot:
    """Tests for DOT export."""

    def test_tree(self, t2):
        """Test that construction trees export as digraphs."""
        text = tree_to_dot(t2)
        assert text.startswith("digraph")
        assert "*12" in text

    def test_marked(self, t2_trace):
        """Test that marked trees export as undirected graphs."""
        assert marked_to_dot(t2_trace.final).startswith("graph")

    def test_instance_highlight(self, star3):
        """Test that highlighted nodes are filled."""
        text = instance_to_dot(star3, highlight=[0])
        assert text.startswith("graph")
        assert "filled" in text
