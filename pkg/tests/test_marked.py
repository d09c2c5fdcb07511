"""
Tests for marked.py - reflect/split on marked trees, the G_T build, distance
correctness and the canonical sequence.
"""

import pytest

from sinkless_lb.error_handler import CapacityError, InvariantViolation, PreconditionError, UsageError
from sinkless_lb.marked import (
    MarkedTree,
    build_input_tree,
    canonical_sequence,
    check_distance_correct,
    default_order,
    final_graph_report,
    labels_say_adjacent,
    neighbor_mismatches,
    neighbor_oracle,
    preorder,
    presentation_order,
    reflect,
    split,
    symmetric_view_report,
)


# =============================================================================
# OPERATIONS
# =============================================================================

class TestSeedAndReflect:
    """Tests for MarkedTree.seed, reflect and split."""

    def test_seed(self):
        """Test the two-node seed graph."""
        G = MarkedTree.seed(3)
        assert len(G) == 2
        assert G.is_seed
        assert G.port_to(0, 1) == 1

    def test_seed_delta_too_small(self):
        """Test that delta must be at least 3."""
        with pytest.raises(UsageError):
            MarkedTree.seed(2)

    def test_reflect_seed(self):
        """Test the first reflection at the 1-leaf of the seed."""
        G = reflect(MarkedTree.seed(3), 0)
        assert len(G) == 4
        assert G.labels[0] == "*1"
        assert sorted(G.labels[w] for w in G.neighbours(0)) == ["12", "22", "32"]
        assert [G.labels[G.ports[0][p]] for p in (1, 2, 3)] == ["12", "22", "32"]
        assert not G.marked

    def test_reflect_non_leaf(self):
        """Test that only leaves can be reflected."""
        G = reflect(MarkedTree.seed(3), 0)
        with pytest.raises(PreconditionError, match="not a leaf"):
            reflect(G, 0)

    def test_reflect_marked(self):
        """Test that marked nodes cannot be reflected."""
        G = split(MarkedTree.seed(3), 1)
        with pytest.raises(PreconditionError, match="marked"):
            reflect(G, 1)

    def test_split_twice(self):
        """Test that a node is marked only once."""
        G = split(MarkedTree.seed(3), 0)
        assert G.is_marked(0)
        with pytest.raises(PreconditionError):
            split(G, 0)

    def test_missing_node(self):
        """Test that operations on unknown ids fail."""
        with pytest.raises(PreconditionError):
            split(MarkedTree.seed(3), 99)


class TestNeighborOracle:
    """Tests for the label-based neighbor oracle."""

    def test_labels_say_adjacent(self):
        """Test agreement outside stars and position 0."""
        assert labels_say_adjacent("*12", "312")
        assert labels_say_adjacent("112", "111")
        assert not labels_say_adjacent("112", "122")

    def test_seed(self):
        """Test the oracle on the seed edge."""
        assert neighbor_oracle(MarkedTree.seed(3), 0, 1)

    def test_same_node(self):
        """Test that a node is not its own neighbour."""
        with pytest.raises(PreconditionError):
            neighbor_oracle(MarkedTree.seed(3), 0, 0)

    def test_every_snapshot(self, t2):
        """Test that the oracle matches adjacency throughout the build."""
        trace = build_input_tree(t2, keep_snapshots=True)
        assert len(trace.snapshots) == len(t2) + 1
        for G in trace.snapshots:
            assert neighbor_mismatches(G) == []


# =============================================================================
# BUILD
# =============================================================================

class TestBuildInputTree:
    """Tests for build_input_tree."""

    def test_final_graph(self, t2_trace):
        """Test size, marking and mirrors of G_T."""
        G = t2_trace.final
        assert len(G) == 40
        assert len(G.marked) == 40
        assert len(t2_trace.mirrors) == 14
        assert all(G.degree(v) == 3 for v in t2_trace.mirror_nodes)

    def test_final_graph_report(self, t2_trace):
        """Test the summary of the final graph."""
        assert final_graph_report(t2_trace) == {
            "nodes": 40, "split_nodes": 40, "all_marked": True, "ok": True,
        }

    def test_one_step_per_node(self, t2, t2_trace):
        """Test that every node of T produces one step."""
        assert len(t2_trace.steps) == len(t2)
        assert t2_trace.steps[0].op == "reflect"
        assert len(t2_trace.components) == len(t2)

    def test_preorder_gives_same_graph(self, t2, t2_trace):
        """Test that the build order does not change the labeled result."""
        other = build_input_tree(t2, order=preorder(t2))
        assert other.final.label_form() == t2_trace.final.label_form()

    def test_order_must_respect_parents(self, t2):
        """Test that children may not come before their parent."""
        order = list(range(len(t2)))
        order[0], order[1] = order[1], order[0]
        with pytest.raises(UsageError):
            build_input_tree(t2, order=order)

    def test_invalid_tree_refused(self, reflect_split_tree):
        """Test that an invalid T is refused unless explicitly allowed."""
        with pytest.raises(PreconditionError, match="property-5"):
            build_input_tree(reflect_split_tree)

    def test_corrupted_labels(self, t2):
        """Test that swapped reflect labels break the build at a named step."""
        a, b = t2.find("122"), t2.find("1132")
        bad = t2.relabel({a: "1132", b: "122"})
        with pytest.raises(InvariantViolation) as exc_info:
            build_input_tree(bad, require_valid=False)
        assert exc_info.value.clause == "unique-label"
        assert exc_info.value.step == 4

    def test_short_leaf_label(self, t2):
        """Test that a leaf label too short for its parent's star fails at the parent's step."""
        bad = t2.relabel({t2.find("111*1"): "1*1"})
        parent = bad.find("*1132")
        with pytest.raises(InvariantViolation, match="no symbol at position 4") as exc_info:
            build_input_tree(bad, require_valid=False)
        assert exc_info.value.clause == "component-bijection"
        assert exc_info.value.step == default_order(bad).index(parent) + 1

    def test_node_budget(self, t2):
        """Test that the node budget is checked before building."""
        with pytest.raises(CapacityError):
            build_input_tree(t2, node_budget=10)


# =============================================================================
# DISTANCE CORRECTNESS
# =============================================================================

class TestDistanceCorrect:
    """Tests for check_distance_correct."""

    def test_t2_full(self, t2):
        """Test the minimum split distance of T_2."""
        report = check_distance_correct(t2, D=2)
        assert report.minimum == 2
        assert report.correct is True
        assert check_distance_correct(t2, D=3).correct is False

    def test_trace_minimum(self, t2_trace):
        """Test that the trace records the same minimum."""
        assert t2_trace.minimum_distance == 2

    def test_reflect_split_pair(self, reflect_split_tree):
        """Test that the R -> S tree only reaches distance 1."""
        report = check_distance_correct(reflect_split_tree, D=2, require_valid=False)
        assert report.minimum == 1
        assert report.correct is False

    def test_unknown_mode(self, t2):
        """Test that only full and path modes exist."""
        with pytest.raises(UsageError):
            check_distance_correct(t2, mode="sideways")

    def test_report_dict(self, t2):
        """Test the serialized report."""
        data = check_distance_correct(t2, D=2).to_dict()
        assert data["mode"] == "full"
        assert data["correct"] is True

    @pytest.mark.slow
    def test_f_of_t2_path_mode(self, f_t2):
        """Test that F(T_2) is distance-4 correct along its first-child path."""
        report = check_distance_correct(f_t2, D=4, mode="path")
        assert report.minimum >= 4
        assert report.correct


# =============================================================================
# CANONICAL SEQUENCE
# =============================================================================

class TestCanonicalSequence:
    """Tests for canonical_sequence and presentation_order."""

    def test_length_and_order(self, t2, t2_trace):
        """Test that mirrors follow the reflect nodes by layer, then label."""
        seq = canonical_sequence(t2_trace)
        assert len(seq) == 14
        G = t2_trace.final
        assert G.labels[seq[0]].endswith("1")
        by_mirror = {m: u for u, m in t2_trace.mirrors.items()}
        assert [t2.labels[by_mirror[m]] for m in seq[:6]] == ["1", "12", "122", "222", "322", "1132"]

    def test_presentation_is_reversed(self, t2, t2_trace):
        """Test that the root's mirror is presented last."""
        order = presentation_order(t2_trace)
        assert order == list(reversed(canonical_sequence(t2_trace)))
        assert order[-1] == t2_trace.mirrors[t2.root]

    def test_symmetric_views(self, t2_trace):
        """Test that every presented node sees identical branches within its view set."""
        checks = symmetric_view_report(t2_trace, 2)
        assert len(checks) == 13
        assert all(c.ok for c in checks)
