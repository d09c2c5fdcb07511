"""
Tests for olocal.py - instances, views, sessions and the validity checker.
"""

import math

import pytest
from pyrsistent import pmap

from sinkless_lb.algorithms import OnlineAlgorithm, Port1Det, UniformSingleOut
from sinkless_lb.error_handler import InvariantViolation, ProtocolError, UsageError
from sinkless_lb.marked import MarkedTree, reflect
from sinkless_lb.olocal import (
    Decision,
    Instance,
    OnlineSession,
    Orientation,
    Transcript,
    ball,
    reveal_view,
    run,
    validate_sinkless_orientation,
)


# =============================================================================
# INSTANCES
# =============================================================================

class TestInstance:
    """Tests for Instance."""

    def test_from_edges(self, path5):
        """Test ports and neighbours of a path."""
        assert path5.n == 5
        assert path5.neighbours(2) == [1, 3]
        assert path5.port_to(2, 3) == 2
        assert path5.degree_sequence() == [1, 1, 2, 2, 2]

    def test_edges_listed_once(self, path5):
        """Test that each edge appears once with u < w."""
        assert path5.edges() == [(0, 1, 1, 1), (1, 2, 2, 1), (2, 2, 3, 1), (3, 2, 4, 1)]

    def test_port_gap(self):
        """Test that ports must be exactly 1..deg."""
        with pytest.raises(UsageError):
            Instance(pmap({0: pmap({2: 1}), 1: pmap({1: 0})}))

    def test_port_reused(self):
        """Test that a port cannot carry two edges."""
        with pytest.raises(UsageError, match="used twice"):
            Instance.from_edges([(0, 1, 1, 1), (0, 1, 2, 1)])

    def test_dangling_edge(self):
        """Test that every edge needs its reverse."""
        with pytest.raises(UsageError):
            Instance(pmap({0: pmap({1: 1}), 1: pmap({1: 2}), 2: pmap({1: 1})}))

    def test_from_marked(self):
        """Test that a reflected tree with full ports converts."""
        G = reflect(MarkedTree.seed(3), 0)
        inst = Instance.from_marked(G)
        assert inst.degree(0) == 3

    def test_networkx_ports(self, path5):
        """Test that exported edges carry both port numbers."""
        g = path5.to_networkx()
        assert g.edges[1, 2]["ports"] == {1: 2, 2: 1}


# =============================================================================
# VIEWS
# =============================================================================

class TestRevealView:
    """Tests for ball and reveal_view."""

    def test_ball(self, path5):
        """Test distances within the radius."""
        assert ball(path5, 2, 1) == {2: 0, 1: 1, 3: 1}
        assert ball(path5, 0, 0) == {0: 0}

    def test_tokens_and_ports(self, path5):
        """Test the radius-1 view in the middle of a path."""
        view = reveal_view(path5, 2, 1)
        assert len(view.nodes) == 3
        assert view.center == 0
        assert view.degree == 2
        assert view.nodes[0].ports == ((1, 2), (2, 1))
        assert view.nodes[1].ports == (None, (0, 1))
        assert view.nodes[2].ports == ((0, 2), None)

    def test_boundary_nodes_have_degree(self, star3):
        """Test that nodes at distance exactly L carry their degree."""
        view = reveal_view(star3, 1, 1)
        center_of_star = view.neighbour(view.center, 1)
        assert view.nodes[center_of_star].degree == 3
        assert view.nodes[center_of_star].ports.count(None) == 2

    def test_tokens_are_stable(self, path5):
        """Test that a node keeps its token across queries."""
        transcript = Transcript(1)
        first = reveal_view(path5, 2, 1, transcript)
        second = reveal_view(path5, 3, 1, transcript)
        token_of_3 = first.nodes[first.center].ports[1][0]
        assert second.center == token_of_3
        assert len(transcript.tokens) == 4

    def test_no_id_leak(self):
        """Test that symmetric nodes get identical fresh views."""
        inst = Instance.from_edges([(0, 1, 1, 1), (2, 1, 3, 1)])
        assert reveal_view(inst, 0, 2) == reveal_view(inst, 2, 2)

    def test_unknown_node(self, path5):
        """Test that querying outside the instance fails."""
        with pytest.raises(UsageError):
            reveal_view(path5, 9, 1)

    def test_negative_radius(self, path5):
        """Test that the radius must be non-negative."""
        with pytest.raises(UsageError):
            reveal_view(path5, 0, -1)


# =============================================================================
# DECISIONS
# =============================================================================

class TestDecision:
    """Tests for Decision."""

    def test_single_out(self):
        """Test one outgoing port."""
        d = Decision.single_out(3, 2)
        assert d.out_ports == {2}
        assert d.at(2) is Orientation.OUT
        assert d.to_list() == ["in", "out", "in"]

    def test_all_in(self):
        """Test the sink decision."""
        assert Decision.all_in(3).is_all_in

    def test_port_out_of_range(self):
        """Test that ports beyond the degree are refused."""
        with pytest.raises(UsageError):
            Decision.from_out_ports(2, [3])


# =============================================================================
# SESSIONS
# =============================================================================

class _WrongArity(OnlineAlgorithm):
    name = "wrong-arity"

    def decide(self, state, view, rng):
        return Decision.single_out(view.degree + 1, 1), state


class _NotADecision(OnlineAlgorithm):
    name = "not-a-decision"

    def decide(self, state, view, rng):
        return "out", state


class TestOnlineSession:
    """Tests for OnlineSession and run."""

    def test_port1_det(self, path5):
        """Test that port1-det sends port 1 out everywhere."""
        _, decisions = run(path5, [2, 0, 4], Port1Det())
        assert all(d.out_ports == {1} for d in decisions.values())

    def test_transcript(self, path5):
        """Test records and revealed tokens."""
        transcript, _ = run(path5, [2, 4], Port1Det())
        assert transcript.queried == [2, 4]
        records = transcript.to_dicts()
        assert records[0]["revealed_tokens"] == [0, 1, 2]
        assert records[1]["revealed_tokens"] == [3]
        assert records[1]["token"] == 3

    def test_seen_edges_grow(self, path5):
        """Test that seen nodes and edges accumulate over queries."""
        session = OnlineSession(path5, Port1Det(), locality=1)
        session.present(2)
        assert session.transcript.seen_nodes == {1, 2, 3}
        assert session.transcript.edge_seen(1, 2)
        assert not session.transcript.edge_seen(0, 1)
        session.present(0)
        assert session.transcript.edge_seen(0, 1)
        assert session.transcript.seen_nodes == {0, 1, 2, 3}

    def test_peek_records_nothing(self, path5):
        """Test that peek leaves the transcript untouched."""
        session = OnlineSession(path5, Port1Det(), locality=1)
        view = session.peek(2)
        assert view.center == 0
        assert len(session.transcript.tokens) == 0
        assert session.transcript.records == []

    def test_present_twice(self, path5):
        """Test that decisions are final."""
        session = OnlineSession(path5, Port1Det(), locality=1)
        session.present(2)
        with pytest.raises(UsageError, match="already presented"):
            session.present(2)

    def test_same_seed_same_run(self, star3):
        """Test that a seed fixes every random choice."""
        first = run(star3, [0, 1, 2], UniformSingleOut(), seed=5)
        second = run(star3, [0, 1, 2], UniformSingleOut(), seed=5)
        assert first[0].to_dicts() == second[0].to_dicts()

    @pytest.mark.parametrize("algorithm", [_WrongArity(), _NotADecision()])
    def test_protocol_errors(self, path5, algorithm):
        """Test that malformed decisions are rejected."""
        with pytest.raises(ProtocolError):
            run(path5, [2], algorithm)

    def test_replace_instance_same_views(self, path5):
        """Test replacing the instance with an identical one."""
        session = OnlineSession(path5, Port1Det(), locality=1)
        session.present(2)
        session.replace_instance(Instance(path5.ports))
        assert session.transcript.queried == [2]

    def test_replace_instance_changed_view(self, path5):
        """Test that a rewiring visible to the algorithm is refused."""
        session = OnlineSession(path5, Port1Det(), locality=1)
        session.present(2)
        moved = Instance.from_edges([(0, 1, 1, 1), (1, 2, 2, 1), (2, 2, 3, 2), (3, 1, 4, 1)])
        with pytest.raises(InvariantViolation) as exc_info:
            session.replace_instance(moved)
        assert exc_info.value.clause == "transcript-replay"


class TestUniformFrequencies:
    """Tests for the output distribution of uniform-single-out."""

    def test_each_port_one_third(self, star3):
        """Test that each port of a degree-3 node goes out about a third of the time."""
        runs = 10_000
        counts = {1: 0, 2: 0, 3: 0}
        for seed in range(runs):
            _, decisions = run(star3, [0], UniformSingleOut(), seed=seed)
            (port,) = decisions[0].out_ports
            counts[port] += 1
        sigma = math.sqrt(runs * (1 / 3) * (2 / 3))
        for port, count in counts.items():
            assert abs(count - runs / 3) <= 4 * sigma, counts


# =============================================================================
# VALIDITY
# =============================================================================

class TestValidateSinklessOrientation:
    """Tests for validate_sinkless_orientation."""

    def test_valid_partial(self, star3):
        """Test that one outgoing edge at the center is fine."""
        report = validate_sinkless_orientation(star3, {0: Decision.single_out(3, 1)})
        assert report.ok
        assert report.to_dict() == {"ok": True, "violations": []}

    def test_sink(self, star3):
        """Test a decided degree-3 sink."""
        report = validate_sinkless_orientation(star3, {0: Decision.all_in(3)})
        assert report.kinds() == {"sink"}

    def test_conflict(self, path5):
        """Test two ends claiming the same edge."""
        decisions = {1: Decision.single_out(2, 2), 2: Decision.single_out(2, 1)}
        report = validate_sinkless_orientation(path5, decisions)
        assert "conflict" in report.kinds()
        assert report.violations[0].nodes == (1, 2)

    def test_trapped(self, star3):
        """Test an undecided center whose every edge is already pointed at it."""
        decisions = {leaf: Decision.single_out(1, 1) for leaf in (1, 2, 3)}
        report = validate_sinkless_orientation(star3, decisions)
        assert report.kinds() == {"trapped"}
        assert report.violations[0].nodes == (0,)

    def test_low_degree_never_trapped(self, path5):
        """Test that degree < 3 nodes may absorb edges."""
        decisions = {0: Decision.single_out(1, 1), 4: Decision.single_out(1, 1)}
        assert validate_sinkless_orientation(path5, decisions).ok

    def test_wrong_degree(self, star3):
        """Test that a decision must cover the node's ports."""
        with pytest.raises(UsageError):
            validate_sinkless_orientation(star3, {0: Decision.single_out(2, 1)})
