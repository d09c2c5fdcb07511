"""
The online-LOCAL model: ported instances, L-hop views and the validity checker.

Algorithms never see instance ids. Each node they learn about gets an opaque
integer token, handed out in first-reveal order and stable for the whole run,
so an algorithm can tell which nodes of a new view it has met before.
"""

import logging
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Set, Tuple

import networkx as nx
from pyrsistent import PMap, pmap

from .error_handler import InvariantViolation, PreconditionError, ProtocolError, UsageError
from .marked import MarkedTree

logger = logging.getLogger(__name__)

Edge = Tuple[int, int, int, int]


# =============================================================================
# INSTANCES
# =============================================================================

@dataclass(frozen=True)
class Instance:
    """
    An undirected tree with port numbers.

    ``ports[v]`` maps each port of v to the neighbour behind it; the ports at
    every node are exactly 1..deg(v).
    """

    ports: PMap

    def __post_init__(self):
        for v, row in self.ports.items():
            if sorted(row) != list(range(1, len(row) + 1)):
                raise UsageError(f"ports at node {v} are {sorted(row)}, expected 1..{len(row)}")
            for p, w in row.items():
                if w not in self.ports or v not in self.ports[w].values():
                    raise UsageError(f"edge {v}:{p} -> {w} has no matching endpoint")

    @classmethod
    def from_edges(cls, edges: Iterable[Edge]) -> "Instance":
        """Build from (u, port at u, w, port at w) tuples."""
        rows: Dict[int, Dict[int, int]] = {}
        for u, pu, w, pw in edges:
            for a, pa, b in ((u, pu, w), (w, pw, u)):
                row = rows.setdefault(a, {})
                if pa in row:
                    raise UsageError(f"port {pa} used twice at node {a}")
                row[pa] = b
        return cls(pmap({v: pmap(row) for v, row in rows.items()}))

    @classmethod
    def from_marked(cls, G: MarkedTree) -> "Instance":
        """
        Reuse a marked tree's ports directly.

        Raises:
            UsageError: If some node has gaps in its ports; pad the tree first
        """
        return cls(pmap({v: pmap(row) for v, row in G.ports.items()}))

    @property
    def n(self) -> int:
        return len(self.ports)

    def __len__(self) -> int:
        return len(self.ports)

    def nodes(self) -> List[int]:
        return sorted(self.ports)

    def degree(self, v: int) -> int:
        return len(self.ports[v])

    def neighbour(self, v: int, port: int) -> int:
        return self.ports[v][port]

    def neighbours(self, v: int) -> List[int]:
        return [w for _, w in sorted(self.ports[v].items())]

    def port_to(self, v: int, w: int) -> int:
        return _back_port(self.ports, v, w)

    def edges(self) -> List[Edge]:
        """Every edge once as (u, port at u, w, port at w) with u < w."""
        out = []
        for u in sorted(self.ports):
            for p, w in sorted(self.ports[u].items()):
                if u < w:
                    out.append((u, p, w, self.port_to(w, u)))
        return out

    def degree_sequence(self) -> List[int]:
        return sorted(len(row) for row in self.ports.values())

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.ports)
        for u, p, w, q in self.edges():
            g.add_edge(u, w, ports={u: p, w: q})
        return g

    def replace_ports(self, updates: Mapping[int, Mapping[int, int]]) -> "Instance":
        """A new instance with the given port rows overwritten."""
        ports = self.ports
        for v, row in updates.items():
            ports = ports.set(v, pmap(row))
        return Instance(ports)


def _back_port(ports: Mapping[int, Mapping[int, int]], v: int, w: int) -> int:
    for p, x in ports[v].items():
        if x == w:
            return p
    raise PreconditionError(f"nodes {v} and {w} are not adjacent")


# =============================================================================
# VIEWS
# =============================================================================

class TokenRegistry:
    """Stable node -> token assignment, consecutive in first-reveal order."""

    def __init__(self):
        self._tokens: Dict[int, int] = {}

    def token(self, node: int) -> int:
        if node not in self._tokens:
            self._tokens[node] = len(self._tokens)
        return self._tokens[node]

    def known(self, node: int) -> bool:
        return node in self._tokens

    def copy(self) -> "TokenRegistry":
        other = TokenRegistry()
        other._tokens = dict(self._tokens)
        return other

    def __len__(self) -> int:
        return len(self._tokens)


class ViewNode(NamedTuple):
    distance: int
    degree: int
    ports: Tuple[Optional[Tuple[int, int]], ...]


@dataclass(frozen=True)
class View:
    """
    The radius-L ball around a queried node, over tokens.

    ``nodes[t].ports[p-1]`` is (neighbour token, neighbour port), or None
    when that neighbour lies outside the ball.
    """

    center: int
    radius: int
    nodes: Mapping[int, ViewNode]

    @property
    def degree(self) -> int:
        return self.nodes[self.center].degree

    def neighbour(self, token: int, port: int) -> Optional[int]:
        entry = self.nodes[token].ports[port - 1]
        return None if entry is None else entry[0]

    def to_dict(self) -> Dict:
        return {
            "center": self.center,
            "radius": self.radius,
            "nodes": {
                t: {"distance": n.distance, "degree": n.degree, "ports": [list(p) if p else None for p in n.ports]}
                for t, n in sorted(self.nodes.items())
            },
        }


def ball(inst: Instance, v: int, L: int) -> Dict[int, int]:
    """Nodes within distance L of v, in breadth-first order with neighbours in port order."""
    dist = {v: 0}
    queue = deque([v])
    while queue:
        x = queue.popleft()
        if dist[x] == L:
            continue
        for w in inst.neighbours(x):
            if w not in dist:
                dist[w] = dist[x] + 1
                queue.append(w)
    return dist


def reveal_view(inst: Instance, v: int, L: int, prior: Optional["Transcript"] = None) -> View:
    """
    The L-hop view of v. Nodes already seen keep their tokens.

    Degrees and ports are given for every node in the ball, including those at
    distance exactly L.
    """
    if v not in inst.ports:
        raise UsageError(f"node {v} is not in the instance")
    if L < 0:
        raise UsageError(f"locality must be non-negative, got {L}")
    tokens = prior.tokens if prior is not None else TokenRegistry()
    dist = ball(inst, v, L)
    for x in dist:
        tokens.token(x)
    nodes = {}
    for x, d in dist.items():
        entries = []
        for p in range(1, inst.degree(x) + 1):
            w = inst.neighbour(x, p)
            entries.append((tokens.token(w), inst.port_to(w, x)) if w in dist else None)
        nodes[tokens.token(x)] = ViewNode(d, inst.degree(x), tuple(entries))
    return View(tokens.token(v), L, pmap(nodes))


# =============================================================================
# DECISIONS
# =============================================================================

class Orientation(str, Enum):
    OUT = "out"
    IN = "in"


@dataclass(frozen=True)
class Decision:
    """One orientation per incident port; entry p-1 belongs to port p."""

    orientations: Tuple[Orientation, ...]

    @classmethod
    def single_out(cls, degree: int, port: int) -> "Decision":
        return cls.from_out_ports(degree, [port])

    @classmethod
    def from_out_ports(cls, degree: int, ports: Iterable[int]) -> "Decision":
        out = set(ports)
        bad = [p for p in out if not 1 <= p <= degree]
        if bad:
            raise UsageError(f"ports {sorted(bad)} outside 1..{degree}")
        return cls(tuple(Orientation.OUT if p in out else Orientation.IN for p in range(1, degree + 1)))

    @classmethod
    def all_in(cls, degree: int) -> "Decision":
        return cls(tuple([Orientation.IN] * degree))

    @property
    def degree(self) -> int:
        return len(self.orientations)

    @property
    def out_ports(self) -> FrozenSet[int]:
        return frozenset(p for p, o in enumerate(self.orientations, start=1) if o is Orientation.OUT)

    @property
    def is_all_in(self) -> bool:
        return not self.out_ports

    def at(self, port: int) -> Orientation:
        return self.orientations[port - 1]

    def to_list(self) -> List[str]:
        return [o.value for o in self.orientations]


def check_decision(algorithm: str, decision, degree: int) -> Decision:
    """
    Raises:
        ProtocolError: If the decision does not orient exactly the incident ports
    """
    if not isinstance(decision, Decision):
        raise ProtocolError(algorithm, f"returned {type(decision).__name__}, expected Decision")
    if decision.degree != degree:
        raise ProtocolError(algorithm, f"decision covers {decision.degree} ports, node has {degree}")
    if any(not isinstance(o, Orientation) for o in decision.orientations):
        raise ProtocolError(algorithm, "decision holds a value that is not an orientation")
    return decision


# =============================================================================
# TRANSCRIPTS AND SESSIONS
# =============================================================================

class QueryRecord(NamedTuple):
    step: int
    node: int
    token: int
    revealed: Tuple[int, ...]
    view: View
    decision: Decision

    def to_dict(self) -> Dict:
        return {
            "step": self.step,
            "query": self.node,
            "token": self.token,
            "revealed_tokens": list(self.revealed),
            "decision": self.decision.to_list(),
        }


@dataclass
class Transcript:
    """Query records plus the nodes and edges the algorithm has seen."""

    locality: int
    tokens: TokenRegistry = field(default_factory=TokenRegistry)
    records: List[QueryRecord] = field(default_factory=list)
    seen_nodes: Set[int] = field(default_factory=set)
    seen_edges: Set[FrozenSet[int]] = field(default_factory=set)

    @property
    def queried(self) -> List[int]:
        return [r.node for r in self.records]

    def is_queried(self, v: int) -> bool:
        return any(r.node == v for r in self.records)

    def edge_seen(self, u: int, w: int) -> bool:
        return frozenset((u, w)) in self.seen_edges

    def observe(self, inst: Instance, v: int) -> None:
        """Extend the seen sets by the ball around a newly queried node."""
        dist = ball(inst, v, self.locality)
        self.seen_nodes.update(dist)
        for x in dist:
            for w in inst.neighbours(x):
                if w in dist:
                    self.seen_edges.add(frozenset((x, w)))

    def to_dicts(self) -> List[Dict]:
        return [r.to_dict() for r in self.records]


class OnlineSession:
    """
    One run of an algorithm, one presented node at a time.

    Decisions are final once made. ``replace_instance`` swaps the underlying
    instance after re-deriving every recorded view on the new one.
    """

    def __init__(self, inst: Instance, algorithm, locality: int, seed: int = 0):
        if locality < 0:
            raise UsageError(f"locality must be non-negative, got {locality}")
        self.instance = inst
        self.algorithm = algorithm
        self.locality = locality
        self.seed = seed
        self.rng = random.Random(seed)
        self.state = algorithm.init(inst.n, locality, seed)
        self.transcript = Transcript(locality)
        self.decisions: Dict[int, Decision] = {}

    @property
    def name(self) -> str:
        return getattr(self.algorithm, "name", type(self.algorithm).__name__)

    def peek(self, node: int) -> View:
        """The view the algorithm would get for node, without recording anything."""
        probe = Transcript(self.locality, tokens=self.transcript.tokens.copy())
        return reveal_view(self.instance, node, self.locality, probe)

    def present(self, node: int, decision: Optional[Decision] = None) -> Decision:
        """
        Reveal node to the algorithm and record its decision.

        A decision passed in is recorded instead of asking the algorithm; the
        oracle adversary uses this to follow one branch.
        """
        if node in self.decisions:
            raise UsageError(f"node {node} was already presented")
        before = len(self.transcript.tokens)
        view = reveal_view(self.instance, node, self.locality, self.transcript)
        revealed = tuple(range(before, len(self.transcript.tokens)))
        if decision is None:
            decision, self.state = self.algorithm.decide(self.state, view, self.rng)
        check_decision(self.name, decision, view.degree)
        step = len(self.transcript.records) + 1
        self.transcript.records.append(QueryRecord(step, node, view.center, revealed, view, decision))
        self.transcript.observe(self.instance, node)
        self.decisions[node] = decision
        logger.debug("step %d: node %d -> out ports %s", step, node, sorted(decision.out_ports))
        return decision

    def replace_instance(self, inst: Instance) -> None:
        """
        Raises:
            InvariantViolation: If some recorded view differs on the new instance
        """
        replay = Transcript(self.locality)
        for record in self.transcript.records:
            view = reveal_view(inst, record.node, self.locality, replay)
            if view != record.view:
                raise InvariantViolation(record.step, "transcript-replay", f"view of node {record.node} changed")
            replay.records.append(record)
            replay.observe(inst, record.node)
        self.instance = inst
        self.transcript = replay


def run(
    inst: Instance,
    queries: Sequence[int],
    algorithm,
    seed: int = 0,
    locality: int = 1,
) -> Tuple[Transcript, Dict[int, Decision]]:
    """Present queries in order; partial sequences are allowed."""
    session = OnlineSession(inst, algorithm, locality, seed)
    for v in queries:
        session.present(v)
    return session.transcript, dict(session.decisions)


# =============================================================================
# VALIDITY
# =============================================================================

class Violation(NamedTuple):
    kind: str
    nodes: Tuple[int, ...]
    message: str

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "nodes": list(self.nodes), "message": self.message}


class OrientationReport(NamedTuple):
    violations: List[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> Set[str]:
        return {v.kind for v in self.violations}

    def to_dict(self) -> Dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def validate_sinkless_orientation(inst: Instance, decisions: Mapping[int, Decision]) -> OrientationReport:
    """
    Check a partial output on a tree instance.

    Reports conflicts on shared edges, decided sinks of degree at least 3, and
    undecided regions that cannot be completed. No violations means the partial
    output extends to a valid sinkless orientation.
    """
    violations: List[Violation] = []
    for v, d in sorted(decisions.items()):
        if d.degree != inst.degree(v):
            raise UsageError(f"decision at node {v} covers {d.degree} ports, node has {inst.degree(v)}")

    for u, p, w, q in inst.edges():
        if u in decisions and w in decisions and decisions[u].at(p) is decisions[w].at(q):
            violations.append(Violation("conflict", (u, w), f"both ends say {decisions[u].at(p).value}"))

    for v, d in sorted(decisions.items()):
        if inst.degree(v) >= 3 and d.is_all_in:
            violations.append(Violation("sink", (v,), f"all {d.degree} edges point in"))

    undecided = [v for v in inst.nodes() if v not in decisions]
    region_graph = inst.to_networkx().subgraph(undecided)
    for region in nx.connected_components(region_graph):
        if not any(_can_absorb(inst, decisions, x) for x in region):
            nodes = tuple(sorted(region))
            violations.append(Violation("trapped", nodes, f"{len(nodes)} undecided nodes with no way out"))
    return OrientationReport(violations)


def _can_absorb(inst: Instance, decisions: Mapping[int, Decision], x: int) -> bool:
    """An undecided node that needs no edge from inside its region."""
    if inst.degree(x) < 3:
        return True
    for w in inst.neighbours(x):
        if w in decisions and decisions[w].at(inst.port_to(w, x)) is Orientation.IN:
            return True
    return False
