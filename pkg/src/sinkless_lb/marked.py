"""
Marked trees, reflection and split, and the input tree G_T induced by a construction tree.

Graph nodes carry persistent integer ids that survive every later operation;
copies made by a reflection get fresh ids in the order (copy index, original
id). Trees are immutable: each operation returns a new ``MarkedTree`` that
shares structure with its predecessor through pyrsistent maps.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import networkx as nx
from pyrsistent import PMap, PSet, pmap, pset

from .config_manager import Deadline
from .ctree import ConstructionTree, NodeKind, PathStep, validate
from .error_handler import DomainError, InvariantViolation, PreconditionError, UsageError, require_budget
from .ftransform import ImplicitFTree, f_materialize
from .labelings import EdgeLabeling, extend_labelings, path_labelings
from .labelstr import DIGITS, STAR, is_independent

logger = logging.getLogger(__name__)

PortMap = Mapping[int, Mapping[int, int]]


@dataclass(frozen=True)
class MarkedTree:
    """
    A labeled tree with a set of marked nodes and port numbers.

    ``ports[v]`` maps each port number used at v to the neighbour behind it.
    Port numbers are distinct within 1..delta but may have gaps on copies.
    """

    delta: int
    labels: PMap
    ports: PMap
    marked: PSet = field(default_factory=pset)
    next_id: int = 0

    @classmethod
    def seed(cls, delta: int) -> "MarkedTree":
        """Two unmarked nodes "1" (id 0) and "2" (id 1) joined by port 1 at both ends."""
        if delta < 3:
            raise UsageError(f"delta must be at least 3, got {delta}")
        return cls(
            delta=delta,
            labels=pmap({0: "1", 1: "2"}),
            ports=pmap({0: pmap({1: 1}), 1: pmap({1: 0})}),
            next_id=2,
        )

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        return f"MarkedTree(delta={self.delta}, nodes={len(self)}, marked={len(self.marked)})"

    @cached_property
    def by_label(self) -> Dict[str, int]:
        return {label: v for v, label in self.labels.items()}

    def find(self, label: str) -> Optional[int]:
        return self.by_label.get(label)

    def nodes(self) -> List[int]:
        return sorted(self.labels)

    def degree(self, v: int) -> int:
        return len(self.ports[v])

    def neighbours(self, v: int) -> List[int]:
        """Neighbours of v in port order."""
        return [w for _, w in sorted(self.ports[v].items())]

    def port_to(self, v: int, w: int) -> int:
        for p, x in self.ports[v].items():
            if x == w:
                return p
        raise UsageError(f"nodes {v} and {w} are not adjacent")

    def is_marked(self, v: int) -> bool:
        return v in self.marked

    def is_leaf(self, v: int) -> bool:
        return len(self.ports[v]) == 1

    def node_class(self, v: int) -> str:
        """"1" or "2", the symbol at position 0 of v's label."""
        return self.labels[v][-1]

    def is_two_leaf(self, v: int) -> bool:
        return self.is_leaf(v) and self.node_class(v) == "2"

    @property
    def is_seed(self) -> bool:
        return len(self) == 2 and not self.marked and set(self.labels.values()) == {"1", "2"}

    def unmarked_component(self, v: int) -> FrozenSet[int]:
        """Nodes reachable from unmarked v through unmarked nodes."""
        if v in self.marked:
            raise PreconditionError(f"node {v} ('{self.labels[v]}') is marked")
        seen = {v}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            for w in self.ports[u].values():
                if w not in seen and w not in self.marked:
                    seen.add(w)
                    queue.append(w)
        return frozenset(seen)

    def unmarked_components(self) -> List[FrozenSet[int]]:
        """All maximal unmarked components, ordered by smallest id."""
        out = []
        covered = set()
        for v in self.nodes():
            if v in self.marked or v in covered:
                continue
            comp = self.unmarked_component(v)
            covered |= comp
            out.append(comp)
        return out

    def edges(self) -> List[Tuple[int, int, int, int]]:
        """(u, port at u, w, port at w) per edge with u < w."""
        out = []
        for u, row in self.ports.items():
            for p, w in row.items():
                if u < w:
                    out.append((u, p, w, self.port_to(w, u)))
        return sorted(out)

    def to_networkx(self, nodes: Optional[Iterable[int]] = None) -> nx.Graph:
        """Undirected graph, restricted to nodes if given; edges carry the port at each end."""
        keep = set(self.labels) if nodes is None else set(nodes)
        g = nx.Graph()
        for v in sorted(keep):
            g.add_node(v, label=self.labels[v], marked=v in self.marked)
        for u in sorted(keep):
            for p, w in self.ports[u].items():
                if w in keep and u < w:
                    g.add_edge(u, w, ports={u: p, w: self.port_to(w, u)})
        return g

    def restrict(self, keep: Iterable[int]) -> "MarkedTree":
        """The subgraph on keep, dropping edges that leave it."""
        keep = set(keep)
        labels = pmap({v: self.labels[v] for v in keep})
        ports = pmap({v: pmap({p: w for p, w in self.ports[v].items() if w in keep}) for v in keep})
        marked = pset(v for v in self.marked if v in keep)
        return MarkedTree(self.delta, labels, ports, marked, self.next_id)

    def label_form(self) -> Tuple[FrozenSet[str], FrozenSet[str], FrozenSet[Tuple[str, int, str, int]]]:
        """Labels, marked labels and ported label edges: equal iff the trees agree up to ids."""
        return (
            frozenset(self.labels.values()),
            frozenset(self.labels[v] for v in self.marked),
            frozenset(
                (self.labels[u], p, self.labels[w], q) for u, p, w, q in self.edges()
            ) | frozenset((self.labels[w], q, self.labels[u], p) for u, p, w, q in self.edges()),
        )


# =============================================================================
# OPERATIONS
# =============================================================================

def _require_node(G: MarkedTree, v: int) -> None:
    if v not in G.labels:
        raise PreconditionError(f"node {v} does not exist")


def reflect(G: MarkedTree, v: int) -> MarkedTree:
    """
    Reflection at the unmarked 2-leaf v.

    The unmarked component H of v is copied delta-1 times; copy i prefixes the
    labels of every node but v with digit i (the original is copy 1), v gets a
    "*" prefix and port i at v leads into copy i. On the two-node seed graph
    the 1-leaf is accepted as well.

    Raises:
        PreconditionError: If v is marked or not a qualifying leaf
    """
    _require_node(G, v)
    label = G.labels[v]
    if v in G.marked:
        raise PreconditionError(f"cannot reflect at marked node {v} ('{label}')")
    if not G.is_leaf(v):
        raise PreconditionError(f"cannot reflect at node {v} ('{label}'): degree {G.degree(v)}, not a leaf")
    if G.node_class(v) != "2" and not G.is_seed:
        raise PreconditionError(f"cannot reflect at 1-leaf {v} ('{label}') outside the seed graph")

    component = G.unmarked_component(v)
    others = sorted(component - {v})
    delta = G.delta

    copies: Dict[int, List[int]] = {w: [w] for w in others}
    next_id = G.next_id
    for _ in range(2, delta + 1):
        for w in others:
            copies[w].append(next_id)
            next_id += 1

    labels = G.labels.evolver()
    ports = G.ports.evolver()
    for w in others:
        text = G.labels[w]
        row = G.ports[w]
        for i, c in enumerate(copies[w], start=1):
            labels[c] = DIGITS[i - 1] + text
            if i > 1:
                ports[c] = pmap({
                    p: (x if x == v else copies[x][i - 1])
                    for p, x in row.items()
                    if x in component
                })
    labels[v] = STAR + label

    (_, x0), = G.ports[v].items()
    if x0 in component:
        ports[v] = pmap({i: copies[x0][i - 1] for i in range(1, delta + 1)})

    out = MarkedTree(delta, labels.persistent(), ports.persistent(), G.marked, next_id)
    logger.debug("reflected at %d ('%s'): %d -> %d nodes", v, label, len(G), len(out))
    return out


def split(G: MarkedTree, v: int) -> MarkedTree:
    """
    Split at v: mark it.

    Raises:
        PreconditionError: If v is already marked
    """
    _require_node(G, v)
    if v in G.marked:
        raise PreconditionError(f"node {v} ('{G.labels[v]}') is already marked")
    return MarkedTree(G.delta, G.labels, G.ports, G.marked.add(v), G.next_id)


# =============================================================================
# NEIGHBOR LEMMA
# =============================================================================

def labels_say_adjacent(x: str, y: str) -> bool:
    """Digits agree at every position 1..len-1 where neither label has a *."""
    for j in range(1, len(x)):
        a, b = x[-1 - j], y[-1 - j]
        if a != STAR and b != STAR and a != b:
            return False
    return True


def neighbor_oracle(G: MarkedTree, v: int, w: int) -> bool:
    """
    Adjacency of two unmarked nodes predicted from their labels alone.

    Raises:
        PreconditionError: If v == w, either node is marked, or the labels differ in length
    """
    _require_node(G, v)
    _require_node(G, w)
    if v == w:
        raise PreconditionError("neighbor oracle needs two distinct nodes")
    if v in G.marked or w in G.marked:
        raise PreconditionError("neighbor oracle is defined on unmarked nodes")
    x, y = G.labels[v], G.labels[w]
    if len(x) != len(y):
        raise PreconditionError(f"labels '{x}' and '{y}' differ in length")
    return labels_say_adjacent(x, y)


def neighbor_mismatches(G: MarkedTree) -> List[Tuple[int, int]]:
    """Unmarked equal-length pairs where the oracle and the actual adjacency disagree."""
    unmarked = [v for v in G.nodes() if v not in G.marked]
    out = []
    for a, v in enumerate(unmarked):
        x = G.labels[v]
        adjacent = set(G.ports[v].values())
        for w in unmarked[a + 1:]:
            y = G.labels[w]
            if len(x) == len(y) and labels_say_adjacent(x, y) != (w in adjacent):
                out.append((v, w))
    return out


# =============================================================================
# BUILD TRACE
# =============================================================================

class BuildStep(NamedTuple):
    index: int
    node: object
    label: str
    op: str
    target: int
    size: int

    def to_dict(self) -> Dict:
        return {
            "step": self.index,
            "node": self.node,
            "label": self.label,
            "op": self.op,
            "target": self.target,
            "size": self.size,
        }


class DistanceRecord(NamedTuple):
    step: int
    node: object
    label: str
    target: int
    distance: Optional[int]
    nearest: Optional[int]


@dataclass
class BuildTrace:
    """Everything recorded while building G_T."""

    tree: Union[ConstructionTree, ImplicitFTree]
    delta: int
    order: List[object]
    steps: List[BuildStep] = field(default_factory=list)
    mirrors: Dict[object, int] = field(default_factory=dict)
    components: List[Dict[int, FrozenSet[int]]] = field(default_factory=list)
    distances: List[DistanceRecord] = field(default_factory=list)
    snapshots: List[MarkedTree] = field(default_factory=list)
    final: Optional[MarkedTree] = None

    @property
    def mirror_nodes(self) -> List[int]:
        return sorted(self.mirrors.values())

    @property
    def minimum_distance(self) -> Optional[int]:
        found = [r.distance for r in self.distances if r.distance is not None]
        return min(found) if found else None


def default_order(T: ConstructionTree) -> List[int]:
    """Breadth-first order: node ids are already assigned that way."""
    return sorted(range(len(T)), key=lambda v: (T.layer[v], v))


def preorder(T: ConstructionTree) -> List[int]:
    """Depth-first preorder with children in stored order."""
    out = []
    stack = [T.root]
    while stack:
        v = stack.pop()
        out.append(v)
        stack.extend(reversed(T.children[v]))
    return out


def _check_order(T: ConstructionTree, order: Sequence[int]) -> List[int]:
    order = list(order)
    if sorted(order) != list(range(len(T))):
        raise UsageError("build order must list every node of T exactly once")
    position = {v: k for k, v in enumerate(order)}
    for v, p in enumerate(T.parent):
        if p is not None and position[p] > position[v]:
            raise UsageError(f"build order places node {v} before its parent {p}")
    return order


def _two_leaf_split(G: MarkedTree, comp: FrozenSet[int]) -> Tuple[FrozenSet[str], FrozenSet[str]]:
    two = frozenset(G.labels[u] for u in comp if G.is_two_leaf(u))
    rest = frozenset(G.labels[u] for u in comp if not G.is_two_leaf(u))
    return two, rest


def _locate(G: MarkedTree, label: str, step: int) -> int:
    target = G.find(label)
    if target is None:
        raise InvariantViolation(step, "unique-label", f"no node labeled '{label}'")
    return target


def _check_node_class(G: MarkedTree, target: int, kind: NodeKind, step: int) -> None:
    label = G.labels[target]
    if target in G.marked:
        raise InvariantViolation(step, "node-class", f"'{label}' is already marked")
    if kind is NodeKind.REFLECT:
        want = "1" if step == 1 else "2"
        if not G.is_leaf(target) or G.node_class(target) != want:
            raise InvariantViolation(step, "node-class", f"'{label}' is not an unmarked {want}-leaf")


def _check_independence(G: MarkedTree, step: int) -> None:
    if len(G.by_label) != len(G):
        raise InvariantViolation(step, "independence", "two nodes share a label")
    result = is_independent(G.labels.values())
    if not result.ok:
        x, y = result.witness
        raise InvariantViolation(step, "independence", f"'{x}' is a final substring of '{y}'")


def _check_degree_law(G: MarkedTree, components: Sequence[FrozenSet[int]], step: int) -> None:
    for comp in components:
        for u in comp:
            if G.node_class(u) != "2" or G.is_leaf(u):
                continue
            inside = sum(1 for w in G.ports[u].values() if w in comp)
            if inside != G.delta:
                raise InvariantViolation(
                    step, "degree-law", f"2-node '{G.labels[u]}' has degree {inside} in its component"
                )
    for u, _, w, _ in G.edges():
        if G.node_class(u) == G.node_class(w):
            raise InvariantViolation(
                step, "degree-law", f"'{G.labels[u]}' and '{G.labels[w]}' are adjacent {G.node_class(u)}-nodes"
            )


def _match_components(
    G: MarkedTree,
    components: Sequence[FrozenSet[int]],
    frontier: Iterable[int],
    lab: EdgeLabeling,
    step: int,
) -> Dict[int, FrozenSet[int]]:
    by_sets = {lab.edge(c): c for c in frontier}
    if len(by_sets) != len(components):
        raise InvariantViolation(
            step, "component-bijection", f"{len(components)} unmarked components for {len(by_sets)} open edges"
        )
    matched: Dict[int, FrozenSet[int]] = {}
    for comp in components:
        key = _two_leaf_split(G, comp)
        c = by_sets.get(key)
        if c is None or c in matched:
            raise InvariantViolation(
                step,
                "component-bijection",
                f"component with 2-leaves {sorted(key[0])} and others {sorted(key[1])} matches no open edge",
            )
        matched[c] = comp
    return matched


def _split_distance(G: MarkedTree, target: int) -> Tuple[Optional[int], Optional[int]]:
    comp = G.unmarked_component(target)
    leaves = [u for u in comp if u != target and G.is_two_leaf(u)]
    if not leaves:
        return None, None
    lengths = nx.single_source_shortest_path_length(G.to_networkx(comp), target)
    nearest = min(leaves, key=lambda u: (lengths[u], u))
    return lengths[nearest], nearest


def build_input_tree(
    T: ConstructionTree,
    order: Optional[Sequence[int]] = None,
    check_invariants: bool = True,
    keep_snapshots: bool = False,
    require_valid: bool = True,
    node_budget: Optional[int] = None,
    deadline: Optional[Deadline] = None,
) -> BuildTrace:
    """
    Run the reflect/split program of T from the seed graph.

    With ``check_invariants`` every step asserts that the target label is
    present exactly once, the target has the right class, labels stay
    independent, unmarked components match the open edges of T through
    psi/pi, and the 2-node degree law holds.

    Raises:
        PreconditionError: If require_valid is set and T does not validate
        InvariantViolation: On the first failing step and clause
        CapacityError: If G_T would exceed node_budget
    """
    if require_valid:
        report = validate(T)
        if not report.ok:
            names = ", ".join(c.name for c in report.failed())
            raise PreconditionError(f"construction tree does not validate: {names}")
    require_budget(len(T.split_nodes()), node_budget, "G_T nodes")
    order = default_order(T) if order is None else _check_order(T, order)
    lab = EdgeLabeling({}, {})

    G = MarkedTree.seed(T.b)
    trace = BuildTrace(tree=T, delta=T.b, order=list(order))
    if keep_snapshots:
        trace.snapshots.append(G)
    frontier = set()

    for step, t in enumerate(order, start=1):
        if deadline is not None:
            deadline.check()
        label = T.labels[t]
        kind = T.node_kind(t)
        target = _locate(G, label, step)
        if check_invariants:
            _check_node_class(G, target, kind, step)

        if kind is NodeKind.REFLECT:
            G = reflect(G, target)
            trace.mirrors[t] = target
            op = "reflect"
        else:
            if t != T.root:
                distance, nearest = _split_distance(G, target)
                trace.distances.append(DistanceRecord(step, t, label, target, distance, nearest))
            G = split(G, target)
            op = "split"
        require_budget(len(G), node_budget, "G_T nodes")

        frontier.discard(t)
        frontier.update(T.children[t])
        if check_invariants:
            try:
                extend_labelings(T, lab, t)
            except DomainError as e:
                raise InvariantViolation(step, "component-bijection", str(e)) from e
            components = G.unmarked_components()
            _check_independence(G, step)
            trace.components.append(_match_components(G, components, frontier, lab, step))
            _check_degree_law(G, components, step)
        trace.steps.append(BuildStep(step, t, label, op, target, len(G)))
        if keep_snapshots:
            trace.snapshots.append(G)
        logger.debug("step %d: %s at '%s' -> %d nodes", step, op, label, len(G))

    trace.final = G
    logger.info("built G_T: %d steps, %d nodes, %d mirrors", len(trace.steps), len(G), len(trace.mirrors))
    return trace


# =============================================================================
# DISTANCE CORRECTNESS
# =============================================================================

class DistanceReport(NamedTuple):
    mode: str
    minimum: Optional[int]
    D: Optional[int]
    records: List[DistanceRecord]

    @property
    def correct(self) -> Optional[bool]:
        if self.D is None:
            return None
        return self.minimum is None or self.minimum >= self.D

    def to_dict(self) -> Dict:
        return {
            "mode": self.mode,
            "minimum": self.minimum,
            "D": self.D,
            "correct": self.correct,
            "split_steps": len(self.records),
        }


def replay_path(
    path: Sequence[PathStep],
    delta: int,
    check_components: bool = True,
    deadline: Optional[Deadline] = None,
) -> List[DistanceRecord]:
    """
    Replay only the operations on a root-to-leaf path.

    After each step the graph is cut down to the unmarked component holding
    the next path node and its marked boundary, so nodes off the path are
    never processed further. Each component is compared with psi/pi of the
    path edge above its target.

    Raises:
        InvariantViolation: If a target is missing or a component disagrees with psi/pi
    """
    sets = path_labelings(path, delta) if check_components else []
    G = MarkedTree.seed(delta)
    records: List[DistanceRecord] = []
    for step, node in enumerate(path, start=1):
        if deadline is not None:
            deadline.check()
        target = _locate(G, node.label, step)
        if check_components and step > 1:
            got = _two_leaf_split(G, G.unmarked_component(target))
            if got != sets[step - 2]:
                raise InvariantViolation(
                    step, "component-labels",
                    f"component of '{node.label}' has 2-leaves {sorted(got[0])} and others {sorted(got[1])}",
                )
        if node.kind is NodeKind.REFLECT:
            G = reflect(G, target)
        else:
            if step > 1:
                distance, nearest = _split_distance(G, target)
                records.append(DistanceRecord(step, node.ref, node.label, target, distance, nearest))
            G = split(G, target)

        if step < len(path):
            nxt = G.find(path[step].label)
            if nxt is None or nxt in G.marked:
                raise InvariantViolation(step + 1, "unique-label", f"no unmarked node labeled '{path[step].label}'")
            comp = G.unmarked_component(nxt)
            boundary = {w for u in comp for w in G.ports[u].values()}
            G = G.restrict(comp | boundary)
    return records


def check_distance_correct(
    T: Union[ConstructionTree, ImplicitFTree],
    D: Optional[int] = None,
    mode: str = "full",
    require_valid: bool = True,
    node_budget: Optional[int] = None,
    deadline: Optional[Deadline] = None,
) -> DistanceReport:
    """
    Smallest distance from a split target to a 2-leaf of its unmarked component.

    ``full`` replays the whole build; ``path`` replays only the first-child
    root-to-leaf path and relies on the symmetry of split subtrees. T is
    distance-D-correct iff the minimum is at least D (a missing minimum means
    no split target ever shared a component with a 2-leaf).

    Raises:
        UsageError: On an unknown mode
        CapacityError: If full mode exceeds node_budget
    """
    if mode not in ("full", "path"):
        raise UsageError(f"mode must be 'full' or 'path', got '{mode}'")
    if mode == "path":
        records = replay_path(T.first_child_path(), T.b, check_components=require_valid, deadline=deadline)
    else:
        if isinstance(T, ImplicitFTree):
            T = f_materialize(T, node_budget=node_budget)
        trace = build_input_tree(
            T,
            check_invariants=require_valid,
            require_valid=require_valid,
            node_budget=node_budget,
            deadline=deadline,
        )
        records = trace.distances
    found = [r.distance for r in records if r.distance is not None]
    minimum = min(found) if found else None
    logger.info("%s distance check: minimum %s over %d split steps", mode, minimum, len(records))
    return DistanceReport(mode, minimum, D, records)


# =============================================================================
# CANONICAL SEQUENCE AND SYMMETRIC VIEWS
# =============================================================================

def canonical_sequence(trace: BuildTrace) -> List[int]:
    """
    Mirror nodes matched to the reflect nodes of T ordered by layer, then label.

    Raises:
        InvariantViolation: If some reflect label is a final substring of no
            mirror label, or of several
    """
    T = trace.tree
    G = trace.final
    reflect_nodes = sorted(T.reflect_nodes(), key=lambda v: (T.layer[v], T.labels[v]))
    mirrors = trace.mirror_nodes
    out = []
    for i, u in enumerate(reflect_nodes, start=1):
        suffix = T.labels[u]
        hits = [m for m in mirrors if G.labels[m].endswith(suffix)]
        if len(hits) != 1:
            raise InvariantViolation(
                i, "canonical-sequence", f"'{suffix}' is a final substring of {len(hits)} mirror labels"
            )
        if hits[0] != trace.mirrors[u]:
            raise InvariantViolation(i, "canonical-sequence", f"'{suffix}' matched a foreign mirror node")
        out.append(hits[0])
    return out


def presentation_order(trace: BuildTrace) -> List[int]:
    """The canonical sequence reversed: the order in which mirror nodes are queried."""
    return list(reversed(canonical_sequence(trace)))


def branch_form(ports: PortMap, root: int, port: int, allowed: Optional[FrozenSet[int]] = None) -> Tuple:
    """
    Ported canonical form of the branch behind ``port`` at root.

    A node's form is its port toward the parent plus the (port, child form)
    pairs of its children in port order. Ports at root itself are ignored.
    """
    first = ports[root][port]
    if allowed is not None and first not in allowed:
        return ()
    return _node_form(ports, first, root, allowed)


def _node_form(ports: PortMap, x: int, parent: int, allowed: Optional[FrozenSet[int]]) -> Tuple:
    back = None
    kids = []
    for p, y in sorted(ports[x].items()):
        if y == parent:
            back = p
        elif allowed is None or y in allowed:
            kids.append((p, _node_form(ports, y, x, allowed)))
    return (back, tuple(kids))


class ViewCheck(NamedTuple):
    index: int
    node: int
    label: str
    size: int
    branches: int
    ok: bool


def _ball_lengths(g: nx.Graph, sources: Iterable[int]) -> Dict[int, Dict[int, int]]:
    return {s: nx.single_source_shortest_path_length(g, s) for s in sources}


def symmetric_view_set(G: MarkedTree, order: Sequence[int], i: int, D: int, lengths=None) -> FrozenSet[int]:
    """
    W_i for the i-th presented node (1-based).

    A node belongs to W_i if its path from w_i avoids w_1..w_{i-1} and it lies
    within D-1 of some anchor reachable from w_i through w_1..w_i in hops of
    at most 2D-2.
    """
    g = G.to_networkx()
    earlier = set(order[: i - 1])
    candidates = list(order[:i])
    lengths = lengths or _ball_lengths(g, candidates)
    start = order[i - 1]

    anchors = {start}
    queue = deque([start])
    while queue:
        a = queue.popleft()
        for c in candidates:
            if c not in anchors and lengths[a].get(c, 1 << 60) <= 2 * D - 2:
                anchors.add(c)
                queue.append(c)

    near = {w for a in anchors for w, d in lengths[a].items() if d <= D - 1}
    parents = nx.predecessor(g, start)
    out = set()
    for w in near:
        x = w
        blocked = False
        while True:
            if x in earlier:
                blocked = True
                break
            if x == start:
                break
            x = parents[x][0]
        if not blocked:
            out.add(w)
    return frozenset(out)


def symmetric_view_report(trace: BuildTrace, D: int) -> List[ViewCheck]:
    """Compare the ported branch forms of G[W_i] at every presented node but the last."""
    G = trace.final
    order = presentation_order(trace)
    g = G.to_networkx()
    lengths = _ball_lengths(g, order)
    out = []
    for i in range(1, len(order)):
        w = order[i - 1]
        view = symmetric_view_set(G, order, i, D, lengths)
        forms = {branch_form(G.ports, w, p, view) for p in G.ports[w]}
        out.append(ViewCheck(i, w, G.labels[w], len(view), G.degree(w), len(forms) == 1))
    return out


def final_graph_report(trace: BuildTrace) -> Dict:
    G = trace.final
    split_count = len(trace.tree.split_nodes())
    all_marked = len(G.marked) == len(G)
    return {
        "nodes": len(G),
        "split_nodes": split_count,
        "all_marked": all_marked,
        "ok": all_marked and len(G) == split_count,
    }
