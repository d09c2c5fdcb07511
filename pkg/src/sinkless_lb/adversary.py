"""
The adversary: turn an input tree into a hard instance for a given algorithm.

The input tree G_T is padded to n nodes, its mirror nodes are presented in
reverse canonical order, and after each presentation the instance is rewired
so that every later mirror sits behind the port the algorithm is most likely
to orient outward. The rewiring only touches edges the algorithm has not
seen, so its transcript stays valid on the new instance.
"""

import logging
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Hashable, List, NamedTuple, Optional, Sequence, Tuple, Union

import networkx as nx
from networkx.algorithms.isomorphism.tree_isomorphism import tree_isomorphism
from pyrsistent import PMap, pmap

from .algorithms import OnlineAlgorithm
from .config_manager import DEFAULTS, Deadline
from .ctree import ConstructionTree
from .error_handler import CapacityError, InvariantViolation, UsageError
from .ftransform import Tower, power_tower_exceeds
from .marked import BuildTrace, MarkedTree, branch_form, build_input_tree, presentation_order
from .olocal import (
    Decision,
    Instance,
    OnlineSession,
    OrientationReport,
    Transcript,
    View,
    validate_sinkless_orientation,
)

logger = logging.getLogger(__name__)

MODES = ("single", "oracle", "sample")


# =============================================================================
# PADDING
# =============================================================================

def pad_graph(G: MarkedTree, delta: int, n: int) -> Instance:
    """
    Pad G_T to an n-node instance in which every original node has degree delta.

    Missing ports are filled in ascending order with new leaves (port 1 at the
    leaf). The remaining nodes form a path hanging from the first new leaf at
    its port 2. New ids continue after the largest id of G.

    Raises:
        UsageError: If n < delta * |G| or G uses ports outside 1..delta
    """
    if n < delta * len(G):
        raise UsageError(f"n must be at least {delta * len(G)} (delta * |G_T|), got {n}")
    rows: Dict[int, Dict[int, int]] = {v: dict(row) for v, row in G.ports.items()}
    for v, row in rows.items():
        if any(not 1 <= p <= delta for p in row):
            raise UsageError(f"node {v} uses ports {sorted(row)} outside 1..{delta}")

    next_id = max(rows) + 1
    first_leaf = None
    for v in sorted(G.ports):
        for p in range(1, delta + 1):
            if p in rows[v]:
                continue
            rows[v][p] = next_id
            rows[next_id] = {1: v}
            if first_leaf is None:
                first_leaf = next_id
            next_id += 1

    remaining = n - len(rows)
    if remaining > 0:
        if first_leaf is None:
            raise UsageError("every node of G already has degree delta; nothing to hang the path from")
        tail, port = first_leaf, 2
        for _ in range(remaining):
            rows[tail][port] = next_id
            rows[next_id] = {1: tail}
            tail, port = next_id, 2
            next_id += 1
    logger.debug("padded %d nodes to %d", len(G), len(rows))
    return Instance(pmap({v: pmap(row) for v, row in rows.items()}))


# =============================================================================
# SMALLEST FREQUENT EDGE
# =============================================================================

Weighted = Tuple[Fraction, Any]


class FrequentEdge(NamedTuple):
    """The chosen port with the out-probability of every port and the all-in share."""

    port: Optional[int]
    probabilities: Dict[int, Union[Fraction, float]]
    all_in: Union[Fraction, float]
    mode: str

    def to_dict(self) -> Dict:
        return {
            "port": self.port,
            "probabilities": {p: str(v) if isinstance(v, Fraction) else v for p, v in self.probabilities.items()},
            "all_in": str(self.all_in) if isinstance(self.all_in, Fraction) else self.all_in,
            "mode": self.mode,
        }


def _first_over(probabilities: Dict[int, Union[Fraction, float]], threshold) -> Optional[int]:
    for p in sorted(probabilities):
        if probabilities[p] >= threshold:
            return p
    return None


def _exact_frequent_edge(outcomes: Sequence[Tuple[Fraction, List]], degree: int, delta: int) -> FrequentEdge:
    total = sum((w for w, _ in outcomes), Fraction(0))
    all_in = Fraction(0)
    mass = {p: Fraction(0) for p in range(1, degree + 1)}
    for w, dist in outcomes:
        for decision, prob, _ in dist:
            if decision.is_all_in:
                all_in += w * prob
            for p in decision.out_ports:
                mass[p] += w * prob
    base = total - all_in
    if base == 0:
        return FrequentEdge(None, {p: Fraction(0) for p in mass}, Fraction(1), "oracle")
    probabilities = {p: m / base for p, m in mass.items()}
    share = all_in / total if total else Fraction(0)
    return FrequentEdge(_first_over(probabilities, Fraction(1, delta)), probabilities, share, "oracle")


def smallest_frequent_edge(
    algorithm: OnlineAlgorithm,
    states: Sequence[Weighted],
    view: View,
    delta: int,
    mode: str = "oracle",
    samples: int = DEFAULTS["samples"],
    slack: float = DEFAULTS["slack"],
    seed: Union[int, str] = 0,
) -> FrequentEdge:
    """
    The lowest port the algorithm orients outward with probability at least 1/delta.

    ``states`` holds weighted algorithm states that together make up the
    conditioning event. Decisions with no outgoing edge are left out of the
    frequency base. In sample mode the first state is forked ``samples``
    times and the threshold is 1/delta - slack.

    Raises:
        UsageError: If oracle mode is asked of an algorithm without a distribution
    """
    degree = view.degree
    if mode == "oracle":
        if not algorithm.supports_distribution:
            raise UsageError(f"{algorithm.name} has no exact decision distribution; use sample mode")
        outcomes = [(Fraction(w), algorithm.decision_distribution(s, view)) for w, s in states]
        return _exact_frequent_edge(outcomes, degree, delta)
    if mode != "sample":
        raise UsageError(f"unknown frequency mode '{mode}'")

    if samples < 1:
        raise UsageError(f"samples must be positive, got {samples}")
    _, state = states[0]
    counts = {p: 0 for p in range(1, degree + 1)}
    all_in = 0
    for k in range(samples):
        rng = random.Random(f"{seed}/{k}")
        decision, _ = algorithm.decide(algorithm.fork(state), view, rng)
        if decision.is_all_in:
            all_in += 1
        for p in decision.out_ports:
            counts[p] += 1
    base = samples - all_in
    if base == 0:
        return FrequentEdge(None, {p: 0.0 for p in counts}, 1.0, "sample")
    probabilities = {p: c / base for p, c in counts.items()}
    return FrequentEdge(_first_over(probabilities, 1 / delta - slack), probabilities, all_in / samples, "sample")


# =============================================================================
# SWAP REWIRING
# =============================================================================

class SwapResult(NamedTuple):
    instance: Instance
    future: List[int]
    xi: Dict[int, int]
    moved: int


def unseen_branches(inst: Instance, transcript: Transcript, v: int) -> Dict[int, FrozenSet[int]]:
    """
    G'[p] for every port p at v.

    The neighbour behind p starts its branch when it is unqueried, even if the
    edge to it is unseen; the branch grows over seen edges to unqueried nodes.
    """
    queried = set(transcript.queried)
    out = {}
    for p in range(1, inst.degree(v) + 1):
        root = inst.neighbour(v, p)
        if root in queried:
            out[p] = frozenset()
            continue
        region = {root}
        queue = deque([root])
        while queue:
            x = queue.popleft()
            for w in inst.neighbours(x):
                if w == v or w in region or w in queried:
                    continue
                if transcript.edge_seen(x, w):
                    region.add(w)
                    queue.append(w)
        out[p] = frozenset(region)
    return out


def _fixed_ports(inst: Instance, transcript: Transcript, x: int, region: FrozenSet[int], center: int) -> Dict[str, Any]:
    queried = set(transcript.queried)
    presented = frozenset(p for p, w in inst.ports[x].items() if w in queried)
    children = frozenset(p for p, w in inst.ports[x].items() if w in region)
    unseen = frozenset(
        p for p, w in inst.ports[x].items()
        if w != center and w not in queried and w not in region and not transcript.edge_seen(x, w)
    )
    return {"degree": inst.degree(x), "presented": presented, "children": children, "unseen": unseen}


def pair_branches(
    inst: Instance,
    transcript: Transcript,
    v: int,
    regions: Dict[int, FrozenSet[int]],
    q: int,
) -> Optional[Dict[int, int]]:
    """
    The swap map between G'[1] and G'[q], built by walking both branches in
    step and pairing children by port. None when no such map exists.
    """
    left, right = regions[1], regions[q]
    if len(left) != len(right):
        return None
    if not left:
        return {}
    xi: Dict[int, int] = {}
    stack = [(inst.neighbour(v, 1), v, inst.neighbour(v, q), v)]
    while stack:
        x, px, y, py = stack.pop()
        if inst.port_to(x, px) != inst.port_to(y, py):
            return None
        fx = _fixed_ports(inst, transcript, x, left, v)
        fy = _fixed_ports(inst, transcript, y, right, v)
        if fx != fy:
            return None
        xi[x], xi[y] = y, x
        for p in sorted(fx["children"]):
            cx, cy = inst.neighbour(x, p), inst.neighbour(y, p)
            if cx == px:
                continue
            stack.append((cx, x, cy, y))
    if len(xi) != len(left) + len(right):
        return None
    return xi


def swap_rewire(
    inst: Instance,
    transcript: Transcript,
    v: int,
    q: int,
    future: Sequence[int],
    step: int = 0,
) -> SwapResult:
    """
    Exchange what hangs off G'[1] and G'[q] at v.

    Each paired node hands its unseen edges, ports included, to its partner.
    Later entries of the presentation order that lie inside G' are mapped
    through the swap. q = 1 changes nothing.

    Raises:
        InvariantViolation: If no swap map exists or the rewired instance
            breaks the degree sequence
    """
    if q == 1:
        return SwapResult(inst, list(future), {}, 0)
    regions = unseen_branches(inst, transcript, v)
    xi = pair_branches(inst, transcript, v, regions, q)
    if xi is None:
        raise InvariantViolation(step, "swap-isomorphism", f"branches 1 and {q} at node {v} are not isomorphic")
    if branch_form(inst.ports, v, 1, regions[1]) != branch_form(inst.ports, v, q, regions[q]):
        raise InvariantViolation(step, "swap-isomorphism", f"branch forms 1 and {q} at node {v} differ")

    rows: Dict[int, Dict[int, int]] = {}

    def row(x: int) -> Dict[int, int]:
        if x not in rows:
            rows[x] = dict(inst.ports[x])
        return rows[x]

    moved = 0
    for x in sorted(regions[1]):
        y = xi[x]
        for p in sorted(_fixed_ports(inst, transcript, x, regions[1], v)["unseen"]):
            ux, uy = inst.neighbour(x, p), inst.neighbour(y, p)
            rx, ry = inst.port_to(ux, x), inst.port_to(uy, y)
            row(x)[p], row(uy)[ry] = uy, x
            row(y)[p], row(ux)[rx] = ux, y
            moved += 2

    rewired = inst.replace_ports(rows)
    if rewired.degree_sequence() != inst.degree_sequence():
        raise InvariantViolation(step, "degree-sequence", "rewiring changed the degree sequence")
    mapped = [xi.get(w, w) for w in future]
    logger.debug("step %d: swapped branches 1 and %d at node %d, %d edges moved", step, q, v, moved)
    return SwapResult(rewired, mapped, xi, moved)


# =============================================================================
# ATTACK
# =============================================================================

class SwapRecord(NamedTuple):
    step: int
    node: int
    port: Optional[int]
    swapped: bool
    moved: int
    note: str = ""

    def to_dict(self) -> Dict:
        return self._asdict()


class LedgerEntry(NamedTuple):
    """One step of the oracle ledger; probabilities are exact."""

    step: int
    node: int
    port: int
    probability: Fraction
    given_out: Fraction
    all_in: Fraction
    event: Fraction
    branches: int

    def to_dict(self) -> Dict:
        return {
            "step": self.step,
            "node": self.node,
            "port": self.port,
            "probability": str(self.probability),
            "given_out": str(self.given_out),
            "all_in": str(self.all_in),
            "event": str(self.event),
            "branches": self.branches,
        }


@dataclass
class HardInstanceRun:
    """The outcome of one attack."""

    delta: int
    D: int
    locality: int
    n: int
    mode: str
    algorithm: str
    seed: int
    claim: bool
    initial: Instance
    instance: Instance
    presentation: List[int]
    q_sequence: List[Optional[int]] = field(default_factory=list)
    swaps: List[SwapRecord] = field(default_factory=list)
    events: List[bool] = field(default_factory=list)
    ledger: List[LedgerEntry] = field(default_factory=list)
    structural: Dict[str, bool] = field(default_factory=dict)
    verdict: Optional[OrientationReport] = None
    decisions: Dict[int, Decision] = field(default_factory=dict)
    transcript: Optional[Transcript] = None
    failure_probability: Optional[Fraction] = None
    event_probability: Optional[Fraction] = None

    @property
    def violated(self) -> bool:
        return self.verdict is not None and not self.verdict.ok

    @property
    def all_events(self) -> bool:
        return bool(self.events) and all(self.events)

    @property
    def bound(self) -> Fraction:
        return Fraction(1, self.delta ** len(self.presentation))

    @property
    def unexpected_survival(self) -> bool:
        """Failure was certain but the output is valid."""
        if not self.claim:
            return False
        if self.mode == "oracle":
            return self.failure_probability is not None and self.failure_probability < self.bound
        return self.all_events and not self.violated

    def edge_list(self) -> List[Tuple[int, int, int, int]]:
        return self.instance.edges()

    def to_dict(self) -> Dict:
        return {
            "delta": self.delta,
            "D": self.D,
            "locality": self.locality,
            "n": self.n,
            "mode": self.mode,
            "algorithm": self.algorithm,
            "seed": self.seed,
            "claim": self.claim,
            "presentation": self.presentation,
            "q_sequence": self.q_sequence,
            "events": self.events,
            "swaps": [s.to_dict() for s in self.swaps],
            "ledger": [e.to_dict() for e in self.ledger],
            "structural": self.structural,
            "verdict": self.verdict.to_dict() if self.verdict else None,
            "failure_probability": None if self.failure_probability is None else str(self.failure_probability),
            "event_probability": None if self.event_probability is None else str(self.event_probability),
            "bound": str(self.bound),
            "edges": [list(e) for e in self.edge_list()],
        }


def _swap_step(
    session: OnlineSession,
    run: HardInstanceRun,
    v: int,
    q: Optional[int],
    future: List[int],
    step: int,
) -> List[int]:
    if q is None:
        run.swaps.append(SwapRecord(step, v, None, False, 0, "no frequent port"))
        return future
    if q == 1:
        run.swaps.append(SwapRecord(step, v, 1, False, 0))
        return future
    try:
        result = swap_rewire(session.instance, session.transcript, v, q, future, step)
    except InvariantViolation as e:
        if run.claim:
            raise
        logger.warning("step %d: %s; swap skipped", step, e)
        run.swaps.append(SwapRecord(step, v, q, False, 0, e.clause))
        return future
    session.replace_instance(result.instance)
    run.swaps.append(SwapRecord(step, v, q, True, result.moved))
    return result.future


def _structural_checks(run: HardInstanceRun, future: Sequence[int]) -> None:
    inst = run.instance
    last = future[-1]
    g = inst.to_networkx()
    inward = True
    for d, q in enumerate(run.q_sequence):
        if q is None:
            continue
        w = future[d]
        hop = nx.shortest_path(g, w, last)[1]
        if inst.port_to(w, hop) != q:
            inward = False
            break
    run.structural["forced-inward"] = inward
    run.structural["degree-sequence"] = inst.degree_sequence() == run.initial.degree_sequence()
    run.structural["unported-isomorphic"] = bool(tree_isomorphism(run.initial.to_networkx(), g))
    if run.claim:
        for name, ok in run.structural.items():
            if not ok:
                raise InvariantViolation(len(future), name, "structural check failed")


def attack(
    T: ConstructionTree,
    algorithm: OnlineAlgorithm,
    n: Optional[int] = None,
    seed: int = 0,
    mode: str = "single",
    locality: Optional[int] = None,
    D: Optional[int] = None,
    samples: int = DEFAULTS["samples"],
    slack: float = DEFAULTS["slack"],
    max_branches: int = DEFAULTS["max_branches"],
    trace: Optional[BuildTrace] = None,
    deadline: Optional[Deadline] = None,
) -> HardInstanceRun:
    """
    Build a hard instance for algorithm from T and present its mirror nodes.

    Modes:
        single: one realized run; the smallest frequent edge is taken from the
            exact distribution when the algorithm has one, else sampled
        sample: one realized run with sampled smallest frequent edges
        oracle: exact probabilities over every branch that keeps the event chain

    Failure is claimed when locality <= D - 1. D defaults to the minimum split
    distance of the build and locality to D - 1.

    Raises:
        UsageError: On an unknown mode or a too small n
        InvariantViolation: If a claimed run breaks a structural check
        CapacityError: If the oracle needs more than max_branches branches
    """
    if mode not in MODES:
        raise UsageError(f"unknown mode '{mode}', expected one of {', '.join(MODES)}")
    deadline = deadline or Deadline(None)
    trace = trace or build_input_tree(T, deadline=deadline)
    delta = trace.delta
    if D is None:
        D = trace.minimum_distance or 1
    if locality is None:
        locality = max(D - 1, 0)
    order = presentation_order(trace)
    n = n if n is not None else delta * len(trace.final)
    inst = pad_graph(trace.final, delta, n)

    run = HardInstanceRun(
        delta=delta,
        D=D,
        locality=locality,
        n=n,
        mode=mode,
        algorithm=getattr(algorithm, "name", type(algorithm).__name__),
        seed=seed,
        claim=locality <= D - 1,
        initial=inst,
        instance=inst,
        presentation=list(order),
    )
    logger.info(
        "attacking %s: delta=%d D=%d L=%d n=%d, %d mirrors, mode %s",
        run.algorithm, delta, D, locality, n, len(order), mode,
    )
    if mode == "oracle":
        _attack_oracle(run, algorithm, order, max_branches, deadline)
    else:
        _attack_realized(run, algorithm, order, samples, slack, deadline)

    if run.claim and mode == "oracle" and run.failure_probability < run.bound:
        raise InvariantViolation(len(order), "failure-bound", f"failure probability {run.failure_probability} < {run.bound}")
    logger.info(
        "attack on %s finished: %s",
        run.algorithm,
        f"failure probability {run.failure_probability}" if mode == "oracle"
        else ("violation" if run.violated else "survived"),
    )
    return run


def _attack_realized(
    run: HardInstanceRun,
    algorithm: OnlineAlgorithm,
    order: Sequence[int],
    samples: int,
    slack: float,
    deadline: Deadline,
) -> None:
    session = OnlineSession(run.initial, algorithm, run.locality, run.seed)
    future = list(order)
    exact = run.mode == "single" and algorithm.supports_distribution
    for i in range(1, len(future)):
        deadline.check()
        v = future[i - 1]
        view = session.peek(v)
        fe = smallest_frequent_edge(
            algorithm,
            [(Fraction(1), session.state)],
            view,
            run.delta,
            mode="oracle" if exact else "sample",
            samples=samples,
            slack=slack,
            seed=f"{run.seed}/{i}",
        )
        decision = session.present(v)
        run.q_sequence.append(fe.port)
        run.events.append(fe.port is not None and fe.port in decision.out_ports)
        future = _swap_step(session, run, v, fe.port, future, i)

    last = future[-1]
    run.structural["last-neighbours-presented"] = all(w in session.decisions for w in session.instance.neighbours(last))
    session.present(last)
    run.instance = session.instance
    run.presentation = future
    run.decisions = dict(session.decisions)
    run.transcript = session.transcript
    run.verdict = validate_sinkless_orientation(session.instance, session.decisions)
    _structural_checks(run, future)

    if run.claim and run.all_events:
        for d, q in enumerate(run.q_sequence):
            if q is not None and q not in run.decisions[future[d]].out_ports:
                raise InvariantViolation(d + 1, "forced-inward", f"node {future[d]} did not orient port {q} out")


class _Branch(NamedTuple):
    weight: Fraction
    state: Any
    decisions: PMap


def _branch_key(state: Any, decisions: PMap) -> Hashable:
    try:
        hash(state)
        return (state, decisions)
    except TypeError:
        return object()


def _attack_oracle(
    run: HardInstanceRun,
    algorithm: OnlineAlgorithm,
    order: Sequence[int],
    max_branches: int,
    deadline: Deadline,
) -> None:
    if not algorithm.supports_distribution:
        raise UsageError(f"{run.algorithm} has no exact decision distribution; use sample mode")
    session = OnlineSession(run.initial, algorithm, run.locality, run.seed)
    branches = [_Branch(Fraction(1), session.state, pmap())]
    future = list(order)
    failure = Fraction(0)

    for i in range(1, len(future)):
        deadline.check()
        v = future[i - 1]
        view = session.peek(v)
        outcomes = [(b, algorithm.decision_distribution(b.state, view)) for b in branches]
        fe = _exact_frequent_edge([(b.weight, dist) for b, dist in outcomes], view.degree, run.delta)
        total = sum((b.weight for b in branches), Fraction(0))
        all_in = sum(
            (b.weight * p for b, dist in outcomes for d, p, _ in dist if d.is_all_in), Fraction(0)
        )
        failure += all_in
        q = fe.port
        run.q_sequence.append(q)
        if q is None:
            branches = []
            break

        merged: Dict[Hashable, _Branch] = {}
        for b, dist in outcomes:
            for d, p, nxt in dist:
                if q not in d.out_ports or p == 0:
                    continue
                decisions = b.decisions.set(v, d)
                key = _branch_key(nxt, decisions)
                if key in merged:
                    old = merged[key]
                    merged[key] = old._replace(weight=old.weight + b.weight * p)
                else:
                    merged[key] = _Branch(b.weight * p, nxt, decisions)
        branches = list(merged.values())
        if len(branches) > max_branches:
            raise CapacityError(len(branches), max_branches, "oracle branches")
        event = sum((b.weight for b in branches), Fraction(0))
        run.ledger.append(LedgerEntry(i, v, q, event / total, fe.probabilities[q], all_in, event, len(branches)))

        heaviest = max(branches, key=lambda b: b.weight)
        session.present(v, decision=heaviest.decisions[v])
        future = _swap_step(session, run, v, q, future, i)

    run.presentation = future
    run.instance = session.instance
    run.transcript = session.transcript
    run.event_probability = sum((b.weight for b in branches), Fraction(0))
    if not branches:
        run.failure_probability = failure
        return

    last = future[-1]
    run.structural["last-neighbours-presented"] = all(
        w in session.decisions for w in session.instance.neighbours(last)
    )
    view = session.peek(last)
    best: Optional[Tuple[Fraction, Dict[int, Decision], OrientationReport]] = None
    for b in branches:
        for d, p, _ in algorithm.decision_distribution(b.state, view):
            decisions = dict(b.decisions)
            decisions[last] = d
            report = validate_sinkless_orientation(session.instance, decisions)
            if not report.ok:
                failure += b.weight * p
            if best is None or b.weight * p > best[0]:
                best = (b.weight * p, decisions, report)
    session.present(last, decision=best[1][last])
    run.decisions, run.verdict = best[1], best[2]
    run.transcript = session.transcript
    run.failure_probability = failure
    _structural_checks(run, future)


# =============================================================================
# BOUND REPORT
# =============================================================================

class BoundReport(NamedTuple):
    n: Union[int, Tower]
    delta: int
    i: Optional[int]
    radius: int
    chain: List[Tuple[int, bool]]

    def to_dict(self) -> Dict:
        return {
            "n": str(self.n),
            "delta": self.delta,
            "i": self.i,
            "radius_lower_bound": self.radius,
            "chain": [{"i": i, "exceeded": e} for i, e in self.chain],
        }


def bound_report(n: Union[int, Tower], delta: int) -> BoundReport:
    """
    The largest i with n > delta^P_delta(i, delta+1), and the radius bound 2^(i-1).

    The bound is 1 with i undefined when n does not clear i = 2.
    """
    if delta < 3:
        raise UsageError(f"delta must be at least 3, got {delta}")
    chain = []
    i = 2
    best = None
    while True:
        exceeded = power_tower_exceeds(n, delta, i)
        chain.append((i, exceeded))
        if not exceeded:
            break
        best = i
        i += 1
    radius = 1 if best is None else 2 ** (best - 1)
    return BoundReport(n, delta, best, radius, chain)
