"""
Online algorithms for sinkless orientation.

An algorithm keeps its own state between queries. Randomness comes from the
``rng`` the session passes in, so a run is reproducible from its seed.
Algorithms that can list their exact decision distribution support the
oracle adversary; every algorithm supports the sampling adversary through
``fork``.
"""

import copy
import importlib
import logging
import random
from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type

from pyrsistent import pmap

from .error_handler import UsageError
from .olocal import Decision, Orientation, View

logger = logging.getLogger(__name__)

Outcome = Tuple[Decision, Fraction, Any]


class OnlineAlgorithm(ABC):
    """Base class for online-LOCAL algorithms."""

    name = "abstract"

    def init(self, n: int, locality: int, seed: int) -> Any:
        """Initial state for a run on an n-node instance."""
        return None

    @abstractmethod
    def decide(self, state: Any, view: View, rng: random.Random) -> Tuple[Decision, Any]:
        """Decision for the view's center and the next state."""

    def decision_distribution(self, state: Any, view: View) -> Optional[List[Outcome]]:
        """Every possible (decision, probability, next state), or None when unknown."""
        return None

    @property
    def supports_distribution(self) -> bool:
        return type(self).decision_distribution is not OnlineAlgorithm.decision_distribution

    def fork(self, state: Any) -> Any:
        """An independent copy of state."""
        return copy.deepcopy(state)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


# =============================================================================
# MEMORYLESS ALGORITHMS
# =============================================================================

class Port1Det(OnlineAlgorithm):
    """Port 1 out, every other port in."""

    name = "port1-det"

    def decide(self, state, view, rng):
        return Decision.single_out(view.degree, 1), state

    def decision_distribution(self, state, view):
        return [(Decision.single_out(view.degree, 1), Fraction(1), state)]


class UniformSingleOut(OnlineAlgorithm):
    """One uniformly random port out."""

    name = "uniform-single-out"

    def decide(self, state, view, rng):
        return Decision.single_out(view.degree, rng.randint(1, view.degree)), state

    def decision_distribution(self, state, view):
        share = Fraction(1, view.degree)
        return [(Decision.single_out(view.degree, p), share, state) for p in range(1, view.degree + 1)]


class PortPreference(OnlineAlgorithm):
    """The first port of ``order`` present at the node goes out."""

    def __init__(self, order: Sequence[int]):
        if not order or len(set(order)) != len(order) or min(order) < 1:
            raise UsageError(f"port preference must list distinct positive ports, got {list(order)}")
        self.order = tuple(order)
        self.name = "prefer:" + ",".join(str(p) for p in self.order)

    def _choice(self, degree: int) -> Decision:
        for p in self.order:
            if p <= degree:
                return Decision.single_out(degree, p)
        return Decision.single_out(degree, 1)

    def decide(self, state, view, rng):
        return self._choice(view.degree), state

    def decision_distribution(self, state, view):
        return [(self._choice(view.degree), Fraction(1), state)]


def random_port_preference(seed: int, delta: int) -> PortPreference:
    """A port preference over 1..delta drawn from a seeded shuffle."""
    order = list(range(1, delta + 1))
    random.Random(seed).shuffle(order)
    return PortPreference(order)


# =============================================================================
# ALGORITHMS WITH MEMORY
# =============================================================================

def forced_orientations(state, view: View) -> Dict[int, Orientation]:
    """Orientations at the center dictated by decisions already made at its neighbours."""
    forced = {}
    center = view.nodes[view.center]
    for p, entry in enumerate(center.ports, start=1):
        if entry is None:
            continue
        token, back = entry
        earlier = state.get(token)
        if earlier is not None:
            forced[p] = Orientation.IN if earlier.at(back) is Orientation.OUT else Orientation.OUT
        # A neighbour outside state has not been decided.
    return forced


def _compose(degree: int, forced: Dict[int, Orientation], out_port: Optional[int]) -> Decision:
    values = []
    for p in range(1, degree + 1):
        if p in forced:
            values.append(forced[p])
        elif p == out_port:
            values.append(Orientation.OUT)
        else:
            values.append(Orientation.IN)
    return Decision(tuple(values))


class GreedyLowestFree(OnlineAlgorithm):
    """
    Agrees with every decided neighbour and sends the lowest undecided port out.

    State maps the token of each decided node to its decision.
    """

    name = "greedy-lowest-free"

    def init(self, n, locality, seed):
        return pmap()

    def _free(self, state, view) -> Tuple[Dict[int, Orientation], List[int]]:
        forced = forced_orientations(state, view)
        return forced, [p for p in range(1, view.degree + 1) if p not in forced]

    def _choose(self, state, view) -> Decision:
        forced, free = self._free(state, view)
        return _compose(view.degree, forced, free[0] if free else None)

    def decide(self, state, view, rng):
        decision = self._choose(state, view)
        return decision, state.set(view.center, decision)

    def decision_distribution(self, state, view):
        decision = self._choose(state, view)
        return [(decision, Fraction(1), state.set(view.center, decision))]

    def fork(self, state):
        return state


class AdversarialWorst(GreedyLowestFree):
    """Agrees with decided neighbours and sends one uniformly chosen undecided port out."""

    name = "adversarial-worst"

    def decide(self, state, view, rng):
        forced, free = self._free(state, view)
        decision = _compose(view.degree, forced, rng.choice(free) if free else None)
        return decision, state.set(view.center, decision)

    def decision_distribution(self, state, view):
        forced, free = self._free(state, view)
        if not free:
            decision = _compose(view.degree, forced, None)
            return [(decision, Fraction(1), state.set(view.center, decision))]
        share = Fraction(1, len(free))
        out = []
        for p in free:
            decision = _compose(view.degree, forced, p)
            out.append((decision, share, state.set(view.center, decision)))
        return out


class DeadEndSeeker(GreedyLowestFree):
    """
    Points an undecided edge at a neighbour whose other neighbours are all
    leaves, when the view shows one; otherwise behaves like greedy-lowest-free.

    Needs locality 2 to see past its neighbours.
    """

    name = "dead-end-seeker"

    def _choose(self, state, view) -> Decision:
        forced, free = self._free(state, view)
        for p in free:
            if _dead_end(view, p):
                return _compose(view.degree, forced, p)
        return _compose(view.degree, forced, free[0] if free else None)


def _dead_end(view: View, port: int) -> bool:
    entry = view.nodes[view.center].ports[port - 1]
    if entry is None:
        return False
    token, back = entry
    node = view.nodes[token]
    for q, far in enumerate(node.ports, start=1):
        if q == back:
            continue
        if far is None or view.nodes[far[0]].degree != 1:
            return False
    return True


# =============================================================================
# REGISTRY
# =============================================================================

ALGORITHMS: Dict[str, Type[OnlineAlgorithm]] = {
    Port1Det.name: Port1Det,
    UniformSingleOut.name: UniformSingleOut,
    GreedyLowestFree.name: GreedyLowestFree,
    AdversarialWorst.name: AdversarialWorst,
    DeadEndSeeker.name: DeadEndSeeker,
}

DETERMINISTIC = (Port1Det.name, GreedyLowestFree.name, DeadEndSeeker.name)


def load_algorithm(spec: str) -> OnlineAlgorithm:
    """
    Resolve a registry name, ``prefer:<ports>``, or a ``module:attr`` plugin.

    A plugin attribute may be an OnlineAlgorithm instance, or a class or
    factory called without arguments.

    Raises:
        UsageError: If the spec names nothing usable
    """
    if spec in ALGORITHMS:
        return ALGORITHMS[spec]()
    if spec.startswith("prefer:"):
        try:
            order = [int(p) for p in spec[len("prefer:"):].split(",")]
        except ValueError:
            raise UsageError(f"bad port preference '{spec}'") from None
        return PortPreference(order)
    if ":" not in spec:
        known = ", ".join(sorted(ALGORITHMS))
        raise UsageError(f"unknown algorithm '{spec}' (known: {known}, prefer:<ports>, module:attr)")

    module_name, attr = spec.split(":", 1)
    try:
        module = importlib.import_module(module_name)
    except ImportError as e:
        raise UsageError(f"cannot import '{module_name}': {e}") from e
    target = getattr(module, attr, None)
    if target is None:
        raise UsageError(f"module '{module_name}' has no attribute '{attr}'")
    if isinstance(target, OnlineAlgorithm):
        algorithm = target
    elif callable(target):
        algorithm = target()
    else:
        algorithm = None
    if not isinstance(algorithm, OnlineAlgorithm):
        raise UsageError(f"'{spec}' did not produce an OnlineAlgorithm")
    logger.info("loaded plugin algorithm %s", spec)
    return algorithm
