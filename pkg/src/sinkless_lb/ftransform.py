"""
The F transformation on construction trees.

``dfs_sequence`` walks the tree once, emitting an early entry when a reflect
node is entered and a late entry when it is left. Each entry becomes one
layer of F(T), described by a padded-label pattern; ``ImplicitFTree`` keeps
only those patterns, and ``f_materialize`` expands them into an explicit
``ConstructionTree`` when the node budget allows.

Sizes grow as power towers, so this module also carries ``Tower`` for exact
comparisons against numbers that cannot be written out.
"""

import itertools
import logging
import random
from functools import total_ordering
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from .ctree import ConstructionTree, NodeKind, PathStep
from .error_handler import UsageError, require_budget
from .labelstr import DIGITS, STAR, PaddedLabel, pad

logger = logging.getLogger(__name__)


# =============================================================================
# POWER TOWERS
# =============================================================================

def _capped(base: int, height: int, top: int, cap_bits: int) -> Optional[int]:
    """Tower value when it has at most cap_bits bits, else None."""
    value = top
    if value.bit_length() > cap_bits:
        return None
    for _ in range(height - 1):
        # base**value >= 2**value
        if value > cap_bits:
            return None
        value = base ** value
        if value.bit_length() > cap_bits:
            return None
    return value


def _cmp(a: int, b: int) -> int:
    return (a > b) - (a < b)


@total_ordering
class Tower:
    """
    base^base^...^top + offset, with ``height`` entries counting the top.

    Height 1 is just top + offset. Comparisons with ints and with towers of
    the same base are exact and never build a number much wider than the
    compared operands.
    """

    __slots__ = ("base", "height", "top", "offset")

    def __init__(self, base: int, height: int, top: int, offset: int = 0):
        if base < 2 or height < 1 or top < 1:
            raise UsageError(f"invalid tower base={base} height={height} top={top}")
        self.base = base
        self.height = height
        self.top = top
        self.offset = offset

    @classmethod
    def p(cls, delta: int, j: int, k: int) -> Union[int, "Tower"]:
        """P_delta(j, k): height j, top k, other entries delta; P(0, k) is 1."""
        if j == 0:
            return 1
        return cls(delta, j, k)

    def __repr__(self) -> str:
        entries = "^".join([str(self.base)] * (self.height - 1) + [str(self.top)])
        if self.offset:
            return f"{entries}{self.offset:+d}"
        return entries

    def to_dict(self) -> Dict:
        return {"base": self.base, "height": self.height, "top": self.top, "offset": self.offset}

    def exact(self, cap_bits: int) -> Optional[int]:
        """The value as an int when the tower part fits in cap_bits bits."""
        value = _capped(self.base, self.height, self.top, cap_bits)
        return None if value is None else value + self.offset

    def _cmp_int(self, n: int) -> int:
        cap = max(n.bit_length(), abs(self.offset).bit_length()) + 2
        value = _capped(self.base, self.height, self.top, cap)
        if value is None:
            return 1
        return _cmp(value + self.offset, n)

    def _cmp_tower(self, other: "Tower") -> int:
        if other.base != self.base:
            raise UsageError(f"cannot compare towers of base {self.base} and {other.base}")
        cap = max(abs(self.offset).bit_length(), abs(other.offset).bit_length()) + 2
        mine = _capped(self.base, self.height, self.top, cap)
        theirs = _capped(other.base, other.height, other.top, cap)
        if mine is not None:
            return -other._cmp_int(mine + self.offset)
        if theirs is not None:
            return self._cmp_int(theirs + other.offset)
        # Both towers are at least 2**cap; a height-1 tower is an integer.
        if self.height == 1:
            return -other._cmp_int(self.top + self.offset)
        if other.height == 1:
            return self._cmp_int(other.top + other.offset)
        bare = _tower_order(self.base, self.height, self.top, other.height, other.top)
        # Distinct powers of base differ by at least the smaller one, which exceeds both offsets.
        return bare if bare else _cmp(self.offset, other.offset)

    def compare(self, other: Union[int, "Tower"]) -> int:
        if isinstance(other, Tower):
            return self._cmp_tower(other)
        return self._cmp_int(int(other))

    def __eq__(self, other) -> bool:
        if not isinstance(other, (int, Tower)):
            return NotImplemented
        return self.compare(other) == 0

    def __lt__(self, other) -> bool:
        if not isinstance(other, (int, Tower)):
            return NotImplemented
        return self.compare(other) < 0

    def __hash__(self) -> int:
        return hash((self.base, self.height, self.top, self.offset))


def _tower_order(base: int, h1: int, t1: int, h2: int, t2: int) -> int:
    """Compare two offset-free towers of one base by taking logs down to the shorter height."""
    if h1 == h2:
        return _cmp(t1, t2)
    if h1 > h2:
        return Tower(base, h1 - h2 + 1, t1)._cmp_int(t2)
    return -Tower(base, h2 - h1 + 1, t2)._cmp_int(t1)


def compare_numbers(a: Union[int, Tower], b: Union[int, Tower]) -> int:
    """-1, 0 or 1 for ints and same-base towers in any combination."""
    if isinstance(a, Tower):
        return a.compare(b)
    if isinstance(b, Tower):
        return -b.compare(a)
    return _cmp(a, b)


def tower_threshold(delta: int, i: int) -> Tower:
    """delta^P_delta(i, delta+1), a tower of height i+1 with top delta+1."""
    return Tower(delta, i + 1, delta + 1)


def power_tower_exceeds(n: Union[int, Tower], delta: int, i: int) -> bool:
    """
    True iff n > delta^P_delta(i, delta+1).

    Raises:
        UsageError: If delta < 3 or i < 2
    """
    if delta < 3 or i < 2:
        raise UsageError(f"need delta >= 3 and i >= 2, got delta={delta}, i={i}")
    return compare_numbers(n, tower_threshold(delta, i)) > 0


class CountBounds(NamedTuple):
    count: int
    lower: Union[int, Tower]
    upper: Union[int, Tower]
    ok: bool


def count_bounds(count: int, delta: int, i: int) -> CountBounds:
    """Check P_delta(floor(i/2), delta+1) <= count <= P_delta(i, delta+1)."""
    lower = Tower.p(delta, i // 2, delta + 1)
    upper = Tower.p(delta, i, delta + 1)
    ok = compare_numbers(lower, count) <= 0 and compare_numbers(count, upper) <= 0
    return CountBounds(count, lower, upper, ok)


# =============================================================================
# DFS SEQUENCE
# =============================================================================

class DfsEntry(NamedTuple):
    node: int
    late: bool
    lam: int
    early_rank: int

    @property
    def flag(self) -> str:
        return "late" if self.late else "early"


def dfs_sequence(T: ConstructionTree) -> List[DfsEntry]:
    """
    Early and late entries of every reflect node in DFS order (children in stored order).

    ``lam`` counts late entries strictly before the entry; ``early_rank`` is
    the 1-based position of the node's early entry among early entries.
    """
    entries: List[DfsEntry] = []
    ranks: Dict[int, int] = {}
    lam = 0
    stack: List[Tuple[int, bool]] = [(T.root, False)]
    while stack:
        v, leaving = stack.pop()
        reflect = len(T.children[v]) == 1
        if leaving:
            entries.append(DfsEntry(v, True, lam, ranks[v]))
            lam += 1
            continue
        if reflect:
            ranks[v] = len(ranks) + 1
            entries.append(DfsEntry(v, False, lam, ranks[v]))
            stack.append((v, True))
        stack.extend((c, False) for c in reversed(T.children[v]))
    return entries


# =============================================================================
# IMPLICIT F(T)
# =============================================================================

class FLayer(NamedTuple):
    index: int
    entry: DfsEntry
    kind: NodeKind
    pattern: PaddedLabel
    free: Tuple[int, ...]
    size: int
    offset: int

    @property
    def split_index(self) -> Optional[int]:
        return self.entry.early_rank if self.entry.late else None


class Address(NamedTuple):
    layer: int
    digits: Tuple[int, ...]


class ImplicitNode(NamedTuple):
    address: Address
    label: str
    parent: Optional[Address]
    children: List[Address]


class SampleMismatch(NamedTuple):
    address: Address
    property: str
    message: str


class ImplicitFTree:
    """
    F(T) as one pattern per layer.

    A node is addressed by its layer and a digit vector over the layer's
    free positions in the order they were freed. The parent's vector is a
    prefix; the index within a layer is the vector read as a base-b numeral,
    so ``offset + index`` is the breadth-first id of the materialized tree.
    """

    def __init__(self, source: ConstructionTree, sequence: Sequence[DfsEntry], layers: Sequence[FLayer]):
        self.source = source
        self.b = source.b
        self.sequence = list(sequence)
        self.layers = list(layers)
        self.total = sum(layer.size for layer in self.layers)

    def __repr__(self) -> str:
        return f"ImplicitFTree(b={self.b}, layers={len(self.layers)}, nodes={self.total})"

    def layer(self, i: int) -> FLayer:
        if not 1 <= i <= len(self.layers):
            raise UsageError(f"layer {i} outside 1..{len(self.layers)}")
        return self.layers[i - 1]

    def _digits(self, layer: FLayer, assignment: Union[Sequence[int], Mapping[int, int]]) -> Tuple[int, ...]:
        if isinstance(assignment, Mapping):
            if set(assignment) != set(layer.free):
                raise UsageError(
                    f"layer {layer.index} frees positions {sorted(layer.free)}, got {sorted(assignment)}"
                )
            digits = tuple(int(assignment[p]) for p in layer.free)
        else:
            digits = tuple(int(d) for d in assignment)
            if len(digits) != len(layer.free):
                raise UsageError(f"layer {layer.index} needs {len(layer.free)} digits, got {len(digits)}")
        if any(not 1 <= d <= self.b for d in digits):
            raise UsageError(f"digits must lie in 1..{self.b}, got {digits}")
        return digits

    def label_at(self, layer: FLayer, digits: Sequence[int]) -> str:
        chars = list(layer.pattern.text)
        n = len(chars)
        for pos, d in zip(layer.free, digits):
            chars[n - 1 - pos] = DIGITS[d - 1]
        return "".join(chars)

    def children_of(self, address: Address) -> List[Address]:
        layer = self.layer(address.layer)
        if address.layer == len(self.layers):
            return []
        if layer.entry.late:
            return [Address(address.layer + 1, address.digits + (j,)) for j in range(1, self.b + 1)]
        return [Address(address.layer + 1, address.digits)]

    def node(self, i: int, assignment: Union[Sequence[int], Mapping[int, int]] = ()) -> ImplicitNode:
        """
        Label, parent and children of the node at (layer i, assignment).

        Raises:
            UsageError: If the layer or assignment is out of range
        """
        layer = self.layer(i)
        digits = self._digits(layer, assignment)
        address = Address(i, digits)
        parent = None
        if i > 1:
            parent = Address(i - 1, digits[: len(self.layers[i - 2].free)])
        return ImplicitNode(address, self.label_at(layer, digits), parent, self.children_of(address))

    def index_of(self, address: Address) -> int:
        index = 0
        for d in address.digits:
            index = index * self.b + (d - 1)
        return index

    def id_of(self, address: Address) -> int:
        return self.layer(address.layer).offset + self.index_of(address)

    def address_of(self, node_id: int) -> Address:
        if not 0 <= node_id < self.total:
            raise UsageError(f"node id {node_id} outside 0..{self.total - 1}")
        for layer in self.layers:
            if node_id < layer.offset + layer.size:
                index = node_id - layer.offset
                digits = []
                for _ in layer.free:
                    index, r = divmod(index, self.b)
                    digits.append(r + 1)
                return Address(layer.index, tuple(reversed(digits)))
        raise AssertionError("offsets do not cover the node range")

    def first_child_path(self) -> List[PathStep]:
        return [
            PathStep(Address(layer.index, (1,) * len(layer.free)),
                     self.label_at(layer, (1,) * len(layer.free)),
                     layer.kind)
            for layer in self.layers
        ]

    def random_address(self, rng: random.Random, layer: Optional[int] = None) -> Address:
        chosen = self.layers[rng.randrange(len(self.layers))] if layer is None else self.layer(layer)
        return Address(chosen.index, tuple(rng.randint(1, self.b) for _ in chosen.free))

    def pattern_checks(self) -> Dict[str, bool]:
        """Properties that hold for every node of a layer once they hold for its pattern."""
        reflect = [layer for layer in self.layers if layer.kind is NodeKind.REFLECT]
        reflects_before = 0
        lengths_ok = True
        for layer in self.layers:
            if layer.kind is NodeKind.REFLECT:
                reflects_before += 1
                lengths_ok &= len(layer.pattern.text) == layer.entry.early_rank
            else:
                lengths_ok &= len(layer.pattern.text) == reflects_before + 1
        root = self.layers[0]
        return {
            "property-1": root.size == 1 and root.pattern.text == "1",
            "property-2/6": lengths_ok,
            "property-4": all(STAR not in layer.pattern.text for layer in reflect),
            "free-positions": all(0 not in layer.free for layer in self.layers),
        }


def f_implicit(T: ConstructionTree) -> ImplicitFTree:
    """
    Pattern-compressed F(T): one layer per DFS entry.

    Early layers pad the reflect label with the free positions K_i freed so
    far; late layers pad "*" + label, and each late layer frees the position
    equal to its split index for the layers below it.
    """
    sequence = dfs_sequence(T)
    layers: List[FLayer] = []
    free: List[int] = []
    offset = 0
    last = len(sequence)
    for index, entry in enumerate(sequence, start=1):
        label = T.labels[entry.node]
        if entry.late:
            kind = NodeKind.LEAF_SPLIT if index == last else NodeKind.INTERNAL_SPLIT
            pattern = pad(STAR + label, free)
        else:
            kind = NodeKind.REFLECT
            pattern = pad(label, free)
        size = T.b ** len(free)
        layers.append(FLayer(index, entry, kind, pattern, tuple(free), size, offset))
        offset += size
        if entry.late:
            free.append(entry.early_rank)
    implicit = ImplicitFTree(T, sequence, layers)
    logger.info("F(T) has %d layers and %d nodes", len(layers), implicit.total)
    return implicit


def implicit_node(
    I: ImplicitFTree,
    i: int,
    assignment: Union[Sequence[int], Mapping[int, int]] = (),
) -> ImplicitNode:
    return I.node(i, assignment)


def f_materialize(
    I: ImplicitFTree,
    layer_limit: Optional[int] = None,
    node_budget: Optional[int] = None,
) -> ConstructionTree:
    """
    Expand the layer patterns into an explicit tree with breadth-first ids.

    With a layer limit the result is the prefix of the first layers only.

    Raises:
        CapacityError: If the node count exceeds node_budget
    """
    layers = I.layers if layer_limit is None else I.layers[:layer_limit]
    if not layers:
        raise UsageError("layer limit must be at least 1")
    total = sum(layer.size for layer in layers)
    require_budget(total, node_budget, "F(T) nodes")

    b = I.b
    labels: List[str] = []
    parent: List[Optional[int]] = []
    children: List[Tuple[int, ...]] = []
    digits = DIGITS[:b]
    empty: Tuple[int, ...] = ()

    for k, layer in enumerate(layers):
        template = list(layer.pattern.text)
        width = len(template)
        slots = [width - 1 - pos for pos in layer.free]
        if slots:
            for combo in itertools.product(digits, repeat=len(slots)):
                for slot, d in zip(slots, combo):
                    template[slot] = d
                labels.append("".join(template))
        else:
            labels.append(layer.pattern.text)

        if k == 0:
            parent.append(None)
        else:
            prev = layers[k - 1]
            if prev.entry.late:
                parent.extend(prev.offset + x // b for x in range(layer.size))
            else:
                parent.extend(prev.offset + x for x in range(layer.size))

        if k + 1 < len(layers):
            nxt = layers[k + 1]
            if layer.entry.late:
                children.extend(
                    tuple(range(nxt.offset + x * b, nxt.offset + x * b + b)) for x in range(layer.size)
                )
            else:
                children.extend((nxt.offset + x,) for x in range(layer.size))
        else:
            children.extend([empty] * layer.size)
        logger.debug("materialized layer %d (%d nodes)", layer.index, layer.size)

    T = ConstructionTree(b, parent, children, labels)
    logger.info("materialized %d of %d layers, %d nodes", len(layers), len(I.layers), len(T))
    return T


def sample_check(I: ImplicitFTree, count: int, seed: int = 0) -> List[SampleMismatch]:
    """
    Check star placement and child symbols on random addresses.

    For a split node with split index a, the label must hold exactly one *,
    at position a, and agree below a with its ancestor in the matching reflect
    layer. For an internal split node, a random child j and a random
    descendant of that child must hold j at position a.
    """
    rng = random.Random(seed)
    split_layers = [layer for layer in I.layers if layer.kind.is_split]
    reflect_layer = {layer.entry.early_rank: layer for layer in I.layers if layer.kind is NodeKind.REFLECT}
    mismatches: List[SampleMismatch] = []
    for _ in range(count):
        layer = split_layers[rng.randrange(len(split_layers))]
        address = I.random_address(rng, layer.index)
        label = I.label_at(layer, address.digits)
        a = layer.split_index
        if label.count(STAR) != 1 or len(label) <= a or label[-1 - a] != STAR:
            mismatches.append(SampleMismatch(address, "property-7", f"'{label}' needs one * at position {a}"))
            continue
        anchor = reflect_layer[a]
        ancestor = I.label_at(anchor, address.digits[: len(anchor.free)])
        if label[-a:] != ancestor[-a:]:
            mismatches.append(
                SampleMismatch(address, "property-7", f"'{label}' disagrees with ancestor '{ancestor}' below {a}")
            )
        if layer.kind is not NodeKind.INTERNAL_SPLIT:
            continue
        j = rng.randint(1, I.b)
        depth = rng.randint(layer.index + 1, len(I.layers))
        digits = address.digits + (j,)
        for k in range(layer.index + 1, depth):
            if I.layers[k - 1].entry.late:
                digits += (rng.randint(1, I.b),)
        below = I.label_at(I.layers[depth - 1], digits)
        if len(below) <= a or below[-1 - a] != str(j):
            mismatches.append(
                SampleMismatch(Address(depth, digits), "property-8",
                               f"descendant '{below}' of child {j} lacks {j} at position {a}")
            )
    return mismatches
