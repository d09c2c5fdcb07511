"""
Construction trees: arena representation, layer skeleton, validation, T_2.

A tree is stored as parallel arrays indexed by node id (parent, ordered
children, label, layer). Layer kinds, the nesting bijection and the label
index are derived on first use.
"""

import logging
from collections import deque
from enum import Enum
from functools import cached_property
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import networkx as nx
from networkx.algorithms.isomorphism.tree_isomorphism import rooted_tree_isomorphism

from .error_handler import UsageError, WellNestedError
from .labelstr import DIGITS, STAR, check_alphabet, is_clearing, is_independent, star_position

logger = logging.getLogger(__name__)


class NodeKind(str, Enum):
    REFLECT = "reflect"
    INTERNAL_SPLIT = "internal-split"
    LEAF_SPLIT = "leaf-split"

    @property
    def is_split(self) -> bool:
        return self is not NodeKind.REFLECT

    @property
    def letter(self) -> str:
        return "R" if self is NodeKind.REFLECT else "S"


class Layer(NamedTuple):
    index: int
    kind: NodeKind
    members: Tuple[int, ...]
    reflect_index: Optional[int]
    split_index: Optional[int]


class PathStep(NamedTuple):
    """One node on a root-to-leaf path: a reference (id or address), its label and kind."""

    ref: object
    label: str
    kind: NodeKind


class Check(NamedTuple):
    name: str
    passed: Optional[bool]
    witness: object = None
    message: str = ""


class ValidationReport:
    """Per-check outcome of ``validate``; skipped checks carry passed=None."""

    def __init__(self, checks: Sequence[Check]):
        self.checks = list(checks)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> Dict:
        return {
            "ok": self.ok,
            "checks": [
                {
                    "name": c.name,
                    "status": "skipped" if c.passed is None else ("pass" if c.passed else "fail"),
                    "witness": c.witness,
                    "message": c.message,
                }
                for c in self.checks
            ],
        }


# =============================================================================
# NESTING BIJECTION
# =============================================================================

def _letters(kinds: Sequence[Union[str, NodeKind]]) -> List[str]:
    out = []
    for k in kinds:
        letter = k.letter if isinstance(k, NodeKind) else str(k).upper()[:1]
        if letter not in ("R", "S"):
            raise UsageError(f"layer kind must be reflect or split, got {k!r}")
        out.append(letter)
    return out


def compute_phi(kinds: Sequence[Union[str, NodeKind]]) -> Dict[int, int]:
    """
    Pair every reflect layer with its split layer (1-based layer indices).

    phi(i) is the smallest j > i such that layers i..j hold equally many
    reflect and split layers, which is the matching-parenthesis partner of i.

    Raises:
        UsageError: If kinds is empty
        WellNestedError: Naming the first clause that fails: first-layer,
            last-layer, reflect-count, pairing or root-pairing
    """
    letters = _letters(kinds)
    if not letters:
        raise UsageError("layer skeleton is empty")
    if letters[0] != "R":
        raise WellNestedError("first-layer", "layer 1 must be a reflect layer")
    if letters[-1] != "S":
        raise WellNestedError("last-layer", f"layer {len(letters)} must be a split layer")
    reflects = letters.count("R")
    if reflects != len(letters) - reflects:
        raise WellNestedError(
            "reflect-count",
            f"{reflects} reflect layers but {len(letters) - reflects} split layers",
        )

    phi: Dict[int, int] = {}
    open_layers: List[int] = []
    for index, letter in enumerate(letters, start=1):
        if letter == "R":
            open_layers.append(index)
        elif not open_layers:
            raise WellNestedError("pairing", f"split layer {index} has no reflect layer to close")
        else:
            phi[open_layers.pop()] = index
    if open_layers:
        raise WellNestedError("pairing", f"reflect layer {open_layers[0]} is never closed")

    i_max = len(letters)
    if phi[1] != i_max:
        raise WellNestedError(
            "root-pairing",
            f"layers 1..{phi[1]} already balance, so phi(1) = {phi[1]} instead of {i_max}",
        )
    return phi


# =============================================================================
# CONSTRUCTION TREE
# =============================================================================

class ConstructionTree:
    """
    A labeled rooted tree over node ids 0..n-1.

    Args:
        b: Branching factor
        parent: Parent id per node, None for the root
        children: Ordered child ids per node
        labels: Label text per node

    Raises:
        UsageError: If the arrays do not describe a single rooted tree
    """

    def __init__(
        self,
        b: int,
        parent: Sequence[Optional[int]],
        children: Sequence[Sequence[int]],
        labels: Sequence[str],
    ):
        n = len(labels)
        if n == 0:
            raise UsageError("a construction tree needs at least one node")
        if len(parent) != n or len(children) != n:
            raise UsageError("parent, children and labels must have equal length")
        self.b = check_alphabet(b)
        self.parent: List[Optional[int]] = list(parent)
        self.children: List[Tuple[int, ...]] = [tuple(c) for c in children]
        self.labels: List[str] = list(labels)

        roots = [v for v, p in enumerate(self.parent) if p is None]
        if len(roots) != 1:
            raise UsageError(f"expected exactly one root, found {len(roots)}")
        self.root = roots[0]

        for v, kids in enumerate(self.children):
            for c in kids:
                if not 0 <= c < n or self.parent[c] != v:
                    raise UsageError(f"child {c} of node {v} does not point back to its parent")
        for v, p in enumerate(self.parent):
            if p is not None and (not 0 <= p < n or v not in self.children[p]):
                raise UsageError(f"node {v} is missing from the children of its parent {p}")

        layer = [0] * n
        layer[self.root] = 1
        queue = deque([self.root])
        seen = 1
        while queue:
            v = queue.popleft()
            for c in self.children[v]:
                layer[c] = layer[v] + 1
                seen += 1
                queue.append(c)
        if seen != n:
            raise UsageError(f"{n - seen} nodes are not reachable from the root")
        self.layer = layer

    @classmethod
    def from_generator(
        cls,
        b: int,
        root_label: str,
        children_of: Callable[[str], Sequence[str]],
    ) -> "ConstructionTree":
        """Build breadth first from a root label and a label -> child labels rule."""
        labels = [root_label]
        parent: List[Optional[int]] = [None]
        children: List[Tuple[int, ...]] = []
        head = 0
        while head < len(labels):
            kids = children_of(labels[head])
            start = len(labels)
            labels.extend(kids)
            parent.extend([head] * len(kids))
            children.append(tuple(range(start, start + len(kids))))
            head += 1
        return cls(b, parent, children, labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        return f"ConstructionTree(b={self.b}, nodes={len(self)}, layers={len(self.layer_members)})"

    # -- derived structure -------------------------------------------------

    @cached_property
    def label_index(self) -> Dict[str, int]:
        return {label: v for v, label in enumerate(self.labels)}

    def find(self, label: str) -> int:
        """Node id carrying label."""
        try:
            return self.label_index[label]
        except KeyError:
            raise UsageError(f"no node labeled '{label}'") from None

    def node_kind(self, v: int) -> NodeKind:
        count = len(self.children[v])
        if count == 1:
            return NodeKind.REFLECT
        return NodeKind.LEAF_SPLIT if count == 0 else NodeKind.INTERNAL_SPLIT

    @cached_property
    def layer_members(self) -> List[Tuple[int, ...]]:
        """Node ids per layer, layer 1 first."""
        buckets: List[List[int]] = [[] for _ in range(max(self.layer))]
        for v, i in enumerate(self.layer):
            buckets[i - 1].append(v)
        return [tuple(b) for b in buckets]

    def unbalanced_layers(self) -> List[int]:
        """Layer indices whose members disagree on child count or use a count other than 0, 1, b."""
        bad = []
        for index, members in enumerate(self.layer_members, start=1):
            counts = {len(self.children[v]) for v in members}
            if len(counts) != 1 or not counts <= {0, 1, self.b}:
                bad.append(index)
        return bad

    @cached_property
    def skeleton(self) -> List[NodeKind]:
        return [self.node_kind(members[0]) for members in self.layer_members]

    @cached_property
    def phi(self) -> Dict[int, int]:
        return compute_phi(self.skeleton)

    @cached_property
    def layers(self) -> List[Layer]:
        """Layer records with reflect/split indices (requires a well-nested skeleton)."""
        phi = self.phi
        reflect_rank = {i: r for r, i in enumerate(sorted(phi), start=1)}
        split_rank = {phi[i]: r for i, r in reflect_rank.items()}
        return [
            Layer(
                index=index,
                kind=kind,
                members=self.layer_members[index - 1],
                reflect_index=reflect_rank.get(index),
                split_index=split_rank.get(index),
            )
            for index, kind in enumerate(self.skeleton, start=1)
        ]

    def reflect_index(self, v: int) -> Optional[int]:
        return self.layers[self.layer[v] - 1].reflect_index

    def split_index(self, v: int) -> Optional[int]:
        return self.layers[self.layer[v] - 1].split_index

    @cached_property
    def reflect_layer_index(self) -> Dict[int, int]:
        """Reflect index -> layer index."""
        return {layer.reflect_index: layer.index for layer in self.layers if layer.reflect_index}

    def reflect_nodes(self) -> List[int]:
        return [v for v in range(len(self)) if len(self.children[v]) == 1]

    def split_nodes(self) -> List[int]:
        return [v for v in range(len(self)) if len(self.children[v]) != 1]

    def ancestor_in_layer(self, v: int, layer_index: int) -> int:
        while self.layer[v] > layer_index:
            v = self.parent[v]
        return v

    def jth_child(self, v: Union[int, str], j: int) -> int:
        """
        The child of internal split node v whose symbol at v's split index is j.

        Raises:
            UsageError: If v is not an internal split node or j is out of range
        """
        if isinstance(v, str):
            v = self.find(v)
        if self.node_kind(v) is not NodeKind.INTERNAL_SPLIT:
            raise UsageError(f"node {v} ('{self.labels[v]}') is not an internal split node")
        if not 1 <= j <= self.b:
            raise UsageError(f"j must be in 1..{self.b}, got {j}")
        i = self.split_index(v)
        want = str(j)
        for c in self.children[v]:
            label = self.labels[c]
            if i < len(label) and label[-1 - i] == want:
                return c
        raise UsageError(f"node {v} has no child with symbol {j} at position {i}")

    def first_child_path(self) -> List[PathStep]:
        """Root-to-leaf path taking the first child at every node."""
        path = []
        v: Optional[int] = self.root
        while v is not None:
            path.append(PathStep(v, self.labels[v], self.node_kind(v)))
            kids = self.children[v]
            v = kids[0] if kids else None
        return path

    def subtree(self, v: int) -> List[int]:
        out = [v]
        for u in out:
            out.extend(self.children[u])
        return out

    def to_networkx(self, root: Optional[int] = None) -> nx.Graph:
        """Undirected graph of the subtree at root (whole tree by default)."""
        g = nx.Graph()
        nodes = self.subtree(self.root if root is None else root)
        g.add_nodes_from(nodes)
        g.add_edges_from((u, c) for u in nodes for c in self.children[u])
        return g

    def relabel(self, mapping: Mapping[int, str]) -> "ConstructionTree":
        """Copy with some labels replaced."""
        labels = list(self.labels)
        for v, label in mapping.items():
            labels[v] = label
        return ConstructionTree(self.b, self.parent, self.children, labels)


# =============================================================================
# VALIDATION
# =============================================================================

def _first_failure(name: str, failures: List, message: Callable[[object], str]) -> Check:
    if failures:
        return Check(name, False, failures[0], message(failures[0]))
    return Check(name, True)


def _check_structure(T: ConstructionTree) -> Check:
    if T.b < 3:
        return Check("structure", False, T.b, f"branching factor must be at least 3, got {T.b}")
    allowed = set(DIGITS[: T.b] + STAR)
    for v, label in enumerate(T.labels):
        if not label or set(label) - allowed or label[-1] not in "12":
            return Check("structure", False, v, f"node {v} has invalid label '{label}'")
    return Check("structure", True)


def _check_observation(T: ConstructionTree) -> Check:
    for v in range(len(T)):
        label = T.labels[v]
        root_or_leaf = v == T.root or not T.children[v]
        if (label[-1] == "1") != root_or_leaf:
            return Check(
                "observation", False, v,
                f"node {v} ('{label}') position-0 symbol must be 1 exactly at the root and leaves",
            )
    if T.node_kind(T.root) is not NodeKind.REFLECT:
        return Check("observation", False, T.root, "the root must be a reflect node")
    # length = 1 + strict reflect ancestors, top down
    expected = [0] * len(T)
    expected[T.root] = 1
    for members in T.layer_members:
        for v in members:
            bump = 1 if T.node_kind(v) is NodeKind.REFLECT else 0
            for c in T.children[v]:
                expected[c] = expected[v] + bump
            if len(T.labels[v]) != expected[v]:
                return Check(
                    "observation", False, v,
                    f"node {v} ('{T.labels[v]}') should have length {expected[v]}",
                )
    return Check("observation", True)


def _check_split_star(T: ConstructionTree) -> Check:
    """Star at the split index, prefix agreement with the R_i ancestor, exactly one star."""
    reflect_up = [-1] * len(T)
    for members in T.layer_members:
        for v in members:
            p = T.parent[v]
            if p is not None:
                reflect_up[v] = p if T.node_kind(p) is NodeKind.REFLECT else reflect_up[p]
    for layer in T.layers:
        if layer.split_index is None:
            continue
        i = layer.split_index
        target = T.reflect_layer_index[i]
        for v in layer.members:
            label = T.labels[v]
            if label.count(STAR) != 1 or star_position(label) != i:
                return Check(
                    "property-7", False, v,
                    f"node {v} ('{label}') needs exactly one * at position {i}",
                )
            w = reflect_up[v]
            while T.layer[w] > target:
                w = reflect_up[w]
            if label[-i:] != T.labels[w][-i:]:
                return Check(
                    "property-7", False, (v, w),
                    f"'{label}' disagrees with its ancestor '{T.labels[w]}' below position {i}",
                )
    return Check("property-7", True)


def _check_split_children(T: ConstructionTree) -> Check:
    """Children of internal split nodes partition by the symbol at the split index."""
    layers = T.layers
    for layer in layers:
        if layer.kind is not NodeKind.INTERNAL_SPLIT:
            continue
        i = layer.split_index
        for v in layer.members:
            symbols = []
            for c in T.children[v]:
                label = T.labels[c]
                symbols.append(label[-1 - i] if i < len(label) else None)
            if sorted(s for s in symbols if s) != list(DIGITS[: T.b]):
                return Check(
                    "property-8", False, v,
                    f"children of node {v} carry {symbols} at position {i}, not a permutation of 1..{T.b}",
                )
    # Descendants keep the symbol of their split ancestor's child: compare each
    # node with its parent at the split indices of internal split layers above the parent.
    inherited: List[int] = []
    for layer in layers:
        if layer.index > 1:
            for v in layer.members:
                label, plabel = T.labels[v], T.labels[T.parent[v]]
                for pos in inherited:
                    if pos >= len(label) or pos >= len(plabel) or label[-1 - pos] != plabel[-1 - pos]:
                        return Check(
                            "property-8", False, v,
                            f"node {v} ('{label}') changes the symbol at split position {pos}",
                        )
        if layer.index > 1 and layers[layer.index - 2].kind is NodeKind.INTERNAL_SPLIT:
            inherited.append(layers[layer.index - 2].split_index)
    return Check("property-8", True)


def validate(T: ConstructionTree, exhaustive_clearing: bool = False) -> ValidationReport:
    """
    Validate topology and solidity of a construction tree.

    Every problem becomes a failed check with a witness; nothing raises.
    Checks that need the layer skeleton are skipped when it is unavailable.
    """
    checks: List[Check] = [_check_structure(T)]
    if not checks[0].passed:
        return ValidationReport(checks)

    unbalanced = T.unbalanced_layers()
    checks.append(
        _first_failure(
            "balanced", unbalanced,
            lambda i: f"layer {i} mixes child counts or uses a count other than 0, 1, {T.b}",
        )
    )

    nested = False
    if unbalanced:
        checks.append(Check("well-nested", None, message="skipped: tree is not balanced"))
    else:
        try:
            T.phi
            nested = True
            checks.append(Check("well-nested", True))
        except WellNestedError as e:
            checks.append(Check("well-nested", False, e.clause, str(e)))

    checks.append(_check_observation(T))

    root_label = T.labels[T.root]
    checks.append(
        Check("property-1", root_label == "1", T.root if root_label != "1" else None,
              "" if root_label == "1" else f"root label is '{root_label}'")
    )

    reflect = T.reflect_nodes()
    reflect_labels = [T.labels[v] for v in reflect]

    if nested:
        bad = [v for v in reflect if len(T.labels[v]) != T.reflect_index(v)]
        checks.append(
            _first_failure(
                "property-2", bad,
                lambda v: f"reflect node {v} ('{T.labels[v]}') should have length {T.reflect_index(v)}",
            )
        )
    else:
        checks.append(Check("property-2", None, message="skipped: no reflect indices"))

    seen: Dict[str, int] = {}
    dupes = []
    for v in reflect:
        if T.labels[v] in seen:
            dupes.append((seen[T.labels[v]], v))
        seen.setdefault(T.labels[v], v)
    checks.append(_first_failure("property-3", dupes, lambda d: f"nodes {d} share a label"))

    starred = [v for v in reflect if STAR in T.labels[v]]
    checks.append(
        _first_failure("property-4", starred, lambda v: f"reflect node {v} ('{T.labels[v]}') has a *")
    )

    independence = is_independent(reflect_labels)
    if not reflect_labels:
        checks.append(Check("property-5", False, None, "no reflect labels"))
    elif not independence.ok:
        checks.append(
            Check("property-5", False, independence.witness,
                  f"'{independence.witness[0]}' is a final substring of '{independence.witness[1]}'")
        )
    elif starred:
        checks.append(Check("property-5", False, T.labels[starred[0]], "clearing needs star-free labels"))
    else:
        clearing = is_clearing(reflect_labels, T.b, exhaustive=exhaustive_clearing)
        checks.append(
            Check("property-5", clearing.ok, clearing.witness,
                  "" if clearing.ok else f"'{clearing.witness}' has no reflect label as final substring")
        )

    if nested:
        reflects_before = 0
        bad6 = []
        for layer in T.layers:
            if layer.kind.is_split:
                bad6.extend(v for v in layer.members if len(T.labels[v]) != reflects_before + 1)
            else:
                reflects_before += 1
        checks.append(
            _first_failure("property-6", bad6, lambda v: f"split node {v} ('{T.labels[v]}') has the wrong length")
        )
        checks.append(_check_split_star(T))
        checks.append(_check_split_children(T))
    else:
        for name in ("property-6", "property-7", "property-8"):
            checks.append(Check(name, None, message="skipped: no split indices"))

    report = ValidationReport(checks)
    logger.debug("validated %r: %s", T, "ok" if report.ok else [c.name for c in report.failed()])
    return report


def jth_child(T: ConstructionTree, v: Union[int, str], j: int) -> int:
    return T.jth_child(v, j)


def isomorphic_child_subtrees(T: ConstructionTree, v: Optional[int] = None) -> List[int]:
    """
    Internal split nodes whose child subtrees are not all isomorphic as unlabeled rooted trees.

    Checks v only when given, otherwise every internal split node.
    """
    nodes = [v] if v is not None else [u for u in range(len(T)) if T.node_kind(u) is NodeKind.INTERNAL_SPLIT]
    bad = []
    for u in nodes:
        kids = T.children[u]
        if not kids:
            continue
        first = T.to_networkx(kids[0])
        for c in kids[1:]:
            other = T.to_networkx(c)
            if len(other) != len(first) or not rooted_tree_isomorphism(first, kids[0], other, c):
                bad.append(u)
                break
    return bad


# =============================================================================
# THE T_2 FAMILY
# =============================================================================

def _t2_children(label: str, b: int, levels: int) -> List[str]:
    digits = DIGITS[:b]
    if label == "1":
        return ["12"]
    if label.endswith(STAR + "1"):
        return []
    if label.startswith(STAR):
        reflect = label[1:]
        d = int(reflect[-2])
        free = reflect[:-2]
        if d < levels:
            return [j + free + str(d + 1) + "2" for j in digits]
        return [j + free + STAR + "1" for j in digits]
    return [STAR + label]


def build_t2(delta: int) -> ConstructionTree:
    """
    The digit-chain construction tree T_2(delta).

    Root "1", then for each d = 1..delta a reflect layer whose labels hold
    free digits at positions 2..d, d at position 1 and 2 at position 0,
    followed by its split layer ("*" + label). Leaves hold free digits at
    positions 2..delta+1, * at position 1 and 1 at position 0.

    Raises:
        UsageError: If delta is outside 3..9
    """
    if not 3 <= delta <= len(DIGITS):
        raise UsageError(f"delta must be between 3 and {len(DIGITS)}, got {delta}")
    T = ConstructionTree.from_generator(delta, "1", lambda s: _t2_children(s, delta, delta))
    logger.info("built T_2(%d) with %d nodes", delta, len(T))
    return T


def build_t2_literal(delta: int) -> ConstructionTree:
    """The three-level scheme 1, 12, *12, j22, *j22, kj32, *kj32, pkj*1 with digits 1..delta."""
    if not 3 <= delta <= len(DIGITS):
        raise UsageError(f"delta must be between 3 and {len(DIGITS)}, got {delta}")
    return ConstructionTree.from_generator(delta, "1", lambda s: _t2_children(s, delta, 3))


def t2_node_count(delta: int) -> int:
    """Nodes of T_2(delta): the root, delta^(d-1) reflect and split nodes per level d, delta^delta leaves."""
    return 1 + 2 * sum(delta ** (d - 1) for d in range(1, delta + 1)) + delta ** delta
