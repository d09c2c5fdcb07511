"""
Edge labelings psi and pi of a construction tree.

Every non-root node owns the edge to its parent, so edges are keyed by the
child id. For an edge e, psi(e) predicts the labels of the 2-leaves and
pi(e) the labels of the remaining nodes of the matching unmarked component
in the input tree built from T.
"""

from typing import Dict, FrozenSet, List, NamedTuple, Optional, Sequence, Tuple

from .ctree import ConstructionTree, NodeKind, PathStep
from .error_handler import DomainError
from .labelstr import DIGITS, STAR, star_position

LabelSet = FrozenSet[str]


class EdgeLabeling(NamedTuple):
    psi: Dict[int, LabelSet]
    pi: Dict[int, LabelSet]

    def edge(self, child: int) -> Tuple[LabelSet, LabelSet]:
        return self.psi[child], self.pi[child]


class LemmaMismatch(NamedTuple):
    node: int
    message: str


def root_sets(b: int) -> Tuple[LabelSet, LabelSet]:
    """psi and pi of the edge below the root."""
    return frozenset(d + "2" for d in DIGITS[:b]), frozenset({STAR + "1"})


def step_sets(
    psi: LabelSet,
    pi: LabelSet,
    head_label: str,
    head_kind: NodeKind,
    tail_label: str,
    b: int,
) -> Tuple[LabelSet, LabelSet]:
    """
    psi and pi of the edge (tail, head) from those of the edge above head.

    A reflect head prefixes every other label with each digit and adds
    "*" + its own label to pi. A split head keeps the labels whose symbol at
    its star position equals the tail's symbol there.
    """
    if head_kind is NodeKind.REFLECT:
        digits = DIGITS[:b]
        new_psi = frozenset(d + z for z in psi if z != head_label for d in digits)
        new_pi = frozenset(d + z for z in pi if z != head_label for d in digits) | {STAR + head_label}
        return new_psi, new_pi
    j = star_position(head_label)
    if j is None:
        raise DomainError(f"split label '{head_label}' has no *")
    short = [z for z in (tail_label, *psi, *pi) if len(z) <= j]
    if short:
        raise DomainError(f"'{short[0]}' has no symbol at position {j}, the split position of '{head_label}'")
    want = tail_label[-1 - j]
    return (
        frozenset(z for z in psi if z[-1 - j] == want),
        frozenset(z for z in pi if z[-1 - j] == want),
    )


def extend_labelings(T: ConstructionTree, lab: EdgeLabeling, v: int) -> None:
    """
    Fill in psi and pi of the edges below v, given those of the edge above it.

    Raises:
        DomainError: If a label is too short for the split position of v
    """
    kids = T.children[v]
    if v == T.root:
        for c in kids:
            lab.psi[c], lab.pi[c] = root_sets(T.b)
        return
    kind = T.node_kind(v)
    for c in kids:
        lab.psi[c], lab.pi[c] = step_sets(lab.psi[v], lab.pi[v], T.labels[v], kind, T.labels[c], T.b)


def compute_labelings(T: ConstructionTree) -> EdgeLabeling:
    """psi and pi for every edge, top down from the edge below the root."""
    lab = EdgeLabeling({}, {})
    for members in T.layer_members:
        for v in members:
            extend_labelings(T, lab, v)
    return lab


def path_labelings(path: Sequence[PathStep], b: int) -> List[Tuple[LabelSet, LabelSet]]:
    """
    psi and pi along a root-to-node path.

    Entry k describes the edge (path[k+1], path[k]).
    """
    out: List[Tuple[LabelSet, LabelSet]] = []
    if len(path) < 2:
        return out
    current = root_sets(b)
    out.append(current)
    for k in range(1, len(path) - 1):
        head, tail = path[k], path[k + 1]
        current = step_sets(current[0], current[1], head.label, head.kind, tail.label, b)
        out.append(current)
    return out


# =============================================================================
# LEMMA CHECKERS
# =============================================================================

def check_reflect_membership(T: ConstructionTree, lab: EdgeLabeling) -> List[LemmaMismatch]:
    """Non-root reflect nodes whose label is missing from psi of their parent edge."""
    return [
        LemmaMismatch(v, f"'{T.labels[v]}' not in psi")
        for v in T.reflect_nodes()
        if v != T.root and T.labels[v] not in lab.psi[v]
    ]


def check_split_membership(T: ConstructionTree, lab: EdgeLabeling) -> List[LemmaMismatch]:
    """Split nodes whose label is missing from pi of their parent edge."""
    return [
        LemmaMismatch(v, f"'{T.labels[v]}' not in pi")
        for v in T.split_nodes()
        if v != T.root and T.labels[v] not in lab.pi[v]
    ]


def check_leaf_edges(T: ConstructionTree, lab: EdgeLabeling) -> List[LemmaMismatch]:
    """Leaves whose parent edge does not have empty psi and pi equal to the leaf label."""
    out = []
    for v in range(len(T)):
        if T.children[v] or v == T.root:
            continue
        if lab.psi[v] or lab.pi[v] != {T.labels[v]}:
            out.append(LemmaMismatch(v, f"psi={sorted(lab.psi[v])} pi={sorted(lab.pi[v])}"))
    return out


def check_descent_containment(T: ConstructionTree, lab: EdgeLabeling) -> List[LemmaMismatch]:
    """
    For a split node v with split index i and ancestor u in the i-th reflect layer,
    every label on v's parent edge extends a label on the edge below u, with the
    symbol fixed at each split position crossed on the way down.
    """
    out = []
    for v in T.split_nodes():
        if v == T.root:
            continue
        i = T.split_index(v)
        u = T.ancestor_in_layer(v, T.reflect_layer_index[i])
        below_u = T.children[u][0]
        base = lab.psi[below_u] | lab.pi[below_u]

        fixed: List[Tuple[int, str]] = []
        w = v
        while T.parent[w] != u:
            p = T.parent[w]
            if T.node_kind(p).is_split:
                pos = T.split_index(p)
                fixed.append((pos, T.labels[w][-1 - pos]))
            w = p
        width = i + 1 + len(fixed)

        for x in lab.psi[v] | lab.pi[v]:
            if len(x) != width:
                out.append(LemmaMismatch(v, f"'{x}' has length {len(x)}, expected {width}"))
                break
            if x[-(i + 1):] not in base:
                out.append(LemmaMismatch(v, f"'{x}' does not extend a label below '{T.labels[u]}'"))
                break
            bad = [(pos, s) for pos, s in fixed if x[-1 - pos] != s]
            if bad:
                out.append(LemmaMismatch(v, f"'{x}' breaks fixed symbols {bad}"))
                break
    return out


def check_filter_footnote(T: ConstructionTree, lab: EdgeLabeling) -> List[LemmaMismatch]:
    """Non-root reflect nodes whose own label already sits in pi of their parent edge."""
    return [
        LemmaMismatch(v, f"'{T.labels[v]}' in pi")
        for v in T.reflect_nodes()
        if v != T.root and T.labels[v] in lab.pi[v]
    ]


def check_labeling_invariants(lab: EdgeLabeling) -> List[LemmaMismatch]:
    """Star-free psi, nonempty pi, one length per edge, at most one * per pi label."""
    out = []
    for e in lab.psi:
        psi, pi = lab.psi[e], lab.pi[e]
        if any(STAR in z for z in psi):
            out.append(LemmaMismatch(e, "psi holds a starred label"))
        if not pi:
            out.append(LemmaMismatch(e, "pi is empty"))
        if len({len(z) for z in psi | pi}) > 1:
            out.append(LemmaMismatch(e, "labels of different lengths"))
        if any(z.count(STAR) > 1 for z in pi):
            out.append(LemmaMismatch(e, "pi holds a label with several stars"))
    return out


def labelings_report(T: ConstructionTree, lab: Optional[EdgeLabeling] = None) -> Dict[str, List[LemmaMismatch]]:
    """Run every lemma checker; empty lists mean the lemma holds."""
    lab = lab or compute_labelings(T)
    return {
        "reflect-membership": check_reflect_membership(T, lab),
        "split-membership": check_split_membership(T, lab),
        "leaf-edges": check_leaf_edges(T, lab),
        "descent-containment": check_descent_containment(T, lab),
        "filter-footnote": check_filter_footnote(T, lab),
        "invariants": check_labeling_invariants(lab),
    }
