"""
Reading and writing trees, input trees, instances and run records.

Trees and instances use JSON, step-by-step records use JSON Lines, and every
graph can be exported as DOT.
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Union

import pydot
from pyrsistent import pmap, pset

from .ctree import ConstructionTree
from .error_handler import ParseError, UsageError
from .ftransform import ImplicitFTree
from .marked import BuildTrace, MarkedTree
from .olocal import Instance, Transcript

PathLike = Union[str, Path]


def _read_json(path: PathLike) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise ParseError(f"{path}: no such file") from None
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"{path}: {e}") from e


def _write_json(path: PathLike, data: Any) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# =============================================================================
# CONSTRUCTION TREES
# =============================================================================

def tree_to_dict(T: ConstructionTree) -> Dict:
    return {
        "b": T.b,
        "nodes": [
            {"id": v, "label": T.labels[v], "parent": T.parent[v], "children": list(T.children[v])}
            for v in range(len(T))
        ],
    }


def tree_from_dict(data: Any) -> ConstructionTree:
    """
    Raises:
        ParseError: If keys are missing or ids are not 0..n-1
    """
    try:
        b = int(data["b"])
        nodes = sorted(data["nodes"], key=lambda node: node["id"])
        if [node["id"] for node in nodes] != list(range(len(nodes))):
            raise ParseError("node ids must be 0..n-1")
        return ConstructionTree(
            b,
            [node["parent"] for node in nodes],
            [node.get("children", []) for node in nodes],
            [str(node["label"]) for node in nodes],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed tree: {e!r}") from e


def load_tree(path: PathLike) -> ConstructionTree:
    return tree_from_dict(_read_json(path))


def save_tree(T: ConstructionTree, path: PathLike) -> None:
    _write_json(path, tree_to_dict(T))


def implicit_to_dict(I: ImplicitFTree) -> Dict:
    return {
        "b": I.b,
        "total": I.total,
        "layers": [
            {
                "index": layer.index,
                "node": layer.entry.node,
                "flag": layer.entry.flag,
                "kind": layer.kind.value,
                "pattern": str(layer.pattern),
                "free": list(layer.free),
                "size": layer.size,
                "offset": layer.offset,
            }
            for layer in I.layers
        ],
    }


# =============================================================================
# MARKED TREES AND INSTANCES
# =============================================================================

def marked_to_dict(G: MarkedTree) -> Dict:
    return {
        "delta": G.delta,
        "nodes": [
            {
                "id": v,
                "label": G.labels[v],
                "marked": G.is_marked(v),
                "ports": {str(p): w for p, w in sorted(G.ports[v].items())},
            }
            for v in G.nodes()
        ],
    }


def marked_from_dict(data: Any) -> MarkedTree:
    try:
        nodes = data["nodes"]
        labels = {int(node["id"]): str(node["label"]) for node in nodes}
        ports = {int(node["id"]): pmap({int(p): int(w) for p, w in node["ports"].items()}) for node in nodes}
        marked = [int(node["id"]) for node in nodes if node.get("marked")]
        return MarkedTree(
            delta=int(data["delta"]),
            labels=pmap(labels),
            ports=pmap(ports),
            marked=pset(marked),
            next_id=max(labels) + 1 if labels else 0,
        )
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise ParseError(f"malformed marked tree: {e!r}") from e


def instance_to_dict(inst: Instance) -> Dict:
    return {"n": inst.n, "edges": [list(e) for e in inst.edges()]}


def instance_from_dict(data: Any) -> Instance:
    try:
        edges = [tuple(int(x) for x in e) for e in data["edges"]]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed instance: {e!r}") from e
    if any(len(e) != 4 for e in edges):
        raise ParseError("every edge needs (u, port at u, w, port at w)")
    inst = Instance.from_edges(edges)
    if "n" in data and data["n"] != inst.n:
        raise UsageError(f"instance declares n={data['n']} but has {inst.n} nodes")
    return inst


def load_instance(path: PathLike) -> Instance:
    return instance_from_dict(_read_json(path))


def save_instance(inst: Instance, path: PathLike) -> None:
    _write_json(path, instance_to_dict(inst))


# =============================================================================
# JSON LINES
# =============================================================================

def write_jsonl(path: PathLike, records: Iterable[Dict]) -> int:
    count = 0
    with open(path, "w") as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True, default=str) + "\n")
            count += 1
    return count


def read_jsonl(path: PathLike) -> Iterator[Dict]:
    path = Path(path)
    try:
        with open(path) as f:
            for number, line in enumerate(f, start=1):
                if line.strip():
                    try:
                        yield json.loads(line)
                    except json.JSONDecodeError as e:
                        raise ParseError(f"{path}:{number}: {e}") from e
    except FileNotFoundError:
        raise ParseError(f"{path}: no such file") from None


def trace_records(trace: BuildTrace) -> List[Dict]:
    """One record per build step, with the split distance where one was measured."""
    distances = {r.step: r for r in trace.distances}
    out = []
    for step in trace.steps:
        record = step.to_dict()
        if step.index in distances:
            record["distance"] = distances[step.index].distance
        out.append(record)
    return out


def transcript_records(transcript: Transcript) -> List[Dict]:
    return transcript.to_dicts()


# =============================================================================
# DOT
# =============================================================================

def _quote(text: str) -> str:
    return '"' + text.replace('"', '\\"') + '"'


def tree_to_dot(T: ConstructionTree) -> str:
    dot = pydot.Dot(graph_type="digraph", rankdir="TB")
    dot.set_node_defaults(shape="box")
    for v in range(len(T)):
        kind = T.node_kind(v)
        dot.add_node(pydot.Node(str(v), label=_quote(T.labels[v]), style="rounded" if kind.is_split else "solid"))
    for v in range(len(T)):
        for c in T.children[v]:
            dot.add_edge(pydot.Edge(str(v), str(c)))
    return dot.to_string()


def marked_to_dot(G: MarkedTree) -> str:
    dot = pydot.Dot(graph_type="graph")
    for v in G.nodes():
        dot.add_node(
            pydot.Node(str(v), label=_quote(G.labels[v]), shape="doublecircle" if G.is_marked(v) else "circle")
        )
    for u, pu, w, pw in G.edges():
        dot.add_edge(pydot.Edge(str(u), str(w), taillabel=str(pu), headlabel=str(pw)))
    return dot.to_string()


def instance_to_dot(inst: Instance, highlight: Optional[Iterable[int]] = None) -> str:
    marked = set(highlight or ())
    dot = pydot.Dot(graph_type="graph")
    for v in inst.nodes():
        attrs = {"shape": "circle"}
        if v in marked:
            attrs["style"] = "filled"
        dot.add_node(pydot.Node(str(v), **attrs))
    for u, pu, w, pw in inst.edges():
        dot.add_edge(pydot.Edge(str(u), str(w), taillabel=str(pu), headlabel=str(pw)))
    return dot.to_string()
