"""Model averaging: fuse many learned graphs into a single DAG by edge
frequency, with cycle repair via edge reversal (set C) and a frequency
threshold for exclusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .graph import Edge, Graph, GraphError, has_directed_path


@dataclass(frozen=True)
class EdgeTally:
    directed_freq: dict[Edge, int]
    undirected_freq: dict[frozenset, int]
    n_inputs: int


@dataclass
class AverageResult:
    graph: Graph
    reversed_set_c: list[Edge] = field(default_factory=list)
    excluded_below_threshold: list[tuple] = field(default_factory=list)
    oriented_undirected: list[Edge] = field(default_factory=list)


def tally(graphs: Sequence[Graph]) -> EdgeTally:
    """Count directed and undirected edge occurrences across input graphs.
    All graphs must share one node set."""
    if not graphs:
        raise GraphError("no input graphs")
    nodes = graphs[0].nodes
    d: dict[Edge, int] = {}
    u: dict[frozenset, int] = {}
    for g in graphs:
        if g.nodes != nodes:
            raise GraphError("input graphs have differing node sets")
        for e in g.directed:
            d[e] = d.get(e, 0) + 1
        for p in g.undirected:
            u[p] = u.get(p, 0) + 1
    return EdgeTally(directed_freq=d, undirected_freq=u, n_inputs=len(graphs))


def default_threshold(n_inputs: int) -> int:
    """Edges must appear in at least a third of the inputs: ceil(n/3)."""
    if n_inputs < 1:
        raise GraphError("n_inputs must be >= 1")
    return math.ceil(n_inputs / 3)


def _freq_order_directed(freq: dict[Edge, int]) -> list[Edge]:
    return sorted(freq, key=lambda e: (-freq[e], e))


def _freq_order_undirected(freq: dict[frozenset, int]) -> list[tuple[str, str]]:
    pairs = {tuple(sorted(p)): f for p, f in freq.items()}
    return sorted(pairs, key=lambda p: (-pairs[p], p))


def model_average(t: EdgeTally, min_freq: int, nodes: Sequence[str]) -> AverageResult:
    """Three-step frequency-ordered insertion producing a DAG.

    Step 1 inserts directed edges by descending frequency, skipping edges
    whose reverse is present and deferring cycle-creating edges (reversed)
    to set C. Step 2 inserts undirected edges, orienting each (low->high
    node name, flipped if that closes a cycle). Step 3 inserts the deferred
    set-C edges. Ties are broken lexicographically throughout.
    """
    if min_freq < 1:
        raise GraphError("min_freq must be >= 1")
    g = Graph(tuple(nodes))
    result = AverageResult(graph=g)

    kept_d = {e: f for e, f in t.directed_freq.items() if f >= min_freq}
    kept_u = {p: f for p, f in t.undirected_freq.items() if f >= min_freq}
    result.excluded_below_threshold = sorted(
        [(a, b, "directed", f) for (a, b), f in t.directed_freq.items()
         if f < min_freq]
        + [(*sorted(p), "undirected", f) for p, f in t.undirected_freq.items()
           if f < min_freq]
    )

    set_c: list[tuple[int, Edge]] = []

    # step 1: directed edges, most frequent first
    for a, b in _freq_order_directed(kept_d):
        if (b, a) in g.directed:
            continue
        if (a, b) in g.directed:
            continue
        if has_directed_path(g, b, a):
            set_c.append((kept_d[(a, b)], (b, a)))
            continue
        g = g.with_directed(a, b)

    # step 2: undirected edges, oriented deterministically
    for a, b in _freq_order_undirected(kept_u):
        if g.has_edge(a, b) or g.has_edge(b, a):
            continue
        if not has_directed_path(g, b, a):
            g = g.with_directed(a, b)
            result.oriented_undirected.append((a, b))
        elif not has_directed_path(g, a, b):
            g = g.with_directed(b, a)
            result.oriented_undirected.append((b, a))
        # both directions closing a cycle is impossible in a DAG

    # step 3: deferred reversed edges, most frequent first
    for f, (a, b) in sorted(set_c, key=lambda t: (-t[0], t[1])):
        if g.has_edge(a, b) or g.has_edge(b, a):
            continue
        if has_directed_path(g, b, a):
            continue  # still cyclic; drop (procedure must end acyclic)
        g = g.with_directed(a, b)
        result.reversed_set_c.append((a, b))

    result.graph = g
    return result


def average_to_json_obj(t: EdgeTally, result: AverageResult) -> dict:
    edges = []
    for a, b in result.graph.sorted_directed():
        edges.append({
            "from": a, "to": b,
            "frequency": t.directed_freq.get((a, b), 0),
            "reversed_from_set_c": (a, b) in result.reversed_set_c,
            "oriented_from_undirected": (a, b) in result.oriented_undirected,
        })
    return {
        "nodes": list(result.graph.nodes),
        "edges": edges,
        "n_inputs": t.n_inputs,
        "excluded_below_threshold": [list(e) for e in result.excluded_below_threshold],
    }
