"""Graph representations and structural queries.

Covers partially directed graphs (directed + undirected edge sets),
acyclicity, d-separation, Markov blankets, the DAG <-> CPDAG conversions
(v-structure identification, Meek closure, consistent extension), mutilated
views for interventions, and the confidence-tiered knowledge graphs.

All iteration and tie-breaking is canonicalized by node-name order so every
downstream procedure is deterministic.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

Edge = tuple[str, str]

TIERS = ("high", "moderate", "low")


class GraphError(ValueError):
    pass


class NoConsistentExtension(GraphError):
    """Raised when a PDAG admits no DAG with the same skeleton and
    v-structures (e.g. conflicting v-structures)."""


@dataclass(frozen=True)
class Graph:
    """Node set plus directed and undirected edge sets.

    Invariants: no self-loops, a pair appears in at most one edge set and in
    at most one direction of the directed set.
    """

    nodes: tuple[str, ...]
    directed: frozenset[Edge] = frozenset()
    undirected: frozenset[frozenset] = frozenset()

    def __post_init__(self):
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise GraphError("duplicate node names")
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes)))
        und = frozenset(frozenset(e) for e in self.undirected)
        object.__setattr__(self, "undirected", und)
        for a, b in self.directed:
            if a == b:
                raise GraphError(f"self-loop at {a}")
            if a not in node_set or b not in node_set:
                raise GraphError(f"edge ({a},{b}) uses unknown node")
            if (b, a) in self.directed:
                raise GraphError(f"both directions present: {a},{b}")
            if frozenset((a, b)) in und:
                raise GraphError(f"pair ({a},{b}) both directed and undirected")
        for pair in und:
            if len(pair) != 2:
                raise GraphError("undirected self-loop")
            if not pair <= node_set:
                raise GraphError("undirected edge uses unknown node")

    # -- constructors -------------------------------------------------------

    @staticmethod
    def from_edges(nodes: Iterable[str], directed: Iterable[Edge] = (),
                   undirected: Iterable[Edge] = ()) -> "Graph":
        return Graph(tuple(nodes), frozenset(directed),
                     frozenset(frozenset(e) for e in undirected))

    # -- basic queries -------------------------------------------------------

    def parents(self, x: str) -> set[str]:
        self._check(x)
        return {a for a, b in self.directed if b == x}

    def children(self, x: str) -> set[str]:
        self._check(x)
        return {b for a, b in self.directed if a == x}

    def neighbors_undirected(self, x: str) -> set[str]:
        self._check(x)
        return {next(iter(p - {x})) for p in self.undirected if x in p}

    def adjacent(self, x: str) -> set[str]:
        return self.parents(x) | self.children(x) | self.neighbors_undirected(x)

    def has_edge(self, a: str, b: str) -> bool:
        return (a, b) in self.directed or frozenset((a, b)) in self.undirected

    def skeleton(self) -> frozenset[frozenset]:
        return frozenset(frozenset(e) for e in self.directed) | self.undirected

    def _check(self, x: str):
        if x not in self.nodes:
            raise GraphError(f"unknown node {x!r}")

    @property
    def is_fully_directed(self) -> bool:
        return not self.undirected

    def sorted_directed(self) -> list[Edge]:
        return sorted(self.directed)

    # -- edits (return new graphs; Graph is immutable) -----------------------

    def with_directed(self, a: str, b: str) -> "Graph":
        return Graph(self.nodes, self.directed | {(a, b)},
                     self.undirected - {frozenset((a, b))})

    def without_directed(self, a: str, b: str) -> "Graph":
        return Graph(self.nodes, self.directed - {(a, b)}, self.undirected)

    def orient(self, a: str, b: str) -> "Graph":
        """Turn the undirected edge a-b into a->b."""
        pair = frozenset((a, b))
        if pair not in self.undirected:
            raise GraphError(f"no undirected edge {a}-{b}")
        return Graph(self.nodes, self.directed | {(a, b)}, self.undirected - {pair})


def is_acyclic(g: Graph) -> bool:
    """True iff the directed part has no directed cycle (undirected ignored)."""
    indeg = {n: 0 for n in g.nodes}
    ch: dict[str, list[str]] = {n: [] for n in g.nodes}
    for a, b in g.directed:
        indeg[b] += 1
        ch[a].append(b)
    stack = [n for n in g.nodes if indeg[n] == 0]
    seen = 0
    while stack:
        n = stack.pop()
        seen += 1
        for c in ch[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                stack.append(c)
    return seen == len(g.nodes)


def topological_order(g: Graph) -> list[str]:
    if not is_acyclic(g):
        raise GraphError("graph is cyclic")
    indeg = {n: len(g.parents(n)) for n in g.nodes}
    order, ready = [], sorted(n for n in g.nodes if indeg[n] == 0)
    while ready:
        n = ready.pop(0)
        order.append(n)
        for c in sorted(g.children(n)):
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
        ready.sort()
    return order


def has_directed_path(g: Graph, src: str, dst: str) -> bool:
    """Reachability src ->* dst along directed edges."""
    stack, seen = [src], {src}
    while stack:
        n = stack.pop()
        if n == dst:
            return True
        for c in g.children(n):
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return False


def ancestors(g: Graph, targets: Iterable[str]) -> set[str]:
    """All nodes with a directed path into any target (targets excluded
    unless reachable from another target)."""
    out: set[str] = set()
    stack = list(targets)
    while stack:
        n = stack.pop()
        for p in g.parents(n):
            if p not in out:
                out.add(p)
                stack.append(p)
    return out


def markov_blanket(g: Graph, x: str) -> set[str]:
    """Parents, children, and the children's other parents."""
    g._check(x)
    pa, ch = g.parents(x), g.children(x)
    spouses = set()
    for c in ch:
        spouses |= g.parents(c)
    return (pa | ch | spouses) - {x}


def d_separated(g: Graph, xs: Iterable[str], ys: Iterable[str],
                zs: Iterable[str] = ()) -> bool:
    """Standard d-separation on a DAG via reachability over (node, direction)
    states (Bayes-ball)."""
    xs, ys, zs = set(xs), set(ys), set(zs)
    if xs & ys or xs & zs or ys & zs:
        raise GraphError("X, Y, Z must be pairwise disjoint")
    for n in xs | ys | zs:
        g._check(n)
    if not is_acyclic(g) or g.undirected:
        raise GraphError("d-separation requires a DAG")
    anc_z = ancestors(g, zs) | zs

    # states: (node, 'up') entered from a child; (node, 'down') from a parent
    start = [(x, "up") for x in xs]
    seen = set(start)
    stack = list(start)
    while stack:
        n, d = stack.pop()
        if n in ys:
            return False
        moves = []
        if d == "up" and n not in zs:
            moves += [(p, "up") for p in g.parents(n)]
            moves += [(c, "down") for c in g.children(n)]
        elif d == "down":
            if n not in zs:
                moves += [(c, "down") for c in g.children(n)]
            if n in anc_z:  # collider (or descendant-of-conditioned) opens
                moves += [(p, "up") for p in g.parents(n)]
        for m in moves:
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return True


# ---------------------------------------------------------------------------
# Mutilation


@dataclass(frozen=True)
class MutilatedViews:
    g_bar_x: Graph     # incoming edges to X removed
    g_under_x: Graph   # outgoing edges from X removed


def mutilate(g: Graph, cut_incoming: Iterable[str] = (),
             cut_outgoing: Iterable[str] = ()) -> Graph:
    ci, co = set(cut_incoming), set(cut_outgoing)
    for n in ci | co:
        g._check(n)
    directed = frozenset(
        (a, b) for a, b in g.directed if b not in ci and a not in co
    )
    return Graph(g.nodes, directed, g.undirected)


def mutilated_views(g: Graph, xs: Iterable[str]) -> MutilatedViews:
    xs = list(xs)
    return MutilatedViews(
        g_bar_x=mutilate(g, cut_incoming=xs),
        g_under_x=mutilate(g, cut_outgoing=xs),
    )


# ---------------------------------------------------------------------------
# DAG <-> CPDAG


def _v_structures(g: Graph) -> set[tuple[str, str, str]]:
    """Colliders a->c<-b with a,b non-adjacent; returned as (min(a,b), c, max)."""
    out = set()
    for c in g.nodes:
        pa = sorted(g.parents(c))
        for i in range(len(pa)):
            for j in range(i + 1, len(pa)):
                a, b = pa[i], pa[j]
                if not g.has_edge(a, b) and not g.has_edge(b, a):
                    out.add((a, c, b))
    return out


def apply_meek_rules(g: Graph) -> Graph:
    """Orient undirected edges forced by the existing directed edges
    (Meek rules 1-4), to closure."""
    changed = True
    while changed:
        changed = False
        for pair in sorted(g.undirected, key=sorted):
            a, b = sorted(pair)
            for x, y in ((a, b), (b, a)):
                if _meek_forces(g, x, y):
                    g = g.orient(x, y)
                    changed = True
                    break
            if changed:
                break
    return g


def _meek_forces(g: Graph, x: str, y: str) -> bool:
    """True if Meek rules 1-3 force x -> y for the undirected edge x-y.

    Rule 4 is only needed with externally imposed background-knowledge
    orientations; rules 1-3 are complete when the directed edges all come
    from v-structures, which is the only way this module produces PDAGs.
    """
    adj_y = g.adjacent(y)
    # R1: z -> x, z not adjacent to y  =>  x -> y
    for z in g.parents(x):
        if z not in adj_y:
            return True
    # R2: x -> z -> y  =>  x -> y
    for z in g.children(x):
        if (z, y) in g.directed:
            return True
    # R3: x - z1 -> y, x - z2 -> y with z1,z2 non-adjacent  =>  x -> y
    zs = [z for z in g.neighbors_undirected(x) if (z, y) in g.directed]
    for i in range(len(zs)):
        for j in range(i + 1, len(zs)):
            z1, z2 = zs[i], zs[j]
            if not g.has_edge(z1, z2) and not g.has_edge(z2, z1):
                return True
    return False


def dag_to_cpdag(g: Graph) -> Graph:
    """Canonical CPDAG of g's Markov equivalence class: v-structure edges
    stay directed, everything else undirected, then Meek closure."""
    if g.undirected or not is_acyclic(g):
        raise GraphError("dag_to_cpdag requires a DAG")
    compelled: set[Edge] = set()
    for a, c, b in _v_structures(g):
        compelled.add((a, c))
        compelled.add((b, c))
    undirected = [tuple(sorted((a, b))) for a, b in g.directed
                  if (a, b) not in compelled]
    pattern = Graph.from_edges(g.nodes, compelled, undirected)
    return apply_meek_rules(pattern)


def cpdag_to_dag(g: Graph, seed: int = 0) -> Graph:
    """A consistent extension of a PDAG: acyclic, same skeleton, same
    v-structures (Dor & Tarsi removal method). When several orientations are
    valid the seeded generator picks uniformly among candidate sinks.

    Raises NoConsistentExtension when none exists (e.g. conflicting
    v-structures)."""
    rng = random.Random(seed)
    work = g
    oriented = g
    remaining = set(g.nodes)
    while remaining:
        candidates = []
        for x in sorted(remaining):
            if work.children(x):
                continue  # must be a sink in the directed part
            und = work.neighbors_undirected(x)
            adj = work.adjacent(x)
            # every undirected neighbor must be adjacent to all of x's
            # other adjacents, else orienting into x creates a new collider
            if all(adj - {y} <= work.adjacent(y) for y in und):
                candidates.append(x)
        if not candidates:
            raise NoConsistentExtension(
                "PDAG admits no consistent extension")
        x = rng.choice(candidates)
        for y in sorted(work.neighbors_undirected(x)):
            oriented = oriented.orient(y, x)
        # remove x from the working graph
        keep = remaining - {x}
        work = Graph(
            tuple(keep),
            frozenset((a, b) for a, b in work.directed if a in keep and b in keep),
            frozenset(p for p in work.undirected if p <= keep),
        )
        remaining = keep
    if not is_acyclic(oriented):
        raise NoConsistentExtension("extension is cyclic")
    return oriented


# ---------------------------------------------------------------------------
# Knowledge graphs


@dataclass(frozen=True)
class KnowledgeGraph:
    """Directed edge list where each edge carries a confidence tier. The
    high-tier subgraph, high+moderate subgraph, and full graph must each be
    acyclic."""

    base: Graph
    tier_of: Mapping[Edge, str]

    def __post_init__(self):
        if self.base.undirected:
            raise GraphError("knowledge graph must be fully directed")
        if set(self.tier_of) != set(self.base.directed):
            raise GraphError("every edge needs exactly one tier")
        for t in self.tier_of.values():
            if t not in TIERS:
                raise GraphError(f"unknown tier {t!r}")
        for level in TIERS:
            if not is_acyclic(self.slice(level)):
                raise GraphError(f"{level}-tier slice is cyclic")

    def slice(self, level: str) -> Graph:
        """Edges at confidence >= level: high -> high only; moderate ->
        high+moderate; low -> everything."""
        if level not in TIERS:
            raise GraphError(f"unknown confidence tier {level!r}")
        keep = TIERS[: TIERS.index(level) + 1]
        edges = [e for e, t in self.tier_of.items() if t in keep]
        return Graph.from_edges(self.base.nodes, edges)


# ---------------------------------------------------------------------------
# Serialization


def edges_to_csv(g: Graph, tier_of: Mapping[Edge, str] | None = None) -> str:
    lines = ["from,to,mark,tier"]
    for a, b in sorted(g.directed):
        tier = (tier_of or {}).get((a, b), "")
        lines.append(f"{a},{b},directed,{tier}")
    for pair in sorted(g.undirected, key=sorted):
        a, b = sorted(pair)
        lines.append(f"{a},{b},undirected,")
    return "\n".join(lines) + "\n"


def graph_from_csv(text: str, nodes: Sequence[str] | None = None) -> Graph:
    directed, undirected, seen = [], [], set()
    rows = [r.strip() for r in text.strip().splitlines()]
    header = [c.strip() for c in rows[0].split(",")]
    for row in rows[1:]:
        if not row:
            continue
        cells = dict(zip(header, (c.strip() for c in row.split(","))))
        a, b = cells["from"], cells["to"]
        seen |= {a, b}
        if cells.get("mark", "directed") == "undirected":
            undirected.append((a, b))
        else:
            directed.append((a, b))
    return Graph.from_edges(nodes if nodes is not None else sorted(seen),
                            directed, undirected)


def knowledge_from_csv(text: str, nodes: Sequence[str]) -> KnowledgeGraph:
    rows = [r.strip() for r in text.strip().splitlines()]
    header = [c.strip() for c in rows[0].split(",")]
    edges, tiers = [], {}
    for row in rows[1:]:
        if not row:
            continue
        cells = dict(zip(header, (c.strip() for c in row.split(","))))
        e = (cells["from"], cells["to"])
        edges.append(e)
        tiers[e] = cells["tier"].lower()
    return KnowledgeGraph(Graph.from_edges(nodes, edges), tiers)


_TIER_COLORS = {"high": "green", "moderate": "blue", "low": "red"}


def to_dot(g: Graph, tier_of: Mapping[Edge, str] | None = None,
           name: str = "G") -> str:
    lines = [f"digraph {name} {{"]
    for n in g.nodes:
        lines.append(f'  "{n}";')
    for a, b in sorted(g.directed):
        tier = (tier_of or {}).get((a, b))
        attr = f' [color={_TIER_COLORS[tier]}]' if tier else ""
        lines.append(f'  "{a}" -> "{b}"{attr};')
    for pair in sorted(g.undirected, key=sorted):
        a, b = sorted(pair)
        lines.append(f'  "{a}" -> "{b}" [dir=none];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json_obj(g: Graph, tier_of: Mapping[Edge, str] | None = None) -> dict:
    edges = []
    for a, b in sorted(g.directed):
        e = {"from": a, "to": b, "directed": True}
        tier = (tier_of or {}).get((a, b))
        if tier:
            e["tier"] = tier
        edges.append(e)
    for pair in sorted(g.undirected, key=sorted):
        a, b = sorted(pair)
        edges.append({"from": a, "to": b, "directed": False})
    return {"nodes": list(g.nodes), "edges": edges}


def graph_from_json_obj(obj: Mapping) -> Graph:
    directed = [(e["from"], e["to"]) for e in obj["edges"] if e.get("directed", True)]
    undirected = [(e["from"], e["to"]) for e in obj["edges"] if not e.get("directed", True)]
    return Graph.from_edges(obj["nodes"], directed, undirected)
