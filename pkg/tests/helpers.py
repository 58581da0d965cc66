"""Independent oracles used by the tests: brute-force joint enumeration for
inference, path enumeration for d-separation, and random model generators.

These deliberately avoid the library's factor/elimination code paths so they
can catch bugs in them.
"""

from __future__ import annotations

import itertools
import random

import numpy as np

from causalbn.cbn import Cbn, Cpt
from causalbn.data import VariableSpec
from causalbn.graph import Graph


def random_dag(rng: random.Random, nodes, p: float = 0.4) -> Graph:
    """Random DAG: fix a random order, include each forward pair with prob p."""
    order = list(nodes)
    rng.shuffle(order)
    edges = []
    for i, a in enumerate(order):
        for b in order[i + 1:]:
            if rng.random() < p:
                edges.append((a, b))
    return Graph.from_edges(nodes, edges)


def random_cbn(rng: random.Random, n_nodes: int, max_states: int = 3,
               p: float = 0.5) -> Cbn:
    names = [f"V{i}" for i in range(n_nodes)]
    dag = random_dag(rng, names, p)
    cards = {n: rng.randint(2, max_states) for n in names}
    specs = tuple(VariableSpec(name=n, states=tuple(str(s) for s in range(cards[n])))
                  for n in names)
    cpts = {}
    for n in names:
        parents = tuple(sorted(dag.parents(n)))
        q = int(np.prod([cards[p_] for p_ in parents])) if parents else 1
        raw = np.array([[rng.random() + 0.01 for _ in range(cards[n])]
                        for _ in range(q)])
        table = raw / raw.sum(axis=1, keepdims=True)
        cpts[n] = Cpt(child=n, parents=parents,
                      parent_cards=tuple(cards[p_] for p_ in parents),
                      table=table)
    return Cbn(dag=dag, variables=specs, cpts=cpts)


def _cpt_prob(cbn: Cbn, node: str, assignment: dict) -> float:
    cpt = cbn.cpts[node]
    row = 0
    for p in cpt.parents:
        row = row * cbn.cardinality(p) + assignment[p]
    return float(cpt.table[row, assignment[node]])


def joint_table(cbn: Cbn) -> dict[tuple, float]:
    """Full joint by explicit enumeration over all assignments."""
    names = list(cbn.dag.nodes)
    cards = [cbn.cardinality(n) for n in names]
    out = {}
    for combo in itertools.product(*(range(c) for c in cards)):
        a = dict(zip(names, combo))
        prob = 1.0
        for n in names:
            prob *= _cpt_prob(cbn, n, a)
        out[combo] = prob
    return out


def oracle_posterior(cbn: Cbn, target: str, evidence: dict | None = None,
                     do: dict | None = None) -> np.ndarray:
    """P(target | evidence, do(...)) from the enumerated joint of the
    (possibly truncated) factorization."""
    names = list(cbn.dag.nodes)
    do = do or {}
    evidence = evidence or {}
    cards = [cbn.cardinality(n) for n in names]
    dist = np.zeros(cbn.cardinality(target))
    for combo in itertools.product(*(range(c) for c in cards)):
        a = dict(zip(names, combo))
        if any(a[v] != s for v, s in do.items()):
            continue
        if any(a[v] != s for v, s in evidence.items()):
            continue
        prob = 1.0
        for n in names:
            if n in do:
                continue  # truncated factorization: intervened factor dropped
            prob *= _cpt_prob(cbn, n, a)
        dist[a[target]] += prob
    total = dist.sum()
    if total == 0:
        raise ZeroDivisionError("zero-probability evidence in oracle")
    return dist / total


def _collider(path: list[str], i: int, g: Graph) -> bool:
    a, b, c = path[i - 1], path[i], path[i + 1]
    return (a, b) in g.directed and (c, b) in g.directed


def _descendants(g: Graph, x: str) -> set[str]:
    out, stack = set(), [x]
    while stack:
        n = stack.pop()
        for c in g.children(n):
            if c not in out:
                out.add(c)
                stack.append(c)
    return out


def brute_force_d_separated(g: Graph, xs, ys, zs) -> bool:
    """Path-enumeration d-separation oracle: every undirected path between
    X and Y must be blocked by Z (non-collider in Z, or collider with no
    descendant in Z)."""
    xs, ys, zs = set(xs), set(ys), set(zs)
    adj = {n: sorted(g.parents(n) | g.children(n)) for n in g.nodes}

    def blocked(path: list[str]) -> bool:
        for i in range(1, len(path) - 1):
            mid = path[i]
            if _collider(path, i, g):
                if mid not in zs and not (_descendants(g, mid) & zs):
                    return True
            else:
                if mid in zs:
                    return True
        return False

    def paths(src: str):
        stack = [[src]]
        while stack:
            path = stack.pop()
            last = path[-1]
            if last in ys and len(path) > 1:
                yield path
                continue
            for nxt in adj[last]:
                if nxt not in path:
                    stack.append(path + [nxt])

    for x in xs:
        for path in paths(x):
            if not blocked(path):
                return False
    return True


def all_dags(nodes: list[str]) -> list[Graph]:
    """Every DAG over the given (small) node set, by brute enumeration."""
    pairs = list(itertools.combinations(nodes, 2))
    out = []
    # each unordered pair is absent, a->b, or b->a
    for combo in itertools.product((0, 1, 2), repeat=len(pairs)):
        edges = []
        for (a, b), c in zip(pairs, combo):
            if c == 1:
                edges.append((a, b))
            elif c == 2:
                edges.append((b, a))
        try:
            g = Graph.from_edges(nodes, edges)
        except Exception:
            continue
        from causalbn.graph import is_acyclic
        if is_acyclic(g):
            out.append(g)
    return out


def ground_truth_8node() -> Cbn:
    """Fixed 8-node binary network with strong dependencies, used for
    learner-recovery checks."""
    nodes = list("ABCDEFGH")
    edges = [("A", "C"), ("B", "C"), ("C", "D"), ("C", "E"),
             ("D", "F"), ("E", "F"), ("A", "G"), ("F", "H")]
    dag = Graph.from_edges(nodes, edges)
    specs = tuple(VariableSpec(name=n, states=("0", "1")) for n in nodes)
    hi, lo = 0.85, 0.15

    def noisy_or(k):
        # P(child=1 | parents): lo baseline, hi when any parent is 1
        rows = []
        for combo in itertools.product((0, 1), repeat=k):
            p1 = hi if any(combo) else lo
            rows.append([1 - p1, p1])
        return np.array(rows)

    cpts = {}
    for n in nodes:
        parents = tuple(sorted(dag.parents(n)))
        if not parents:
            cpts[n] = Cpt(child=n, parents=(), parent_cards=(),
                          table=np.array([[0.6, 0.4]]))
        else:
            cpts[n] = Cpt(child=n, parents=parents,
                          parent_cards=tuple(2 for _ in parents),
                          table=noisy_or(len(parents)))
    return Cbn(dag=dag, variables=specs, cpts=cpts)


def sample_from_cbn(cbn: Cbn, n: int, seed: int):
    """Ancestral (forward) sampling into a CategoricalDataset."""
    from causalbn.data import CategoricalDataset
    from causalbn.graph import topological_order

    rng = np.random.default_rng(seed)
    order = topological_order(cbn.dag)
    names = list(cbn.dag.nodes)
    cols = {}
    for node in order:
        cpt = cbn.cpts[node]
        if not cpt.parents:
            probs = np.broadcast_to(cpt.table[0], (n, cpt.table.shape[1]))
        else:
            row = np.zeros(n, dtype=np.int64)
            for p in cpt.parents:
                row = row * cbn.cardinality(p) + cols[p]
            probs = cpt.table[row]
        u = rng.random((n, 1))
        cols[node] = (probs.cumsum(axis=1) < u).sum(axis=1)
    data = np.column_stack([cols[nm] for nm in names]).astype(np.int16)
    return CategoricalDataset(variables=cbn.variables, data=data)
