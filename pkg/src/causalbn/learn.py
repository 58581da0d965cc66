"""Structure learners: score-based hill climbing and tabu search,
constraint-based PC-Stable / Grow-Shrink / IAMB / fast-IAMB, and the hybrid
MMHC. Every learner is deterministic given (data, config, seed) and honors
the configured time limit at move/test granularity.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .data import CategoricalDataset
from .graph import (Graph, GraphError, NoConsistentExtension, apply_meek_rules,
                    cpdag_to_dag, has_directed_path, is_acyclic)
from .stats import ScoreCache, g2_test, mutual_information


class Algorithm(str, Enum):
    PC_STABLE = "pc_stable"
    GS = "gs"
    IAMB = "iamb"
    FAST_IAMB = "fast_iamb"
    HC = "hc"
    TABU = "tabu"
    MMHC = "mmhc"


class GraphKind(str, Enum):
    DAG = "DAG"
    CPDAG = "CPDAG"
    PDAG = "PDAG"


@dataclass(frozen=True)
class LearnConfig:
    algorithm: Algorithm = Algorithm.HC
    alpha: float = 0.05
    max_indegree: int | None = None
    tabu_length: int = 10
    tabu_max_worsening: int = 10
    time_limit: float = 4 * 3600.0  # seconds
    seed: int = 0
    max_sepset: int = 3  # cap on conditioning-set size for CI searches

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must be in (0,1)")
        if self.tabu_length < 1:
            raise ValueError("tabu_length must be >= 1")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


@dataclass
class LearnResult:
    graph: Graph
    graph_kind: GraphKind
    score_trace: list[tuple[int, float]] = field(default_factory=list)
    test_count: int = 0
    elapsed: float = 0.0
    timed_out: bool = False
    notes: list[str] = field(default_factory=list)


class _Deadline:
    def __init__(self, seconds: float):
        self.t_end = time.monotonic() + seconds
        self.hit = False

    def expired(self) -> bool:
        if time.monotonic() > self.t_end:
            self.hit = True
        return self.hit


class _Tester:
    """CI test front-end with caching and a test counter."""

    def __init__(self, data: CategoricalDataset, alpha: float,
                 deadline: _Deadline):
        self.data = data
        self.alpha = alpha
        self.deadline = deadline
        self.count = 0
        self._cache: dict[tuple, bool] = {}

    def independent(self, x: str, y: str, zs: Iterable[str] = ()) -> bool:
        key = (frozenset((x, y)), frozenset(zs))
        if key in self._cache:
            return self._cache[key]
        self.count += 1
        res = g2_test(self.data, x, y, sorted(zs), self.alpha).independent
        self._cache[key] = res
        return res

    def mi(self, x: str, y: str, zs: Iterable[str] = ()) -> float:
        self.count += 1
        return mutual_information(self.data, x, y, sorted(zs))


# ---------------------------------------------------------------------------
# Score-based search


def _legal_moves(g: Graph, max_indegree: int | None):
    """All legal (op, a, b) moves in canonical order. Acyclicity is enforced
    per candidate so every intermediate graph stays a DAG."""
    nodes = g.nodes
    for a in nodes:
        for b in nodes:
            if a == b:
                continue
            if (a, b) in g.directed:
                yield ("delete", a, b)
                if not has_directed_path(g.without_directed(a, b), a, b):
                    if max_indegree is None or len(g.parents(a)) < max_indegree:
                        yield ("reverse", a, b)
            elif (b, a) not in g.directed:
                if not has_directed_path(g, b, a):
                    if max_indegree is None or len(g.parents(b)) < max_indegree:
                        yield ("add", a, b)


def _apply_move(g: Graph, move: tuple[str, str, str]) -> Graph:
    op, a, b = move
    if op == "add":
        return g.with_directed(a, b)
    if op == "delete":
        return g.without_directed(a, b)
    return g.without_directed(a, b).with_directed(b, a)


def _move_delta(g: Graph, move: tuple[str, str, str], cache: ScoreCache) -> float:
    op, a, b = move
    pa_b = frozenset(g.parents(b))
    if op == "add":
        return cache.family_bic(b, pa_b | {a}) - cache.family_bic(b, pa_b)
    if op == "delete":
        return cache.family_bic(b, pa_b - {a}) - cache.family_bic(b, pa_b)
    pa_a = frozenset(g.parents(a))
    return (cache.family_bic(b, pa_b - {a}) - cache.family_bic(b, pa_b)
            + cache.family_bic(a, pa_a | {b}) - cache.family_bic(a, pa_a))


def _current_bic(g: Graph, cache: ScoreCache) -> float:
    return sum(cache.family_bic(n, frozenset(g.parents(n))) for n in g.nodes)


def _best_move(g: Graph, cache: ScoreCache, max_indegree: int | None,
               forbidden: set[frozenset] | None = None,
               skeleton: set[frozenset] | None = None):
    """Highest-delta legal move; ties broken lexicographically on
    (op, from, to). Returns (delta, move) or (None, None)."""
    best = None
    best_delta = None
    for move in _legal_moves(g, max_indegree):
        op, a, b = move
        if skeleton is not None and op == "add" and frozenset((a, b)) not in skeleton:
            continue
        if forbidden is not None:
            nxt = frozenset(_apply_move(g, move).directed)
            if nxt in forbidden:
                continue
        delta = _move_delta(g, move, cache)
        if best_delta is None or delta > best_delta or (
                delta == best_delta and move < best):
            best, best_delta = move, delta
    return best_delta, best


def _greedy_search(data: CategoricalDataset, config: LearnConfig,
                   tabu: bool, skeleton: set[frozenset] | None = None
                   ) -> LearnResult:
    deadline = _Deadline(config.time_limit)
    cache = ScoreCache(data)
    g = Graph(tuple(data.names))
    score = _current_bic(g, cache)
    trace = [(0, score)]
    best_g, best_score = g, score

    visited: list[frozenset] = [frozenset(g.directed)]
    worsening = 0
    iteration = 0
    max_iterations = 1000 * len(g.nodes)  # guards tabu score cycles
    while not deadline.expired() and iteration < max_iterations:
        iteration += 1
        forbidden = set(visited[-config.tabu_length:]) if tabu else None
        delta, move = _best_move(g, cache, config.max_indegree,
                                 forbidden=forbidden, skeleton=skeleton)
        if move is None:
            break
        if delta > 1e-9:
            worsening = 0
        elif tabu and worsening < config.tabu_max_worsening:
            worsening += 1
        else:
            break
        g = _apply_move(g, move)
        score += delta
        trace.append((iteration, score))
        if tabu:
            visited.append(frozenset(g.directed))
        if score > best_score:
            best_g, best_score = g, score

    return LearnResult(graph=best_g, graph_kind=GraphKind.DAG,
                       score_trace=trace, test_count=0,
                       timed_out=deadline.hit)


def hill_climb(data: CategoricalDataset, config: LearnConfig) -> LearnResult:
    """Greedy add/delete/reverse search maximizing BIC from the empty graph."""
    return _greedy_search(data, config, tabu=False)


def tabu_search(data: CategoricalDataset, config: LearnConfig) -> LearnResult:
    """Hill climbing extended with a tabu list of recently visited graphs and
    a budget of non-improving moves; returns the best graph visited."""
    return _greedy_search(data, config, tabu=True)


# ---------------------------------------------------------------------------
# Constraint-based: PC-Stable


def _orient_colliders(skel: Graph, sepsets: dict[frozenset, frozenset],
                      notes: list[str]) -> tuple[Graph, bool]:
    """Orient v-structures x -> z <- y for nonadjacent x,y with common
    neighbor z not in sepset(x,y). Conflicting demands are recorded and the
    earlier orientation kept."""
    demands: set[tuple[str, str]] = set()
    nodes = skel.nodes
    for x, y in itertools.combinations(nodes, 2):
        if skel.has_edge(x, y) or skel.has_edge(y, x):
            continue
        key = frozenset((x, y))
        if key not in sepsets:
            continue
        common = sorted(skel.adjacent(x) & skel.adjacent(y))
        for z in common:
            if z not in sepsets[key]:
                demands.add((x, z))
                demands.add((y, z))
    g = skel
    conflicted = False
    for a, b in sorted(demands):
        if (b, a) in g.directed:
            conflicted = True
            notes.append(f"conflicting v-structure orientation {a}->{b}")
            continue
        if (a, b) in g.directed:
            continue
        if frozenset((a, b)) in g.undirected:
            g = g.orient(a, b)
    return g, conflicted


def pc_stable(data: CategoricalDataset, config: LearnConfig) -> LearnResult:
    """Order-independent PC: edge deletions are batched per conditioning-set
    size so the skeleton does not depend on variable order."""
    deadline = _Deadline(config.time_limit)
    tester = _Tester(data, config.alpha, deadline)
    nodes = tuple(sorted(data.names))
    adj: dict[str, set[str]] = {n: set(nodes) - {n} for n in nodes}
    sepsets: dict[frozenset, frozenset] = {}

    level = 0
    while level <= config.max_sepset and not deadline.expired():
        # freeze adjacencies for this level (the "stable" part)
        frozen = {n: sorted(adj[n]) for n in nodes}
        if all(len(frozen[n]) - 1 < level for n in nodes):
            break
        to_remove: set[frozenset] = set()
        for x in nodes:
            for y in frozen[x]:
                if x >= y or frozenset((x, y)) in to_remove:
                    continue
                separated = False
                for side in (x, y):
                    other = y if side == x else x
                    cands = [c for c in frozen[side] if c != other]
                    for S in itertools.combinations(cands, level):
                        if tester.independent(x, y, S):
                            sepsets[frozenset((x, y))] = frozenset(S)
                            to_remove.add(frozenset((x, y)))
                            separated = True
                            break
                    if separated:
                        break
                if deadline.expired():
                    break
            if deadline.expired():
                break
        for pair in to_remove:
            a, b = tuple(pair)
            adj[a].discard(b)
            adj[b].discard(a)
        level += 1

    skel_edges = {frozenset((a, b)) for a in nodes for b in adj[a]}
    skel = Graph.from_edges(nodes, undirected=[tuple(sorted(p)) for p in skel_edges])
    notes: list[str] = []
    g, conflicted = _orient_colliders(skel, sepsets, notes)
    if conflicted:
        kind = GraphKind.PDAG
    else:
        g = apply_meek_rules(g)
        kind = GraphKind.CPDAG
    return LearnResult(graph=g, graph_kind=kind, test_count=tester.count,
                       timed_out=deadline.hit, notes=notes)


# ---------------------------------------------------------------------------
# Markov-blanket learners: GS, IAMB, fast-IAMB


def _gs_blanket(tester: _Tester, x: str, nodes: Sequence[str]) -> set[str]:
    S: set[str] = set()
    grew = True
    while grew and not tester.deadline.expired():
        grew = False
        for y in nodes:
            if y == x or y in S:
                continue
            if not tester.independent(x, y, S):
                S.add(y)
                grew = True
    for y in sorted(S):
        if tester.independent(x, y, S - {y}):
            S.discard(y)
    return S


def _iamb_blanket(tester: _Tester, x: str, nodes: Sequence[str]) -> set[str]:
    cmb: set[str] = set()
    while not tester.deadline.expired():
        best, best_mi = None, 0.0
        for y in nodes:
            if y == x or y in cmb:
                continue
            if tester.independent(x, y, cmb):
                continue
            mi = tester.mi(x, y, cmb)
            if mi > best_mi:
                best, best_mi = y, mi
        if best is None:
            break
        cmb.add(best)
    for y in sorted(cmb):
        if tester.independent(x, y, cmb - {y}):
            cmb.discard(y)
    return cmb


def _fast_iamb_blanket(tester: _Tester, x: str, nodes: Sequence[str]) -> set[str]:
    cmb: set[str] = set()
    while not tester.deadline.expired():
        scored = []
        for y in nodes:
            if y == x or y in cmb:
                continue
            if tester.independent(x, y, cmb):
                continue
            scored.append((tester.mi(x, y, cmb), y))
        if not scored:
            break
        # batch-add the dependent candidates, strongest first
        scored.sort(key=lambda t: (-t[0], t[1]))
        for _, y in scored:
            cmb.add(y)
    for y in sorted(cmb):
        if tester.independent(x, y, cmb - {y}):
            cmb.discard(y)
    return cmb


def _blankets_to_result(data: CategoricalDataset, config: LearnConfig,
                        tester: _Tester,
                        blankets: dict[str, set[str]]) -> LearnResult:
    """Shared back half of the MB learners: AND-rule symmetry, neighbor
    identification inside blankets, collider orientation, Meek closure."""
    nodes = tuple(sorted(data.names))
    sym = {x: {y for y in blankets[x] if x in blankets[y]} for x in nodes}

    edges: set[frozenset] = set()
    sepsets: dict[frozenset, frozenset] = {}
    for x, y in itertools.combinations(nodes, 2):
        if y not in sym[x]:
            continue
        base = sorted(min(sym[x] - {y}, sym[y] - {x}, key=len))
        separated = False
        for size in range(0, min(len(base), config.max_sepset) + 1):
            for S in itertools.combinations(base, size):
                if tester.independent(x, y, S):
                    sepsets[frozenset((x, y))] = frozenset(S)
                    separated = True
                    break
            if separated or tester.deadline.expired():
                break
        if not separated:
            edges.add(frozenset((x, y)))

    # sepsets for nonadjacent pairs with a common neighbor (for colliders)
    skel = Graph.from_edges(nodes, undirected=[tuple(sorted(p)) for p in edges])
    for x, y in itertools.combinations(nodes, 2):
        key = frozenset((x, y))
        if key in sepsets or skel.has_edge(x, y):
            continue
        if not (skel.neighbors_undirected(x) & skel.neighbors_undirected(y)):
            continue
        base = sorted((sym[x] | sym[y]) - {x, y})
        found = False
        for size in range(0, min(len(base), config.max_sepset) + 1):
            for S in itertools.combinations(base, size):
                if tester.independent(x, y, S):
                    sepsets[key] = frozenset(S)
                    found = True
                    break
            if found or tester.deadline.expired():
                break

    notes: list[str] = []
    g, conflicted = _orient_colliders(skel, sepsets, notes)
    if conflicted:
        kind = GraphKind.PDAG
    else:
        g = apply_meek_rules(g)
        kind = GraphKind.CPDAG
    return LearnResult(graph=g, graph_kind=kind, test_count=tester.count,
                       timed_out=tester.deadline.hit, notes=notes)


def _mb_learner(data: CategoricalDataset, config: LearnConfig,
                blanket_fn) -> LearnResult:
    deadline = _Deadline(config.time_limit)
    tester = _Tester(data, config.alpha, deadline)
    nodes = tuple(sorted(data.names))
    blankets = {x: blanket_fn(tester, x, nodes) for x in nodes}
    return _blankets_to_result(data, config, tester, blankets)


def gs(data: CategoricalDataset, config: LearnConfig) -> LearnResult:
    return _mb_learner(data, config, _gs_blanket)


def iamb(data: CategoricalDataset, config: LearnConfig) -> LearnResult:
    return _mb_learner(data, config, _iamb_blanket)


def fast_iamb(data: CategoricalDataset, config: LearnConfig) -> LearnResult:
    return _mb_learner(data, config, _fast_iamb_blanket)


# ---------------------------------------------------------------------------
# Hybrid: MMHC


def _mmpc(tester: _Tester, x: str, nodes: Sequence[str],
          max_sepset: int) -> set[str]:
    """Max-min parents-and-children: forward max-min association growth,
    then backward removal of candidates separable given the rest."""
    cpc: set[str] = set()

    def min_assoc(y: str) -> float:
        best = float("inf")
        base = sorted(cpc)
        for size in range(0, min(len(base), max_sepset) + 1):
            for S in itertools.combinations(base, size):
                if tester.independent(x, y, S):
                    return 0.0
                best = min(best, tester.mi(x, y, S))
        return best

    while not tester.deadline.expired():
        scored = [(min_assoc(y), y) for y in nodes if y != x and y not in cpc]
        scored = [(a, y) for a, y in scored if a > 0.0]
        if not scored:
            break
        scored.sort(key=lambda t: (-t[0], t[1]))
        cpc.add(scored[0][1])
    for y in sorted(cpc):
        base = sorted(cpc - {y})
        removed = False
        for size in range(0, min(len(base), max_sepset) + 1):
            for S in itertools.combinations(base, size):
                if tester.independent(x, y, S):
                    cpc.discard(y)
                    removed = True
                    break
            if removed:
                break
    return cpc


def mmhc(data: CategoricalDataset, config: LearnConfig) -> LearnResult:
    """MMPC candidate skeleton (AND-symmetrized), then hill climbing with
    edge additions restricted to the candidate pairs."""
    deadline = _Deadline(config.time_limit)
    tester = _Tester(data, config.alpha, deadline)
    nodes = tuple(sorted(data.names))
    cpc = {x: _mmpc(tester, x, nodes, config.max_sepset) for x in nodes}
    skeleton = {frozenset((x, y)) for x in nodes for y in cpc[x] if x in cpc[y]}

    remaining = max(deadline.t_end - time.monotonic(), 1e-3)
    inner = LearnConfig(algorithm=Algorithm.HC, alpha=config.alpha,
                        max_indegree=config.max_indegree,
                        time_limit=remaining, seed=config.seed,
                        max_sepset=config.max_sepset)
    result = _greedy_search(data, inner, tabu=False, skeleton=skeleton)
    result.test_count = tester.count
    result.timed_out = result.timed_out or deadline.hit
    result.notes.append(f"mmpc_candidate_pairs={len(skeleton)}")
    return result


# ---------------------------------------------------------------------------


_DISPATCH = {
    Algorithm.PC_STABLE: pc_stable,
    Algorithm.GS: gs,
    Algorithm.IAMB: iamb,
    Algorithm.FAST_IAMB: fast_iamb,
    Algorithm.HC: hill_climb,
    Algorithm.TABU: tabu_search,
    Algorithm.MMHC: mmhc,
}


def learn(data: CategoricalDataset, config: LearnConfig) -> LearnResult:
    return _DISPATCH[config.algorithm](data, config)


def to_dag(result: LearnResult, seed: int = 0) -> Graph:
    """Convert a learner output to a DAG. CPDAGs get a seeded random
    consistent extension; conflicted PDAGs raise NoConsistentExtension."""
    if result.graph_kind == GraphKind.DAG:
        return result.graph
    if result.graph_kind == GraphKind.PDAG:
        raise NoConsistentExtension(
            "PDAG with conflicting v-structures cannot be extended")
    return cpdag_to_dag(result.graph, seed)
