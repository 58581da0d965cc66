"""Structural comparison of learned DAGs against reference DAGs: structural
Hamming distance, precision/recall/F1, the balanced scoring function, and
per-edge agreement tables against knowledge graphs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .graph import Graph, GraphError, KnowledgeGraph


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int
    reversed: int
    a: int  # edges in the reference graph
    i: int  # unordered node pairs |V|(|V|-1)/2


@dataclass(frozen=True)
class MetricReport:
    shd: int
    precision: float
    recall: float
    f1: float
    bsf: float


def _require_dags(g: Graph, ref: Graph):
    if g.nodes != ref.nodes:
        raise GraphError("graphs must share a node set")
    if g.undirected or ref.undirected:
        raise GraphError("metrics require fully directed graphs")


def _skeletonize(g: Graph) -> Graph:
    return Graph.from_edges(g.nodes,
                            directed=[tuple(sorted(e)) for e in g.directed])


def shd(g: Graph, ref: Graph) -> int:
    """Additions + deletions + reversals transforming g into ref; a reversal
    costs one."""
    _require_dags(g, ref)
    ge, re_ = g.directed, ref.directed
    reversals = sum(1 for a, b in ge if (b, a) in re_)
    additions = sum(1 for a, b in re_ if (a, b) not in ge and (b, a) not in ge)
    deletions = sum(1 for a, b in ge if (a, b) not in re_ and (b, a) not in re_)
    return additions + deletions + reversals


def confusion(g: Graph, ref: Graph, skeleton: bool = False) -> ConfusionCounts:
    """Strict-orientation confusion counts. A reversed edge counts toward
    both FP and FN. With skeleton=True both graphs are first reduced to their
    skeletons and orientation is ignored."""
    _require_dags(g, ref)
    if skeleton:
        g, ref = _skeletonize(g), _skeletonize(ref)
        ge = {frozenset(e) for e in g.directed}
        re_ = {frozenset(e) for e in ref.directed}
        rev = 0
        tp = len(ge & re_)
        fp = len(ge - re_)
        fn = len(re_ - ge)
    else:
        ge, re_ = g.directed, ref.directed
        tp = len(ge & re_)
        rev = sum(1 for a, b in ge if (b, a) in re_)
        fp = len(ge) - tp
        fn = len(re_) - tp
    v = len(g.nodes)
    i = v * (v - 1) // 2
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=i - fp, reversed=rev,
                           a=len(re_), i=i)


def f1(c: ConfusionCounts) -> float:
    p = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    r = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    return 2 * p * r / (p + r) if p + r else 0.0


def precision_recall(c: ConfusionCounts) -> tuple[float, float]:
    p = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    r = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    return p, r


def bsf(c: ConfusionCounts) -> float:
    """0.5 (TP/a + TN/i - FP/i - FN/a). Undefined for an empty reference."""
    if c.a < 1:
        raise GraphError("BSF undefined for an empty reference graph")
    return 0.5 * (c.tp / c.a + c.tn / c.i - c.fp / c.i - c.fn / c.a)


def metric_report(g: Graph, ref: Graph, skeleton: bool = False) -> MetricReport:
    c = confusion(g, ref, skeleton=skeleton)
    p, r = precision_recall(c)
    return MetricReport(shd=shd(_skeletonize(g) if skeleton else g,
                                _skeletonize(ref) if skeleton else ref),
                        precision=p, recall=r, f1=f1(c), bsf=bsf(c))


def agreement_table(graphs: Mapping[str, Graph], ref: KnowledgeGraph,
                    tier: str = "high") -> dict:
    """Per-reference-edge status (match / reversed / absent) for each named
    graph, plus aggregate counts. `aligned` counts match + reversed, the
    convention used when quoting agreement against expert edges."""
    ref_slice = ref.slice(tier)
    rows = []
    for a, b in sorted(ref_slice.directed):
        row = {"parent": a, "child": b, "status": {}}
        for name, g in graphs.items():
            if g.nodes != ref_slice.nodes:
                raise GraphError(f"{name}: node-set mismatch with reference")
            if (a, b) in g.directed:
                row["status"][name] = "match"
            elif (b, a) in g.directed:
                row["status"][name] = "reversed"
            else:
                row["status"][name] = "absent"
        rows.append(row)
    aggregates = {}
    for name in graphs:
        counts = {"match": 0, "reversed": 0, "absent": 0}
        for row in rows:
            counts[row["status"][name]] += 1
        counts["aligned"] = counts["match"] + counts["reversed"]
        aggregates[name] = counts
    return {"tier": tier, "reference_edges": len(rows), "rows": rows,
            "aggregates": aggregates}


def agreement_to_csv(table: dict) -> str:
    names = sorted(table["aggregates"])
    lines = ["parent,child," + ",".join(names)]
    for row in table["rows"]:
        lines.append(",".join([row["parent"], row["child"]]
                              + [row["status"][n] for n in names]))
    return "\n".join(lines) + "\n"
