import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalbn.average import (average_to_json_obj, default_threshold,
                              model_average, tally)
from causalbn.graph import Graph, is_acyclic
from helpers import random_dag

ABC = ["A", "B", "C"]


def g(edges, nodes=ABC, undirected=()):
    return Graph.from_edges(nodes, edges, undirected)


def run(graphs, min_freq, nodes=ABC):
    return model_average(tally(graphs), min_freq, nodes)


def test_default_threshold():
    assert default_threshold(11) == 4
    assert default_threshold(1) == 1
    assert default_threshold(3) == 1
    assert default_threshold(6) == 2
    assert default_threshold(7) == 3


def test_unanimity():
    dag = g([("A", "B"), ("B", "C")])
    for k in (1, 2, 5):
        out = run([dag] * k, min_freq=k)
        assert out.graph.directed == dag.directed
        assert not out.graph.undirected


def test_three_graph_hand_trace():
    # A->B appears 3x (kept); B->C and C->B each 1x (below threshold 2)
    out = run([g([("A", "B"), ("B", "C")]),
               g([("A", "B"), ("C", "B")]),
               g([("A", "B")])], min_freq=2)
    assert out.graph.directed == frozenset({("A", "B")})
    pairs = {frozenset((a, b)) for a, b, _, _ in out.excluded_below_threshold}
    assert frozenset(("B", "C")) in pairs


def test_cycle_hand_trace():
    # A->B, B->C, C->A all 3x: insertion order by frequency then lexicographic
    # puts A->B, then B->C; C->A closes a cycle so it is reversed into set C
    # and inserted as A->C afterwards.
    cyc = [g([("A", "B"), ("B", "C"), ("C", "A")], nodes=ABC)]
    # Graph construction forbids nothing here: the cyclic input is a valid
    # directed graph, just not acyclic.
    out = run(cyc * 3, min_freq=3)
    assert out.graph.directed == frozenset({("A", "B"), ("B", "C"), ("A", "C")})
    assert out.reversed_set_c == [("A", "C")]  # C->A stored as inserted
    assert is_acyclic(out.graph)


def test_reverse_duplicate_skipped():
    # A->B twice, B->A once: A->B wins on frequency; B->A skipped
    out = run([g([("A", "B")]), g([("A", "B")]), g([("B", "A")])], min_freq=1)
    assert ("A", "B") in out.graph.directed
    assert ("B", "A") not in out.graph.directed


def test_undirected_edges_oriented_lexicographically():
    und = g([], undirected=[("B", "A")])
    out = run([und, und], min_freq=2)
    # low -> high lexicographic orientation
    assert out.graph.directed == frozenset({("A", "B")})
    assert ("A", "B") in out.oriented_undirected


def test_undirected_skipped_when_directed_present():
    out = run([g([("A", "B")]), g([("A", "B")]),
               g([], undirected=[("A", "B")]), g([], undirected=[("A", "B")])],
              min_freq=2)
    assert out.graph.directed == frozenset({("A", "B")})


def test_tally_rejects_mismatched_node_sets():
    with pytest.raises(Exception):
        tally([g([("A", "B")]), Graph.from_edges(["A", "B"], [("A", "B")])])


def test_json_report_shape():
    t = tally([g([("A", "B")])] * 2)
    out = model_average(t, 1, ABC)
    obj = average_to_json_obj(t, out)
    assert obj["n_inputs"] == 2
    assert any(e["from"] == "A" and e["to"] == "B" and e["frequency"] == 2
               for e in obj["edges"])


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 9))
def test_property_output_always_acyclic_dag(seed, k):
    rng = random.Random(seed)
    nodes = ["A", "B", "C", "D", "E"]
    graphs = []
    for _ in range(k):
        dag = random_dag(rng, nodes, p=0.5)
        if rng.random() < 0.3:
            # occasionally flip an edge to create disagreement/cycles in the
            # tally without violating per-graph validity
            edges = list(dag.directed)
            if edges:
                a, b = rng.choice(edges)
                dag = dag.without_directed(a, b)
                if (b, a) not in dag.directed:
                    dag = Graph(dag.nodes, dag.directed | {(b, a)},
                                dag.undirected)
        graphs.append(dag)
    min_freq = rng.randint(1, k)
    out = model_average(tally(graphs), min_freq, nodes)
    assert is_acyclic(out.graph)
    assert not out.graph.undirected
