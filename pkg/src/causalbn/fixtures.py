"""Shipped reference data and synthetic fixtures.

The original 2015 survey extract is not redistributable here, so this module
provides a deterministic synthetic stand-in: a raw-encoded CSV with the same
size (253,680 rows, 22 variables) whose recoded per-variable marginals match
the published frequency table, with an age -> diabetes dependence injected so
ancestor-sensitivity and intervention analyses have signal.

It also builds the eleven learned-graph fixtures used by the averaging
checks: the consensus (average) graph is reconstructed from the published
per-edge agreement table (20 of the 37 expert edges, 3 of them reversed) and
padded to its published 75-edge size; the eleven inputs are derived so that
exactly those edges clear the frequency-4 threshold.
"""

from __future__ import annotations

import importlib.resources as resources
import random
from pathlib import Path

import numpy as np
import pandas as pd

from .data import VariableSpec, load_variable_specs
from .graph import Graph, KnowledgeGraph, edges_to_csv, graph_from_csv, knowledge_from_csv

N_ROWS = 253_680

# Target recoded marginals, in percent. Published values that round to 99 or
# 101 are nudged within +-0.5pp so each distribution sums to 100.
TARGET_MARGINALS = {
    "HighBP": [57, 43],
    "HighChol": [58, 42],
    "BMI": [28, 66, 6],
    "HeartDiseaseorAttack": [91, 9],
    "CholCheck": [4, 96],
    "Stroke": [96, 4],
    "Smoker": [56, 44],
    "Fruits": [37, 63],
    "Veggies": [19, 81],
    "HvyAlcoholConsump": [94, 6],
    "AnyHealthcare": [5, 95],
    "NoDocbcCost": [92, 8],
    "MentHlth": [87.5, 5, 7.5],
    "PhysHlth": [84.5, 5, 10.5],
    "DiffWalk": [83.5, 16.5],
    "Sex": [56, 44],
    "Age": [5, 10, 14, 23, 26, 22],
    "Income": [8, 14, 25, 53],
    "Education": [1.5, 29, 69.5],
    "GenHlth": [53, 42, 5],
    "PhysActivity": [25, 75],
}

# P(diabetes | age bin); weighted by the age marginal this averages to ~14%.
DIABETES_RATE_BY_AGE = [0.04, 0.06, 0.10, 0.14, 0.17, 0.19]

# Raw-code ranges used to de-bin recoded states back into survey encoding.
RAW_CODES = {
    "Age": [[1, 2], [3, 4, 5], [6, 7], [8, 9], [10, 11], [12, 13]],
    "Income": [[1, 2], [3, 4], [5, 6], [7, 8]],
    "Education": [[1, 2], [3, 4], [5, 6]],
    "GenHlth": [[1], [2, 3], [4, 5]],
    "BMI": [list(range(16, 25)), list(range(25, 40)), list(range(40, 61))],
    "MentHlth": [list(range(0, 10)), list(range(10, 20)), list(range(20, 31))],
    "PhysHlth": [list(range(0, 10)), list(range(10, 20)), list(range(20, 31))],
}


def default_variable_specs() -> list[VariableSpec]:
    with resources.as_file(resources.files("causalbn.resources")
                           / "variables.json") as p:
        return load_variable_specs(p)


def load_knowledge_graph() -> KnowledgeGraph:
    nodes = [v.name for v in default_variable_specs()]
    text = (resources.files("causalbn.resources")
            / "knowledge_diabetes.csv").read_text()
    return knowledge_from_csv(text, nodes)


def _exact_counts(percents, n: int) -> np.ndarray:
    """Integer state counts summing to n, proportions as close as possible
    to the given percentages (largest-remainder rounding)."""
    fracs = np.asarray(percents, dtype=float) / 100.0 * n
    counts = np.floor(fracs).astype(int)
    order = np.argsort(-(fracs - counts))
    for k in range(n - counts.sum()):
        counts[order[k % len(counts)]] += 1
    return counts


def _column_from_counts(counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    col = np.repeat(np.arange(len(counts)), counts)
    rng.shuffle(col)
    return col


def generate_survey_csv(path: str | Path, n_rows: int = N_ROWS,
                        seed: int = 2015) -> Path:
    """Write the synthetic raw-encoded survey CSV (deterministic per seed)."""
    rng = np.random.default_rng(seed)
    specs = default_variable_specs()
    cols: dict[str, np.ndarray] = {}

    for v in specs:
        if v.name == "Diabetes_binary":
            continue
        binned = _column_from_counts(
            _exact_counts(TARGET_MARGINALS[v.name], n_rows), rng)
        if v.name in RAW_CODES:
            groups = RAW_CODES[v.name]
            raw = np.empty(n_rows, dtype=np.int64)
            for b, codes in enumerate(groups):
                mask = binned == b
                raw[mask] = rng.choice(codes, size=int(mask.sum()))
            cols[v.name] = raw
        else:
            cols[v.name] = binned

    # diabetes depends on the age bin (exact per-bin prevalence)
    age_groups = RAW_CODES["Age"]
    age_bin = np.zeros(n_rows, dtype=np.int64)
    for b, codes in enumerate(age_groups):
        age_bin[np.isin(cols["Age"], codes)] = b
    diabetes = np.zeros(n_rows, dtype=np.int64)
    for b, rate in enumerate(DIABETES_RATE_BY_AGE):
        idx = np.flatnonzero(age_bin == b)
        n_pos = int(round(rate * len(idx)))
        pos = rng.choice(idx, size=n_pos, replace=False)
        diabetes[pos] = 1
    cols["Diabetes_binary"] = diabetes

    path = Path(path)
    frame = pd.DataFrame({v.name: cols[v.name] for v in specs})
    frame.to_csv(path, index=False)
    return path


# ---------------------------------------------------------------------------
# Learned-graph fixtures for the averaging checks

# The 20 expert edges the consensus graph contains (3 reversed), per the
# published per-edge agreement table.
CONSENSUS_KNOWLEDGE_EDGES = [
    ("Age", "Income"), ("Age", "Diabetes_binary"), ("Age", "BMI"),
    ("Age", "DiffWalk"), ("Income", "GenHlth"), ("Income", "AnyHealthcare"),
    ("Income", "NoDocbcCost"), ("AnyHealthcare", "CholCheck"),
    ("BMI", "Diabetes_binary"), ("BMI", "HighBP"),
    ("HighBP", "HeartDiseaseorAttack"), ("HighBP", "Diabetes_binary"),
    ("HighChol", "HeartDiseaseorAttack"), ("GenHlth", "Diabetes_binary"),
    ("GenHlth", "MentHlth"), ("PhysHlth", "MentHlth"),
    ("HeartDiseaseorAttack", "Stroke"),
    # reversed relative to the expert direction:
    ("NoDocbcCost", "AnyHealthcare"), ("Diabetes_binary", "HighChol"),
    ("Income", "Education"),
]

# Expert edges the consensus graph must not contain in either direction.
CONSENSUS_ABSENT_PAIRS = [
    ("HvyAlcoholConsump", "PhysHlth"), ("Sex", "Diabetes_binary"),
    ("Age", "GenHlth"), ("Age", "PhysActivity"), ("Age", "PhysHlth"),
    ("Income", "MentHlth"), ("Income", "PhysHlth"), ("Income", "CholCheck"),
    ("HvyAlcoholConsump", "MentHlth"), ("HvyAlcoholConsump", "GenHlth"),
    ("HighBP", "Stroke"), ("Diabetes_binary", "DiffWalk"),
    ("PhysActivity", "Diabetes_binary"), ("PhysHlth", "HighBP"),
    ("PhysHlth", "HighChol"), ("PhysActivity", "HighChol"),
    ("PhysActivity", "HighBP"),
]

# Node order consistent with the 20 consensus edges; padding edges follow it.
_CONSENSUS_TOPO = [
    "Sex", "Age", "Smoker", "Fruits", "Veggies", "HvyAlcoholConsump",
    "PhysActivity", "Income", "Education", "PhysHlth", "BMI", "HighBP",
    "GenHlth", "Diabetes_binary", "HighChol", "HeartDiseaseorAttack",
    "Stroke", "DiffWalk", "MentHlth", "NoDocbcCost", "AnyHealthcare",
    "CholCheck",
]

CONSENSUS_EDGE_COUNT = 75
AVERAGING_INPUT_COUNT = 11
AVERAGING_MIN_FREQ = 4


def consensus_graph() -> Graph:
    """The reconstructed 75-edge consensus DAG over the 22 variables."""
    nodes = [v.name for v in default_variable_specs()]
    edges = list(CONSENSUS_KNOWLEDGE_EDGES)
    forbidden = {frozenset(p) for p in CONSENSUS_ABSENT_PAIRS}
    present = {frozenset(e) for e in edges}
    pos = {n: i for i, n in enumerate(_CONSENSUS_TOPO)}
    candidates = []
    for i, a in enumerate(_CONSENSUS_TOPO):
        for b in _CONSENSUS_TOPO[i + 1:]:
            pair = frozenset((a, b))
            if pair in forbidden or pair in present:
                continue
            candidates.append((a, b))
    rng = random.Random(AVERAGING_INPUT_COUNT)
    indegree: dict[str, int] = {}
    for a, b in edges:
        indegree[b] = indegree.get(b, 0) + 1
    rng.shuffle(candidates)
    for a, b in candidates:
        if len(edges) >= CONSENSUS_EDGE_COUNT:
            break
        if indegree.get(b, 0) >= 4:
            continue
        edges.append((a, b))
        indegree[b] = indegree.get(b, 0) + 1
    assert len(edges) == CONSENSUS_EDGE_COUNT
    return Graph.from_edges(nodes, edges)


def averaging_input_graphs() -> list[Graph]:
    """Eleven learned-graph stand-ins: every consensus edge occurs at least
    four times across them, every non-consensus edge at most three."""
    base = consensus_graph()
    nodes = base.nodes
    rng = random.Random(75)
    graphs = [base] * 4
    all_edges = base.sorted_directed()
    pos = {n: i for i, n in enumerate(_CONSENSUS_TOPO)}
    noise_pool = []
    present = {frozenset(e) for e in base.directed}
    for i, a in enumerate(_CONSENSUS_TOPO):
        for b in _CONSENSUS_TOPO[i + 1:]:
            if frozenset((a, b)) not in present:
                noise_pool.append((a, b))
    rng.shuffle(noise_pool)
    noise_pool = noise_pool[:21]  # each noise edge lands in <= 3 graphs
    for k in range(7):
        kept = [e for e in all_edges if rng.random() < 0.7]
        noise = [e for j, e in enumerate(noise_pool) if j % 7 in
                 ((k, (k + 1) % 7, (k + 3) % 7))]
        graphs.append(Graph.from_edges(nodes, kept + noise))
    return graphs


def load_averaging_fixture_graphs() -> list[Graph]:
    """The eleven edge-list fixtures shipped with the package (identical to
    the output of averaging_input_graphs; see the regeneration test)."""
    nodes = [v.name for v in default_variable_specs()]
    root = resources.files("causalbn.resources") / "paper_graphs"
    out = []
    for i in range(1, AVERAGING_INPUT_COUNT + 1):
        text = (root / f"learned_{i:02d}.csv").read_text()
        out.append(graph_from_csv(text, nodes=nodes))
    return out


def write_averaging_fixtures(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for i, g in enumerate(averaging_input_graphs(), start=1):
        p = directory / f"learned_{i:02d}.csv"
        p.write_text(edges_to_csv(g))
        out.append(p)
    return out
