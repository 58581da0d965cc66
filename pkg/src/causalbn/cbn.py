"""Causal Bayesian networks: CPT fitting, exact observational inference by
variable elimination, do-operator interventions, average causal effect,
do-calculus rule applicability, sensitivity analysis, and cross-validated
target prediction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import CategoricalDataset, DataError, VariableSpec, joint_index
from .graph import (Graph, GraphError, ancestors, d_separated, is_acyclic,
                    mutilate, topological_order)

SCHEMA_VERSION = 1


class ZeroProbabilityEvidence(ValueError):
    pass


# ---------------------------------------------------------------------------
# Factors


@dataclass(frozen=True)
class Factor:
    """Nonnegative dense table over an ordered variable subset."""

    scope: tuple[str, ...]
    cards: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.cards:
            raise ValueError("factor shape mismatch")

    def multiply(self, other: "Factor") -> "Factor":
        scope = list(self.scope)
        cards = list(self.cards)
        for s, c in zip(other.scope, other.cards):
            if s not in scope:
                scope.append(s)
                cards.append(c)
        a = _expand(self, scope, cards)
        b = _expand(other, scope, cards)
        return Factor(tuple(scope), tuple(cards), a * b)

    def marginalize_out(self, var: str) -> "Factor":
        ax = self.scope.index(var)
        scope = self.scope[:ax] + self.scope[ax + 1:]
        cards = self.cards[:ax] + self.cards[ax + 1:]
        return Factor(scope, cards, self.values.sum(axis=ax))

    def reduce(self, var: str, state: int) -> "Factor":
        ax = self.scope.index(var)
        scope = self.scope[:ax] + self.scope[ax + 1:]
        cards = self.cards[:ax] + self.cards[ax + 1:]
        return Factor(scope, cards, np.take(self.values, state, axis=ax))


def _expand(f: Factor, scope: Sequence[str], cards: Sequence[int]) -> np.ndarray:
    shape = [1] * len(scope)
    order = [scope.index(s) for s in f.scope]
    arr = np.transpose(f.values, np.argsort(order))
    for i, s in enumerate(scope):
        shape[i] = cards[i] if s in f.scope else 1
    return arr.reshape(shape)


# ---------------------------------------------------------------------------
# CPTs and the network


@dataclass(frozen=True)
class Cpt:
    """One distribution over the child's states per parent configuration.
    `table` has shape (prod(parent cards), child card); rows sum to 1."""

    child: str
    parents: tuple[str, ...]
    parent_cards: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        q = int(np.prod(self.parent_cards)) if self.parent_cards else 1
        if self.table.shape[0] != q:
            raise ValueError(f"{self.child}: row count != parent configs")
        if (self.table < 0).any():
            raise ValueError(f"{self.child}: negative probability")
        if not np.allclose(self.table.sum(axis=1), 1.0, atol=1e-12):
            raise ValueError(f"{self.child}: rows must sum to 1")

    def to_factor(self, child_card: int) -> Factor:
        scope = self.parents + (self.child,)
        cards = self.parent_cards + (child_card,)
        return Factor(scope, cards, self.table.reshape(cards))


@dataclass(frozen=True)
class Cbn:
    """A DAG with one CPT per node."""

    dag: Graph
    variables: tuple[VariableSpec, ...]
    cpts: Mapping[str, Cpt]

    def __post_init__(self):
        if self.dag.undirected or not is_acyclic(self.dag):
            raise GraphError("CBN structure must be a DAG")
        byname = {v.name: v for v in self.variables}
        if set(byname) != set(self.dag.nodes):
            raise GraphError("variables do not match DAG nodes")
        for n in self.dag.nodes:
            cpt = self.cpts[n]
            if tuple(sorted(self.dag.parents(n))) != tuple(sorted(cpt.parents)):
                raise GraphError(f"{n}: CPT parents do not match DAG parents")

    def spec_of(self, name: str) -> VariableSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise GraphError(f"unknown variable {name!r}")

    def cardinality(self, name: str) -> int:
        return self.spec_of(name).cardinality

    def state_index(self, name: str, state) -> int:
        spec = self.spec_of(name)
        s = str(state)
        if s in spec.states:
            return spec.states.index(s)
        if isinstance(state, int) and 0 <= state < spec.cardinality:
            return state
        raise GraphError(f"{name}: unknown state {state!r}")

    def factors(self) -> list[Factor]:
        return [self.cpts[n].to_factor(self.cardinality(n)) for n in self.dag.nodes]


def fit_cpts(dag: Graph, data: CategoricalDataset, pseudo_count: float = 1.0) -> Cbn:
    """Maximum-likelihood CPTs with additive (Laplace-style) smoothing:
    (N_jk + c) / (N_j. + c*r). Unseen parent configurations fall back to
    uniform when c > 0."""
    if dag.undirected or not is_acyclic(dag):
        raise GraphError("fit_cpts requires a DAG")
    cpts = {}
    specs = []
    for n in dag.nodes:
        specs.append(data.spec_of(n))
        parents = tuple(sorted(dag.parents(n)))
        parent_cards = tuple(data.cardinality(p) for p in parents)
        r = data.cardinality(n)
        codes, size = joint_index(data, list(parents) + [n])
        counts = np.bincount(codes, minlength=size).astype(float).reshape(-1, r)
        num = counts + pseudo_count
        den = num.sum(axis=1, keepdims=True)
        if pseudo_count == 0 and (den == 0).any():
            # leave unseen configurations uniform rather than 0/0
            zero = den[:, 0] == 0
            num[zero] = 1.0
            den[zero] = float(r)
        cpts[n] = Cpt(child=n, parents=parents, parent_cards=parent_cards,
                      table=num / den)
    return Cbn(dag=dag, variables=tuple(specs), cpts=cpts)


# ---------------------------------------------------------------------------
# Exact inference


def _min_degree_order(factors: list[Factor], eliminate: set[str]) -> list[str]:
    """Greedy min-degree elimination ordering over the interaction graph."""
    neigh: dict[str, set[str]] = {}
    for f in factors:
        for a in f.scope:
            neigh.setdefault(a, set())
            for b in f.scope:
                if a != b:
                    neigh[a].add(b)
    order = []
    todo = set(eliminate)
    while todo:
        v = min(todo, key=lambda x: (len(neigh.get(x, set()) & todo), x))
        order.append(v)
        todo.discard(v)
        nb = neigh.get(v, set())
        for a in nb:
            neigh[a] |= nb - {a}
            neigh[a].discard(v)
    return order


def _eliminate(factors: list[Factor], order: Sequence[str]) -> list[Factor]:
    factors = list(factors)
    for var in order:
        related = [f for f in factors if var in f.scope]
        if not related:
            continue
        prod = related[0]
        for f in related[1:]:
            prod = prod.multiply(f)
        marg = prod.marginalize_out(var)
        factors = [f for f in factors if var not in f.scope] + [marg]
    return factors


def posterior(cbn: Cbn, target: str, evidence: Mapping[str, object] | None = None
              ) -> np.ndarray:
    """Exact P(target | evidence) by variable elimination with a min-degree
    ordering. Raises ZeroProbabilityEvidence when the evidence has
    probability zero."""
    evidence = evidence or {}
    if target in evidence:
        raise GraphError("target cannot carry evidence")
    ev = {v: cbn.state_index(v, s) for v, s in evidence.items()}

    # restrict to the ancestral set of target+evidence; the rest marginalizes
    # to 1 by construction
    relevant = set(ev) | {target}
    relevant |= ancestors(cbn.dag, relevant)
    factors = []
    for n in sorted(relevant):
        f = cbn.cpts[n].to_factor(cbn.cardinality(n))
        for v, s in ev.items():
            if v in f.scope:
                f = f.reduce(v, s)
        factors.append(f)

    eliminate = {v for f in factors for v in f.scope} - {target}
    order = _min_degree_order(factors, eliminate)
    remaining = _eliminate(factors, order)

    result = np.ones(cbn.cardinality(target))
    for f in remaining:
        if f.scope == (target,):
            result = result * f.values
        elif f.scope == ():
            result = result * float(f.values)
        else:
            raise AssertionError("elimination left a multi-variable factor")
    total = result.sum()
    if total <= 0:
        raise ZeroProbabilityEvidence("evidence has probability zero")
    return result / total


# ---------------------------------------------------------------------------
# Interventions


@dataclass(frozen=True)
class InterventionQuery:
    target: str
    do_assignments: Mapping[str, object] = field(default_factory=dict)
    evidence: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        overlap = set(self.do_assignments) & set(self.evidence)
        if overlap:
            raise GraphError(f"evidence and do keys overlap: {sorted(overlap)}")
        if self.target in self.do_assignments or self.target in self.evidence:
            raise GraphError("target cannot be intervened on or observed")


def mutilated_cbn(cbn: Cbn, do_assignments: Mapping[str, object]) -> Cbn:
    """Graph surgery: cut incoming edges of each intervened node and replace
    its CPT by a point mass on the assigned state."""
    do_idx = {v: cbn.state_index(v, s) for v, s in do_assignments.items()}
    new_dag = mutilate(cbn.dag, cut_incoming=do_idx)
    cpts = dict(cbn.cpts)
    for v, s in do_idx.items():
        row = np.zeros((1, cbn.cardinality(v)))
        row[0, s] = 1.0
        cpts[v] = Cpt(child=v, parents=(), parent_cards=(), table=row)
    return Cbn(dag=new_dag, variables=cbn.variables, cpts=cpts)


def intervene(cbn: Cbn, query: InterventionQuery) -> np.ndarray:
    """P(target | do(...), evidence) in the mutilated network (truncated
    factorization)."""
    cut = mutilated_cbn(cbn, query.do_assignments) if query.do_assignments else cbn
    return posterior(cut, query.target, query.evidence)


def ace(cbn: Cbn, target: str, target_state, x: str, x1, x0) -> float:
    """Average causal effect P(target=state|do(x=x1)) - P(...|do(x=x0))."""
    if cbn.state_index(x, x1) == cbn.state_index(x, x0):
        raise GraphError("ACE requires two distinct intervention states")
    s = cbn.state_index(target, target_state)
    p1 = intervene(cbn, InterventionQuery(target, {x: x1}))[s]
    p0 = intervene(cbn, InterventionQuery(target, {x: x0}))[s]
    return float(p1 - p0)


# ---------------------------------------------------------------------------
# Do-calculus rule applicability (Table-style checks on mutilated graphs)


def docalc_rule_applies(dag: Graph, rule: int, X: Iterable[str], Y: Iterable[str],
                        Z: Iterable[str], W: Iterable[str] = ()) -> bool:
    """Applicability of the three interventional-rewrite rules, each a
    d-separation test of Y and Z given X u W on a mutilated graph:

    rule 1: insertion/deletion of observations, tested in G with incoming
            edges to X removed;
    rule 2: action/observation exchange, additionally removing Z's outgoing
            edges;
    rule 3: insertion/deletion of actions, removing incoming edges of X and
            of Z(W), the Z-nodes that are not ancestors of any W-node once
            X's incoming edges are gone.
    """
    X, Y, Z, W = set(X), set(Y), set(Z), set(W)
    sets = [X, Y, Z, W]
    for i in range(4):
        for j in range(i + 1, 4):
            if sets[i] & sets[j]:
                raise GraphError("X, Y, Z, W must be pairwise disjoint")
    g_bar_x = mutilate(dag, cut_incoming=X)
    if rule == 1:
        g = g_bar_x
    elif rule == 2:
        g = mutilate(g_bar_x, cut_outgoing=Z)
    elif rule == 3:
        anc_w = ancestors(g_bar_x, W) | W
        z_w = {z for z in Z if z not in anc_w}
        g = mutilate(g_bar_x, cut_incoming=z_w)
    else:
        raise GraphError(f"unknown rule {rule}")
    return d_separated(g, Y, Z, X | W)


# ---------------------------------------------------------------------------
# Intervention delta report


def intervention_delta_report(cbn: Cbn, target: str,
                              intervene_vars: Sequence[str],
                              target_state=None) -> dict:
    """Percentage-point change of P(target = positive state) under do(v = s)
    for every intervention variable and state, plus the per-other-variable
    delta matrix."""
    if target in intervene_vars:
        raise GraphError("target cannot be an intervention variable")
    spec = cbn.spec_of(target)
    t_idx = (spec.cardinality - 1 if target_state is None
             else cbn.state_index(target, target_state))
    baseline = {n: posterior(cbn, n) for n in cbn.dag.nodes}
    report = {
        "target": target,
        "target_state": spec.states[t_idx],
        "baseline": float(baseline[target][t_idx]),
        "interventions": [],
    }
    for v in intervene_vars:
        vspec = cbn.spec_of(v)
        for s_idx, s in enumerate(vspec.states):
            cut = mutilated_cbn(cbn, {v: s_idx})
            dist = posterior(cut, target)
            entry = {
                "variable": v,
                "state": s,
                "target_delta_pp": 100.0 * float(dist[t_idx] - baseline[target][t_idx]),
                "other_deltas_pp": {},
            }
            for u in cbn.dag.nodes:
                if u in (v, target):
                    continue
                du = posterior(cut, u) - baseline[u]
                entry["other_deltas_pp"][u] = [100.0 * float(x) for x in du]
            report["interventions"].append(entry)
    return report


# ---------------------------------------------------------------------------
# Sensitivity analysis


def _perturbed_cpt(cpt: Cpt, row: int, col: int, eps: float) -> Cpt:
    """Shift one entry by eps and co-normalize the rest of its row
    proportionally."""
    table = cpt.table.copy()
    theta = table[row, col]
    new = np.clip(theta + eps, 0.0, 1.0)
    rest = 1.0 - theta
    if rest > 0:
        table[row, :] *= (1.0 - new) / rest
    else:
        table[row, :] = (1.0 - new) / (table.shape[1] - 1)
    table[row, col] = new
    return Cpt(cpt.child, cpt.parents, cpt.parent_cards, table)


def sensitivity(cbn: Cbn, target: str, target_state=None,
                eps: float = 1e-4) -> dict:
    """Central finite-difference derivative of P(target = positive state)
    with respect to every CPT entry of every ancestor of the target.
    Non-ancestors are reported with exactly zero sensitivity."""
    spec = cbn.spec_of(target)
    t_idx = (spec.cardinality - 1 if target_state is None
             else cbn.state_index(target, target_state))
    anc = ancestors(cbn.dag, [target])
    report: dict = {"target": target, "target_state": spec.states[t_idx],
                    "nodes": {}}
    for n in cbn.dag.nodes:
        if n == target:
            continue
        if n not in anc:
            report["nodes"][n] = {"max_abs_derivative": 0.0, "entries": []}
            continue
        cpt = cbn.cpts[n]
        entries = []
        max_abs = 0.0
        for row in range(cpt.table.shape[0]):
            for col in range(cpt.table.shape[1]):
                d = _entry_derivative(cbn, n, row, col, target, t_idx, eps)
                entries.append({"row": row, "col": col, "derivative": d})
                max_abs = max(max_abs, abs(d))
        report["nodes"][n] = {"max_abs_derivative": max_abs, "entries": entries}
    ranking = sorted(report["nodes"],
                     key=lambda k: (-report["nodes"][k]["max_abs_derivative"], k))
    report["ranking"] = ranking
    return report


def _entry_derivative(cbn: Cbn, node: str, row: int, col: int,
                      target: str, t_idx: int, eps: float) -> float:
    vals = []
    for sign in (+1.0, -1.0):
        cpts = dict(cbn.cpts)
        cpts[node] = _perturbed_cpt(cbn.cpts[node], row, col, sign * eps)
        perturbed = Cbn(dag=cbn.dag, variables=cbn.variables, cpts=cpts)
        vals.append(float(posterior(perturbed, target)[t_idx]))
    return (vals[0] - vals[1]) / (2.0 * eps)


# ---------------------------------------------------------------------------
# Cross-validated prediction


def _predict_rows(cbn: Cbn, data: CategoricalDataset, rows: np.ndarray,
                  target: str) -> np.ndarray:
    """Argmax posterior of target given all other variables, vectorized over
    rows. Only the target's CPT and its children's CPTs matter."""
    t_card = cbn.cardinality(target)
    col_of = {n: data.index_of(n) for n in data.names}
    n_rows = rows.shape[0]
    logp = np.zeros((n_rows, t_card))

    def row_config_codes(parents: Iterable[str], override: dict[str, int]):
        codes = np.zeros(n_rows, dtype=np.int64)
        for p in parents:
            card = cbn.cardinality(p)
            vals = (np.full(n_rows, override[p]) if p in override
                    else rows[:, col_of[p]])
            codes = codes * card + vals
        return codes

    for s in range(t_card):
        # target's own CPT term
        cpt = cbn.cpts[target]
        codes = row_config_codes(cpt.parents, {})
        logp[:, s] += np.log(cpt.table[codes, s])
        # children's CPT terms with target fixed at s
        for c in sorted(cbn.dag.children(target)):
            ccpt = cbn.cpts[c]
            codes = row_config_codes(ccpt.parents, {target: s})
            logp[:, s] += np.log(ccpt.table[codes, rows[:, col_of[c]]])

    # np.argmax returns the first maximum: ties break toward the lower state
    return np.argmax(logp, axis=1)


def cross_validate(dag: Graph, data: CategoricalDataset, target: str,
                   folds: int = 10, seed: int = 0,
                   pseudo_count: float = 1.0) -> dict:
    """Stratified k-fold accuracy of argmax-posterior target prediction."""
    if folds < 2:
        raise GraphError("folds must be >= 2")
    t_col = data.index_of(target)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(data.n_rows, dtype=np.int32)
    for s in range(data.cardinality(target)):
        idx = np.flatnonzero(data.data[:, t_col] == s)
        rng.shuffle(idx)
        fold_of[idx] = np.arange(len(idx)) % folds

    accs = []
    for k in range(folds):
        train_mask = fold_of != k
        train = CategoricalDataset(variables=data.variables,
                                   data=data.data[train_mask].copy())
        model = fit_cpts(dag, train, pseudo_count=pseudo_count)
        test_rows = data.data[~train_mask]
        pred = _predict_rows(model, data, test_rows, target)
        accs.append(float(np.mean(pred == test_rows[:, t_col])))
    return {"folds": folds, "per_fold_accuracy": accs,
            "mean_accuracy": float(np.mean(accs))}


# ---------------------------------------------------------------------------
# Serialization


def cbn_to_json_obj(cbn: Cbn) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "variables": [{"name": v.name, "states": list(v.states)}
                      for v in cbn.variables],
        "cpts": [{
            "child": n,
            "parents": list(cbn.cpts[n].parents),
            "table": cbn.cpts[n].table.tolist(),
        } for n in cbn.dag.nodes],
    }


def cbn_from_json_obj(obj: Mapping) -> Cbn:
    specs = tuple(VariableSpec(name=v["name"], states=tuple(v["states"]))
                  for v in obj["variables"])
    cards = {v.name: v.cardinality for v in specs}
    edges = []
    cpts = {}
    for e in obj["cpts"]:
        child = e["child"]
        parents = tuple(e["parents"])
        edges += [(p, child) for p in parents]
        cpts[child] = Cpt(child=child, parents=parents,
                          parent_cards=tuple(cards[p] for p in parents),
                          table=np.asarray(e["table"], dtype=float))
    dag = Graph.from_edges([v.name for v in specs], edges)
    return Cbn(dag=dag, variables=specs, cpts=cpts)


def save_cbn(cbn: Cbn, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cbn_to_json_obj(cbn), fh)


def load_cbn(path) -> Cbn:
    with open(path, "r", encoding="utf-8") as fh:
        return cbn_from_json_obj(json.load(fh))
