"""Conditional-independence testing (G-squared) and decomposable BIC scoring.

Shared by every structure learner. Family scores are cached so that a
single-edge change to a graph re-scores exactly one family.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import chi2

from .data import CategoricalDataset, DataError, joint_index
from .graph import Graph

# Tests on tables with too few observations per degree of freedom are
# unreliable; we follow the common heuristic of declaring independence.
MIN_OBS_PER_DOF = 5


@dataclass(frozen=True)
class CiTestResult:
    statistic: float
    dof: int
    p_value: float
    independent: bool


@dataclass(frozen=True)
class ScoreValue:
    log_likelihood: float
    penalty: float

    @property
    def bic(self) -> float:
        return self.log_likelihood - self.penalty


def _counts_3way(data: CategoricalDataset, x: str, y: str,
                 zs: Sequence[str]) -> np.ndarray:
    """Joint counts reshaped to (|z-configs|, |x|, |y|)."""
    scope = list(zs) + [x, y]
    codes, size = joint_index(data, scope)
    flat = np.bincount(codes, minlength=size)
    cx, cy = data.cardinality(x), data.cardinality(y)
    return flat.reshape(-1, cx, cy)


def g2_statistic(data: CategoricalDataset, x: str, y: str,
                 zs: Sequence[str] = ()) -> tuple[float, int]:
    """G^2 = 2 sum O ln(O/E) over the conditional x,y table per z-config,
    with zero-count cells skipped. dof = (|x|-1)(|y|-1) prod|z|."""
    if x == y or x in zs or y in zs:
        raise DataError("x, y, Z must be distinct")
    n_xyz = _counts_3way(data, x, y, zs).astype(float)
    n_z = n_xyz.sum(axis=(1, 2), keepdims=True)
    n_xz = n_xyz.sum(axis=2, keepdims=True)
    n_yz = n_xyz.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        expected = n_xz * n_yz / n_z
        ratio = np.where(n_xyz > 0, n_xyz / expected, 1.0)
        g2 = 2.0 * float(np.sum(n_xyz * np.log(ratio)))
    cx, cy = data.cardinality(x), data.cardinality(y)
    dof = (cx - 1) * (cy - 1)
    for z in zs:
        dof *= data.cardinality(z)
    return max(g2, 0.0), dof


def g2_test(data: CategoricalDataset, x: str, y: str,
            zs: Sequence[str] = (), alpha: float = 0.05) -> CiTestResult:
    stat, dof = g2_statistic(data, x, y, zs)
    p = float(chi2.sf(stat, dof))
    # reliability guard: too-sparse tables are treated as uninformative
    if data.n_rows < MIN_OBS_PER_DOF * dof:
        return CiTestResult(stat, dof, p, independent=True)
    return CiTestResult(stat, dof, p, independent=p > alpha)


def mutual_information(data: CategoricalDataset, x: str, y: str,
                       zs: Sequence[str] = ()) -> float:
    """Empirical conditional mutual information in nats: G^2 / (2N)."""
    stat, _ = g2_statistic(data, x, y, zs)
    return stat / (2.0 * data.n_rows)


def family_log_likelihood(data: CategoricalDataset, child: str,
                          parents: Sequence[str]) -> float:
    """Multinomial maximum log-likelihood of one node family:
    sum_jk N_jk ln(N_jk / N_j.) with 0 ln 0 = 0."""
    scope = list(parents) + [child]
    codes, size = joint_index(data, scope)
    n_jk = np.bincount(codes, minlength=size).astype(float)
    n_jk = n_jk.reshape(-1, data.cardinality(child))
    n_j = n_jk.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(n_jk > 0, n_jk * np.log(n_jk / n_j), 0.0)
    return float(terms.sum())


def family_penalty(data: CategoricalDataset, child: str,
                   parents: Sequence[str]) -> float:
    """(ln N / 2) * (r - 1) * q where q is the parent-configuration count."""
    q = 1
    for p in parents:
        q *= data.cardinality(p)
    r = data.cardinality(child)
    return 0.5 * np.log(data.n_rows) * (r - 1) * q


class ScoreCache:
    """Thread-safe cache of per-family BIC terms keyed by
    (child, frozenset(parents)). Last write wins; values are deterministic
    functions of the key so races are harmless."""

    def __init__(self, data: CategoricalDataset):
        self.data = data
        self._cache: dict[tuple[str, frozenset], float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def family_bic(self, child: str, parents: Iterable[str]) -> float:
        key = (child, frozenset(parents))
        with self._lock:
            if key in self._cache:
                self.hits += 1
                return self._cache[key]
            self.misses += 1
        val = (family_log_likelihood(self.data, child, sorted(key[1]))
               - family_penalty(self.data, child, sorted(key[1])))
        with self._lock:
            self._cache[key] = val
        return val


def bic_score(data: CategoricalDataset, g: Graph) -> ScoreValue:
    """Decomposable BIC of a DAG: sum over node families."""
    from .graph import is_acyclic

    if g.undirected or not is_acyclic(g):
        raise DataError("bic_score requires a DAG")
    ll = 0.0
    pen = 0.0
    for n in g.nodes:
        parents = sorted(g.parents(n))
        ll += family_log_likelihood(data, n, parents)
        pen += family_penalty(data, n, parents)
    return ScoreValue(log_likelihood=ll, penalty=pen)
