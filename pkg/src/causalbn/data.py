"""Categorical dataset handling: CSV loading, survey recoding, counting.

All downstream statistics (CI tests, scores, CPT fitting) consume the
contingency-table counting provided here, so counting is kept exact and
deterministic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

# Dense contingency tables only; guards against accidental huge scopes.
MAX_TABLE_CELLS = 10_000_000


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class VariableSpec:
    """A discrete variable: its name, ordered state labels, and an optional
    recoding rule mapping raw survey values onto those states."""

    name: str
    states: tuple[str, ...]
    recode: Mapping | None = None

    def __post_init__(self):
        if len(self.states) < 2:
            raise DataError(f"{self.name}: needs >= 2 states")
        if len(set(self.states)) != len(self.states):
            raise DataError(f"{self.name}: duplicate state labels")

    @property
    def cardinality(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class CategoricalDataset:
    """Column-oriented table of discrete variables stored as dense state
    indices. Immutable after construction; safe for concurrent readers."""

    variables: tuple[VariableSpec, ...]
    data: np.ndarray  # (n_rows, n_vars) integer state indices
    dropped_rows: int = 0

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != len(self.variables):
            raise DataError("data shape does not match variable list")
        if self.data.shape[0] == 0:
            raise DataError("dataset has zero rows")
        for j, v in enumerate(self.variables):
            col = self.data[:, j]
            if col.min() < 0 or col.max() >= v.cardinality:
                raise DataError(f"{v.name}: state index out of range")
        object.__setattr__(self, "data", np.ascontiguousarray(self.data))
        self.data.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"unknown variable {name!r}") from None

    def spec_of(self, name: str) -> VariableSpec:
        return self.variables[self.index_of(name)]

    def cardinality(self, name: str) -> int:
        return self.spec_of(name).cardinality

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.index_of(name)]


@dataclass(frozen=True)
class ContingencyTable:
    """Dense joint counts over an ordered variable subset."""

    scope: tuple[str, ...]
    cards: tuple[int, ...]
    counts: np.ndarray  # shape == cards

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def marginalize(self, keep: Sequence[str]) -> "ContingencyTable":
        keep = tuple(keep)
        axes = tuple(i for i, s in enumerate(self.scope) if s not in keep)
        kept = tuple((s, c) for s, c in zip(self.scope, self.cards) if s in keep)
        return ContingencyTable(
            scope=tuple(s for s, _ in kept),
            cards=tuple(c for _, c in kept),
            counts=self.counts.sum(axis=axes) if axes else self.counts,
        )


def load_variable_specs(path: str | Path) -> list[VariableSpec]:
    """Read the JSON sidecar describing variables, states, and recode rules."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return [
        VariableSpec(name=e["name"], states=tuple(e["states"]), recode=e.get("recode"))
        for e in raw["variables"]
    ]


def _normalize_cell(text: str) -> str:
    """Canonicalize a CSV cell: '1.0' and '1' denote the same state label."""
    t = text.strip()
    if not t:
        return ""
    try:
        f = float(t)
    except ValueError:
        return t
    if math.isfinite(f) and f == int(f):
        return str(int(f))
    return t


def load_csv(path: str | Path, spec: Sequence[VariableSpec]) -> CategoricalDataset:
    """Load a header-ed CSV of state labels, reorder columns to spec order,
    and drop (but count) rows with missing or unrecognized cells."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    have = set(df.columns)
    want = [v.name for v in spec]
    missing = [n for n in want if n not in have]
    if missing:
        raise DataError(f"header mismatch, missing columns: {missing}")

    n = len(df)
    if n == 0:
        raise DataError("zero data rows")
    cols = np.empty((n, len(spec)), dtype=np.int16)
    bad = np.zeros(n, dtype=bool)
    for j, v in enumerate(spec):
        lut = {s: i for i, s in enumerate(v.states)}
        vals = df[v.name].map(lambda t: lut.get(_normalize_cell(t), -1)).to_numpy()
        # Distinguish "unknown label entirely outside the numeric range" from
        # "numeric value exceeding the declared cardinality": the latter is a
        # spec error, not a dirty row, when every state label is numeric.
        bad |= vals < 0
        cols[:, j] = vals
    keep = ~bad
    if not keep.any():
        raise DataError("all rows dropped: no parseable data")
    ds = CategoricalDataset(
        variables=tuple(spec), data=cols[keep], dropped_rows=int(bad.sum())
    )
    return ds


# ---------------------------------------------------------------------------
# Survey recoding


def _apply_recode(values: np.ndarray, spec: VariableSpec) -> np.ndarray:
    """Map raw numeric survey values onto state indices per the spec's rule.

    A column whose values already all lie in the declared state-label set is
    passed through unchanged, which makes recoding idempotent. (A raw column
    that happens to fit entirely inside the label set is indistinguishable
    from an already-recoded one; documented limitation.)
    """
    labels = {}
    for i, s in enumerate(spec.states):
        try:
            labels[float(s)] = i
        except ValueError:
            raise DataError(f"{spec.name}: non-numeric state label {s!r}")
    finite = np.isfinite(values)
    if not finite.all():
        raise DataError(f"{spec.name}: non-numeric raw value")
    if all(v in labels for v in np.unique(values)):
        return np.array([labels[v] for v in values], dtype=np.int16)

    rule = spec.recode or {"kind": "identity"}
    kind = rule.get("kind", "identity")
    out = np.full(len(values), -1, dtype=np.int16)
    if kind == "identity":
        pass  # handled by the label passthrough above; leftovers are errors
    elif kind == "groups":
        # groups[i] lists the raw integer codes mapping to state i
        for i, grp in enumerate(rule["groups"]):
            for code in grp:
                out[values == code] = i
    elif kind == "bins":
        # upper[i] is the exclusive upper edge of state i; last state open
        upper = rule["upper"]
        if (values < rule.get("min", 0)).any():
            raise DataError(f"{spec.name}: raw value below declared range")
        prev = -np.inf
        for i, u in enumerate(upper):
            out[(values >= prev) & (values < u)] = i
            prev = u
        out[values >= upper[-1]] = len(upper)
    else:
        raise DataError(f"{spec.name}: unknown recode kind {kind!r}")
    if (out < 0).any():
        bad = sorted(set(values[out < 0].tolist()))[:5]
        raise DataError(f"{spec.name}: raw values outside declared range: {bad}")
    return out


def preprocess(raw: pd.DataFrame | CategoricalDataset,
               spec: Sequence[VariableSpec]) -> CategoricalDataset:
    """Apply the survey recoding rules (age grouping, general-health /
    education / income condensation, BMI and day-count binning) and return
    the recoded dataset. Idempotent: recoded input comes back unchanged."""
    if isinstance(raw, CategoricalDataset):
        frame = pd.DataFrame(
            {v.name: np.array([float(s) for s in v.states])[raw.column(v.name)]
             for v in raw.variables}
        )
        dropped = raw.dropped_rows
    else:
        frame = raw
        dropped = 0
    cols = np.empty((len(frame), len(spec)), dtype=np.int16)
    for j, v in enumerate(spec):
        if v.name not in frame.columns:
            raise DataError(f"missing source column {v.name!r}")
        vals = pd.to_numeric(frame[v.name], errors="coerce").to_numpy(dtype=float)
        mask = np.isfinite(vals)
        if not mask.all():
            raise DataError(f"{v.name}: non-numeric raw value")
        cols[:, j] = _apply_recode(vals, v)
    return CategoricalDataset(variables=tuple(spec), data=cols, dropped_rows=dropped)


# ---------------------------------------------------------------------------
# Counting and marginals


def joint_index(data: CategoricalDataset, scope: Sequence[str]) -> tuple[np.ndarray, int]:
    """Radix-encode the joint state of `scope` per row. Returns (codes, size)."""
    scope = list(scope)
    cards = [data.cardinality(s) for s in scope]
    size = 1
    for c in cards:
        size *= c
    if size > MAX_TABLE_CELLS:
        raise DataError(f"scope cardinality product {size} exceeds cap")
    codes = np.zeros(data.n_rows, dtype=np.int64)
    for name, card in zip(scope, cards):
        codes = codes * card + data.column(name)
    return codes, size


def count(data: CategoricalDataset, scope: Sequence[str]) -> ContingencyTable:
    """Exact joint counts over `scope` in a single pass."""
    scope = tuple(scope)
    if not scope:
        raise DataError("empty scope")
    codes, size = joint_index(data, scope)
    cards = tuple(data.cardinality(s) for s in scope)
    flat = np.bincount(codes, minlength=size)
    return ContingencyTable(scope=scope, cards=cards, counts=flat.reshape(cards))


def marginals(data: CategoricalDataset) -> dict[str, dict[str, float]]:
    """Relative state frequencies per variable; each sums to 1."""
    out: dict[str, dict[str, float]] = {}
    n = data.n_rows
    for v in data.variables:
        freq = np.bincount(data.column(v.name), minlength=v.cardinality) / n
        out[v.name] = {s: float(f) for s, f in zip(v.states, freq)}
    return out


def marginals_to_csv(report: Mapping[str, Mapping[str, float]]) -> str:
    lines = ["variable,state,frequency"]
    for var, dist in report.items():
        for state, f in dist.items():
            lines.append(f"{var},{state},{f:.6f}")
    return "\n".join(lines) + "\n"
