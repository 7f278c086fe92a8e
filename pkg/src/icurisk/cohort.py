"""Cohort data model: the labeled feature table, CSV ingestion/emission,
stratified splitting, and per-class summaries.

Missing values are NaN internally and empty cells in CSV. Tables are
immutable after construction; every operation returns a new table.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ._rng import derive_rng
from .errors import ConfigError, DataError, SchemaError
from .schema import feature_names, validate_schema


class CohortTable:
    """n x d feature matrix (float64, NaN = missing) with a {0,1} label vector."""

    __slots__ = ("schema", "X", "y")

    def __init__(self, schema, X, y):
        schema = validate_schema(schema)
        X = np.array(X, dtype=np.float64)
        y = np.array(y, dtype=np.int64)
        if X.ndim != 2:
            raise DataError(f"feature matrix must be 2-d, got shape {X.shape}")
        if X.shape[0] < 1:
            raise DataError("cohort must contain at least one row")
        if X.shape[1] != len(schema):
            raise SchemaError(f"matrix has {X.shape[1]} columns for {len(schema)} features")
        if y.shape != (X.shape[0],):
            raise DataError("label vector length does not match row count")
        if not np.isin(y, (0, 1)).all():
            raise DataError("labels must be 0 or 1 with no missing entries")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __setattr__(self, *_):
        raise AttributeError("CohortTable is immutable")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def feature_names(self) -> tuple:
        return feature_names(self.schema)

    def index_of(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise SchemaError(f"no feature named {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.index_of(name)]

    def subset(self, rows) -> "CohortTable":
        rows = np.asarray(rows)
        return CohortTable(self.schema, self.X[rows], self.y[rows])

    def drop_features(self, names) -> "CohortTable":
        drop = set(names)
        unknown = drop - set(self.feature_names)
        if unknown:
            raise SchemaError(f"cannot drop unknown features: {sorted(unknown)}")
        keep = [i for i, s in enumerate(self.schema) if s.name not in drop]
        if not keep:
            raise SchemaError("cannot drop every feature")
        return CohortTable([self.schema[i] for i in keep], self.X[:, keep], self.y)

    def with_matrix(self, X) -> "CohortTable":
        return CohortTable(self.schema, X, self.y)

    def equals(self, other: "CohortTable") -> bool:
        return (
            self.schema == other.schema
            and np.array_equal(self.X, other.X, equal_nan=True)
            and np.array_equal(self.y, other.y)
        )

    def __repr__(self):
        miss = np.isnan(self.X).mean()
        return f"CohortTable(n={self.n}, d={self.d}, event_rate={self.y.mean():.3f}, missing={miss:.3f})"


def validate_values(table: CohortTable) -> None:
    """Check raw-cohort value constraints (binary in {0,1}, discrete on grid,
    values inside declared bounds). Transformed tables do not satisfy these."""
    for j, spec in enumerate(table.schema):
        col = table.X[:, j]
        obs = col[~np.isnan(col)]
        if obs.size == 0:
            continue
        if spec.lower is not None and obs.min() < spec.lower - 1e-9:
            raise DataError(f"{spec.name!r}: value {obs.min()} below lower bound {spec.lower}")
        if spec.upper is not None and obs.max() > spec.upper + 1e-9:
            raise DataError(f"{spec.name!r}: value {obs.max()} above upper bound {spec.upper}")
        if spec.kind in ("binary", "ordinal_score", "categorical"):
            grid = spec.grid()
            off = ~np.isin(obs, grid)
            if off.any():
                raise DataError(f"{spec.name!r}: {int(off.sum())} values off the declared grid")


# ---------------------------------------------------------------------------
# CSV ingestion / emission

LABEL_COLUMN = "label"


def _format_cell(spec, v) -> str:
    if np.isnan(v):
        return ""
    if spec.kind == "categorical":
        code = int(round(v))
        if code != v or not 0 <= code < len(spec.levels):
            raise DataError(f"{spec.name!r}: {v} is not a valid category code")
        return spec.levels[code]
    return repr(float(v))


def save_cohort(table: CohortTable, path) -> None:
    """Write a cohort CSV: feature columns + final `label` column, empty cell
    = missing. Float cells use shortest round-trip notation, so save->load is
    bit-exact."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(table.feature_names) + [LABEL_COLUMN])
        for i in range(table.n):
            row = [_format_cell(s, table.X[i, j]) for j, s in enumerate(table.schema)]
            row.append(str(int(table.y[i])))
            writer.writerow(row)


def _parse_cell(spec, text, where):
    if text == "":
        return np.nan
    if spec.kind == "categorical":
        try:
            return float(spec.levels.index(text))
        except ValueError:
            raise DataError(f"{where}: {text!r} is not a level of {spec.name!r}") from None
    try:
        return float(text)
    except ValueError:
        raise DataError(f"{where}: non-numeric cell {text!r} in column {spec.name!r}") from None


def load_cohort(path, schema) -> CohortTable:
    """Read a cohort CSV whose header must match the schema names plus `label`."""
    schema = validate_schema(schema)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        expected = list(feature_names(schema)) + [LABEL_COLUMN]
        if header != expected:
            raise SchemaError(f"{path}: header {header!r} does not match schema {expected!r}")
        rows, labels = [], []
        for lineno, cells in enumerate(reader, start=2):
            if len(cells) != len(expected):
                raise DataError(f"{path}:{lineno}: expected {len(expected)} cells, got {len(cells)}")
            rows.append(
                [_parse_cell(schema[j], cells[j], f"{path}:{lineno}") for j in range(len(schema))]
            )
            try:
                labels.append(int(cells[-1]))
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer label {cells[-1]!r}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    return CohortTable(schema, np.array(rows), np.array(labels))


# ---------------------------------------------------------------------------
# Stratified splitting

@dataclass(frozen=True)
class SplitIndex:
    train_rows: np.ndarray
    test_rows: np.ndarray
    seed: int


def stratified_split(table: CohortTable, train_fraction: float, seed: int) -> SplitIndex:
    """Seeded per-class shuffle; each class contributes round(count x fraction)
    rows to the train part (round-half-up)."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must be in (0, 1), got {train_fraction}")
    y = table.y
    classes = np.unique(y)
    if classes.size < 2:
        raise DataError("stratified split needs both classes present")
    rng = derive_rng(seed, "split")
    train_parts, test_parts = [], []
    for c in classes:
        idx = np.flatnonzero(y == c)
        if idx.size < 2:
            raise DataError(f"class {c} has fewer than 2 members; cannot stratify")
        perm = rng.permutation(idx.size)
        n_train = int(np.floor(idx.size * train_fraction + 0.5))
        train_parts.append(idx[perm[:n_train]])
        test_parts.append(idx[perm[n_train:]])
    train_rows = np.sort(np.concatenate(train_parts))
    test_rows = np.sort(np.concatenate(test_parts))
    return SplitIndex(train_rows=train_rows, test_rows=test_rows, seed=int(seed))


# ---------------------------------------------------------------------------
# Summaries

@dataclass(frozen=True)
class GroupStats:
    """Per-feature moments over one group of rows. mean/sd are NaN when the
    document count is too small (0 for mean, <2 for sd)."""

    count: np.ndarray       # non-missing documents per feature
    mean: np.ndarray
    sd: np.ndarray          # sample sd (ddof=1)
    missing_frac: np.ndarray
    n_rows: int


@dataclass(frozen=True)
class CohortSummary:
    features: tuple
    groups: dict            # "all" or "class0"/"class1" -> GroupStats
    event_rate: float


def _group_stats(X: np.ndarray) -> GroupStats:
    n = X.shape[0]
    obs = ~np.isnan(X)
    count = obs.sum(axis=0)
    with np.errstate(invalid="ignore"):
        mean = np.where(count > 0, np.nanmean(X, axis=0), np.nan)
        sd = np.full(X.shape[1], np.nan)
        enough = count >= 2
        if enough.any():
            sd_all = np.nanstd(X, axis=0, ddof=1)
            sd = np.where(enough, sd_all, np.nan)
    missing = 1.0 - count / n if n else np.ones(X.shape[1])
    return GroupStats(count=count, mean=mean, sd=sd, missing_frac=missing, n_rows=n)


def summarize(table: CohortTable, by_label: bool = True) -> CohortSummary:
    """Per-feature mean/sd/missing-fraction/document-count, overall or per class."""
    groups = {}
    if by_label:
        for c in (0, 1):
            groups[f"class{c}"] = _group_stats(table.X[table.y == c])
    else:
        groups["all"] = _group_stats(table.X)
    return CohortSummary(
        features=table.feature_names,
        groups=groups,
        event_rate=float(table.y.mean()),
    )


def summary_to_jsonable(summary: CohortSummary) -> dict:
    def _arr(a):
        return [None if (isinstance(v, float) and np.isnan(v)) else v for v in np.asarray(a).tolist()]

    return {
        "features": list(summary.features),
        "event_rate": summary.event_rate,
        "groups": {
            name: {
                "n_rows": int(g.n_rows),
                "count": [int(c) for c in g.count],
                "mean": _arr(g.mean),
                "sd": _arr(g.sd),
                "missing_frac": _arr(g.missing_frac),
            }
            for name, g in summary.groups.items()
        },
    }


def summary_from_jsonable(payload: dict) -> CohortSummary:
    def _arr(values):
        return np.array([np.nan if v is None else float(v) for v in values])

    groups = {
        name: GroupStats(
            count=np.array(g["count"], dtype=int),
            mean=_arr(g["mean"]),
            sd=_arr(g["sd"]),
            missing_frac=_arr(g["missing_frac"]),
            n_rows=int(g["n_rows"]),
        )
        for name, g in payload["groups"].items()
    }
    return CohortSummary(
        features=tuple(payload["features"]),
        groups=groups,
        event_rate=float(payload["event_rate"]),
    )
