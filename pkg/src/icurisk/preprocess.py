"""Preprocessing stages fitted on training data and replayed on held-out
data: KNN imputation, smoothed target encoding, z-scaling, class weights.

Every stage is a frozen parameter object plus a pure transform. Transformed
tables keep the original schema object; kinds and bounds always describe the
raw measurement space, while transformed values live in model space.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .cohort import CohortTable
from .errors import ConfigError, DataError, OrderingError, SchemaError
from .schema import feature_names

log = logging.getLogger(__name__)


def _check_schema(stage, fitted_names, table: CohortTable) -> None:
    if tuple(table.feature_names) != tuple(fitted_names):
        raise SchemaError(f"{stage}: table schema does not match fitted schema")


# ---------------------------------------------------------------------------
# KNN imputation

@dataclass(frozen=True)
class KnnImputer:
    """Nearest-neighbor mean imputation.

    Distances are Euclidean over dimensions observed in both rows, on
    internally z-scored values (training mean/sd), divided by the number of
    shared dimensions. Neighbor ties break by lower training-row index.
    """

    k: int
    feature_names_: tuple
    reference: np.ndarray        # training matrix snapshot, NaN = missing
    loc: np.ndarray              # per-feature observed training mean
    scale: np.ndarray            # per-feature observed training sd (population)
    fallback: np.ndarray         # per-feature observed training mean
    kinds: tuple
    grids: tuple                 # value grid per feature (None for continuous)
    distance: str = "euclidean_observed_dims"


def fit_imputer(train: CohortTable, k: int = 5) -> KnnImputer:
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    X = train.X
    obs = ~np.isnan(X)
    if not obs.any(axis=0).all():
        bad = [s.name for s, seen in zip(train.schema, obs.any(axis=0)) if not seen]
        raise DataError(f"features with no observed training values: {bad}")
    with np.errstate(invalid="ignore"):
        loc = np.nanmean(X, axis=0)
        scale = np.nanstd(X, axis=0)
    grids = tuple(
        s.grid() if s.kind in ("binary", "ordinal_score", "categorical") else None
        for s in train.schema
    )
    return KnnImputer(
        k=int(k),
        feature_names_=train.feature_names,
        reference=X.copy(),
        loc=loc,
        scale=scale,
        fallback=loc.copy(),
        kinds=tuple(s.kind for s in train.schema),
        grids=grids,
    )


def _snap_to_grid(value: float, grid: np.ndarray) -> float:
    return float(grid[np.argmin(np.abs(grid - value))])


def impute(imputer: KnnImputer, table: CohortTable) -> CohortTable:
    """Replace each missing entry with the mean of that feature over the k
    nearest training rows having it observed; training mean if none is
    eligible. Discrete features are then snapped to their value grid."""
    _check_schema("impute", imputer.feature_names_, table)
    X = table.X.copy()
    missing_rows = np.flatnonzero(np.isnan(X).any(axis=1))
    if missing_rows.size == 0:
        return table
    scale_safe = np.where(imputer.scale > 0, imputer.scale, 1.0)
    ZR = (imputer.reference - imputer.loc) / scale_safe
    ref_obs = ~np.isnan(imputer.reference)
    for i in missing_rows:
        row = X[i]
        obs_q = ~np.isnan(row)
        if obs_q.any():
            zq = (row[obs_q] - imputer.loc[obs_q]) / scale_safe[obs_q]
            diff2 = (ZR[:, obs_q] - zq) ** 2
            shared = ref_obs[:, obs_q].sum(axis=1)
            with np.errstate(invalid="ignore"):
                d2 = np.nansum(diff2, axis=1)
            d2 = np.where(shared > 0, d2 / np.maximum(shared, 1), np.inf)
        else:
            d2 = np.full(imputer.reference.shape[0], np.inf)
        order = np.argsort(d2, kind="stable")
        for j in np.flatnonzero(~obs_q):
            eligible = order[ref_obs[order, j] & np.isfinite(d2[order])]
            if eligible.size == 0:
                val = imputer.fallback[j]
            else:
                val = float(imputer.reference[eligible[: imputer.k], j].mean())
            if imputer.grids[j] is not None:
                val = _snap_to_grid(val, imputer.grids[j])
            X[i, j] = val
    return table.with_matrix(X)


# ---------------------------------------------------------------------------
# Smoothed target encoding

@dataclass(frozen=True)
class TargetEncoder:
    """Category c maps to (n_c * ybar_c + alpha * ybar) / (n_c + alpha)."""

    feature: str
    alpha: float
    global_mean: float
    category_values: np.ndarray   # sorted observed category values
    category_counts: np.ndarray
    category_means: np.ndarray

    def encoded_value(self, c: float) -> float:
        i = np.searchsorted(self.category_values, c)
        if i < self.category_values.size and self.category_values[i] == c:
            n_c = self.category_counts[i]
            ybar_c = self.category_means[i]
            return float((n_c * ybar_c + self.alpha * self.global_mean) / (n_c + self.alpha))
        return self.global_mean


def fit_encoder(train: CohortTable, feature: str, alpha: float = 10.0) -> TargetEncoder:
    if alpha < 0:
        raise ConfigError(f"alpha must be >= 0, got {alpha}")
    j = train.index_of(feature)
    spec = train.schema[j]
    if spec.kind not in ("categorical", "ordinal_score"):
        raise ConfigError(f"{feature!r} is {spec.kind}; target encoding needs a discrete feature")
    col = train.X[:, j]
    obs = ~np.isnan(col)
    if not obs.any():
        raise DataError(f"{feature!r} has no observed training values to encode")
    values = col[obs]
    y = train.y[obs].astype(float)
    cats, inverse = np.unique(values, return_inverse=True)
    counts = np.bincount(inverse)
    sums = np.bincount(inverse, weights=y)
    return TargetEncoder(
        feature=feature,
        alpha=float(alpha),
        global_mean=float(train.y.mean()),
        category_values=cats,
        category_counts=counts,
        category_means=sums / counts,
    )


def encode(encoder: TargetEncoder, table: CohortTable) -> CohortTable:
    """Replace the encoded feature's column with smoothed target means.
    Unseen categories map to the global mean (logged, not an error)."""
    j = table.index_of(encoder.feature)
    col = table.X[:, j]
    obs = ~np.isnan(col)
    values = col[obs]
    idx = np.searchsorted(encoder.category_values, values)
    idx_c = np.clip(idx, 0, encoder.category_values.size - 1)
    known = encoder.category_values[idx_c] == values
    n_c = np.where(known, encoder.category_counts[idx_c], 0.0)
    ybar_c = np.where(known, encoder.category_means[idx_c], 0.0)
    denom = np.maximum(n_c + encoder.alpha, 1e-300)
    enc = (n_c * ybar_c + encoder.alpha * encoder.global_mean) / denom
    enc = np.where(known, enc, encoder.global_mean)
    if (~known).any():
        unseen = sorted(set(values[~known].tolist()))
        log.info("encoder %r: %d unseen categories %s mapped to global mean",
                 encoder.feature, len(unseen), unseen[:5])
    X = table.X.copy()
    out = col.copy()
    out[obs] = enc
    X[:, j] = out
    return table.with_matrix(X)


# ---------------------------------------------------------------------------
# z-scaling

@dataclass(frozen=True)
class StandardScaler:
    feature_names_: tuple
    loc: np.ndarray
    scale: np.ndarray  # population sd; zero-sd features transform to 0


def fit_scaler(train: CohortTable) -> StandardScaler:
    if np.isnan(train.X).any():
        raise OrderingError("fit_scaler before imputation: missing values present")
    return StandardScaler(
        feature_names_=train.feature_names,
        loc=train.X.mean(axis=0),
        scale=train.X.std(axis=0),
    )


def scale(scaler: StandardScaler, table: CohortTable) -> CohortTable:
    _check_schema("scale", scaler.feature_names_, table)
    if np.isnan(table.X).any():
        raise OrderingError("scale before imputation: missing values present")
    denom = np.where(scaler.scale > 0, scaler.scale, 1.0)
    Z = (table.X - scaler.loc) / denom
    Z[:, scaler.scale == 0] = 0.0
    return table.with_matrix(Z)


# ---------------------------------------------------------------------------
# Class weights

@dataclass(frozen=True)
class ClassWeights:
    """Inverse-frequency weights: w_y = 1 / f_y on the training fold.

    The integer counts are kept so that w_y * f_y = 1 can be verified as an
    exact rational identity; the float fields are n/count rounded once.
    (The rounded product w1 * (n1/n) misses 1.0 by an ulp for roughly a
    quarter of count pairs, so exactness lives at the count level.)
    """

    w0: float
    w1: float
    n: int
    n0: int
    n1: int

    def per_row(self, labels) -> np.ndarray:
        labels = np.asarray(labels)
        return np.where(labels == 1, self.w1, self.w0).astype(float)


def class_weights(labels) -> ClassWeights:
    labels = np.asarray(labels)
    if not np.isin(labels, (0, 1)).all():
        raise DataError("labels must be 0/1")
    n1 = int(labels.sum())
    n = int(labels.size)
    if n1 in (0, n):
        raise DataError("class weights need both classes present")
    return ClassWeights(w0=n / (n - n1), w1=n / n1, n=n, n0=n - n1, n1=n1)


# ---------------------------------------------------------------------------
# Pipeline

@dataclass(frozen=True)
class PipelineConfig:
    """encode: "auto" encodes every multi-level discrete feature
    (ordinal_score or categorical kinds); a tuple of names encodes exactly
    those; () disables encoding. Binary flags are never encoded."""

    k_neighbors: int = 5
    alpha: float = 10.0
    encode: object = "auto"
    scale: bool = True


@dataclass(frozen=True)
class FittedPipeline:
    schema: tuple
    config: PipelineConfig
    imputer: KnnImputer
    encoders: tuple
    scaler: StandardScaler
    weights: ClassWeights
    train_rows: tuple  # provenance; row indices into the source table, or None


def _encode_targets(schema, config: PipelineConfig) -> tuple:
    if config.encode == "auto":
        return tuple(s.name for s in schema if s.kind in ("ordinal_score", "categorical"))
    names = tuple(config.encode)
    known = set(feature_names(schema))
    unknown = [n for n in names if n not in known]
    if unknown:
        raise SchemaError(f"encode list names unknown features: {unknown}")
    return names


def fit_pipeline(train: CohortTable, config: PipelineConfig = PipelineConfig(),
                 train_rows=None) -> FittedPipeline:
    """Fit impute -> encode -> scale on the training fold only."""
    imputer = fit_imputer(train, config.k_neighbors)
    current = impute(imputer, train)
    encoders = tuple(
        fit_encoder(current, name, config.alpha) for name in _encode_targets(train.schema, config)
    )
    for enc in encoders:
        current = encode(enc, current)
    scaler = fit_scaler(current) if config.scale else None
    return FittedPipeline(
        schema=train.schema,
        config=config,
        imputer=imputer,
        encoders=encoders,
        scaler=scaler,
        weights=class_weights(train.y),
        train_rows=tuple(int(i) for i in train_rows) if train_rows is not None else None,
    )


def apply(pipeline: FittedPipeline, table: CohortTable) -> CohortTable:
    """Replay the frozen stages; never reads labels of the transformed rows."""
    _check_schema("apply", feature_names(pipeline.schema), table)
    current = impute(pipeline.imputer, table)
    for enc in pipeline.encoders:
        current = encode(enc, current)
    if pipeline.scaler is not None:
        current = scale(pipeline.scaler, current)
    return current


# ---------------------------------------------------------------------------
# Serialization (audit/replay artifact)

_FORMAT_VERSION = 1


def _arr(a) -> list:
    return np.asarray(a).tolist()


def pipeline_to_jsonable(p: FittedPipeline) -> dict:
    return {
        "format_version": _FORMAT_VERSION,
        "config": {
            "k_neighbors": p.config.k_neighbors,
            "alpha": p.config.alpha,
            "encode": p.config.encode if isinstance(p.config.encode, str) else list(p.config.encode),
            "scale": p.config.scale,
        },
        "feature_names": list(feature_names(p.schema)),
        "imputer": {
            "k": p.imputer.k,
            "distance": p.imputer.distance,
            "loc": _arr(p.imputer.loc),
            "scale": _arr(p.imputer.scale),
            "fallback": _arr(p.imputer.fallback),
            "reference": _arr(p.imputer.reference),
        },
        "encoders": [
            {
                "feature": e.feature,
                "alpha": e.alpha,
                "global_mean": e.global_mean,
                "category_values": _arr(e.category_values),
                "category_counts": _arr(e.category_counts),
                "category_means": _arr(e.category_means),
            }
            for e in p.encoders
        ],
        "scaler": None if p.scaler is None else {
            "loc": _arr(p.scaler.loc),
            "scale": _arr(p.scaler.scale),
        },
        "weights": {"w0": p.weights.w0, "w1": p.weights.w1},
        "train_rows": list(p.train_rows) if p.train_rows is not None else None,
    }


def pipeline_param_bytes(p: FittedPipeline) -> bytes:
    """Canonical byte serialization of every fitted parameter (leakage probe)."""
    import json

    return json.dumps(pipeline_to_jsonable(p), sort_keys=True).encode()
