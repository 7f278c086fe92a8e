"""Evaluation battery: AUROC, bootstrap CIs, threshold tuning, confusion
metrics, and Welch t-tests for cohort comparison tables.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import nan, sqrt

import numpy as np

from ._rng import derive_rng
from .errors import ConfigError, DataError
from .special import student_t_two_sided_p

__all__ = [
    "MetricReport",
    "WelchResult",
    "auroc",
    "roc_curve",
    "bootstrap_auroc_ci",
    "tune_threshold",
    "confusion_metrics",
    "welch_t",
    "compare_cohorts",
]


def _check_binary(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if not np.isin(labels, (0, 1)).all():
        raise DataError("labels must be 0/1")
    return labels


def _midranks(x: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties given the average rank of their block."""
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    n = x.size
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and xs[j + 1] == xs[i]:
            j += 1
        ranks[i : j + 1] = 0.5 * (i + j) + 1.0
        i = j + 1
    out = np.empty(n)
    out[order] = ranks
    return out


def auroc(scores, labels) -> float:
    """Mann-Whitney AUROC: (concordant + half the ties) / (n1 * n0)."""
    scores = np.asarray(scores, dtype=float)
    labels = _check_binary(labels)
    n1 = int((labels == 1).sum())
    n0 = labels.size - n1
    if n1 == 0 or n0 == 0:
        raise DataError("AUROC undefined: both classes must be present")
    ranks = _midranks(scores)
    r1 = ranks[labels == 1].sum()
    return float((r1 - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def roc_curve(scores, labels):
    """ROC points swept over descending score thresholds.

    Returns (fpr, tpr, thresholds); the first point is (0, 0) at threshold
    +inf, and a point is emitted after each distinct score value.
    """
    scores = np.asarray(scores, dtype=float)
    labels = _check_binary(labels)
    n1 = int((labels == 1).sum())
    n0 = labels.size - n1
    if n1 == 0 or n0 == 0:
        raise DataError("ROC undefined: both classes must be present")
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    y = labels[order]
    tps = np.cumsum(y)
    fps = np.cumsum(1 - y)
    last_of_block = np.r_[s[1:] != s[:-1], True]
    tpr = np.r_[0.0, tps[last_of_block] / n1]
    fpr = np.r_[0.0, fps[last_of_block] / n0]
    thresholds = np.r_[np.inf, s[last_of_block]]
    return fpr, tpr, thresholds


def bootstrap_auroc_ci(scores, labels, B: int = 2000, seed: int = 0, levels=(2.5, 97.5)):
    """Percentile bootstrap CI for AUROC, stratified within each class so
    every replicate keeps both classes."""
    scores = np.asarray(scores, dtype=float)
    labels = _check_binary(labels)
    if B < 1:
        raise ConfigError("B must be >= 1")
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if pos.size == 0 or neg.size == 0:
        raise DataError("bootstrap CI undefined: both classes must be present")
    rng = derive_rng(seed, "bootstrap")
    draws_pos = rng.integers(0, pos.size, size=(B, pos.size))
    draws_neg = rng.integers(0, neg.size, size=(B, neg.size))
    reps = np.empty(B)
    ones = np.ones(pos.size, dtype=int)
    zeros = np.zeros(neg.size, dtype=int)
    lab = np.concatenate([ones, zeros])
    for b in range(B):
        sc = np.concatenate([scores[pos[draws_pos[b]]], scores[neg[draws_neg[b]]]])
        reps[b] = auroc(sc, lab)
    low, high = np.percentile(reps, levels)
    return float(low), float(high)


def _threshold_candidates(scores: np.ndarray) -> np.ndarray:
    """Midpoints between consecutive unique scores, plus an all-positive
    sentinel below the minimum. Predicted positive means score >= threshold."""
    uniq = np.unique(scores)
    mids = 0.5 * (uniq[:-1] + uniq[1:])
    return np.r_[uniq[0] - 1.0, mids]


def tune_threshold(oof_scores, oof_labels, policy: str = "youden") -> float:
    """Pick a decision threshold from out-of-fold scores.

    policy "youden" maximizes J = sensitivity + specificity - 1 (ties go to
    the lower threshold). policy "sens_floor:<f>" returns the largest
    threshold whose sensitivity still reaches the floor, i.e. maximizes
    specificity subject to the floor.
    """
    scores = np.asarray(oof_scores, dtype=float)
    labels = _check_binary(oof_labels)
    n1 = int((labels == 1).sum())
    n0 = labels.size - n1
    if n1 == 0 or n0 == 0:
        raise DataError("threshold tuning needs both classes")
    cands = _threshold_candidates(scores)
    pos_scores = scores[labels == 1]
    neg_scores = scores[labels == 0]
    sens = (pos_scores[None, :] >= cands[:, None]).mean(axis=1)
    spec = (neg_scores[None, :] < cands[:, None]).mean(axis=1)
    if policy == "youden":
        j = sens + spec - 1.0
        return float(cands[int(np.argmax(j))])  # argmax takes the first (lowest) maximizer
    if policy.startswith("sens_floor:"):
        try:
            floor = float(policy.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad sensitivity floor in policy {policy!r}") from None
        ok = np.flatnonzero(sens >= floor)
        if ok.size == 0:
            raise ConfigError(f"no threshold reaches sensitivity {floor}")
        return float(cands[ok[-1]])  # sens is non-increasing; last qualifying = max specificity
    raise ConfigError(f"unknown threshold policy {policy!r}")


@dataclass(frozen=True)
class MetricReport:
    auroc: float
    auroc_ci_low: float
    auroc_ci_high: float
    threshold: float
    accuracy: float
    f1: float
    sensitivity: float
    specificity: float
    ppv: float
    npv: float
    tp: int
    fp: int
    tn: int
    fn: int

    def with_ci(self, low: float, high: float) -> "MetricReport":
        return replace(self, auroc_ci_low=low, auroc_ci_high=high)


def confusion_metrics(scores, labels, threshold: float) -> MetricReport:
    """Confusion counts and rates at a fixed threshold (positive = score >=
    threshold). Undefined rates (empty denominator) are reported as NaN.
    AUROC is filled in; its CI is left NaN for the caller to supply."""
    scores = np.asarray(scores, dtype=float)
    labels = _check_binary(labels)
    pred = scores >= threshold
    tp = int(np.sum(pred & (labels == 1)))
    fp = int(np.sum(pred & (labels == 0)))
    tn = int(np.sum(~pred & (labels == 0)))
    fn = int(np.sum(~pred & (labels == 1)))
    sens = tp / (tp + fn) if tp + fn else nan
    spec = tn / (tn + fp) if tn + fp else nan
    ppv = tp / (tp + fp) if tp + fp else nan
    npv = tn / (tn + fn) if tn + fn else nan
    acc = (tp + tn) / labels.size
    f1 = 2.0 * ppv * sens / (ppv + sens) if (ppv + sens) > 0 else nan
    try:
        auc = auroc(scores, labels)
    except DataError:
        auc = nan
    return MetricReport(
        auroc=auc, auroc_ci_low=nan, auroc_ci_high=nan, threshold=float(threshold),
        accuracy=acc, f1=f1, sensitivity=sens, specificity=spec, ppv=ppv, npv=npv,
        tp=tp, fp=fp, tn=tn, fn=fn,
    )


@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p: float


def welch_t(m1, s1, n1, m2, s2, n2) -> WelchResult:
    """Two-sided Welch t-test from summary statistics (sample sds)."""
    if n1 < 2 or n2 < 2:
        raise DataError("welch_t needs n >= 2 in both groups")
    if s1 < 0 or s2 < 0:
        raise DataError("welch_t needs nonnegative sds")
    v1 = s1 * s1 / n1
    v2 = s2 * s2 / n2
    se2 = v1 + v2
    if se2 == 0.0:
        # both groups constant: equal means carry no evidence of a difference
        return WelchResult(t=0.0, df=float(n1 + n2 - 2), p=1.0) if m1 == m2 else WelchResult(
            t=np.inf if m1 > m2 else -np.inf, df=float(n1 + n2 - 2), p=0.0
        )
    t = (m1 - m2) / sqrt(se2)
    df = se2 * se2 / (v1 * v1 / (n1 - 1) + v2 * v2 / (n2 - 1))
    return WelchResult(t=float(t), df=float(df), p=student_t_two_sided_p(t, df))


def compare_cohorts(table_a, table_b):
    """Per-feature Welch tests between two cohorts sharing a schema.

    Returns a list of dicts (feature, unit, group stats, t, df, p); features
    with fewer than 2 observed values in either cohort are reported with a
    note instead of a test.
    """
    if table_a.schema != table_b.schema:
        raise DataError("cohorts must share a schema")
    rows = []
    for j, spec in enumerate(table_a.schema):
        xa = table_a.X[:, j]
        xb = table_b.X[:, j]
        xa = xa[~np.isnan(xa)]
        xb = xb[~np.isnan(xb)]
        row = {
            "feature": spec.name,
            "unit": spec.unit,
            "n_a": int(xa.size),
            "n_b": int(xb.size),
            "mean_a": float(xa.mean()) if xa.size else nan,
            "sd_a": float(xa.std(ddof=1)) if xa.size >= 2 else nan,
            "mean_b": float(xb.mean()) if xb.size else nan,
            "sd_b": float(xb.std(ddof=1)) if xb.size >= 2 else nan,
        }
        if xa.size < 2 or xb.size < 2:
            row.update(t=nan, df=nan, p=nan, note="skipped: fewer than 2 observations")
        else:
            res = welch_t(row["mean_a"], row["sd_a"], xa.size, row["mean_b"], row["sd_b"], xb.size)
            row.update(t=res.t, df=res.df, p=res.p, note="")
        rows.append(row)
    return rows
