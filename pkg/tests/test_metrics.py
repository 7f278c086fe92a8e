"""Rank metrics, thresholding, confusion rates, and the summary-stat Welch
test, cross-checked against closed forms and scipy."""

import numpy as np
import pytest
from scipy import stats

from icurisk.cohort import CohortTable
from icurisk.errors import DataError
from icurisk.metrics import (auroc, bootstrap_auroc_ci, compare_cohorts,
                             confusion_metrics, roc_curve, tune_threshold,
                             welch_t)
from icurisk.schema import FeatureSpec


def test_auroc_reference_fixture():
    assert auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75


def test_auroc_extremes_and_ties():
    assert auroc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auroc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0
    assert auroc([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1]) == 0.5


def test_auroc_monotone_invariance():
    rng = np.random.default_rng(3)
    scores = rng.random(80)
    labels = rng.integers(0, 2, 80)
    labels[:2] = [0, 1]
    a = auroc(scores, labels)
    assert auroc(np.exp(3 * scores), labels) == a
    assert auroc(1 - scores, 1 - labels) == pytest.approx(a)


def test_auroc_requires_both_classes():
    with pytest.raises(DataError):
        auroc([0.1, 0.2], [1, 1])


def test_roc_curve_shape():
    rng = np.random.default_rng(5)
    scores = rng.random(60)
    labels = rng.integers(0, 2, 60)
    labels[:2] = [0, 1]
    fpr, tpr, thr = roc_curve(scores, labels)
    assert fpr[0] == 0.0 and tpr[0] == 0.0
    assert fpr[-1] == 1.0 and tpr[-1] == 1.0
    assert (np.diff(fpr) >= 0).all() and (np.diff(tpr) >= 0).all()
    assert len(fpr) == len(tpr) == len(thr)


def test_tune_threshold_matches_enumeration():
    rng = np.random.default_rng(8)
    scores = np.round(rng.random(50), 2)
    labels = rng.integers(0, 2, 50)
    labels[:2] = [0, 1]
    thr = tune_threshold(scores, labels, policy="youden")
    # brute force over every threshold between -inf and +inf
    best_j, best_t = -np.inf, None
    for t in np.unique(np.r_[scores - 1e-9, scores + 1e-9, 0.0, 1.0]):
        pred = scores >= t
        tp = np.sum(pred & (labels == 1))
        fn = np.sum(~pred & (labels == 1))
        tn = np.sum(~pred & (labels == 0))
        fp = np.sum(pred & (labels == 0))
        j = tp / (tp + fn) + tn / (tn + fp) - 1
        if j > best_j + 1e-12:
            best_j, best_t = j, t
    pred = scores >= thr
    tp = np.sum(pred & (labels == 1)); fn = np.sum(~pred & (labels == 1))
    tn = np.sum(~pred & (labels == 0)); fp = np.sum(pred & (labels == 0))
    got_j = tp / (tp + fn) + tn / (tn + fp) - 1
    assert got_j == pytest.approx(best_j, abs=1e-12)


def test_bootstrap_ci_deterministic_and_ordered():
    rng = np.random.default_rng(2)
    scores = rng.random(120)
    labels = (scores + rng.normal(0, 0.3, 120) > 0.5).astype(int)
    labels[:2] = [0, 1]
    lo1, hi1 = bootstrap_auroc_ci(scores, labels, B=300, seed=4)
    lo2, hi2 = bootstrap_auroc_ci(scores, labels, B=300, seed=4)
    assert (lo1, hi1) == (lo2, hi2)
    assert 0.0 <= lo1 <= hi1 <= 1.0
    point = auroc(scores, labels)
    assert lo1 <= point <= hi1


def test_confusion_metrics_fixture():
    scores = np.array([0.9, 0.8, 0.3, 0.2, 0.6, 0.1])
    labels = np.array([1, 1, 1, 0, 0, 0])
    m = confusion_metrics(scores, labels, threshold=0.5)
    assert (m.tp, m.fn, m.fp, m.tn) == (2, 1, 1, 2)
    assert m.sensitivity == pytest.approx(2 / 3)
    assert m.specificity == pytest.approx(2 / 3)
    assert m.ppv == pytest.approx(2 / 3)
    assert m.npv == pytest.approx(2 / 3)
    assert m.accuracy == pytest.approx(4 / 6)
    assert m.f1 == pytest.approx(2 / 3)
    assert m.threshold == 0.5


def test_confusion_metrics_threshold_is_inclusive():
    m = confusion_metrics([0.5, 0.4], [1, 0], threshold=0.5)
    assert m.tp == 1 and m.tn == 1


def test_confusion_metrics_nan_for_empty_denominators():
    m = confusion_metrics([0.9, 0.8], [1, 1], threshold=0.5)
    assert np.isnan(m.specificity) and np.isnan(m.npv)


def test_welch_t_against_scipy():
    cases = [(69.74, 9.31, 911, 69.52, 8.88, 390),
             (22.90, 17.85, 911, 20.03, 11.82, 390),
             (12.97, 3.35, 911, 12.52, 3.21, 390),
             (5.0, 2.0, 30, 4.0, 3.0, 25)]
    for m1, s1, n1, m2, s2, n2 in cases:
        res = welch_t(m1, s1, n1, m2, s2, n2)
        ref_t, ref_p = stats.ttest_ind_from_stats(m1, s1, n1, m2, s2, n2,
                                                  equal_var=False)
        assert res.t == pytest.approx(ref_t, abs=1e-12)
        assert res.p == pytest.approx(ref_p, abs=1e-10)


def test_welch_t_antisymmetry():
    a = welch_t(5.0, 2.0, 40, 3.0, 1.5, 35)
    b = welch_t(3.0, 1.5, 35, 5.0, 2.0, 40)
    assert a.t == pytest.approx(-b.t)
    assert a.p == pytest.approx(b.p)
    assert a.df == pytest.approx(b.df)


def test_welch_t_degenerate_inputs():
    same = welch_t(3.0, 0.0, 10, 3.0, 0.0, 10)
    assert same.p == 1.0 and same.t == 0.0
    apart = welch_t(4.0, 0.0, 10, 3.0, 0.0, 10)
    assert apart.p == 0.0
    with pytest.raises(DataError):
        welch_t(1.0, 1.0, 1, 2.0, 1.0, 10)
    with pytest.raises(DataError):
        welch_t(1.0, -1.0, 10, 2.0, 1.0, 10)


def test_compare_cohorts_rows():
    schema = (FeatureSpec(name="hr", kind="continuous", unit="bpm"),
              FeatureSpec(name="rare", kind="continuous"))
    rng = np.random.default_rng(6)
    Xa = np.column_stack([rng.normal(80, 10, 50), np.full(50, np.nan)])
    Xa[0, 1] = 1.0
    Xb = np.column_stack([rng.normal(85, 10, 40), np.full(40, np.nan)])
    Xb[:2, 1] = [1.0, 2.0]
    a = CohortTable(schema, Xa, rng.integers(0, 2, 50))
    b = CohortTable(schema, Xb, rng.integers(0, 2, 40))
    rows = compare_cohorts(a, b)
    assert [r["feature"] for r in rows] == ["hr", "rare"]
    hr = rows[0]
    assert hr["unit"] == "bpm" and hr["n_a"] == 50 and hr["n_b"] == 40
    ref = welch_t(hr["mean_a"], hr["sd_a"], 50, hr["mean_b"], hr["sd_b"], 40)
    assert hr["p"] == pytest.approx(ref.p)
    assert rows[1]["note"]  # too few observations for a test
    assert rows[1]["p"] is None or np.isnan(rows[1]["p"])
