"""Posterior risk distributions in both modes: feature-input sampling with
flag enumeration and ordinal snapping, and coefficient-space sampling."""

import numpy as np
import pytest

from icurisk.cohort import CohortSummary, GroupStats, summarize
from icurisk.errors import ConfigError
from icurisk.explain.dream import DreamConfig
from icurisk.explain.posterior import (REFERENCE_INPUTS_POSTERIOR,
                                       PosteriorConfig, posterior_risk_inputs,
                                       posterior_risk_params)
from icurisk.schema import FeatureSpec

from conftest import make_table, small_schema

_FAST = PosteriorConfig(dream=DreamConfig(n_chains=8, n_generations=600,
                                          seed=0))


def _summary(schema, means, sds, group="class1"):
    d = len(schema)
    stats = GroupStats(count=np.full(d, 50), mean=np.asarray(means, float),
                       sd=np.asarray(sds, float),
                       missing_frac=np.zeros(d), n_rows=50)
    return CohortSummary(features=tuple(s.name for s in schema),
                         groups={group: stats}, event_rate=0.2)


def test_constant_predictor_collapses_to_a_point():
    schema = small_schema()
    summary = _summary(schema, [60.0, 2.0, 0.3, 10.0], [10.0, 1.0, 0.46, 2.0])
    risk = posterior_risk_inputs(lambda X: np.full(X.shape[0], 0.3), summary,
                                 _FAST, schema=schema)
    assert risk.mode == "inputs"
    assert risk.samples == pytest.approx(0.3, abs=1e-12)
    assert risk.mean == pytest.approx(0.3, abs=1e-12)
    assert risk.ci_low == pytest.approx(0.3, abs=1e-12)
    assert risk.ci_high == pytest.approx(0.3, abs=1e-12)
    assert risk.reference == REFERENCE_INPUTS_POSTERIOR


def test_ordinal_draws_are_snapped_to_the_grid():
    # the predictor flags any gcs value off the integer grid; seeing only
    # 0.5 proves every sampled vector was snapped before evaluation
    schema = small_schema()
    gcs = 3

    def detector(X):
        off = np.abs(X[:, gcs] - np.rint(X[:, gcs])) > 1e-12
        return np.where(off, 1.0, 0.5)

    summary = _summary(schema, [60.0, 2.0, 0.3, 10.0], [10.0, 1.0, 0.46, 2.5])
    risk = posterior_risk_inputs(detector, summary, _FAST, schema=schema)
    assert np.all(risk.samples == 0.5)


def test_binary_flags_average_by_prevalence():
    # with only the flag informative, every draw's risk is the prevalence-
    # weighted average p*1 + (1-p)*0 = p
    schema = small_schema()
    vent = 2
    prevalence = 0.35
    summary = _summary(schema, [60.0, 2.0, prevalence, 10.0],
                       [10.0, 1.0, 0.48, 2.0])
    risk = posterior_risk_inputs(lambda X: X[:, vent], summary, _FAST,
                                 schema=schema)
    assert risk.samples == pytest.approx(prevalence, abs=1e-12)


def test_all_pinned_degenerate_prior():
    schema = small_schema()
    summary = _summary(schema, [60.0, 2.0, 0.0, 10.0], [0.0, 0.0, 0.0, 0.0])
    calls = []

    def f(X):
        calls.append(X.copy())
        return np.full(X.shape[0], 0.7)

    risk = posterior_risk_inputs(f, summary, _FAST, schema=schema)
    assert risk.reliable and risk.acceptance_rate == 1.0
    assert risk.max_split_rhat == 1.0
    assert risk.mean == pytest.approx(0.7)
    # the single evaluated vector carries the pinned class means
    assert calls[0][0, 0] == 60.0 and calls[0][0, 3] == 10.0


def test_sampled_means_respect_truncation_target():
    # lactate has lower bound 0; the prior is recalibrated so the truncated
    # mean hits the published class mean, and logistic-free draws confirm it
    schema = small_schema()
    summary = _summary(schema, [60.0, 1.2, 0.0, 10.0], [8.0, 2.0, 0.0, 0.0])
    seen = []

    def f(X):
        seen.append(X.copy())
        return np.full(X.shape[0], 0.5)

    cfg = PosteriorConfig(dream=DreamConfig(n_chains=10, n_generations=4000,
                                            seed=2))
    posterior_risk_inputs(f, summary, cfg, schema=schema)
    draws = np.concatenate(seen, axis=0)
    assert np.all(draws[:, 1] >= 0.0)
    assert draws[:, 1].mean() == pytest.approx(1.2, abs=0.12)
    assert draws[:, 0].mean() == pytest.approx(60.0, abs=1.0)


def test_inputs_mode_error_paths():
    schema = small_schema()
    good = _summary(schema, [60.0, 2.0, 0.3, 10.0], [10.0, 1.0, 0.46, 2.0])
    f = lambda X: np.full(X.shape[0], 0.5)
    with pytest.raises(ConfigError, match="class1"):
        bad = CohortSummary(good.features, {"class0": good.groups["class1"]},
                            0.2)
        posterior_risk_inputs(f, bad, _FAST, schema=schema)
    with pytest.raises(ConfigError, match="ordered differently"):
        posterior_risk_inputs(f, good, _FAST, schema=tuple(reversed(schema)))
    with pytest.raises(ConfigError, match="pass schema="):
        posterior_risk_inputs(f, good, _FAST)  # names not in bundled schema
    with pytest.raises(ConfigError, match="lactate"):
        nan = _summary(schema, [60.0, np.nan, 0.3, 10.0], [10.0, 1.0, 0.46, 2.0])
        posterior_risk_inputs(f, nan, _FAST, schema=schema)


def test_inputs_mode_from_real_cohort_summary():
    table = make_table(300, seed=31, informative=True)
    summary = summarize(table)
    risk = posterior_risk_inputs(lambda X: 1 / (1 + np.exp(-(X[:, 0] - 55) / 10)),
                                 summary, _FAST, schema=table.schema)
    assert 0.0 < risk.mean < 1.0
    assert risk.ci_low <= risk.mean <= risk.ci_high
    assert risk.samples.size <= _FAST.max_eval_samples


def test_params_mode_flat_prior_sd_zero():
    table = make_table(120, seed=41, informative=True)
    cfg = PosteriorConfig(dream=DreamConfig(n_chains=6, n_generations=400,
                                            seed=1), prior_sd=0.0)
    risk = posterior_risk_params(table, table.X[0], cfg)
    assert risk.mode == "params"
    assert np.all(risk.samples == 0.5)
    assert risk.reference is None


def test_params_mode_contracts_toward_the_fit():
    from icurisk.models.linear import linear_predict_proba, train_logreg
    table = make_table(400, seed=43, informative=True)
    row = table.X[5]
    cfg = PosteriorConfig(dream=DreamConfig(n_chains=10, n_generations=3000,
                                            seed=7), prior_sd=10.0)
    risk = posterior_risk_params(table, row, cfg)
    point = linear_predict_proba(train_logreg(table, C=10.0), row[None, :])[0]
    assert risk.ci_low - 0.05 <= point <= risk.ci_high + 0.05
    assert 0.0 <= risk.ci_low <= risk.ci_high <= 1.0
