"""End-to-end orchestration on a scaled-down configuration."""

import json

import numpy as np
import pytest

from icurisk.cohort import save_cohort
from icurisk.errors import ConfigError, DataError
from icurisk.pipeline import (RunConfig, benchmark_grids, load_run_config,
                              run, run_config_from_jsonable,
                              run_config_to_jsonable)
from icurisk.schema import FeatureSpec, save_schema

from conftest import make_table, small_schema

_ROWS = ("boosted_trees_ordered", "boosted_trees", "boosted_trees_subsampled",
         "logistic_regression", "gaussian_nb", "mlp")


def _small_config(**over):
    base = dict(seed=11, synth_n=400, top_k=8, cv_folds=3, n_bootstrap=150,
                ablation_resamples=20, shap_background=32, shap_rows=8,
                ale_top=2, posterior_chains=16, posterior_generations=400)
    base.update(over)
    return RunConfig(**base)


@pytest.fixture(scope="module")
def small_run():
    return run(_small_config())


def test_benchmark_has_six_labeled_rows(small_run):
    labels = tuple(r.label for r in small_run.benchmark)
    assert labels == _ROWS
    for row in small_run.benchmark:
        assert row.grid_size >= 1
        assert 0.0 <= row.cv_mean_auroc <= 1.0
        assert np.isfinite(row.threshold)
        assert np.isfinite(row.metrics_test.auroc)


def test_winner_is_the_cv_argmax(small_run):
    best = max(small_run.benchmark, key=lambda r: r.cv_mean_auroc)
    assert small_run.winner == best.label
    tree_labels = {r.label for r in small_run.benchmark
                   if r.spec.family == "gbdt"}
    if small_run.winner in tree_labels:
        assert small_run.shap_model_label == small_run.winner
    else:
        assert small_run.shap_model_label in tree_labels


def test_stage_timings_cover_the_run(small_run):
    assert set(small_run.stage_seconds) == {
        "dataset", "select", "models", "eval", "explain"}
    assert all(v >= 0 for v in small_run.stage_seconds.values())


def test_selection_respects_top_k(small_run):
    assert small_run.train.d == 8
    # columns keep schema order but the selected set is the MI top slice
    assert set(small_run.train.feature_names) == set(small_run.ranking.selected)
    schema_order = [s.name for s in small_run.schema]
    positions = [schema_order.index(n) for n in small_run.train.feature_names]
    assert positions == sorted(positions)
    assert small_run.test.feature_names == small_run.train.feature_names


def test_predictor_round_trip(small_run):
    p = small_run.predictor
    probs = p(small_run.test.X[:5])
    assert probs.shape == (5,)
    assert np.all((probs >= 0) & (probs <= 1))
    one = p(small_run.test.X[0])
    assert one.shape == (1,)
    assert one[0] == probs[0]


def test_explanations_are_present(small_run):
    assert small_run.shap.values.shape == (8, 8)
    assert len(small_run.ale_curves) == 2
    assert small_run.ablation_report.n_resamples == 20
    assert small_run.posterior.samples.size > 0
    assert 0.0 <= small_run.posterior.mean <= 1.0
    fpr, tpr, _ = small_run.roc
    assert fpr[0] == 0.0 and fpr[-1] == 1.0
    assert tpr[0] == 0.0 and tpr[-1] == 1.0


def test_ttest_tables_cover_features(small_run):
    split_feats = [r["feature"] for r in small_run.ttest_split]
    assert split_feats == list(small_run.train.feature_names)
    outcome_feats = [r["feature"] for r in small_run.ttest_outcome]
    assert outcome_feats == [s.name for s in small_run.schema]


def test_run_config_round_trip_and_validation():
    cfg = _small_config()
    payload = run_config_to_jsonable(cfg)
    assert run_config_from_jsonable(payload) == cfg
    with pytest.raises(ConfigError, match="unknown config keys"):
        run_config_from_jsonable({**payload, "bogus": 1})
    with pytest.raises(ConfigError, match="seed"):
        run_config_from_jsonable({"synth_n": 100})
    with pytest.raises(ConfigError):
        RunConfig(seed=0, train_fraction=1.5)
    with pytest.raises(ConfigError):
        RunConfig(seed=0, synth_n=0)
    with pytest.raises(ConfigError):
        RunConfig(seed=0, cv_folds=0)
    with pytest.raises(ConfigError):
        RunConfig(seed=-1)


def test_load_run_config_errors(tmp_path):
    missing = tmp_path / "nope.json"
    with pytest.raises(ConfigError, match="cannot read config"):
        load_run_config(missing)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_run_config(bad)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 1, "input_path": "/no/such.csv"}))
    with pytest.raises(ConfigError, match="input_path"):
        load_run_config(cfg)


def test_dataset_stage_tags_errors(tmp_path):
    csv = tmp_path / "cohort.csv"
    csv.write_text("age,label\nnot_a_number,0\n")
    schema_path = tmp_path / "schema.json"
    save_schema((FeatureSpec(name="age", kind="continuous"),), schema_path)
    cfg = _small_config(input_path=str(csv), schema_path=str(schema_path))
    with pytest.raises(DataError, match=r"\[stage:dataset\]"):
        run(cfg)


def test_ordered_row_downgrades_without_discrete_features(tmp_path):
    # a cohort of purely continuous and binary features leaves the ordered
    # encoder nothing to target-encode; the row must say so and still run
    schema = tuple(s for s in small_schema() if s.kind != "ordinal_score")
    table = make_table(260, seed=2, missing=0.0, schema=schema,
                       informative=True)
    csv, sp = tmp_path / "c.csv", tmp_path / "s.json"
    save_cohort(table, csv)
    save_schema(schema, sp)
    cfg = _small_config(input_path=str(csv), schema_path=str(sp), top_k=3,
                        shap_background=16, shap_rows=4, ale_top=1)
    result = run(cfg)
    ordered = next(r for r in result.benchmark
                   if r.label == "boosted_trees_ordered")
    assert any("ordered encoding disabled" in n for n in ordered.notes)
    assert not ordered.spec.params.get("ordered_mode", False)


def test_full_grid_preset_is_larger():
    compact = benchmark_grids("compact")
    full = benchmark_grids("full")
    assert [r[0] for r in compact] == [r[0] for r in full] == list(_ROWS)
    for (_, small_grid), (_, big_grid) in zip(compact, full):
        assert len(big_grid) >= len(small_grid)
    with pytest.raises(ConfigError):
        RunConfig(seed=0, grid_preset="huge")
