"""End-to-end orchestration: data, preprocessing, selection, model
benchmark, evaluation, and the explanation stack, driven by one RunConfig.

All randomness descends from the single master seed through tagged
substreams, so identical configs give byte-identical artifacts. Stages run
in a fixed order and any failure is re-raised with a stage tag.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from ._rng import derive_int, derive_rng
from .cohort import (CohortTable, load_cohort, stratified_split, summarize)
from .errors import ConfigError, DataError, IcuRiskError
from .explain import (AblationReport, AleCurve, PosteriorConfig, PosteriorRisk,
                      ShapMatrix, ablation, ale, posterior_risk_inputs,
                      shap_tree)
from .explain.dream import DreamConfig
from .metrics import (MetricReport, bootstrap_auroc_ci, compare_cohorts,
                      confusion_metrics, roc_curve, tune_threshold)
from .models import GbdtModel, predict_proba
from .models.cv import ModelSpec, cross_validate, train_model
from .preprocess import (FittedPipeline, PipelineConfig, apply, class_weights,
                         fit_pipeline)
from .schema import load_schema
from .select import CoverageFilterConfig, coverage_filter, rank_features
from .synth import synth_default_cohort


@dataclass(frozen=True)
class Predictor:
    """Raw feature rows in, event probabilities out.

    Bundles the fitted preprocessing with a trained model so downstream
    consumers (ALE, posterior sampling) can work in raw measurement space.
    """

    schema: tuple
    pipeline: FittedPipeline
    model: object

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        table = CohortTable(self.schema, X, np.zeros(X.shape[0], dtype=int))
        return predict_proba(self.model, apply(self.pipeline, table))

    def transform(self, table: CohortTable) -> CohortTable:
        return apply(self.pipeline, table)


@dataclass(frozen=True)
class RunConfig:
    """Everything one pipeline run depends on. seed is mandatory."""

    seed: int
    out_dir: str = "run_artifacts"
    input_path: str | None = None      # None: generate a synthetic cohort
    schema_path: str | None = None     # None: bundled default schema
    synth_n: int = 1301
    synth_event_rate: float = 0.196
    synth_missing: bool = True
    train_fraction: float = 0.7
    k_neighbors: int = 5
    alpha: float = 10.0
    max_missing_fraction: float = 0.20
    min_documented_patients: int = 100
    top_k: int = 17
    mi_bins: int = 10
    grid_preset: str = "compact"       # "compact" or "full"
    cv_folds: int = 5
    n_bootstrap: int = 2000
    threshold_policy: str = "youden"
    ale_bins: int = 20
    ale_top: int = 3
    shap_background: int = 256
    shap_rows: int = 64
    ablation_resamples: int = 100
    posterior_chains: int = 30
    posterior_generations: int = 3000
    posterior_burn_in: float = 0.5
    jobs: int = 1

    def __post_init__(self):
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must be in (0, 1)")
        if self.grid_preset not in ("compact", "full"):
            raise ConfigError("grid_preset must be 'compact' or 'full'")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        for name in ("top_k", "mi_bins", "cv_folds", "n_bootstrap", "ale_bins",
                     "ale_top", "shap_background", "shap_rows",
                     "ablation_resamples", "posterior_chains",
                     "posterior_generations", "synth_n", "k_neighbors"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")


_CONFIG_FIELDS = {f.name for f in fields(RunConfig)}


def run_config_to_jsonable(config: RunConfig) -> dict:
    return asdict(config)


def run_config_from_jsonable(payload: dict) -> RunConfig:
    if not isinstance(payload, dict):
        raise ConfigError("run config must be a JSON object")
    unknown = set(payload) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "seed" not in payload:
        raise ConfigError("config is missing the mandatory 'seed' key")
    return RunConfig(**payload)


def load_run_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    config = run_config_from_jsonable(payload)
    for attr in ("input_path", "schema_path"):
        p = getattr(config, attr)
        if p is not None and not os.path.exists(p):
            raise ConfigError(f"{attr} does not exist: {p}")
    return config


def _gbdt_specs(label, ordered, subsample, depths, n_trees, rates, l2s):
    specs = []
    for depth in depths:
        for nt in n_trees:
            for lr in rates:
                for l2 in l2s:
                    specs.append(ModelSpec("gbdt", {
                        "depth": depth, "n_trees": nt, "learning_rate": lr,
                        "l2_leaf": l2, "subsample": subsample,
                        "ordered_mode": ordered,
                    }, label=label))
    return tuple(specs)


def benchmark_grids(preset: str) -> tuple:
    """The six benchmark rows: three boosted-tree variants plus logistic
    regression, Gaussian naive Bayes, and the MLP. Each row carries its own
    hyperparameter sub-grid for cross-validated search.

    The compact preset keeps the full battery under a desk-scale runtime;
    the full preset widens every sub-grid.
    """
    if preset == "full":
        gb = dict(depths=(2, 3, 4), n_trees=(100, 300), rates=(0.05, 0.1),
                  l2s=(1.0, 5.0))
        logreg = tuple(ModelSpec("logreg", {"penalty": p, "C": c},
                                 label="logistic_regression")
                       for p in ("l1", "l2") for c in (0.01, 0.1, 1.0, 10.0))
        mlp = tuple(ModelSpec("mlp", {"hidden": h, "learning_rate": lr},
                              label="mlp")
                    for h in (8, 16) for lr in (1e-3, 1e-2))
    else:
        gb = dict(depths=(2, 3), n_trees=(100,), rates=(0.1,), l2s=(1.0,))
        logreg = (ModelSpec("logreg", {"penalty": "l2", "C": 1.0},
                            label="logistic_regression"),
                  ModelSpec("logreg", {"penalty": "l2", "C": 0.1},
                            label="logistic_regression"),
                  ModelSpec("logreg", {"penalty": "l1", "C": 1.0},
                            label="logistic_regression"))
        mlp = (ModelSpec("mlp", {"hidden": 16, "epochs": 120},
                         label="mlp"),)
    rows = (
        ("boosted_trees_ordered",
         _gbdt_specs("boosted_trees_ordered", True, 1.0, **gb)),
        ("boosted_trees",
         _gbdt_specs("boosted_trees", False, 1.0, **gb)),
        ("boosted_trees_subsampled",
         _gbdt_specs("boosted_trees_subsampled", False, 0.8, **gb)),
        ("logistic_regression", logreg),
        ("gaussian_nb", (ModelSpec("gnb", {}, label="gaussian_nb"),)),
        ("mlp", mlp),
    )
    return rows


@dataclass(frozen=True)
class BenchmarkRow:
    label: str
    spec: ModelSpec
    grid_size: int
    cv_mean_auroc: float
    cv_sd_auroc: float
    threshold: float
    metrics_train: MetricReport
    metrics_test: MetricReport
    notes: tuple = field(default=())


@dataclass
class RunResult:
    """In-memory bundle of everything the report stage serializes."""

    config: RunConfig
    schema: tuple                   # schema of the loaded cohort
    cohort: CohortTable             # full raw cohort
    train: CohortTable              # raw, selected features
    test: CohortTable
    filter_report: list
    ranking: object
    benchmark: list                 # BenchmarkRow, Table-5 row order
    winner: str                     # label of the best row by CV AUROC
    shap_model_label: str
    roc: tuple                      # (fpr, tpr, thresholds) on test, winner
    ttest_split: list               # train vs test rows
    ttest_outcome: list             # survivor vs non-survivor rows
    ablation_report: AblationReport
    shap: ShapMatrix
    shap_row_ids: np.ndarray        # test row positions explained
    ale_curves: list                # AleCurve
    posterior: PosteriorRisk
    predictor: Predictor
    stage_seconds: dict


def _load_stage(config: RunConfig):
    if config.schema_path is not None:
        schema = load_schema(config.schema_path)
    else:
        from .schema import default_schema
        schema = default_schema()
    if config.input_path is not None:
        cohort = load_cohort(config.input_path, schema)
    else:
        cohort = synth_default_cohort(n=config.synth_n,
                                      event_rate=config.synth_event_rate,
                                      seed=derive_int(config.seed, "synth"),
                                      with_missing=config.synth_missing)
        schema = cohort.schema
    split = stratified_split(cohort, config.train_fraction,
                             derive_int(config.seed, "split"))
    return schema, cohort, cohort.subset(split.train_rows), cohort.subset(split.test_rows)


def _select_stage(config: RunConfig, train: CohortTable, test: CohortTable):
    cfg = CoverageFilterConfig(
        max_missing_fraction=config.max_missing_fraction,
        min_documented_patients=config.min_documented_patients)
    kept, filter_report = coverage_filter(train, cfg)
    dropped = [s.name for s in train.schema if s.name not in kept]
    if dropped:
        train = train.drop_features(dropped)
        test = test.drop_features(dropped)
    ranking = rank_features(train, top_k=config.top_k, n_bins=config.mi_bins)
    excluded = [n for n in train.feature_names if n not in ranking.selected]
    if excluded:
        train = train.drop_features(excluded)
        test = test.drop_features(excluded)
    return train, test, filter_report, ranking


def _model_stage(config: RunConfig, train: CohortTable, test: CohortTable):
    pipe_cfg = PipelineConfig(k_neighbors=config.k_neighbors, alpha=config.alpha)
    rows = []
    fitted = {}
    has_discrete = any(s.kind in ("ordinal_score", "categorical")
                       for s in train.schema)
    for row_i, (label, grid) in enumerate(benchmark_grids(config.grid_preset)):
        notes = []
        if not has_discrete and any(s.needs_raw_categories for s in grid):
            grid = tuple(ModelSpec(s.family,
                                   {**s.params, "ordered_mode": False},
                                   label=s.label) for s in grid)
            notes.append("ordered encoding disabled: no multi-level discrete features")
        search = cross_validate(train, grid, k=config.cv_folds,
                                seed=derive_int(config.seed, "cv", row_i),
                                pipeline_config=pipe_cfg)
        spec = search.best_spec
        threshold = tune_threshold(search.oof_scores, train.y,
                                   policy=config.threshold_policy)
        fit_cfg = replace(pipe_cfg, encode=()) if spec.needs_raw_categories else pipe_cfg
        pipe = fit_pipeline(train, fit_cfg)
        model = train_model(spec, apply(pipe, train), class_weights(train.y),
                            seed=derive_int(config.seed, "cv", row_i, 9999))
        train_scores = predict_proba(model, apply(pipe, train))
        test_scores = predict_proba(model, apply(pipe, test))
        m_train = confusion_metrics(train_scores, train.y, threshold)
        ci = bootstrap_auroc_ci(test_scores, test.y, B=config.n_bootstrap,
                                seed=derive_int(config.seed, "bootstrap", row_i))
        m_test = confusion_metrics(test_scores, test.y, threshold).with_ci(*ci)
        rows.append(BenchmarkRow(
            label=label, spec=spec, grid_size=len(grid),
            cv_mean_auroc=float(search.mean_auroc[search.best_index]),
            cv_sd_auroc=float(search.sd_auroc[search.best_index]),
            threshold=threshold, metrics_train=m_train, metrics_test=m_test,
            notes=tuple(notes)))
        fitted[label] = (pipe, model, test_scores)
    winner = max(rows, key=lambda r: r.cv_mean_auroc).label
    tree_rows = [r.label for r in rows if r.spec.family == "gbdt"]
    shap_label = winner if winner in tree_rows else (tree_rows[0] if tree_rows else winner)
    return rows, fitted, winner, shap_label


def _explain_stage(config: RunConfig, result_rows, fitted, winner, shap_label,
                   train, test, ranking):
    win_row = next(r for r in result_rows if r.label == winner)
    pipe, model, _ = fitted[winner]
    predictor = Predictor(schema=train.schema, pipeline=pipe, model=model)

    abl = ablation(win_row.spec, train, test,
                   n_resamples=config.ablation_resamples,
                   seed=derive_int(config.seed, "ablation"),
                   pipeline_config=PipelineConfig(k_neighbors=config.k_neighbors,
                                                  alpha=config.alpha))

    shap_pipe, shap_model, _ = fitted[shap_label]
    if not isinstance(shap_model, GbdtModel):
        raise DataError("no boosted-tree row available for attribution")
    rng = derive_rng(config.seed, "shap")
    bg_rows = rng.permutation(train.n)[: config.shap_background]
    fg_rows = np.sort(rng.permutation(test.n)[: config.shap_rows])
    shap = shap_tree(shap_model,
                     apply(shap_pipe, test.subset(fg_rows)),
                     apply(shap_pipe, train.subset(bg_rows)))

    # ALE on raw measurement scale through the full predictor; the winner's
    # imputer fills other columns, the curve feature itself must be observed
    from .preprocess import impute
    train_imputed = impute(pipe.imputer, train)
    ranked = [n for n in ranking.selected if n in train.feature_names]
    curves = [ale(predictor, train_imputed, name, n_bins=config.ale_bins)
              for name in ranked[: config.ale_top]]

    dream_cfg = DreamConfig(n_chains=config.posterior_chains,
                            n_generations=config.posterior_generations,
                            burn_in=config.posterior_burn_in,
                            seed=derive_int(config.seed, "posterior"))
    post_cfg = PosteriorConfig(dream=dream_cfg)
    summary = summarize(train, by_label=True)
    posterior = posterior_risk_inputs(predictor, summary, post_cfg,
                                      schema=train.schema)
    return abl, shap, fg_rows, curves, posterior, predictor


def run(config: RunConfig) -> RunResult:
    """Execute all stages and return the in-memory result bundle.

    File emission lives in report.write_artifacts; the CLI composes the two.
    """
    timings = {}

    def staged(name, fn, *args):
        t0 = time.perf_counter()
        try:
            out = fn(*args)
        except IcuRiskError as exc:
            raise type(exc)(f"[stage:{name}] {exc}") from exc
        timings[name] = time.perf_counter() - t0
        return out

    schema, cohort, train_raw, test_raw = staged("dataset", _load_stage, config)
    train, test, filter_report, ranking = staged(
        "select", _select_stage, config, train_raw, test_raw)
    rows, fitted, winner, shap_label = staged(
        "models", _model_stage, config, train, test)

    def _eval():
        win_scores = fitted[winner][2]
        roc = roc_curve(win_scores, test.y)
        return roc, compare_cohorts(train, test), _outcome_ttest(cohort)

    roc, ttest_split, ttest_outcome = staged("eval", _eval)
    abl, shap, fg_rows, curves, posterior, predictor = staged(
        "explain", _explain_stage, config, rows, fitted, winner, shap_label,
        train, test, ranking)

    return RunResult(
        config=config, schema=schema, cohort=cohort, train=train, test=test,
        filter_report=filter_report, ranking=ranking, benchmark=rows,
        winner=winner, shap_model_label=shap_label, roc=roc,
        ttest_split=ttest_split, ttest_outcome=ttest_outcome,
        ablation_report=abl, shap=shap, shap_row_ids=fg_rows,
        ale_curves=curves, posterior=posterior, predictor=predictor,
        stage_seconds=timings)


def _outcome_ttest(cohort: CohortTable) -> list:
    survivors = cohort.subset(np.flatnonzero(cohort.y == 0))
    nonsurvivors = cohort.subset(np.flatnonzero(cohort.y == 1))
    return compare_cohorts(survivors, nonsurvivors)
