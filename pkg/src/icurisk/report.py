"""Artifact emission: report.json as the single source of numbers, with CSV
and SVG files re-derived from it, plus a checksummed run manifest.

report.json is serialized canonically (sorted keys, NaN mapped to null), so
identical runs produce byte-identical artifacts. The manifest records the
config hash and the checksum of every emitted file; wall-clock timings live
only in the manifest so the report itself stays deterministic.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import re
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__ as _pkg_version
from .errors import DataError
from .pipeline import RunConfig, RunResult, run_config_to_jsonable
from .svgplot import ale_svg, dot_rows_svg, histogram_svg, roc_svg

_REPORT_NAME = "report.json"
_MANIFEST_NAME = "manifest.json"


def _sanitize(obj):
    """JSON-safe copy: numpy scalars/arrays to python, NaN/inf to None."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _metric_dict(m) -> dict:
    return _sanitize(asdict(m))


# out_dir and jobs describe the machine, not the analysis: two runs that
# differ only in these fields must produce byte-identical reports
_ENV_FIELDS = ("out_dir", "jobs")


def _config_echo(config: RunConfig) -> dict:
    payload = run_config_to_jsonable(config)
    return {k: v for k, v in payload.items() if k not in _ENV_FIELDS}


def build_report(result: RunResult) -> dict:
    """Collect every reported number into one JSON-ready dictionary."""
    cfg = result.config
    ranking = result.ranking
    fpr, tpr, thr = result.roc
    abl = result.ablation_report
    dists = {name: abl.dropped_dist[name] for name in abl.features}
    shap_rows_raw = result.test.X[result.shap_row_ids]
    post = result.posterior
    report = {
        "format_version": 1,
        "config": _sanitize(_config_echo(cfg)),
        "cohort": {
            "n": result.cohort.n,
            "event_rate": float(result.cohort.y.mean()),
            "n_train": result.train.n,
            "n_test": result.test.n,
            "event_rate_train": float(result.train.y.mean()),
            "event_rate_test": float(result.test.y.mean()),
            "features": list(result.train.feature_names),
        },
        "selection": {
            "filter": _sanitize(result.filter_report),
            "mi": {
                "features": list(ranking.features),
                "scores": _sanitize([ranking.scores[n] for n in ranking.features]),
                "selected": list(ranking.selected),
                "excluded_near_zero": list(ranking.excluded_near_zero),
                "n_bins": ranking.n_bins,
                "epsilon": ranking.epsilon,
            },
        },
        "cohort_comparison": {
            "train_vs_test": _sanitize(result.ttest_split),
            "survivor_vs_nonsurvivor": _sanitize(result.ttest_outcome),
        },
        "benchmark": [
            {
                "label": row.label,
                "family": row.spec.family,
                "params": _sanitize(row.spec.params),
                "grid_size": row.grid_size,
                "cv_mean_auroc": row.cv_mean_auroc,
                "cv_sd_auroc": _sanitize(row.cv_sd_auroc),
                "threshold": row.threshold,
                "train": _metric_dict(row.metrics_train),
                "test": _metric_dict(row.metrics_test),
                "notes": list(row.notes),
            }
            for row in result.benchmark
        ],
        "winner": result.winner,
        "shap_model": result.shap_model_label,
        "roc_test": {
            "fpr": _sanitize(fpr),
            "tpr": _sanitize(tpr),
            "thresholds": _sanitize(thr),
        },
        "ablation": {
            "model": result.winner,
            "n_resamples": abl.n_resamples,
            "baseline_auroc": abl.baseline_auroc,
            "baseline_dist": _sanitize(abl.baseline_dist),
            "features": list(abl.features),
            "dropped_auroc": _sanitize(abl.dropped_auroc),
            "distributions": _sanitize(dists),
            "mean_drop": {n: abl.mean_drop(n) for n in abl.features},
        },
        "shap": {
            "model": result.shap_model_label,
            "base_value": result.shap.base_value,
            "feature_names": list(result.shap.feature_names),
            "row_ids": _sanitize(result.shap_row_ids),
            "values": _sanitize(result.shap.values),
            "row_values": _sanitize(shap_rows_raw),
        },
        "ale": [
            {
                "feature": c.feature,
                "edges": _sanitize(c.edges),
                "effects": _sanitize(c.effects),
                "centered": _sanitize(c.centered),
                "counts": _sanitize(c.counts),
                "edge_counts": _sanitize(c.edge_counts),
            }
            for c in result.ale_curves
        ],
        "posterior": {
            "mode": post.mode,
            "mean": post.mean,
            "ci_low": post.ci_low,
            "ci_high": post.ci_high,
            "acceptance_rate": post.acceptance_rate,
            "max_split_rhat": post.max_split_rhat,
            "reliable": post.reliable,
            "samples": _sanitize(post.samples),
            "reference": _sanitize(post.reference),
        },
    }
    return report


def report_json_bytes(report: dict) -> bytes:
    return json.dumps(report, indent=1, sort_keys=True,
                      allow_nan=False).encode("utf-8") + b"\n"


# ---------------------------------------------------------------------------
# report schema (subset of JSON Schema: type/properties/required/items/enum)

def load_report_schema() -> dict:
    from importlib import resources

    with resources.files("icurisk.data").joinpath("report_schema.json").open(
            encoding="utf-8") as fh:
        return json.load(fh)


_TYPES = {
    "object": dict,
    "array": list,
    "string": str,
    "boolean": bool,
    "null": type(None),
}


def _type_ok(value, expected: str) -> bool:
    if expected == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if expected == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, _TYPES[expected])


def validate_report(report, schema, path="$") -> None:
    """Check a document against the shipped schema subset; raises DataError
    with the offending path."""
    expected = schema.get("type")
    if expected is not None:
        allowed = expected if isinstance(expected, list) else [expected]
        if not any(_type_ok(report, t) for t in allowed):
            raise DataError(f"{path}: expected {allowed}, got {type(report).__name__}")
    if "enum" in schema and report not in schema["enum"]:
        raise DataError(f"{path}: {report!r} not in {schema['enum']}")
    if isinstance(report, dict):
        for key in schema.get("required", []):
            if key not in report:
                raise DataError(f"{path}: missing required key {key!r}")
        for key, sub in schema.get("properties", {}).items():
            if key in report:
                validate_report(report[key], sub, f"{path}.{key}")
    if isinstance(report, list) and "items" in schema:
        for i, item in enumerate(report):
            validate_report(item, schema["items"], f"{path}[{i}]")


# ---------------------------------------------------------------------------
# CSV / SVG projections (read only from the report dict)

def _slug(name: str) -> str:
    s = re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_").lower()
    return s or "feature"


def _cell(v):
    return "" if v is None else v


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


_METRIC_COLS = ("auroc", "accuracy", "f1", "sensitivity", "specificity",
                "ppv", "npv", "threshold", "tp", "fp", "tn", "fn")


PROJECTION_GROUPS = ("ttest", "metrics", "selection", "roc", "ablation",
                     "shap", "ale", "posterior")
EXPLAIN_GROUPS = ("ablation", "shap", "ale", "posterior")


def emit_projections(report: dict, out_dir: str, groups=None) -> list:
    """Write CSV/SVG artifacts from the report dict; returns filenames.

    groups limits which artifact families are emitted (default: all of
    PROJECTION_GROUPS).
    """
    wanted = PROJECTION_GROUPS if groups is None else tuple(groups)
    unknown = set(wanted) - set(PROJECTION_GROUPS)
    if unknown:
        raise DataError(f"unknown projection groups: {sorted(unknown)}")
    files = []

    def emit(name, text):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8",
                  newline="") as fh:
            fh.write(text)
        files.append(name)

    if "ttest" in wanted:
        _emit_ttest(report, out_dir, files)
    if "metrics" in wanted:
        _emit_metrics(report, out_dir, files)
    if "selection" in wanted:
        _emit_selection(report, out_dir, files)
    if "roc" in wanted:
        _emit_roc(report, out_dir, files, emit)
    if "ablation" in wanted:
        _emit_ablation(report, out_dir, files, emit)
    if "shap" in wanted:
        _emit_shap(report, out_dir, files, emit)
    if "ale" in wanted:
        _emit_ale(report, out_dir, files, emit)
    if "posterior" in wanted:
        _emit_posterior(report, out_dir, files, emit)
    return files


_TTEST_ORDER = ("train_vs_test", "survivor_vs_nonsurvivor")


def _emit_ttest(report, out_dir, files):
    rows = []
    # fixed order: dict order differs between a fresh report and one parsed
    # back from the key-sorted JSON on disk
    for comparison in _TTEST_ORDER:
        for r in report["cohort_comparison"][comparison]:
            rows.append([comparison, r["feature"], r["unit"], r["n_a"], r["n_b"],
                         r["mean_a"], r["sd_a"], r["mean_b"], r["sd_b"],
                         r["t"], r["df"], r["p"], r["note"]])
    path = os.path.join(out_dir, "cohort_ttest.csv")
    _write_csv(path, ["comparison", "feature", "unit", "n_a", "n_b", "mean_a",
                      "sd_a", "mean_b", "sd_b", "t", "df", "p", "note"], rows)
    files.append("cohort_ttest.csv")


def _emit_metrics(report, out_dir, files):
    # one row per model, benchmark (paper table) order
    for split in ("train", "test"):
        header = ["model"] + list(_METRIC_COLS)
        if split == "test":
            header += ["auroc_ci_low", "auroc_ci_high", "cv_mean_auroc", "cv_sd_auroc"]
        rows = []
        for b in report["benchmark"]:
            m = b[split]
            row = [b["label"]] + [m[c] for c in _METRIC_COLS]
            if split == "test":
                row += [m["auroc_ci_low"], m["auroc_ci_high"],
                        b["cv_mean_auroc"], b["cv_sd_auroc"]]
            rows.append(row)
        _write_csv(os.path.join(out_dir, f"metrics_{split}.csv"), header, rows)
        files.append(f"metrics_{split}.csv")


def _emit_selection(report, out_dir, files):
    mi = report["selection"]["mi"]
    filt = {r["feature"]: r for r in report["selection"]["filter"]}
    sel_rows = []
    for name, score in zip(mi["features"], mi["scores"]):
        f = filt.get(name, {})
        sel_rows.append([name, score, name in mi["selected"],
                         name in mi["excluded_near_zero"],
                         f.get("missing_frac"), f.get("documented"),
                         f.get("variance"), f.get("kept"), f.get("reason")])
    _write_csv(os.path.join(out_dir, "selection.csv"),
               ["feature", "mi_score", "selected", "near_zero", "missing_frac",
                "documented", "variance", "passed_filter", "filter_reason"],
               sel_rows)
    files.append("selection.csv")


def _emit_roc(report, out_dir, files, emit):
    roc = report["roc_test"]
    _write_csv(os.path.join(out_dir, "roc_test.csv"),
               ["fpr", "tpr", "threshold"],
               list(zip(roc["fpr"], roc["tpr"], roc["thresholds"])))
    files.append("roc_test.csv")
    win = next(b for b in report["benchmark"] if b["label"] == report["winner"])
    emit("roc_test.svg", roc_svg(roc["fpr"], roc["tpr"],
                                 win["test"]["auroc"], label=report["winner"]))


def _emit_ablation(report, out_dir, files, emit):
    ab = report["ablation"]
    rows = [["<none>", i, v] for i, v in enumerate(ab["baseline_dist"])]
    for name in ab["features"]:
        rows += [[name, i, v] for i, v in enumerate(ab["distributions"][name])]
    _write_csv(os.path.join(out_dir, "ablation.csv"),
               ["dropped_feature", "resample", "auroc"], rows)
    files.append("ablation.csv")
    order = sorted(ab["features"], key=lambda n: ab["mean_drop"][n], reverse=True)
    emit("ablation.svg", dot_rows_svg(
        order, [ab["distributions"][n] for n in order],
        title=f"Test AUROC after dropping one feature ({ab['model']})",
        xlabel="bootstrap AUROC", baseline=ab["baseline_auroc"]))


def _emit_shap(report, out_dir, files, emit):
    sh = report["shap"]
    rows = []
    values = np.asarray(sh["values"], dtype=float)
    for r, row_id in enumerate(sh["row_ids"]):
        for j, feat in enumerate(sh["feature_names"]):
            rows.append([row_id, feat, values[r, j]])
    _write_csv(os.path.join(out_dir, "shap_summary.csv"),
               ["row", "feature", "phi"], rows)
    files.append("shap_summary.csv")
    mean_abs = np.abs(values).mean(axis=0)
    order = np.argsort(-mean_abs)
    row_vals = np.asarray([[0.0 if v is None else v for v in r]
                           for r in sh["row_values"]], dtype=float)
    emit("shap_summary.svg", dot_rows_svg(
        [sh["feature_names"][j] for j in order],
        [values[:, j] for j in order],
        title=f"Attribution summary ({sh['model']}, log-odds)",
        xlabel="Shapley value",
        marker_values=[row_vals[:, j] for j in order]))


def _emit_ale(report, out_dir, files, emit):
    for curve in report["ale"]:
        slug = _slug(curve["feature"])
        _write_csv(os.path.join(out_dir, f"ale_{slug}.csv"),
                   ["edge", "effect", "count"],
                   list(zip(curve["edges"], curve["centered"],
                            curve["edge_counts"])))
        files.append(f"ale_{slug}.csv")
        emit(f"ale_{slug}.svg", ale_svg(curve["edges"], curve["centered"],
                                        curve["edge_counts"], curve["feature"]))


def _emit_posterior(report, out_dir, files, emit):
    post = report["posterior"]
    _write_csv(os.path.join(out_dir, "posterior.csv"), ["sample", "risk"],
               list(enumerate(post["samples"])))
    files.append("posterior.csv")
    vlines = [(post["mean"], "#c23b22", "6 3"),
              (post["ci_low"], "#777", "3 3"), (post["ci_high"], "#777", "3 3")]
    emit("posterior.svg", histogram_svg(
        post["samples"], title="Posterior risk distribution (non-survivor priors)",
        xlabel="predicted event probability", vlines=vlines))


# ---------------------------------------------------------------------------
# manifest

@dataclass(frozen=True)
class RunManifest:
    config_hash: str
    status: str                 # "complete" or "failed"
    failed_stage: str | None
    artifacts: tuple            # (name, sha256, bytes) triples
    versions: dict
    stage_seconds: dict
    jobs: int

    def checksum_of(self, name: str) -> str:
        for art, digest, _ in self.artifacts:
            if art == name:
                return digest
        raise KeyError(name)


def _sha256(path) -> tuple:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        data = fh.read()
    h.update(data)
    return h.hexdigest(), len(data)


def config_hash(config: RunConfig) -> str:
    blob = json.dumps(_config_echo(config), sort_keys=True,
                      separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _versions() -> dict:
    import scipy

    return {
        "package": _pkg_version,
        "python": ".".join(map(str, sys.version_info[:3])),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def _manifest_payload(m: RunManifest) -> dict:
    return {
        "format_version": 1,
        "config_hash": m.config_hash,
        "status": m.status,
        "failed_stage": m.failed_stage,
        "artifacts": [{"path": p, "sha256": s, "bytes": b}
                      for p, s, b in m.artifacts],
        "versions": m.versions,
        "stage_seconds": m.stage_seconds,
        "jobs": m.jobs,
    }


def _write_manifest(m: RunManifest, out_dir: str) -> None:
    payload = json.dumps(_manifest_payload(m), indent=1, sort_keys=True) + "\n"
    with open(os.path.join(out_dir, _MANIFEST_NAME), "w", encoding="utf-8") as fh:
        fh.write(payload)


def load_manifest(out_dir: str) -> dict:
    path = os.path.join(out_dir, _MANIFEST_NAME)
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc


def write_artifacts(result: RunResult, out_dir: str = None,
                    groups=None) -> RunManifest:
    """Emit report.json, projections (all groups unless limited), and the
    manifest (written last)."""
    out = out_dir or result.config.out_dir
    os.makedirs(out, exist_ok=True)
    t0 = time.perf_counter()
    report = build_report(result)
    validate_report(report, load_report_schema())
    with open(os.path.join(out, _REPORT_NAME), "wb") as fh:
        fh.write(report_json_bytes(report))
    files = [_REPORT_NAME] + emit_projections(report, out, groups=groups)
    seconds = dict(result.stage_seconds)
    seconds["report"] = time.perf_counter() - t0
    artifacts = tuple((name, *_sha256(os.path.join(out, name))) for name in files)
    manifest = RunManifest(config_hash=config_hash(result.config),
                           status="complete", failed_stage=None,
                           artifacts=artifacts, versions=_versions(),
                           stage_seconds=seconds, jobs=result.config.jobs)
    _write_manifest(manifest, out)
    return manifest


def write_failed_manifest(out_dir: str, config: RunConfig, stage: str,
                          error: Exception) -> RunManifest:
    """Record a failed run: whatever artifacts exist are flagged partial."""
    os.makedirs(out_dir, exist_ok=True)
    present = sorted(n for n in os.listdir(out_dir)
                     if n.endswith((".csv", ".svg")) or n == _REPORT_NAME)
    artifacts = tuple((name, *_sha256(os.path.join(out_dir, name)))
                      for name in present)
    manifest = RunManifest(config_hash=config_hash(config), status="failed",
                           failed_stage=stage, artifacts=artifacts,
                           versions=_versions(),
                           stage_seconds={"error": 0.0}, jobs=config.jobs)
    _write_manifest(manifest, out_dir)
    return manifest


def emit_report(out_dir: str) -> RunManifest:
    """Re-derive every CSV/SVG projection from an existing report.json.

    Demonstrates the single-source property: projections carry no numbers of
    their own. The manifest is refreshed with new checksums.
    """
    path = os.path.join(out_dir, _REPORT_NAME)
    try:
        with open(path, encoding="utf-8") as fh:
            report = json.load(fh)
    except OSError as exc:
        raise DataError(f"no report at {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"report {path} is not valid JSON: {exc}") from exc
    validate_report(report, load_report_schema())
    t0 = time.perf_counter()
    files = [_REPORT_NAME] + emit_projections(report, out_dir)
    artifacts = tuple((name, *_sha256(os.path.join(out_dir, name))) for name in files)
    try:
        prior = load_manifest(out_dir)
        stage_seconds = dict(prior.get("stage_seconds", {}))
        jobs = prior.get("jobs", 1)
    except DataError:
        stage_seconds = {}
        jobs = 1
    stage_seconds["report"] = time.perf_counter() - t0
    manifest = RunManifest(
        config_hash=hashlib.sha256(json.dumps(report["config"], sort_keys=True,
                                              separators=(",", ":")).encode()).hexdigest(),
        status="complete", failed_stage=None, artifacts=artifacts,
        versions=_versions(), stage_seconds=stage_seconds, jobs=jobs)
    _write_manifest(manifest, out_dir)
    return manifest
