"""Minimal end-to-end run on a synthetic cohort.

Generates data, searches the model grid with cross-validation, evaluates on
the held-out split, and prints the benchmark table. Scaled down so it
finishes in a few seconds; drop the overrides for a full-size run.
"""

from icurisk import RunConfig, run

config = RunConfig(
    seed=42,
    synth_n=600,
    top_k=10,
    cv_folds=3,
    n_bootstrap=200,
    ablation_resamples=25,
    shap_background=48,
    shap_rows=12,
    ale_top=2,
    posterior_chains=16,
    posterior_generations=600,
)

result = run(config)

print(f"cohort: {result.cohort.n} patients, "
      f"{result.cohort.y.mean():.1%} events")
print(f"selected features ({result.train.d}):",
      ", ".join(result.train.feature_names))
print()
print(f"{'model':28s} {'cv auroc':>10s} {'test auroc':>11s} "
      f"{'sens':>6s} {'spec':>6s}")
for row in result.benchmark:
    m = row.metrics_test
    print(f"{row.label:28s} {row.cv_mean_auroc:10.3f} {m.auroc:11.3f} "
          f"{m.sensitivity:6.3f} {m.specificity:6.3f}")
print()
print(f"winner by cross-validation: {result.winner}")

post = result.posterior
print(f"posterior risk over the non-survivor profile: "
      f"{post.mean:.3f} [{post.ci_low:.3f}, {post.ci_high:.3f}]"
      f"{'' if post.reliable else '  (chains not converged!)'}")
