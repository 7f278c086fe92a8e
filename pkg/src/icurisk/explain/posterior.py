"""Posterior risk distributions via MCMC, in two constructions.

posterior_risk_inputs samples plausible non-survivor feature vectors from
independent truncated Gaussians calibrated to class-conditional moments and
pushes them through a trained predictor; binary flags are integrated out by
enumerating their combinations weighted by class prevalence. Ordinal features
are sampled on their continuous relaxation and snapped to the measurement
grid before prediction.

posterior_risk_params samples logistic-regression coefficients from
likelihood x Gaussian prior and returns the posterior predictive
distribution of sigmoid(theta . row) for one row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from ..cohort import CohortSummary
from ..errors import ConfigError, DataError
from ..schema import FeatureSpec
from ..special import log1pexp, sigmoid
from ..synth import recalibrated_loc
from .dream import DreamConfig, DreamResult, dream_sample

# Values reported for the same non-survivor construction on the original
# restricted-access cohort. Comparison only; never a pass/fail target.
REFERENCE_INPUTS_POSTERIOR = {"mean": 0.486, "ci_low": 0.248, "ci_high": 0.690}


@dataclass(frozen=True)
class PosteriorConfig:
    dream: DreamConfig = field(default=DreamConfig())
    prior_sd: float = 10.0          # coefficient prior scale (params mode)
    max_eval_samples: int = 4000    # cap on retained draws pushed through the model
    ci_levels: tuple = (2.5, 97.5)

    def __post_init__(self):
        if self.prior_sd < 0:
            raise ConfigError("prior_sd must be >= 0")
        if self.max_eval_samples < 2:
            raise ConfigError("max_eval_samples must be >= 2")


@dataclass(frozen=True)
class PosteriorRisk:
    samples: np.ndarray      # risk draws in [0, 1]
    mean: float
    ci_low: float
    ci_high: float
    acceptance_rate: float
    max_split_rhat: float
    reliable: bool           # all split-rhat <= 1.2
    mode: str                # "inputs" or "params"
    reference: dict | None = None


def _thin_indices(n: int, cap: int) -> np.ndarray:
    if n <= cap:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, cap).round().astype(int))


def _summarize(risks: np.ndarray, result: DreamResult, mode: str,
               config: PosteriorConfig, reference=None) -> PosteriorRisk:
    lo, hi = np.percentile(risks, config.ci_levels)
    max_rhat = float(np.max(result.split_rhat))
    return PosteriorRisk(
        samples=risks,
        mean=float(risks.mean()),
        ci_low=float(lo),
        ci_high=float(hi),
        acceptance_rate=result.acceptance_rate,
        max_split_rhat=max_rhat,
        reliable=bool(max_rhat <= 1.2),
        mode=mode,
        reference=reference,
    )


def _predict_fn(model):
    if callable(model):
        return lambda X: np.asarray(model(X), dtype=float)
    from ..models import predict_proba
    return lambda X: predict_proba(model, X)


def _snap_ordinal(values: np.ndarray, spec: FeatureSpec) -> np.ndarray:
    step = 1.0 if spec.step is None else spec.step
    snapped = spec.lower + np.rint((values - spec.lower) / step) * step
    return np.clip(snapped, spec.lower, spec.upper)


def posterior_risk_inputs(model, nonsurvivor_summary: CohortSummary,
                          config: PosteriorConfig = PosteriorConfig(),
                          schema=None) -> PosteriorRisk:
    """Risk distribution over feature vectors drawn from non-survivor priors.

    model: callable mapping raw-space feature rows (m, d) to probabilities, or
    a fitted model object operating directly on raw features. The summary must
    carry a "class1" group (or a single "all" group) with finite moments for
    every feature.
    """
    f = _predict_fn(model)
    groups = nonsurvivor_summary.groups
    stats = groups.get("class1") or groups.get("all")
    if stats is None:
        raise ConfigError("summary must provide class1 (or all) group statistics")
    if schema is None:
        from ..schema import default_schema
        full = {s.name: s for s in default_schema()}
        try:
            schema = tuple(full[n] for n in nonsurvivor_summary.features)
        except KeyError as exc:
            raise ConfigError(
                f"no bundled schema entry for feature {exc.args[0]!r}; pass schema="
            ) from exc
    names = [s.name for s in schema]
    if list(nonsurvivor_summary.features) != names:
        raise ConfigError("summary features and schema are ordered differently")

    means = np.asarray(stats.mean, dtype=float)
    sds = np.asarray(stats.sd, dtype=float)
    if not (np.all(np.isfinite(means)) and np.all(np.isfinite(sds))):
        bad = [n for n, m, s in zip(names, means, sds)
               if not (np.isfinite(m) and np.isfinite(s))]
        raise ConfigError(f"missing class moments for features: {bad}")

    d = len(schema)
    binary = [j for j in range(d) if schema[j].kind == "binary"]
    sampled = [j for j in range(d) if schema[j].kind != "binary" and sds[j] > 0]
    pinned = [j for j in range(d) if schema[j].kind != "binary" and sds[j] <= 0]

    lower = np.array([schema[j].lower if schema[j].lower is not None else -np.inf
                      for j in sampled])
    upper = np.array([schema[j].upper if schema[j].upper is not None else np.inf
                      for j in sampled])
    sd = sds[sampled]
    loc = np.array([recalibrated_loc(means[j], sds[j],
                                     schema[j].lower, schema[j].upper)
                    for j in sampled])
    alpha = np.where(np.isfinite(lower), (lower - loc) / sd, -np.inf)
    beta = np.where(np.isfinite(upper), (upper - loc) / sd, np.inf)
    log_z = np.log(ndtr(beta) - ndtr(alpha))
    const = -np.log(sd) - 0.5 * np.log(2.0 * np.pi) - log_z

    def log_density(X):
        X = np.atleast_2d(X)
        inside = np.all((X >= lower) & (X <= upper), axis=1)
        z = (X - loc) / sd
        lp = np.sum(-0.5 * z * z + const, axis=1)
        return np.where(inside, lp, -np.inf)

    if not sampled:
        # degenerate prior: single deterministic feature vector
        risks = _enumerate_flags(f, schema, means, binary, pinned, sampled,
                                 np.empty((1, 0)))
        lo, hi = np.percentile(risks, config.ci_levels)
        return PosteriorRisk(risks, float(risks.mean()), float(lo), float(hi),
                             acceptance_rate=1.0, max_split_rhat=1.0,
                             reliable=True, mode="inputs",
                             reference=dict(REFERENCE_INPUTS_POSTERIOR))

    rng = np.random.default_rng(config.dream.seed)
    init = loc + 0.1 * sd * rng.standard_normal((config.dream.n_chains, len(sampled)))
    init = np.clip(init, lower, upper)
    result = dream_sample(log_density, len(sampled), config.dream, init=init)
    pooled = result.samples
    keep = _thin_indices(pooled.shape[0], config.max_eval_samples)
    draws = pooled[keep]

    risks = _enumerate_flags(f, schema, means, binary, pinned, sampled, draws)
    return _summarize(risks, result, "inputs", config,
                      reference=dict(REFERENCE_INPUTS_POSTERIOR))


def _enumerate_flags(f, schema, means, binary, pinned, sampled, draws):
    """Map sampled feature draws through the predictor, averaging binary
    flag combinations by their class prevalence weights."""
    d = len(schema)
    S = draws.shape[0]
    X = np.empty((S, d))
    for j in pinned:
        X[:, j] = means[j]
    for pos, j in enumerate(sampled):
        col = draws[:, pos]
        if schema[j].kind in ("ordinal_score", "categorical"):
            col = _snap_ordinal(col, schema[j])
        X[:, j] = col
    if not binary:
        return f(X)
    prev = np.clip(means[binary], 0.0, 1.0)
    risks = np.zeros(S)
    for combo in range(1 << len(binary)):
        w = 1.0
        for pos, j in enumerate(binary):
            on = (combo >> pos) & 1
            X[:, j] = float(on)
            w *= prev[pos] if on else 1.0 - prev[pos]
        if w == 0.0:
            continue
        risks += w * f(X)
    return risks


def posterior_risk_params(train, row,
                          config: PosteriorConfig = PosteriorConfig(),
                          weights=None) -> PosteriorRisk:
    """Posterior predictive risk for one row under Bayesian logistic
    regression on the (transformed) training table.

    The sampler runs over theta = (coefficients..., bias) with independent
    N(0, prior_sd^2) priors; prior_sd = 0 pins theta at zero.
    """
    X = np.asarray(train.X, dtype=float)
    y = np.asarray(train.y, dtype=float)
    if np.isnan(X).any():
        raise DataError("training matrix has missing values; impute first")
    n, d = X.shape
    x_row = np.asarray(row, dtype=float).ravel()
    if x_row.size != d:
        raise ConfigError(f"row has {x_row.size} features, expected {d}")
    Xd = np.column_stack([X, np.ones(n)])
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)

    if config.prior_sd == 0.0:
        risks = np.full(config.max_eval_samples, 0.5)
        lo, hi = np.percentile(risks, config.ci_levels)
        return PosteriorRisk(risks, 0.5, float(lo), float(hi),
                             acceptance_rate=1.0, max_split_rhat=1.0,
                             reliable=True, mode="params")

    inv_two_var = 0.5 / (config.prior_sd ** 2)

    def log_density(theta):
        theta = np.atleast_2d(theta)
        Z = theta @ Xd.T                                # (m, n)
        loglik = (w * (y * Z - log1pexp(Z))).sum(axis=1)
        return loglik - inv_two_var * np.sum(theta * theta, axis=1)

    rng = np.random.default_rng(config.dream.seed)
    init = 0.1 * rng.standard_normal((config.dream.n_chains, d + 1))
    result = dream_sample(log_density, d + 1, config.dream, init=init)
    pooled = result.samples
    keep = _thin_indices(pooled.shape[0], config.max_eval_samples)
    theta = pooled[keep]
    risks = sigmoid(theta[:, :d] @ x_row + theta[:, d])
    return _summarize(risks, result, "params", config)
