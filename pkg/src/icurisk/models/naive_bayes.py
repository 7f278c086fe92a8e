"""Gaussian naive Bayes with per-sample weights.

Class priors and per-class feature moments are weighted; variances use the
weighted population convention and are floored to keep log-likelihoods
finite on degenerate (constant) features. Note that inverse-frequency class
weights make the weighted priors exactly 0.5/0.5.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError

_PROB_CLIP = 1e-7


@dataclass(frozen=True)
class GaussianNbModel:
    priors: np.ndarray        # (2,), sums to 1
    means: np.ndarray         # (2, d)
    variances: np.ndarray     # (2, d), >= var_floor
    var_floor: float
    feature_names_: tuple


def train_gnb(train, weights=None, var_floor: float = None) -> GaussianNbModel:
    X = np.asarray(train.X, dtype=float)
    y = np.asarray(train.y)
    if np.isnan(X).any():
        raise DataError("train_gnb requires imputed (non-missing) inputs")
    if np.unique(y).size < 2:
        raise DataError("train_gnb needs both classes present")
    w = weights.per_row(y) if weights is not None else np.ones(y.shape[0])
    if var_floor is None:
        var_floor = 1e-9 * max(float(X.var(axis=0).max()), 1.0)
    priors = np.empty(2)
    means = np.empty((2, X.shape[1]))
    variances = np.empty((2, X.shape[1]))
    total_w = w.sum()
    for c in (0, 1):
        wc = w[y == c]
        Xc = X[y == c]
        priors[c] = wc.sum() / total_w
        means[c] = (wc[:, None] * Xc).sum(axis=0) / wc.sum()
        variances[c] = (wc[:, None] * (Xc - means[c]) ** 2).sum(axis=0) / wc.sum()
    variances = np.maximum(variances, var_floor)
    return GaussianNbModel(
        priors=priors,
        means=means,
        variances=variances,
        var_floor=float(var_floor),
        feature_names_=tuple(train.feature_names),
    )


def gnb_log_joint(model: GaussianNbModel, X: np.ndarray) -> np.ndarray:
    """(n, 2) log prior + log likelihood per class."""
    X = np.asarray(X, dtype=float)
    out = np.empty((X.shape[0], 2))
    for c in (0, 1):
        var = model.variances[c]
        ll = -0.5 * (np.log(2.0 * np.pi * var) + (X - model.means[c]) ** 2 / var)
        out[:, c] = np.log(model.priors[c]) + ll.sum(axis=1)
    return out


def gnb_posterior(model: GaussianNbModel, X: np.ndarray) -> np.ndarray:
    """(n, 2) class posteriors via log-sum-exp; rows sum to 1."""
    lj = gnb_log_joint(model, X)
    m = lj.max(axis=1, keepdims=True)
    e = np.exp(lj - m)
    return e / e.sum(axis=1, keepdims=True)


def gnb_predict_proba(model: GaussianNbModel, X: np.ndarray) -> np.ndarray:
    return np.clip(gnb_posterior(model, X)[:, 1], _PROB_CLIP, 1 - _PROB_CLIP)


def gnb_to_jsonable(model: GaussianNbModel) -> dict:
    return {
        "family": "gnb",
        "params": {"var_floor": model.var_floor},
        "priors": model.priors.tolist(),
        "means": model.means.tolist(),
        "variances": model.variances.tolist(),
        "feature_names": list(model.feature_names_),
    }


def gnb_from_jsonable(payload: dict) -> GaussianNbModel:
    return GaussianNbModel(
        priors=np.array(payload["priors"], dtype=float),
        means=np.array(payload["means"], dtype=float),
        variances=np.array(payload["variances"], dtype=float),
        var_floor=float(payload["params"]["var_floor"]),
        feature_names_=tuple(payload["feature_names"]),
    )
