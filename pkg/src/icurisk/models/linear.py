"""Penalized logistic regression.

Objective: sum_i w_i [log(1 + exp(z_i)) - y_i z_i] + penalty, with
z = X beta + b and the bias b unpenalized. L2 penalty = ||beta||^2 / (2C),
solved by damped Newton; L1 penalty = ||beta||_1 / C, solved by FISTA with
soft-thresholding and function-value restarts. Convergence is declared when
the (composite) gradient max-norm drops below tol; for L1 this is the
gradient-mapping norm, which coincides with the plain gradient in the
smooth case.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError
from ..special import log1pexp, sigmoid

_PROB_CLIP = 1e-7


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    penalty: str          # "l1" or "l2"
    C: float
    converged: bool
    n_iter: int
    feature_names_: tuple


def _design(X):
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _nll(beta, Xd, y, w):
    z = Xd @ beta
    return float(np.sum(w * (log1pexp(z) - y * z)))


def _nll_grad(beta, Xd, y, w):
    p = sigmoid(Xd @ beta)
    return Xd.T @ (w * (p - y))


def _objective(beta, Xd, y, w, penalty, C):
    pen = np.abs(beta[:-1]).sum() / C if penalty == "l1" else beta[:-1] @ beta[:-1] / (2 * C)
    return _nll(beta, Xd, y, w) + pen


def _newton_l2(Xd, y, w, C, tol, max_iter):
    d1 = Xd.shape[1]
    reg = np.ones(d1) / C
    reg[-1] = 0.0  # bias unpenalized
    beta = np.zeros(d1)
    for it in range(1, max_iter + 1):
        z = Xd @ beta
        p = sigmoid(z)
        grad = Xd.T @ (w * (p - y)) + reg * beta
        if np.abs(grad).max() < tol:
            return beta, True, it
        hw = w * p * (1.0 - p)
        H = Xd.T @ (Xd * hw[:, None]) + np.diag(reg) + 1e-10 * np.eye(d1)
        step = np.linalg.solve(H, grad)
        f0 = _nll(beta, Xd, y, w) + 0.5 * (reg * beta) @ beta
        t = 1.0
        slope = grad @ step
        for _ in range(60):
            cand = beta - t * step
            f1 = _nll(cand, Xd, y, w) + 0.5 * (reg * cand) @ cand
            if f1 <= f0 - 1e-4 * t * slope:
                break
            t *= 0.5
        beta = beta - t * step
    return beta, False, max_iter


def _soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _prox(v, step, C):
    out = v.copy()
    out[:-1] = _soft_threshold(v[:-1], step / C)
    return out


def _fista_l1(Xd, y, w, C, tol, max_iter):
    # Lipschitz constant of the smooth part: lambda_max(X^T diag(w/4) X)
    M = Xd.T @ (Xd * (w / 4.0)[:, None])
    L = float(np.linalg.eigvalsh(M).max()) + 1e-12
    d1 = Xd.shape[1]
    beta = np.zeros(d1)
    v = beta.copy()
    t_k = 1.0
    best = beta.copy()
    best_obj = _objective(beta, Xd, y, w, "l1", C)
    prev_obj = best_obj
    for it in range(1, max_iter + 1):
        grad_v = _nll_grad(v, Xd, y, w)
        beta_next = _prox(v - grad_v / L, 1.0 / L, C)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k))
        v = beta_next + ((t_k - 1.0) / t_next) * (beta_next - beta)
        beta, t_k = beta_next, t_next
        obj = _objective(beta, Xd, y, w, "l1", C)
        if obj < best_obj:
            best_obj = obj
            best = beta.copy()
        if obj > prev_obj:  # function-value restart
            v = beta.copy()
            t_k = 1.0
        prev_obj = obj
        if it % 10 == 0 or it == max_iter:
            grad_b = _nll_grad(best, Xd, y, w)
            mapped = _prox(best - grad_b / L, 1.0 / L, C)
            crit = L * np.abs(best - mapped).max()
            if crit < tol:
                return best, True, it
    return best, False, max_iter


def train_logreg(train, penalty: str = "l2", C: float = 1.0, weights=None,
                 tol: float = 1e-6, max_iter: int = None) -> LinearModel:
    """Fit the weighted penalized logistic model. weights is a ClassWeights
    (None = unit weights). Non-convergence returns the best iterate with a
    warning and converged=False."""
    penalty = penalty.lower()
    if penalty not in ("l1", "l2"):
        raise ConfigError(f"penalty must be 'l1' or 'l2', got {penalty!r}")
    if C <= 0:
        raise ConfigError(f"C must be positive, got {C}")
    X = np.asarray(train.X, dtype=float)
    y = np.asarray(train.y, dtype=float)
    if np.isnan(X).any():
        raise DataError("train_logreg requires imputed (non-missing) inputs")
    w = weights.per_row(train.y) if weights is not None else np.ones(y.shape[0])
    Xd = _design(X)
    if penalty == "l2":
        beta, ok, it = _newton_l2(Xd, y, w, C, tol, max_iter or 100)
    else:
        beta, ok, it = _fista_l1(Xd, y, w, C, tol, max_iter or 20000)
    if not ok:
        warnings.warn(f"logreg ({penalty}, C={C}) did not converge in {it} iterations")
    return LinearModel(
        weights=beta[:-1].copy(),
        bias=float(beta[-1]),
        penalty=penalty,
        C=float(C),
        converged=bool(ok),
        n_iter=int(it),
        feature_names_=tuple(train.feature_names),
    )


def logreg_objective(model: LinearModel, train, weights=None) -> float:
    """The trained objective evaluated at the model's coefficients."""
    X = np.asarray(train.X, dtype=float)
    y = np.asarray(train.y, dtype=float)
    w = weights.per_row(train.y) if weights is not None else np.ones(y.shape[0])
    beta = np.r_[model.weights, model.bias]
    return _objective(beta, _design(X), y, w, model.penalty, model.C)


def linear_margin(model: LinearModel, X: np.ndarray) -> np.ndarray:
    return np.asarray(X, dtype=float) @ model.weights + model.bias


def linear_predict_proba(model: LinearModel, X: np.ndarray) -> np.ndarray:
    return np.clip(sigmoid(linear_margin(model, X)), _PROB_CLIP, 1 - _PROB_CLIP)


def linear_to_jsonable(model: LinearModel) -> dict:
    return {
        "family": "logreg",
        "params": {"penalty": model.penalty, "C": model.C},
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "converged": model.converged,
        "n_iter": model.n_iter,
        "feature_names": list(model.feature_names_),
    }


def linear_from_jsonable(payload: dict) -> LinearModel:
    return LinearModel(
        weights=np.array(payload["weights"], dtype=float),
        bias=float(payload["bias"]),
        penalty=payload["params"]["penalty"],
        C=float(payload["params"]["C"]),
        converged=bool(payload["converged"]),
        n_iter=int(payload["n_iter"]),
        feature_names_=tuple(payload["feature_names"]),
    )
