"""Single-hidden-layer perceptron: ReLU hidden layer, sigmoid output,
weighted binary cross-entropy, Adam updates, optional inverted dropout on
the hidden activations, and early stopping on a stratified validation split
of the training fold.

The batch loss is sum(w * bce) / sum(w), so class weights rescale per-sample
influence without changing the step-size scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._rng import derive_rng
from ..errors import ConfigError, DataError
from ..special import log1pexp, sigmoid

_PROB_CLIP = 1e-7


@dataclass(frozen=True)
class MlpConfig:
    hidden: int = 16
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 200
    patience: int = 20
    dropout: float = 0.0
    val_fraction: float = 0.15

    def __post_init__(self):
        if self.hidden < 1:
            raise ConfigError("hidden must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if not 0.0 <= self.val_fraction < 0.5:
            raise ConfigError("val_fraction must be in [0, 0.5)")
        if self.batch_size < 1 or self.epochs < 1 or self.learning_rate <= 0:
            raise ConfigError("batch_size, epochs >= 1 and learning_rate > 0 required")


@dataclass(frozen=True)
class MlpModel:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: float
    config: MlpConfig
    feature_names_: tuple
    train_loss: tuple
    val_loss: tuple
    stopped_epoch: int


def _forward(params, X, drop_mask=None):
    W1, b1, W2, b2 = params
    Z1 = X @ W1 + b1
    A1 = np.maximum(Z1, 0.0)
    if drop_mask is not None:
        A1 = A1 * drop_mask
    z2 = A1 @ W2 + b2
    return Z1, A1, z2


def loss_and_grad(params, X, y, w, drop_mask=None):
    """Weighted BCE loss and analytic gradients (W1, b1, W2, b2 order).
    Pass drop_mask=None for the deterministic (dropout-off) loss used in
    gradient checking and validation."""
    W1, b1, W2, b2 = params
    y = np.asarray(y, dtype=float)
    w_sum = w.sum()
    Z1, A1, z2 = _forward(params, X, drop_mask)
    loss = float(np.sum(w * (log1pexp(z2) - y * z2)) / w_sum)
    dz2 = w * (sigmoid(z2) - y) / w_sum
    dW2 = A1.T @ dz2
    db2 = dz2.sum()
    dA1 = np.outer(dz2, W2)
    if drop_mask is not None:
        dA1 = dA1 * drop_mask
    dZ1 = dA1 * (Z1 > 0)
    dW1 = X.T @ dZ1
    db1 = dZ1.sum(axis=0)
    return loss, (dW1, db1, dW2, db2)


def _stratified_val_split(y, val_fraction, rng):
    val = []
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        n_val = int(np.floor(idx.size * val_fraction + 0.5))
        if n_val == 0 or n_val == idx.size:
            continue
        perm = rng.permutation(idx.size)
        val.append(idx[perm[:n_val]])
    if not val:
        return None, None
    val = np.sort(np.concatenate(val))
    fit = np.setdiff1d(np.arange(y.size), val)
    return fit, val


def train_mlp(train, config: MlpConfig = MlpConfig(), weights=None, seed: int = 0) -> MlpModel:
    """Adam on the weighted BCE. Early stopping restores the parameters of
    the best validation epoch; with val_fraction=0 all epochs run."""
    X = np.asarray(train.X, dtype=float)
    y = np.asarray(train.y, dtype=float)
    if np.isnan(X).any():
        raise DataError("train_mlp requires imputed (non-missing) inputs")
    w = weights.per_row(train.y) if weights is not None else np.ones(y.shape[0])
    rng = derive_rng(seed, "mlp")

    if config.val_fraction > 0:
        fit_idx, val_idx = _stratified_val_split(train.y, config.val_fraction, rng)
    else:
        fit_idx = val_idx = None
    if fit_idx is None:
        fit_idx = np.arange(y.size)
        val_idx = None
    Xf, yf, wf = X[fit_idx], y[fit_idx], w[fit_idx]

    d = X.shape[1]
    h = config.hidden
    W1 = rng.normal(0.0, np.sqrt(2.0 / d), size=(d, h))
    b1 = np.zeros(h)
    W2 = rng.normal(0.0, np.sqrt(1.0 / h), size=h)
    b2 = 0.0
    params = [W1, b1, W2, b2]
    m = [np.zeros_like(W1), np.zeros_like(b1), np.zeros_like(W2), 0.0]
    v = [np.zeros_like(W1), np.zeros_like(b1), np.zeros_like(W2), 0.0]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    train_hist, val_hist = [], []
    best_val = np.inf
    best_params = [W1.copy(), b1.copy(), W2.copy(), b2]
    best_epoch = 0
    since_best = 0
    n_fit = Xf.shape[0]

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n_fit)
        for start in range(0, n_fit, config.batch_size):
            batch = order[start : start + config.batch_size]
            if config.dropout > 0:
                keep = rng.random((batch.size, h)) >= config.dropout
                mask = keep / (1.0 - config.dropout)
            else:
                mask = None
            loss, grads = loss_and_grad(tuple(params), Xf[batch], yf[batch], wf[batch], mask)
            if np.isnan(loss):
                raise ConfigError("MLP training diverged (NaN loss)")
            step += 1
            for i in range(4):
                m[i] = beta1 * m[i] + (1 - beta1) * grads[i]
                v[i] = beta2 * v[i] + (1 - beta2) * np.square(grads[i])
                m_hat = m[i] / (1 - beta1 ** step)
                v_hat = v[i] / (1 - beta2 ** step)
                params[i] = params[i] - config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        ep_loss, _ = loss_and_grad(tuple(params), Xf, yf, wf)
        train_hist.append(ep_loss)
        if val_idx is not None:
            vl, _ = loss_and_grad(tuple(params), X[val_idx], y[val_idx], w[val_idx])
            val_hist.append(vl)
            if vl < best_val - 1e-12:
                best_val = vl
                best_params = [params[0].copy(), params[1].copy(), params[2].copy(), params[3]]
                best_epoch = epoch
                since_best = 0
            else:
                since_best += 1
                if since_best >= config.patience:
                    break
        else:
            best_params = [params[0].copy(), params[1].copy(), params[2].copy(), params[3]]
            best_epoch = epoch

    W1, b1, W2, b2 = best_params
    return MlpModel(
        W1=W1, b1=b1, W2=W2, b2=float(b2),
        config=config,
        feature_names_=tuple(train.feature_names),
        train_loss=tuple(train_hist),
        val_loss=tuple(val_hist),
        stopped_epoch=best_epoch,
    )


def mlp_margin(model: MlpModel, X: np.ndarray) -> np.ndarray:
    _, _, z2 = _forward((model.W1, model.b1, model.W2, model.b2), np.asarray(X, dtype=float))
    return z2


def mlp_predict_proba(model: MlpModel, X: np.ndarray) -> np.ndarray:
    return np.clip(sigmoid(mlp_margin(model, X)), _PROB_CLIP, 1 - _PROB_CLIP)


def mlp_to_jsonable(model: MlpModel) -> dict:
    cfg = model.config
    return {
        "family": "mlp",
        "params": {
            "hidden": cfg.hidden,
            "learning_rate": cfg.learning_rate,
            "batch_size": cfg.batch_size,
            "epochs": cfg.epochs,
            "patience": cfg.patience,
            "dropout": cfg.dropout,
            "val_fraction": cfg.val_fraction,
        },
        "W1": model.W1.tolist(),
        "b1": model.b1.tolist(),
        "W2": model.W2.tolist(),
        "b2": model.b2,
        "feature_names": list(model.feature_names_),
        "stopped_epoch": model.stopped_epoch,
    }


def mlp_from_jsonable(payload: dict) -> MlpModel:
    return MlpModel(
        W1=np.array(payload["W1"], dtype=float),
        b1=np.array(payload["b1"], dtype=float),
        W2=np.array(payload["W2"], dtype=float),
        b2=float(payload["b2"]),
        config=MlpConfig(**payload["params"]),
        feature_names_=tuple(payload["feature_names"]),
        train_loss=(),
        val_loss=(),
        stopped_epoch=int(payload["stopped_epoch"]),
    )
