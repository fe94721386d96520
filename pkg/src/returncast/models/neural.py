"""Single-hidden-layer regression network trained by full-batch gradient descent.

Inputs and target are standardized so one learning rate works across widely
different predictor scales. Everything is seeded and deterministic.
"""
from __future__ import annotations

import numpy as np

from ..core import FeatureMatrix
from .base import FittedModel, ModelKind, ModelSpec, register_fitter, require_rows

DEFAULT_HIDDEN_UNITS = 8
DEFAULT_EPOCHS = 2000
DEFAULT_LEARNING_RATE = 0.01
MIN_ROWS = 10


def unpack_params(flat: np.ndarray, n_inputs: int, hidden: int):
    """Split a flat parameter vector into (W1, b1, W2, b2)."""
    k = n_inputs * hidden
    w1 = flat[:k].reshape(n_inputs, hidden)
    b1 = flat[k : k + hidden]
    w2 = flat[k + hidden : k + 2 * hidden]
    b2 = flat[-1]
    return w1, b1, w2, b2


def loss_and_grad(
    flat: np.ndarray, X: np.ndarray, y: np.ndarray, hidden: int
) -> tuple[float, np.ndarray]:
    """Half-MSE loss and its analytic gradient for the flat parameter vector."""
    n, p = X.shape
    w1, b1, w2, b2 = unpack_params(flat, p, hidden)
    z = np.tanh(X @ w1 + b1)
    out = z @ w2 + b2
    err = out - y
    loss = 0.5 * float(err @ err) / n

    d_out = err / n
    g_w2 = z.T @ d_out
    g_b2 = float(d_out.sum())
    d_z = np.outer(d_out, w2) * (1.0 - z * z)
    g_w1 = X.T @ d_z
    g_b1 = d_z.sum(axis=0)
    grad = np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]])
    return loss, grad


def _standardizer(values: np.ndarray, axis=0):
    mean = values.mean(axis=axis)
    sd = values.std(axis=axis)
    sd = np.where(sd == 0.0, 1.0, sd) if np.ndim(sd) else (sd if sd != 0.0 else 1.0)
    return mean, sd


class NeuralModel(FittedModel):
    def __init__(self, spec: ModelSpec, predictor_names, window, params, scalers, hidden: int):
        super().__init__(spec, predictor_names, window)
        self.params = params
        self.x_mean, self.x_sd, self.y_mean, self.y_sd = scalers
        self.hidden = hidden

    def _predict_raw(self, matrix: FeatureMatrix) -> np.ndarray:
        xs = (matrix.X - self.x_mean) / self.x_sd
        w1, b1, w2, b2 = unpack_params(self.params, xs.shape[1], self.hidden)
        out = np.tanh(xs @ w1 + b1) @ w2 + b2
        return out * self.y_sd + self.y_mean


def fit_neural(spec: ModelSpec, train: FeatureMatrix) -> NeuralModel:
    require_rows(spec.kind, train, MIN_ROWS)
    hidden = int(spec.param("hidden_units", DEFAULT_HIDDEN_UNITS))
    epochs = int(spec.param("epochs", DEFAULT_EPOCHS))
    lr = float(spec.param("learning_rate", DEFAULT_LEARNING_RATE))

    x_mean, x_sd = _standardizer(train.X)
    y_mean, y_sd = _standardizer(train.y)
    xs = (train.X - x_mean) / x_sd
    ys = (train.y - y_mean) / y_sd

    p = xs.shape[1]
    rng = np.random.default_rng(spec.seed)
    flat = np.concatenate(
        [
            rng.standard_normal(p * hidden) / np.sqrt(max(p, 1)),
            np.zeros(hidden),
            rng.standard_normal(hidden) / np.sqrt(hidden),
            np.zeros(1),
        ]
    )
    for _ in range(epochs):
        _, grad = loss_and_grad(flat, xs, ys, hidden)
        flat = flat - lr * grad

    return NeuralModel(
        spec, train.predictor_names, train.interval, flat, (x_mean, x_sd, y_mean, y_sd), hidden
    )


register_fitter(ModelKind.NEURAL, fit_neural)
