"""
Gradient-trained networks in float64 numpy: feedforward (FNN), Elman
recurrent (RNN) and 1-D convolutional (CNN) regressors.

Each network is a dict of named parameter arrays plus a forward pass that
keeps its intermediate values and a backward pass that turns them into
gradients of the mean squared error. Hidden units use tanh, the read-out is
linear.
"""

import logging
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from app.core.errors import InvalidInputError, TrainingDivergedError

logger = logging.getLogger(__name__)

Params = Dict[str, np.ndarray]
Grads = Dict[str, np.ndarray]
LossFn = Callable[[Params, np.ndarray, np.ndarray], Tuple[float, Grads]]


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _mse_grad(y_hat: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
    residual = y_hat - y
    loss = float(np.mean(residual * residual))
    return loss, 2.0 * residual / len(y)


# ---------------------------------------------------------------------------
# Feedforward
# ---------------------------------------------------------------------------


def init_fnn(n_inputs: int, hidden_layers: int, width: int, rng: np.random.Generator) -> Params:
    sizes = [n_inputs] + [width] * hidden_layers + [1]
    params: Params = {}
    for layer, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        params[f"W{layer}"] = _glorot(rng, fan_in, fan_out, (fan_in, fan_out))
        params[f"b{layer}"] = np.zeros(fan_out)
    return params


def _fnn_depth(params: Params) -> int:
    return sum(1 for name in params if name.startswith("W"))


def fnn_forward(params: Params, X: np.ndarray):
    """Returns (memory of layer activations, predictions)."""
    depth = _fnn_depth(params)
    activations = [X]
    a = X
    for layer in range(depth - 1):
        a = np.tanh(a @ params[f"W{layer}"] + params[f"b{layer}"])
        activations.append(a)
    out = a @ params[f"W{depth - 1}"] + params[f"b{depth - 1}"]
    return activations, out[:, 0]


def fnn_backward(params: Params, activations, d_out: np.ndarray) -> Grads:
    depth = _fnn_depth(params)
    grads: Grads = {}
    delta = d_out[:, np.newaxis]
    for layer in range(depth - 1, -1, -1):
        a_prev = activations[layer]
        grads[f"W{layer}"] = a_prev.T @ delta
        grads[f"b{layer}"] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params[f"W{layer}"].T) * (1.0 - a_prev * a_prev)
    return grads


def fnn_loss_and_gradients(params: Params, X: np.ndarray, y: np.ndarray) -> Tuple[float, Grads]:
    activations, y_hat = fnn_forward(params, X)
    loss, d_out = _mse_grad(y_hat, y)
    return loss, fnn_backward(params, activations, d_out)


# ---------------------------------------------------------------------------
# Recurrent (Elman)
# ---------------------------------------------------------------------------


def init_rnn(n_channels: int, hidden_size: int, rng: np.random.Generator) -> Params:
    return {
        "W_xh": _glorot(rng, n_channels, hidden_size, (n_channels, hidden_size)),
        "W_hh": _glorot(rng, hidden_size, hidden_size, (hidden_size, hidden_size)),
        "b_h": np.zeros(hidden_size),
        "w_out": _glorot(rng, hidden_size, 1, (hidden_size,)),
        "b_out": np.zeros(1),
    }


def rnn_forward(params: Params, X: np.ndarray):
    """X: (S, T, M). Returns (hidden states H of shape (S, T+1, H), predictions)."""
    S, T, _ = X.shape
    hidden = params["W_hh"].shape[0]
    H = np.zeros((S, T + 1, hidden))
    for t in range(T):
        H[:, t + 1] = np.tanh(X[:, t] @ params["W_xh"] + H[:, t] @ params["W_hh"] + params["b_h"])
    y_hat = H[:, T] @ params["w_out"] + params["b_out"][0]
    return H, y_hat


def rnn_backward(params: Params, X: np.ndarray, H: np.ndarray, d_out: np.ndarray) -> Grads:
    T = X.shape[1]
    grads: Grads = {
        "W_xh": np.zeros_like(params["W_xh"]),
        "W_hh": np.zeros_like(params["W_hh"]),
        "b_h": np.zeros_like(params["b_h"]),
        "w_out": H[:, T].T @ d_out,
        "b_out": np.array([d_out.sum()]),
    }
    dH = d_out[:, np.newaxis] * params["w_out"][np.newaxis, :]
    for t in range(T - 1, -1, -1):
        dA = dH * (1.0 - H[:, t + 1] * H[:, t + 1])
        grads["W_xh"] += X[:, t].T @ dA
        grads["W_hh"] += H[:, t].T @ dA
        grads["b_h"] += dA.sum(axis=0)
        dH = dA @ params["W_hh"].T
    return grads


def rnn_loss_and_gradients(params: Params, X: np.ndarray, y: np.ndarray) -> Tuple[float, Grads]:
    H, y_hat = rnn_forward(params, X)
    loss, d_out = _mse_grad(y_hat, y)
    return loss, rnn_backward(params, X, H, d_out)


# ---------------------------------------------------------------------------
# 1-D convolutional
# ---------------------------------------------------------------------------


def init_cnn(n_channels: int, filters: int, kernel_size: int, rng: np.random.Generator) -> Params:
    fan_in = n_channels * kernel_size
    return {
        "W_conv": _glorot(rng, fan_in, filters, (kernel_size, n_channels, filters)),
        "b_conv": np.zeros(filters),
        "w_out": _glorot(rng, filters, 1, (filters,)),
        "b_out": np.zeros(1),
    }


def _windows(X: np.ndarray, kernel_size: int) -> np.ndarray:
    if X.shape[1] < kernel_size:
        raise InvalidInputError(f"sequence length {X.shape[1]} is shorter than kernel {kernel_size}")
    # (S, P, M, k)
    return sliding_window_view(X, kernel_size, axis=1)


def cnn_forward(params: Params, X: np.ndarray):
    """X: (S, T, M). Returns ((windows, activations), predictions)."""
    kernel_size = params["W_conv"].shape[0]
    windows = _windows(X, kernel_size)
    A = np.tanh(np.einsum("spmk,kmf->spf", windows, params["W_conv"]) + params["b_conv"])
    pooled = A.mean(axis=1)
    y_hat = pooled @ params["w_out"] + params["b_out"][0]
    return (windows, A, pooled), y_hat


def cnn_backward(params: Params, memory, d_out: np.ndarray) -> Grads:
    windows, A, pooled = memory
    positions = A.shape[1]
    d_pooled = d_out[:, np.newaxis] * params["w_out"][np.newaxis, :]
    dZ = (d_pooled[:, np.newaxis, :] / positions) * (1.0 - A * A)
    return {
        "W_conv": np.einsum("spmk,spf->kmf", windows, dZ),
        "b_conv": dZ.sum(axis=(0, 1)),
        "w_out": pooled.T @ d_out,
        "b_out": np.array([d_out.sum()]),
    }


def cnn_loss_and_gradients(params: Params, X: np.ndarray, y: np.ndarray) -> Tuple[float, Grads]:
    memory, y_hat = cnn_forward(params, X)
    loss, d_out = _mse_grad(y_hat, y)
    return loss, cnn_backward(params, memory, d_out)


# ---------------------------------------------------------------------------
# Regressor and training loop
# ---------------------------------------------------------------------------


FORWARD = {"fnn": fnn_forward, "rnn": rnn_forward, "cnn": cnn_forward}
LOSS_AND_GRADIENTS: Dict[str, LossFn] = {
    "fnn": fnn_loss_and_gradients,
    "rnn": rnn_loss_and_gradients,
    "cnn": cnn_loss_and_gradients,
}


def loss_and_gradients(kind: str, params: Params, X: np.ndarray, y: np.ndarray) -> Tuple[float, Grads]:
    """Mean squared error and its analytic gradient for one network kind."""
    return LOSS_AND_GRADIENTS[kind](params, np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64))


class NetworkRegressor:
    """Immutable holder of a trained network's parameters."""

    def __init__(self, kind: str, params: Params) -> None:
        self.kind = kind
        self.params = {name: np.array(value, dtype=np.float64) for name, value in params.items()}
        for value in self.params.values():
            value.flags.writeable = False
        self._forward = FORWARD[kind]

    def __getstate__(self):
        return {"kind": self.kind, "params": self.params}

    def __setstate__(self, state) -> None:
        self.__init__(state["kind"], state["params"])

    def predict_one(self, x: np.ndarray) -> float:
        return float(self._forward(self.params, x[np.newaxis, ...])[1][0])

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        """Vectorized forward pass, used for validation scoring during training."""
        return self._forward(self.params, X)[1]


def _batch_rmse(kind: str, params: Params, X: np.ndarray, y: np.ndarray) -> float:
    residual = FORWARD[kind](params, X)[1] - y
    return float(np.sqrt(np.mean(residual * residual)))


def gradient_passes(
    kind: str,
    params: Params,
    X: np.ndarray,
    y: np.ndarray,
    learning_rate: float,
    batch_size: int,
    rng: np.random.Generator,
    passes: int = 1,
    epoch_offset: int = 0,
) -> Params:
    """
    Plain mini-batch gradient descent over (X, y), ``passes`` epochs.

    Raises:
        TrainingDivergedError: loss or parameters became non-finite
    """
    params = {name: value.copy() for name, value in params.items()}
    step = LOSS_AND_GRADIENTS[kind]
    n = X.shape[0]
    for p in range(passes):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            rows = order[start:start + batch_size]
            loss, grads = step(params, X[rows], y[rows])
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"{kind} loss became non-finite", epoch_offset + p + 1)
            for name in params:
                params[name] -= learning_rate * grads[name]
        if not all(np.all(np.isfinite(v)) for v in params.values()):
            raise TrainingDivergedError(f"{kind} parameters became non-finite", epoch_offset + p + 1)
    return params


def train_network(
    kind: str,
    params: Params,
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_val: Optional[np.ndarray],
    y_val: Optional[np.ndarray],
    learning_rate: float,
    batch_size: int,
    max_epochs: int,
    patience: int,
    rng: np.random.Generator,
) -> Tuple[Params, int, float]:
    """
    Train with early stopping on validation RMSE, restoring the best epoch.

    Without validation rows the training RMSE is monitored instead.

    Returns:
        (best parameters, epochs run, best monitored RMSE)
    """
    if X_val is None or len(X_val) == 0:
        X_val, y_val = X_train, y_train

    best = {name: value.copy() for name, value in params.items()}
    best_rmse = _batch_rmse(kind, params, X_val, y_val)
    stale = 0
    epochs = 0
    for epoch in range(max_epochs):
        params = gradient_passes(
            kind, params, X_train, y_train, learning_rate, batch_size, rng, epoch_offset=epoch
        )
        epochs = epoch + 1
        score = _batch_rmse(kind, params, X_val, y_val)
        if not np.isfinite(score):
            raise TrainingDivergedError(f"{kind} validation error became non-finite", epochs)
        if score < best_rmse:
            best_rmse = score
            best = {name: value.copy() for name, value in params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break
    logger.debug("%s stopped after %d epochs, best validation RMSE %.6f", kind, epochs, best_rmse)
    return best, epochs, best_rmse
