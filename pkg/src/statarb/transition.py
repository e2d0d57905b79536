"""State-evolution models for the latent factor vector.

Three transitions: identity random walk, an order-M companion form around a
scalar one-step model, and a small neural regressor that emits a point
prediction plus an aleatoric variance (used as process noise).

Lag windows are ordered most-recent-first throughout, matching the companion
state layout (f_k, f_{k-1}, ..., f_{k-M+1}).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import InsufficientHistoryError, InvalidInputError

STATE_VAR_FLOOR = 1e-12
VARIANCE_FLOOR = 1e-10
WEIGHTS_FORMAT_VERSION = 1

# builder defaults: one hidden layer, dropout after it, L2 on the weights
HIDDEN_UNITS = 32
DROPOUT_RATE = 0.1
L2_PENALTY = 1e-5
DEFAULT_LAGS = 10
DEFAULT_EPOCHS = 500
_LOGVAR_CLIP = 30.0


def identity_transition(f: np.ndarray) -> np.ndarray:
    """Random-walk state map: returns the input unchanged."""
    return np.asarray(f, dtype=float)


def rolling_state_cov(
    f_history: np.ndarray,
    window: int = 20,
    transition: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """Diagonal process-noise estimate from trailing one-step increments.

    Increments are f_{k+1} - g(f_k) (g defaults to the identity); the last
    min(window, T-1) increments enter a per-column sample variance, floored at
    1e-12. Off-diagonals are zero by construction.
    """
    hist = np.asarray(f_history, dtype=float)
    if hist.ndim == 1:
        hist = hist[:, None]
    t = hist.shape[0]
    if t < 2:
        raise InsufficientHistoryError(f"need at least 2 observations, got {t}")
    if window < 2:
        raise InvalidInputError("window must be >= 2")
    if transition is None:
        increments = np.diff(hist, axis=0)
    else:
        mapped = np.vstack([np.atleast_1d(transition(row)) for row in hist[:-1]])
        increments = hist[1:] - mapped
    tail = increments[-min(window, increments.shape[0]) :]
    if tail.shape[0] >= 2:
        var = np.var(tail, axis=0, ddof=1)
    else:
        var = np.zeros(tail.shape[1])
    return np.diag(np.maximum(var, STATE_VAR_FLOOR))


@dataclass
class NeuralARModel:
    """One-hidden-layer MLP over an M-lag window, with mean and log-variance heads.

    Inference is deterministic (dropout is train-only). Inputs and targets are
    standardized internally by the training-series moments.
    """

    lags: int
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    x_loc: float
    x_scale: float
    dropout: float = DROPOUT_RATE
    l2: float = L2_PENALTY
    seed: int = 0
    loss_history: List[float] = field(default_factory=list)

    def predict_batch(self, windows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Vectorized (means, variances) over rows of `windows` (B x M)."""
        x = np.asarray(windows, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.lags:
            raise InvalidInputError(f"window length {x.shape[1]} != lags {self.lags}")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("non-finite values in prediction window")
        z = (x - self.x_loc) / self.x_scale
        h = np.tanh(z @ self.w1 + self.b1)
        out = h @ self.w2 + self.b2
        mean = out[:, 0] * self.x_scale + self.x_loc
        logvar = np.clip(out[:, 1], -_LOGVAR_CLIP, _LOGVAR_CLIP)
        var = np.maximum(np.exp(logvar) * self.x_scale**2, VARIANCE_FLOOR)
        if squeeze:
            return mean[0], var[0]
        return mean, var

    def to_json(self) -> str:
        payload = {
            "format_version": WEIGHTS_FORMAT_VERSION,
            "lags": self.lags,
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2.tolist(),
            "x_loc": self.x_loc,
            "x_scale": self.x_scale,
            "dropout": self.dropout,
            "l2": self.l2,
            "seed": self.seed,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NeuralARModel":
        payload = json.loads(text)
        version = payload.get("format_version")
        if version != WEIGHTS_FORMAT_VERSION:
            raise InvalidInputError(f"unsupported weights format version {version!r}")
        return cls(
            lags=int(payload["lags"]),
            w1=np.asarray(payload["w1"], dtype=float),
            b1=np.asarray(payload["b1"], dtype=float),
            w2=np.asarray(payload["w2"], dtype=float),
            b2=np.asarray(payload["b2"], dtype=float),
            x_loc=float(payload["x_loc"]),
            x_scale=float(payload["x_scale"]),
            dropout=float(payload["dropout"]),
            l2=float(payload["l2"]),
            seed=int(payload["seed"]),
        )


def neural_predict(model: NeuralARModel, window) -> Tuple[float, float]:
    """One-step (mean, variance) prediction from an M-lag window."""
    mean, var = model.predict_batch(np.asarray(window, dtype=float))
    return float(mean), float(var)


def neural_fit(
    history,
    lags: int = DEFAULT_LAGS,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    hidden: int = HIDDEN_UNITS,
    dropout: float = DROPOUT_RATE,
    l2: float = L2_PENALTY,
    learning_rate: float = 0.01,
) -> NeuralARModel:
    """Fit the neural transition by full-batch Adam on the Gaussian NLL + L2.

    Training pairs map each M-lag window (most-recent-first) to the next value.
    Deterministic for a fixed seed.
    """
    series = np.asarray(history, dtype=float).ravel()
    if series.shape[0] <= lags + 1:
        raise InsufficientHistoryError(
            f"series length {series.shape[0]} too short for {lags} lags"
        )
    if not np.all(np.isfinite(series)):
        raise InvalidInputError("non-finite values in training series")

    n_pairs = series.shape[0] - lags
    x = np.empty((n_pairs, lags))
    for j in range(lags):
        # column j is the (j+1)-th most recent value before the target
        x[:, j] = series[lags - 1 - j : series.shape[0] - 1 - j]
    y = series[lags:]

    x_loc = float(series.mean())
    x_scale = float(max(series.std(), 1e-12))
    xs = (x - x_loc) / x_scale
    ys = (y - x_loc) / x_scale

    rng = np.random.default_rng(seed)
    w1 = rng.standard_normal((lags, hidden)) * np.sqrt(1.0 / lags)
    b1 = np.zeros(hidden)
    w2 = rng.standard_normal((hidden, 2)) * np.sqrt(1.0 / hidden)
    b2 = np.zeros(2)

    params = [w1, b1, w2, b2]
    m_state = [np.zeros_like(p) for p in params]
    v_state = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    keep = 1.0 - dropout
    loss_history = []

    for epoch in range(epochs):
        h_pre = xs @ w1 + b1
        h = np.tanh(h_pre)
        if dropout > 0.0:
            mask = (rng.random(h.shape) < keep) / keep
            hd = h * mask
        else:
            mask = None
            hd = h
        out = hd @ w2 + b2
        mu = out[:, 0]
        logvar = np.clip(out[:, 1], -_LOGVAR_CLIP, _LOGVAR_CLIP)
        inv_var = np.exp(-logvar)
        resid = mu - ys
        nll = 0.5 * np.mean(logvar + resid**2 * inv_var)
        loss = nll + l2 * (np.sum(w1**2) + np.sum(w2**2))
        loss_history.append(float(loss))

        n = n_pairs
        d_out = np.empty_like(out)
        d_out[:, 0] = resid * inv_var / n
        d_out[:, 1] = 0.5 * (1.0 - resid**2 * inv_var) / n
        d_out[:, 1] *= (np.abs(out[:, 1]) < _LOGVAR_CLIP).astype(float)

        g_w2 = hd.T @ d_out + 2.0 * l2 * w2
        g_b2 = d_out.sum(axis=0)
        d_hd = d_out @ w2.T
        d_h = d_hd * mask if mask is not None else d_hd
        d_pre = d_h * (1.0 - h**2)
        g_w1 = xs.T @ d_pre + 2.0 * l2 * w1
        g_b1 = d_pre.sum(axis=0)

        grads = [g_w1, g_b1, g_w2, g_b2]
        t = epoch + 1
        for p, g, m_s, v_s in zip(params, grads, m_state, v_state):
            m_s *= beta1
            m_s += (1 - beta1) * g
            v_s *= beta2
            v_s += (1 - beta2) * g**2
            m_hat = m_s / (1 - beta1**t)
            v_hat = v_s / (1 - beta2**t)
            p -= learning_rate * m_hat / (np.sqrt(v_hat) + eps)

    return NeuralARModel(
        lags=lags,
        w1=w1,
        b1=b1,
        w2=w2,
        b2=b2,
        x_loc=x_loc,
        x_scale=x_scale,
        dropout=dropout,
        l2=l2,
        seed=seed,
        loss_history=loss_history,
    )


def companion_wrap(model: NeuralARModel):
    """Companion-form state map and process-noise injection column.

    The map sends (f_k, ..., f_{k-M+1}) to (prediction, f_k, ..., f_{k-M+2});
    only the first coordinate receives process noise.
    """

    def state_map(state: np.ndarray) -> np.ndarray:
        x = np.asarray(state, dtype=float)
        mean, _ = model.predict_batch(x[None, :])
        out = np.empty_like(x)
        out[0] = mean[0]
        out[1:] = x[:-1]
        return out

    noise_col = np.zeros(model.lags)
    noise_col[0] = 1.0
    return state_map, noise_col


def aleatoric_psi(model: NeuralARModel, sigma_windows: np.ndarray, wm: np.ndarray) -> float:
    """Weighted average of the per-sigma-point predicted variances.

    Strictly positive (floored at the variance floor).
    """
    windows = np.asarray(sigma_windows, dtype=float)
    if windows.ndim != 2:
        raise InvalidInputError("sigma_windows must be a 2-d array of lag windows")
    _, variances = model.predict_batch(windows)
    value = float(np.asarray(wm, dtype=float) @ variances)
    return max(value, VARIANCE_FLOOR)
