"""Prior baseline and logistic regression trained by per-sample SGD."""
from __future__ import annotations

import numpy as np

Z_CLAMP = 500.0
P_EPS = 1e-12
LOSS_Z = float(np.log((1 - P_EPS) / P_EPS))  # margin at which G hits the clamp


class EmptyInput(ValueError):
    pass


class DivergenceDetected(FloatingPointError):
    pass


def sigmoid(z):
    """Logistic function; inputs are clamped to [-500, 500] to avoid overflow."""
    z = np.clip(np.asarray(z, dtype=float), -Z_CLAMP, Z_CLAMP)
    out = 1.0 / (1.0 + np.exp(-z))
    return out if out.ndim else float(out)


class BaselineModel:
    """Constant predictor: the server's win rate on the fit labels."""

    family = "baseline"

    def __init__(self, p_server_win, n_fit, n_features=None):
        self.p_server_win = float(p_server_win)
        self.n_fit = int(n_fit)
        self.n_features = n_features
        self.params = {}

    def predict_proba(self, X):
        return np.full(len(X), self.p_server_win)

    def state(self):
        return {"p_server_win": self.p_server_win, "n_fit": self.n_fit}

    @classmethod
    def from_state(cls, state, params, n_features):
        return cls(state["p_server_win"], state["n_fit"], n_features)


def fit_prior_baseline(labels, n_features=None):
    y = np.asarray(labels)
    if y.size == 0:
        raise EmptyInput("no labels")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return BaselineModel(float(y.mean()), y.size, n_features)


def _check(w, X, y):
    X = np.asarray(X, dtype=float)
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[1] != w.shape[0] or X.shape[0] != y.shape[0]:
        raise ValueError(f"dimension mismatch: X {X.shape}, w {w.shape}, y {y.shape}")
    return w, X, y


def logistic_loss(w, X, y, bias=0.0):
    """Mean binary cross-entropy of G = sigmoid(Xw + b), with G clamped to [1e-12, 1 - 1e-12].

    For y in {0, 1}, -(1-y) log(1 + y - G) - y log G is the same quantity.
    Evaluated as log(1 + e^z) - y z on the margin clipped to the matching
    range, which keeps full precision when G is close to 0 or 1.
    """
    w, X, y = _check(w, X, y)
    z = np.clip(X @ w + bias, -LOSS_Z, LOSS_Z)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def logistic_grad(w, X, y, bias=0.0):
    """Gradient of :func:`logistic_loss` with respect to (w, bias)."""
    w, X, y = _check(w, X, y)
    r = sigmoid(X @ w + bias) - y
    return X.T @ r / len(y), float(r.mean())


class LinearModel:
    family = "logistic"

    def __init__(self, weights, bias, params, losses=()):
        self.weights = np.asarray(weights, dtype=float)
        self.bias = float(bias)
        self.params = params
        self.losses = list(losses)
        self.n_features = len(self.weights)

    def predict_proba(self, X):
        return sigmoid(np.asarray(X, dtype=float) @ self.weights + self.bias)

    def state(self):
        return {"weights": [float(x) for x in self.weights], "bias": self.bias,
                "losses": [float(x) for x in self.losses]}

    @classmethod
    def from_state(cls, state, params, n_features):
        return cls(state["weights"], state["bias"], params, state["losses"])


def fit_logistic(X, y, alpha=0.01, epochs=50, seed=0):
    """Logistic regression by per-sample SGD, reshuffled each epoch.

    Each step moves (w, b) against the gradient of the single-sample loss.
    The full-data loss is recorded after every epoch.
    """
    if alpha <= 0:
        raise ValueError("learning rate must be positive")
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    rng = np.random.default_rng(seed)
    losses = []
    for _ in range(epochs):
        for i in rng.permutation(n):
            xi = X[i]
            z = min(max(float(xi @ w) + b, -Z_CLAMP), Z_CLAMP)
            r = 1.0 / (1.0 + np.exp(-z)) - y[i]
            w -= (alpha * r) * xi
            b -= alpha * r
        loss = logistic_loss(w, X, y, b)
        if not np.isfinite(loss) or not np.isfinite(w).all():
            raise DivergenceDetected(f"loss became {loss} at epoch {len(losses) + 1}")
        losses.append(loss)
    params = {"alpha": alpha, "epochs": epochs, "seed": seed}
    return LinearModel(w, b, params, losses)
