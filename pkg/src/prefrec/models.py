"""Binary classifiers with analytic input sensitivities.

Two families are provided, both with an sklearn-style surface
(``fit`` / ``predict`` / ``predict_proba`` / ``get_params``):

* :class:`LogisticClassifier`, a logistic regression trained by full-batch
  gradient descent with a monotone-loss guarantee, and
* :class:`MlpClassifier`, a small fully-connected network (default hidden
  sizes 18, 9, 3) with a single logistic output.

Both expose ``sensitivity(x)``, the gradient of the positive-class
probability with respect to the input, computed in closed form for the linear
model and by reverse-mode accumulation for the network. The recourse search
only consumes ``predict_proba``, ``predict_label`` and ``sensitivity``, so any
object satisfying :class:`Predictor` can be plugged in.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np
from sklearn.base import BaseEstimator

from .data import Dataset
from .validation import SchemaError, TrainingError, check_fitted, check_instance

ACTIVATIONS = ("relu", "tanh")


@runtime_checkable
class Predictor(Protocol):
    """Contract consumed by the recourse engine and baselines."""

    n_features_in_: int

    def predict_proba(self, X): ...

    def predict_label(self, X): ...

    def sensitivity(self, x) -> np.ndarray: ...


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _labels_from_proba(p):
    return np.where(np.asarray(p) >= 0.5, 1, -1)


def _standardize(X):
    """Column-wise standardization statistics; constant columns get scale 1."""
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    sigma[sigma == 0.0] = 1.0
    return mu, sigma


class LogisticClassifier(BaseEstimator):
    """Logistic regression: p(+1 | x) = sigmoid(w . x + b).

    ``fit`` runs deterministic full-batch gradient descent with backtracking
    so the training loss is non-increasing epoch over epoch.
    """

    def __init__(self, l2: float = 0.0, epochs: int = 500, lr: float = 0.5, seed: int = 0):
        self.l2 = l2
        self.epochs = epochs
        self.lr = lr
        self.seed = seed
        self.weights_ = None
        self.bias_ = None
        self.loss_curve_ = None
        self.n_features_in_ = None

    def _loss_grad(self, X, y, w, b):
        z = X @ w + b
        margins = -y * z
        loss = float(np.mean(np.logaddexp(0.0, margins)) + 0.5 * self.l2 * np.dot(w, w))
        coef = -y * _sigmoid(margins)
        gw = X.T @ coef / X.shape[0] + self.l2 * w
        gb = float(np.mean(coef))
        return loss, gw, gb

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        # Gradient descent runs on standardized columns for conditioning; the
        # transform is folded back into the weights so the fitted model acts
        # on raw feature values.
        mu, sigma = _standardize(X)
        Xs = (X - mu) / sigma
        rng = np.random.default_rng(self.seed)
        w = rng.normal(scale=0.01, size=X.shape[1])
        b = 0.0
        lr = self.lr
        losses = []
        loss, gw, gb = self._loss_grad(Xs, y, w, b)
        for _ in range(self.epochs):
            if not np.isfinite(loss):
                raise TrainingError(f"training loss is not finite ({loss})")
            losses.append(loss)
            for _ in range(40):
                w_new = w - lr * gw
                b_new = b - lr * gb
                new_loss, new_gw, new_gb = self._loss_grad(Xs, y, w_new, b_new)
                if new_loss <= loss + 1e-15:
                    break
                lr *= 0.5
            else:
                break  # gradient is numerically zero, nothing left to do
            w, b, loss, gw, gb = w_new, b_new, new_loss, new_gw, new_gb
            lr = min(lr * 2.0, self.lr)
        losses.append(loss)
        self.weights_ = w / sigma
        self.bias_ = float(b - np.dot(w, mu / sigma))
        self.loss_curve_ = losses
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_fitted(self, "weights_")
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return float(_sigmoid(float(np.dot(self.weights_, X) + self.bias_)))
        return _sigmoid(X @ self.weights_ + self.bias_)

    def predict_label(self, X):
        p = self.predict_proba(X)
        if np.isscalar(p):
            return 1 if p >= 0.5 else -1
        return _labels_from_proba(p)

    predict = predict_label

    def sensitivity(self, x) -> np.ndarray:
        """Gradient of p(+1 | x) with respect to x: p(1-p) w."""
        check_fitted(self, "weights_")
        x = check_instance(x, self.n_features_in_)
        p = self.predict_proba(x)
        return p * (1.0 - p) * self.weights_


class MlpClassifier(BaseEstimator):
    """Small fully-connected binary classifier with a logistic output unit.

    Hidden sizes default to (18, 9, 3). ``sensitivity`` backpropagates the
    positive-class probability through the network; the ReLU derivative at an
    exact kink is taken as 0, so dead units contribute no direction signal.
    """

    def __init__(
        self,
        hidden: tuple[int, ...] = (18, 9, 3),
        activation: str = "relu",
        l2: float = 0.0,
        epochs: int = 300,
        lr: float = 0.05,
        seed: int = 0,
    ):
        self.hidden = hidden
        self.activation = activation
        self.l2 = l2
        self.epochs = epochs
        self.lr = lr
        self.seed = seed
        self.coefs_ = None
        self.intercepts_ = None
        self.loss_curve_ = None
        self.n_features_in_ = None

    # -- architecture ----------------------------------------------------

    def _init_weights(self, n_features: int):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        rng = np.random.default_rng(self.seed)
        dims = [n_features, *self.hidden, 1]
        coefs, intercepts = [], []
        for fan_in, fan_out in zip(dims, dims[1:]):
            if self.activation == "relu":
                scale = np.sqrt(2.0 / fan_in)
            else:
                scale = np.sqrt(1.0 / fan_in)
            coefs.append(rng.normal(scale=scale, size=(fan_in, fan_out)))
            intercepts.append(np.zeros(fan_out))
        self.coefs_ = coefs
        self.intercepts_ = intercepts
        self.n_features_in_ = n_features

    @classmethod
    def random_init(
        cls,
        n_features: int,
        hidden: tuple[int, ...] = (18, 9, 3),
        activation: str = "relu",
        seed: int = 0,
    ) -> "MlpClassifier":
        """A usable network with seeded random weights and no training."""
        model = cls(hidden=hidden, activation=activation, seed=seed)
        model._init_weights(n_features)
        return model

    def _act(self, z):
        if self.activation == "relu":
            return np.maximum(z, 0.0)
        return np.tanh(z)

    def _act_deriv(self, z):
        if self.activation == "relu":
            return (z > 0).astype(float)
        return 1.0 - np.tanh(z) ** 2

    def _forward(self, X):
        """Returns (logit z, list of pre-activations per hidden layer)."""
        pres = []
        a = X
        for W, b in zip(self.coefs_[:-1], self.intercepts_[:-1]):
            pre = a @ W + b
            pres.append(pre)
            a = self._act(pre)
        z = a @ self.coefs_[-1] + self.intercepts_[-1]
        return z[..., 0], pres

    # -- estimator surface -------------------------------------------------

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        # Train on standardized inputs, then fold the transform into the
        # first layer so the network consumes raw feature values.
        mu, sigma = _standardize(X)
        Xs = (X - mu) / sigma
        self._init_weights(X.shape[1])
        targets = (y + 1.0) / 2.0
        losses = []
        for _ in range(self.epochs):
            z, pres = self._forward(Xs)
            loss = float(np.mean(np.logaddexp(0.0, z) - targets * z))
            if not np.isfinite(loss):
                raise TrainingError(f"training loss is not finite ({loss})")
            losses.append(loss)
            # Backprop d loss / d z through the hidden stack.
            delta = (_sigmoid(z) - targets)[:, None] / X.shape[0]
            grads_W, grads_b = [], []
            activations = [Xs] + [self._act(p) for p in pres]
            for layer in range(len(self.coefs_) - 1, -1, -1):
                grads_W.append(activations[layer].T @ delta + self.l2 * self.coefs_[layer])
                grads_b.append(delta.sum(axis=0))
                if layer > 0:
                    delta = (delta @ self.coefs_[layer].T) * self._act_deriv(pres[layer - 1])
            for layer, (gW, gb) in enumerate(zip(reversed(grads_W), reversed(grads_b))):
                self.coefs_[layer] -= self.lr * gW
                self.intercepts_[layer] -= self.lr * gb
        self.intercepts_[0] = self.intercepts_[0] - (mu / sigma) @ self.coefs_[0]
        self.coefs_[0] = self.coefs_[0] / sigma[:, None]
        self.loss_curve_ = losses
        return self

    def predict_proba(self, X):
        check_fitted(self, "coefs_")
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            z, _ = self._forward(X.reshape(1, -1))
            return float(_sigmoid(z[0]))
        z, _ = self._forward(X)
        return _sigmoid(z)

    def predict_label(self, X):
        p = self.predict_proba(X)
        if np.isscalar(p):
            return 1 if p >= 0.5 else -1
        return _labels_from_proba(p)

    predict = predict_label

    def sensitivity(self, x) -> np.ndarray:
        """Gradient of p(+1 | x) with respect to x via reverse accumulation."""
        check_fitted(self, "coefs_")
        x = check_instance(x, self.n_features_in_)
        z, pres = self._forward(x.reshape(1, -1))
        p = float(_sigmoid(z[0]))
        g = self.coefs_[-1][:, 0] * (p * (1.0 - p))
        for layer in range(len(self.coefs_) - 2, -1, -1):
            g = g * self._act_deriv(pres[layer][0])
            g = self.coefs_[layer] @ g
        return g


def train_logistic(
    dataset: Dataset, l2: float = 0.0, epochs: int = 500, lr: float = 0.5, seed: int = 0
) -> LogisticClassifier:
    return LogisticClassifier(l2=l2, epochs=epochs, lr=lr, seed=seed).fit(dataset.X, dataset.y)


def train_mlp(
    dataset: Dataset,
    hidden: tuple[int, ...] = (18, 9, 3),
    activation: str = "relu",
    l2: float = 0.0,
    epochs: int = 300,
    lr: float = 0.05,
    seed: int = 0,
) -> MlpClassifier:
    model = MlpClassifier(
        hidden=hidden, activation=activation, l2=l2, epochs=epochs, lr=lr, seed=seed
    )
    return model.fit(dataset.X, dataset.y)


def accuracy(model: Predictor, dataset: Dataset) -> float:
    return float(np.mean(model.predict_label(dataset.X) == dataset.y))


# -- serialization ---------------------------------------------------------
#
# Models are stored as canonical JSON ({type, dims, activation, weights,
# bias}); floats use repr round-tripping so save -> load -> save is
# byte-identical.


def save_model(model: Predictor, path) -> None:
    if isinstance(model, LogisticClassifier):
        check_fitted(model, "weights_")
        doc = {
            "type": "logistic",
            "dims": [int(model.n_features_in_)],
            "activation": None,
            "weights": [float(w) for w in model.weights_],
            "bias": float(model.bias_),
        }
    elif isinstance(model, MlpClassifier):
        check_fitted(model, "coefs_")
        doc = {
            "type": "mlp",
            "dims": [int(model.n_features_in_), *map(int, model.hidden), 1],
            "activation": model.activation,
            "weights": [[[float(v) for v in row] for row in W] for W in model.coefs_],
            "bias": [[float(v) for v in b] for b in model.intercepts_],
        }
    else:
        raise TypeError(f"cannot serialize model of type {type(model).__name__}")
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path, n_features: int | None = None) -> Predictor:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = doc.get("type")
    if kind == "logistic":
        model = LogisticClassifier()
        model.weights_ = np.asarray(doc["weights"], dtype=float)
        model.bias_ = float(doc["bias"])
        model.n_features_in_ = len(model.weights_)
        if model.n_features_in_ != doc["dims"][0]:
            raise SchemaError("model file dims do not match its weight vector")
    elif kind == "mlp":
        dims = doc["dims"]
        model = MlpClassifier(hidden=tuple(dims[1:-1]), activation=doc["activation"])
        model.coefs_ = [np.asarray(W, dtype=float) for W in doc["weights"]]
        model.intercepts_ = [np.asarray(b, dtype=float) for b in doc["bias"]]
        model.n_features_in_ = dims[0]
        shapes = [W.shape for W in model.coefs_]
        if shapes != [(a, b) for a, b in zip(dims, dims[1:])]:
            raise SchemaError("model file dims do not match its weight matrices")
    else:
        raise SchemaError(f"unknown model type {kind!r}")
    if n_features is not None and model.n_features_in_ != n_features:
        raise SchemaError(
            f"model expects {model.n_features_in_} features, schema has {n_features}"
        )
    return model
