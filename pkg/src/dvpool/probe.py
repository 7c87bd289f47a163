"""Multinomial logistic-regression probe trained by minibatch SGD.

The probe maps a feature vector x to logits W x + b and is trained on the
mean cross-entropy plus an L2 penalty on the weights:

    loss = mean_i CE(softmax(W x_i + b), y_i) + l2 * sum(W ** 2)

The bias is not penalized. Weights start at zero, minibatches follow a
seeded permutation stream, and features are standardized per dimension by
default (zero-variance dimensions keep scale 1). Training is deterministic
given (features, labels, spec).

``gradient_check`` validates the analytic gradients against central finite
differences coordinate by coordinate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .metrics import softmax
from .npyio import read_npy_file, write_npy_file
from .tensor import ContractError

_SPEC_KEYS = ("learning_rate", "epochs", "batch_size", "l2", "seed", "standardize")


@dataclass(frozen=True)
class TrainSpec:
    """Probe training hyperparameters."""

    learning_rate: float = 0.1
    epochs: int = 200
    batch_size: int = 32
    l2: float = 1e-4
    seed: int = 0
    standardize: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ContractError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ContractError(f"epochs must be at least 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ContractError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.l2 < 0:
            raise ContractError(f"l2 must be non-negative, got {self.l2}")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in _SPEC_KEYS}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainSpec":
        unknown = set(d) - set(_SPEC_KEYS)
        if unknown:
            raise ContractError(f"unknown training-spec keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class LinearProbe:
    """Trained linear classifier with optional input standardization."""

    weights: np.ndarray  # (K, D)
    bias: np.ndarray  # (K,)
    feature_mean: np.ndarray | None = None
    feature_std: np.ndarray | None = None

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64))
        b = np.ascontiguousarray(np.asarray(self.bias, dtype=np.float64))
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise ContractError("weights must be K x D with a matching K-length bias")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)
        for name in ("feature_mean", "feature_std"):
            val = getattr(self, name)
            if val is None:
                continue
            val = np.ascontiguousarray(np.asarray(val, dtype=np.float64))
            if val.shape != (w.shape[1],):
                raise ContractError(f"{name} must have one entry per feature dimension")
            object.__setattr__(self, name, val)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def _prepare(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise ContractError(
                f"features must be N x {self.n_features}, got {x.shape}")
        if self.feature_mean is not None:
            x = (x - self.feature_mean) / self.feature_std
        return x

    def predict_logits(self, features: np.ndarray) -> np.ndarray:
        x = self._prepare(features)
        return x @ self.weights.T + self.bias

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return softmax(self.predict_logits(features))

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.predict_logits(features).argmax(axis=1)


def loss_and_grads(weights: np.ndarray, bias: np.ndarray,
                   features: np.ndarray, labels: np.ndarray,
                   l2: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Regularized mean cross-entropy with analytic gradients.

    Returns (loss, d loss / d weights, d loss / d bias) for the batch. The
    L2 term penalizes the weights only, contributing 2 * l2 * W to the
    gradient.
    """
    n = features.shape[0]
    logits = features @ weights.T + bias
    probs = softmax(logits)
    logp = np.log(np.maximum(probs[np.arange(n), labels], 1e-300))
    loss = -logp.mean() + l2 * float(np.sum(weights ** 2))
    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    grad_w = delta.T @ features + 2.0 * l2 * weights
    grad_b = delta.sum(axis=0)
    return float(loss), grad_w, grad_b


def train(features: np.ndarray, labels: np.ndarray,
          spec: TrainSpec | None = None) -> tuple[LinearProbe, list[float]]:
    """Fit a probe; returns it with the per-epoch full-data loss history."""
    spec = spec or TrainSpec()
    x = np.ascontiguousarray(np.asarray(features, dtype=np.float64))
    y = np.asarray(labels)
    if x.ndim != 2:
        raise ContractError(f"features must be N x D, got {x.ndim} axes")
    if not np.issubdtype(y.dtype, np.integer):
        raise ContractError(f"labels must be integers, got {y.dtype}")
    y = y.astype(np.int64)
    if y.ndim != 1 or y.shape[0] != x.shape[0]:
        raise ContractError("labels must be a 1D array with one entry per feature row")
    if not np.isfinite(x).all():
        raise ContractError("features contain non-finite values")
    if y.min() < 0:
        raise ContractError("labels must be non-negative")
    n, d = x.shape
    k = int(y.max()) + 1
    if k < 2:
        raise ContractError("training needs at least two classes")
    if n < k:
        raise ContractError(f"need at least one sample per class, got {n} samples for {k} classes")

    mean = None
    std = None
    if spec.standardize:
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std = np.where(std == 0.0, 1.0, std)
        x = (x - mean) / std

    w = np.zeros((k, d), dtype=np.float64)
    b = np.zeros(k, dtype=np.float64)
    rng = np.random.default_rng(spec.seed)
    history = []
    for _ in range(spec.epochs):
        order = rng.permutation(n)
        for start in range(0, n, spec.batch_size):
            batch = order[start:start + spec.batch_size]
            _, gw, gb = loss_and_grads(w, b, x[batch], y[batch], spec.l2)
            w -= spec.learning_rate * gw
            b -= spec.learning_rate * gb
        epoch_loss, _, _ = loss_and_grads(w, b, x, y, spec.l2)
        history.append(epoch_loss)
    return LinearProbe(w, b, mean, std), history


def gradient_check(weights: np.ndarray, bias: np.ndarray,
                   features: np.ndarray, labels: np.ndarray,
                   l2: float, step: float = 1e-5) -> float:
    """Worst relative error between analytic and central-difference grads.

    Per coordinate: |analytic - numeric| / max(|analytic|, |numeric|, 1e-4).
    The floor keeps finite-difference noise on near-zero coordinates from
    dominating.
    """
    w = np.array(weights, dtype=np.float64)
    b = np.array(bias, dtype=np.float64)
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    _, grad_w, grad_b = loss_and_grads(w, b, x, y, l2)

    def numeric(arr, analytic):
        worst = 0.0
        flat = arr.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up, _, _ = loss_and_grads(w, b, x, y, l2)
            flat[i] = orig - step
            down, _, _ = loss_and_grads(w, b, x, y, l2)
            flat[i] = orig
            est = (up - down) / (2.0 * step)
            a = analytic.ravel()[i]
            err = abs(a - est) / max(abs(a), abs(est), 1e-4)
            worst = max(worst, err)
        return worst

    return max(numeric(w, grad_w), numeric(b, grad_b))


def save_probe(probe: LinearProbe, directory: str | Path,
               spec: TrainSpec | None = None) -> dict:
    """Write weights.npy, bias.npy and a probe.json sidecar; returns the sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_npy_file(directory / "weights.npy", probe.weights)
    write_npy_file(directory / "bias.npy", probe.bias)
    sidecar = {
        "n_classes": probe.n_classes,
        "n_features": probe.n_features,
        "standardize": probe.feature_mean is not None,
        "feature_mean": None if probe.feature_mean is None else probe.feature_mean.tolist(),
        "feature_std": None if probe.feature_std is None else probe.feature_std.tolist(),
        "train_spec": None if spec is None else spec.to_dict(),
    }
    (directory / "probe.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    return sidecar


def load_probe(directory: str | Path) -> LinearProbe:
    directory = Path(directory)
    sidecar = json.loads((directory / "probe.json").read_text())
    mean = sidecar.get("feature_mean")
    std = sidecar.get("feature_std")
    return LinearProbe(
        read_npy_file(directory / "weights.npy"),
        read_npy_file(directory / "bias.npy"),
        None if mean is None else np.asarray(mean, dtype=np.float64),
        None if std is None else np.asarray(std, dtype=np.float64),
    )
