"""Classification and confidence-calibration metrics.

Operates on a :class:`PredictionSet`: an (N, K) matrix of class
probabilities plus N integer labels. Predicted classes are the per-row
argmax with ties broken toward the smallest class index.

Classification metrics: accuracy, balanced accuracy (mean per-class recall
over classes present in the labels), macro F1 (mean per-class F1 over all K
classes, F1 = 0 where precision + recall = 0), and Cohen's kappa (unweighted
by default, quadratic weighting available).

Calibration metrics: expected calibration error over B equal-width
confidence bins (lower-closed, the final bin right-closed), the multiclass
Brier score sum(p_k - onehot_k)^2 averaged over samples, and post-hoc
temperature scaling fitted by golden-section search on the mean negative
log-likelihood.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .tensor import ContractError

ROW_SUM_TOL = 1e-6


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise exp-normalize with max subtraction; rows sum to 1."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2:
        raise ContractError(f"logits must be N x K, got {logits.ndim} axes")
    if not np.isfinite(logits).all():
        raise ContractError("logits contain non-finite values")
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


@dataclass(frozen=True)
class PredictionSet:
    """Per-sample class probabilities with ground-truth labels."""

    probs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        probs = np.ascontiguousarray(np.asarray(self.probs, dtype=np.float64))
        labels = np.ascontiguousarray(np.asarray(self.labels))
        if probs.ndim != 2:
            raise ContractError(f"probs must be N x K, got {probs.ndim} axes")
        n, k = probs.shape
        if n < 1 or k < 2:
            raise ContractError(f"need N >= 1 samples and K >= 2 classes, got {probs.shape}")
        if not np.isfinite(probs).all():
            raise ContractError("probs contain non-finite values")
        if probs.min() < 0:
            raise ContractError("probs must be non-negative")
        sums = probs.sum(axis=1)
        worst = np.abs(sums - 1.0).max()
        if worst > ROW_SUM_TOL:
            raise ContractError(f"probability rows must sum to 1 (worst gap {worst:.2e})")
        if labels.ndim != 1 or labels.shape[0] != n:
            raise ContractError("labels must be a 1D array with one entry per row")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ContractError(f"labels must be integers, got {labels.dtype}")
        labels = labels.astype(np.int64)
        if labels.min() < 0 or labels.max() >= k:
            raise ContractError(f"labels must lie in [0, {k})")
        probs.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_logits(cls, logits: np.ndarray, labels: np.ndarray) -> "PredictionSet":
        return cls(softmax(logits), labels)

    @property
    def n_samples(self) -> int:
        return self.probs.shape[0]

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]

    @property
    def predicted(self) -> np.ndarray:
        """Argmax class per row; ties go to the smallest index."""
        return self.probs.argmax(axis=1)

    @property
    def confidence(self) -> np.ndarray:
        return self.probs.max(axis=1)


def confusion_matrix(p: PredictionSet) -> np.ndarray:
    """K x K counts, rows = true class, columns = predicted class."""
    k = p.n_classes
    mat = np.zeros((k, k), dtype=np.int64)
    np.add.at(mat, (p.labels, p.predicted), 1)
    return mat


def accuracy(p: PredictionSet) -> float:
    return float(np.mean(p.predicted == p.labels))


def balanced_accuracy(p: PredictionSet) -> float:
    mat = confusion_matrix(p)
    support = mat.sum(axis=1)
    present = support > 0
    recall = mat.diagonal()[present] / support[present]
    return float(recall.mean())


def macro_f1(p: PredictionSet) -> float:
    mat = confusion_matrix(p)
    tp = mat.diagonal().astype(np.float64)
    support = mat.sum(axis=1)
    predicted = mat.sum(axis=0)
    with np.errstate(invalid="ignore"):
        recall = np.where(support > 0, tp / np.maximum(support, 1), 0.0)
        precision = np.where(predicted > 0, tp / np.maximum(predicted, 1), 0.0)
    denom = precision + recall
    f1 = np.where(denom > 0, 2.0 * precision * recall / np.maximum(denom, 1e-300), 0.0)
    return float(f1.mean())


def cohen_kappa(p: PredictionSet, weighting: str = "unweighted") -> float:
    """Chance-corrected agreement between labels and predictions.

    ``weighting`` is ``"unweighted"`` or ``"quadratic"``. When the chance
    agreement is total (both marginals concentrated on a single class) kappa
    is undefined; 0 is returned with a warning.
    """
    if weighting not in ("unweighted", "quadratic"):
        raise ContractError(f"kappa weighting must be 'unweighted' or 'quadratic', got {weighting!r}")
    mat = confusion_matrix(p).astype(np.float64)
    n = mat.sum()
    observed = mat / n
    expected = np.outer(mat.sum(axis=1), mat.sum(axis=0)) / (n * n)
    k = p.n_classes
    idx = np.arange(k, dtype=np.float64)
    if weighting == "quadratic":
        weights = np.subtract.outer(idx, idx) ** 2 / (k - 1) ** 2
    else:
        weights = 1.0 - np.eye(k)
    chance = float((weights * expected).sum())
    if chance == 0.0:
        warnings.warn("kappa undefined: marginals concentrated on one class; returning 0")
        return 0.0
    return float(1.0 - (weights * observed).sum() / chance)


class BinStats(NamedTuple):
    """One reliability-table row."""

    lower: float
    upper: float
    count: int
    mean_confidence: float
    accuracy: float


@dataclass(frozen=True)
class ReliabilityTable:
    """Per-bin calibration statistics plus the resulting scalar ECE."""

    bins: tuple[BinStats, ...]
    ece: float
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "ece": self.ece,
            "n": self.n_samples,
            "bins": [
                {
                    "lower": b.lower,
                    "upper": b.upper,
                    "count": b.count,
                    "confidence": b.mean_confidence,
                    "accuracy": b.accuracy,
                }
                for b in self.bins
            ],
        }


def bin_index(confidence: np.ndarray, n_bins: int) -> np.ndarray:
    """Assign confidences to equal-width bins over [0, 1].

    Bin b covers [b/B, (b+1)/B); the final bin also includes its right edge
    (and anything above, covering rows whose sum is 1 within tolerance).
    """
    edges = np.arange(n_bins + 1, dtype=np.float64) / n_bins
    idx = np.searchsorted(edges, confidence, side="right") - 1
    return np.clip(idx, 0, n_bins - 1)


def ece(p: PredictionSet, n_bins: int = 15) -> ReliabilityTable:
    """Expected calibration error with a full reliability table.

    ECE = sum over occupied bins of (count/N) * |accuracy - confidence|;
    empty bins appear in the table with count 0 and zero statistics.
    """
    if n_bins < 1:
        raise ContractError(f"need at least one bin, got {n_bins}")
    conf = p.confidence
    correct = (p.predicted == p.labels).astype(np.float64)
    idx = bin_index(conf, n_bins)
    rows = []
    total = 0.0
    n = p.n_samples
    for b in range(n_bins):
        mask = idx == b
        count = int(mask.sum())
        lower = b / n_bins
        upper = (b + 1) / n_bins
        if count == 0:
            rows.append(BinStats(lower, upper, 0, 0.0, 0.0))
            continue
        mean_conf = float(conf[mask].mean())
        acc = float(correct[mask].mean())
        rows.append(BinStats(lower, upper, count, mean_conf, acc))
        total += (count / n) * abs(acc - mean_conf)
    return ReliabilityTable(tuple(rows), float(total), n)


def brier(p: PredictionSet) -> float:
    """Multiclass Brier score: mean over samples of sum_k (p_k - onehot_k)^2."""
    onehot = np.zeros_like(p.probs)
    onehot[np.arange(p.n_samples), p.labels] = 1.0
    return float(np.mean(np.sum((p.probs - onehot) ** 2, axis=1)))


@dataclass(frozen=True)
class TemperatureFit:
    """Result of fitting a scalar temperature to logits."""

    temperature: float
    nll: float
    degenerate: bool = False
    at_boundary: bool = False


_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def mean_nll(logits: np.ndarray, labels: np.ndarray, temperature: float = 1.0) -> float:
    """Mean negative log-likelihood of labels under softmax(logits / T)."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    logp = _log_softmax(logits / temperature)
    return float(-logp[np.arange(logits.shape[0]), labels].mean())


def temperature_fit(logits: np.ndarray, labels: np.ndarray,
                    lower: float = 0.05, upper: float = 20.0,
                    tol: float = 1e-4) -> TemperatureFit:
    """Fit the temperature minimizing mean NLL by golden-section search.

    Constant logit rows make the NLL independent of T; T = 1 is returned
    with ``degenerate`` set. A minimum pinned against the search interval is
    snapped to the bound with ``at_boundary`` set.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2 or logits.shape[0] < 1:
        raise ContractError("temperature fit needs an N x K logit matrix with N >= 1")
    if not np.isfinite(logits).all():
        raise ContractError("logits contain non-finite values")
    if np.all(logits.max(axis=1) == logits.min(axis=1)):
        return TemperatureFit(1.0, mean_nll(logits, labels, 1.0), degenerate=True)

    lo, hi = lower, upper
    a = hi - _GOLDEN * (hi - lo)
    b = lo + _GOLDEN * (hi - lo)
    fa = mean_nll(logits, labels, a)
    fb = mean_nll(logits, labels, b)
    while hi - lo > tol:
        if fa <= fb:
            hi, b, fb = b, a, fa
            a = hi - _GOLDEN * (hi - lo)
            fa = mean_nll(logits, labels, a)
        else:
            lo, a, fa = a, b, fb
            b = lo + _GOLDEN * (hi - lo)
            fb = mean_nll(logits, labels, b)
    t = 0.5 * (lo + hi)
    if t - lower <= 2.0 * tol:
        return TemperatureFit(lower, mean_nll(logits, labels, lower), at_boundary=True)
    if upper - t <= 2.0 * tol:
        return TemperatureFit(upper, mean_nll(logits, labels, upper), at_boundary=True)
    return TemperatureFit(float(t), mean_nll(logits, labels, t))
