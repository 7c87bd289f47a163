"""Synthetic dual-view datasets with controlled class evidence.

Classes come in pairs. Both members of pair j share a per-channel
signature s_j (zero-mean over channels, scaled by beta) that is added
uniformly across all spatial positions; the two members differ only in a
spatial template (zero-mean over positions, scaled by alpha) added
identically to every channel. Even-indexed classes use one template,
odd-indexed classes the other, so the templates carry exactly one bit:
within-pair parity.

By construction, channel means (GAP-style features) see only the pair
signature and cannot separate the two classes of a pair, while
channel-averaged maps (CAP-style features) see only the parity template
and cannot separate pairs. Features that combine both views separate all
K classes.

Template and signature draws are quantized to a 2**-10 grid before mean
centering; with power-of-two axis lengths every intermediate is an exact
dyadic float, so the zero-mean constraints and the noise-free pooled
equalities hold bitwise, not just approximately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import ContractError

_SPEC_KEYS = ("classes", "channels", "height", "width", "per_class",
              "alpha", "beta", "sigma", "seed")


@dataclass(frozen=True)
class SynthSpec:
    """Generator parameters."""

    classes: int = 4
    channels: int = 16
    height: int = 8
    width: int = 8
    per_class: int = 100
    alpha: float = 1.0
    beta: float = 1.0
    sigma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.classes < 2 or self.classes % 2 != 0:
            raise ContractError(f"classes must be even and at least 2, got {self.classes}")
        for name in ("channels", "height", "width", "per_class"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be positive, got {getattr(self, name)}")
        if self.sigma < 0:
            raise ContractError(f"sigma must be non-negative, got {self.sigma}")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in _SPEC_KEYS}

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        unknown = set(d) - set(_SPEC_KEYS)
        if unknown:
            raise ContractError(f"unknown generator-spec keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class SynthResult:
    """Generated dataset plus the manifest that reproduces it."""

    features: np.ndarray  # (N, C, H, W)
    labels: np.ndarray  # (N,)
    train_indices: np.ndarray
    test_indices: np.ndarray
    manifest: dict


def _centered(draw: np.ndarray) -> np.ndarray:
    # Quantize to a dyadic grid so the subtracted mean is exact for
    # power-of-two element counts.
    q = np.round(draw * 1024.0) / 1024.0
    return q - q.mean()


def generate(spec: SynthSpec) -> SynthResult:
    """Build the dataset; deterministic given ``spec.seed``.

    Noise is drawn from one counter-based substream per sample, so sample
    i's content never depends on how many other samples exist or on fill
    order.
    """
    k, c, h, w = spec.classes, spec.channels, spec.height, spec.width
    n = k * spec.per_class
    root = np.random.SeedSequence(spec.seed)
    signal_ss, split_ss, noise_ss = root.spawn(3)

    signal_rng = np.random.Generator(np.random.Philox(signal_ss))
    parity_templates = [_centered(signal_rng.standard_normal((h, w))) for _ in range(2)]
    signatures = [_centered(signal_rng.standard_normal(c)) for _ in range(k // 2)]
    templates = [parity_templates[cls % 2] for cls in range(k)]

    class_means = np.empty((k, c, h, w), dtype=np.float64)
    for cls in range(k):
        class_means[cls] = (spec.alpha * templates[cls][np.newaxis, :, :]
                            + spec.beta * signatures[cls // 2][:, np.newaxis, np.newaxis])

    labels = np.repeat(np.arange(k, dtype=np.int64), spec.per_class)
    features = np.empty((n, c, h, w), dtype=np.float64)
    for i, child in enumerate(noise_ss.spawn(n)):
        noise = np.random.Generator(np.random.Philox(child)).standard_normal((c, h, w))
        features[i] = class_means[labels[i]] + spec.sigma * noise

    split_rng = np.random.Generator(np.random.Philox(split_ss))
    n_train = max(1, (4 * spec.per_class) // 5)
    train_parts = []
    test_parts = []
    for cls in range(k):
        block = cls * spec.per_class + split_rng.permutation(spec.per_class)
        train_parts.append(block[:n_train])
        test_parts.append(block[n_train:])
    train_idx = np.sort(np.concatenate(train_parts)).astype(np.int64)
    test_idx = np.sort(np.concatenate(test_parts)).astype(np.int64)

    manifest = {
        "spec": spec.to_dict(),
        "templates": [t.tolist() for t in templates],
        "signatures": [s.tolist() for s in signatures],
        "train_indices": train_idx.tolist(),
        "test_indices": test_idx.tolist(),
    }
    for arr in (features, labels, train_idx, test_idx):
        arr.flags.writeable = False
    return SynthResult(features, labels, train_idx, test_idx, manifest)
