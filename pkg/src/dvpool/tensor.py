"""Dense feature-map containers and axis-aligned region reductions.

Everything downstream (spatial pooling, cross-channel pooling, the pyramid
compositions) is built on two immutable value types:

``FeatureMap``
    A C-contiguous float64 tensor with the channel axis fixed at axis 0 and
    two or three trailing spatial axes, i.e. shape (C, H, W) or (C, D, H, W).

``FeatureVector``
    A flat float64 vector carrying provenance segments that record which
    pooling branch produced each contiguous span.

Reductions use a fixed summation algorithm (numpy's pairwise summation over
contiguous blocks), so repeated runs on the same platform are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class ContractError(ValueError):
    """Raised when an operation's input contract is violated."""


def _as_float64(data) -> np.ndarray:
    arr = np.asarray(data)
    if arr.dtype != np.float64:
        arr = arr.astype(np.float64)
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class FeatureMap:
    """Immutable dense tensor of shape (C, H, W) or (C, D, H, W).

    32-bit (and integer) input is widened to float64 on construction; the
    kernel itself is float64 throughout. All values must be finite.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = _as_float64(self.data)
        if arr.ndim not in (3, 4):
            raise ContractError(
                f"feature map must have 3 or 4 axes (C plus 2 or 3 spatial), got {arr.ndim}"
            )
        if any(s < 1 for s in arr.shape):
            raise ContractError(f"feature map dimensions must be positive, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ContractError("feature map contains non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def spatial_shape(self) -> tuple[int, ...]:
        return self.data.shape[1:]

    @property
    def spatial_rank(self) -> int:
        return self.data.ndim - 1


class Segment(NamedTuple):
    """Provenance span: which branch produced vector[offset:offset+length]."""

    name: str
    offset: int
    length: int


@dataclass(frozen=True)
class FeatureVector:
    """Flat pooled output with per-branch provenance.

    Segments must be contiguous, non-overlapping, non-empty, and cover the
    whole vector.
    """

    data: np.ndarray
    provenance: tuple[Segment, ...]

    def __post_init__(self):
        arr = _as_float64(self.data)
        if arr.ndim != 1:
            raise ContractError(f"feature vector must be 1D, got {arr.ndim} axes")
        segs = tuple(Segment(*s) for s in self.provenance)
        expected = 0
        for seg in segs:
            if seg.offset != expected:
                raise ContractError(
                    f"segment {seg.name!r} starts at {seg.offset}, expected {expected}"
                )
            if seg.length < 1:
                raise ContractError(f"segment {seg.name!r} is empty")
            expected += seg.length
        if expected != arr.size:
            raise ContractError(
                f"segments cover {expected} elements but vector has {arr.size}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "provenance", segs)

    @classmethod
    def single(cls, name: str, data) -> "FeatureVector":
        """Wrap a flat array as a one-segment vector."""
        arr = _as_float64(data).ravel()
        return cls(arr, (Segment(name, 0, arr.size),))

    def __len__(self) -> int:
        return self.data.size

    def segment(self, index: int) -> np.ndarray:
        """Read back the values of provenance segment ``index``."""
        seg = self.provenance[index]
        return self.data[seg.offset : seg.offset + seg.length]


def _check_range(name: str, lo: int, hi: int, extent: int) -> None:
    if not (0 <= lo < hi <= extent):
        raise ContractError(
            f"{name} range [{lo}, {hi}) invalid for extent {extent} "
            "(must be half-open, non-empty, within bounds)"
        )


def _region(x: FeatureMap, channels: tuple[int, int],
            spatial: Sequence[tuple[int, int]]) -> np.ndarray:
    c_lo, c_hi = channels
    _check_range("channel", c_lo, c_hi, x.channels)
    if len(spatial) != x.spatial_rank:
        raise ContractError(
            f"expected {x.spatial_rank} spatial ranges, got {len(spatial)}"
        )
    key: list[slice] = [slice(c_lo, c_hi)]
    for axis, (lo, hi) in enumerate(spatial):
        _check_range(f"spatial axis {axis}", lo, hi, x.spatial_shape[axis])
        key.append(slice(lo, hi))
    return x.data[tuple(key)]


def region_mean(x: FeatureMap, channels: tuple[int, int],
                spatial: Sequence[tuple[int, int]]) -> float:
    """Arithmetic mean of the axis-aligned block ``channels x spatial``.

    Ranges are half-open and must be non-empty and within bounds.
    """
    return float(np.mean(_region(x, channels, spatial)))


def region_max(x: FeatureMap, channels: tuple[int, int],
               spatial: Sequence[tuple[int, int]]) -> float:
    """Maximum of the axis-aligned block ``channels x spatial``."""
    return float(np.max(_region(x, channels, spatial)))


def concat(vs: Iterable[FeatureVector]) -> FeatureVector:
    """Concatenate vectors in order, carrying provenance with shifted offsets."""
    vs = list(vs)
    if not vs:
        raise ContractError("concat requires at least one vector")
    if len(vs) == 1:
        return vs[0]
    data = np.concatenate([v.data for v in vs])
    segments: list[Segment] = []
    offset = 0
    for v in vs:
        for seg in v.provenance:
            segments.append(Segment(seg.name, offset + seg.offset, seg.length))
        offset += v.data.size
    return FeatureVector(data, tuple(segments))
