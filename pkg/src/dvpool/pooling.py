"""Spatial and cross-channel pyramid pooling, and their dual-view compositions.

Two operator families act on a feature map X of shape (C, *spatial):

* spatial pooling ``sp_pool``: each spatial axis of extent S is partitioned
  into n adaptive bins and reduced per channel, giving a (C, n, ..., n) map.
  Level 1 with the average reduction is global average pooling (GAP).
* cross-channel pooling ``ccp_pool``: the channel axis is partitioned into m
  adaptive bins and reduced per spatial position, giving an (m, *spatial)
  map. Level 1 with the average reduction is cross-channel average pooling
  (CAP).

Adaptive bin i of an axis with extent S spans ``[floor(i*S/n), ceil((i+1)*S/n))``.
Bins always cover the axis; when n does not divide S they have unequal sizes,
and when n > S they overlap (an index may appear in two bins).

``pyramid`` concatenates several levels of one family (SPP / CCPP), and
``dvpp`` evaluates the dual-view compositions of both families:

* ``sc-ser``    CCP(SP(X))                      serial
* ``sc-s-ser``  [CCP(SP(X)), SP(X)]             serial plus a spatial branch
* ``sc-c-ser``  [CCP(SP(X)), CCP(X)]            serial plus a cross-channel branch
* ``sc-par``    [SP(X), CCP(X)]                 parallel
* ``twins``     [SP(CCP(X)), CCP(X), SP(X)]     reversed serial plus both branches

Serial compositions pair every spatial level n with every channel level m in
lexicographic (n, m) order; parallel branches are plain pyramids. All outputs
are flattened row-major and concatenated with one provenance segment per
branch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Literal, Sequence, Union

import numpy as np

from .tensor import ContractError, FeatureMap, FeatureVector, concat

PoolAxis = Literal["spatial", "channel"]


class Reduction(Enum):
    """Reduction applied inside each pooling bin."""

    AVERAGE = "avg"
    MAX = "max"


class Variant(Enum):
    """Composition variant evaluated by :func:`dvpp`."""

    SP_ONLY = "sp-only"
    CCP_ONLY = "ccp-only"
    SC_SER = "sc-ser"
    SC_S_SER = "sc-s-ser"
    SC_C_SER = "sc-c-ser"
    SC_PAR = "sc-par"
    TWINS = "twins"


@dataclass(frozen=True)
class PyramidLevels:
    """Ordered set of pooling levels; empty means the operator is absent."""

    levels: tuple[int, ...] = ()

    def __post_init__(self):
        levels = tuple(int(n) for n in self.levels)
        if any(n < 1 for n in levels):
            raise ContractError(f"pyramid levels must be >= 1, got {levels}")
        if len(set(levels)) != len(levels):
            raise ContractError(f"pyramid levels must be distinct, got {levels}")
        object.__setattr__(self, "levels", tuple(sorted(levels)))

    @classmethod
    def of(cls, *levels: int) -> "PyramidLevels":
        return cls(levels)

    def __iter__(self):
        return iter(self.levels)

    def __len__(self) -> int:
        return len(self.levels)

    def __bool__(self) -> bool:
        return bool(self.levels)


NO_LEVELS = PyramidLevels(())

_CONFIG_KEYS = ("variant", "sp", "ccp", "aux", "reduction")


@dataclass(frozen=True)
class DvppConfig:
    """Declarative description of one pooling composition.

    ``aux_levels`` holds the extra SP branch of ``sc-s-ser`` or the extra CCP
    branch of ``sc-c-ser`` and must be empty for every other variant.
    """

    variant: Variant
    sp_levels: PyramidLevels = NO_LEVELS
    ccp_levels: PyramidLevels = NO_LEVELS
    aux_levels: PyramidLevels = NO_LEVELS
    reduction: Reduction = Reduction.AVERAGE

    def __post_init__(self):
        v = self.variant
        if v in (Variant.SC_SER, Variant.SC_S_SER, Variant.SC_C_SER,
                 Variant.SC_PAR, Variant.TWINS):
            if not self.sp_levels or not self.ccp_levels:
                raise ContractError(f"{v.value} requires non-empty sp and ccp levels")
        elif v is Variant.SP_ONLY:
            if not self.sp_levels:
                raise ContractError("sp-only requires non-empty sp levels")
            if self.ccp_levels:
                raise ContractError("sp-only takes no ccp levels")
        elif v is Variant.CCP_ONLY:
            if not self.ccp_levels:
                raise ContractError("ccp-only requires non-empty ccp levels")
            if self.sp_levels:
                raise ContractError("ccp-only takes no sp levels")
        needs_aux = v in (Variant.SC_S_SER, Variant.SC_C_SER)
        if needs_aux and not self.aux_levels:
            raise ContractError(f"{v.value} requires non-empty aux levels")
        if not needs_aux and self.aux_levels:
            raise ContractError(f"{v.value} takes no aux levels")

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "sp": list(self.sp_levels),
            "ccp": list(self.ccp_levels),
            "aux": list(self.aux_levels),
            "reduction": self.reduction.value,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DvppConfig":
        if not isinstance(doc, dict):
            raise ContractError("pooling config must be a JSON object")
        unknown = set(doc) - set(_CONFIG_KEYS)
        if unknown:
            raise ContractError(f"unknown pooling config keys: {sorted(unknown)}")
        if "variant" not in doc:
            raise ContractError("pooling config requires a 'variant' key")
        try:
            variant = Variant(doc["variant"])
        except ValueError:
            raise ContractError(
                f"unknown variant {doc['variant']!r}; expected one of "
                f"{[v.value for v in Variant]}"
            ) from None
        try:
            reduction = Reduction(doc.get("reduction", "avg"))
        except ValueError:
            raise ContractError(
                f"unknown reduction {doc['reduction']!r}; expected 'avg' or 'max'"
            ) from None
        return cls(
            variant=variant,
            sp_levels=PyramidLevels(doc.get("sp", ())),
            ccp_levels=PyramidLevels(doc.get("ccp", ())),
            aux_levels=PyramidLevels(doc.get("aux", ())),
            reduction=reduction,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DvppConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ContractError(f"invalid pooling config JSON: {exc}") from None
        return cls.from_dict(doc)


#: Serial composition at the recommended setting: SP level 3 into CCP level 4.
SC_SER_DEFAULT = DvppConfig(Variant.SC_SER, PyramidLevels.of(3), PyramidLevels.of(4))

#: Serial-plus-CCP composition at the recommended setting: SP 4, CCP 2, aux CCP 3.
SC_C_SER_DEFAULT = DvppConfig(
    Variant.SC_C_SER, PyramidLevels.of(4), PyramidLevels.of(2), PyramidLevels.of(3)
)


def _bin_bounds(extent: int, n: int) -> list[tuple[int, int]]:
    # Adaptive rule: bin i covers [floor(i*extent/n), ceil((i+1)*extent/n)).
    return [
        ((i * extent) // n, ((i + 1) * extent + n - 1) // n)
        for i in range(n)
    ]


def _pool_axis(arr: np.ndarray, axis: int, n: int, reduction: Reduction) -> np.ndarray:
    """Reduce one axis into n adaptive bins (sum for AVERAGE, max for MAX)."""
    bounds = _bin_bounds(arr.shape[axis], n)
    index = [slice(None)] * arr.ndim
    pieces = []
    for lo, hi in bounds:
        index[axis] = slice(lo, hi)
        block = arr[tuple(index)]
        if reduction is Reduction.AVERAGE:
            pieces.append(block.sum(axis=axis, keepdims=True))
        else:
            pieces.append(block.max(axis=axis, keepdims=True))
    return np.concatenate(pieces, axis=axis)


def _bin_counts(extent: int, n: int) -> np.ndarray:
    return np.array([hi - lo for lo, hi in _bin_bounds(extent, n)], dtype=np.float64)


MapLike = Union[FeatureMap, np.ndarray]


def _as_map(x: MapLike) -> FeatureMap:
    return x if isinstance(x, FeatureMap) else FeatureMap(x)


def sp_pool(x: MapLike, n: int, reduction: Reduction = Reduction.AVERAGE) -> FeatureMap:
    """Pool every spatial axis into n adaptive bins, per channel.

    Output shape is (C, n, ..., n) with one n per spatial axis. For n == 1
    and the average reduction this is exactly GAP: the per-channel mean over
    all spatial positions.
    """
    if n < 1:
        raise ContractError(f"spatial pooling level must be >= 1, got {n}")
    x = _as_map(x)
    out = x.data
    for axis in range(1, x.data.ndim):
        out = _pool_axis(out, axis, n, reduction)
    if reduction is Reduction.AVERAGE:
        counts = np.ones((), dtype=np.float64)
        for extent in x.spatial_shape:
            counts = np.multiply.outer(counts, _bin_counts(extent, n))
        out = out / counts[np.newaxis]
    return FeatureMap(out)


def ccp_pool(x: MapLike, m: int, reduction: Reduction = Reduction.AVERAGE) -> FeatureMap:
    """Pool the channel axis into m adaptive bins, per spatial position.

    Output shape is (m, *spatial). For m == 1 and the average reduction this
    is exactly CAP: the cross-channel mean at every spatial position.
    """
    if m < 1:
        raise ContractError(f"channel pooling level must be >= 1, got {m}")
    x = _as_map(x)
    out = _pool_axis(x.data, 0, m, reduction)
    if reduction is Reduction.AVERAGE:
        counts = _bin_counts(x.channels, m)
        out = out / counts.reshape((m,) + (1,) * x.spatial_rank)
    return FeatureMap(out)


def pyramid(x: MapLike, levels: PyramidLevels, axis: PoolAxis,
            reduction: Reduction = Reduction.AVERAGE) -> FeatureVector:
    """Multi-level pooling along one view, flattened and concatenated.

    Levels are applied in ascending order; each pooled map is flattened
    row-major (channel-major then spatial for the spatial view, group-major
    then spatial for the channel view) and contributes one provenance
    segment. Output length: spatial view C * sum(n^r); channel view
    sum(m) * prod(spatial).
    """
    if axis not in ("spatial", "channel"):
        raise ContractError(f"pooling axis must be 'spatial' or 'channel', got {axis!r}")
    if not levels:
        raise ContractError("pyramid requires at least one level")
    x = _as_map(x)
    parts = []
    for n in levels:
        if axis == "spatial":
            pooled = sp_pool(x, n, reduction)
            name = f"sp:{n}"
        else:
            pooled = ccp_pool(x, n, reduction)
            name = f"ccp:{n}"
        parts.append(FeatureVector.single(name, pooled.data.ravel()))
    return concat(parts)


def _serial_pairs(cfg: DvppConfig) -> Iterable[tuple[int, int]]:
    # Full cross product, lexicographic in (n, m); the recommended configs are
    # singleton x singleton so this degenerates to a single pair.
    for n in cfg.sp_levels:
        for m in cfg.ccp_levels:
            yield n, m


def dvpp(x: MapLike, cfg: DvppConfig) -> FeatureVector:
    """Evaluate the configured composition on one feature map.

    Branches appear in the order the composition is written: serial pairs
    first (for the serial variants), then the auxiliary or parallel pyramid
    branches. Every branch gets a provenance segment.
    """
    x = _as_map(x)
    red = cfg.reduction
    if cfg.variant is Variant.SP_ONLY:
        return pyramid(x, cfg.sp_levels, "spatial", red)
    if cfg.variant is Variant.CCP_ONLY:
        return pyramid(x, cfg.ccp_levels, "channel", red)

    if cfg.variant is Variant.SC_PAR:
        return concat([
            pyramid(x, cfg.sp_levels, "spatial", red),
            pyramid(x, cfg.ccp_levels, "channel", red),
        ])

    parts: list[FeatureVector] = []
    if cfg.variant is Variant.TWINS:
        for n, m in _serial_pairs(cfg):
            pooled = sp_pool(ccp_pool(x, m, red), n, red)
            parts.append(FeatureVector.single(f"ccp{m}>sp{n}", pooled.data.ravel()))
        parts.append(pyramid(x, cfg.ccp_levels, "channel", red))
        parts.append(pyramid(x, cfg.sp_levels, "spatial", red))
        return concat(parts)

    for n, m in _serial_pairs(cfg):
        pooled = ccp_pool(sp_pool(x, n, red), m, red)
        parts.append(FeatureVector.single(f"sp{n}>ccp{m}", pooled.data.ravel()))
    if cfg.variant is Variant.SC_S_SER:
        parts.append(pyramid(x, cfg.aux_levels, "spatial", red))
    elif cfg.variant is Variant.SC_C_SER:
        parts.append(pyramid(x, cfg.aux_levels, "channel", red))
    return concat(parts)


def _check_shape(shape: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    shape = tuple(int(s) for s in shape)
    if len(shape) not in (3, 4):
        raise ContractError(f"feature-map shape must have 3 or 4 axes, got {shape}")
    if any(s < 1 for s in shape):
        raise ContractError(f"feature-map dimensions must be positive, got {shape}")
    return shape[0], shape[1:]


def output_len(cfg: DvppConfig, shape: Sequence[int]) -> int:
    """Exact length :func:`dvpp` would produce for a map of this shape."""
    channels, spatial = _check_shape(shape)
    r = len(spatial)
    positions = int(np.prod(spatial))
    sp_len = channels * sum(n**r for n in cfg.sp_levels)
    ccp_len = sum(cfg.ccp_levels) * positions
    serial_len = sum(m * n**r for n in cfg.sp_levels for m in cfg.ccp_levels)

    if cfg.variant is Variant.SP_ONLY:
        return sp_len
    if cfg.variant is Variant.CCP_ONLY:
        return ccp_len
    if cfg.variant is Variant.SC_SER:
        return serial_len
    if cfg.variant is Variant.SC_S_SER:
        return serial_len + channels * sum(n**r for n in cfg.aux_levels)
    if cfg.variant is Variant.SC_C_SER:
        return serial_len + sum(cfg.aux_levels) * positions
    if cfg.variant is Variant.SC_PAR:
        return sp_len + ccp_len
    return serial_len + ccp_len + sp_len  # twins


def mixed_pool(x: MapLike) -> FeatureVector:
    """Global average and global max features side by side, length 2C."""
    x = _as_map(x)
    gap = sp_pool(x, 1, Reduction.AVERAGE).data.ravel()
    gmp = sp_pool(x, 1, Reduction.MAX).data.ravel()
    return concat([FeatureVector.single("gap", gap), FeatureVector.single("gmp", gmp)])


def pool_batch(maps: np.ndarray, cfg: DvppConfig, threads: int = 1) -> np.ndarray:
    """Pool a batch of feature maps into an (N, L) float64 matrix.

    ``maps`` has one leading sample axis over per-sample maps of rank 3 or 4.
    Samples are independent, so the work parallelizes across a thread pool;
    rows are written by sample index and the result does not depend on the
    thread count.
    """
    arr = np.asarray(maps)
    if arr.ndim not in (4, 5):
        raise ContractError(
            f"batch must be N x (C, H, W) or N x (C, D, H, W), got {arr.ndim} axes"
        )
    n_samples = arr.shape[0]
    if n_samples < 1:
        raise ContractError("batch must contain at least one sample")
    length = output_len(cfg, arr.shape[1:])
    out = np.empty((n_samples, length), dtype=np.float64)

    def fill(i: int) -> None:
        out[i] = dvpp(FeatureMap(arr[i]), cfg).data

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(n_samples)))
    else:
        for i in range(n_samples):
            fill(i)
    return out
