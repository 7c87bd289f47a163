"""Independent brute-force references the tests compare against.

Everything here is written straight from the operator definitions with
explicit index enumeration and Python-level arithmetic, deliberately
sharing no code with the package implementation.
"""

import functools
import itertools
import math
from fractions import Fraction

import numpy as np


@functools.lru_cache(maxsize=None)
def bin_edges(extent: int, n: int) -> list[tuple[int, int]]:
    # bin i covers [floor(i*extent/n), ceil((i+1)*extent/n)); exact rational
    # arithmetic so the reference cannot drift for any integer inputs
    return [
        (math.floor(Fraction(i * extent, n)), math.ceil(Fraction((i + 1) * extent, n)))
        for i in range(n)
    ]


def _reduce(vals: list[float], op: str) -> float:
    if op == "max":
        return max(vals)
    return sum(vals) / len(vals)


def naive_sp(x: np.ndarray, n: int, op: str = "avg") -> np.ndarray:
    spatial = x.shape[1:]
    r = len(spatial)
    edges = [bin_edges(s, n) for s in spatial]
    out = np.empty((x.shape[0],) + (n,) * r, dtype=np.float64)
    for c in range(x.shape[0]):
        for idx in itertools.product(range(n), repeat=r):
            ranges = [range(*edges[a][idx[a]]) for a in range(r)]
            vals = [float(x[(c,) + pos]) for pos in itertools.product(*ranges)]
            out[(c,) + idx] = _reduce(vals, op)
    return out


def naive_ccp(x: np.ndarray, m: int, op: str = "avg") -> np.ndarray:
    out = np.empty((m,) + x.shape[1:], dtype=np.float64)
    for b, (lo, hi) in enumerate(bin_edges(x.shape[0], m)):
        for pos in itertools.product(*[range(s) for s in x.shape[1:]]):
            vals = [float(x[(ch,) + pos]) for ch in range(lo, hi)]
            out[(b,) + pos] = _reduce(vals, op)
    return out


def naive_sp_pyramid(x: np.ndarray, levels, op: str = "avg") -> np.ndarray:
    return np.concatenate([naive_sp(x, n, op).ravel() for n in levels])


def naive_ccp_pyramid(x: np.ndarray, levels, op: str = "avg") -> np.ndarray:
    return np.concatenate([naive_ccp(x, m, op).ravel() for m in levels])


def naive_dvpp(x: np.ndarray, variant: str, sp=(), ccp=(), aux=(),
               op: str = "avg") -> np.ndarray:
    if variant == "sp-only":
        return naive_sp_pyramid(x, sp, op)
    if variant == "ccp-only":
        return naive_ccp_pyramid(x, ccp, op)
    if variant == "sc-par":
        return np.concatenate([naive_sp_pyramid(x, sp, op),
                               naive_ccp_pyramid(x, ccp, op)])
    parts = []
    if variant == "twins":
        for n in sp:
            for m in ccp:
                parts.append(naive_sp(naive_ccp(x, m, op), n, op).ravel())
        parts.append(naive_ccp_pyramid(x, ccp, op))
        parts.append(naive_sp_pyramid(x, sp, op))
        return np.concatenate(parts)
    for n in sp:
        for m in ccp:
            parts.append(naive_ccp(naive_sp(x, n, op), m, op).ravel())
    if variant == "sc-s-ser":
        parts.append(naive_sp_pyramid(x, aux, op))
    elif variant == "sc-c-ser":
        parts.append(naive_ccp_pyramid(x, aux, op))
    return np.concatenate(parts)


def naive_ece(probs: np.ndarray, labels: np.ndarray, n_bins: int) -> float:
    """Per-sample linear-scan grouping, straight from the ECE definition."""
    n = probs.shape[0]
    conf = [float(row.max()) for row in probs]
    pred = [int(row.argmax()) for row in probs]
    edges = [i / n_bins for i in range(n_bins + 1)]

    def owner(c: float) -> int:
        for b in range(n_bins):
            if c < edges[b + 1]:
                return b
        return n_bins - 1

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(owner(conf[i]), []).append(i)
    total = 0.0
    for b in sorted(groups):
        members = groups[b]
        n_correct = sum(1 for i in members if pred[i] == int(labels[i]))
        acc = n_correct / len(members)
        mean_conf = float(np.mean(np.array([conf[i] for i in members])))
        total += (len(members) / n) * abs(acc - mean_conf)
    return total
