"""Structured coverings of the time axis, moderate weights and BAPUs.

Every covering member is the image of the open unit interval ``(0, 1)``
under an affine map ``x -> scale * x + offset``. Coverings attached to a
signal carry a ``period`` and are read circularly, matching the transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CoveringError, DimensionError, ParameterError, SeparationError

__all__ = [
    "AffineMap",
    "StructuredCovering",
    "ModerateWeight",
    "Bapu",
    "covering_from_system",
    "amalgam_covering",
    "neighbor_sets",
    "check_admissible",
    "check_weight",
    "build_bapu",
    "bump",
]


@dataclass(frozen=True)
class AffineMap:
    scale: float
    offset: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ParameterError(f"affine scale must be positive, got {self.scale}")

    def __call__(self, x):
        return self.scale * np.asarray(x, dtype=float) + self.offset

    def inverse(self, y):
        return (np.asarray(y, dtype=float) - self.offset) / self.scale

    @property
    def interval(self) -> tuple[float, float]:
        return (self.offset, self.offset + self.scale)


@dataclass(frozen=True, eq=False)
class StructuredCovering:
    maps: tuple
    centers: np.ndarray
    period: int | None = None

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps:
            raise ParameterError("covering needs at least one member")
        centers = np.asarray(self.centers, dtype=float).reshape(-1)
        if centers.size != len(maps):
            raise DimensionError("one center per covering member")
        if self.period is not None and int(self.period) <= 0:
            raise ParameterError("period must be positive")
        centers.setflags(write=False)
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "centers", centers)

    @classmethod
    def from_intervals(cls, intervals, centers=None, period=None) -> "StructuredCovering":
        maps = tuple(AffineMap(float(r - l), float(l)) for l, r in intervals)
        if centers is None:
            centers = [0.5 * (l + r) for l, r in intervals]
        return cls(maps, centers, period)

    def __len__(self):
        return len(self.maps)

    @property
    def lefts(self) -> np.ndarray:
        return np.array([m.offset for m in self.maps])

    @property
    def rights(self) -> np.ndarray:
        return np.array([m.offset + m.scale for m in self.maps])

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return [m.interval for m in self.maps]

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "intervals": [[l, r] for l, r in self.intervals],
            "centers": [float(c) for c in self.centers],
        }


@dataclass(frozen=True)
class ModerateWeight:
    values: np.ndarray
    moderation_constant: float
    separation: float


@dataclass(frozen=True, eq=False)
class Bapu:
    """Partition of unity sampled on ``0..period-1``.

    Member ``n`` is stored on its support only: ``values[n][j]`` is the
    value at grid point ``(starts[n] + j) % period``.
    """

    starts: tuple
    values: tuple
    period: int

    def __len__(self):
        return len(self.values)

    def indices(self, n: int) -> np.ndarray:
        return (self.starts[n] + np.arange(self.values[n].size)) % self.period

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(self.period)
        np.add.at(out, self.indices(n), self.values[n])
        return out

    def total(self) -> np.ndarray:
        out = np.zeros(self.period)
        for n in range(len(self)):
            np.add.at(out, self.indices(n), self.values[n])
        return out


# ---------------------------------------------------------------------------
# constructors


def covering_from_system(system, c_star: float = 0.1) -> StructuredCovering:
    """Intervals ``(a_n - c M_n, a_n + (1 + c) M_n)`` around each window."""
    if not c_star > 0:
        raise ParameterError("c_star must be positive")
    maps = []
    centers = []
    for a, M in zip(system.positions, system.channels):
        a, M = float(a), float(M)
        maps.append(AffineMap((1.0 + 2.0 * c_star) * M, a - c_star * M))
        centers.append(a + M / 2.0)
    return StructuredCovering(tuple(maps), centers, int(system.length))


def amalgam_covering(T: int, step: int = 1, side: float = 1.5) -> StructuredCovering:
    """Translates of a centered interval of width ``side * step`` at ``k * step``.

    With unit step this is the covering whose decomposition spaces are the
    Wiener amalgams ``W(L^p, l^q_{w^s})``.
    """
    if side <= 1 or step <= 0 or T % step:
        raise ParameterError("need side > 1, step > 0 dividing T")
    ks = np.arange(0, T, step, dtype=float)
    maps = tuple(AffineMap(side * step, k - side * step / 2.0) for k in ks)
    return StructuredCovering(maps, ks, T)


# ---------------------------------------------------------------------------
# checks


def _shifts(cov: StructuredCovering) -> range:
    if cov.period is None:
        return range(0, 1)
    span = max(cov.rights.max(), 0.0) - min(cov.lefts.min(), 0.0)
    k = int(math.ceil(span / cov.period)) + 1
    return range(-k, k + 1)


def neighbor_sets(cov: StructuredCovering) -> list[list[int]]:
    """Indices ``n'`` whose interval meets interval ``n`` (open intervals)."""
    lefts, rights = cov.lefts, cov.rights
    K = len(cov)
    shifts = list(_shifts(cov))
    P = cov.period or 0
    ext_l = np.concatenate([lefts + s * P for s in shifts])
    ext_r = np.concatenate([rights + s * P for s in shifts])
    ext_id = np.tile(np.arange(K), len(shifts))
    order = np.argsort(ext_l, kind="stable")
    ext_l, ext_r, ext_id = ext_l[order], ext_r[order], ext_id[order]
    max_len = float((rights - lefts).max())
    out = []
    for n in range(K):
        lo = np.searchsorted(ext_l, lefts[n] - max_len, side="left")
        hi = np.searchsorted(ext_l, rights[n], side="left")
        cand = slice(lo, hi)
        hit = ext_r[cand] > lefts[n]
        out.append(sorted(set(ext_id[cand][hit].tolist()) | {n}))
    return out


def _coverage_counts(cov: StructuredCovering) -> np.ndarray:
    """Number of members whose open interval contains each grid point."""
    P = cov.period
    diff = np.zeros(P + 1, dtype=np.int64)
    for l, r in cov.intervals:
        first = math.floor(l) + 1
        last = math.ceil(r) - 1
        if last < first:
            continue
        n = last - first + 1
        full, rest = divmod(n, P)
        diff[0] += full
        diff[P] -= full
        if rest:
            s = first % P
            e = s + rest
            if e <= P:
                diff[s] += 1
                diff[e] -= 1
            else:
                diff[s] += 1
                diff[P] -= 1
                diff[0] += 1
                diff[e - P] -= 1
    return np.cumsum(diff[:-1])


def _find_gap(cov: StructuredCovering):
    if cov.period is not None:
        counts = _coverage_counts(cov)
        holes = np.flatnonzero(counts == 0)
        return int(holes[0]) if holes.size else None
    order = np.argsort(cov.lefts)
    reach = cov.rights[order[0]]
    for n in order[1:]:
        l = cov.lefts[n]
        if l >= reach:
            return float(reach)
        reach = max(reach, cov.rights[n])
    return None


def check_admissible(cov: StructuredCovering) -> int:
    """Return ``n0 = max_n |neighbors(n)|``; raise on a covering gap."""
    gap = _find_gap(cov)
    if gap is not None:
        raise CoveringError(f"covering leaves a gap at {gap}", location=gap)
    return max(len(s) for s in neighbor_sets(cov))


def check_weight(cov: StructuredCovering) -> ModerateWeight:
    """Weights ``1 + |x_n|`` with separation and moderation constants.

    ``moderation_constant`` is ``max_n sup/inf`` of ``1 + |x|`` over the
    closed interval ``n``.
    """
    centers = cov.centers
    if centers.size > 1:
        delta = float(np.min(np.diff(np.sort(centers))))
    else:
        delta = math.inf
    if delta <= 0:
        raise SeparationError("weight centers are not distinct (delta = 0)")
    l, r = cov.lefts, cov.rights
    sup = 1.0 + np.maximum(np.abs(l), np.abs(r))
    inf = 1.0 + np.where((l < 0) & (r > 0), 0.0, np.minimum(np.abs(l), np.abs(r)))
    values = 1.0 + np.abs(centers)
    values.setflags(write=False)
    return ModerateWeight(values, float(np.max(sup / inf)), delta)


# ---------------------------------------------------------------------------
# BAPU


def _smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def bump(t, plateau: float = 0.8):
    """Smooth profile on (0, 1): 1 on the centered plateau, 0 outside (0, 1)."""
    t = np.asarray(t, dtype=float)
    edge = 0.5 * (1.0 - plateau)
    # distance into the interval, measured from the nearer end
    d = np.minimum(t, 1.0 - t)
    return np.where(d >= edge, 1.0, _smooth_step(d / edge))


def _log_bump(t, plateau: float):
    """``log(bump(t))``, finite wherever the bump is mathematically positive."""
    t = np.asarray(t, dtype=float)
    edge = 0.5 * (1.0 - plateau)
    u = np.minimum(t, 1.0 - t) / edge
    inside = (u > 0) & (u < 1)
    us = np.where(inside, u, 0.5)
    with np.errstate(over="ignore"):
        z = 1.0 / us - 1.0 / (1.0 - us)
    out = np.where(inside, -np.logaddexp(0.0, z), 0.0)
    return np.where(u <= 0, -np.inf, out)


def build_bapu(cov: StructuredCovering, plateau: float = 0.8) -> Bapu:
    """``psi_n(x) = Phi(T_n^{-1} x) / sum_k Phi(T_k^{-1} x)`` on the grid."""
    if cov.period is None:
        raise ParameterError("BAPU sampling needs a covering attached to a signal grid")
    if not 0 < plateau < 1:
        raise ParameterError("plateau must lie in (0, 1)")
    P = int(cov.period)
    # work with log-profiles: near member ends the bump underflows to 0 even
    # though the normalized partition is well defined
    starts, logs = [], []
    top = np.full(P, -np.inf)
    for m in cov.maps:
        l, r = m.interval
        first = math.floor(l) + 1
        last = math.ceil(r) - 1
        if last < first:
            starts.append(0)
            logs.append(np.zeros(0))
            continue
        x = np.arange(first, last + 1, dtype=float)
        lphi = _log_bump(m.inverse(x), plateau)
        if x.size > P:
            # periodize members longer than the grid
            folded = np.full(P, -np.inf)
            np.logaddexp.at(folded, (x.astype(np.int64) - first) % P, lphi)
            lphi = folded
        starts.append(first % P)
        logs.append(lphi)
        # at most P entries after folding, so the indices are distinct
        idx = (first % P + np.arange(lphi.size)) % P
        top[idx] = np.maximum(top[idx], lphi)
    holes = np.flatnonzero(np.isneginf(top))
    if holes.size:
        raise CoveringError(
            f"partition of unity undefined: no member covers grid point {int(holes[0])}",
            location=int(holes[0]),
        )
    raw = []
    denom = np.zeros(P)
    for s, lphi in zip(starts, logs):
        idx = (s + np.arange(lphi.size)) % P
        phi = np.exp(lphi - top[idx])
        raw.append(phi)
        denom[idx] += phi
    values = []
    for s, phi in zip(starts, raw):
        idx = (s + np.arange(phi.size)) % P
        v = phi / denom[idx]
        v.setflags(write=False)
        values.append(v)
    return Bapu(tuple(starts), tuple(values), P)
