"""Painless nonstationary Gabor systems, their frame diagonal and dual systems.

A system is a list of real windows ``g_n`` with a first-tap position
``a_n`` and a channel count ``M_n``; its atoms are

    g_{m,n}(l) = g_n(l - a_n) exp(2 pi i m (l - a_n) / M_n),  m = 0..M_n-1,

taken circularly modulo the signal length ``T``. When every window fits in
its modulation period (``L_n <= M_n``) the frame operator is multiplication
by ``G(l) = sum_n M_n |g_n(l - a_n)|^2``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _backend
from ._kernels_py import _flat_index
from .errors import (
    DimensionError,
    FrameError,
    NearSingularWarning,
    PainlessError,
    ParameterError,
    TilingError,
)
from .fft import check_length

__all__ = [
    "Window",
    "NsgfSystem",
    "FrameDiagonal",
    "PainlessReport",
    "hann",
    "window_profile",
    "make_stationary_gabor",
    "make_nsgf",
    "frame_diagonal",
    "frame_bounds",
    "canonical_dual",
    "canonical_tight",
    "validate_painless",
]


def hann(length: int) -> np.ndarray:
    """Periodic, unit-peak Hann window ``0.5 - 0.5 cos(2 pi l / L)``."""
    l = np.arange(length)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * l / length)


_PROFILES = {"hann": hann, "rect": lambda n: np.ones(n)}


def window_profile(name: str, length: int) -> np.ndarray:
    try:
        return _PROFILES[name](int(length))
    except KeyError:
        raise ParameterError(f"unknown window profile {name!r}; have {sorted(_PROFILES)}") from None


class Window(NamedTuple):
    taps: np.ndarray
    position: int
    channels: int


@dataclass(frozen=True, eq=False)
class NsgfSystem:
    """Windows, positions and channel counts of a (painless) NSGF.

    Windows are stored flat: window ``k`` is ``taps[offsets[k]:offsets[k+1]]``.
    Use :meth:`from_windows` for the common construction.
    """

    positions: np.ndarray
    channels: np.ndarray
    taps: np.ndarray
    offsets: np.ndarray
    length: int
    kind: str = "nonstationary"
    profiles: tuple = ()
    _lengths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.int64).reshape(-1)
        ch = np.array(self.channels, dtype=np.int64).reshape(-1)
        taps = np.array(self.taps, dtype=np.float64).reshape(-1)
        off = np.array(self.offsets, dtype=np.int64).reshape(-1)
        T = int(self.length)
        K = pos.size
        if T <= 0:
            raise ParameterError("signal length must be positive")
        if K == 0:
            raise ParameterError("system needs at least one window")
        if ch.size != K or off.size != K + 1 or off[0] != 0 or off[-1] != taps.size:
            raise DimensionError("inconsistent window table")
        lengths = np.diff(off)
        if np.any(lengths <= 0):
            raise ParameterError("every window needs at least one tap")
        if np.any(ch <= 0):
            raise ParameterError("channel counts must be positive")
        if np.any(pos < 0) or np.any(pos >= T):
            raise ParameterError("window positions must lie in [0, T)")
        if np.any(np.diff(pos) < 0):
            raise ParameterError("window positions must be sorted")
        if not np.all(np.isfinite(taps)):
            raise ParameterError("window taps must be finite")
        nonzero = np.add.reduceat(np.abs(taps) > 0, off[:-1])
        if np.any(nonzero == 0):
            raise ParameterError(f"window {int(np.argmin(nonzero))} is identically zero")
        if self.kind not in ("stationary", "nonstationary"):
            raise ParameterError(f"unknown system kind {self.kind!r}")
        for m in np.unique(ch):
            check_length(int(m))
        profiles = tuple(self.profiles) if self.profiles else ("custom",) * K
        if len(profiles) != K:
            raise DimensionError("one profile name per window")
        for a in (pos, ch, taps, off, lengths):
            a.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "channels", ch)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "length", T)
        object.__setattr__(self, "profiles", profiles)
        object.__setattr__(self, "_lengths", lengths)

    @classmethod
    def from_windows(
        cls,
        windows: Iterable[tuple],
        length: int,
        kind: str = "nonstationary",
        profiles: Sequence[str] = (),
    ) -> "NsgfSystem":
        """Build from ``(taps, position, channels)`` triples."""
        windows = list(windows)
        if not windows:
            raise ParameterError("system needs at least one window")
        taps = [np.asarray(w[0], dtype=np.float64).reshape(-1) for w in windows]
        offsets = np.concatenate([[0], np.cumsum([t.size for t in taps])])
        return cls(
            positions=[int(w[1]) for w in windows],
            channels=[int(w[2]) for w in windows],
            taps=np.concatenate(taps),
            offsets=offsets,
            length=length,
            kind=kind,
            profiles=tuple(profiles),
        )

    # -- structure ---------------------------------------------------------
    @property
    def n_windows(self) -> int:
        return int(self.positions.size)

    @property
    def lengths(self) -> np.ndarray:
        return self._lengths

    def __len__(self):
        return self.n_windows

    def window(self, k: int) -> Window:
        return Window(
            self.taps[self.offsets[k] : self.offsets[k + 1]],
            int(self.positions[k]),
            int(self.channels[k]),
        )

    def __iter__(self):
        return (self.window(k) for k in range(self.n_windows))

    @property
    def is_painless(self) -> bool:
        return bool(np.all(self._lengths <= self.channels))

    @property
    def total_coefficients(self) -> int:
        return int(self.channels.sum())

    @cached_property
    def flat_index(self) -> np.ndarray:
        """Signal sample index of every flat tap."""
        idx = _flat_index(self.positions, self.offsets, self.length)
        idx.setflags(write=False)
        return idx

    def same_structure(self, other: "NsgfSystem") -> bool:
        return (
            self.length == other.length
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.channels, other.channels)
            and np.array_equal(self.offsets, other.offsets)
        )

    def with_taps(self, taps: np.ndarray, profile: str = "custom") -> "NsgfSystem":
        return NsgfSystem(
            self.positions,
            self.channels,
            taps,
            self.offsets,
            self.length,
            self.kind,
            (profile,) * self.n_windows,
        )

    def scaled(self, factor: float) -> "NsgfSystem":
        return self.with_taps(self.taps * factor)

    # -- JSON --------------------------------------------------------------
    def to_dict(self) -> dict:
        windows = []
        for k in range(self.n_windows):
            w = self.window(k)
            entry = {
                "position": w.position,
                "length": int(w.taps.size),
                "channels": w.channels,
                "profile": self.profiles[k],
            }
            if self.profiles[k] == "custom":
                entry["taps"] = [float(t) for t in w.taps]
            windows.append(entry)
        return {"length": self.length, "kind": self.kind, "windows": windows}

    @classmethod
    def from_dict(cls, d: dict) -> "NsgfSystem":
        wins = []
        profiles = []
        for e in d["windows"]:
            prof = e.get("profile", "custom")
            if prof == "custom":
                taps = np.asarray(e["taps"], dtype=np.float64)
                if taps.size != int(e["length"]):
                    raise DimensionError("taps length disagrees with declared length")
            else:
                taps = window_profile(prof, e["length"])
            wins.append((taps, e["position"], e["channels"]))
            profiles.append(prof)
        return cls.from_windows(wins, int(d["length"]), d.get("kind", "nonstationary"), profiles)


@dataclass(frozen=True)
class FrameDiagonal:
    """Samples of ``G`` with its extreme values ``A = min G`` and ``B = max G``."""

    values: np.ndarray
    lower: float
    upper: float

    @property
    def is_frame(self) -> bool:
        return self.lower > 0


# ---------------------------------------------------------------------------
# constructors


def make_stationary_gabor(
    T: int, hop: int, channels: int, window_length: int | None = None, profile: str = "hann"
) -> NsgfSystem:
    """Regular painless Gabor system: ``T / hop`` copies of one window."""
    window_length = channels if window_length is None else window_length
    if hop <= 0 or channels <= 0 or window_length <= 0:
        raise ParameterError("hop, channels and window_length must be positive")
    if T % hop:
        raise TilingError(f"hop {hop} does not divide signal length {T}")
    if window_length > channels:
        raise PainlessError(
            f"window length {window_length} exceeds channel count {channels} (not painless)"
        )
    g = window_profile(profile, window_length)
    n = T // hop
    return NsgfSystem.from_windows(
        ((g, k * hop, channels) for k in range(n)), T, "stationary", (profile,) * n
    )


def make_nsgf(schedule, T: int, profile: str = "hann") -> NsgfSystem:
    """One window per schedule entry with ``M_n = L_n``.

    ``schedule`` is a :class:`~nsgframes.adapt.WindowSchedule` or any
    sequence of ``(length, position)`` pairs. Raises :class:`FrameError` if
    some sample is covered by no nonvanishing tap.
    """
    entries = getattr(schedule, "entries", schedule)
    entries = sorted((int(p), int(L)) for L, p in entries)
    wins = [(window_profile(profile, L), p % T, L) for p, L in entries]
    wins.sort(key=lambda w: w[1])
    system = NsgfSystem.from_windows(wins, T, "nonstationary", (profile,) * len(wins))
    diag = frame_diagonal(system)
    if not diag.is_frame:
        hole = int(np.argmin(diag.values))
        raise FrameError(f"schedule leaves sample {hole} uncovered (G = 0)", location=hole)
    return system


# ---------------------------------------------------------------------------
# frame operator


def frame_diagonal(system: NsgfSystem) -> FrameDiagonal:
    """``G(l) = sum_n M_n g_n(l - a_n)^2`` evaluated circularly."""
    out = np.zeros(system.length)
    _backend.kernels.accumulate_diagonal(
        system.positions, system.taps, system.offsets, system.channels, out
    )
    out.setflags(write=False)
    return FrameDiagonal(out, float(out.min()), float(out.max()))


def frame_bounds(diag: FrameDiagonal) -> tuple[float, float]:
    """Optimal frame bounds ``(A, B)``; warns when ``A <= 1e-12 B``."""
    A, B = diag.lower, diag.upper
    if A <= 1e-12 * B:
        warnings.warn(
            f"lower frame bound {A:.3g} is negligible against upper bound {B:.3g}",
            NearSingularWarning,
            stacklevel=2,
        )
    return A, B


def _require_frame(system, diag):
    if diag is None:
        diag = frame_diagonal(system)
    if diag.values.shape[0] != system.length:
        raise DimensionError("diagonal does not belong to this system")
    if not diag.is_frame:
        hole = int(np.argmin(diag.values))
        raise FrameError(f"not a frame: G vanishes at sample {hole}", location=hole)
    return diag


def canonical_dual(system: NsgfSystem, diag: FrameDiagonal | None = None) -> NsgfSystem:
    """Dual windows ``g_n / G``; same positions and channel counts."""
    diag = _require_frame(system, diag)
    return system.with_taps(system.taps / diag.values[system.flat_index])


def canonical_tight(system: NsgfSystem, diag: FrameDiagonal | None = None) -> NsgfSystem:
    """Tight windows ``g_n / sqrt(G)``, whose own diagonal is 1."""
    diag = _require_frame(system, diag)
    return system.with_taps(system.taps / np.sqrt(diag.values[system.flat_index]))


# ---------------------------------------------------------------------------
# painless conditions


@dataclass(frozen=True)
class PainlessReport:
    support_violations: tuple
    n0: int | None
    separation: float | None
    moderation: float | None
    window_constant: float
    covering_error: str | None = None

    @property
    def support_ok(self) -> bool:
        return not self.support_violations

    @property
    def admissible_ok(self) -> bool:
        return self.n0 is not None

    @property
    def weight_ok(self) -> bool:
        return bool(
            self.separation is not None
            and self.separation > 0
            and self.moderation is not None
            and np.isfinite(self.moderation)
        )

    @property
    def window_ok(self) -> bool:
        return bool(np.isfinite(self.window_constant) and self.window_constant > 0)

    @property
    def passed(self) -> bool:
        return self.support_ok and self.admissible_ok and self.weight_ok and self.window_ok

    def to_dict(self) -> dict:
        return {
            "support_ok": self.support_ok,
            "support_violations": list(self.support_violations),
            "admissible_ok": self.admissible_ok,
            "n0": self.n0,
            "weight_ok": self.weight_ok,
            "separation": self.separation,
            "moderation": self.moderation,
            "window_ok": self.window_ok,
            "window_constant": self.window_constant,
            "covering_error": self.covering_error,
            "passed": self.passed,
        }


def validate_painless(system: NsgfSystem, cov) -> PainlessReport:
    """Check the four painless-NSGF conditions individually.

    ``window_constant`` is the smallest ``C`` with
    ``|g_n| <= C * M_n**-0.5`` for every window (frequency step ``1/M_n``).
    """
    from .covering import check_admissible, check_weight
    from .errors import CoveringError

    bad = tuple(int(k) for k in np.flatnonzero(system.lengths > system.channels))
    peaks = np.maximum.reduceat(np.abs(system.taps), system.offsets[:-1])
    window_constant = float(np.max(peaks * np.sqrt(system.channels)))
    n0 = delta = C = None
    err = None
    try:
        n0 = check_admissible(cov)
    except CoveringError as exc:
        err = str(exc)
    try:
        w = check_weight(cov)
        delta, C = w.separation, w.moderation_constant
    except CoveringError as exc:
        err = err or str(exc)
    return PainlessReport(bad, n0, delta, C, window_constant, err)
