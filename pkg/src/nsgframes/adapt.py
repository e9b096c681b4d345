"""Onset detection and scale-frame window scheduling.

Short windows sit on detected onsets; between two onsets the window length
doubles step by step up to the ladder maximum and halves again on the way
to the next onset, so neighbouring windows are equally long or differ by a
factor of two.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ParameterError, SchedulingError
from .frame import hann
from .signal_io import Signal

__all__ = [
    "OnsetParams",
    "WindowSchedule",
    "ladder",
    "spectral_flux",
    "detect_onsets",
    "scale_frame_schedule",
    "onsets_to_json",
    "onsets_from_json",
]


@dataclass(frozen=True)
class OnsetParams:
    stft_hop: int = 512
    stft_channels: int = 2048
    median_halfwidth: int = 8
    threshold_scale: float = 1.5
    min_gap: int = 2048
    # peaks below this fraction of the largest flux value are ignored
    relative_floor: float = 0.05

    def __post_init__(self):
        if self.stft_hop <= 0 or self.stft_channels <= 0:
            raise ParameterError("stft_hop and stft_channels must be positive")
        if self.median_halfwidth < 0 or self.threshold_scale <= 0 or self.min_gap < 0:
            raise ParameterError("invalid onset thresholding parameters")
        if not 0 <= self.relative_floor < 1:
            raise ParameterError("relative_floor must lie in [0, 1)")

    def check_ladder(self, lengths: Sequence[int]) -> None:
        """Merged onsets must stay schedulable with the shortest ladder window."""
        if self.min_gap < min(lengths):
            raise ParameterError(
                f"min_gap {self.min_gap} is shorter than the shortest window {min(lengths)}"
            )


def ladder(base: int = 192, levels: int = 8) -> tuple[int, ...]:
    """Window lengths ``base * 2**k`` for ``k < levels``."""
    if base <= 0 or levels <= 0:
        raise ParameterError("ladder base and levels must be positive")
    return tuple(base << k for k in range(levels))


# ---------------------------------------------------------------------------
# onsets


def spectral_flux(x: np.ndarray, hop: int, channels: int) -> np.ndarray:
    """Half-wave rectified magnitude flux of a centered Hann STFT.

    Frame ``k`` is centered on sample ``k * hop``; frame 0 is compared with
    silence.
    """
    half = channels // 2
    padded = np.concatenate([np.zeros(half), x, np.zeros(channels)])
    n_frames = 1 + (x.size - 1) // hop
    frames = sliding_window_view(padded, channels)[: n_frames * hop : hop]
    mags = np.abs(np.fft.rfft(frames * hann(channels), axis=1))
    prev = np.vstack([np.zeros((1, mags.shape[1])), mags[:-1]])
    return np.maximum(mags - prev, 0.0).sum(axis=1)


def _running_median(x: np.ndarray, halfwidth: int) -> np.ndarray:
    if halfwidth == 0:
        return x.copy()
    padded = np.pad(x, halfwidth, mode="edge")
    return np.median(sliding_window_view(padded, 2 * halfwidth + 1), axis=1)


def detect_onsets(f: Signal | np.ndarray, params: OnsetParams = OnsetParams()) -> list[int]:
    """Onset sample positions, sorted."""
    x = f.samples if isinstance(f, Signal) else np.asarray(f, dtype=float)
    if x.size <= params.stft_channels:
        raise ParameterError("signal must be longer than stft_channels")
    flux = spectral_flux(x, params.stft_hop, params.stft_channels)
    top = float(flux.max())
    if top <= 0:
        return []
    thresh = np.maximum(
        params.threshold_scale * _running_median(flux, params.median_halfwidth),
        params.relative_floor * top,
    )
    left = np.concatenate([[-np.inf], flux[:-1]])
    right = np.concatenate([flux[1:], [-np.inf]])
    peaks = np.flatnonzero((flux > thresh) & (flux >= left) & (flux > right))
    # strongest first; ties resolved by earlier frame
    order = peaks[np.lexsort((peaks, -flux[peaks]))]
    kept: list[int] = []
    for k in order:
        pos = int(k) * params.stft_hop
        if all(abs(pos - q) >= params.min_gap for q in kept):
            kept.append(pos)
    return sorted(min(p, x.size - 1) for p in kept)


def onsets_to_json(onsets: Sequence[int]) -> str:
    return json.dumps({"onsets": [int(o) for o in onsets]})


def onsets_from_json(text: str) -> list[int]:
    return sorted(int(o) for o in json.loads(text)["onsets"])


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class WindowSchedule:
    """Window ``(length, position)`` pairs sorted by first-tap position.

    Consecutive entries (cyclically) overlap by at least two samples and
    differ in length by a factor in ``{1/2, 1, 2}``.
    """

    entries: tuple
    ladder: tuple
    length: int

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((int(L), int(p)) for L, p in self.entries))
        object.__setattr__(self, "ladder", tuple(int(L) for L in self.ladder))
        self.check()

    def check(self) -> None:
        T = self.length
        e = self.entries
        if not e:
            raise SchedulingError("empty schedule")
        rungs = set(self.ladder)
        for L, p in e:
            if L not in rungs:
                raise SchedulingError(f"window length {L} is not on the ladder")
            if not 0 <= p < T:
                raise SchedulingError(f"position {p} outside [0, {T})")
        for i, (L, p) in enumerate(e):
            L2, p2 = e[(i + 1) % len(e)]
            if i + 1 < len(e):
                if p2 <= p:
                    raise SchedulingError("positions must be strictly increasing")
            else:
                p2 += T
            if L2 not in (L // 2, L, 2 * L) or (L2 == L // 2 and L % 2):
                raise SchedulingError(f"adjacent lengths {L} and {L2} differ by more than 2x")
            if p + L - p2 < 2:
                raise SchedulingError(f"windows at {p} and {p2 % T} do not overlap")

    @property
    def lengths(self) -> np.ndarray:
        return np.array([L for L, _ in self.entries])

    @property
    def positions(self) -> np.ndarray:
        return np.array([p for _, p in self.entries])

    def to_json(self) -> str:
        return json.dumps(
            {
                "length": self.length,
                "ladder": list(self.ladder),
                "entries": [{"length": L, "position": p} for L, p in self.entries],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "WindowSchedule":
        d = json.loads(text)
        return cls(
            tuple((e["length"], e["position"]) for e in d["entries"]),
            tuple(d["ladder"]),
            int(d["length"]),
        )


def _hop(a: int, b: int, overlap: float) -> int:
    return int(round((1.0 - overlap) * (a + b) / 2.0))


def _fill_gap(distance: int, rungs: Sequence[int], overlap: float):
    """Window lengths and center hops spanning one inter-onset gap.

    Returns ``(lengths, hops)`` where ``lengths[0]`` sits on the first onset
    and the last hop lands on the next onset (whose window is not included).
    """

    def ramp(top):
        seq = list(rungs[: top + 1]) + list(rungs[top - 1 :: -1]) if top else [rungs[0]] * 2
        return seq, sum(_hop(a, b, overlap) for a, b in zip(seq, seq[1:]))

    top = -1
    for level in range(len(rungs)):
        seq, span = ramp(level)
        if span > distance:
            break
        top = level
    if top < 0:
        raise SchedulingError(
            f"onset gap of {distance} samples is shorter than one hop "
            f"({_hop(rungs[0], rungs[0], overlap)}) between shortest windows"
        )
    seq, span = ramp(top)
    rest = distance - span
    repeats = [0] * (top + 1)
    for level in range(top, -1, -1):
        step = _hop(rungs[level], rungs[level], overlap)
        repeats[level], rest = divmod(rest, step)
    if top == 0:
        up = [rungs[0]] * (1 + repeats[0])
        lengths = up
    else:
        up, down = [], []
        for level in range(top):
            n = repeats[level]
            up += [rungs[level]] * (1 + (n + 1) // 2)
            # the closing shortest window belongs to the next onset
            down = [rungs[level]] * (n // 2 + (level > 0)) + down
        lengths = up + [rungs[top]] * (1 + repeats[top]) + down
    hops = _spread(lengths, rungs[0], rest, overlap)
    if hops is None:
        # too few samples of slack: one more shortest window, then shrink hops
        lengths = [rungs[0]] + lengths
        hops = _spread(lengths, rungs[0], rest - _hop(rungs[0], rungs[0], overlap), overlap)
    return lengths, hops


def _spread(lengths, closing, rest, overlap):
    """Center hops through ``lengths`` to the next onset, absorbing ``rest`` samples.

    Positive ``rest`` widens the longest hops one sample at a time while
    neighbours keep two samples of overlap; ``None`` if that is impossible.
    Negative ``rest`` shortens hops between equal windows, keeping them
    positive.
    """
    full = lengths + [closing]
    hops = [_hop(a, b, overlap) for a, b in zip(full, full[1:])]
    order = sorted(range(len(hops)), key=lambda j: (-min(full[j], full[j + 1]), j))
    if rest >= 0:
        slack = [a - a // 2 + b // 2 - 2 - h for a, b, h in zip(full, full[1:], hops)]
        step = 1
    else:
        order = [j for j in order if full[j] == full[j + 1]]
        slack = [h - 1 if full[j] == full[j + 1] else 0 for j, h in enumerate(hops)]
        step = -1
    if abs(rest) > sum(max(s, 0) for s in slack):
        return None
    j = 0
    while rest != 0:
        k = order[j % len(order)]
        j += 1
        if slack[k] > 0:
            hops[k] += step
            slack[k] -= 1
            rest -= step
    return hops


def scale_frame_schedule(
    onsets: Sequence[int],
    T: int,
    rungs: Sequence[int] = ladder(),
    overlap: float = 0.5,
) -> WindowSchedule:
    """Scale-frame schedule on a circular signal of length ``T``."""
    rungs = tuple(sorted(int(L) for L in rungs))
    # on a doubling step window starts advance by (1 - overlap) * 3L/2 - L/2,
    # which must stay positive
    if not 0 < overlap < 2 / 3:
        raise ParameterError("overlap must lie in (0, 2/3)")
    if any(b != 2 * a for a, b in zip(rungs, rungs[1:])):
        raise ParameterError("ladder lengths must double from rung to rung")
    onsets = [int(o) for o in onsets]
    if any(b <= a for a, b in zip(onsets, onsets[1:])):
        raise ParameterError("onsets must be strictly increasing")
    if onsets and (onsets[0] < 0 or onsets[-1] >= T):
        raise ParameterError("onsets must lie in [0, T)")

    centers: list[int] = []
    lengths: list[int] = []
    if not onsets:
        L = rungs[-1]
        step = _hop(L, L, overlap)
        count = max(1, T // step)
        base, extra = divmod(T, count)
        c = 0
        for k in range(count):
            centers.append(c)
            lengths.append(L)
            c += base + (1 if k < extra else 0)
    else:
        for i, o in enumerate(onsets):
            nxt = onsets[i + 1] if i + 1 < len(onsets) else onsets[0] + T
            try:
                seq, hops = _fill_gap(nxt - o, rungs, overlap)
            except SchedulingError as exc:
                raise SchedulingError(f"gap between onsets {o} and {nxt % T}: {exc}") from None
            c = o
            for L, h in zip(seq, hops):
                centers.append(c)
                lengths.append(L)
                c += h
    entries = sorted(((L, (c - L // 2) % T) for L, c in zip(lengths, centers)), key=lambda e: e[1])
    return WindowSchedule(tuple(entries), rungs, T)
