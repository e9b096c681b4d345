"""FFT-based painless analysis and synthesis.

Coefficients are raw inner products

    c[n][m] = sum_l f(l) g_n(l - a_n) exp(-2 pi i m (l - a_n) / M_n),

computed by windowing a segment, zero-padding it to ``M_n`` and taking a
length-``M_n`` DFT. Windows sharing a channel count are transformed as one
batch.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _backend
from .errors import DimensionError, FormatError, NsgfIOError, PainlessError, SymmetryError
from .fft import rfft_rows, unnormalized_ifft_rows
from .frame import NsgfSystem
from .signal_io import Signal

__all__ = [
    "CoefficientLayout",
    "CoefficientSet",
    "analyze",
    "synthesize",
    "apply_frame_operator",
    "write_coefficients",
    "read_coefficients",
    "write_coefficients_csv",
]

IMAG_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class CoefficientLayout:
    """Structure of a system without its taps: what a coefficient set refers to."""

    length: int
    positions: np.ndarray
    lengths: np.ndarray
    channels: np.ndarray

    @classmethod
    def of(cls, system: NsgfSystem) -> "CoefficientLayout":
        return cls(system.length, system.positions, system.lengths, system.channels)

    def matches(self, system: NsgfSystem) -> bool:
        return (
            self.length == system.length
            and np.array_equal(self.positions, system.positions)
            and np.array_equal(self.lengths, system.lengths)
            and np.array_equal(self.channels, system.channels)
        )

    def __eq__(self, other):
        if not isinstance(other, CoefficientLayout):
            return NotImplemented
        return (
            self.length == other.length
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.lengths, other.lengths)
            and np.array_equal(self.channels, other.channels)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """Jagged coefficient blocks stored contiguously.

    ``data[offsets[n]:offsets[n + 1]]`` is block ``n`` of length ``M_n``.
    """

    data: np.ndarray
    layout: CoefficientLayout

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128).reshape(-1)
        if data.size != int(self.layout.channels.sum()):
            raise DimensionError("coefficient count does not match layout")
        object.__setattr__(self, "data", data)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.layout.channels)])

    @property
    def total_count(self) -> int:
        return int(self.data.size)

    @property
    def n_blocks(self) -> int:
        return int(self.layout.channels.size)

    def block(self, n: int) -> np.ndarray:
        off = self.offsets
        return self.data[off[n] : off[n + 1]]

    @property
    def blocks(self) -> list[np.ndarray]:
        off = self.offsets
        return [self.data[off[n] : off[n + 1]] for n in range(self.n_blocks)]

    def with_data(self, data) -> "CoefficientSet":
        return CoefficientSet(data, self.layout)

    def bin_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Block number ``n`` and bin ``m`` of every flat coefficient."""
        ch = self.layout.channels
        n = np.repeat(np.arange(ch.size), ch)
        m = np.arange(self.data.size) - np.repeat(self.offsets[:-1], ch)
        return n, m

    def partner_index(self) -> np.ndarray:
        """Flat index of each coefficient's conjugate partner ``(n, -m mod M_n)``."""
        n, m = self.bin_index()
        M = self.layout.channels[n]
        return self.offsets[:-1][n] + (-m) % M


def _groups(channels: np.ndarray):
    for M in np.unique(channels):
        yield int(M), np.flatnonzero(channels == M)


def analyze(f: Signal | np.ndarray, system: NsgfSystem) -> CoefficientSet:
    """Frame coefficients of ``f`` with respect to ``system``."""
    x = f.samples if isinstance(f, Signal) else np.asarray(f, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != system.length:
        raise DimensionError(f"signal length {x.shape[0]} != system length {system.length}")
    if not system.is_painless:
        raise PainlessError("analysis requires L_n <= M_n for every window")
    x = np.ascontiguousarray(x, dtype=np.float64)
    seg = np.empty(system.taps.size)
    _backend.kernels.gather(x, system.positions, system.taps, system.offsets, seg)
    layout = CoefficientLayout.of(system)
    coef_off = np.concatenate([[0], np.cumsum(system.channels)])
    data = np.empty(int(coef_off[-1]), dtype=np.complex128)
    L = system.lengths
    tap_off = system.offsets
    for M, ids in _groups(system.channels):
        rows = np.zeros((ids.size, M))
        Lg = L[ids]
        if np.all(Lg == M):
            rows[:] = seg[(tap_off[ids][:, None] + np.arange(M))]
        else:
            for r, k in enumerate(ids):
                rows[r, : L[k]] = seg[tap_off[k] : tap_off[k + 1]]
        spec = rfft_rows(rows)
        dst = coef_off[ids][:, None] + np.arange(M)
        data[dst] = spec
    return CoefficientSet(data, layout)


def synthesize(
    coeffs: CoefficientSet, dual: NsgfSystem, *, strict: bool = True, sample_rate: int = 44100
) -> Signal:
    """Overlap-add reconstruction ``sum_n sum_m c[n][m] dual_{m,n}``.

    With ``strict`` the imaginary part of the result must be at most
    ``1e-10`` times the real part (in l2), else :class:`SymmetryError`;
    otherwise it is dropped silently.
    """
    if not coeffs.layout.matches(dual):
        raise DimensionError("coefficients and synthesis system have different structure")
    tap_off = dual.offsets
    coef_off = coeffs.offsets
    L = dual.lengths
    y = np.empty(dual.taps.size, dtype=np.complex128)
    for M, ids in _groups(dual.channels):
        src = coef_off[ids][:, None] + np.arange(M)
        rows = unnormalized_ifft_rows(coeffs.data[src])
        Lg = L[ids]
        if np.all(Lg == M):
            y[tap_off[ids][:, None] + np.arange(M)] = rows
        else:
            for r, k in enumerate(ids):
                y[tap_off[k] : tap_off[k + 1]] = rows[r, : L[k]]
    re = np.zeros(dual.length)
    im = np.zeros(dual.length)
    k = _backend.kernels
    k.overlap_add(np.ascontiguousarray(y.real), dual.positions, dual.taps, dual.offsets, re)
    k.overlap_add(np.ascontiguousarray(y.imag), dual.positions, dual.taps, dual.offsets, im)
    if strict:
        ni = float(np.linalg.norm(im))
        nr = float(np.linalg.norm(re))
        if ni > IMAG_TOLERANCE * nr:
            raise SymmetryError(
                f"synthesis has imaginary residue {ni:.3g} against real part {nr:.3g}; "
                "coefficients are not conjugate-symmetric"
            )
    return Signal(re, sample_rate)


def apply_frame_operator(f: Signal | np.ndarray, system: NsgfSystem) -> Signal:
    """``S f``: analysis followed by synthesis with the same system."""
    rate = f.sample_rate if isinstance(f, Signal) else 44100
    return synthesize(analyze(f, system), system, sample_rate=rate)


# ---------------------------------------------------------------------------
# export

_HEADER = struct.Struct("<QQ")
_WINDOW = struct.Struct("<qQQ")


def write_coefficients(coeffs: CoefficientSet, path) -> None:
    """Binary dump: ``T, K`` (u64), then ``K`` x ``(position i64, length u64,
    channels u64)``, then each block as interleaved little-endian re/im doubles."""
    lay = coeffs.layout
    parts = [_HEADER.pack(lay.length, lay.channels.size)]
    for a, L, M in zip(lay.positions, lay.lengths, lay.channels):
        parts.append(_WINDOW.pack(int(a), int(L), int(M)))
    inter = np.empty(2 * coeffs.data.size, dtype="<f8")
    inter[0::2] = coeffs.data.real
    inter[1::2] = coeffs.data.imag
    parts.append(inter.tobytes())
    try:
        Path(path).write_bytes(b"".join(parts))
    except OSError as exc:
        raise NsgfIOError(f"cannot write {path}: {exc}") from exc


def read_coefficients(path) -> CoefficientSet:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise NsgfIOError(f"cannot read {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise FormatError("coefficient file too short")
    T, K = _HEADER.unpack_from(raw, 0)
    pos = _HEADER.size
    if len(raw) < pos + K * _WINDOW.size:
        raise FormatError("truncated window table")
    table = np.array([_WINDOW.unpack_from(raw, pos + i * _WINDOW.size) for i in range(K)])
    pos += K * _WINDOW.size
    table = table.reshape(K, 3).astype(np.int64)
    total = int(table[:, 2].sum())
    if len(raw) - pos != 16 * total:
        raise FormatError("coefficient payload size does not match window table")
    inter = np.frombuffer(raw, dtype="<f8", offset=pos)
    layout = CoefficientLayout(int(T), table[:, 0], table[:, 1], table[:, 2])
    return CoefficientSet(inter[0::2] + 1j * inter[1::2], layout)


def write_coefficients_csv(coeffs: CoefficientSet, path) -> None:
    """One row per coefficient: ``n, m, re, im, magnitude``."""
    n, m = coeffs.bin_index()
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "m", "re", "im", "magnitude"])
            for nn, mm, c in zip(n.tolist(), m.tolist(), coeffs.data.tolist()):
                w.writerow([nn, mm, f"{c.real:.17g}", f"{c.imag:.17g}", f"{abs(c):.17g}"])
    except OSError as exc:
        raise NsgfIOError(f"cannot write {path}: {exc}") from exc
