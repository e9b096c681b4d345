"""Signals, WAV input/output and deterministic synthetic test signals."""

from __future__ import annotations

import json
import struct
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import FormatError, NsgfIOError, ParameterError, UnsupportedFormatError

__all__ = [
    "Signal",
    "SyntheticSpec",
    "load_wav",
    "write_wav",
    "generate",
    "melody_spec",
    "F_MAJOR_MELODY_HZ",
]

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE

# F2 A2 C3 F3 A3 C4 F4 A4 C5 F5, equal temperament with A4 = 440 Hz
F_MAJOR_MELODY_HZ = tuple(
    440.0 * 2.0 ** ((midi - 69) / 12.0) for midi in (41, 45, 48, 53, 57, 60, 65, 69, 72, 77)
)


@dataclass(frozen=True)
class Signal:
    """A finite, real, sampled waveform.

    The sample array is copied to float64 and made read-only.
    """

    samples: np.ndarray
    sample_rate: int = 44100
    length: int = field(init=False)

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64).reshape(-1)
        if x.size == 0:
            raise ParameterError("signal must contain at least one sample")
        if not np.all(np.isfinite(x)):
            raise ParameterError("signal samples must be finite")
        if int(self.sample_rate) <= 0:
            raise ParameterError(f"sample rate must be positive, got {self.sample_rate}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        object.__setattr__(self, "length", int(x.size))

    def __len__(self):
        return self.length

    def with_samples(self, samples) -> "Signal":
        return Signal(samples, self.sample_rate)

    def padded_to(self, length: int) -> "Signal":
        """Zero-pad at the end to ``length`` samples."""
        if length < self.length:
            raise ParameterError("cannot pad to a shorter length")
        if length == self.length:
            return self
        out = np.zeros(length)
        out[: self.length] = self.samples
        return Signal(out, self.sample_rate)


# ---------------------------------------------------------------------------
# WAV


def _parse_riff(data: bytes):
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError("not a RIFF/WAVE file")
    pos = 12
    fmt = None
    payload = None
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4 : pos + 8])
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size and cid != b"data":
            raise FormatError(f"truncated {cid!r} chunk")
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            payload = body
        pos += 8 + size + (size & 1)
    if fmt is None or len(fmt) < 16:
        raise FormatError("missing or short fmt chunk")
    if payload is None:
        raise FormatError("missing data chunk")
    tag, channels, rate, _, block_align, bits = struct.unpack("<HHIIHH", fmt[:16])
    if tag == _WAVE_FORMAT_EXTENSIBLE:
        if len(fmt) < 40:
            raise FormatError("short WAVE_FORMAT_EXTENSIBLE fmt chunk")
        (tag,) = struct.unpack("<H", fmt[24:26])
    if tag != _WAVE_FORMAT_PCM:
        raise UnsupportedFormatError(f"unsupported WAV codec tag 0x{tag:04x} (integer PCM only)")
    if bits not in (16, 24):
        raise UnsupportedFormatError(f"unsupported PCM bit depth {bits} (16 or 24 only)")
    if channels < 1 or rate == 0:
        raise FormatError("invalid channel count or sample rate")
    if block_align != channels * bits // 8:
        raise FormatError("inconsistent block alignment")
    return channels, rate, bits, payload


def load_wav(path) -> Signal:
    """Read a 16- or 24-bit PCM WAV file.

    Only the first channel is kept; multichannel files are silently reduced
    to channel 0. Integer samples are divided by ``2**(bits - 1)``.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise NsgfIOError(f"cannot read {path}: {exc}") from exc
    channels, rate, bits, payload = _parse_riff(data)
    width = bits // 8
    frames = len(payload) // (width * channels)
    if frames == 0:
        raise FormatError("WAV file contains no samples")
    raw = np.frombuffer(payload[: frames * width * channels], dtype=np.uint8)
    raw = raw.reshape(frames, channels, width)[:, 0, :]
    if bits == 16:
        ints = raw.copy().view("<i2").reshape(-1).astype(np.int64)
    else:
        ints = (
            raw[:, 0].astype(np.int64)
            | (raw[:, 1].astype(np.int64) << 8)
            | (raw[:, 2].astype(np.int64) << 16)
        )
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
    return Signal(ints / float(1 << (bits - 1)), rate)


def quantize16(samples) -> np.ndarray:
    """Map [-1, 1] floats to int16 codes the way :func:`write_wav` does."""
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    return np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")


def write_wav(signal: Signal, path) -> None:
    """Write ``signal`` as 16-bit PCM mono, clamping to [-1, 1]."""
    codes = quantize16(signal.samples)
    try:
        fh = open(path, "wb")
    except OSError as exc:
        raise NsgfIOError(f"cannot write {path}: {exc}") from exc
    try:
        with fh, wave.open(fh, "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(signal.sample_rate)
            w.writeframes(codes.tobytes())
    except OSError as exc:
        raise NsgfIOError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# synthetic signals

_KINDS = ("tone_melody", "click_train", "white_noise", "power_law_coeff_signal")


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a deterministic synthetic signal.

    ``parameters`` per kind:

    ``tone_melody``
        ``tones``: list of ``[fundamental_hz, onset_sample]``; optional
        ``harmonics`` (8), ``decay_s`` (1.5), ``peak`` (0.5) and ``sustain``
        (false: each tone is cut where the next one starts; true: tones ring
        on and overlap).
    ``click_train``
        ``positions``: strictly increasing sample indices; ``amplitude`` (1.0).
    ``white_noise``
        ``seed`` (0), ``amplitude`` (0.1, the standard deviation).
    ``power_law_coeff_signal``
        ``seed`` (0), ``decay`` (1.0), ``peak`` (0.5). Random-phase spectrum
        whose sorted bin magnitudes fall off as ``k**-decay``.
    """

    kind: str
    length: int
    sample_rate: int = 44100
    parameters: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown synthetic kind {self.kind!r}; expected one of {_KINDS}")
        if int(self.length) <= 0 or int(self.sample_rate) <= 0:
            raise ParameterError("length and sample_rate must be positive")
        nyquist = self.sample_rate / 2.0
        p = self.parameters
        if self.kind == "tone_melody":
            tones = p.get("tones", [])
            if not tones:
                raise ParameterError("tone_melody needs at least one tone")
            for f0, onset in tones:
                if not 0 < f0 < nyquist:
                    raise ParameterError(f"fundamental {f0} Hz outside (0, {nyquist}) Hz")
                if not 0 <= onset < self.length:
                    raise ParameterError(f"tone onset {onset} outside [0, {self.length})")
        elif self.kind == "click_train":
            pos = list(p.get("positions", []))
            if any(b <= a for a, b in zip(pos, pos[1:])):
                raise ParameterError("click positions must be strictly increasing")
            if pos and (pos[0] < 0 or pos[-1] >= self.length):
                raise ParameterError("click positions must lie in [0, length)")

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "length": self.length,
                "sample_rate": self.sample_rate,
                "parameters": dict(self.parameters),
            },
            sort_keys=True,
        )

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SyntheticSpec":
        return cls(
            kind=d["kind"],
            length=int(d["length"]),
            sample_rate=int(d.get("sample_rate", 44100)),
            parameters=dict(d.get("parameters", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "SyntheticSpec":
        return cls.from_dict(json.loads(text))


def melody_spec(
    length: int = 262144,
    sample_rate: int = 44100,
    fundamentals: Sequence[float] = F_MAJOR_MELODY_HZ,
    first_onset: int = 6000,
    spacing: int | None = None,
) -> SyntheticSpec:
    """Rising ten-tone F-major melody, evenly spaced onsets."""
    if spacing is None:
        spacing = (length - first_onset) // len(fundamentals)
    tones = [[float(f), int(first_onset + k * spacing)] for k, f in enumerate(fundamentals)]
    return SyntheticSpec("tone_melody", length, sample_rate, {"tones": tones})


def _tone_melody(spec: SyntheticSpec) -> np.ndarray:
    p = spec.parameters
    harmonics = int(p.get("harmonics", 8))
    decay = float(p.get("decay_s", 1.5))
    fs = spec.sample_rate
    sustain = bool(p.get("sustain", False))
    tones = sorted((int(onset), float(f0)) for f0, onset in p["tones"])
    out = np.zeros(spec.length)
    for i, (onset, f0) in enumerate(tones):
        stop = spec.length if sustain or i + 1 == len(tones) else tones[i + 1][0]
        t = np.arange(stop - onset) / fs
        env = np.exp(-t / decay)
        tone = np.zeros_like(t)
        for h in range(1, harmonics + 1):
            if h * f0 >= fs / 2:
                break
            tone += np.sin(2 * np.pi * h * f0 * t) / h
        out[onset:stop] += env * tone
    peak = np.max(np.abs(out))
    if peak > 0:
        out *= float(p.get("peak", 0.5)) / peak
    return out


def _power_law(spec: SyntheticSpec) -> np.ndarray:
    p = spec.parameters
    rng = np.random.default_rng(int(p.get("seed", 0)))
    n_bins = spec.length // 2 + 1
    mags = np.arange(1, n_bins + 1, dtype=float) ** -float(p.get("decay", 1.0))
    spectrum = np.zeros(n_bins, dtype=complex)
    spectrum[rng.permutation(n_bins)] = mags * np.exp(2j * np.pi * rng.random(n_bins))
    out = np.fft.irfft(spectrum, n=spec.length)
    peak = np.max(np.abs(out))
    return out * (float(p.get("peak", 0.5)) / peak)


def generate(spec: SyntheticSpec) -> Signal:
    """Render a :class:`SyntheticSpec` to a :class:`Signal`."""
    p = spec.parameters
    if spec.kind == "tone_melody":
        x = _tone_melody(spec)
    elif spec.kind == "click_train":
        x = np.zeros(spec.length)
        x[np.asarray(p.get("positions", []), dtype=int)] = float(p.get("amplitude", 1.0))
    elif spec.kind == "white_noise":
        rng = np.random.default_rng(int(p.get("seed", 0)))
        x = float(p.get("amplitude", 0.1)) * rng.standard_normal(spec.length)
    else:
        x = _power_law(spec)
    return Signal(x, spec.sample_rate)
