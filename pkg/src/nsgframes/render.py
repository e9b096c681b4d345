"""Spectrogram images of (nonstationary) Gabor coefficients as 8-bit PGM."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import NsgfIOError, ParameterError
from .transform import CoefficientSet

__all__ = ["spectrogram_image", "write_pgm", "read_pgm", "write_spectrogram"]

FLOOR_DB = -80.0
HEIGHT = 512


def spectrogram_image(
    coeffs: CoefficientSet,
    height: int = HEIGHT,
    samples_per_pixel: int = 1,
    floor_db: float = FLOOR_DB,
    ref: float | None = None,
) -> tuple[np.ndarray, dict]:
    """Paint each window's nonnegative-frequency magnitudes as columns.

    Pixel column ``x`` shows the last window whose position is at or before
    sample ``x * samples_per_pixel``; row 0 is the Nyquist frequency and the
    bottom row is DC, with nearest-bin vertical resampling. Magnitudes are
    mapped to dB relative to ``ref`` (default: the largest magnitude),
    clipped at ``floor_db`` and quantized to 0..255.
    """
    if height < 2 or samples_per_pixel < 1 or floor_db >= 0:
        raise ParameterError("need height >= 2, samples_per_pixel >= 1, floor_db < 0")
    lay = coeffs.layout
    T = lay.length
    width = -(-T // samples_per_pixel)
    t = np.arange(width) * samples_per_pixel
    n = np.searchsorted(lay.positions, t, side="right") - 1
    n[n < 0] = lay.positions.size - 1
    half = lay.channels[n] // 2
    frac = (height - 1 - np.arange(height)) / (height - 1)
    bins = np.rint(frac[:, None] * half[None, :]).astype(np.int64)
    mag = np.abs(coeffs.data)
    vals = mag[coeffs.offsets[:-1][n][None, :] + bins]
    top = float(mag.max()) if ref is None else float(ref)
    if top > 0:
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(vals / top)
        db = np.clip(db, floor_db, 0.0)
    else:
        db = np.full(vals.shape, floor_db)
    img = np.rint((db - floor_db) / -floor_db * 255.0).astype(np.uint8)
    meta = {
        "width": int(width),
        "height": int(height),
        "samples_per_pixel": int(samples_per_pixel),
        "signal_length": int(T),
        "floor_db": float(floor_db),
        "ref_magnitude": top,
        "rows": "top = Nyquist, bottom = 0 Hz, linear",
    }
    return img, meta


def write_pgm(path, img: np.ndarray) -> None:
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(img.tobytes())
    except OSError as exc:
        raise NsgfIOError(f"cannot write {path}: {exc}") from exc


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise NsgfIOError(f"{path} is not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise NsgfIOError("only 8-bit PGM supported")
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)


def write_spectrogram(path, coeffs: CoefficientSet, sample_rate: int = 44100, **kw) -> dict:
    """Write ``path`` (PGM) and ``path.json`` (axis metadata)."""
    img, meta = spectrogram_image(coeffs, **kw)
    meta["sample_rate"] = int(sample_rate)
    meta["max_frequency_hz"] = sample_rate / 2.0
    meta["seconds_per_pixel"] = meta["samples_per_pixel"] / sample_rate
    write_pgm(path, img)
    sidecar = Path(str(path) + ".json")
    try:
        sidecar.write_text(json.dumps(meta, sort_keys=True, indent=1))
    except OSError as exc:
        raise NsgfIOError(f"cannot write {sidecar}: {exc}") from exc
    return meta


def default_samples_per_pixel(T: int, max_width: int = 2048) -> int:
    return max(1, math.ceil(T / max_width))
