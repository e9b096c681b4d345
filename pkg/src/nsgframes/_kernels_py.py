"""Pure-numpy kernels. Same signatures and summation order as ``_ckernels``.

All windows are described by a flat tap array ``taps`` with window ``k``
occupying ``taps[offsets[k]:offsets[k + 1]]`` and starting at sample
``positions[k]`` (circular modulo ``T``).
"""

import numpy as np


def _flat_index(positions, offsets, T):
    lengths = np.diff(offsets)
    local = np.arange(offsets[-1], dtype=np.int64) - np.repeat(offsets[:-1], lengths)
    return (np.repeat(positions, lengths) + local) % T


def gather(f, positions, taps, offsets, out):
    """out[offsets[k] + j] = f[(positions[k] + j) % T] * taps[offsets[k] + j]"""
    idx = _flat_index(positions, offsets, f.shape[0])
    np.multiply(f[idx], taps, out=out)


def overlap_add(y, positions, taps, offsets, out):
    """out[(positions[k] + j) % T] += taps[offsets[k] + j] * y[offsets[k] + j], k ascending."""
    T = out.shape[0]
    idx = _flat_index(positions, offsets, T)
    out += np.bincount(idx, weights=taps * y, minlength=T)


def accumulate_diagonal(positions, taps, offsets, channels, out):
    """out[(positions[k] + j) % T] += channels[k] * taps[.] * taps[.], k ascending."""
    T = out.shape[0]
    idx = _flat_index(positions, offsets, T)
    lengths = np.diff(offsets)
    scaled = np.repeat(channels.astype(np.float64), lengths) * taps
    out += np.bincount(idx, weights=scaled * taps, minlength=T)
