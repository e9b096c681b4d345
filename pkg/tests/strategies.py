"""Hypothesis strategies for small random painless systems and signals."""

import numpy as np
from hypothesis import strategies as st

from nsgframes.frame import NsgfSystem

SMOOTH = [2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14, 15, 16, 18, 20, 21, 24, 25, 27, 28, 30, 32]


@st.composite
def painless_systems(draw, max_windows=6, tap_sign=False):
    """Windows with random taps that jointly cover a short circular grid.

    Each window is at least one sample longer than the hop to its successor,
    so ``G > 0`` everywhere; channel counts are at least the window length.
    """
    K = draw(st.integers(1, max_windows))
    hops = draw(st.lists(st.integers(1, 12), min_size=K, max_size=K))
    T = int(sum(hops))
    start = draw(st.integers(0, T - 1))
    pos = (start + np.concatenate([[0], np.cumsum(hops[:-1])])) % T
    wins = []
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    for p, h in zip(pos, hops):
        L = draw(st.integers(h + 1, h + 12)) if K > 1 else draw(st.integers(T, T + 6))
        M = draw(st.sampled_from([m for m in SMOOTH if m >= L] or [32]))
        if M < L:
            L = M
        taps = rng.uniform(0.2, 1.5, L)
        if tap_sign:
            taps *= rng.choice([-1.0, 1.0], L)
        wins.append((taps, int(p), int(M)))
    wins.sort(key=lambda w: w[1])
    return NsgfSystem.from_windows(wins, T)
