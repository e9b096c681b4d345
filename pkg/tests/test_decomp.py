import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsgframes.covering import (
    StructuredCovering,
    build_bapu,
    check_weight,
    covering_from_system,
)
from nsgframes.decomp import (
    DecompNormParams,
    decomposition_norm,
    equivalence_battery,
    equivalence_report,
    local_norms,
)
from nsgframes.errors import DegenerateInputError, DimensionError, ParameterError
from nsgframes.frame import canonical_tight, make_stationary_gabor
from nsgframes.signal_io import Signal


def _whole(T):
    return build_bapu(StructuredCovering.from_intervals([(-1, T)], period=T))


def test_zero_signal_has_zero_norm():
    assert decomposition_norm(np.zeros(32), DecompNormParams(_whole(32))) == 0.0


def test_single_interval_gives_plain_norm(rng):
    f = rng.standard_normal(50)
    for p in (1, 2, 3.5, math.inf):
        got = decomposition_norm(f, DecompNormParams(_whole(50), p=p, q=2))
        assert got == pytest.approx(np.linalg.norm(f, p), rel=1e-14)


def _phi(t, plateau):
    """Smooth bump written out independently of the library."""
    edge = (1 - plateau) / 2
    out = []
    for x in t:
        d = min(x, 1 - x)
        if d <= 0:
            out.append(0.0)
        elif d >= edge:
            out.append(1.0)
        else:
            u = d / edge
            a, b = math.exp(-1 / u), math.exp(-1 / (1 - u))
            out.append(a / (a + b))
    return np.array(out)


def test_two_interval_partition_against_hand_sum():
    P = 40
    intervals = [(-8.0, 24.0), (16.0, 48.0)]
    cov = StructuredCovering.from_intervals(intervals, period=P)
    bapu = build_bapu(cov, plateau=0.8)
    x = np.arange(P, dtype=float)
    raw = []
    for l, r in intervals:
        phi = np.zeros(P)
        for shift in (-P, 0, P):
            phi += _phi((x + shift - l) / (r - l), 0.8)
        raw.append(phi)
    psi = [r / (raw[0] + raw[1]) for r in raw]
    np.testing.assert_allclose(bapu.dense(0), psi[0], atol=1e-15)
    # indicator of the first member's plateau
    f = np.zeros(P)
    lo, hi = -8 + 0.1 * 32, -8 + 0.9 * 32
    f[[k for k in range(P) if lo <= k <= hi]] = 1.0
    w = check_weight(cov)
    local = [math.sqrt(sum((psi[n][k] * f[k]) ** 2 for k in range(P))) for n in range(2)]
    want = math.sqrt(sum((w.values[n] ** 0.5 * local[n]) ** 2 for n in range(2)))
    got = decomposition_norm(f, DecompNormParams(bapu, w, p=2, q=2, s=0.5))
    assert got == pytest.approx(want, rel=1e-14)


def test_grid_mismatch():
    with pytest.raises(DimensionError):
        local_norms(np.zeros(10), _whole(12))


def test_weights_must_match_bapu():
    cov = StructuredCovering.from_intervals([(-1, 5), (4, 11)], period=10)
    other = StructuredCovering.from_intervals([(-1, 11)], period=10)
    with pytest.raises(DimensionError):
        DecompNormParams(build_bapu(cov), check_weight(other))
    with pytest.raises(ParameterError):
        DecompNormParams(build_bapu(cov), p=0.5)


@pytest.fixture(scope="module")
def small_gabor():
    s = make_stationary_gabor(4096, 256, 384)
    cov = covering_from_system(s)
    return s, DecompNormParams(build_bapu(cov), check_weight(cov))


def test_ratio_invariant_under_scaling(small_gabor, rng):
    s, params = small_gabor
    f = rng.standard_normal(4096)
    r1 = equivalence_report(f, s, params).ratio
    r7 = equivalence_report(7 * f, s, params).ratio
    assert r7 == pytest.approx(r1, rel=1e-13)


def test_tight_single_interval_ratio_is_one(rng):
    t = canonical_tight(make_stationary_gabor(2048, 128, 512))
    params = DecompNormParams(_whole(2048))
    rep = equivalence_report(rng.standard_normal(2048), t, params)
    assert abs(rep.ratio - 1.0) <= 1e-10


def test_battery_spread_bounded(small_gabor):
    s, params = small_gabor
    sigs = [np.random.default_rng(k).standard_normal(4096) for k in range(20)]
    # add structured signals: impulses and a slow chirp
    imp = np.zeros(4096)
    imp[1000] = 1
    sigs += [imp, np.sin(np.linspace(0, 400, 4096) ** 1.5)]
    rep = equivalence_battery(sigs, s, params)
    assert rep.spread <= 10
    d = json.loads(rep.to_json())
    assert d["p"] == 2 and len(d["ratios"]) == 22


def test_battery_errors(small_gabor):
    s, params = small_gabor
    with pytest.raises(DegenerateInputError):
        equivalence_report(np.zeros(4096), s, params)
    with pytest.raises(ParameterError):
        equivalence_report(np.ones(4096), s, params.replace(p=1.0))
    with pytest.raises(ParameterError):
        equivalence_battery([], s, params)


# squares of scale factors near the subnormal range underflow
SCALES = st.floats(-1e3, 1e3).filter(lambda a: a == 0 or abs(a) > 1e-100)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), SCALES, st.floats(0, 2), st.floats(0, 2))
def test_homogeneity_and_monotone_in_s(small_gabor, seed, alpha, s1, ds):
    s, params = small_gabor
    f = np.random.default_rng(seed).standard_normal(4096)
    base = decomposition_norm(f, params)
    assert decomposition_norm(alpha * f, params) == pytest.approx(abs(alpha) * base, rel=1e-13, abs=1e-300)
    lo = decomposition_norm(f, params.replace(s=s1))
    hi = decomposition_norm(f, params.replace(s=s1 + ds))
    assert lo <= hi * (1 + 1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_l2_norm_within_overlap_constants(small_gabor, seed):
    s, params = small_gabor
    bapu = params.bapu
    sq = np.zeros(bapu.period)
    for n in range(len(bapu)):
        np.add.at(sq, bapu.indices(n), bapu.values[n] ** 2)
    k1, k2 = math.sqrt(sq.min()), math.sqrt(sq.max())
    f = np.random.default_rng(seed).standard_normal(4096)
    d = decomposition_norm(f, params.replace(s=0))
    nf = np.linalg.norm(f)
    assert k1 * nf * (1 - 1e-12) <= d <= k2 * nf * (1 + 1e-12)
