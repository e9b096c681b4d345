import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings

from nsgframes.approx import redundancy
from nsgframes.covering import covering_from_system
from nsgframes.errors import (
    FrameError,
    NearSingularWarning,
    PainlessError,
    ParameterError,
    TilingError,
)
from nsgframes.frame import (
    NsgfSystem,
    canonical_dual,
    canonical_tight,
    frame_bounds,
    frame_diagonal,
    hann,
    make_nsgf,
    make_stationary_gabor,
    validate_painless,
)
from oracles import direct_diagonal
from strategies import painless_systems


# -- construction ----------------------------------------------------------


def test_hann_is_periodic():
    np.testing.assert_allclose(hann(4), [0.0, 0.5, 1.0, 0.5], atol=1e-16)


def test_small_stationary_system():
    s = make_stationary_gabor(8, 4, 4, 4)
    assert s.positions.tolist() == [0, 4]
    assert s.channels.tolist() == [4, 4]
    assert s.kind == "stationary"


def test_experiment_gabor_counts():
    s = make_stationary_gabor(262144, 1024, 1536)
    assert s.n_windows == 256
    assert s.total_coefficients == 393216
    assert redundancy(s) == 1.5


def test_table_config_redundancy_is_two():
    assert redundancy(make_stationary_gabor(524288, 1024, 2048)) == 2.0


def test_tiling_and_painless_errors():
    with pytest.raises(TilingError):
        make_stationary_gabor(1000, 300, 512)
    with pytest.raises(PainlessError):
        make_stationary_gabor(1024, 256, 512, 600)


def test_channels_with_large_prime_factor_rejected():
    with pytest.raises(ParameterError, match="prime factor"):
        make_stationary_gabor(1024, 256, 22 * 32, 512)


@pytest.mark.parametrize(
    "kw",
    [
        dict(positions=[5], channels=[4], taps=[1.0], offsets=[0, 1], length=4),
        dict(positions=[2, 1], channels=[4, 4], taps=[1.0, 1.0], offsets=[0, 1, 2], length=4),
        dict(positions=[0], channels=[4], taps=[0.0, 0.0], offsets=[0, 2], length=4),
        dict(positions=[0], channels=[4], taps=[np.nan], offsets=[0, 1], length=4),
        dict(positions=[0], channels=[0], taps=[1.0], offsets=[0, 1], length=4),
    ],
)
def test_system_validation(kw):
    with pytest.raises(ValueError):
        NsgfSystem(**kw)


def test_single_full_length_window_is_valid():
    s = make_nsgf([(64, 0)], 64, profile="rect")
    assert s.n_windows == 1 and s.channels.tolist() == [64]
    assert frame_diagonal(s).is_frame
    # a lone periodic Hann window vanishes at its first tap
    with pytest.raises(FrameError):
        make_nsgf([(64, 0)], 64)


def test_two_hann_windows_cover_length_eight():
    s = make_nsgf([(8, 0), (8, 4)], 8)
    G = frame_diagonal(s).values
    np.testing.assert_allclose(G, direct_diagonal(s), rtol=1e-15)
    assert G.min() > 0


def test_dead_gap_is_frame_error():
    with pytest.raises(FrameError) as exc:
        make_nsgf([(8, 0), (8, 20)], 32)
    assert exc.value.location is not None


def test_json_roundtrip_named_and_custom(scale_frame):
    s2 = NsgfSystem.from_dict(json.loads(json.dumps(scale_frame.to_dict())))
    assert s2.same_structure(scale_frame)
    assert np.array_equal(s2.taps, scale_frame.taps)
    custom = scale_frame.scaled(0.3)
    s3 = NsgfSystem.from_dict(json.loads(json.dumps(custom.to_dict())))
    assert np.array_equal(s3.taps, custom.taps)


# -- frame diagonal --------------------------------------------------------


def test_constant_taps_give_identity_diagonal():
    M = 16
    s = NsgfSystem.from_windows([(np.full(M, M**-0.5), 0, M)], M)
    d = frame_diagonal(s)
    np.testing.assert_allclose(d.values, 1.0, rtol=1e-15)
    assert frame_bounds(d) == pytest.approx((1.0, 1.0))


def test_hann_overlap_sums():
    # half overlap: mean of G is 0.75 M but G itself oscillates in [M/2, M];
    # the squared periodic Hann sums to a constant at hop L/4
    L = 64
    half = frame_diagonal(make_stationary_gabor(512, L // 2, L)).values
    assert half.mean() == pytest.approx(0.75 * L, rel=1e-14)
    assert half.min() == pytest.approx(L / 2) and half.max() == pytest.approx(L)
    quarter = frame_diagonal(make_stationary_gabor(512, L // 4, L)).values
    np.testing.assert_allclose(quarter, 1.5 * L, rtol=1e-14)


def test_diagonal_scales_quadratically(scale_frame):
    a = frame_diagonal(scale_frame).values
    b = frame_diagonal(scale_frame.scaled(2.0)).values
    np.testing.assert_array_equal(b, 4 * a)


def test_gabor_bounds_match_scan(gabor_1536):
    A, B = frame_bounds(frame_diagonal(gabor_1536))
    # frozen from a loop-based evaluation of sum_n M g(l - a_n)^2
    assert A == pytest.approx(192.0, rel=1e-13)
    assert B == pytest.approx(1536.0, rel=1e-13)


def test_zero_in_diagonal_warns_and_is_not_frame():
    s = NsgfSystem.from_windows([(np.array([1.0, 0.0, 1.0]), 0, 4)], 4)
    d = frame_diagonal(s)
    assert not d.is_frame
    with pytest.warns(NearSingularWarning):
        A, B = frame_bounds(d)
    assert A == 0
    with pytest.raises(FrameError):
        canonical_dual(s)
    with pytest.raises(FrameError):
        canonical_tight(s)


@settings(max_examples=80, deadline=None)
@given(painless_systems())
def test_diagonal_matches_loop_oracle(system):
    np.testing.assert_allclose(
        frame_diagonal(system).values, direct_diagonal(system), rtol=1e-13
    )


# -- duals -----------------------------------------------------------------


def _tight_system():
    s = make_stationary_gabor(256, 16, 64)
    return canonical_tight(s)


def test_dual_of_tight_system_is_itself():
    t = _tight_system()
    np.testing.assert_allclose(canonical_dual(t).taps, t.taps, rtol=1e-12)
    np.testing.assert_allclose(canonical_tight(t).taps, t.taps, rtol=1e-12)


def test_constant_diagonal_scaling():
    M = 16
    s2 = NsgfSystem.from_windows([(np.full(M, (2 / M) ** 0.5), 0, M)], M)
    np.testing.assert_allclose(canonical_dual(s2).taps, s2.taps / 2, rtol=1e-15)
    s4 = NsgfSystem.from_windows([(np.full(M, (4 / M) ** 0.5), 0, M)], M)
    np.testing.assert_allclose(canonical_tight(s4).taps, s4.taps / 2, rtol=1e-15)


def _resolution(system, dual):
    out = np.zeros(system.length)
    for w, d in zip(system, dual):
        for j in range(w.taps.size):
            out[(w.position + j) % system.length] += w.channels * w.taps[j] * d.taps[j]
    return out


@settings(max_examples=80, deadline=None)
@given(painless_systems(tap_sign=True))
def test_resolution_of_identity(system):
    d = frame_diagonal(system)
    if not d.is_frame or d.lower < 1e-6 * d.upper:
        return
    dual = canonical_dual(system)
    assert dual.same_structure(system)
    np.testing.assert_allclose(_resolution(system, dual), 1.0, atol=1e-12)


@settings(max_examples=80, deadline=None)
@given(painless_systems())
def test_tight_diagonal_is_one_and_dual_of_dual(system):
    np.testing.assert_allclose(frame_diagonal(canonical_tight(system)).values, 1.0, atol=1e-12)
    dd = canonical_dual(canonical_dual(system))
    np.testing.assert_allclose(dd.taps, system.taps, rtol=1e-12)


def test_resolution_of_identity_scale_frame(scale_frame):
    dual = canonical_dual(scale_frame)
    G = np.zeros(scale_frame.length)
    np.add.at(G, scale_frame.flat_index, np.repeat(scale_frame.channels, scale_frame.lengths) * scale_frame.taps * dual.taps)
    np.testing.assert_allclose(G, 1.0, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(painless_systems(max_windows=5))
def test_adding_a_window_never_lowers_bounds(system):
    A0, B0 = frame_diagonal(system).lower, frame_diagonal(system).upper
    w = system.window(0)
    wins = [(x.taps, x.position, x.channels) for x in system] + [(w.taps * 0.5, w.position, w.channels)]
    bigger = NsgfSystem.from_windows(sorted(wins, key=lambda t: t[1]), system.length)
    d = frame_diagonal(bigger)
    assert d.lower >= A0 and d.upper >= B0


# -- painless report -------------------------------------------------------


def test_window_constant_hann():
    s = make_stationary_gabor(1024, 128, 256)
    rep = validate_painless(s, covering_from_system(s))
    # unit-peak taps: smallest C with |g| <= C * M**-0.5 is sqrt(M)
    assert rep.window_constant == pytest.approx(np.sqrt(256), rel=1e-15)
    assert rep.passed


def test_support_violation_flagged():
    s = NsgfSystem.from_windows([(hann(17), 0, 16), (hann(16), 8, 16)], 32)
    rep = validate_painless(s, covering_from_system(s))
    assert rep.support_violations == (0,)
    assert not rep.support_ok and not rep.passed


def test_scale_frame_report_passes(scale_frame):
    rep = validate_painless(scale_frame, covering_from_system(scale_frame))
    d = rep.to_dict()
    assert d["passed"], d
    assert np.isfinite([d["moderation"], d["separation"], d["window_constant"]]).all()
    assert d["n0"] >= 2
    json.dumps(d)


def test_painless_analysis_rejects_long_windows():
    from nsgframes.errors import PainlessError
    from nsgframes.transform import analyze

    s = NsgfSystem.from_windows([(hann(17), 0, 16), (hann(16), 8, 16)], 32)
    with pytest.raises(PainlessError):
        analyze(np.ones(32), s)
