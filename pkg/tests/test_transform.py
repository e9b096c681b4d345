import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsgframes import _backend
from nsgframes.errors import DimensionError, FormatError, SymmetryError
from nsgframes.frame import (
    NsgfSystem,
    canonical_dual,
    canonical_tight,
    frame_diagonal,
    make_stationary_gabor,
)
from nsgframes.signal_io import Signal
from nsgframes.transform import (
    CoefficientSet,
    analyze,
    apply_frame_operator,
    read_coefficients,
    synthesize,
    write_coefficients,
    write_coefficients_csv,
)
from oracles import direct_coefficients, direct_synthesis
from strategies import painless_systems


def _random_signal(system, seed):
    return np.random.default_rng(seed).standard_normal(system.length)


def test_zero_signal_gives_zero_coefficients(gabor_1536):
    c = analyze(np.zeros(gabor_1536.length), gabor_1536)
    assert not np.any(c.data)
    assert c.total_count == 393216 and c.n_blocks == 256


def test_single_full_window_is_plain_dft(rng):
    T = 96
    s = NsgfSystem.from_windows([(np.ones(T), 0, T)], T)
    f = rng.standard_normal(T)
    np.testing.assert_allclose(analyze(f, s).data, np.fft.fft(f), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(painless_systems(tap_sign=True), st.integers(0, 2**31))
def test_analysis_matches_direct_sums(system, seed):
    f = _random_signal(system, seed)
    c = analyze(f, system)
    for got, want in zip(c.blocks, direct_coefficients(f, system)):
        np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-12 * np.abs(want).max())


def test_scale_frame_blocks_match_direct_sums(scale_frame, rng):
    f = rng.standard_normal(scale_frame.length)
    c = analyze(f, scale_frame)
    T = scale_frame.length
    # a short window, a medium one, the longest, and one wrapping around T
    picks = {int(np.argmin(scale_frame.lengths)), int(np.argmax(scale_frame.lengths)), 10, scale_frame.n_windows - 1}
    for k in sorted(picks):
        w = scale_frame.window(k)
        idx = (w.position + np.arange(w.taps.size)) % T
        seg = f[idx] * w.taps
        j = np.arange(w.taps.size)
        m = np.arange(w.channels)[:, None]
        want = (seg[None, :] * np.exp(-2j * np.pi * m * j[None, :] / w.channels)).sum(axis=1)
        np.testing.assert_allclose(c.block(k), want, rtol=0, atol=1e-10 * np.abs(want).max())


def test_length_mismatch(gabor_1536):
    with pytest.raises(DimensionError):
        analyze(np.zeros(100), gabor_1536)


def test_zero_coefficients_synthesize_to_zero(scale_frame):
    c = analyze(np.zeros(scale_frame.length), scale_frame)
    assert not np.any(synthesize(c, canonical_dual(scale_frame)).samples)


def test_perfect_reconstruction_melody(melody, gabor_1536, scale_frame):
    for s in (gabor_1536, scale_frame):
        rec = synthesize(analyze(melody, s), canonical_dual(s)).samples
        err = np.linalg.norm(rec - melody.samples) / np.linalg.norm(melody.samples)
        assert err <= 1e-10


@settings(max_examples=60, deadline=None)
@given(painless_systems(tap_sign=True), st.integers(0, 2**31))
def test_perfect_reconstruction_random(system, seed):
    d = frame_diagonal(system)
    if d.lower < 1e-6 * d.upper:
        return
    f = _random_signal(system, seed)
    rec = synthesize(analyze(f, system), canonical_dual(system, d)).samples
    assert np.linalg.norm(rec - f) <= 1e-10 * np.linalg.norm(f)


@settings(max_examples=30, deadline=None)
@given(painless_systems(), st.integers(0, 2**31))
def test_synthesis_matches_direct_sums(system, seed):
    rng = np.random.default_rng(seed)
    c = analyze(rng.standard_normal(system.length), system)
    dual = canonical_dual(system)
    want = direct_synthesis(c.blocks, dual).real
    got = synthesize(c, dual).samples
    np.testing.assert_allclose(got, want, atol=1e-10 * np.abs(want).max())


def test_tight_system_is_self_dual(rng):
    t = canonical_tight(make_stationary_gabor(4096, 256, 1024))
    f = rng.standard_normal(4096)
    c = analyze(f, t)
    assert np.linalg.norm(synthesize(c, t).samples - f) <= 1e-10 * np.linalg.norm(f)
    assert np.sum(np.abs(c.data) ** 2) == pytest.approx(np.sum(f * f), rel=1e-10)
    np.testing.assert_allclose(apply_frame_operator(f, t).samples, f, atol=1e-12)


def test_frame_operator_is_diagonal(scale_frame, rng):
    G = frame_diagonal(scale_frame).values
    f = rng.standard_normal(scale_frame.length)
    Sf = apply_frame_operator(Signal(f), scale_frame).samples
    assert np.linalg.norm(Sf - G * f) <= 1e-10 * np.linalg.norm(f)


def test_frame_operator_on_impulse(gabor_1536):
    f = np.zeros(gabor_1536.length)
    f[12345] = 1.0
    G = frame_diagonal(gabor_1536).values
    expect = np.zeros_like(f)
    expect[12345] = G[12345]
    np.testing.assert_allclose(apply_frame_operator(f, gabor_1536).samples, expect, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(painless_systems(tap_sign=True), st.integers(0, 2**31))
def test_energy_between_frame_bounds(system, seed):
    f = _random_signal(system, seed)
    d = frame_diagonal(system)
    energy = np.sum(np.abs(analyze(f, system).data) ** 2)
    nf = np.sum(f * f)
    assert d.lower * nf * (1 - 1e-12) <= energy <= d.upper * nf * (1 + 1e-12)
    # the exact identity behind the bounds
    assert energy == pytest.approx(np.sum(d.values * f * f), rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(painless_systems(tap_sign=True), st.integers(0, 2**31), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(system, seed, a, b):
    rng = np.random.default_rng(seed)
    f, g = rng.standard_normal((2, system.length))
    lhs = analyze(a * f + b * g, system).data
    rhs = a * analyze(f, system).data + b * analyze(g, system).data
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * max(1.0, np.abs(rhs).max()))


@settings(max_examples=40, deadline=None)
@given(painless_systems(), st.integers(0, 2**31))
def test_hermitian_symmetry_is_exact(system, seed):
    c = analyze(_random_signal(system, seed), system)
    p = c.partner_index()
    assert np.array_equal(c.data[p], np.conj(c.data))


def test_asymmetric_coefficients_raise(rng):
    s = make_stationary_gabor(64, 16, 32)
    c = analyze(rng.standard_normal(64), s)
    bad = c.with_data(c.data * 1j)
    with pytest.raises(SymmetryError):
        synthesize(bad, canonical_dual(s))
    synthesize(bad, canonical_dual(s), strict=False)


def test_structure_mismatch(rng):
    s = make_stationary_gabor(64, 16, 32)
    other = make_stationary_gabor(64, 32, 32)
    c = analyze(rng.standard_normal(64), s)
    with pytest.raises(DimensionError):
        synthesize(c, other)
    with pytest.raises(DimensionError):
        CoefficientSet(np.zeros(5), c.layout)


def test_binary_dump_roundtrip(tmp_path, scale_frame, rng):
    c = analyze(rng.standard_normal(scale_frame.length), scale_frame)
    p = tmp_path / "c.bin"
    write_coefficients(c, p)
    back = read_coefficients(p)
    assert back.layout == c.layout
    assert back.data.tobytes() == c.data.tobytes()
    raw = p.read_bytes()
    assert int.from_bytes(raw[:8], "little") == scale_frame.length
    assert int.from_bytes(raw[8:16], "little") == scale_frame.n_windows
    assert len(raw) == 16 + 24 * scale_frame.n_windows + 16 * c.total_count
    p.write_bytes(raw[:-8])
    with pytest.raises(FormatError):
        read_coefficients(p)


def test_csv_export(tmp_path, rng):
    s = make_stationary_gabor(64, 16, 32)
    c = analyze(rng.standard_normal(64), s)
    p = tmp_path / "c.csv"
    write_coefficients_csv(c, p)
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["n", "m", "re", "im", "magnitude"]
    assert len(rows) == 1 + c.total_count
    n, m, re, im, mag = rows[1 + 40]
    assert (int(n), int(m)) == (1, 8)
    assert complex(float(re), float(im)) == c.block(1)[8]
    assert float(mag) == abs(c.block(1)[8])


def test_backends_agree_bitwise(melody, scale_frame):
    if len(_backend.BACKENDS) < 2:
        pytest.skip("compiled extension not built")
    out = {}
    previous = _backend.BACKEND
    try:
        for name in _backend.BACKENDS:
            _backend.use_backend(name)
            dual = canonical_dual(scale_frame)
            c = analyze(melody, scale_frame)
            out[name] = (
                frame_diagonal(scale_frame).values.tobytes(),
                c.data.tobytes(),
                synthesize(c, dual).samples.tobytes(),
            )
    finally:
        _backend.use_backend(previous)
    assert out["python"] == out["compiled"]


def test_perfect_reconstruction_each_backend(backend, rng):
    s = make_stationary_gabor(3072, 512, 768, 700)
    f = rng.standard_normal(3072)
    rec = synthesize(analyze(f, s), canonical_dual(s)).samples
    assert np.linalg.norm(rec - f) <= 1e-12 * np.linalg.norm(f)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.use_backend("gpu")
