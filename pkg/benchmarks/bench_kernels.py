"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--length 262144] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from nsgframes import _backend
from nsgframes.adapt import detect_onsets, scale_frame_schedule
from nsgframes.frame import canonical_dual, frame_diagonal, make_nsgf, make_stationary_gabor
from nsgframes.signal_io import generate, melody_spec
from nsgframes.transform import analyze, synthesize


def systems(f):
    T = f.length
    yield "gabor_1024_1536", make_stationary_gabor(T, 1024, 1536)
    yield "gabor_256_1024", make_stationary_gabor(T, 256, 1024)
    yield "scale_frame", make_nsgf(scale_frame_schedule(detect_onsets(f), T), T)


def bench(f, system, repeat):
    dual = canonical_dual(system)
    c = analyze(f, system)
    out = {}
    for name, fn in (
        ("diagonal", lambda: frame_diagonal(system)),
        ("analyze", lambda: analyze(f, system)),
        ("synthesize", lambda: synthesize(c, dual)),
    ):
        out[name] = min(timeit.repeat(fn, number=1, repeat=repeat))
    return out, synthesize(c, dual).samples


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--length", type=int, default=262144)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if "compiled" not in _backend.BACKENDS:
        print("compiled extension not built; only the python backend is available")
    f = generate(melody_spec(length=args.length))
    print(f"{'system':<18}{'stage':<12}" + "".join(f"{b:>12}" for b in _backend.BACKENDS) + "   speedup")
    for label, system in systems(f):
        timings, recs = {}, {}
        for b in _backend.BACKENDS:
            _backend.use_backend(b)
            timings[b], recs[b] = bench(f, system, args.repeat)
        if len(recs) == 2:
            assert np.array_equal(recs["python"], recs["compiled"]), "backends disagree"
        for stage in ("diagonal", "analyze", "synthesize"):
            cells = "".join(f"{timings[b][stage] * 1e3:>10.2f}ms" for b in _backend.BACKENDS)
            speed = ""
            if len(timings) == 2:
                speed = f"{timings['python'][stage] / timings['compiled'][stage]:>9.2f}x"
            print(f"{label:<18}{stage:<12}{cells}{speed}")


if __name__ == "__main__":
    main()
