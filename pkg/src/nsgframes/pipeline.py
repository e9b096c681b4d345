"""Experiment configuration and drivers behind the command-line tool.

A configuration is one JSON document::

    {
      "input": "song.wav" | "corpus/" | {"preset": "melody"} | {SyntheticSpec fields},
      "transforms": [
        {"type": "gabor", "hop": 1024, "channels": 1536, "window_length": 1536},
        {"type": "scale_frame", "base": 192, "levels": 8, "overlap": 0.5,
         "onsets": {OnsetParams fields}}
      ],
      "n_grid": "standard" | "1000:40000:1000" | [1000, 2000],
      "outputs": "out",
      "emit": {"csv": true, "pgm": true, "json": true},
      "half_spectrum": true,
      "signal_length": null,
      "jobs": 1
    }

Every key is optional; see :data:`DEFAULT_TRANSFORMS` and
:class:`ExperimentConfig` for defaults.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .adapt import OnsetParams, detect_onsets, ladder, scale_frame_schedule
from .approx import STANDARD_GRID, ErrorCurve, Thresholder, error_curve, redundancy, rms
from .covering import build_bapu, check_admissible, covering_from_system
from .errors import NsgfError, NsgfIOError, ParameterError
from .frame import (
    NsgfSystem,
    canonical_dual,
    frame_bounds,
    frame_diagonal,
    make_nsgf,
    make_stationary_gabor,
    validate_painless,
)
from .render import default_samples_per_pixel, write_spectrogram
from .signal_io import Signal, SyntheticSpec, generate, load_wav, melody_spec
from .transform import analyze, synthesize

__all__ = [
    "GaborConfig",
    "ScaleFrameConfig",
    "ExperimentConfig",
    "DEFAULT_TRANSFORMS",
    "parse_grid",
    "load_input",
    "prepare_signal",
    "build_system",
    "smallest_n_below",
    "run_transform",
    "cmd_compare",
    "cmd_corpus",
    "cmd_spectrogram",
    "cmd_validate",
]

log = logging.getLogger("nsgframes")

TARGET_ERROR = 0.01


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class GaborConfig:
    hop: int = 1024
    channels: int = 1536
    window_length: int | None = None
    name: str | None = None

    def __post_init__(self):
        wl = self.channels if self.window_length is None else self.window_length
        if self.hop <= 0 or self.channels <= 0 or wl <= 0:
            raise ParameterError("gabor hop, channels and window_length must be positive")
        if wl > self.channels:
            raise ParameterError(f"window_length {wl} exceeds channels {self.channels}")

    @property
    def label(self) -> str:
        wl = self.channels if self.window_length is None else self.window_length
        if self.name:
            return self.name
        if wl == self.channels:
            return f"gabor_{self.hop}_{self.channels}"
        return f"gabor_{self.hop}_{self.channels}_{wl}"

    def to_dict(self) -> dict:
        return {
            "type": "gabor",
            "hop": self.hop,
            "channels": self.channels,
            "window_length": self.window_length,
            "name": self.name,
        }


@dataclass(frozen=True)
class ScaleFrameConfig:
    base: int = 192
    levels: int = 8
    overlap: float = 0.5
    onsets: OnsetParams = field(default_factory=OnsetParams)
    name: str | None = None

    def __post_init__(self):
        self.onsets.check_ladder(ladder(self.base, self.levels))
        if not 0 < self.overlap < 2 / 3:
            raise ParameterError("overlap must lie in (0, 2/3)")

    @property
    def label(self) -> str:
        return self.name or "scale_frame"

    def to_dict(self) -> dict:
        return {
            "type": "scale_frame",
            "base": self.base,
            "levels": self.levels,
            "overlap": self.overlap,
            "onsets": {f.name: getattr(self.onsets, f.name) for f in fields(OnsetParams)},
            "name": self.name,
        }


TransformConfig = GaborConfig | ScaleFrameConfig

DEFAULT_TRANSFORMS: tuple = (
    GaborConfig(1024, 2048),
    GaborConfig(1536, 2048),
    GaborConfig(1024, 1536),
    ScaleFrameConfig(),
)


def transform_from_dict(d: Mapping[str, Any]) -> TransformConfig:
    d = dict(d)
    kind = d.pop("type", None)
    try:
        if kind == "gabor":
            return GaborConfig(**d)
        if kind == "scale_frame":
            onsets = OnsetParams(**d.pop("onsets", {}))
            return ScaleFrameConfig(onsets=onsets, **d)
    except TypeError as exc:
        raise ParameterError(f"bad {kind} transform entry: {exc}") from None
    raise ParameterError(f"unknown transform type {kind!r} (expected gabor or scale_frame)")


def parse_grid(spec) -> tuple[int, ...]:
    """``"standard"``, a list of ints, or comma-separated ``a:b:step`` / ``n`` items.

    Ranges are inclusive of both ends.
    """
    if isinstance(spec, str):
        text = spec.strip()
        if text == "standard":
            return STANDARD_GRID
        out: list[int] = []
        for item in filter(None, (s.strip() for s in text.split(","))):
            parts = item.split(":")
            try:
                if len(parts) == 1:
                    out.append(int(parts[0]))
                elif len(parts) == 3:
                    a, b, step = (int(p) for p in parts)
                    if step <= 0:
                        raise ParameterError(f"grid step must be positive in {item!r}")
                    out.extend(range(a, b + 1, step))
                else:
                    raise ValueError
            except ValueError:
                raise ParameterError(f"cannot parse grid item {item!r}") from None
        grid = tuple(out)
    else:
        try:
            grid = tuple(int(n) for n in spec)
        except (TypeError, ValueError):
            raise ParameterError(f"cannot parse grid {spec!r}") from None
    if not grid:
        raise ParameterError("grid must not be empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParameterError("grid must be strictly increasing")
    if grid[0] < 0:
        raise ParameterError("grid counts must be nonnegative")
    return grid


def _input_from(raw):
    if isinstance(raw, (str, os.PathLike)):
        return str(raw)
    if isinstance(raw, SyntheticSpec):
        return raw
    if isinstance(raw, Mapping):
        try:
            if "preset" in raw:
                if raw["preset"] != "melody":
                    raise ParameterError(f"unknown input preset {raw['preset']!r}")
                opts = {k: v for k, v in raw.items() if k != "preset"}
                return melody_spec(**opts)
            return SyntheticSpec.from_dict(raw)
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"bad synthetic input description: {exc}") from None
    raise ParameterError("input must be a path or a synthetic signal description")


@dataclass(frozen=True)
class ExperimentConfig:
    input: Any = None
    transforms: tuple = DEFAULT_TRANSFORMS
    n_grid: tuple = STANDARD_GRID
    outputs: str = "out"
    emit: Mapping[str, bool] = field(
        default_factory=lambda: {"csv": True, "pgm": True, "json": True}
    )
    half_spectrum: bool = True
    # truncate or zero-pad every input to this many samples before use
    signal_length: int | None = None
    jobs: int = 1

    def __post_init__(self):
        if not self.transforms:
            raise ParameterError("at least one transform is required")
        object.__setattr__(self, "n_grid", parse_grid(self.n_grid))
        if self.input is not None:
            object.__setattr__(self, "input", _input_from(self.input))
        emit = {"csv": True, "pgm": True, "json": True}
        for k, v in dict(self.emit).items():
            if k not in emit:
                raise ParameterError(f"unknown emit flag {k!r}")
            emit[k] = bool(v)
        object.__setattr__(self, "emit", emit)
        if self.signal_length is not None and self.signal_length <= 0:
            raise ParameterError("signal_length must be positive")
        if self.jobs < 1:
            raise ParameterError("jobs must be at least 1")
        labels = [t.label for t in self.transforms]
        if len(set(labels)) != len(labels):
            raise ParameterError(f"transform names must be unique, got {labels}")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown config keys {sorted(unknown)}")
        kw = dict(d)
        if "transforms" in kw:
            kw["transforms"] = tuple(
                t if isinstance(t, (GaborConfig, ScaleFrameConfig)) else transform_from_dict(t)
                for t in kw["transforms"]
            )
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParameterError(f"config is not valid JSON: {exc}") from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise NsgfIOError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(text)

    def replace(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Override the seed of a seeded synthetic input."""
        if not isinstance(self.input, SyntheticSpec):
            raise ParameterError("--seed applies to synthetic inputs only")
        params = dict(self.input.parameters)
        params["seed"] = int(seed)
        return self.replace(input=replace(self.input, parameters=params))

    def to_dict(self) -> dict:
        inp = self.input
        if isinstance(inp, SyntheticSpec):
            inp = json.loads(inp.to_json())
        return {
            "input": inp,
            "transforms": [t.to_dict() for t in self.transforms],
            "n_grid": list(self.n_grid),
            "outputs": self.outputs,
            "emit": dict(self.emit),
            "half_spectrum": self.half_spectrum,
            "signal_length": self.signal_length,
            "jobs": self.jobs,
        }


# ---------------------------------------------------------------------------
# signals and systems


def load_input(source) -> Signal:
    if isinstance(source, SyntheticSpec):
        return generate(source)
    if source is None:
        raise ParameterError("no input given")
    return load_wav(source)


def prepare_signal(
    f: Signal, transforms: Sequence[TransformConfig], signal_length: int | None = None
) -> Signal:
    """Fix the length, then zero-pad to a multiple of every Gabor hop."""
    if signal_length is not None:
        if f.length > signal_length:
            f = f.with_samples(f.samples[:signal_length])
        else:
            f = f.padded_to(signal_length)
    step = 1
    for t in transforms:
        if isinstance(t, GaborConfig):
            step = math.lcm(step, t.hop)
    return f.padded_to(-(-f.length // step) * step)


def build_system(f: Signal, conf: TransformConfig) -> tuple[NsgfSystem, dict]:
    """The analysis system of one transform for signal ``f``, plus metadata."""
    T = f.length
    if isinstance(conf, GaborConfig):
        system = make_stationary_gabor(T, conf.hop, conf.channels, conf.window_length)
        return system, {}
    rungs = ladder(conf.base, conf.levels)
    onsets = detect_onsets(f, conf.onsets)
    schedule = scale_frame_schedule(onsets, T, rungs, conf.overlap)
    return make_nsgf(schedule, T), {"onsets": [int(o) for o in onsets]}


def half_capacity(system: NsgfSystem) -> int:
    """Number of bins ``m <= M_n / 2``, the most a half-spectrum ``N`` can be."""
    return int(np.sum(system.channels // 2 + 1))


def smallest_n_below(
    f: Signal, thr: Thresholder, dual: NsgfSystem, level: float = TARGET_ERROR
) -> int | None:
    """Smallest ``N`` with error below ``level``, by bisection.

    Assumes the error decreases with ``N``; ``None`` if even keeping every
    coefficient misses ``level``.
    """
    strict = thr.half_spectrum

    def err(N):
        return rms(f, synthesize(thr(N), dual, strict=strict))

    lo, hi = 0, thr.capacity
    if err(hi) >= level:
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if err(mid) < level:
            hi = mid
        else:
            lo = mid + 1
    return lo


@dataclass
class TransformResult:
    label: str
    system: NsgfSystem
    redundancy: float
    curve: ErrorCurve
    pr_error: float
    meta: dict

    def row(self) -> dict:
        return {
            "transform": self.label,
            "redundancy": self.redundancy,
            "n_windows": self.system.n_windows,
            "total_coefficients": self.system.total_coefficients,
            "C": self.curve.fit_C,
            "alpha": self.curve.fit_alpha,
            "sum_E": self.curve.total_error,
            "first_grid_N_below_1pct": self.curve.first_below(TARGET_ERROR),
            "pr_error": self.pr_error,
        }


def run_transform(
    f: Signal, conf: TransformConfig, grid: Sequence[int], half_spectrum: bool = True
) -> TransformResult:
    system, meta = build_system(f, conf)
    cap = half_capacity(system) if half_spectrum else system.total_coefficients
    if grid[-1] > cap:
        raise ParameterError(
            f"{conf.label}: grid reaches {grid[-1]} but the signal of length {f.length} "
            f"has only {cap} coefficients to select from"
        )
    dual = canonical_dual(system)
    coeffs = analyze(f, system)
    pr = rms(f, synthesize(coeffs, dual))
    curve = error_curve(f, system, grid, half_spectrum, dual)
    meta = dict(meta, coeffs=coeffs, dual=dual)
    return TransformResult(conf.label, system, redundancy(system), curve, pr, meta)


# ---------------------------------------------------------------------------
# output handling


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (np.floating,)):
        return _jsonable(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=1) + "\n")


class OutputSet:
    """Tracks written files so a failed command leaves nothing behind."""

    def __init__(self, directory):
        self.dir = Path(directory)
        self.written: list[Path] = []

    def __enter__(self):
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise NsgfIOError(f"cannot create output directory {self.dir}: {exc}") from exc
        return self

    def path(self, name: str) -> Path:
        p = self.dir / name
        self.written.append(p)
        return p

    def csv(self, name, header, rows):
        self._guard(_write_csv, self.path(name), header, rows)

    def json(self, name, obj):
        self._guard(_write_json, self.path(name), obj)

    def spectrogram(self, name, coeffs, sample_rate, **kw):
        p = self.path(name)
        self.written.append(Path(str(p) + ".json"))
        return write_spectrogram(p, coeffs, sample_rate, **kw)

    @staticmethod
    def _guard(fn, path, *args):
        try:
            fn(path, *args)
        except OSError as exc:
            raise NsgfIOError(f"cannot write {path}: {exc}") from exc

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            for p in self.written:
                try:
                    p.unlink()
                except FileNotFoundError:
                    pass
        return False


# ---------------------------------------------------------------------------
# commands


def cmd_compare(config: ExperimentConfig) -> dict:
    """Error curves, fits, spectrograms and a summary for every transform."""
    f = prepare_signal(load_input(config.input), config.transforms, config.signal_length)
    grid = config.n_grid
    emit = config.emit
    rows = []
    with OutputSet(config.outputs) as out:
        for conf in config.transforms:
            res = run_transform(f, conf, grid, config.half_spectrum)
            coeffs, dual = res.meta["coeffs"], res.meta["dual"]
            thr = Thresholder(coeffs, config.half_spectrum)
            n_min = smallest_n_below(f, thr, dual)
            row = res.row()
            row["min_N_below_1pct"] = n_min
            rows.append(row)
            slug = res.label
            if emit["csv"]:
                out.csv(
                    f"{slug}_curve.csv",
                    ["N", "E", "fitted_E"],
                    list(zip(res.curve.counts.tolist(), res.curve.errors, res.curve.fitted())),
                )
            if emit["json"]:
                report = dict(row, grid=list(grid), half_spectrum=config.half_spectrum)
                if "onsets" in res.meta:
                    report["onsets"] = res.meta["onsets"]
                out.json(f"{slug}_fit.json", report)
            if emit["pgm"]:
                spp = default_samples_per_pixel(f.length)
                ref = float(np.max(np.abs(coeffs.data)))
                out.spectrogram(
                    f"{slug}_original.pgm", coeffs, f.sample_rate, samples_per_pixel=spp, ref=ref
                )
                n_show = grid[-1] if n_min is None else n_min
                out.spectrogram(
                    f"{slug}_thresholded.pgm",
                    thr(n_show),
                    f.sample_rate,
                    samples_per_pixel=spp,
                    ref=ref,
                )
        header = list(rows[0])
        if emit["csv"]:
            out.csv("compare_summary.csv", header, [[r[k] for k in header] for r in rows])
        summary = {
            "signal_length": f.length,
            "sample_rate": f.sample_rate,
            "half_spectrum": config.half_spectrum,
            "transforms": rows,
        }
        if emit["json"]:
            out.json("compare_summary.json", summary)
    return summary


def _corpus_file(args):
    path, transforms, grid, half, signal_length = args
    try:
        f = prepare_signal(load_wav(path), transforms, signal_length)
        results = []
        for conf in transforms:
            res = run_transform(f, conf, grid, half)
            results.append((conf.label, res.redundancy, res.curve.total_error, res.curve.fit_alpha))
        return path, results, None
    except (NsgfError, ValueError) as exc:
        return path, None, f"{type(exc).__name__}: {exc}"


def cmd_corpus(config: ExperimentConfig) -> dict:
    """Per-file and averaged redundancy, summed error and rate over a WAV directory."""
    src = config.input
    if not isinstance(src, str) or not Path(src).is_dir():
        raise ParameterError(f"corpus input must be a directory, got {src!r}")
    files = sorted(p for p in Path(src).iterdir() if p.suffix.lower() == ".wav" and p.is_file())
    if not files:
        raise ParameterError(f"empty corpus: no .wav files in {src}")
    jobs = [
        (str(p), config.transforms, config.n_grid, config.half_spectrum, config.signal_length)
        for p in files
    ]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_corpus_file, jobs))
    else:
        outcomes = [_corpus_file(j) for j in jobs]

    labels = [t.label for t in config.transforms]
    per_file, skipped = [], []
    for path, results, err in outcomes:
        name = Path(path).name
        if err is not None:
            log.warning("skipping %s: %s", name, err)
            skipped.append({"file": name, "reason": err})
            continue
        for label, red, sum_e, alpha in results:
            per_file.append((name, label, red, sum_e, alpha))
    if not per_file:
        raise ParameterError("no corpus file could be processed")

    averages = {}
    for label in labels:
        vals = np.array([r[2:] for r in per_file if r[1] == label], dtype=float)
        averages[label] = {
            "redundancy": float(np.mean(vals[:, 0])),
            "sum_E": float(np.mean(vals[:, 1])),
            "alpha": float(np.mean(vals[:, 2])),
        }
    report = {
        "files": sorted({r[0] for r in per_file}),
        "skipped": skipped,
        "grid": list(config.n_grid),
        "half_spectrum": config.half_spectrum,
        "averages": averages,
    }
    with OutputSet(config.outputs) as out:
        if config.emit["csv"]:
            out.csv(
                "corpus_per_file.csv",
                ["file", "transform", "redundancy", "sum_E", "alpha"],
                per_file,
            )
            table = [
                [title] + [averages[lab][key] for lab in labels]
                for title, key in (
                    ("Average redun.", "redundancy"),
                    ("Average error", "sum_E"),
                    ("Average alpha", "alpha"),
                )
            ]
            out.csv("corpus_table.csv", [""] + labels, table)
        if config.emit["json"]:
            out.json("corpus_report.json", report)
    return report


def cmd_spectrogram(
    config: ExperimentConfig, transform: str | None = None, n_keep: int | None = None
) -> dict:
    """One spectrogram PGM (and sidecar) of the original or thresholded expansion."""
    confs = config.transforms
    if transform is not None:
        confs = [t for t in confs if t.label == transform]
        if not confs:
            raise ParameterError(f"no transform named {transform!r}")
    conf = confs[0]
    f = prepare_signal(load_input(config.input), [conf], config.signal_length)
    system, _ = build_system(f, conf)
    coeffs = analyze(f, system)
    ref = float(np.max(np.abs(coeffs.data)))
    name = f"{conf.label}.pgm"
    if n_keep is not None:
        coeffs = Thresholder(coeffs, config.half_spectrum)(n_keep)
        name = f"{conf.label}_N{n_keep}.pgm"
    with OutputSet(config.outputs) as out:
        meta = out.spectrogram(
            name,
            coeffs,
            f.sample_rate,
            samples_per_pixel=default_samples_per_pixel(f.length),
            ref=ref if ref > 0 else None,
        )
    return dict(meta, file=name, transform=conf.label)


def validate_system(system: NsgfSystem, c_star: float = 0.1) -> dict:
    """Frame bounds, painless conditions and partition-of-unity deviation."""
    diag = frame_diagonal(system)
    A, B = frame_bounds(diag)
    cov = covering_from_system(system, c_star)
    painless = validate_painless(system, cov)
    try:
        check_admissible(cov)
        dev = float(np.max(np.abs(build_bapu(cov).total() - 1.0)))
    except NsgfError as exc:
        dev = None
        log.warning("partition of unity unavailable: %s", exc)
    return {
        "n_windows": system.n_windows,
        "redundancy": redundancy(system),
        "frame_bounds": [A, B],
        "is_frame": diag.is_frame,
        "painless": painless.to_dict(),
        "bapu_max_deviation": dev,
        "passed": bool(diag.is_frame and painless.passed and dev is not None and dev <= 1e-12),
    }


def cmd_validate(config: ExperimentConfig) -> dict:
    f = prepare_signal(load_input(config.input), config.transforms, config.signal_length)
    reports = {}
    for conf in config.transforms:
        system, meta = build_system(f, conf)
        reports[conf.label] = dict(validate_system(system), **meta)
    report = {
        "signal_length": f.length,
        "transforms": reports,
        "passed": all(r["passed"] for r in reports.values()),
    }
    if config.emit["json"]:
        with OutputSet(config.outputs) as out:
            out.json("validate_report.json", report)
    return report

