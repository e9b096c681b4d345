"""N-term approximation: thresholding, error curves, rates and sequence norms."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, DimensionError, FitError, ParameterError
from .frame import NsgfSystem, canonical_dual
from .signal_io import Signal
from .transform import CoefficientSet, analyze, synthesize

__all__ = [
    "STANDARD_GRID",
    "ErrorCurve",
    "SequenceNormParams",
    "JacksonReport",
    "Thresholder",
    "threshold_top_n",
    "rms",
    "redundancy",
    "error_curve",
    "power_fit",
    "sequence_norm",
    "jackson_ratio",
    "jackson_report",
]

#: 10000..30000 step 1000, then 35000..200000 step 5000 (55 values)
STANDARD_GRID = tuple(range(10000, 30001, 1000)) + tuple(range(35000, 200001, 5000))

FIT_FLOOR = 1e-14


class Thresholder:
    """Sorted-magnitude index of one coefficient set, reused across many N.

    With ``half_spectrum`` only bins ``m <= M_n / 2`` compete and each kept
    bin brings its conjugate partner along, so ``N`` counts half-spectrum
    coefficients. Bins are then ranked by the coefficient energy they keep,
    ``2 |c|^2`` for a conjugate pair and ``|c|^2`` for a self-conjugate bin
    (DC, Nyquist), which makes the selection energy-optimal. Ties at the
    cutoff go to the smaller ``(n, m)``.
    """

    def __init__(self, coeffs: CoefficientSet, half_spectrum: bool = True):
        self.coeffs = coeffs
        self.half_spectrum = half_spectrum
        score = np.abs(coeffs.data) ** 2
        if half_spectrum:
            n, m = coeffs.bin_index()
            cand = np.flatnonzero(m <= coeffs.layout.channels[n] // 2)
            self._partner = coeffs.partner_index()
            score = score * np.where(self._partner == np.arange(score.size), 1.0, 2.0)
        else:
            cand = np.arange(coeffs.total_count)
            self._partner = None
        self.order = cand[np.argsort(-score[cand], kind="stable")]

    @property
    def capacity(self) -> int:
        return int(self.order.size)

    def mask(self, N: int) -> np.ndarray:
        if not 0 <= N <= self.capacity:
            raise ParameterError(f"N = {N} outside [0, {self.capacity}]")
        keep = np.zeros(self.coeffs.total_count, dtype=bool)
        chosen = self.order[:N]
        keep[chosen] = True
        if self._partner is not None:
            keep[self._partner[chosen]] = True
        return keep

    def __call__(self, N: int) -> CoefficientSet:
        return self.coeffs.with_data(np.where(self.mask(N), self.coeffs.data, 0))


def threshold_top_n(coeffs: CoefficientSet, N: int, half_spectrum: bool = True) -> CoefficientSet:
    """Keep the ``N`` largest-magnitude coefficients, zero the rest."""
    return Thresholder(coeffs, half_spectrum)(N)


def rms(f: Signal | np.ndarray, f_rec: Signal | np.ndarray) -> float:
    """Relative error ``||f - f_rec|| / ||f||``."""
    a = f.samples if isinstance(f, Signal) else np.asarray(f, dtype=float)
    b = f_rec.samples if isinstance(f_rec, Signal) else np.asarray(f_rec, dtype=float)
    if a.shape != b.shape:
        raise DimensionError("signals differ in length")
    ref = float(np.linalg.norm(a))
    if ref == 0:
        raise DegenerateInputError("relative RMS undefined for a zero reference signal")
    return float(np.linalg.norm(a - b)) / ref


def redundancy(system: NsgfSystem) -> float:
    """Coefficient count over signal length (all frequencies)."""
    return system.total_coefficients / system.length


# ---------------------------------------------------------------------------
# error curves


def power_fit(N: Sequence[float], E: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit of ``E = C * N**-alpha`` in log-log coordinates.

    Points with ``E <= 1e-14`` are ignored. Returns ``(C, alpha)``.
    """
    N = np.asarray(N, dtype=float)
    E = np.asarray(E, dtype=float)
    if N.shape != E.shape:
        raise DimensionError("N and E must have equal length")
    use = (E > FIT_FLOOR) & (N > 0)
    if np.count_nonzero(use) < 2:
        raise FitError("power regression needs at least two points with E > 1e-14")
    x = np.log(N[use])
    y = np.log(E[use])
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx == 0:
        raise FitError("power regression needs at least two distinct N")
    slope = float(dx @ (y - ym)) / sxx
    return math.exp(ym - slope * xm), -slope


@dataclass(frozen=True)
class ErrorCurve:
    counts: np.ndarray
    errors: np.ndarray
    fit_C: float
    fit_alpha: float
    half_spectrum: bool = True

    @property
    def points(self) -> list[tuple[int, float]]:
        return [(int(n), float(e)) for n, e in zip(self.counts, self.errors)]

    @property
    def total_error(self) -> float:
        """Sum of the errors over the grid."""
        return float(np.sum(self.errors))

    def fitted(self) -> np.ndarray:
        return self.fit_C * self.counts.astype(float) ** -self.fit_alpha

    def first_below(self, level: float) -> int | None:
        hit = np.flatnonzero(self.errors < level)
        return int(self.counts[hit[0]]) if hit.size else None

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.errors) <= 0))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N", "E", "fitted_E"])
            for n, e, fe in zip(self.counts.tolist(), self.errors.tolist(), self.fitted().tolist()):
                w.writerow([n, f"{e:.17g}", f"{fe:.17g}"])

    def summary(self) -> dict:
        return {
            "C": self.fit_C,
            "alpha": self.fit_alpha,
            "grid": [int(n) for n in self.counts],
            "half_spectrum": self.half_spectrum,
            "sum_E": self.total_error,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(list(grid), dtype=np.int64)
    if g.size == 0:
        raise ParameterError("grid must not be empty")
    if np.any(np.diff(g) <= 0):
        raise ParameterError("grid must be strictly increasing")
    if g[0] < 0:
        raise ParameterError("grid counts must be nonnegative")
    return g


def error_curve(
    f: Signal,
    system: NsgfSystem,
    grid: Sequence[int] = STANDARD_GRID,
    half_spectrum: bool = True,
    dual: NsgfSystem | None = None,
) -> ErrorCurve:
    """Relative RMS of the N-term approximation for each ``N`` in ``grid``."""
    g = _check_grid(grid)
    coeffs = analyze(f, system)
    dual = canonical_dual(system) if dual is None else dual
    thr = Thresholder(coeffs, half_spectrum)
    if g[-1] > thr.capacity:
        raise ParameterError(f"grid reaches {g[-1]} but only {thr.capacity} coefficients compete")
    errs = np.empty(g.size)
    for i, N in enumerate(g):
        rec = synthesize(thr(int(N)), dual, strict=half_spectrum)
        errs[i] = rms(f, rec)
    try:
        C, alpha = power_fit(g, errs)
    except FitError:
        C, alpha = math.nan, math.nan
    return ErrorCurve(g, errs, C, alpha, half_spectrum)


# ---------------------------------------------------------------------------
# sequence norms


@dataclass(frozen=True)
class SequenceNormParams:
    p: float = 2.0
    q: float = 2.0
    s: float = 0.0
    weights: object = None

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1):
            raise ParameterError("p and q must be at least 1")

    def weight_values(self):
        w = self.weights
        if w is None:
            return None
        return np.asarray(getattr(w, "values", w), dtype=float)


def _lp(x: np.ndarray, p: float, axis=None):
    if math.isinf(p):
        return np.max(x, axis=axis, initial=0.0)
    if p == 1:
        return np.sum(x, axis=axis)
    if p == 2:
        return np.sqrt(np.sum(x * x, axis=axis))
    return np.sum(x**p, axis=axis) ** (1.0 / p)


def weighted_lq(local: np.ndarray, q: float, s: float, weights) -> float:
    """``|| {w_n^s * local_n} ||_q``."""
    local = np.asarray(local, dtype=float)
    if s != 0:
        if weights is None:
            raise ParameterError("a nonzero weight exponent needs weights")
        w = np.asarray(weights, dtype=float)
        if w.size != local.size:
            raise DimensionError(f"{w.size} weights for {local.size} windows")
        local = local * w**s
    elif weights is not None and np.asarray(weights).size != local.size:
        raise DimensionError("weight count does not match window count")
    return float(_lp(local, q))


def block_norms(coeffs: CoefficientSet, p: float) -> np.ndarray:
    """``||c[n][.]||_p`` for every block."""
    mag = np.abs(coeffs.data)
    off = coeffs.offsets[:-1]
    if math.isinf(p):
        return np.maximum.reduceat(mag, off)
    if p == 2:
        return np.sqrt(np.add.reduceat(mag * mag, off))
    return np.add.reduceat(mag**p, off) ** (1.0 / p)


def sequence_norm(coeffs: CoefficientSet, params: SequenceNormParams = SequenceNormParams()) -> float:
    """Mixed norm: inner l^p over bins, outer weighted l^q over windows."""
    return weighted_lq(block_norms(coeffs, params.p), params.q, params.s, params.weight_values())


# ---------------------------------------------------------------------------
# Jackson-type bound


@dataclass(frozen=True)
class JacksonReport:
    counts: np.ndarray
    residuals: np.ndarray
    ratios: np.ndarray
    tail_bounds: np.ndarray
    tau_norm: float
    tau: float

    @property
    def alpha(self) -> float:
        return 1.0 / self.tau - 0.5

    @property
    def spread(self) -> float:
        r = self.ratios[self.ratios > 0]
        return float(r.max() / r.min()) if r.size else 1.0

    @property
    def tail_ok(self) -> bool:
        # the bound can be attained (orthonormal case); allow rounding
        return bool(np.all(self.residuals <= self.tail_bounds * (1 + 1e-12)))


def jackson_report(
    coeffs: CoefficientSet,
    dual: NsgfSystem,
    tau: float,
    grid: Sequence[int],
    bounds: tuple[float, float] | None = None,
    half_spectrum: bool = True,
) -> JacksonReport:
    """Residuals of N-term approximations of ``f = R(coeffs)``.

    ``ratios[i] = ||f - f_N|| / (N**-alpha * ||coeffs||_{tau,tau})`` with
    ``alpha = 1/tau - 1/2``. With frame bounds ``(A, B)`` of the analysis
    system, ``tail_bounds[i] = sqrt(B) / A * ||dropped coefficients||_2``.
    """
    if not 1 <= tau < 2:
        raise ParameterError("tau must lie in [1, 2)")
    g = _check_grid(grid)
    norm = sequence_norm(coeffs, SequenceNormParams(tau, tau))
    if norm == 0:
        raise DegenerateInputError("coefficient tau-norm is zero")
    alpha = 1.0 / tau - 0.5
    thr = Thresholder(coeffs, half_spectrum)
    if g[-1] > thr.capacity:
        raise ParameterError(f"grid reaches {g[-1]} but only {thr.capacity} coefficients compete")
    res = np.empty(g.size)
    tails = np.full(g.size, np.inf)
    for i, N in enumerate(g):
        keep = thr.mask(int(N))
        dropped = coeffs.with_data(np.where(keep, 0, coeffs.data))
        res[i] = np.linalg.norm(synthesize(dropped, dual, strict=half_spectrum).samples)
        if bounds is not None:
            A, B = bounds
            tails[i] = math.sqrt(B) / A * float(np.linalg.norm(dropped.data))
    ratios = res / (g.astype(float) ** -alpha * norm)
    return JacksonReport(g, res, ratios, tails, norm, tau)


def jackson_ratio(
    f: Signal,
    system: NsgfSystem,
    tau: float,
    grid: Sequence[int],
    half_spectrum: bool = True,
) -> np.ndarray:
    """Per-N ratios ``||f - f_N|| / (N**-alpha ||<f, g>||_{tau,tau})``."""
    coeffs = analyze(f, system)
    return jackson_report(coeffs, canonical_dual(system), tau, grid, None, half_spectrum).ratios
