"""Decomposition-space norms and the coefficient-norm equivalence check."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .approx import SequenceNormParams, sequence_norm, weighted_lq
from .covering import Bapu, ModerateWeight
from .errors import DegenerateInputError, DimensionError, ParameterError
from .frame import NsgfSystem
from .signal_io import Signal
from .transform import analyze

__all__ = [
    "DecompNormParams",
    "EquivalenceReport",
    "local_norms",
    "decomposition_norm",
    "equivalence_report",
    "equivalence_battery",
]


@dataclass(frozen=True)
class DecompNormParams:
    bapu: Bapu
    weights: ModerateWeight | None = None
    p: float = 2.0
    q: float = 2.0
    s: float = 0.0

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1):
            raise ParameterError("p and q must be at least 1")
        if self.weights is not None and len(self.weights.values) != len(self.bapu):
            raise DimensionError("weights and BAPU come from different coverings")

    def replace(self, **kw) -> "DecompNormParams":
        d = dict(bapu=self.bapu, weights=self.weights, p=self.p, q=self.q, s=self.s)
        d.update(kw)
        return DecompNormParams(**d)


def local_norms(f: Signal | np.ndarray, bapu: Bapu, p: float = 2.0) -> np.ndarray:
    """``||psi_n f||_p`` as unit-step Riemann sums, one per BAPU member."""
    x = f.samples if isinstance(f, Signal) else np.asarray(f, dtype=float)
    if x.size != bapu.period:
        raise DimensionError(f"signal length {x.size} != BAPU grid {bapu.period}")
    out = np.empty(len(bapu))
    for n in range(len(bapu)):
        v = np.abs(bapu.values[n] * x[bapu.indices(n)])
        if math.isinf(p):
            out[n] = v.max(initial=0.0)
        else:
            out[n] = np.sum(v**p) ** (1.0 / p)
    return out


def decomposition_norm(f: Signal | np.ndarray, params: DecompNormParams) -> float:
    """``|| { ||psi_n f||_p } ||_{l^q weighted by w^s}``."""
    w = None if params.weights is None else params.weights.values
    return weighted_lq(local_norms(f, params.bapu, params.p), params.q, params.s, w)


@dataclass(frozen=True)
class EquivalenceReport:
    ratios: np.ndarray
    q: float
    s: float

    @property
    def ratio(self) -> float:
        return float(self.ratios[0])

    @property
    def minimum(self) -> float:
        return float(self.ratios.min())

    @property
    def maximum(self) -> float:
        return float(self.ratios.max())

    @property
    def spread(self) -> float:
        return self.maximum / self.minimum

    def to_json(self) -> str:
        return json.dumps(
            {
                "ratios": [float(r) for r in self.ratios],
                "min": self.minimum,
                "max": self.maximum,
                "spread": self.spread,
                "q": self.q,
                "s": self.s,
                "p": 2,
            },
            sort_keys=True,
        )


def _ratio(f, system, params):
    d = decomposition_norm(f, params)
    if d == 0:
        raise DegenerateInputError("decomposition norm is zero (zero signal)")
    w = None if params.weights is None else params.weights
    c = sequence_norm(analyze(f, system), SequenceNormParams(2.0, params.q, params.s, w))
    return c / d


def equivalence_report(
    f: Signal | np.ndarray,
    system: NsgfSystem,
    params: DecompNormParams,
    q_norm: float | None = None,
    s: float | None = None,
) -> EquivalenceReport:
    """Coefficient-norm over decomposition-norm ratio at ``p = 2``."""
    return equivalence_battery([f], system, params, q_norm, s)


def equivalence_battery(
    signals: Iterable,
    system: NsgfSystem,
    params: DecompNormParams,
    q_norm: float | None = None,
    s: float | None = None,
) -> EquivalenceReport:
    """Ratios over a battery of test signals; bounded spread is the claim."""
    if params.p != 2:
        raise ParameterError("the two-sided equivalence is checked at p = 2 only")
    q = params.q if q_norm is None else q_norm
    s = params.s if s is None else s
    params = params.replace(q=q, s=s)
    ratios = np.array([_ratio(f, system, params) for f in signals])
    if ratios.size == 0:
        raise ParameterError("empty signal battery")
    return EquivalenceReport(ratios, q, s)
