"""Leading-digit statistics against the Benford distribution.

Digit probability vectors are plain length-9 arrays wrapped in
:class:`DigitPmf`; index 0 holds digit 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = [
    "DIGITS",
    "DigitPmf",
    "DigitHistogram",
    "RegressionFit",
    "EmptyHistogramError",
    "DivergenceUndefinedError",
    "ideal_distribution",
    "leading_digit",
    "leading_digits",
    "digit_histogram",
    "to_pmf",
    "kl_divergence",
    "average_speaker_pmfs",
    "conformity_regression",
]

DIGITS = np.arange(1, 10)


class EmptyHistogramError(ValueError):
    pass


class DivergenceUndefinedError(ValueError):
    """``q[d] == 0`` where ``p[d] > 0``: the divergence is infinite."""


@dataclass(frozen=True, eq=False)
class DigitPmf:
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        if p.shape != (9,):
            raise ValueError("a digit PMF has exactly 9 entries")
        if np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"not a probability vector: {p}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def __getitem__(self, digit: int) -> float:
        if not 1 <= digit <= 9:
            raise IndexError("digits run 1..9")
        return float(self.p[digit - 1])

    def to_dict(self) -> dict:
        return {str(d): float(v) for d, v in zip(DIGITS, self.p)}

    @classmethod
    def from_dict(cls, obj: dict) -> "DigitPmf":
        return cls(np.array([obj[str(d)] for d in DIGITS], dtype=np.float64))


@dataclass(frozen=True, eq=False)
class DigitHistogram:
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (9,) or np.any(c < 0):
            raise ValueError("a digit histogram has 9 non-negative counts")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "DigitHistogram") -> "DigitHistogram":
        return DigitHistogram(self.counts + other.counts)


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared}


def ideal_distribution() -> DigitPmf:
    """Benford probabilities ``log10(1 + 1/d)``."""
    return DigitPmf(np.log10(1.0 + 1.0 / DIGITS))


def _digit_from_repr(x: float) -> int:
    # shortest round-trip representation, e.g. '9.9999999e+00'
    return int(np.format_float_scientific(x)[0])


def _check_domain(x: np.ndarray) -> None:
    bad = ~(np.isfinite(x) & (x > 0))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ValueError(f"leading digit undefined for value {x.flat[i]!r} at index {i}")


def leading_digits(values) -> np.ndarray:
    """Vectorised :func:`leading_digit`.

    The digit is that of the shortest decimal string that round-trips the
    float (``repr``), so ``0.3 -> 3`` even though the stored double is
    slightly below 0.3. A log10 fast path handles everything; values whose
    scaled mantissa sits within 1e-9 of an integer boundary are re-derived
    from their decimal representation.
    """
    x = np.asarray(values, dtype=np.float64)
    flat = x.ravel()
    if flat.size == 0:
        return np.zeros(x.shape, dtype=np.int64)
    _check_domain(flat)
    e = np.floor(np.log10(flat))
    m = flat / np.power(10.0, e)
    d = np.floor(m)
    suspect = (m < 1.0) | (m >= 10.0) | (np.abs(m - np.round(m)) < 1e-9 * m)
    out = d.astype(np.int64)
    for i in np.flatnonzero(suspect):
        out[i] = _digit_from_repr(float(flat[i]))
    return out.reshape(x.shape)


def leading_digit(x: float) -> int:
    """Most significant decimal digit of a positive finite number."""
    if not (isinstance(x, (int, float, np.number)) and math.isfinite(x) and x > 0):
        raise ValueError(f"leading digit undefined for {x!r}")
    return int(leading_digits(np.array([x]))[0])


def digit_histogram(values) -> DigitHistogram:
    """Count leading digits 1..9 over ``values`` (all must be > 0)."""
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size == 0:
        return DigitHistogram(np.zeros(9, dtype=np.int64))
    d = leading_digits(x)
    return DigitHistogram(np.bincount(d, minlength=10)[1:])


def to_pmf(h: DigitHistogram) -> DigitPmf:
    if h.total == 0:
        raise EmptyHistogramError("cannot normalise an empty histogram")
    return DigitPmf(h.counts / h.total)


def kl_divergence(p: DigitPmf, q: DigitPmf) -> float:
    """Base-10 Kullback-Leibler divergence ``sum p log10(p/q)``.

    Terms with ``p[d] == 0`` contribute nothing. Callers pass the ideal
    distribution as ``p`` and the empirical one as ``q``.
    """
    pp, qq = p.p, q.p
    support = pp > 0
    if np.any(qq[support] == 0):
        d = int(DIGITS[support & (qq == 0)][0])
        raise DivergenceUndefinedError(f"q[{d}] = 0 while p[{d}] > 0")
    ps, qs = pp[support], qq[support]
    return float(max(0.0, np.sum(ps * np.log10(ps / qs))))


def average_speaker_pmfs(per_speaker: Iterable[DigitPmf]) -> DigitPmf:
    """Unweighted mean of per-speaker PMFs."""
    stack = [pmf.p for pmf in per_speaker]
    if not stack:
        raise ValueError("no PMFs to average")
    avg = np.mean(stack, axis=0)
    return DigitPmf(avg / avg.sum())


def conformity_regression(empirical: DigitPmf, ideal: DigitPmf) -> RegressionFit:
    """Least-squares line ``E = slope * I + intercept`` over the nine digits."""
    x, y = ideal.p, empirical.p
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise ValueError("ideal probabilities have zero variance")
    yc = y - y.mean()
    slope = float(xc @ yc) / sxx
    intercept = float(y.mean() - slope * x.mean())
    syy = float(yc @ yc)
    if syy == 0.0:
        r2 = 0.0
    else:
        resid = y - (slope * x + intercept)
        r2 = min(1.0, max(0.0, 1.0 - float(resid @ resid) / syy))
    return RegressionFit(slope, intercept, r2)
