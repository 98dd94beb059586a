"""BenS features: per-frame KL to Benford, summarised by 11 statistics."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .audio_io import AudioBuffer, DitherConfig, dither
from .benford import DigitHistogram, DigitPmf, digit_histogram, ideal_distribution, kl_divergence
from .spectral import FrameConfig, frame_spectra

__all__ = [
    "FEATURE_NAMES",
    "PERCENTILES",
    "FrameKlSeries",
    "BensFeatureVector",
    "NormStats",
    "InsufficientFramesError",
    "spectrum_digit_counts",
    "frame_kl",
    "frame_kl_series",
    "percentile",
    "summarize",
    "bens_features",
    "fit_norm_stats",
    "zscore",
    "utterance_digit_histogram",
]

PERCENTILES = (10, 20, 30, 40, 50, 60, 70, 80, 90)
FEATURE_NAMES = ("mean_kl", "std_kl") + tuple(f"p{p}" for p in PERCENTILES)


class InsufficientFramesError(ValueError):
    def __init__(self, message, frames_total, frames_rejected):
        super().__init__(message)
        self.frames_total = frames_total
        self.frames_rejected = frames_rejected


@dataclass(frozen=True, eq=False)
class FrameKlSeries:
    values: np.ndarray
    frames_total: int
    frames_rejected: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if self.frames_total != len(v) + self.frames_rejected:
            raise ValueError("frame accounting does not add up")
        if np.any(~np.isfinite(v)) or np.any(v < 0):
            raise ValueError("KL values must be finite and non-negative")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class BensFeatureVector:
    mean_kl: float
    std_kl: float
    percentiles: tuple

    def __post_init__(self):
        if len(self.percentiles) != len(PERCENTILES):
            raise ValueError("expected 9 percentile values")
        object.__setattr__(self, "percentiles", tuple(float(v) for v in self.percentiles))

    def as_array(self) -> np.ndarray:
        return np.array((self.mean_kl, self.std_kl) + self.percentiles)

    @classmethod
    def from_array(cls, arr) -> "BensFeatureVector":
        arr = [float(v) for v in arr]
        if len(arr) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} values, got {len(arr)}")
        return cls(arr[0], arr[1], tuple(arr[2:]))

    def to_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, self.as_array().tolist()))


@dataclass(frozen=True, eq=False)
class NormStats:
    """Per-feature mean and (sample) standard deviation used for z-scoring."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if mu.shape != (len(FEATURE_NAMES),) or sigma.shape != mu.shape:
            raise ValueError(f"NormStats needs {len(FEATURE_NAMES)} means and deviations")
        if np.any(~(sigma > 0)):
            raise ValueError("every sigma must be positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    def to_dict(self) -> dict:
        return {
            "features": list(FEATURE_NAMES),
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "NormStats":
        if list(obj.get("features", FEATURE_NAMES)) != list(FEATURE_NAMES):
            raise ValueError("feature names do not match the BenS layout")
        return cls(np.array(obj["mu"]), np.array(obj["sigma"]))

    @property
    def digest(self) -> str:
        """Short content hash, used by models to reference their stats."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def spectrum_digit_counts(spectrum: np.ndarray) -> DigitHistogram:
    """Leading-digit counts of a spectrum after division by its smallest
    positive bin. Exact-zero bins carry no digit and are dropped."""
    bins = np.asarray(spectrum, dtype=np.float64)
    bins = bins[bins > 0]
    if bins.size == 0:
        return DigitHistogram(np.zeros(9, dtype=np.int64))
    return digit_histogram(bins / bins.min())


def frame_kl(spectrum: np.ndarray, ideal: DigitPmf | None = None) -> Optional[float]:
    """KL(ideal || frame PMF), or ``None`` if some digit never occurs.

    Spectra with fewer than 9 bins raise ``ValueError``.
    """
    spectrum = np.asarray(spectrum)
    if spectrum.shape[-1] < 9:
        raise ValueError(f"spectrum has {spectrum.shape[-1]} bins; at least 9 are needed")
    if ideal is None:
        ideal = ideal_distribution()
    h = spectrum_digit_counts(spectrum)
    if np.any(h.counts == 0):
        return None
    return kl_divergence(ideal, DigitPmf(h.counts / h.total))


def frame_kl_series(spectra: np.ndarray, ideal: DigitPmf | None = None) -> FrameKlSeries:
    ideal = ideal or ideal_distribution()
    kls = [frame_kl(s, ideal) for s in spectra]
    kept = [k for k in kls if k is not None]
    return FrameKlSeries(np.array(kept), len(kls), len(kls) - len(kept))


def percentile(values, p: float) -> float:
    """Linear-interpolation percentile: rank ``p/100 * (n-1)`` in the sorted data."""
    x = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if x.size == 0:
        raise ValueError("percentile of an empty sequence")
    if not 0 <= p <= 100:
        raise ValueError("p must lie in [0, 100]")
    r = p / 100.0 * (x.size - 1)
    lo = int(np.floor(r))
    hi = min(lo + 1, x.size - 1)
    frac = r - lo
    return float(x[lo] + frac * (x[hi] - x[lo]))


def summarize(values) -> BensFeatureVector:
    """Mean, sample std (n-1) and the nine decile points of a KL series."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot summarise an empty KL series")
    std = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return BensFeatureVector(float(np.mean(x)), std, tuple(percentile(x, p) for p in PERCENTILES))


def bens_features(
    audio: AudioBuffer,
    frame_cfg: FrameConfig = FrameConfig(),
    dither_cfg: DitherConfig = DitherConfig(),
    min_frames: int = 10,
) -> tuple[BensFeatureVector, FrameKlSeries]:
    """Extract the 11 BenS features from one utterance.

    Pipeline: dither, frame, demean, magnitude spectrum, per-frame KL with
    rejection of frames missing any digit, then :func:`summarize`.

    Raises
    ------
    InsufficientFramesError
        Fewer than ``min_frames`` frames survive rejection.
    """
    audio = dither(audio, dither_cfg)
    series = frame_kl_series(frame_spectra(audio, frame_cfg))
    if len(series.values) < min_frames:
        raise InsufficientFramesError(
            f"{audio.source_id or 'utterance'}: {len(series.values)} valid frames "
            f"({series.frames_rejected} of {series.frames_total} rejected), need {min_frames}",
            series.frames_total,
            series.frames_rejected,
        )
    return summarize(series.values), series


def _as_matrix(dataset) -> np.ndarray:
    rows = [v.as_array() if isinstance(v, BensFeatureVector) else np.asarray(v, dtype=np.float64)
            for v in dataset]
    if not rows:
        return np.empty((0, len(FEATURE_NAMES)))
    return np.vstack(rows)


def fit_norm_stats(dataset: Iterable) -> NormStats:
    """Per-feature mean and sample standard deviation.

    ``dataset`` holds :class:`BensFeatureVector` objects or 11-element rows.
    """
    X = _as_matrix(dataset)
    if X.shape[0] < 2:
        raise ValueError("need at least two feature vectors")
    sigma = X.std(axis=0, ddof=1)
    flat = np.flatnonzero(~(sigma > 0))
    if flat.size:
        raise ValueError(f"feature {FEATURE_NAMES[flat[0]]!r} has zero variance")
    return NormStats(X.mean(axis=0), sigma)


def zscore(v, stats: NormStats) -> np.ndarray:
    """``(x - mu) / sigma``; accepts a feature vector or an (n, 11) array."""
    x = v.as_array() if isinstance(v, BensFeatureVector) else np.asarray(v, dtype=np.float64)
    return (x - stats.mu) / stats.sigma


def utterance_digit_histogram(
    audio: AudioBuffer,
    frame_cfg: FrameConfig = FrameConfig(),
    dither_cfg: DitherConfig = DitherConfig(),
) -> tuple[DigitHistogram, int]:
    """Pooled leading-digit counts over every frame of an utterance.

    Used by the conformity study; no frames are rejected here. Returns the
    histogram and the frame count.
    """
    spectra = frame_spectra(dither(audio, dither_cfg), frame_cfg)
    counts = np.zeros(9, dtype=np.int64)
    for s in spectra:
        counts += spectrum_digit_counts(s).counts
    return DigitHistogram(counts), len(spectra)
