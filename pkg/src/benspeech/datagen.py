"""Seeded synthetic data: multiplicative value streams, source-filter
"speech" and a non-Benford noise control.

Every generator is a pure function of its seed. Corpus items take their
own stream from ``numpy.random.SeedSequence(seed, spawn_key=(item,))``
(see :func:`item_rng`), so any item can be regenerated on its own.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .audio_io import AudioBuffer

__all__ = [
    "GenConfig",
    "SourceFilterParts",
    "item_rng",
    "multiplicative_values",
    "source_filter_parts",
    "synth_source_filter",
    "non_benford_control",
    "make_corpus",
]

PEAK = 0.9
MAX_POLE_RADIUS = 0.98


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    n: int = 100_000
    k_factors: int = 12
    duration_s: float = 2.0
    sample_rate_hz: int = 16_000

    def __post_init__(self):
        if self.n < 1 or self.k_factors < 1:
            raise ValueError("n and k_factors must be at least 1")
        if self.duration_s <= 0 or self.sample_rate_hz <= 0:
            raise ValueError("duration and sample rate must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))


def item_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for corpus item ``key`` under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def multiplicative_values(cfg: GenConfig) -> np.ndarray:
    """``n`` products of ``k_factors`` independent Uniform(0.1, 10) draws."""
    rng = np.random.default_rng(cfg.seed)
    u = rng.uniform(0.1, 10.0, size=(cfg.n, cfg.k_factors))
    return np.prod(u, axis=1)


@dataclass(frozen=True)
class SourceFilterParts:
    """Frequency-domain factors of one source-filter utterance.

    ``excitation`` is the rFFT of the excitation signal; ``tract`` and
    ``radiation`` are the filter responses at the same rFFT frequencies.
    """

    excitation: np.ndarray
    tract: np.ndarray
    radiation: np.ndarray
    n_samples: int
    f0_hz: float
    formants_hz: tuple
    bandwidths_hz: tuple

    @property
    def spectrum(self) -> np.ndarray:
        return self.excitation * self.tract * self.radiation


def _resonator(z_inv, freq, bw, fs):
    r = np.exp(-np.pi * bw / fs)
    theta = 2 * np.pi * freq / fs
    a1, a2 = -2 * r * np.cos(theta), r * r
    # unity gain at DC
    return (1 + a1 + a2) / (1 + a1 * z_inv + a2 * z_inv**2)


def source_filter_parts(cfg: GenConfig, rng: np.random.Generator | None = None,
                        voice: dict | None = None) -> SourceFilterParts:
    """Draw the excitation and filters for one utterance.

    The excitation is a jittered impulse train whose pulse amplitudes are
    log-normal (shimmer), plus white noise. The tract is a cascade of 3-5
    two-pole resonators (300-5000 Hz, 50-300 Hz bandwidth, pole radius at
    most 0.98); radiation is a first difference. ``voice`` may pin
    ``f0_hz``, ``formants_hz`` and ``bandwidths_hz``, e.g. to keep a
    speaker consistent across utterances.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    voice = voice or {}
    fs, n = cfg.sample_rate_hz, cfg.n_samples

    f0 = float(voice.get("f0_hz", rng.uniform(90.0, 250.0)))
    e = np.zeros(n)
    t = 0.0
    while t < n:
        e[int(t)] += np.exp(0.8 * rng.standard_normal())
        t += fs / f0 * (1.0 + 0.02 * rng.standard_normal())
    e += 0.05 * rng.standard_normal(n)

    if "formants_hz" in voice:
        formants = tuple(voice["formants_hz"])
        bws = tuple(voice["bandwidths_hz"])
    else:
        formants, bws = [], []
        for _ in range(int(rng.integers(3, 6))):
            while True:
                f, bw = rng.uniform(300.0, min(5000.0, 0.45 * fs)), rng.uniform(50.0, 300.0)
                if np.exp(-np.pi * bw / fs) <= MAX_POLE_RADIUS:
                    break
            formants.append(float(f))
            bws.append(float(bw))
        formants, bws = tuple(formants), tuple(bws)

    z_inv = np.exp(-2j * np.pi * np.fft.rfftfreq(n))
    tract = np.ones_like(z_inv)
    for f, bw in zip(formants, bws):
        tract = tract * _resonator(z_inv, f, bw, fs)
    radiation = 1.0 - z_inv
    return SourceFilterParts(np.fft.rfft(e), tract, radiation, n, f0, formants, bws)


def synth_source_filter(cfg: GenConfig, rng: np.random.Generator | None = None,
                        voice: dict | None = None) -> AudioBuffer:
    """Source-filter utterance normalised to a peak of 0.9.

    Filtering is done on the DFT grid (the periodic steady-state response),
    so the output spectrum is exactly excitation x tract x radiation times
    the normalisation gain.
    """
    parts = source_filter_parts(cfg, rng, voice)
    s = np.fft.irfft(parts.spectrum, parts.n_samples)
    s *= PEAK / np.max(np.abs(s))
    return AudioBuffer(s, cfg.sample_rate_hz, source_id=f"source-filter:{cfg.seed}")


def non_benford_control(cfg: GenConfig, rng: np.random.Generator | None = None,
                        period_ms: float = 25.0) -> AudioBuffer:
    """Constant-envelope noise with a narrow per-frame magnitude range.

    The signal is built from segments of four periods; each period is a
    random-phase multisine whose bin magnitudes are ``11 - 10**U`` with
    ``U ~ Uniform(0, 1)``. A frame covering one period therefore sees
    magnitudes within a single decade whose leading digits mirror Benford
    (9 most common, 1 least). Every segment is scaled to the same RMS.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    fs, n = cfg.sample_rate_hz, cfg.n_samples
    period = max(18, int(round(period_ms * fs / 1000.0)))
    seg_len = 4 * period
    out = np.empty(n)
    for start in range(0, n, seg_len):
        mags = 11.0 - 10.0 ** rng.uniform(0.0, 1.0, size=period // 2 + 1)
        mags[0] = 0.0
        phases = rng.uniform(0.0, 2 * np.pi, size=mags.size)
        one = np.fft.irfft(mags * np.exp(1j * phases), period)
        one /= np.sqrt(np.mean(one**2))
        seg = np.tile(one, 4)
        stop = min(n, start + seg_len)
        out[start:stop] = seg[: stop - start]
    out *= PEAK / np.max(np.abs(out))
    return AudioBuffer(out, fs, source_id=f"control:{cfg.seed}")


def _voice(rng: np.random.Generator, fs: int) -> dict:
    probe = source_filter_parts(GenConfig(seed=0, duration_s=0.05, sample_rate_hz=fs), rng)
    return {"f0_hz": probe.f0_hz, "formants_hz": probe.formants_hz,
            "bandwidths_hz": probe.bandwidths_hz}


def make_corpus(seed: int, speakers: int, utterances: int, *, kind: str = "two-class",
                duration_s: float = 2.0, sample_rate_hz: int = 16_000):
    """Yield ``(speaker_id, label, utterance_index, AudioBuffer)``.

    ``kind`` is ``"source-filter"`` (human-labelled speakers only),
    ``"control"`` (synthetic-labelled only) or ``"two-class"`` (both, with
    ``speakers`` voices per class). Each source-filter speaker keeps one
    pitch and formant set across utterances; excitation is redrawn per
    utterance.
    """
    if kind not in ("two-class", "source-filter", "control"):
        raise ValueError(f"unknown corpus kind {kind!r}")
    cfg = GenConfig(seed=seed, duration_s=duration_s, sample_rate_hz=sample_rate_hz)
    if kind in ("two-class", "source-filter"):
        for s in range(speakers):
            voice = _voice(item_rng(seed, 0, s), sample_rate_hz)
            for u in range(utterances):
                audio = synth_source_filter(cfg, item_rng(seed, 0, s, u + 1), voice)
                sid = f"sf{s:02d}"
                yield sid, "human", u, replace(audio, source_id=f"{sid}_u{u:02d}")
    if kind in ("two-class", "control"):
        for s in range(speakers):
            for u in range(utterances):
                audio = non_benford_control(cfg, item_rng(seed, 1, s, u))
                sid = f"ctl{s:02d}"
                yield sid, "synthetic", u, replace(audio, source_id=f"{sid}_u{u:02d}")
