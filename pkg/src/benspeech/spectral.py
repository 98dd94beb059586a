"""Framing and per-frame magnitude spectra."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer

__all__ = [
    "FrameConfig",
    "SignalTooShortError",
    "frame_signal",
    "demean",
    "magnitude_spectrum",
    "frame_spectra",
]

WINDOWS = ("rectangular", "hann")


class SignalTooShortError(ValueError):
    """The signal does not contain a single complete frame."""


def _half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class FrameConfig:
    """Frame geometry. ``hop_ms`` is the frame advance, not the overlap."""

    frame_ms: float = 25.0
    hop_ms: float = 10.0
    window: str = "rectangular"

    def __post_init__(self):
        if not 0 < self.hop_ms <= self.frame_ms:
            raise ValueError("need 0 < hop_ms <= frame_ms")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {WINDOWS}")

    def frame_length(self, fs: int) -> int:
        n = _half_up(self.frame_ms * fs / 1000.0)
        if n < 2:
            raise ValueError(f"frame of {self.frame_ms} ms at {fs} Hz is shorter than 2 samples")
        return n

    def hop_length(self, fs: int) -> int:
        return max(1, _half_up(self.hop_ms * fs / 1000.0))


def frame_signal(audio: AudioBuffer, cfg: FrameConfig) -> np.ndarray:
    """Split into frames of shape ``(n_frames, frame_len)``.

    Frame ``k`` covers samples ``[k*hop, k*hop + frame_len)``; a trailing
    partial frame is dropped. The result is a read-only strided view.
    """
    fs = audio.sample_rate_hz
    n, hop = cfg.frame_length(fs), cfg.hop_length(fs)
    x = audio.samples
    if len(x) < n:
        raise SignalTooShortError(
            f"{audio.source_id or 'signal'}: {len(x)} samples is shorter than one "
            f"{n}-sample frame"
        )
    count = (len(x) - n) // hop + 1
    return np.lib.stride_tricks.sliding_window_view(x, n)[::hop][:count]


def demean(frame: np.ndarray) -> np.ndarray:
    """Subtract the mean along the last axis."""
    frame = np.asarray(frame, dtype=np.float64)
    return frame - frame.mean(axis=-1, keepdims=True)


def _window(n: int, name: str) -> np.ndarray | None:
    if name == "hann":
        return np.hanning(n)
    return None


def magnitude_spectrum(frame: np.ndarray, cfg: FrameConfig = FrameConfig()) -> np.ndarray:
    """One-sided DFT magnitudes ``|X[k]|`` for ``k = 1 .. N//2``.

    Works on a single frame or a stack of frames (last axis). No
    zero-padding; the DC bin is excluded and the Nyquist bin kept for even
    ``N``. The upper conjugate half is dropped because ``|X[k]| = |X[N-k]|``
    for real input, so digit proportions are unaffected.
    """
    frame = np.asarray(frame, dtype=np.float64)
    w = _window(frame.shape[-1], cfg.window)
    if w is not None:
        frame = frame * w
    return np.abs(np.fft.rfft(frame, axis=-1))[..., 1:]


def frame_spectra(audio: AudioBuffer, cfg: FrameConfig = FrameConfig()) -> np.ndarray:
    """frame -> demean -> magnitude spectrum for every frame of ``audio``."""
    return magnitude_spectrum(demean(frame_signal(audio, cfg)), cfg)
