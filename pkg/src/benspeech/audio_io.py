"""WAV decoding and dithering.

Decoding is delegated to :mod:`scipy.io.wavfile`; a light RIFF header scan
runs first so that missing files, malformed containers and unsupported
codecs surface as distinct exceptions.
"""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

__all__ = [
    "AudioBuffer",
    "DitherConfig",
    "WavFormatError",
    "UnsupportedCodecError",
    "DitherWarning",
    "read_wav",
    "write_wav",
    "downmix",
    "dither",
]

_PCM = 0x0001
_IEEE_FLOAT = 0x0003
_EXTENSIBLE = 0xFFFE


class WavFormatError(ValueError):
    """The file is not a well-formed RIFF/WAVE container."""


class UnsupportedCodecError(ValueError):
    """The WAVE container holds a codec other than PCM or 32-bit float."""


class DitherWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Mono samples in [-1, 1] plus their sample rate."""

    samples: np.ndarray
    sample_rate_hz: int
    source_id: str = ""

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


@dataclass(frozen=True)
class DitherConfig:
    """Dither noise settings.

    With ``scale="std"`` the noise standard deviation is ``max|x| / divisor``
    (-60 dB below peak by default); ``scale="variance"`` takes the same
    ratio as the variance instead. ``seed`` feeds a PCG64 generator (numpy
    ``default_rng``), which is reproducible across platforms.
    """

    divisor: float = 1000.0
    seed: int = 0
    enabled: bool = True
    scale: str = "std"

    def __post_init__(self):
        if not self.divisor > 0:
            raise ValueError("divisor must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.scale not in ("std", "variance"):
            raise ValueError("scale must be 'std' or 'variance'")

    def noise_std(self, peak: float) -> float:
        ratio = peak / self.divisor
        return ratio if self.scale == "std" else float(np.sqrt(ratio))


def _scan_header(path: Path) -> int:
    """Return the format tag after validating the RIFF chunk layout."""
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:4] not in (b"RIFF", b"RIFX") or head[8:12] != b"WAVE":
            raise WavFormatError(f"{path}: not a RIFF/WAVE file")
        endian = "<" if head[:4] == b"RIFF" else ">"
        while True:
            hdr = fh.read(8)
            if len(hdr) < 8:
                raise WavFormatError(f"{path}: no 'fmt ' chunk found")
            cid, size = hdr[:4], struct.unpack(endian + "I", hdr[4:])[0]
            if cid == b"fmt ":
                body = fh.read(size)
                if len(body) < 16:
                    raise WavFormatError(f"{path}: truncated 'fmt ' chunk")
                tag = struct.unpack(endian + "H", body[:2])[0]
                if tag == _EXTENSIBLE and len(body) >= 26:
                    tag = struct.unpack(endian + "H", body[24:26])[0]
                return tag
            fh.seek(size + (size & 1), 1)


def _to_unit_float(data: np.ndarray) -> np.ndarray:
    if data.dtype == np.uint8:
        return (data.astype(np.float64) - 128.0) / 128.0
    if np.issubdtype(data.dtype, np.integer):
        # scipy returns 24-bit PCM left-justified in int32
        full = float(2 ** (8 * data.dtype.itemsize - 1))
        return data.astype(np.float64) / full
    return data.astype(np.float64)


def downmix(data: np.ndarray) -> np.ndarray:
    """Collapse ``(n, channels)`` to mono by the per-sample channel mean."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        return data
    return data.mean(axis=1)


def read_wav(path) -> AudioBuffer:
    """Decode a PCM (8/16/24/32-bit) or float32 WAV into a mono buffer.

    Integer PCM is divided by its full-scale value (``2**(bits-1)``, or
    offset by 128 for unsigned 8-bit), so +32767 in a 16-bit file maps to
    32767/32768.

    Raises
    ------
    FileNotFoundError
        The path does not exist.
    WavFormatError
        The RIFF/WAVE header is malformed.
    UnsupportedCodecError
        The file uses a compressed or otherwise unsupported codec.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such WAV file: {path}")
    tag = _scan_header(path)
    if tag not in (_PCM, _IEEE_FLOAT):
        raise UnsupportedCodecError(f"{path}: unsupported WAVE format tag 0x{tag:04x}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except ValueError as exc:
        raise WavFormatError(f"{path}: {exc}") from exc
    if data.dtype == np.float64:
        raise UnsupportedCodecError(f"{path}: 64-bit float WAV is not supported")
    samples = downmix(_to_unit_float(data))
    return AudioBuffer(samples, int(rate), source_id=str(path))


def write_wav(path, audio: AudioBuffer, *, bits: int = 16) -> None:
    """Write a mono buffer as 16/32-bit PCM (``bits=16|32``) or float32 (``bits=0``).

    Samples outside [-1, 1) are clipped for the integer formats.
    """
    x = audio.samples
    if bits == 0:
        data = x.astype(np.float32)
    elif bits in (16, 32):
        full = 2 ** (bits - 1)
        dtype = np.int16 if bits == 16 else np.int32
        data = np.clip(np.round(x * full), -full, full - 1).astype(dtype)
    else:
        raise ValueError("bits must be 0 (float32), 16 or 32")
    wavfile.write(path, audio.sample_rate_hz, data)


def dither(audio: AudioBuffer, cfg: DitherConfig) -> AudioBuffer:
    """Add zero-mean Gaussian noise scaled to the peak absolute amplitude.

    The output is not re-clipped; overshoot past +/-1 is possible but has
    no effect on magnitude spectra or digit statistics. An all-zero input
    is returned unchanged with a :class:`DitherWarning`.
    """
    if not cfg.enabled:
        return audio
    peak = float(np.max(np.abs(audio.samples))) if len(audio) else 0.0
    if peak == 0.0:
        warnings.warn(f"{audio.source_id or 'buffer'}: all-zero signal, dither skipped",
                      DitherWarning, stacklevel=2)
        return audio
    sigma = cfg.noise_std(peak)
    rng = np.random.default_rng(cfg.seed)
    noisy = audio.samples + sigma * rng.standard_normal(len(audio))
    return AudioBuffer(noisy, audio.sample_rate_hz, audio.source_id)
