"""Benford's-law analysis of speech spectra and BenS feature classification."""

from .audio_io import AudioBuffer, DitherConfig, dither, read_wav, write_wav
from .benford import (
    DigitHistogram,
    DigitPmf,
    RegressionFit,
    average_speaker_pmfs,
    conformity_regression,
    digit_histogram,
    ideal_distribution,
    kl_divergence,
    leading_digit,
    leading_digits,
    to_pmf,
)
from .classify import (
    ConfusionMatrix,
    LabeledSample,
    SvmConfig,
    SvmModel,
    loso_cv,
    predict,
    report_metrics,
    train_svm,
)
from .datagen import GenConfig, multiplicative_values, non_benford_control, synth_source_filter
from .features import (
    BensFeatureVector,
    FrameKlSeries,
    NormStats,
    bens_features,
    fit_norm_stats,
    frame_kl,
    percentile,
    zscore,
)
from .spectral import FrameConfig, demean, frame_signal, magnitude_spectrum

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
