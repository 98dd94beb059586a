"""Kernel SVM trained by SMO, and leave-one-speaker-out evaluation.

The solver works on the soft-margin dual

    max  W(a) = sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij
    s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0

and updates one pair at a time. Each step takes the maximal violating
pair (Keerthi et al. 2001): the first index is the most violating point
that can move up, the second maximises ``|E_1 - E_2|`` among points that
can move the other way. Training stops when the pair gap is within
``2 * tol``, which puts every point's KKT residual within ``tol``.
"""
from __future__ import annotations

import warnings
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .features import NormStats, fit_norm_stats, zscore

__all__ = [
    "HUMAN",
    "SYNTHETIC",
    "LabeledSample",
    "SvmConfig",
    "SvmModel",
    "ConfusionMatrix",
    "FoldRecord",
    "LosoResult",
    "ConvergenceWarning",
    "kernel_matrix",
    "train_svm",
    "predict",
    "dual_objective",
    "kkt_violations",
    "loso_cv",
    "report_metrics",
]

HUMAN = "human"
SYNTHETIC = "synthetic"
LABELS = (HUMAN, SYNTHETIC)
# human is the positive class
_SIGN = {HUMAN: 1.0, SYNTHETIC: -1.0}

MODEL_FORMAT = "benspeech-svm"
MODEL_VERSION = 1


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class LabeledSample:
    features: np.ndarray
    label: str
    speaker_id: str
    sample_id: str = ""

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValueError(f"sample {self.sample_id!r}: non-finite features")
        if self.label not in LABELS:
            raise ValueError(f"sample {self.sample_id!r}: label must be one of {LABELS}")
        object.__setattr__(self, "features", x)


@dataclass(frozen=True)
class SvmConfig:
    """``kernel`` is ``"linear"`` or ``"poly"``; ``degree=2`` gives the quadratic SVM.

    ``max_passes`` bounds the work at ``max_passes * n`` pair updates.
    """

    kernel: str = "poly"
    degree: int = 2
    coef0: float = 1.0
    c: float = 1.0
    tol: float = 1e-3
    max_passes: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.kernel not in ("linear", "poly"):
            raise ValueError("kernel must be 'linear' or 'poly'")
        if self.degree < 1:
            raise ValueError("degree must be a positive integer")
        if not (self.c > 0 and self.tol > 0 and self.max_passes > 0):
            raise ValueError("c, tol and max_passes must be positive")

    def to_dict(self) -> dict:
        return {"kernel": self.kernel, "degree": self.degree, "coef0": self.coef0,
                "c": self.c, "tol": self.tol, "max_passes": self.max_passes, "seed": self.seed}


def kernel_matrix(A, B, cfg: SvmConfig) -> np.ndarray:
    gram = np.atleast_2d(A) @ np.atleast_2d(B).T
    if cfg.kernel == "linear":
        return gram
    return (gram + cfg.coef0) ** cfg.degree


@dataclass
class SvmModel:
    support_vectors: np.ndarray
    alphas: np.ndarray  # signed: alpha_i * y_i
    bias: float
    config: SvmConfig
    norm_stats: NormStats | None = None
    n_iter: int = 0
    objective_trace: list = field(default_factory=list, repr=False)
    # unsigned multipliers for every training point, kept for diagnostics
    train_alphas: np.ndarray | None = field(default=None, repr=False)

    @property
    def norm_stats_id(self) -> str | None:
        return self.norm_stats.digest if self.norm_stats is not None else None

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.support_vectors.shape[1]:
            raise ValueError(
                f"expected {self.support_vectors.shape[1]} features, got {X.shape[1]}"
            )
        if self.norm_stats is not None:
            X = zscore(X, self.norm_stats)
        if len(self.alphas) == 0:
            return np.full(X.shape[0], self.bias)
        return kernel_matrix(X, self.support_vectors, self.config) @ self.alphas + self.bias

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "config": self.config.to_dict(),
            "bias": self.bias,
            "alphas": self.alphas.tolist(),
            "support_vectors": self.support_vectors.tolist(),
            "norm_stats_id": self.norm_stats_id,
            "norm_stats": self.norm_stats.to_dict() if self.norm_stats is not None else None,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "SvmModel":
        if obj.get("format") != MODEL_FORMAT or obj.get("version") != MODEL_VERSION:
            raise ValueError("not a version-1 benspeech SVM model")
        stats = NormStats.from_dict(obj["norm_stats"]) if obj.get("norm_stats") else None
        sv = np.array(obj["support_vectors"], dtype=np.float64).reshape(len(obj["alphas"]), -1)
        return cls(sv, np.array(obj["alphas"], dtype=np.float64), float(obj["bias"]),
                   SvmConfig(**obj["config"]), stats)


def _xy(data) -> tuple[np.ndarray, np.ndarray]:
    X = np.vstack([s.features for s in data])
    y = np.array([_SIGN[s.label] for s in data])
    return X, y


def dual_objective(alpha, y, K) -> float:
    v = alpha * y
    return float(alpha.sum() - 0.5 * v @ K @ v)


def _smo(K: np.ndarray, y: np.ndarray, cfg: SvmConfig, trace: list | None):
    n = len(y)
    C, tol = cfg.c, cfg.tol
    alpha = np.zeros(n)
    # F_i = sum_j a_j y_j K_ij - y_i (error without bias)
    F = -y.copy()
    # seeded permutation fixes how ties in the pair search are broken
    order = np.random.default_rng(cfg.seed).permutation(n)
    Kp, yp = K[np.ix_(order, order)], y[order]
    Fp = F[order]
    eps = 1e-12 * C
    max_iter = cfg.max_passes * max(n, 1)
    it = 0
    b_up = b_low = 0.0
    while True:
        up = ((yp > 0) & (alpha < C - eps)) | ((yp < 0) & (alpha > eps))
        low = ((yp > 0) & (alpha > eps)) | ((yp < 0) & (alpha < C - eps))
        i = int(np.argmin(np.where(up, Fp, np.inf)))
        j = int(np.argmax(np.where(low, Fp, -np.inf)))
        b_up, b_low = Fp[i], Fp[j]
        if b_low - b_up <= 2 * tol:
            break
        if it >= max_iter:
            warnings.warn(f"SMO stopped after {it} updates with gap {b_low - b_up:.3g}",
                          ConvergenceWarning, stacklevel=3)
            break
        yi, yj = yp[i], yp[j]
        eta = max(Kp[i, i] + Kp[j, j] - 2 * Kp[i, j], 1e-12)
        s = yi * yj
        if s > 0:
            L, H = max(0.0, alpha[i] + alpha[j] - C), min(C, alpha[i] + alpha[j])
        else:
            L, H = max(0.0, alpha[j] - alpha[i]), min(C, C + alpha[j] - alpha[i])
        aj = min(H, max(L, alpha[j] + yj * (Fp[i] - Fp[j]) / eta))
        ai = alpha[i] + s * (alpha[j] - aj)
        ai = min(C, max(0.0, ai))
        di, dj = ai - alpha[i], aj - alpha[j]
        alpha[i], alpha[j] = ai, aj
        Fp += di * yi * Kp[i] + dj * yj * Kp[j]
        it += 1
        if trace is not None:
            trace.append(dual_objective(alpha, yp, Kp))
    out = np.empty(n)
    out[order] = alpha
    # decision f(x) = sum a y K - theta; the midpoint keeps every residual within tol
    theta = 0.5 * (b_up + b_low)
    return out, -float(theta), it


def train_svm(data: Sequence[LabeledSample], cfg: SvmConfig = SvmConfig(),
              *, trace: bool = False) -> SvmModel:
    """Fit a soft-margin SVM on already-normalised features.

    With ``trace=True`` the dual objective after every pair update is kept
    on ``model.objective_trace``.
    """
    if not data:
        raise ValueError("no training data")
    X, y = _xy(data)
    if len(np.unique(y)) < 2:
        raise ValueError(f"training data contains a single class ({data[0].label})")
    K = kernel_matrix(X, X, cfg)
    history = [] if trace else None
    alpha, bias, it = _smo(K, y, cfg, history)
    sv = alpha > 0
    return SvmModel(X[sv], alpha[sv] * y[sv], bias, cfg, n_iter=it,
                    objective_trace=history or [], train_alphas=alpha)


def kkt_violations(model_alpha, y, K, bias, c, tol) -> np.ndarray:
    """Indices whose KKT condition fails by more than ``tol``.

    ``model_alpha`` holds the unsigned multipliers for every training point.
    """
    r = y * (K @ (model_alpha * y) + bias) - 1.0
    eps = 1e-12 * c
    at_zero = model_alpha <= eps
    at_c = model_alpha >= c - eps
    free = ~(at_zero | at_c)
    bad = (at_zero & (r < -tol)) | (at_c & (r > tol)) | (free & (np.abs(r) > tol))
    return np.flatnonzero(bad)


def predict(model: SvmModel, features) -> tuple[str, float]:
    """Label and decision value for one feature vector.

    A decision value of exactly zero is reported as synthetic.
    """
    value = float(model.decision_function(np.asarray(features, dtype=np.float64))[0])
    return (HUMAN if value > 0 else SYNTHETIC), value


@dataclass
class ConfusionMatrix:
    """Rows are true classes, columns predicted, human first."""

    tp: int = 0  # human -> human
    fn: int = 0  # human -> synthetic
    fp: int = 0  # synthetic -> human
    tn: int = 0  # synthetic -> synthetic

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def add(self, true: str, pred: str) -> None:
        if true == HUMAN:
            if pred == HUMAN:
                self.tp += 1
            else:
                self.fn += 1
        elif pred == HUMAN:
            self.fp += 1
        else:
            self.tn += 1

    def as_rows(self) -> list:
        return [[self.tp, self.fn], [self.fp, self.tn]]

    def to_dict(self) -> dict:
        return {"labels": list(LABELS), "matrix": self.as_rows()}


def report_metrics(cm: ConfusionMatrix) -> dict:
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    acc = (cm.tp + cm.tn) / cm.total
    n_h, n_s = cm.tp + cm.fn, cm.fp + cm.tn
    return {
        "accuracy": acc,
        "misclassification": 1.0 - acc,
        "recall_human": cm.tp / n_h if n_h else None,
        "recall_synthetic": cm.tn / n_s if n_s else None,
    }


@dataclass
class FoldRecord:
    held_out: str
    train_speakers: tuple
    n_train: int
    n_test: int
    norm_stats: NormStats | None
    norm_rows: tuple  # sample indices used to fit norm_stats
    predictions: list  # (sample_id, true, predicted, decision value)


@dataclass
class LosoResult:
    confusion: ConfusionMatrix
    folds: list

    @property
    def metrics(self) -> dict:
        return report_metrics(self.confusion)

    def to_dict(self) -> dict:
        return {
            "confusion": self.confusion.to_dict(),
            "metrics": self.metrics,
            "folds": [
                {
                    "held_out": f.held_out,
                    "n_train": f.n_train,
                    "n_test": f.n_test,
                    "norm_stats_id": f.norm_stats.digest if f.norm_stats else None,
                    "predictions": [
                        {"sample_id": s, "label": t, "predicted": p, "decision": v}
                        for s, t, p, v in f.predictions
                    ],
                }
                for f in self.folds
            ],
        }


def loso_cv(data: Sequence[LabeledSample], cfg: SvmConfig = SvmConfig(),
            normalize: bool = True) -> LosoResult:
    """Leave-one-speaker-out cross-validation.

    Each speaker's samples are held out in turn; z-score statistics and the
    SVM are fitted on the remaining speakers only.
    """
    by_speaker = OrderedDict()
    for idx, s in enumerate(data):
        by_speaker.setdefault(s.speaker_id, []).append(idx)
    for label in LABELS:
        n = len({s.speaker_id for s in data if s.label == label})
        if n < 2:
            raise ValueError(f"LOSO needs at least two {label} speakers, found {n}")
    cm = ConfusionMatrix()
    folds = []
    for speaker, test_idx in by_speaker.items():
        held = set(test_idx)
        train_idx = [i for i in range(len(data)) if i not in held]
        train = [data[i] for i in train_idx]
        if len({s.label for s in train}) < 2:
            raise ValueError(f"fold for speaker {speaker!r}: training remainder is single-class")
        train_speakers = tuple(sorted({s.speaker_id for s in train}))
        assert speaker not in train_speakers
        if normalize:
            stats = fit_norm_stats([s.features for s in train])
            train = [LabeledSample(zscore(s.features, stats), s.label, s.speaker_id, s.sample_id)
                     for s in train]
        else:
            stats = None
        model = train_svm(train, cfg)
        model.norm_stats = stats
        preds = []
        for i in test_idx:
            s = data[i]
            label, value = predict(model, s.features)
            cm.add(s.label, label)
            preds.append((s.sample_id, s.label, label, value))
        folds.append(FoldRecord(speaker, train_speakers, len(train_idx), len(test_idx),
                                stats, tuple(train_idx), preds))
    return LosoResult(cm, folds)
