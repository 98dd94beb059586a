"""Acceptance criteria, one test group per criterion.

Run ``pytest tests/test_acceptance.py`` to get the pass/fail summary.
Criterion 6b runs only when ``BENSPEECH_REAL_MANIFEST`` points at a
manifest of at least ten real speech recordings.
"""
import json
import math
import os

import numpy as np
import pytest

from benspeech.benford import (
    DigitPmf,
    digit_histogram,
    ideal_distribution,
    kl_divergence,
    leading_digits,
    to_pmf,
)
from benspeech.classify import (
    HUMAN,
    SYNTHETIC,
    LabeledSample,
    SvmConfig,
    kernel_matrix,
    kkt_violations,
    loso_cv,
    predict,
    train_svm,
)
from benspeech.cli import main
from benspeech.datagen import GenConfig, multiplicative_values, synth_source_filter
from benspeech.features import bens_features, percentile, summarize
from benspeech.audio_io import AudioBuffer, DitherConfig
from benspeech.records import read_feature_csv, read_manifest, to_labeled
from benspeech.spectral import demean, magnitude_spectrum

criterion = pytest.mark.criterion


@criterion(1, "Benford ideal sums to 1 (1e-12), P(1) = 0.301030")
def test_c1_ideal_distribution():
    p = ideal_distribution()
    assert abs(math.fsum(p.p) - 1.0) < 1e-12
    assert round(p[1], 6) == 0.301030
    assert abs(p[1] - math.log10(2)) < 1e-15


def _string_digit(x):
    return int(repr(x).lstrip("0.")[0])


@criterion(2, "leading_digit agrees with string oracle on 1e6 values in 1e-9..1e9")
def test_c2_leading_digit_oracle():
    rng = np.random.default_rng(2)
    x = 10.0 ** rng.uniform(-9, 9, 1_000_000)
    got = leading_digits(x)
    expected = np.fromiter((_string_digit(v) for v in x.tolist()), dtype=np.int64, count=x.size)
    mismatches = int(np.sum(got != expected))
    assert mismatches == 0, f"{mismatches} disagreements"


@criterion(3, "KL: ideal vs uniform = nine-term sum (1e-12); kl(P,P)=0; non-negative on 1e4 pairs")
def test_c3_kl_oracle():
    ideal = ideal_distribution()
    direct = math.fsum(p * math.log10(p * 9) for p in ideal.p)
    assert abs(kl_divergence(ideal, DigitPmf(np.full(9, 1 / 9))) - direct) < 1e-12
    rng = np.random.default_rng(3)
    for _ in range(10_000):
        a, b = rng.dirichlet(np.ones(9)), rng.dirichlet(np.ones(9))
        p, q = DigitPmf(a / a.sum()), DigitPmf(b / b.sum())
        assert kl_divergence(p, p) == 0.0
        assert kl_divergence(p, q) >= 0.0


@criterion(4, "magnitude spectra match naive DFT (1e-9 rel) on 100 frames; Parseval (1e-9)")
def test_c4_dft_oracle():
    n = 400
    k = np.arange(n)
    dft = np.exp(-2j * np.pi * np.outer(k, k) / n)
    rng = np.random.default_rng(4)
    for _ in range(100):
        x = demean(rng.normal(size=n))
        full = np.abs(dft @ x)
        got = magnitude_spectrum(x)
        np.testing.assert_allclose(got, full[1 : n // 2 + 1], rtol=1e-9, atol=1e-9 * full.max())
        assert abs(np.sum(full**2) - n * np.sum(x**2)) <= 1e-9 * n * np.sum(x**2)
        rebuilt = 2 * np.sum(got[:-1] ** 2) + got[-1] ** 2  # DC is zero after demeaning
        assert abs(rebuilt - np.sum(full**2)) <= 1e-9 * np.sum(full**2)


@criterion(5, "products of 12 factors: KL < 0.001; single factor: KL > 0.01 (n = 1e5)")
def test_c5_benford_emergence():
    ideal = ideal_distribution()
    kl12 = kl_divergence(ideal, to_pmf(digit_histogram(multiplicative_values(GenConfig(seed=5, n=100_000, k_factors=12)))))
    kl1 = kl_divergence(ideal, to_pmf(digit_histogram(multiplicative_values(GenConfig(seed=5, n=100_000, k_factors=1)))))
    print(f"KL k=12: {kl12:.3g}   KL k=1: {kl1:.3g}")
    assert kl12 < 0.001
    assert kl1 > 0.01


@criterion(6, "50-utterance source-filter corpus via `conformity`: slope in [0.9,1.1], |intercept| <= 0.02, R^2 >= 0.95")
def test_c6_conformity_desk_scale(tmp_path):
    assert main(["datagen", str(tmp_path), "--kind", "source-filter", "--speakers", "10",
                 "--utterances", "5", "--seed", "6"]) == 0
    assert len(read_manifest(tmp_path / "manifest.csv")) == 50
    out = tmp_path / "conformity.json"
    assert main(["conformity", str(tmp_path / "manifest.csv"), "-o", str(out), "--seed", "6"]) == 0
    fit = json.loads(out.read_text())["fit"]
    print(f"E = {fit['slope']:.4f} I + {fit['intercept']:.4f}, R^2 = {fit['r_squared']:.4f}")
    assert 0.9 <= fit["slope"] <= 1.1
    assert -0.02 <= fit["intercept"] <= 0.02
    assert fit["r_squared"] >= 0.95


@criterion("6b", "user-supplied real speech (>= 10 files) meets the same conformity bounds")
def test_c6b_real_speech(tmp_path):
    manifest = os.environ.get("BENSPEECH_REAL_MANIFEST")
    if not manifest:
        pytest.skip("set BENSPEECH_REAL_MANIFEST to a manifest of >= 10 real recordings")
    assert len(read_manifest(manifest)) >= 10
    out = tmp_path / "real.json"
    assert main(["conformity", manifest, "-o", str(out)]) == 0
    fit = json.loads(out.read_text())["fit"]
    print(f"E = {fit['slope']:.4f} I + {fit['intercept']:.4f}, R^2 = {fit['r_squared']:.4f}")
    assert 0.9 <= fit["slope"] <= 1.1
    assert -0.02 <= fit["intercept"] <= 0.02
    assert fit["r_squared"] >= 0.95


@pytest.fixture(scope="module")
def utterance():
    return synth_source_filter(GenConfig(seed=7, duration_s=2.0))


@criterion(7, "BenS amplitude invariance (1e-9), frame-permutation invariance, percentile monotonicity")
@pytest.mark.parametrize("c", [0.1, 10.0])
def test_c7_amplitude_invariance(utterance, c):
    off = DitherConfig(enabled=False)
    base, _ = bens_features(utterance, dither_cfg=off)
    scaled, _ = bens_features(AudioBuffer(c * utterance.samples, utterance.sample_rate_hz), dither_cfg=off)
    assert np.max(np.abs(scaled.as_array() - base.as_array())) <= 1e-9


@criterion(7, "BenS amplitude invariance (1e-9), frame-permutation invariance, percentile monotonicity")
def test_c7_permutation_and_monotonicity(utterance):
    _, series = bens_features(utterance)
    rng = np.random.default_rng(7)
    ref = summarize(series.values)
    for _ in range(20):
        perm = summarize(rng.permutation(series.values))
        assert perm.percentiles == ref.percentiles
        assert perm.std_kl == pytest.approx(ref.std_kl, rel=1e-12)
        assert perm.mean_kl == pytest.approx(ref.mean_kl, rel=1e-12)
    for _ in range(1000):
        x = rng.exponential(size=int(rng.integers(1, 200)))
        ps = [percentile(x, p) for p in range(0, 101, 5)]
        assert all(a <= b for a, b in zip(ps, ps[1:]))


def _xor():
    pts = [((0.0, 0.0), HUMAN), ((1.0, 1.0), HUMAN), ((0.0, 1.0), SYNTHETIC), ((1.0, 0.0), SYNTHETIC)]
    return [LabeledSample(np.array(x), l, f"s{i}", f"x{i}") for i, (x, l) in enumerate(pts)]


@criterion(8, "SVM: XOR solved by degree-2 kernel not linear; KKT within tol; dual objective monotone")
def test_c8_svm():
    data = _xor()
    X = np.vstack([s.features for s in data])
    y = np.array([1.0, 1.0, -1.0, -1.0])
    results = {}
    for name, cfg in (("quad", SvmConfig(kernel="poly", degree=2, coef0=1.0, c=10.0)),
                      ("linear", SvmConfig(kernel="linear", c=10.0))):
        model = train_svm(data, cfg, trace=True)
        errors = sum(predict(model, s.features)[0] != s.label for s in data)
        results[name] = errors
        viol = kkt_violations(model.train_alphas, y, kernel_matrix(X, X, cfg), model.bias, cfg.c, cfg.tol)
        assert viol.size == 0
        assert np.all(np.diff(model.objective_trace) >= -1e-12)
    assert results["quad"] == 0
    assert results["linear"] > 0
    # a larger noisy problem as well
    rng = np.random.default_rng(8)
    Xb = np.vstack([rng.normal(size=(80, 11)) + 0.3, rng.normal(size=(80, 11)) - 0.3])
    yb = np.r_[np.ones(80), -np.ones(80)]
    big = [LabeledSample(x, HUMAN if t > 0 else SYNTHETIC, str(i)) for i, (x, t) in enumerate(zip(Xb, yb))]
    cfg = SvmConfig()
    model = train_svm(big, cfg, trace=True)
    assert kkt_violations(model.train_alphas, yb, kernel_matrix(Xb, Xb, cfg), model.bias, cfg.c, cfg.tol).size == 0
    assert np.all(np.diff(model.objective_trace) >= -1e-9)


@pytest.fixture(scope="module")
def two_class(tmp_path_factory):
    root = tmp_path_factory.mktemp("twoclass")
    assert main(["datagen", str(root), "--kind", "two-class", "--speakers", "20",
                 "--utterances", "10", "--seed", "9"]) == 0
    feats = root / "features.csv"
    assert main(["extract", str(root / "manifest.csv"), "-o", str(feats), "--seed", "9", "--jobs", "4"]) == 0
    return root, feats


@criterion(9, "LOSO on 20+20 speakers x 10 utterances: accuracy >= 0.90, no speaker or normalisation leakage")
def test_c9_loso(two_class):
    _, feats = two_class
    data = to_labeled(read_feature_csv(feats))
    assert len(data) == 400
    result = loso_cv(data, SvmConfig(kernel="poly", degree=2, coef0=1.0, seed=9))
    acc = result.metrics["accuracy"]
    print(f"LOSO accuracy {acc:.4f}  confusion {result.confusion.as_rows()}")
    assert acc >= 0.90
    assert len(result.folds) == 40
    assert sum(f.n_test for f in result.folds) == 400
    for fold in result.folds:
        rows = [data[i] for i in fold.norm_rows]
        assert fold.held_out not in {s.speaker_id for s in rows}
        assert fold.held_out not in fold.train_speakers
        X = np.vstack([s.features for s in rows])
        np.testing.assert_allclose(fold.norm_stats.mu, X.mean(axis=0), rtol=1e-12)
        np.testing.assert_allclose(fold.norm_stats.sigma, X.std(axis=0, ddof=1), rtol=1e-12)
        tested = {p[0] for p in fold.predictions}
        assert tested == {s.sample_id for s in data if s.speaker_id == fold.held_out}


@criterion(10, "extract and loso reruns with identical seeds are byte-identical")
def test_c10_determinism(two_class, tmp_path):
    root, feats = two_class
    again = tmp_path / "again.csv"
    assert main(["extract", str(root / "manifest.csv"), "-o", str(again), "--seed", "9"]) == 0
    assert again.read_bytes() == feats.read_bytes()
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["loso", str(feats), "-o", str(a), "--seed", "9"]) == 0
    assert main(["loso", str(feats), "-o", str(b), "--seed", "9"]) == 0
    assert a.read_bytes() == b.read_bytes()
