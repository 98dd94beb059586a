import json

import numpy as np
import pytest

from benspeech.classify import (
    HUMAN,
    SYNTHETIC,
    ConfusionMatrix,
    LabeledSample,
    SvmConfig,
    SvmModel,
    dual_objective,
    kernel_matrix,
    kkt_violations,
    loso_cv,
    predict,
    report_metrics,
    train_svm,
)

LINEAR = SvmConfig(kernel="linear", c=10.0)
QUAD = SvmConfig(kernel="poly", degree=2, coef0=1.0, c=10.0)


def samples(X, labels, speakers=None):
    speakers = speakers or [f"s{i}" for i in range(len(X))]
    return [LabeledSample(np.asarray(x, float), l, sp, f"id{i}")
            for i, (x, l, sp) in enumerate(zip(X, labels, speakers))]


def train_error(model, data):
    return sum(predict(model, s.features)[0] != s.label for s in data)


def kkt_ok(model, data, cfg):
    X = np.vstack([s.features for s in data])
    y = np.array([1.0 if s.label == HUMAN else -1.0 for s in data])
    K = kernel_matrix(X, X, cfg)
    return kkt_violations(model.train_alphas, y, K, model.bias, cfg.c, cfg.tol).size == 0


@pytest.fixture
def toy():
    X = [(0, 0), (2, 2), (0.5, -0.5), (-0.5, 0.5), (2.5, 1.5), (1.5, 2.5)]
    return samples(X, [HUMAN, SYNTHETIC, HUMAN, HUMAN, SYNTHETIC, SYNTHETIC])


@pytest.fixture
def xor():
    return samples([(0, 0), (1, 1), (0, 1), (1, 0)], [HUMAN, HUMAN, SYNTHETIC, SYNTHETIC])


def test_linear_separable(toy):
    model = train_svm(toy, LINEAR)
    assert train_error(model, toy) == 0
    assert kkt_ok(model, toy, LINEAR)


def test_xor_needs_quadratic(xor):
    quad = train_svm(xor, QUAD)
    lin = train_svm(xor, LINEAR)
    # decision values enumerated on the four points
    d_quad = quad.decision_function(np.vstack([s.features for s in xor]))
    assert np.all(np.sign(d_quad) == [1, 1, -1, -1])
    assert train_error(quad, xor) == 0
    assert train_error(lin, xor) > 0
    assert kkt_ok(quad, xor, QUAD) and kkt_ok(lin, xor, LINEAR)


def two_blobs(rng, n=60, shift=1.5, dim=11):
    X = np.vstack([rng.normal(size=(n, dim)) + shift, rng.normal(size=(n, dim)) - shift])
    labels = [HUMAN] * n + [SYNTHETIC] * n
    return X, labels


@pytest.mark.parametrize("cfg", [SvmConfig(), SvmConfig(kernel="linear", c=0.1),
                                 SvmConfig(kernel="poly", degree=3, coef0=1.0, c=5.0)])
def test_kkt_and_monotone_objective(rng, cfg):
    X, labels = two_blobs(rng, shift=0.4)
    data = samples(X, labels)
    model = train_svm(data, cfg, trace=True)
    assert kkt_ok(model, data, cfg)
    trace = np.array(model.objective_trace)
    assert len(trace) == model.n_iter > 0
    assert np.all(np.diff(trace) >= -1e-10 * np.maximum(1, np.abs(trace[1:])))
    assert np.all(np.abs(model.alphas) <= cfg.c * (1 + 1e-12))
    y = np.array([1.0 if l == HUMAN else -1.0 for l in labels])
    assert abs(model.train_alphas @ y) < 1e-9 * cfg.c * len(y)
    assert trace[-1] == pytest.approx(dual_objective(model.train_alphas, y, kernel_matrix(X, X, cfg)))


def test_duplicated_data_same_predictions(rng):
    X, labels = two_blobs(rng, n=25, shift=2.5, dim=2)
    cfg = SvmConfig(kernel="poly", c=1e3)
    data = samples(X, labels)
    doubled = samples(np.vstack([X, X]), labels + labels)
    grid = np.stack(np.meshgrid(np.linspace(-5, 5, 41), np.linspace(-5, 5, 41)), -1).reshape(-1, 2)
    a = train_svm(data, cfg)
    b = train_svm(doubled, cfg)
    assert np.all(a.train_alphas < cfg.c)  # hard-margin regime
    da, db = a.decision_function(grid), b.decision_function(grid)
    # points where either boundary is ambiguous at the solver tolerance are excluded
    clear = (np.abs(da) > 0.05) & (np.abs(db) > 0.05)
    assert np.array_equal(np.sign(da[clear]), np.sign(db[clear]))
    assert clear.mean() > 0.95


def test_predict_matches_kernel_sum(rng):
    sv = rng.normal(size=(5, 11))
    alphas = rng.normal(size=5)
    cfg = SvmConfig(kernel="poly", degree=2, coef0=0.7)
    model = SvmModel(sv, alphas, 0.3, cfg)
    for _ in range(20):
        x = rng.normal(size=11)
        brute = sum(a * (sum(s_k * x_k for s_k, x_k in zip(s, x)) + 0.7) ** 2 for a, s in zip(alphas, sv)) + 0.3
        label, value = predict(model, x)
        assert value == pytest.approx(brute, rel=1e-12)
        assert label == (HUMAN if brute > 0 else SYNTHETIC)


def test_tie_is_synthetic():
    model = SvmModel(np.zeros((1, 2)), np.array([0.0]), 0.0, LINEAR)
    assert predict(model, [1.0, 1.0]) == (SYNTHETIC, 0.0)


def test_label_swap_antisymmetric(rng):
    X, labels = two_blobs(rng, n=20, shift=0.6, dim=3)
    swapped = [SYNTHETIC if l == HUMAN else HUMAN for l in labels]
    a = train_svm(samples(X, labels), QUAD)
    b = train_svm(samples(X, swapped), QUAD)
    probe = rng.normal(size=(30, 3))
    # retraining on swapped labels agrees up to the solver tolerance
    np.testing.assert_allclose(a.decision_function(probe), -b.decision_function(probe), atol=0.05)
    negated = SvmModel(a.support_vectors, -a.alphas, -a.bias, a.config)
    np.testing.assert_allclose(negated.decision_function(probe), -a.decision_function(probe))


def test_permutation_invariance(rng):
    X, labels = two_blobs(rng, n=30, shift=0.8, dim=4)
    perm = rng.permutation(len(labels))
    a = train_svm(samples(X, labels), SvmConfig())
    b = train_svm(samples(X[perm], [labels[i] for i in perm]), SvmConfig())
    probe = rng.normal(size=(50, 4))
    da, db = a.decision_function(probe), b.decision_function(probe)
    np.testing.assert_allclose(da, db, atol=0.05)
    assert np.array_equal(np.sign(da[np.abs(da) > 0.05]), np.sign(db[np.abs(da) > 0.05]))


def test_training_errors():
    with pytest.raises(ValueError, match="single class"):
        train_svm(samples([(0, 0), (1, 1)], [HUMAN, HUMAN]), LINEAR)
    with pytest.raises(ValueError):
        LabeledSample(np.array([np.inf]), HUMAN, "a")
    with pytest.raises(ValueError):
        SvmConfig(c=0)


def test_dimension_mismatch(toy):
    model = train_svm(toy, LINEAR)
    with pytest.raises(ValueError):
        predict(model, [1.0, 2.0, 3.0])


def test_model_json_roundtrip(rng, toy):
    from benspeech.features import NormStats

    X, labels = two_blobs(rng, n=10)
    model = train_svm(samples(X, labels), SvmConfig())
    model.norm_stats = NormStats(np.zeros(11), np.full(11, 2.0))
    back = SvmModel.from_dict(json.loads(json.dumps(model.to_dict())))
    probe = rng.normal(size=(10, 11))
    np.testing.assert_array_equal(back.decision_function(probe), model.decision_function(probe))
    assert back.norm_stats_id == model.norm_stats_id


def test_metrics():
    m = report_metrics(ConfusionMatrix(181, 19, 15, 185))
    assert m["accuracy"] == pytest.approx(0.915)
    assert m["misclassification"] == pytest.approx(0.085)
    assert m["recall_human"] == pytest.approx(181 / 200)
    assert report_metrics(ConfusionMatrix(5, 0, 0, 7))["accuracy"] == 1
    assert report_metrics(ConfusionMatrix(1, 1, 1, 1))["accuracy"] == 0.5
    with pytest.raises(ValueError):
        report_metrics(ConfusionMatrix())


def speaker_corpus(rng, n_speakers=5, per=4, gap=3.0, noise=0.0):
    data = []
    for label, centre in ((HUMAN, gap), (SYNTHETIC, -gap)):
        for s in range(n_speakers):
            for u in range(per):
                x = np.full(11, centre) + noise * rng.normal(size=11) + 0.01 * rng.normal(size=11)
                data.append(LabeledSample(x, label, f"{label}{s}", f"{label}{s}-{u}"))
    return data


def test_loso_constant_classes_perfect(rng):
    res = loso_cv(speaker_corpus(rng), SvmConfig())
    assert res.metrics["accuracy"] == 1.0
    assert len(res.folds) == 10


def test_loso_bookkeeping(rng):
    data = speaker_corpus(rng, noise=2.0)
    res = loso_cv(data, SvmConfig())
    assert sum(f.n_test for f in res.folds) == len(data) == res.confusion.total
    ids = [p[0] for f in res.folds for p in f.predictions]
    assert sorted(ids) == sorted(s.sample_id for s in data)
    for f in res.folds:
        assert f.held_out not in f.train_speakers
        train_rows = [data[i] for i in f.norm_rows]
        assert all(s.speaker_id != f.held_out for s in train_rows)
        X = np.vstack([s.features for s in train_rows])
        np.testing.assert_allclose(f.norm_stats.mu, X.mean(0))
        np.testing.assert_allclose(f.norm_stats.sigma, X.std(0, ddof=1))


def test_loso_needs_two_speakers_per_class(rng):
    data = speaker_corpus(rng, n_speakers=1)
    with pytest.raises(ValueError, match="two"):
        loso_cv(data)
