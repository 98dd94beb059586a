"""Command-line entry point: ``benspeech <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

Payload files (feature CSV, model/stats/evaluation JSON) depend only on
inputs, flags and seed. The run report printed to stdout carries the same
results plus a separate ``timing`` field.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .audio_io import DitherConfig, read_wav, write_wav
from .benford import (
    DIGITS,
    DigitHistogram,
    average_speaker_pmfs,
    conformity_regression,
    ideal_distribution,
    to_pmf,
)
from .classify import ConfusionMatrix, SvmConfig, SvmModel, loso_cv, predict, report_metrics, train_svm
from .datagen import make_corpus
from .features import (
    InsufficientFramesError,
    NormStats,
    bens_features,
    fit_norm_stats,
    utterance_digit_histogram,
    zscore,
)
from .records import (
    FeatureRow,
    TableError,
    read_feature_csv,
    read_manifest,
    to_labeled,
    write_feature_csv,
    write_manifest,
)
from .spectral import FrameConfig, SignalTooShortError

log = logging.getLogger("benspeech")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def file_seed(seed: int, index: int) -> int:
    """Dither seed for manifest row ``index``: SeedSequence(seed, spawn_key=(index,))."""
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def _frame_cfg(args) -> FrameConfig:
    return FrameConfig(args.frame_ms, args.hop_ms, args.window)


def _dither_cfg(args, index: int) -> DitherConfig:
    return DitherConfig(args.dither_divisor, file_seed(args.seed, index), not args.no_dither)


def _svm_cfg(args) -> SvmConfig:
    return SvmConfig(kernel=args.kernel, degree=args.degree, coef0=args.coef0, c=args.C,
                     tol=args.tol, max_passes=args.max_passes, seed=args.seed)


def _config_snapshot(args) -> dict:
    skip = {"func", "format", "report"}
    return {k: (str(v) if isinstance(v, Path) else v)
            for k, v in sorted(vars(args).items()) if k not in skip}


def _dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- workers
# module-level so they pickle for --jobs > 1

def _conformity_one(task):
    path, frame_cfg, dither_cfg = task
    try:
        hist, frames = utterance_digit_histogram(read_wav(path), frame_cfg, dither_cfg)
    except (OSError, ValueError) as exc:
        return None, 0, f"{type(exc).__name__}: {exc}"
    return hist.counts.tolist(), frames, None


def _extract_one(task):
    path, frame_cfg, dither_cfg, min_frames = task
    try:
        vec, series = bens_features(read_wav(path), frame_cfg, dither_cfg, min_frames)
    except InsufficientFramesError as exc:
        return None, exc.frames_total, exc.frames_rejected, str(exc)
    except (OSError, ValueError) as exc:
        return None, 0, 0, f"{type(exc).__name__}: {exc}"
    return vec.as_array().tolist(), series.frames_total, series.frames_rejected, None


# ---------------------------------------------------------------- commands

def cmd_conformity(args) -> dict:
    rows = read_manifest(args.manifest)
    if not rows:
        raise DataError("manifest is empty")
    frame_cfg = _frame_cfg(args)
    tasks = [(r.path, frame_cfg, _dither_cfg(args, i)) for i, r in enumerate(rows)]
    results = _map(_conformity_one, tasks, args.jobs)

    per_speaker: dict[str, list] = {}
    failures = []
    for row, (counts, frames, err) in zip(rows, results):
        if err:
            log.warning("%s: %s", row.sample_id, err)
            failures.append({"sample_id": row.sample_id, "error": err})
            continue
        acc = per_speaker.setdefault(row.speaker_id, [np.zeros(9, dtype=np.int64), 0])
        acc[0] += counts
        acc[1] += frames
    if not per_speaker:
        raise DataError("no file in the manifest could be analysed")

    speakers = {}
    pmfs = []
    for speaker, (counts, frames) in per_speaker.items():
        pmf = to_pmf(DigitHistogram(counts))
        pmfs.append(pmf)
        speakers[speaker] = {"frames": frames, "pmf": pmf.to_dict()}
    average = average_speaker_pmfs(pmfs)
    ideal = ideal_distribution()
    fit = conformity_regression(average, ideal)
    payload = {
        "fit": fit.to_dict(),
        "table": [{"digit": int(d), "ideal": ideal[d], "empirical": average[d]} for d in DIGITS],
        "average_pmf": average.to_dict(),
        "speakers": speakers,
        "failures": failures,
    }
    if args.output:
        _dump_json(payload, args.output)
    return payload


def cmd_extract(args) -> dict:
    rows = read_manifest(args.manifest)
    if not rows:
        raise DataError("manifest is empty")
    frame_cfg = _frame_cfg(args)
    tasks = [(r.path, frame_cfg, _dither_cfg(args, i), args.min_frames)
             for i, r in enumerate(rows)]
    results = _map(_extract_one, tasks, args.jobs)
    out, skipped = [], []
    for row, (feats, total, rejected, err) in zip(rows, results):
        if err:
            log.warning("%s: skipped (%s)", row.sample_id, err)
            skipped.append({"sample_id": row.sample_id, "reason": err})
            continue
        out.append(FeatureRow(row.sample_id, row.speaker_id, row.label,
                              np.array(feats), total, rejected))
    if not out:
        raise DataError("no utterance produced features")
    write_feature_csv(args.output, out)
    return {"rows_written": len(out), "rows_skipped": len(skipped), "skipped": skipped,
            "output": str(args.output)}


def cmd_fit_norm(args) -> dict:
    rows = read_feature_csv(args.features)
    stats = fit_norm_stats([r.features for r in rows])
    payload = {**stats.to_dict(), "id": stats.digest, "n": len(rows)}
    _dump_json(payload, args.output)
    return payload


def _load_stats(path) -> NormStats:
    return NormStats.from_dict(json.loads(Path(path).read_text()))


def cmd_apply_norm(args) -> dict:
    rows = read_feature_csv(args.features)
    stats = _load_stats(args.stats)
    normed = [FeatureRow(r.sample_id, r.speaker_id, r.label, zscore(r.features, stats),
                         r.frames_total, r.frames_rejected) for r in rows]
    write_feature_csv(args.output, normed)
    return {"rows_written": len(normed), "norm_stats_id": stats.digest}


def cmd_train(args) -> dict:
    samples = to_labeled(read_feature_csv(args.features))
    if args.no_norm:
        stats = None
    elif args.norm_stats:
        stats = _load_stats(args.norm_stats)
    else:
        stats = fit_norm_stats([s.features for s in samples])
    train = samples
    if stats is not None:
        train = [type(s)(zscore(s.features, stats), s.label, s.speaker_id, s.sample_id)
                 for s in samples]
    model = train_svm(train, _svm_cfg(args))
    model.norm_stats = stats
    _dump_json(model.to_dict(), args.output)
    return {"support_vectors": int(len(model.alphas)), "bias": model.bias,
            "iterations": model.n_iter, "norm_stats_id": model.norm_stats_id}


def _load_model(path) -> SvmModel:
    return SvmModel.from_dict(json.loads(Path(path).read_text()))


def cmd_predict(args) -> dict:
    model = _load_model(args.model)
    rows = read_feature_csv(args.features)
    preds = []
    for r in rows:
        label, value = predict(model, r.features)
        preds.append({"sample_id": r.sample_id, "speaker_id": r.speaker_id,
                      "predicted": label, "decision": value})
    payload = {"predictions": preds}
    if args.output:
        _dump_json(payload, args.output)
    return payload


def cmd_evaluate(args) -> dict:
    model = _load_model(args.model)
    samples = to_labeled(read_feature_csv(args.features))
    cm = ConfusionMatrix()
    for s in samples:
        cm.add(s.label, predict(model, s.features)[0])
    payload = {"confusion": cm.to_dict(), "metrics": report_metrics(cm)}
    if args.output:
        _dump_json(payload, args.output)
    return payload


def cmd_loso(args) -> dict:
    samples = to_labeled(read_feature_csv(args.features))
    result = loso_cv(samples, _svm_cfg(args), normalize=not args.no_norm)
    payload = result.to_dict()
    if args.output:
        _dump_json(payload, args.output)
    return payload


def cmd_datagen(args) -> dict:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for speaker, label, u, audio in make_corpus(
        args.seed, args.speakers, args.utterances, kind=args.kind,
        duration_s=args.duration, sample_rate_hz=args.sample_rate,
    ):
        name = f"{speaker}_u{u:02d}.wav"
        write_wav(out_dir / name, audio, bits=args.bits)
        manifest.append((name, speaker, label))
    write_manifest(out_dir / "manifest.csv", manifest)
    return {"files": len(manifest), "manifest": str(out_dir / "manifest.csv")}


# ---------------------------------------------------------------- text reports

def _g(x) -> str:
    return f"{x:.4g}"


def _text(command: str, res: dict) -> str:
    if command == "conformity":
        fit = res["fit"]
        lines = [f"{'digit':>5} {'ideal':>8} {'empirical':>10}"]
        lines += [f"{r['digit']:>5} {_g(r['ideal']):>8} {_g(r['empirical']):>10}" for r in res["table"]]
        lines.append(f"E = {_g(fit['slope'])} I {'+' if fit['intercept'] >= 0 else '-'} "
                     f"{_g(abs(fit['intercept']))}   R^2 = {_g(fit['r_squared'])}")
        lines.append(f"speakers: {len(res['speakers'])}   failed files: {len(res['failures'])}")
        return "\n".join(lines)
    if command in ("loso", "evaluate"):
        (tp, fn), (fp, tn) = res["confusion"]["matrix"]
        m = res["metrics"]
        lines = [
            f"{'':>12} {'Human':>8} {'Synthetic':>10}",
            f"{'Human':>12} {tp:>8} {fn:>10}",
            f"{'Synthetic':>12} {fp:>8} {tn:>10}",
            f"accuracy {_g(m['accuracy'])}   misclassification {_g(m['misclassification'])}",
        ]
        if command == "loso":
            lines.append(f"folds: {len(res['folds'])}")
        return "\n".join(lines)
    return "\n".join(f"{k}: {v}" for k, v in res.items() if not isinstance(v, (list, dict)))


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--frame-ms", type=float, default=25.0)
    g.add_argument("--hop-ms", type=float, default=10.0)
    g.add_argument("--window", choices=("rectangular", "hann"), default="rectangular")
    g.add_argument("--dither-divisor", type=float, default=1000.0)
    g.add_argument("--no-dither", action="store_true")
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--format", choices=("json", "text"), default="text")
    g.add_argument("--report", type=Path, help="also write the run report JSON here")
    g.add_argument("-v", "--verbose", action="store_true")

    svm = argparse.ArgumentParser(add_help=False)
    s = svm.add_argument_group("SVM options")
    s.add_argument("--kernel", choices=("linear", "poly"), default="poly")
    s.add_argument("--degree", type=int, default=2)
    s.add_argument("--coef0", type=float, default=1.0)
    s.add_argument("-C", type=float, default=1.0)
    s.add_argument("--tol", type=float, default=1e-3)
    s.add_argument("--max-passes", type=int, default=100)
    s.add_argument("--no-norm", action="store_true", help="skip z-scoring")

    p = _Parser(prog="benspeech", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("conformity", parents=[common], help="digit PMFs vs. Benford")
    c.add_argument("manifest", type=Path)
    c.add_argument("-o", "--output", type=Path)
    c.set_defaults(func=cmd_conformity)

    c = sub.add_parser("extract", parents=[common], help="manifest -> BenS feature CSV")
    c.add_argument("manifest", type=Path)
    c.add_argument("-o", "--output", type=Path, required=True)
    c.add_argument("--min-frames", type=int, default=10)
    c.set_defaults(func=cmd_extract)

    c = sub.add_parser("fit-norm", parents=[common], help="feature CSV -> NormStats JSON")
    c.add_argument("features", type=Path)
    c.add_argument("-o", "--output", type=Path, required=True)
    c.set_defaults(func=cmd_fit_norm)

    c = sub.add_parser("apply-norm", parents=[common], help="z-score a feature CSV")
    c.add_argument("features", type=Path)
    c.add_argument("--stats", type=Path, required=True)
    c.add_argument("-o", "--output", type=Path, required=True)
    c.set_defaults(func=cmd_apply_norm)

    c = sub.add_parser("train", parents=[common, svm], help="train an SVM model")
    c.add_argument("features", type=Path)
    c.add_argument("--norm-stats", type=Path)
    c.add_argument("-o", "--output", type=Path, required=True)
    c.set_defaults(func=cmd_train)

    c = sub.add_parser("predict", parents=[common], help="classify a feature CSV")
    c.add_argument("model", type=Path)
    c.add_argument("features", type=Path)
    c.add_argument("-o", "--output", type=Path)
    c.set_defaults(func=cmd_predict)

    c = sub.add_parser("evaluate", parents=[common], help="confusion matrix for a labelled CSV")
    c.add_argument("model", type=Path)
    c.add_argument("features", type=Path)
    c.add_argument("-o", "--output", type=Path)
    c.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("loso", parents=[common, svm], help="leave-one-speaker-out evaluation")
    c.add_argument("features", type=Path)
    c.add_argument("-o", "--output", type=Path)
    c.set_defaults(func=cmd_loso)

    c = sub.add_parser("datagen", parents=[common], help="write a synthetic WAV corpus")
    c.add_argument("out_dir", type=Path)
    c.add_argument("--kind", choices=("two-class", "source-filter", "control"), default="two-class")
    c.add_argument("--speakers", type=int, default=20)
    c.add_argument("--utterances", type=int, default=10)
    c.add_argument("--duration", type=float, default=2.0)
    c.add_argument("--sample-rate", type=int, default=16000)
    c.add_argument("--bits", type=int, choices=(0, 16, 32), default=16,
                   help="PCM bit depth, 0 for float32")
    c.set_defaults(func=cmd_datagen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    started = time.time()
    try:
        results = args.func(args)
    except (DataError, TableError, FileNotFoundError, ValueError, SignalTooShortError) as exc:
        print(f"benspeech {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"benspeech {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    report = {
        "command": args.command,
        "config": _config_snapshot(args),
        "results": results,
        "version": __version__,
        "timing": {"started_unix": started, "elapsed_s": time.time() - started},
    }
    if args.report:
        _dump_json(report, args.report)
    if args.format == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(_text(args.command, results))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
