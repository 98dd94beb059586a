"""Manifest and feature-table files.

Manifest CSV: ``path,speaker_id[,label]``, with relative paths resolved
against the manifest's directory. Feature CSV columns are
:data:`FEATURE_COLUMNS`.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classify import LABELS, LabeledSample
from .features import FEATURE_NAMES

__all__ = [
    "MANIFEST_LABELS",
    "FEATURE_COLUMNS",
    "ManifestRow",
    "FeatureRow",
    "TableError",
    "read_manifest",
    "write_manifest",
    "read_feature_csv",
    "write_feature_csv",
    "to_labeled",
]

MANIFEST_LABELS = LABELS + ("unlabeled",)
FEATURE_COLUMNS = (("sample_id", "speaker_id", "label") + FEATURE_NAMES
                   + ("frames_total", "frames_rejected"))


class TableError(ValueError):
    """A manifest or feature table is malformed; the message names the line."""


@dataclass(frozen=True)
class ManifestRow:
    path: Path
    speaker_id: str
    label: str
    sample_id: str


@dataclass(frozen=True, eq=False)
class FeatureRow:
    sample_id: str
    speaker_id: str
    label: str
    features: np.ndarray
    frames_total: int
    frames_rejected: int


def read_manifest(path) -> list[ManifestRow]:
    path = Path(path)
    rows, seen = [], set()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"path", "speaker_id"} <= set(reader.fieldnames):
            raise TableError(f"{path}:1: manifest header must include 'path' and 'speaker_id'")
        for rec in reader:
            line = reader.line_num
            raw = (rec.get("path") or "").strip()
            speaker = (rec.get("speaker_id") or "").strip()
            label = (rec.get("label") or "unlabeled").strip() or "unlabeled"
            if not raw:
                raise TableError(f"{path}:{line}: empty path")
            if not speaker:
                raise TableError(f"{path}:{line}: empty speaker_id")
            if label not in MANIFEST_LABELS:
                raise TableError(f"{path}:{line}: label {label!r} not in {MANIFEST_LABELS}")
            if raw in seen:
                raise TableError(f"{path}:{line}: duplicate path {raw!r}")
            seen.add(raw)
            p = Path(raw)
            rows.append(ManifestRow(p if p.is_absolute() else path.parent / p, speaker, label, raw))
    return rows


def write_manifest(path, rows) -> None:
    """``rows`` are ``(path, speaker_id, label)`` triples."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("path", "speaker_id", "label"))
        for r in rows:
            w.writerow([str(v) for v in r])


def write_feature_csv(dest, rows) -> None:
    """Write :class:`FeatureRow` objects; ``dest`` is a path or text stream.

    Floats use ``repr`` so the file round-trips exactly.
    """
    own = not hasattr(dest, "write")
    fh = open(dest, "w", newline="") if own else dest
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURE_COLUMNS)
        for r in rows:
            w.writerow([r.sample_id, r.speaker_id, r.label]
                       + [repr(float(v)) for v in r.features]
                       + [r.frames_total, r.frames_rejected])
    finally:
        if own:
            fh.close()


def read_feature_csv(path) -> list[FeatureRow]:
    path = Path(path)
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != FEATURE_COLUMNS:
            raise TableError(f"{path}:1: unexpected header, want {','.join(FEATURE_COLUMNS)}")
        for rec in reader:
            line = reader.line_num
            if not rec:
                continue
            if len(rec) != len(FEATURE_COLUMNS):
                raise TableError(f"{path}:{line}: expected {len(FEATURE_COLUMNS)} fields, got {len(rec)}")
            sample_id, speaker, label = rec[0], rec[1], rec[2]
            if label not in MANIFEST_LABELS:
                raise TableError(f"{path}:{line}: unknown label {label!r}")
            try:
                feats = np.array([float(v) for v in rec[3:3 + len(FEATURE_NAMES)]])
                total, rejected = int(rec[-2]), int(rec[-1])
            except ValueError as exc:
                raise TableError(f"{path}:{line}: {exc}") from None
            if not np.all(np.isfinite(feats)):
                raise TableError(f"{path}:{line}: non-finite feature value")
            out.append(FeatureRow(sample_id, speaker, label, feats, total, rejected))
    return out


def to_labeled(rows) -> list[LabeledSample]:
    missing = [r.sample_id for r in rows if r.label not in LABELS]
    if missing:
        raise TableError(f"{len(missing)} rows lack a human/synthetic label (first: {missing[0]!r})")
    return [LabeledSample(r.features, r.label, r.speaker_id, r.sample_id) for r in rows]
