"""
Leave-one-speaker-out classification
====================================

Builds a two-class corpus (source-filter "human" voices versus the noise
control standing in for synthetic speech), extracts BenS features and
evaluates a quadratic-kernel SVM with leave-one-speaker-out folds. The
z-score statistics are refitted inside every fold.

The CLI equivalent:

    benspeech datagen corpus/
    benspeech extract corpus/manifest.csv -o features.csv
    benspeech loso features.csv --kernel poly --degree 2

Run: python demos/04_loso_classification.py
"""
from benspeech import LabeledSample, SvmConfig, bens_features, loso_cv
from benspeech.audio_io import DitherConfig
from benspeech.datagen import make_corpus

data = []
for i, (speaker, label, u, audio) in enumerate(make_corpus(seed=4, speakers=8, utterances=5)):
    vec, _ = bens_features(audio, dither_cfg=DitherConfig(seed=i))
    data.append(LabeledSample(vec.as_array(), label, speaker, audio.source_id))

result = loso_cv(data, SvmConfig(kernel="poly", degree=2, coef0=1.0))
(tp, fn), (fp, tn) = result.confusion.as_rows()
print("             Human  Synthetic")
print(f"Human        {tp:5d}  {fn:9d}")
print(f"Synthetic    {fp:5d}  {tn:9d}")
print(f"accuracy {result.metrics['accuracy']:.3f} over {len(result.folds)} folds")
