"""
Do source-filter spectra follow Benford's law?
==============================================

Synthesises a small corpus with the source-filter generator (excitation x
vocal tract x radiation), then runs the conformity study: per-speaker
leading-digit PMFs of min-normalised frame spectra, averaged over
speakers and regressed on the ideal distribution.

Swap in your own recordings with
``benspeech conformity my_manifest.csv``.

Run: python demos/02_speech_conformity.py
"""
import numpy as np

from benspeech import (
    DigitHistogram,
    DitherConfig,
    average_speaker_pmfs,
    conformity_regression,
    ideal_distribution,
    to_pmf,
)
from benspeech.datagen import make_corpus
from benspeech.features import utterance_digit_histogram

per_speaker = {}
for speaker, _, u, audio in make_corpus(seed=0, speakers=10, utterances=5, kind="source-filter"):
    hist, _ = utterance_digit_histogram(audio, dither_cfg=DitherConfig(seed=u))
    per_speaker[speaker] = per_speaker.get(speaker, DigitHistogram(np.zeros(9, int))) + hist

average = average_speaker_pmfs(to_pmf(h) for h in per_speaker.values())
ideal = ideal_distribution()
print("digit  ideal   empirical")
for d in range(1, 10):
    print(f"{d:5d}  {ideal[d]:.4f}  {average[d]:.4f}")

fit = conformity_regression(average, ideal)
print(f"\nE = {fit.slope:.3f} I {fit.intercept:+.4f}   R^2 = {fit.r_squared:.4f}")

# The same pipeline on the noise control, whose frames span a single decade.
ctl = [to_pmf(utterance_digit_histogram(a)[0])
       for _, _, _, a in make_corpus(seed=0, speakers=5, utterances=1, kind="control")]
fit = conformity_regression(average_speaker_pmfs(ctl), ideal)
print(f"control: E = {fit.slope:.3f} I {fit.intercept:+.4f}   R^2 = {fit.r_squared:.4f}")
