"""
BenS features for one utterance
===============================

Each frame's leading-digit PMF is compared with the ideal distribution by
KL divergence; frames missing any digit are dropped. The 11 features are
the mean, standard deviation and 10th..90th percentiles of what remains.

Run: python demos/03_bens_features.py
"""
from benspeech import GenConfig, bens_features, non_benford_control, synth_source_filter
from benspeech.features import FEATURE_NAMES

cfg = GenConfig(seed=3, duration_s=2.0)
for name, audio in (("source-filter", synth_source_filter(cfg)),
                    ("noise control", non_benford_control(cfg))):
    vec, series = bens_features(audio)
    print(f"{name}: {len(series.values)} of {series.frames_total} frames kept")
    for key, value in vec.to_dict().items():
        print(f"  {key:8s} {value:.5f}")

print("\nfeature order:", ", ".join(FEATURE_NAMES))
