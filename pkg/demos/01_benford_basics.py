"""
Leading digits and Benford's law
================================

Products of independent random factors drift toward the Benford
distribution P(d) = log10(1 + 1/d). This script shows the drift and the
two comparison tools used throughout the package: KL divergence and the
nine-point regression against the ideal probabilities.

Run: python demos/01_benford_basics.py
"""
from benspeech import (
    GenConfig,
    conformity_regression,
    digit_histogram,
    ideal_distribution,
    kl_divergence,
    multiplicative_values,
    to_pmf,
)

ideal = ideal_distribution()
print("ideal:", " ".join(f"{d}:{ideal[d]:.4f}" for d in range(1, 10)))

# A single Uniform(0.1, 10) factor is far from Benford; a dozen is close.
for k in (1, 2, 4, 12):
    values = multiplicative_values(GenConfig(seed=1, n=100_000, k_factors=k))
    pmf = to_pmf(digit_histogram(values))
    fit = conformity_regression(pmf, ideal)
    print(f"k={k:2d}  KL={kl_divergence(ideal, pmf):.5f}  "
          f"slope={fit.slope:.3f}  intercept={fit.intercept:+.4f}  R^2={fit.r_squared:.4f}")
