"""
The three evaluation metrics, on synthetic data
===============================================

* Fréchet distance between embedding Gaussians (audio quality):
  sanity-checked against the diagonal closed form on sampled data.
* Story-alignment KLD: paired per-window classifier distributions.
* Transition KLD: the same divergence across each boundary.
"""

import numpy as np

from storytrack import (
    ClassProbabilities,
    EmbeddingMatrix,
    fad_score,
    kld,
    softmax,
    story_alignment,
    transition_smoothness,
)

rng = np.random.default_rng(0)

# --- Fréchet distance vs. the closed form for diagonal Gaussians ----------
d = 8
mu1, mu2 = rng.uniform(-2, 2, d), rng.uniform(-2, 2, d)
s1, s2 = rng.uniform(0.5, 2.0, d), rng.uniform(0.5, 2.0, d)
closed_form = float(np.sum((mu1 - mu2) ** 2) + np.sum((s1 - s2) ** 2))

def matrix(mu, s, n):
    return EmbeddingMatrix(rows=rng.normal(mu, s, size=(n, d)),
                           segment_span_s=30.0, source_tag="demo")

for n in (1_000, 10_000):
    estimate = fad_score(matrix(mu1, s1, n), matrix(mu2, s2, n))
    error = abs(estimate - closed_form) / closed_form
    print(f"n={n:>6}: distance {estimate:7.3f} vs closed form {closed_form:7.3f} "
          f"({100 * error:.2f}% off)")

# --- KL divergence on hand-checkable distributions ------------------------
p = ClassProbabilities(np.array([0.5, 0.5]))
q = ClassProbabilities(np.array([0.25, 0.75]))
print(f"\nkld((0.5,0.5) || (0.25,0.75)) = {kld(p, q):.6f}  "
      "(= 0.5 ln 2 + 0.5 ln 2/3)")

# --- Story alignment: reference windows vs generated windows --------------
reference = [softmax(rng.normal(size=16)) for _ in range(12)]
shifted = [softmax(np.roll(r.probs, 1) * 30) for r in reference]
aligned = story_alignment(reference, reference)
misaligned = story_alignment(reference, shifted)
print(f"\nalignment, identical tracks:  {aligned:.2f}")
print(f"alignment, scrambled windows: {misaligned:.2f}")

# --- Transition smoothness -------------------------------------------------
same_scene = [(p, p), (q, q)]
scene_cuts = [(p, q), (q, p)]
print(f"\ntransition KLD, continued scenes: {transition_smoothness(same_scene):.2f}")
print(f"transition KLD, hard cuts:        {transition_smoothness(scene_cuts):.2f}")
