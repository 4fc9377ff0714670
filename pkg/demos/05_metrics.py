"""IS, FID, and CLIPScore from feature matrices, plus the TFV1 feature-file
format that carries them between processes.

Closed-form cases are checked inline so the demo doubles as a sanity run.
"""

import tempfile
from pathlib import Path

import numpy as np

from texttiger import (
    aggregate_report,
    clip_score_txt_img,
    format_report_table,
    frechet_distance,
    gaussian_stats,
    inception_score,
    read_features,
    write_features,
)

rng = np.random.default_rng(0)

# --- Inception score ------------------------------------------------------
# Uniform rows mean the classifier is maximally unsure: IS is exactly 1.
uniform = np.full((16, 10), 0.1)
print("IS on uniform rows        :", inception_score(uniform)[0])

# Confident AND diverse predictions push IS toward the class count.
one_hot = np.eye(10)[rng.integers(0, 10, size=200)] * 0.999 + 0.0001
mean, std = inception_score(one_hot / one_hot.sum(axis=1, keepdims=True), splits=10)
print(f"IS on confident rows      : {mean:.2f} +/- {std:.2f} (10 splits)")

# --- FID ------------------------------------------------------------------
# Univariate closed form: mean 0 -> 1 and variance 1 -> 4 gives exactly 2.
r = gaussian_stats(np.array([[-1.0], [0.0], [1.0]]))   # mean 0, unbiased var 1
g = gaussian_stats(np.array([[-1.0], [1.0], [3.0]]))   # mean 1, unbiased var 4
print("closed-form FID           :", frechet_distance(r, g))

# Random feature clouds: distance grows as the clouds separate.
base = rng.normal(size=(400, 8))
for shift in (0.0, 0.5, 2.0):
    shifted = rng.normal(loc=shift, size=(400, 8))
    fid = frechet_distance(gaussian_stats(base), gaussian_stats(shifted))
    print(f"FID at mean shift {shift:3.1f}    : {fid:7.3f}")

# --- CLIPScore ------------------------------------------------------------
print("cosine of (3,4) vs (4,3)  :", clip_score_txt_img([3.0, 4.0], [4.0, 3.0]))

# --- TFV1 round trip and the full report ------------------------------------
with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    label_path = write_features(tmp / "labels.tfv1", uniform, kind="label_dist", model="demo")
    back = read_features(label_path)
    print("TFV1 round trip           :", back.shape, back.dtype)

    img = rng.normal(size=(64, 32))
    txt = img + 0.05 * rng.normal(size=(64, 32))
    ref = img + 0.20 * rng.normal(size=(64, 32))
    report = aggregate_report(uniform, base, base, (img, txt), (img, ref))
    print()
    print(format_report_table(report))
