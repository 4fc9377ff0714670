"""Image-generation evaluation numerics: IS, FID, and CLIPScore.

All operations work on plain numpy arrays loaded from serialized feature
files (see featureio): an N x C matrix of classifier label distributions for
IS, N x d pooled feature matrices for FID, and N x d embedding matrices for
CLIPScore. No model inference happens here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    InsufficientSamples,
    InvalidDistribution,
    NumericError,
    ZeroVector,
)

# Probability floor inside KL logs; keeps one-hot rows finite without
# perturbing nonzero entries (clamp, not additive, so exact cases stay exact).
PROB_FLOOR = 1e-12

ROW_SUM_ATOL = 1e-6


def _as_distributions(conditionals) -> np.ndarray:
    p = np.asarray(conditionals, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] == 0 or p.shape[1] == 0:
        raise DimensionError(f"expected a nonempty N x C matrix, got shape {p.shape}")
    sums = p.sum(axis=1)
    for i in range(p.shape[0]):
        if np.any(p[i] < 0) or not np.isfinite(sums[i]) or abs(sums[i] - 1.0) > ROW_SUM_ATOL:
            raise InvalidDistribution(
                f"row {i} is not a probability distribution (sum={sums[i]!r})", row=i
            )
    return p


def marginal_distribution(conditionals) -> np.ndarray:
    """Column mean of the per-image label distributions."""
    return _as_distributions(conditionals).mean(axis=0)


def inception_score(conditionals, splits: int = 1) -> tuple[float, float]:
    """Mean and std over splits of exp(mean KL(p(y|x) || p(y))).

    The marginal p(y) is computed per split. KL runs in the log domain with
    entries clamp-floored at PROB_FLOOR; zero-probability terms contribute
    exactly zero.
    """
    p = _as_distributions(conditionals)
    n = p.shape[0]
    if not 1 <= splits <= n:
        raise ValueError(f"splits must satisfy 1 <= splits <= {n}, got {splits}")
    scores = []
    for chunk in np.array_split(p, splits):
        q = chunk.mean(axis=0)
        log_p = np.log(np.maximum(chunk, PROB_FLOOR))
        log_q = np.log(np.maximum(q, PROB_FLOOR))
        kl_per_image = (chunk * (log_p - log_q)).sum(axis=1)
        scores.append(np.exp(kl_per_image.mean()))
    return float(np.mean(scores)), float(np.std(scores))


@dataclass(frozen=True)
class GaussianStats:
    """Mean vector, covariance matrix, and sample count of a feature set."""

    mean: np.ndarray
    covariance: np.ndarray
    sample_count: int

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def gaussian_stats(features) -> GaussianStats:
    """Column mean and unbiased (N-1) sample covariance, symmetrized."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"expected an N x d matrix, got shape {x.shape}")
    n = x.shape[0]
    if n < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {n}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianStats(mean=mean, covariance=cov, sample_count=n)


def _symmetric_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def trace_sqrt_product(sigma_a: np.ndarray, sigma_b: np.ndarray) -> float:
    """Tr((sigma_a sigma_b)^1/2) for symmetric PSD matrices.

    Computed via the symmetric conjugation sigma_a^1/2 sigma_b sigma_a^1/2,
    which shares eigenvalues with sigma_a sigma_b but stays symmetric, so a
    real eigendecomposition applies; roundoff negatives are clamped to zero.
    """
    sqrt_a = _symmetric_sqrt(np.asarray(sigma_a, dtype=np.float64))
    inner = sqrt_a @ np.asarray(sigma_b, dtype=np.float64) @ sqrt_a
    inner = (inner + inner.T) / 2.0
    eigs = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(np.sqrt(eigs).sum())


def frechet_distance(r: GaussianStats, g: GaussianStats) -> float:
    """||mu_r - mu_g||^2 + Tr(S_r) + Tr(S_g) - 2 Tr((S_r S_g)^1/2).

    A tiny negative total from roundoff is clamped to zero.
    """
    if r.dim != g.dim:
        raise DimensionError(f"dimension mismatch: {r.dim} vs {g.dim}")
    parts = (r.mean, g.mean, r.covariance, g.covariance)
    if not all(np.isfinite(a).all() for a in parts):
        raise NumericError("non-finite values in Gaussian statistics")
    diff = r.mean - g.mean
    cross = trace_sqrt_product(r.covariance, g.covariance)
    value = float(
        diff @ diff + np.trace(r.covariance) + np.trace(g.covariance) - 2.0 * cross
    )
    return max(value, 0.0)


def _cosine(a, b) -> float:
    u = np.asarray(a, dtype=np.float64)
    v = np.asarray(b, dtype=np.float64)
    if u.ndim != 1 or v.ndim != 1:
        raise DimensionError(f"expected 1-D vectors, got shapes {u.shape} and {v.shape}")
    if u.shape != v.shape:
        raise DimensionError(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")
    norm_u = np.linalg.norm(u)
    norm_v = np.linalg.norm(v)
    if norm_u == 0.0 or norm_v == 0.0:
        raise ZeroVector("cosine similarity is undefined for zero vectors")
    return float(u @ v / (norm_u * norm_v))


def clip_score_txt_img(img, txt) -> float:
    """Cosine similarity between an image embedding and a text embedding."""
    return _cosine(img, txt)


def clip_score_img_img(a, b) -> float:
    """Cosine similarity between two image embeddings."""
    return _cosine(a, b)


def _pair_means(pairs, score) -> float:
    a, b = pairs
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError("embedding sets must be N x d matrices")
    if a.shape != b.shape:
        raise DimensionError(f"pair shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean([score(a[i], b[i]) for i in range(a.shape[0])]))


@dataclass(frozen=True)
class MetricReport:
    """The five headline numbers plus the CLIPScore display-scaling flag."""

    is_mean: float
    is_std: float
    fid: float
    clip_txt_img_mean: float
    clip_img_img_mean: float
    scale_display_100: bool = True

    def to_dict(self) -> dict:
        return {
            "is_mean": self.is_mean,
            "is_std": self.is_std,
            "fid": self.fid,
            "clip_txt_img_mean": self.clip_txt_img_mean,
            "clip_img_img_mean": self.clip_img_img_mean,
            "scale_display_100": self.scale_display_100,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def aggregate_report(
    label_dists,
    real_features,
    gen_features,
    txt_pairs,
    img_pairs,
    splits: int = 1,
    scale_display_100: bool = True,
) -> MetricReport:
    """Assemble IS, FID, and both CLIPScore means into one report.

    ``txt_pairs`` is (generated-image embeddings, caption-text embeddings);
    ``img_pairs`` is (generated-image embeddings, reference-image
    embeddings); both are pairs of equally-shaped N x d matrices scored
    row-by-row. Cosines are raw in the report; the ``scale_display_100``
    flag only governs how the formatted table prints them.
    """
    is_mean, is_std = inception_score(label_dists, splits=splits)
    fid = frechet_distance(gaussian_stats(real_features), gaussian_stats(gen_features))
    txt_img = _pair_means(txt_pairs, clip_score_txt_img)
    img_img = _pair_means(img_pairs, clip_score_img_img)
    return MetricReport(
        is_mean=is_mean,
        is_std=is_std,
        fid=fid,
        clip_txt_img_mean=txt_img,
        clip_img_img_mean=img_img,
        scale_display_100=scale_display_100,
    )


def format_report_table(report: MetricReport) -> str:
    """Aligned text table with IS, FID, and both CLIPScore columns."""
    scale = 100.0 if report.scale_display_100 else 1.0
    headers = ["IS (up)", "FID (down)", "CLIP Txt-Img", "CLIP Img-Img"]
    values = [
        f"{report.is_mean:.2f} +/- {report.is_std:.2f}",
        f"{report.fid:.2f}",
        f"{report.clip_txt_img_mean * scale:.2f}",
        f"{report.clip_img_img_mean * scale:.2f}",
    ]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    head = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    rule = "  ".join("-" * w for w in widths)
    row = "  ".join(v.ljust(w) for v, w in zip(values, widths))
    note = "" if report.scale_display_100 else "\n(CLIPScore columns shown as raw cosine)"
    return f"{head}\n{rule}\n{row}{note}\n"
