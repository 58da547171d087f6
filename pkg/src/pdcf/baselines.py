"""Memory-based comparison algorithms.

Two classic similarity-weighted predictors: Pearson correlation with the
mean-offset combination rule, and vector (cosine) similarity with a plain
weighted average.  Degenerate similarities (empty overlap, zero variance,
zero norm) map to weight 0 instead of raising, so one pathological user
never aborts a prediction; when every weight is degenerate the predictor
falls back to the overall mean rating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ratings import RatingsMatrix, UserProfile, overall_mean

CORRELATION = "correlation"
VECTOR_SIMILARITY = "vector-similarity"

# variance/normalizer floor below which a similarity is declared degenerate;
# genuine variance on unit-gap scales is orders of magnitude above this
_DEGENERATE_EPS = 1e-10


@dataclass(frozen=True)
class SimilarityWeights:
    """Similarity of one active user to every database user."""

    kind: str
    values: np.ndarray


def similarity_weights(
    kind: str, active: UserProfile, matrix: RatingsMatrix
) -> SimilarityWeights:
    """Weights of the active user against all n database users at once.

    One pass over the active user's rated columns; prefer this to the
    per-user functions when predicting many titles for one profile.
    """
    if kind == CORRELATION:
        values = _pearson_all(active, matrix)
    elif kind == VECTOR_SIMILARITY:
        values = _cosine_all(active, matrix)
    else:
        raise ValueError(f"unknown similarity kind: {kind!r}")
    return SimilarityWeights(kind, values)


def _pearson_all(active: UserProfile, matrix: RatingsMatrix) -> np.ndarray:
    n = matrix.n_users
    count = np.zeros(n)
    sa = np.zeros(n)
    saa = np.zeros(n)
    sb = np.zeros(n)
    sbb = np.zeros(n)
    sab = np.zeros(n)
    for j, x in active.items_sorted():
        users, vals, _ = matrix.title_column(j)
        if users.size == 0:
            continue
        count[users] += 1.0
        sa[users] += x
        saa[users] += x * x
        sb[users] += vals
        sbb[users] += vals * vals
        sab[users] += x * vals

    w = np.zeros(n)
    ok = count > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        cov = sab - sa * sb / np.where(ok, count, 1.0)
        var_a = saa - sa * sa / np.where(ok, count, 1.0)
        var_b = sbb - sb * sb / np.where(ok, count, 1.0)
        good = ok & (var_a > _DEGENERATE_EPS) & (var_b > _DEGENERATE_EPS)
        w[good] = cov[good] / np.sqrt(var_a[good] * var_b[good])
    return np.clip(w, -1.0, 1.0)


def _cosine_all(active: UserProfile, matrix: RatingsMatrix) -> np.ndarray:
    n = matrix.n_users
    dot = np.zeros(n)
    for j, x in active.items_sorted():
        users, vals, _ = matrix.title_column(j)
        if users.size:
            dot[users] += x * vals
    norm_a = np.sqrt(sum(x * x for _, x in active.items_sorted()))
    norms = matrix.user_norms()
    w = np.zeros(n)
    good = (norms > _DEGENERATE_EPS) & (norm_a > _DEGENERATE_EPS)
    w[good] = dot[good] / (norm_a * norms[good])
    return np.clip(w, -1.0, 1.0)


def pearson_similarity(active: UserProfile, matrix: RatingsMatrix, i: int) -> float:
    """Pearson correlation over the titles rated by both the active user
    and user i, each side centered on its own mean over that overlap.

    Empty overlap or zero variance on either side gives 0.
    """
    return float(_pearson_all(active, matrix)[i])


def cosine_similarity(active: UserProfile, matrix: RatingsMatrix, i: int) -> float:
    """Cosine of the two rating vectors with absent entries treated as 0.

    Zero-norm vectors give 0.
    """
    return float(_cosine_all(active, matrix)[i])


def baseline_predict(
    kind: str,
    j: int,
    active: UserProfile,
    matrix: RatingsMatrix,
    weights: SimilarityWeights | None = None,
) -> float:
    """Similarity-weighted prediction of the active user's rating for
    unseen title j; real-valued, clamped to the scale's range.

    Correlation uses the mean-offset rule normalized by the sum of absolute
    weights; vector similarity uses a plain weighted average.  Falls back
    to the overall mean when nobody rated j or all weights are degenerate.
    """
    if j in active.ratings:
        raise ValueError("title not in NR")
    if weights is None:
        weights = similarity_weights(kind, active, matrix)
    elif weights.kind != kind:
        raise ValueError(f"weights are {weights.kind!r}, expected {kind!r}")

    users, vals, _ = matrix.title_column(j)
    if users.size == 0:
        return overall_mean(matrix)
    w = weights.values[users]

    if kind == CORRELATION:
        denom = np.abs(w).sum()
        if denom <= _DEGENERATE_EPS:
            return overall_mean(matrix)
        active_mean = sum(x for _, x in active.items_sorted()) / len(active.ratings)
        pred = active_mean + (w @ (vals - matrix.user_means()[users])) / denom
    elif kind == VECTOR_SIMILARITY:
        denom = w.sum()
        if abs(denom) <= _DEGENERATE_EPS:
            return overall_mean(matrix)
        pred = (w @ vals) / denom
    else:
        raise ValueError(f"unknown similarity kind: {kind!r}")
    return float(np.clip(pred, matrix.scale.min, matrix.scale.max))
