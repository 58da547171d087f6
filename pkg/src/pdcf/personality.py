"""Personality-diagnosis prediction model.

Each database user's observed row is treated as a candidate "personality
type": a vector of true preferences that the active user might share.  The
active user is modeled as one of the n database users chosen uniformly at
random, reporting ratings with Gaussian noise on the discrete scale.  A
Bayesian update over that choice gives a posterior over personality types,
and mixing each type's noisy rating model under the posterior gives a
predictive distribution for any unseen title.  The returned prediction is
the most probable rating.

The noise model: given a true rating y, a reported rating x has probability
proportional to exp(-(x - y)^2 / (2 sigma^2)), normalized over the finite
scale so each conditional is a proper distribution.  A missing database
entry contributes a uniform distribution over the scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ratings import NO_RATING, RatingScale, RatingsMatrix, UserProfile


@dataclass(frozen=True)
class PDParams:
    """Model parameters: sigma is the rating-noise standard deviation."""

    sigma: float = 2.5

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class PersonalityPosterior:
    """Probability that the active user has each database user's type."""

    probs: np.ndarray

    @property
    def entropy(self) -> float:
        """Shannon entropy in nats."""
        return float(-_xlogx(self.probs).sum())


@dataclass(frozen=True)
class PredictiveDistribution:
    """Probability of each scale value for one unseen title."""

    scale: RatingScale
    probs: np.ndarray

    def __getitem__(self, value: float) -> float:
        return float(self.probs[self.scale.index_of(value)])

    def as_dict(self) -> dict[float, float]:
        return {v: float(p) for v, p in zip(self.scale.values, self.probs)}

    @property
    def mean(self) -> float:
        return float(self.scale.array @ self.probs)


def _xlogx(p: np.ndarray) -> np.ndarray:
    """x * log(x) with the 0 * log(0) = 0 convention."""
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log(p[nz])
    return out


def log_likelihood_table(scale: RatingScale, params: PDParams) -> np.ndarray:
    """(S, S) table of log Pr(reported = x | true = y), indexed [x, y].

    Each column (fixed y) is a discrete Gaussian over the scale values,
    normalized to sum to one.
    """
    v = scale.array
    sq = -((v[:, None] - v[None, :]) ** 2) / (2.0 * params.sigma**2)
    # column-wise log normalizer, max-subtracted for stability
    mx = sq.max(axis=0)
    logz = mx + np.log(np.exp(sq - mx).sum(axis=0))
    return sq - logz


def likelihood(x: float, y, params: PDParams, scale: RatingScale) -> float:
    """Pr(reported rating = x | true rating = y).

    y may be NO_RATING, in which case every reported value is equally
    likely (uniform over the scale).
    """
    xi = scale.index_of(x)
    if y is NO_RATING:
        return 1.0 / len(scale)
    yi = scale.index_of(y)
    return float(np.exp(log_likelihood_table(scale, params)[xi, yi]))


def data_sigma(matrix: RatingsMatrix) -> float:
    """Standard deviation of all stored ratings.

    A data-driven starting point for sigma, for callers that prefer it over
    the hand-tuned default.
    """
    values = matrix.all_values()
    if values.size == 0:
        raise ValueError("no ratings")
    return float(values.std())


def _validate_profile(active: UserProfile, matrix: RatingsMatrix) -> None:
    for j, x in active.ratings.items():
        if not 0 <= j < matrix.n_titles:
            raise ValueError(f"title index {j} out of range")
        if x not in matrix.scale:
            raise ValueError(f"value off scale: {x!r}")


def posterior(
    active: UserProfile, matrix: RatingsMatrix, params: PDParams
) -> PersonalityPosterior:
    """Posterior over personality types given the active user's ratings.

    Uniform prior over the n database users; each rated title multiplies in
    its likelihood factor (the uniform 1/|scale| factor where the database
    user has no rating there).  Computed in log space with max-subtraction
    so long products of small factors don't underflow.
    """
    if matrix.n_users < 1:
        raise ValueError("matrix has no users")
    _validate_profile(active, matrix)
    n = matrix.n_users
    scale = matrix.scale
    table = log_likelihood_table(scale, params)
    log_uniform = -np.log(len(scale))

    log_w = np.zeros(n)
    for j, x in active.items_sorted():
        users, _, value_idx = matrix.title_column(j)
        log_w += log_uniform
        if users.size:
            log_w[users] += table[scale.index_of(x), value_idx] - log_uniform
    log_w -= log_w.max()
    w = np.exp(log_w)
    w /= w.sum()
    return PersonalityPosterior(w)


def predictive_from_posterior(
    j: int, post: PersonalityPosterior, matrix: RatingsMatrix, params: PDParams,
    table_exp: np.ndarray | None = None,
) -> PredictiveDistribution:
    """predictive_distribution() with a precomputed posterior, for callers
    scoring many titles against one profile.  Passing the exponentiated
    likelihood table as well avoids recomputing it per title."""
    scale = matrix.scale
    if table_exp is None:
        table_exp = np.exp(log_likelihood_table(scale, params))
    users, _, value_idx = matrix.title_column(j)
    rated_mass = post.probs[users]
    probs = table_exp[:, value_idx] @ rated_mass
    probs = probs + (1.0 - rated_mass.sum()) / len(scale)
    return PredictiveDistribution(scale, probs)


def predictive_distribution(
    j: int, active: UserProfile, matrix: RatingsMatrix, params: PDParams
) -> PredictiveDistribution:
    """Distribution over the active user's rating of unseen title j."""
    if j in active.ratings:
        raise ValueError("title not in NR")
    if not 0 <= j < matrix.n_titles:
        raise ValueError(f"title index {j} out of range")
    post = posterior(active, matrix, params)
    table_exp = np.exp(log_likelihood_table(matrix.scale, params))
    return predictive_from_posterior(j, post, matrix, params, table_exp)


def most_probable_rating(dist: PredictiveDistribution) -> float:
    """Most probable rating; ties go to the value nearest the distribution
    mean, then to the smaller value."""
    probs = dist.probs
    top = probs.max()
    tied = [v for v, p in zip(dist.scale.values, probs) if p == top]
    if len(tied) == 1:
        return tied[0]
    mean = dist.mean
    return min(tied, key=lambda v: (abs(v - mean), v))


def predict(
    j: int, active: UserProfile, matrix: RatingsMatrix, params: PDParams
) -> float:
    """Most probable rating for unseen title j."""
    return most_probable_rating(predictive_distribution(j, active, matrix, params))


def predict_from_posterior(
    j: int, post: PersonalityPosterior, matrix: RatingsMatrix, params: PDParams,
    table_exp: np.ndarray | None = None,
) -> float:
    """predict() with a precomputed posterior."""
    return most_probable_rating(
        predictive_from_posterior(j, post, matrix, params, table_exp)
    )


def predict_all(
    active: UserProfile, matrix: RatingsMatrix, params: PDParams
) -> dict[int, float]:
    """Predictions for every title the active user has not rated.

    The posterior is computed once and reused across titles, so this runs
    in time linear in the stored ratings rather than per-title quadratic.
    """
    post = posterior(active, matrix, params)
    table_exp = np.exp(log_likelihood_table(matrix.scale, params))
    out = {}
    for j in range(matrix.n_titles):
        if j not in active.ratings:
            out[j] = most_probable_rating(
                predictive_from_posterior(j, post, matrix, params, table_exp)
            )
    return out
