"""Value-of-information layer: query scoring, elicitation, and pruning.

The value of asking the active user about a title is the myopic expected
entropy reduction of the personality posterior, i.e. the mutual information
between the personality variable and the (yet unobserved) rating of that
title.  It is nonnegative, zero for titles nobody in the database rated,
and never exceeds the remaining posterior entropy.

The same score drives three services: ranking candidate queries, a greedy
cost-bounded elicitation loop, and offline pruning of low-value titles or
users from the ratings database.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import personality
from .personality import PDParams, PersonalityPosterior, _xlogx, log_likelihood_table
from .ratings import NO_RATING, RatingsMatrix, UserProfile


@dataclass(frozen=True)
class QueryValue:
    title: int
    expected_gain: float  # nats


@dataclass(frozen=True)
class CostModel:
    """Query cost and the exchange rate from information to utility.

    ``cost_per_query(t)`` is the marginal cost of the t-th query (t >= 1)
    and must be nonnegative and nondecreasing in t.  ``gain_to_benefit``
    converts nats of expected gain into the same utility units.
    """

    cost_per_query: Callable[[int], float]
    gain_to_benefit: float = 1.0

    @classmethod
    def constant(cls, cost: float, gain_to_benefit: float = 1.0) -> "CostModel":
        return cls(lambda t: cost, gain_to_benefit)


def _gains_from_posterior(
    post: PersonalityPosterior,
    matrix: RatingsMatrix,
    params: PDParams,
    titles: list[int],
    table_exp: np.ndarray,
) -> np.ndarray:
    """Expected entropy reduction for each candidate title.

    For a candidate q and each possible answer x, the updated posterior is
    post * Pr(x | R_iq) renormalized; the normalizer is exactly the
    predictive probability of x.  Gain is H(post) minus the predictive-
    weighted entropy of those updates.
    """
    n = matrix.n_users
    s = len(matrix.scale)
    h_now = post.entropy
    gains = np.empty(len(titles))
    for out_idx, q in enumerate(titles):
        users, _, value_idx = matrix.title_column(q)
        if users.size == 0:
            # uniform likelihood for every personality: the posterior is
            # unchanged whatever the answer, so the gain is exactly zero
            gains[out_idx] = 0.0
            continue
        lik = np.full((s, n), 1.0 / s)
        lik[:, users] = table_exp[:, value_idx]
        w = lik * post.probs
        px = w.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            q_cond = np.where(px[:, None] > 0, w / px[:, None], 0.0)
        h_cond = -_xlogx(q_cond).sum(axis=1)
        gain = h_now - float(px @ h_cond)
        gains[out_idx] = gain if gain > 0.0 else 0.0
    return gains


def expected_information_gain(
    q: int, active: UserProfile, matrix: RatingsMatrix, params: PDParams
) -> float:
    """Mutual information (nats) between the personality variable and the
    active user's unobserved rating of title q."""
    if q in active.ratings:
        raise ValueError("already rated")
    if not 0 <= q < matrix.n_titles:
        raise ValueError(f"title index {q} out of range")
    post = personality.posterior(active, matrix, params)
    table_exp = np.exp(log_likelihood_table(matrix.scale, params))
    return float(_gains_from_posterior(post, matrix, params, [q], table_exp)[0])


def rank_queries(
    active: UserProfile,
    matrix: RatingsMatrix,
    params: PDParams,
    limit: int | None = None,
    exclude: set[int] | None = None,
) -> list[QueryValue]:
    """Unrated titles in decreasing expected-gain order (ties by ascending
    title index), truncated to ``limit``.  ``exclude`` drops titles that
    may not be queried again (e.g. already asked and unseen)."""
    exclude = exclude or set()
    candidates = [j for j in active.unrated_titles(matrix.n_titles) if j not in exclude]
    if not candidates:
        return []
    post = personality.posterior(active, matrix, params)
    table_exp = np.exp(log_likelihood_table(matrix.scale, params))
    gains = _gains_from_posterior(post, matrix, params, candidates, table_exp)
    ranked = sorted(
        (QueryValue(j, float(g)) for j, g in zip(candidates, gains)),
        key=lambda qv: (-qv.expected_gain, qv.title),
    )
    return ranked[:limit] if limit is not None else ranked


@dataclass(frozen=True)
class QueryStep:
    """One elicitation round: what was asked, why, and what it cost."""

    step: int
    title: int
    expected_gain: float
    answer: object  # scale value or NO_RATING
    cumulative_cost: float


@dataclass
class ElicitationTranscript:
    steps: list[QueryStep] = field(default_factory=list)
    stop_reason: str = ""

    def serialize(self, title_label=str) -> str:
        """Line-delimited transcript; unseen answers render as empty."""
        lines = ["step,title_id,gain,answer,cumulative_cost"]
        for s in self.steps:
            answer = "" if s.answer is NO_RATING else _fmt_value(s.answer)
            lines.append(
                f"{s.step},{title_label(s.title)},{repr(s.expected_gain)},"
                f"{answer},{repr(s.cumulative_cost)}"
            )
        return "\n".join(lines) + "\n"


def _fmt_value(v: float) -> str:
    return str(int(v)) if float(v) == int(v) else repr(float(v))


def elicit(
    active: UserProfile,
    matrix: RatingsMatrix,
    params: PDParams,
    cost: CostModel,
    answer_source: Callable[[int], object],
    max_queries: int,
) -> tuple[UserProfile, ElicitationTranscript]:
    """Greedy decreasing-gain elicitation loop.

    Each round re-ranks the remaining candidate titles, asks about the
    best one, and folds the answer into the profile (an unseen answer
    consumes the query and retires the title without adding a rating).
    Stops when the budget runs out, when no candidates remain, or when the
    best query's benefit (gain_to_benefit * expected gain) falls below the
    marginal cost of asking.
    """
    profile = active
    transcript = ElicitationTranscript()
    asked_unseen: set[int] = set()
    cumulative = 0.0
    while True:
        step = len(transcript.steps) + 1
        if len(transcript.steps) >= max_queries:
            transcript.stop_reason = "budget"
            break
        ranked = rank_queries(profile, matrix, params, limit=1, exclude=asked_unseen)
        if not ranked:
            transcript.stop_reason = "exhausted"
            break
        best = ranked[0]
        marginal = cost.cost_per_query(step)
        if cost.gain_to_benefit * best.expected_gain < marginal:
            transcript.stop_reason = "cost"
            break
        answer = answer_source(best.title)
        cumulative += marginal
        if answer is NO_RATING:
            asked_unseen.add(best.title)
        else:
            if answer not in matrix.scale:
                raise ValueError(f"value off scale: {answer!r}")
            profile = profile.with_rating(best.title, float(answer))
        transcript.steps.append(
            QueryStep(step, best.title, best.expected_gain, answer, cumulative)
        )
    return profile, transcript


# ---------------------------------------------------------------------------
# offline pruning
# ---------------------------------------------------------------------------

PRUNE_TITLES = "titles"
PRUNE_USERS = "users"

_N_PSEUDO_PROFILES = 32


@dataclass(frozen=True)
class PruneResult:
    matrix: RatingsMatrix
    kept: list[int]  # original indices of surviving titles or users, ascending
    scores: np.ndarray  # value score per original title or user


def _pseudo_profiles(
    matrix: RatingsMatrix, rng: np.random.Generator
) -> list[UserProfile]:
    """Plausible active profiles built by masking random halves of real
    rows; used to marginalize gain scores over conditioning states."""
    sources = [i for i in range(matrix.n_users) if matrix.user_rating_count(i) > 0]
    profiles = []
    for _ in range(_N_PSEUDO_PROFILES):
        if not sources:
            profiles.append(UserProfile({}))
            continue
        i = sources[int(rng.integers(len(sources)))]
        row = sorted(matrix.user_ratings(i).items())
        keep = rng.random(len(row)) < 0.5
        profiles.append(UserProfile({j: v for (j, v), k in zip(row, keep) if k}))
    return profiles


def _title_scores(
    matrix: RatingsMatrix, params: PDParams, rng: np.random.Generator
) -> np.ndarray:
    table_exp = np.exp(log_likelihood_table(matrix.scale, params))
    sums = np.zeros(matrix.n_titles)
    counts = np.zeros(matrix.n_titles)
    for profile in _pseudo_profiles(matrix, rng):
        candidates = profile.unrated_titles(matrix.n_titles)
        if not candidates:
            continue
        post = personality.posterior(profile, matrix, params)
        gains = _gains_from_posterior(post, matrix, params, candidates, table_exp)
        sums[candidates] += gains
        counts[candidates] += 1.0
    return np.where(counts > 0, sums / np.where(counts > 0, counts, 1.0), 0.0)


def _user_scores(
    matrix: RatingsMatrix, params: PDParams, rng: np.random.Generator
) -> np.ndarray:
    """Average posterior mass a user attracts across the pseudo profiles;
    a row with negligible mass contributes next to nothing to any
    prediction, so it is the cheapest to drop."""
    total = np.zeros(matrix.n_users)
    for profile in _pseudo_profiles(matrix, rng):
        total += personality.posterior(profile, matrix, params).probs
    return total / _N_PSEUDO_PROFILES


def prune(
    matrix: RatingsMatrix,
    params: PDParams,
    target: str,
    keep_fraction: float,
    rng_seed: int = 0,
) -> PruneResult:
    """Drop the lowest-value titles or users, keeping ``keep_fraction``.

    Title value is the expected information gain of querying the title,
    averaged over seeded pseudo-active profiles; user value is the average
    posterior mass of the user's row over the same profiles.  Ties break
    toward keeping the smaller index.
    """
    if not (0 < keep_fraction <= 1):
        raise ValueError("keep_fraction must be in (0, 1]")
    rng = np.random.default_rng(rng_seed)
    if target == PRUNE_TITLES:
        scores = _title_scores(matrix, params, rng)
        total = matrix.n_titles
    elif target == PRUNE_USERS:
        scores = _user_scores(matrix, params, rng)
        total = matrix.n_users
    else:
        raise ValueError(f"unknown prune target: {target!r}")

    n_keep = int(np.floor(keep_fraction * total + 1e-9))
    if n_keep < 1:
        raise ValueError(f"keep_fraction {keep_fraction} keeps no {target}")
    order = sorted(range(total), key=lambda idx: (-scores[idx], idx))
    kept = sorted(order[:n_keep])

    if target == PRUNE_TITLES:
        remap = {old: new for new, old in enumerate(kept)}
        entries = [
            (i, remap[j], v)
            for i, j, v in matrix.iter_entries()
            if j in remap
        ]
        title_ids = (
            [matrix.title_ids[j] for j in kept] if matrix.title_ids else None
        )
        new_matrix = RatingsMatrix(
            matrix.n_users, n_keep, entries, matrix.scale,
            user_ids=matrix.user_ids, title_ids=title_ids,
        )
    else:
        remap = {old: new for new, old in enumerate(kept)}
        entries = [
            (remap[i], j, v)
            for i, j, v in matrix.iter_entries()
            if i in remap
        ]
        user_ids = (
            [matrix.user_ids[i] for i in kept] if matrix.user_ids else None
        )
        new_matrix = RatingsMatrix(
            n_keep, matrix.n_titles, entries, matrix.scale,
            user_ids=user_ids, title_ids=matrix.title_ids,
        )
    return PruneResult(new_matrix, kept, scores)
