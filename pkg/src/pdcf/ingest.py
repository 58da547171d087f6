"""Data ingestion: ratings CSV I/O, action-log conversion, density
filtering, and a synthetic generator for desk-scale benchmarks.

File formats
------------
Ratings CSV:     header ``user_id,item_id,rating``, UTF-8, one rating per
                 line; ratings rendered as the shortest exact decimal.
Action-log CSV:  header ``user_id,doc_id,action``; action names are
                 kebab-case keys of the weight table.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .ratings import RatingScale, RatingsMatrix, UserProfile

logger = logging.getLogger(__name__)

RATINGS_HEADER = "user_id,item_id,rating"
ACTIONS_HEADER = "user_id,doc_id,action"
PROFILE_HEADER = "item_id,rating"

# Per-action weights for deriving document ratings from a usage log.
# Summed per (user, document), rounded, and clamped to 0..6.
DEFAULT_ACTION_WEIGHTS: dict[str, float] = {
    "add-to-profile": 2.0,
    "download": 1.0,
    "view-details": 0.5,
    "view-bibliography": 0.5,
    "view-page-image": 0.5,
    "ignore-recommendation": -1.0,
    "view-same-source": 0.5,
    "view-overlap": 1.0,
    "correct-details": 1.0,
    "view-citation-context": 1.0,
    "view-related": 0.5,
}


class SymbolTable:
    """Bidirectional intern table: external id string <-> dense index."""

    def __init__(self):
        self._index: dict[str, int] = {}
        self._names: list[str] = []

    def intern(self, name: str) -> int:
        idx = self._index.get(name)
        if idx is None:
            idx = len(self._names)
            self._index[name] = idx
            self._names.append(name)
        return idx

    def get(self, name: str) -> int | None:
        return self._index.get(name)

    def name_of(self, idx: int) -> str:
        return self._names[idx]

    @property
    def names(self) -> list[str]:
        return list(self._names)

    def __len__(self) -> int:
        return len(self._names)


def format_rating(v: float) -> str:
    """Shortest exact decimal for a rating value (3.0 -> "3")."""
    v = float(v)
    return str(int(v)) if v == int(v) else repr(v)


def _parse_csv_line(line: str, n_fields: int, lineno: int, path) -> list[str]:
    parts = line.rstrip("\n").rstrip("\r").split(",")
    if len(parts) != n_fields:
        raise ValueError(
            f"{path}: malformed line {lineno}: expected {n_fields} fields, "
            f"got {len(parts)}"
        )
    return parts


def read_ratings_csv(
    path,
    scale: RatingScale,
    user_table: SymbolTable,
    title_table: SymbolTable,
) -> dict[tuple[int, int], float]:
    """Read a ratings CSV into (user, title) -> value, interning ids.

    Duplicate (user, item) pairs resolve last-wins; the duplicate count is
    logged as a warning.  The symbol tables may grow, which lets callers
    share one id space across several files before building matrices.
    """
    entries: dict[tuple[int, int], float] = {}
    duplicates = 0
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        if header != RATINGS_HEADER:
            raise ValueError(
                f"{path}: expected header {RATINGS_HEADER!r}, got {header!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            if line.strip() == "":
                continue
            user_id, item_id, raw = _parse_csv_line(line, 3, lineno, path)
            try:
                value = float(raw)
            except ValueError:
                raise ValueError(
                    f"{path}: malformed line {lineno}: bad rating {raw!r}"
                ) from None
            if value not in scale:
                raise ValueError(
                    f"{path}: line {lineno}: rating {raw} is off the scale"
                )
            key = (user_table.intern(user_id), title_table.intern(item_id))
            if key in entries:
                duplicates += 1
            entries[key] = value
    if not entries:
        raise ValueError(f"{path}: no ratings")
    if duplicates:
        logger.warning("%s: %d duplicate ratings resolved last-wins", path, duplicates)
    return entries


def load_ratings_csv(
    path,
    scale: RatingScale,
    user_table: SymbolTable | None = None,
    title_table: SymbolTable | None = None,
) -> RatingsMatrix:
    """Load a ratings CSV into a matrix; see read_ratings_csv for the
    interning and duplicate rules."""
    users = user_table if user_table is not None else SymbolTable()
    titles = title_table if title_table is not None else SymbolTable()
    entries = read_ratings_csv(path, scale, users, titles)
    return RatingsMatrix(
        len(users),
        len(titles),
        [(i, j, v) for (i, j), v in entries.items()],
        scale,
        user_ids=users.names,
        title_ids=titles.names,
    )


def write_ratings_csv(matrix: RatingsMatrix, path) -> None:
    """Export a matrix; load_ratings_csv of the output reproduces it."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(RATINGS_HEADER + "\n")
        for i, j, v in matrix.iter_entries():
            fh.write(
                f"{matrix.user_label(i)},{matrix.title_label(j)},{format_rating(v)}\n"
            )


def load_profile_csv(path, scale: RatingScale, title_table: SymbolTable) -> tuple[UserProfile, list[str]]:
    """Load one user's profile (``item_id,rating``).

    Items are resolved against an existing title table; unknown ids are
    returned rather than raised so the caller can report them all at once.
    An empty body is legal (a brand-new user).
    """
    ratings: dict[int, float] = {}
    unknown: list[str] = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        if header != PROFILE_HEADER:
            raise ValueError(
                f"{path}: expected header {PROFILE_HEADER!r}, got {header!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            if line.strip() == "":
                continue
            item_id, raw = _parse_csv_line(line, 2, lineno, path)
            try:
                value = float(raw)
            except ValueError:
                raise ValueError(
                    f"{path}: malformed line {lineno}: bad rating {raw!r}"
                ) from None
            if value not in scale:
                raise ValueError(
                    f"{path}: line {lineno}: rating {raw} is off the scale"
                )
            idx = title_table.get(item_id)
            if idx is None:
                unknown.append(item_id)
            else:
                ratings[idx] = value
    return UserProfile(ratings), unknown


def load_action_log_csv(path) -> list[tuple[str, str, str]]:
    """Load an action log as (user_id, doc_id, action) triples."""
    log = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        if header != ACTIONS_HEADER:
            raise ValueError(
                f"{path}: expected header {ACTIONS_HEADER!r}, got {header!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            if line.strip() == "":
                continue
            user_id, doc_id, action = _parse_csv_line(line, 3, lineno, path)
            log.append((user_id, doc_id, action))
    return log


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def actions_to_ratings(
    log: list[tuple[str, str, str]],
    weights: dict[str, float] | None = None,
    scale: RatingScale | None = None,
) -> RatingsMatrix:
    """Convert an action log to document ratings.

    Every logged action counts (repeats included).  Per (user, document)
    the weights are summed, rounded half away from zero, and clamped to
    the 0..6 range the weight table is designed for.
    """
    weights = DEFAULT_ACTION_WEIGHTS if weights is None else weights
    scale = scale if scale is not None else RatingScale.integer(0, 6)
    users = SymbolTable()
    docs = SymbolTable()
    sums: dict[tuple[int, int], float] = {}
    for user_id, doc_id, action in log:
        if action not in weights:
            raise ValueError(f"unknown action name: {action!r}")
        key = (users.intern(user_id), docs.intern(doc_id))
        sums[key] = sums.get(key, 0.0) + weights[action]
    entries = [
        (i, j, float(min(6, max(0, _round_half_away(total)))))
        for (i, j), total in sums.items()
    ]
    return RatingsMatrix(
        len(users), len(docs), entries, scale,
        user_ids=users.names, title_ids=docs.names,
    )


def filter_density(
    matrix: RatingsMatrix,
    min_users_per_title: int,
    min_titles_per_user: int,
    to_fixpoint: bool = True,
) -> RatingsMatrix:
    """Drop sparse titles, then sparse users measured against surviving
    titles.

    Removing users can push titles back below threshold, so by default the
    two passes repeat until nothing changes; ``to_fixpoint=False`` gives
    the single title-then-user pass.
    """
    kept_users = set(range(matrix.n_users))
    kept_titles = set(range(matrix.n_titles))
    while True:
        title_counts = {j: 0 for j in kept_titles}
        for i, j, _ in matrix.iter_entries():
            if i in kept_users and j in kept_titles:
                title_counts[j] += 1
        new_titles = {j for j in kept_titles if title_counts[j] >= min_users_per_title}
        user_counts = {i: 0 for i in kept_users}
        for i, j, _ in matrix.iter_entries():
            if i in kept_users and j in new_titles:
                user_counts[i] += 1
        new_users = {i for i in kept_users if user_counts[i] >= min_titles_per_user}
        changed = new_titles != kept_titles or new_users != kept_users
        kept_titles, kept_users = new_titles, new_users
        if not changed or not to_fixpoint:
            break

    user_map = {old: new for new, old in enumerate(sorted(kept_users))}
    title_map = {old: new for new, old in enumerate(sorted(kept_titles))}
    entries = [
        (user_map[i], title_map[j], v)
        for i, j, v in matrix.iter_entries()
        if i in user_map and j in title_map
    ]
    user_ids = (
        [matrix.user_ids[i] for i in sorted(kept_users)] if matrix.user_ids else None
    )
    title_ids = (
        [matrix.title_ids[j] for j in sorted(kept_titles)] if matrix.title_ids else None
    )
    return RatingsMatrix(
        len(kept_users), len(kept_titles), entries, matrix.scale,
        user_ids=user_ids, title_ids=title_ids,
    )


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSpec:
    """Generator settings for seeded synthetic benchmarks.

    Users are noisy copies of a small pool of underlying preference
    vectors ("personalities"): each user picks one uniformly, then reports
    Gaussian-noised ratings (snapped to the scale) for a random subset of
    titles.  Test users come from the same pool and keep their full true
    vector so held-out answers can be simulated.
    """

    n_users: int
    n_titles: int
    ratings_per_user: int
    scale: RatingScale
    sigma_true: float
    rng_seed: int
    n_test_users: int = 0
    n_personalities: int | None = None  # default: n_users // 10, at least 2

    def __post_init__(self):
        if self.n_users < 1 or self.n_titles < 1:
            raise ValueError("need at least one user and one title")
        if not 1 <= self.ratings_per_user <= self.n_titles:
            raise ValueError("ratings_per_user must be in 1..n_titles")
        if not self.sigma_true > 0:
            raise ValueError("sigma_true must be positive")
        if self.n_test_users < 0:
            raise ValueError("n_test_users must be nonnegative")
        if self.n_personalities is not None and self.n_personalities < 1:
            raise ValueError("n_personalities must be positive")

    @property
    def pool_size(self) -> int:
        if self.n_personalities is not None:
            return self.n_personalities
        return max(2, self.n_users // 10)


@dataclass(frozen=True)
class SyntheticUser:
    """A generated test user: observed profile plus full ground truth."""

    profile: UserProfile
    true_ratings: np.ndarray  # length n_titles, scale values


def generate_synthetic(spec: SyntheticSpec) -> tuple[RatingsMatrix, list[SyntheticUser]]:
    """Deterministic synthetic train matrix and test users."""
    rng = np.random.default_rng(spec.rng_seed)
    vals = spec.scale.array
    personalities = vals[
        rng.integers(0, len(vals), size=(spec.pool_size, spec.n_titles))
    ]

    def draw_users(count):
        pids = rng.integers(0, spec.pool_size, size=count)
        keys = rng.random((count, spec.n_titles))
        titles = np.argsort(keys, axis=1)[:, : spec.ratings_per_user]
        noise = rng.normal(0.0, spec.sigma_true, size=titles.shape)
        rows = []
        for u in range(count):
            chosen = np.sort(titles[u])
            true_vals = personalities[pids[u], chosen]
            reported = spec.scale.snap(true_vals + noise[u, np.argsort(titles[u])])
            rows.append((pids[u], dict(zip(chosen.tolist(), reported.tolist()))))
        return rows

    train_rows = draw_users(spec.n_users)
    entries = [
        (i, j, v) for i, (_, row) in enumerate(train_rows) for j, v in sorted(row.items())
    ]
    user_ids = [f"u{i:05d}" for i in range(spec.n_users)]
    title_ids = [f"i{j:05d}" for j in range(spec.n_titles)]
    train = RatingsMatrix(
        spec.n_users, spec.n_titles, entries, spec.scale,
        user_ids=user_ids, title_ids=title_ids,
    )

    test = [
        SyntheticUser(UserProfile(row), personalities[pid].copy())
        for pid, row in draw_users(spec.n_test_users)
    ]
    return train, test
