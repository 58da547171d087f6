"""Rating scale, sparse ratings matrix, and user profiles.

Everything downstream (the personality model, the baselines, the harness)
works over these types.  A matrix is immutable once built and safe to share
across workers; absent entries mean "no rating", which is a distinguished
sentinel rather than a number inside the scale's range.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np


class _NoRating:
    """Sentinel for an absent rating. Unequal to every scale value."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NO_RATING"

    def __bool__(self):
        return False


NO_RATING = _NoRating()

# A rating is either a scale value or the NO_RATING sentinel.
Rating = float | _NoRating


@dataclass(frozen=True)
class RatingScale:
    """The finite ordered set of allowed rating values.

    Values must be strictly increasing and there must be at least two of
    them.  Scales are small (a handful of values), so membership checks go
    through a dict rather than a search.
    """

    values: tuple[float, ...]

    def __init__(self, values: Iterable[float]):
        vals = tuple(float(v) for v in values)
        if len(vals) < 2:
            raise ValueError("rating scale needs at least 2 values")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("rating scale values must be strictly increasing")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(vals)})
        object.__setattr__(self, "_array", np.asarray(vals, dtype=np.float64))

    @classmethod
    def integer(cls, lo: int, hi: int) -> "RatingScale":
        """Scale of consecutive integers lo..hi inclusive."""
        return cls(range(lo, hi + 1))

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, value) -> bool:
        return value in self._index

    def __iter__(self):
        return iter(self.values)

    @property
    def array(self) -> np.ndarray:
        return self._array

    @property
    def min(self) -> float:
        return self.values[0]

    @property
    def max(self) -> float:
        return self.values[-1]

    def index_of(self, value: float) -> int:
        try:
            return self._index[value]
        except KeyError:
            raise ValueError(f"value off scale: {value!r}") from None

    def snap(self, x):
        """Nearest scale value(s) to x; ties go to the lower value."""
        x = np.asarray(x, dtype=np.float64)
        vals = self._array
        idx = np.searchsorted(vals, x)
        lo = np.clip(idx - 1, 0, len(vals) - 1)
        hi = np.clip(idx, 0, len(vals) - 1)
        snapped = np.where(
            np.abs(x - vals[lo]) <= np.abs(x - vals[hi]), vals[lo], vals[hi]
        )
        return float(snapped) if snapped.ndim == 0 else snapped


@dataclass(frozen=True)
class UserProfile:
    """The active user's known ratings, keyed by title index.

    Titles absent from ``ratings`` form the unrated set; those are the
    prediction targets.
    """

    ratings: Mapping[int, float]

    def __post_init__(self):
        object.__setattr__(self, "ratings", dict(self.ratings))

    def __len__(self) -> int:
        return len(self.ratings)

    def items_sorted(self) -> list[tuple[int, float]]:
        return sorted(self.ratings.items())

    def unrated_titles(self, n_titles: int) -> list[int]:
        return [j for j in range(n_titles) if j not in self.ratings]

    def with_rating(self, title: int, value: float) -> "UserProfile":
        new = dict(self.ratings)
        new[title] = value
        return UserProfile(new)


class RatingsMatrix:
    """Sparse n_users x n_titles store of ratings bound to a scale.

    Entries are kept per-user (dict rows) and per-title (index/value column
    arrays) so both the personality model's column scans and per-user
    iteration are cheap.  Real data is overwhelmingly empty, so nothing is
    ever densified.

    Construction validates every entry; instances are immutable afterwards.
    """

    def __init__(
        self,
        n_users: int,
        n_titles: int,
        entries: Iterable[tuple[int, int, float]],
        scale: RatingScale,
        user_ids: list[str] | None = None,
        title_ids: list[str] | None = None,
    ):
        if n_users < 0 or n_titles < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        if user_ids is not None and len(user_ids) != n_users:
            raise ValueError("user_ids length must equal n_users")
        if title_ids is not None and len(title_ids) != n_titles:
            raise ValueError("title_ids length must equal n_titles")
        self.n_users = n_users
        self.n_titles = n_titles
        self.scale = scale
        self.user_ids = list(user_ids) if user_ids is not None else None
        self.title_ids = list(title_ids) if title_ids is not None else None

        rows: list[dict[int, float]] = [dict() for _ in range(n_users)]
        for i, j, v in entries:
            if not (0 <= i < n_users and 0 <= j < n_titles):
                raise ValueError(f"entry ({i}, {j}) out of range")
            v = float(v)
            if v not in scale:
                raise ValueError(f"value off scale: {v!r} at ({i}, {j})")
            rows[i][j] = v
        self._rows = rows

        # CSC-style columns: per title, ascending user indices, values, and
        # scale-index codes (for likelihood table lookups).
        col_users: list[list[int]] = [[] for _ in range(n_titles)]
        col_values: list[list[float]] = [[] for _ in range(n_titles)]
        for i in range(n_users):
            for j in sorted(rows[i]):
                col_users[j].append(i)
                col_values[j].append(rows[i][j])
        self._col_users = [np.asarray(u, dtype=np.int64) for u in col_users]
        self._col_values = [np.asarray(v, dtype=np.float64) for v in col_values]
        self._col_value_idx = [
            np.asarray([scale.index_of(v) for v in vals], dtype=np.int64)
            for vals in col_values
        ]
        self._n_ratings = sum(len(r) for r in rows)

        # per-user statistics used by the baselines
        means = np.full(n_users, np.nan)
        norms = np.zeros(n_users)
        for i, r in enumerate(rows):
            if r:
                vals = np.fromiter(r.values(), dtype=np.float64, count=len(r))
                means[i] = vals.mean()
                norms[i] = np.sqrt((vals * vals).sum())
        self._user_means = means
        self._user_norms = norms

    @property
    def n_ratings(self) -> int:
        return self._n_ratings

    def rating(self, i: int, j: int):
        """Rating of user i for title j, or NO_RATING."""
        if not (0 <= i < self.n_users and 0 <= j < self.n_titles):
            raise IndexError(f"index ({i}, {j}) out of range")
        return self._rows[i].get(j, NO_RATING)

    def user_ratings(self, i: int) -> dict[int, float]:
        """Copy of user i's ratings keyed by title index."""
        if not 0 <= i < self.n_users:
            raise IndexError(f"user index {i} out of range")
        return dict(self._rows[i])

    def user_profile(self, i: int) -> UserProfile:
        return UserProfile(self.user_ratings(i))

    def title_column(self, j: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(user indices, values, scale-index codes) of title j's raters."""
        if not 0 <= j < self.n_titles:
            raise IndexError(f"title index {j} out of range")
        return self._col_users[j], self._col_values[j], self._col_value_idx[j]

    def title_rater_count(self, j: int) -> int:
        return len(self._col_users[j])

    def user_rating_count(self, i: int) -> int:
        return len(self._rows[i])

    def iter_entries(self) -> Iterator[tuple[int, int, float]]:
        """All stored entries, ascending by (user, title)."""
        for i in range(self.n_users):
            for j in sorted(self._rows[i]):
                yield i, j, self._rows[i][j]

    def user_means(self) -> np.ndarray:
        """Per-user mean rating (nan for users with no ratings)."""
        return self._user_means

    def user_norms(self) -> np.ndarray:
        """Per-user Euclidean norm, absent entries treated as zero."""
        return self._user_norms

    def all_values(self) -> np.ndarray:
        """All stored rating values in (user, title) order."""
        out = np.empty(self._n_ratings, dtype=np.float64)
        k = 0
        for i in range(self.n_users):
            for j in sorted(self._rows[i]):
                out[k] = self._rows[i][j]
                k += 1
        return out

    def user_label(self, i: int) -> str:
        return self.user_ids[i] if self.user_ids is not None else str(i)

    def title_label(self, j: int) -> str:
        return self.title_ids[j] if self.title_ids is not None else str(j)

    def __repr__(self):
        return (
            f"RatingsMatrix({self.n_users} users x {self.n_titles} titles, "
            f"{self._n_ratings} ratings)"
        )


def overall_mean(matrix: RatingsMatrix) -> float:
    """Mean of all stored ratings in the matrix."""
    if matrix.n_ratings == 0:
        raise ValueError("no ratings")
    total = 0.0
    for j in range(matrix.n_titles):
        total += matrix.title_column(j)[1].sum()
    return total / matrix.n_ratings


def user_mean(matrix: RatingsMatrix, i: int) -> float:
    """Mean of user i's stored ratings."""
    ratings = matrix.user_ratings(i)
    if not ratings:
        raise ValueError("empty user")
    return sum(ratings.values()) / len(ratings)
