"""Benchmark harness: withholding protocols, deviation scoring, extreme
subsets, and the randomization significance test.

Evaluation is paired by construction: every algorithm predicts the same
withheld targets from the same input profiles, so per-prediction deviation
lists line up across algorithms and can be pooled for significance testing.
All randomness is seeded; reports are bit-identical across reruns and
across worker counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import baselines, personality
from .personality import PDParams
from .ratings import RatingsMatrix, UserProfile, overall_mean

ALGORITHM_PD = "pd"
ALGORITHMS = (ALGORITHM_PD, baselines.CORRELATION, baselines.VECTOR_SIMILARITY)


@dataclass(frozen=True)
class Protocol:
    """A rule for splitting one test user's ratings into algorithm input
    and withheld prediction targets.

    kind "all_but_one" withholds a single rating; kind "given_k" keeps k
    ratings as input and withholds the rest.
    """

    kind: str
    k: int | None = None

    def __post_init__(self):
        if self.kind == "given_k":
            if self.k is None or self.k < 1:
                raise ValueError("given_k requires k >= 1")
        elif self.kind == "all_but_one":
            if self.k is not None:
                raise ValueError("all_but_one takes no k")
        else:
            raise ValueError(f"unknown protocol kind: {self.kind!r}")

    @classmethod
    def all_but_one(cls) -> "Protocol":
        return cls("all_but_one")

    @classmethod
    def given(cls, k: int) -> "Protocol":
        return cls("given_k", k)

    @classmethod
    def parse(cls, name: str) -> "Protocol":
        """Parse "allbut1" or "given<k>" (e.g. "given5")."""
        low = name.strip().lower()
        if low == "allbut1":
            return cls.all_but_one()
        if low.startswith("given"):
            try:
                return cls.given(int(low[len("given"):]))
            except ValueError:
                pass
        raise ValueError(f"unknown protocol name: {name!r}")

    @property
    def name(self) -> str:
        return "allbut1" if self.kind == "all_but_one" else f"given{self.k}"

    @property
    def display_name(self) -> str:
        return "All But 1" if self.kind == "all_but_one" else f"Given {self.k}"

    def seed_tag(self) -> int:
        return 0 if self.kind == "all_but_one" else self.k


def split_train_test(
    matrix: RatingsMatrix, fraction: float, rng_seed: int
) -> tuple[RatingsMatrix, list[UserProfile]]:
    """Seeded disjoint partition of users into a training matrix and a
    list of test profiles.

    ``fraction`` is the training share.  Test profiles keep their full
    rating sets; protocols split them later.  Title indices are shared
    between the two sides.
    """
    if matrix.n_ratings == 0:
        raise ValueError("no ratings")
    n = matrix.n_users
    n_train = int(round(fraction * n))
    if n_train < 1 or n_train >= n:
        raise ValueError(f"fraction {fraction} leaves an empty side for {n} users")
    rng = np.random.default_rng(rng_seed)
    order = rng.permutation(n)
    train_users = np.sort(order[:n_train])
    test_users = np.sort(order[n_train:])

    entries = []
    for new_i, old_i in enumerate(train_users):
        for j, v in sorted(matrix.user_ratings(old_i).items()):
            entries.append((new_i, j, v))
    user_ids = (
        [matrix.user_ids[i] for i in train_users] if matrix.user_ids else None
    )
    train = RatingsMatrix(
        n_train, matrix.n_titles, entries, matrix.scale,
        user_ids=user_ids, title_ids=matrix.title_ids,
    )
    test = [UserProfile(matrix.user_ratings(i)) for i in test_users]
    return train, test


def apply_protocol(
    user: UserProfile, protocol: Protocol, rng_seed
) -> tuple[UserProfile, dict[int, float]] | None:
    """Split one test user into (input profile, withheld targets), or
    None when the user has too few ratings to satisfy the protocol.

    The choice of which ratings to withhold is uniform and driven entirely
    by ``rng_seed`` (an int or a sequence of ints).
    """
    items = user.items_sorted()
    rng = np.random.default_rng(rng_seed)
    if protocol.kind == "all_but_one":
        if len(items) < 2:
            return None
        w = int(rng.integers(len(items)))
        withheld = dict([items[w]])
        given = dict(items[:w] + items[w + 1:])
    else:
        k = protocol.k
        if len(items) < k + 1:
            return None
        order = rng.permutation(len(items))
        keep = np.sort(order[:k])
        keep_set = set(int(i) for i in keep)
        given = dict(items[i] for i in sorted(keep_set))
        withheld = dict(items[i] for i in range(len(items)) if i not in keep_set)
    return UserProfile(given), withheld


@dataclass(frozen=True)
class DeviationRecord:
    """Per-prediction absolute deviations with provenance.

    Parallel arrays: test-user index, title index, |prediction - truth|,
    and the withheld true rating (needed for extreme-subset filtering).
    """

    users: np.ndarray
    titles: np.ndarray
    deviations: np.ndarray
    truths: np.ndarray

    @classmethod
    def from_lists(cls, users, titles, deviations, truths) -> "DeviationRecord":
        return cls(
            np.asarray(users, dtype=np.int64),
            np.asarray(titles, dtype=np.int64),
            np.asarray(deviations, dtype=np.float64),
            np.asarray(truths, dtype=np.float64),
        )

    @classmethod
    def concat(cls, records: list["DeviationRecord"]) -> "DeviationRecord":
        return cls(
            np.concatenate([r.users for r in records]) if records else np.empty(0, np.int64),
            np.concatenate([r.titles for r in records]) if records else np.empty(0, np.int64),
            np.concatenate([r.deviations for r in records]) if records else np.empty(0),
            np.concatenate([r.truths for r in records]) if records else np.empty(0),
        )

    def __len__(self) -> int:
        return len(self.deviations)


def mad(devs: DeviationRecord) -> float:
    """Mean absolute deviation over all predictions in the record."""
    if len(devs) == 0:
        raise ValueError("no predictions")
    return float(devs.deviations.mean())


def extreme_filter(devs: DeviationRecord, matrix: RatingsMatrix) -> DeviationRecord:
    """Keep only predictions whose withheld true rating lies strictly more
    than 0.5 below or above the matrix's overall mean rating."""
    rbar = overall_mean(matrix)
    keep = (devs.truths < rbar - 0.5) | (devs.truths > rbar + 0.5)
    return DeviationRecord(
        devs.users[keep], devs.titles[keep], devs.deviations[keep], devs.truths[keep]
    )


# ---------------------------------------------------------------------------
# randomization significance test
# ---------------------------------------------------------------------------

_N_CHUNKS = 64  # fixed so results never depend on the worker count


@njit(cache=True, nogil=True)
def _count_chunk(pool, n_take, n_perm, seed, d_obs, c1, c2):
    """Count permutations whose scaled mean-difference magnitude reaches
    d_obs.  Partial Fisher-Yates with a local splitmix64 state; no shared
    RNG, so chunks can run on any thread in any order."""
    arr = pool.copy()
    p = arr.shape[0]
    state = np.uint64(seed)
    cnt = 0
    for _ in range(n_perm):
        s = 0.0
        for t in range(n_take):
            state += np.uint64(0x9E3779B97F4A7C15)
            z = state
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z = z ^ (z >> np.uint64(31))
            r = t + np.int64((z >> np.uint64(11)) % np.uint64(p - t))
            tmp = arr[t]
            arr[t] = arr[r]
            arr[r] = tmp
            s += arr[t]
        if abs(s * c1 - c2) >= d_obs:
            cnt += 1
    return cnt


def randomization_test(
    devsA: DeviationRecord,
    devsB: DeviationRecord,
    permutations: int,
    rng_seed: int,
    jobs: int = 1,
) -> float:
    """Significance level of the mean-deviation difference between two
    algorithms' score lists.

    Pools both lists, repeatedly re-partitions the pool at random into the
    original sizes, and returns the fraction of permutations whose mean
    difference is at least as large in magnitude as the observed one
    (two-sided).  The comparison is done on the rational form
    |S * (nA + nB) - T * n| so integer-valued pools tie exactly.
    """
    if permutations < 1:
        raise ValueError("permutations must be >= 1")
    if len(devsA) == 0 or len(devsB) == 0:
        raise ValueError("no predictions")
    a = devsA.deviations
    b = devsB.deviations
    n_a, n_b = len(a), len(b)
    pool = np.concatenate([a, b])
    total = pool.sum()
    c1 = float(n_a + n_b)

    # sample whichever side is smaller; the statistic is symmetric
    if n_a <= n_b:
        n_take, s_obs = n_a, a.sum()
    else:
        n_take, s_obs = n_b, b.sum()
    c2 = total * n_take
    d_obs = abs(s_obs * c1 - c2)

    base, extra = divmod(permutations, _N_CHUNKS)
    sizes = [base + (1 if c < extra else 0) for c in range(_N_CHUNKS)]
    seeds = np.random.SeedSequence(rng_seed).generate_state(_N_CHUNKS, np.uint64)

    def run(c):
        if sizes[c] == 0:
            return 0
        return _count_chunk(pool, n_take, sizes[c], seeds[c], d_obs, c1, c2)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            counts = list(ex.map(run, range(_N_CHUNKS)))
    else:
        counts = [run(c) for c in range(_N_CHUNKS)]
    return sum(counts) / permutations


# ---------------------------------------------------------------------------
# full evaluation runs
# ---------------------------------------------------------------------------

@dataclass
class CellScores:
    """Scores for one (algorithm, protocol) cell of the report."""

    mad: float
    count: int
    extreme_mad: float | None = None
    extreme_count: int | None = None


@dataclass
class EvaluationReport:
    """Per-algorithm, per-protocol deviation scores plus pairwise
    significance levels and run provenance."""

    cells: dict[tuple[str, str], CellScores] = field(default_factory=dict)
    significance: dict[tuple[str, str, str, str], float] = field(default_factory=dict)
    dropped: dict[str, int] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def csv_rows(self) -> list[str]:
        """Machine-readable rows; see the header for the schema."""
        seed = self.meta.get("seed", "")
        rows = ["algorithm,protocol,subset,metric,value,count,seed"]
        for (algo, proto), cell in sorted(self.cells.items()):
            rows.append(
                f"{algo},{proto},all,mad,{_fmt(cell.mad)},{cell.count},{seed}"
            )
            if cell.extreme_mad is not None:
                rows.append(
                    f"{algo},{proto},extreme,mad,{_fmt(cell.extreme_mad)},"
                    f"{cell.extreme_count},{seed}"
                )
        perms = self.meta.get("permutations", "")
        for (a, b, proto, subset), level in sorted(self.significance.items()):
            rows.append(
                f"{a}_vs_{b},{proto},{subset},significance,{_fmt(level)},{perms},{seed}"
            )
        for proto, n_dropped in sorted(self.dropped.items()):
            rows.append(f"_protocol_,{proto},all,dropped_users,{n_dropped},"
                        f"{self.meta.get('n_test', '')},{seed}")
        return rows

    def text_tables(self, protocols: list[Protocol]) -> str:
        """Aligned plain-text score, extreme-score, and significance tables."""
        lines = []
        algos = sorted({a for a, _ in self.cells})
        algos.sort(key=lambda a: (a != ALGORITHM_PD, a))
        headers = [p.display_name for p in protocols]

        def table(title, value_of):
            lines.append(title)
            width = max(18, max((len(a) for a in algos), default=0) + 2)
            lines.append("  " + "Algorithm".ljust(width) + "  ".join(h.rjust(10) for h in headers))
            for a in algos:
                cells = []
                for p in protocols:
                    v = value_of(a, p.name)
                    cells.append(("-" if v is None else f"{v:.3f}").rjust(10))
                lines.append("  " + a.ljust(width) + "  ".join(cells))
            lines.append("")

        table(
            "Average absolute deviation (lower is better)",
            lambda a, p: self.cells[(a, p)].mad if (a, p) in self.cells else None,
        )
        if any(c.extreme_mad is not None for c in self.cells.values()):
            table(
                "Average absolute deviation, extreme ratings only",
                lambda a, p: self.cells[(a, p)].extreme_mad if (a, p) in self.cells else None,
            )
        if self.significance:
            lines.append("Significance levels (two-sided randomization test; "
                         "one-sided is half)")
            pairs = sorted({(a, b) for a, b, _, _ in self.significance})
            for a, b in pairs:
                for subset in ("all", "extreme"):
                    row = []
                    any_value = False
                    for p in protocols:
                        v = self.significance.get((a, b, p.name, subset))
                        any_value = any_value or v is not None
                        row.append(("-" if v is None else f"{v:.3g}").rjust(10))
                    if any_value:
                        label = f"{a} vs {b}" + (" (extreme)" if subset == "extreme" else "")
                        lines.append("  " + label.ljust(42) + "  ".join(row))
            lines.append("")
        lines.append("Run details")
        for key in sorted(self.meta):
            lines.append(f"  {key}: {self.meta[key]}")
        for proto, n_dropped in sorted(self.dropped.items()):
            lines.append(f"  dropped users ({proto}): {n_dropped}")
        lines.append("")
        return "\n".join(lines)


def _fmt(x: float) -> str:
    return repr(float(x))


def _predict_user(
    train: RatingsMatrix,
    algorithms: list[str],
    given: UserProfile,
    withheld: dict[int, float],
    params: PDParams,
) -> dict[str, list[tuple[int, float, float]]]:
    """Predictions for one test user: algorithm -> [(title, dev, truth)]."""
    results: dict[str, list[tuple[int, float, float]]] = {}
    targets = sorted(withheld.items())
    for algo in algorithms:
        out = []
        if algo == ALGORITHM_PD:
            post = personality.posterior(given, train, params)
            table_exp = np.exp(
                personality.log_likelihood_table(train.scale, params)
            )
            for j, truth in targets:
                pred = personality.predict_from_posterior(
                    j, post, train, params, table_exp
                )
                out.append((j, abs(pred - truth), truth))
        else:
            weights = baselines.similarity_weights(algo, given, train)
            for j, truth in targets:
                pred = baselines.baseline_predict(algo, j, given, train, weights)
                out.append((j, abs(pred - truth), truth))
        results[algo] = out
    return results


_CHUNK = 32  # users per parallel task; fixed so output ignores worker count


def _run_chunk(train, algorithms, protocol, params, seed, user_range):
    lo, _, profiles = user_range
    chunk = []
    for offset, profile in enumerate(profiles):
        u = lo + offset
        split = apply_protocol(profile, protocol, [seed, protocol.seed_tag(), u])
        if split is None:
            chunk.append(None)
            continue
        given, withheld = split
        chunk.append(_predict_user(train, algorithms, given, withheld, params))
    return chunk


def run_protocol(
    train: RatingsMatrix,
    test_users: list[UserProfile],
    algorithms: list[str],
    protocol: Protocol,
    params: PDParams,
    seed: int,
    jobs: int = 1,
) -> tuple[dict[str, DeviationRecord], int]:
    """Evaluate the given algorithms on one protocol.

    Returns per-algorithm deviation records (aligned across algorithms:
    same users, same titles, ascending) and the number of dropped users.
    Work is chunked in fixed blocks of users, so any worker count produces
    identical records.
    """
    for algo in algorithms:
        if algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm: {algo!r}")

    ranges = []
    for lo in range(0, len(test_users), _CHUNK):
        hi = min(lo + _CHUNK, len(test_users))
        ranges.append((lo, hi, test_users[lo:hi]))

    def work(r):
        return _run_chunk(train, algorithms, protocol, params, seed, r)

    if jobs > 1 and len(ranges) > 1:
        # Threads, not processes: the matrix is shared read-only and chunk
        # results are merged in order, so output ignores the worker count.
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(work, ranges))
    else:
        chunks = [work(r) for r in ranges]

    per_algo: dict[str, tuple[list, list, list, list]] = {
        a: ([], [], [], []) for a in algorithms
    }
    n_dropped = 0
    for (lo, _, _), chunk in zip(ranges, chunks):
        for offset, result in enumerate(chunk):
            if result is None:
                n_dropped += 1
                continue
            u = lo + offset
            for algo in algorithms:
                users, titles, devs, truths = per_algo[algo]
                for j, dev, truth in result[algo]:
                    users.append(u)
                    titles.append(j)
                    devs.append(dev)
                    truths.append(truth)
    records = {
        a: DeviationRecord.from_lists(*per_algo[a]) for a in algorithms
    }
    return records, n_dropped


def run_evaluation(
    train: RatingsMatrix,
    test_users: list[UserProfile],
    algorithms: list[str],
    protocols: list[Protocol],
    params: PDParams,
    seed: int,
    permutations: int = 100_000,
    extreme: bool = False,
    jobs: int = 1,
) -> EvaluationReport:
    """Full benchmark: every algorithm under every protocol, with pairwise
    randomization significance levels (and extreme-subset scores when
    requested)."""
    report = EvaluationReport()
    report.meta = {
        "seed": seed,
        "sigma": params.sigma,
        "permutations": permutations,
        "n_train_users": train.n_users,
        "n_test": len(test_users),
        "n_titles": train.n_titles,
        "algorithms": ",".join(algorithms),
        "protocols": ",".join(p.name for p in protocols),
    }
    for protocol in protocols:
        records, n_dropped = run_protocol(
            train, test_users, algorithms, protocol, params, seed, jobs
        )
        report.dropped[protocol.name] = n_dropped
        extremes = {}
        for algo in algorithms:
            rec = records[algo]
            cell = CellScores(mad=mad(rec), count=len(rec))
            if extreme:
                ext = extreme_filter(rec, train)
                extremes[algo] = ext
                cell.extreme_count = len(ext)
                cell.extreme_mad = mad(ext) if len(ext) else math.nan
            report.cells[(algo, protocol.name)] = cell
        if permutations >= 1:
            for ai in range(len(algorithms)):
                for bi in range(ai + 1, len(algorithms)):
                    a, b = algorithms[ai], algorithms[bi]
                    level = randomization_test(
                        records[a], records[b], permutations,
                        rng_seed=seed, jobs=jobs,
                    )
                    report.significance[(a, b, protocol.name, "all")] = level
                    if extreme and len(extremes[a]) and len(extremes[b]):
                        level = randomization_test(
                            extremes[a], extremes[b], permutations,
                            rng_seed=seed, jobs=jobs,
                        )
                        report.significance[(a, b, protocol.name, "extreme")] = level
    return report
