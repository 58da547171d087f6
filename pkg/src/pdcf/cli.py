"""Command-line front end.

Subcommands: evaluate, predict, elicit, prune, gen-data.  Every run writes
its fully resolved configuration (defaults and seeds included) next to its
results, and reruns with the same configuration produce byte-identical
files regardless of --jobs.

Failures exit nonzero with a single machine-parseable line on stderr:
``error: <category>: <message>`` with category usage, data, or io.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import baselines, ingest, personality, voi
from .evaluation import (
    ALGORITHM_PD,
    ALGORITHMS,
    EvaluationReport,
    Protocol,
    mad,
    run_evaluation,
    split_train_test,
)
from .ingest import SymbolTable, format_rating
from .personality import PDParams
from .ratings import NO_RATING, RatingScale, RatingsMatrix, UserProfile


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_scale(text: str) -> RatingScale:
    try:
        return RatingScale(float(t) for t in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --scale {text!r}: {exc}") from None


def _add_common(parser, ratings_required=True):
    parser.add_argument("--ratings", help="ratings CSV (user_id,item_id,rating)",
                        required=ratings_required)
    parser.add_argument("--scale", default="0,1,2,3,4,5",
                        help="comma-separated allowed rating values")
    parser.add_argument("--sigma", type=float, default=2.5,
                        help="rating-noise standard deviation")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="pdcf_out", help="output directory")
    parser.add_argument("--jobs", type=int, default=0,
                        help="worker count; 0 means all cores")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pdcf", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="score algorithms under withholding protocols")
    _add_common(p, ratings_required=False)
    p.add_argument("--train", help="pre-split training ratings CSV")
    p.add_argument("--test", help="pre-split test ratings CSV")
    p.add_argument("--train-fraction", type=float, default=0.5,
                   help="training share when splitting --ratings")
    p.add_argument("--algorithms", default="pd,correlation,vector-similarity")
    p.add_argument("--protocols", default="allbut1,given10,given5,given2")
    p.add_argument("--permutations", type=int, default=100_000)
    p.add_argument("--extreme", action="store_true",
                   help="also score and test the extreme-ratings subset")
    p.add_argument("--sigma-from-data", action="store_true",
                   help="use the training ratings' standard deviation as sigma")

    p = sub.add_parser("predict", help="predict one user's unrated titles")
    _add_common(p)
    p.add_argument("--active", required=True, help="profile CSV (item_id,rating)")
    p.add_argument("--algorithm", default=ALGORITHM_PD, choices=list(ALGORITHMS))

    p = sub.add_parser("elicit", help="greedy value-ordered rating elicitation")
    _add_common(p)
    p.add_argument("--answers", required=True,
                   help="held-out user's full ratings, profile CSV")
    p.add_argument("--active", help="initial profile CSV (default: empty)")
    p.add_argument("--budget", type=int, default=5, help="maximum queries")
    p.add_argument("--cost-per-query", type=float, default=0.0)
    p.add_argument("--gain-to-benefit", type=float, default=1.0)

    p = sub.add_parser("prune", help="drop low-value titles or users")
    _add_common(p)
    p.add_argument("--target", default="titles", choices=["titles", "users"])
    p.add_argument("--keep", type=float, default=0.8, help="fraction kept")

    p = sub.add_parser("gen-data", help="write a synthetic train/test benchmark")
    _add_common(p, ratings_required=False)
    p.add_argument("--users", type=int, default=500)
    p.add_argument("--test-users", type=int, default=200)
    p.add_argument("--titles", type=int, default=100)
    p.add_argument("--ratings-per-user", type=int, default=40)
    p.add_argument("--sigma-true", type=float, default=1.0)
    p.add_argument("--personalities", type=int, default=0,
                   help="personality pool size; 0 means users // 10")
    return parser


def _jobs(args) -> int:
    return args.jobs if args.jobs > 0 else (os.cpu_count() or 1)


def _write_config(args, out_dir: str, **resolved) -> None:
    """Dump the fully resolved run configuration.

    --jobs and --out are execution placement, not experiment definition,
    and never change results; they are left out so runs that differ only
    in those produce identical files.
    """
    config = {k: v for k, v in vars(args).items() if k not in ("jobs", "out")}
    config.update(resolved)
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_profile(path, scale, title_table) -> UserProfile:
    profile, unknown = ingest.load_profile_csv(path, scale, title_table)
    if unknown:
        raise ValueError(
            f"{path}: unknown items: {','.join(sorted(set(unknown)))}"
        )
    return profile


def _matrix_tables(matrix: RatingsMatrix) -> SymbolTable:
    table = SymbolTable()
    for name in matrix.title_ids or [str(j) for j in range(matrix.n_titles)]:
        table.intern(name)
    return table


def cmd_evaluate(args) -> int:
    scale = _parse_scale(args.scale)
    algorithms = [a for a in args.algorithms.split(",") if a]
    if not algorithms:
        raise UsageError("empty algorithm list")
    for a in algorithms:
        if a not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {a!r} (choose from {', '.join(ALGORITHMS)})")
    try:
        protocols = [Protocol.parse(p) for p in args.protocols.split(",") if p]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not protocols:
        raise UsageError("empty protocol list")

    if args.train and args.test:
        users_train, users_test, titles = SymbolTable(), SymbolTable(), SymbolTable()
        train_entries = ingest.read_ratings_csv(args.train, scale, users_train, titles)
        test_entries = ingest.read_ratings_csv(args.test, scale, users_test, titles)
        train = RatingsMatrix(
            len(users_train), len(titles),
            [(i, j, v) for (i, j), v in train_entries.items()],
            scale, user_ids=users_train.names, title_ids=titles.names,
        )
        by_user: dict[int, dict[int, float]] = {}
        for (i, j), v in test_entries.items():
            by_user.setdefault(i, {})[j] = v
        test_users = [UserProfile(by_user.get(i, {})) for i in range(len(users_test))]
    elif args.ratings and not (args.train or args.test):
        matrix = ingest.load_ratings_csv(args.ratings, scale)
        train, test_users = split_train_test(matrix, args.train_fraction, args.seed)
    else:
        raise UsageError("pass either --ratings or both --train and --test")

    sigma = personality.data_sigma(train) if args.sigma_from_data else args.sigma
    params = PDParams(sigma)
    report = run_evaluation(
        train, test_users, algorithms, protocols, params,
        seed=args.seed, permutations=args.permutations,
        extreme=args.extreme, jobs=_jobs(args),
    )
    os.makedirs(args.out, exist_ok=True)
    _write_config(args, args.out, resolved_sigma=sigma)
    with open(os.path.join(args.out, "report.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(report.csv_rows()) + "\n")
    with open(os.path.join(args.out, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.text_tables(protocols))
    print(f"evaluate: wrote {args.out}/report.txt and report.csv")
    return 0


def cmd_predict(args) -> int:
    scale = _parse_scale(args.scale)
    matrix = ingest.load_ratings_csv(args.ratings, scale)
    params = PDParams(args.sigma)
    active = _load_profile(args.active, scale, _matrix_tables(matrix))

    os.makedirs(args.out, exist_ok=True)
    _write_config(args, args.out)
    out_path = os.path.join(args.out, "predictions.csv")
    targets = active.unrated_titles(matrix.n_titles)
    with open(out_path, "w", encoding="utf-8") as fh:
        if args.algorithm == ALGORITHM_PD:
            prob_cols = ",".join(f"prob_{format_rating(v)}" for v in scale.values)
            fh.write(f"item_id,prediction,{prob_cols}\n")
            if targets:
                post = personality.posterior(active, matrix, params)
                table_exp = np.exp(personality.log_likelihood_table(scale, params))
                for j in targets:
                    dist = personality.predictive_from_posterior(
                        j, post, matrix, params, table_exp
                    )
                    pred = personality.most_probable_rating(dist)
                    probs = ",".join(repr(float(p)) for p in dist.probs)
                    fh.write(f"{matrix.title_label(j)},{format_rating(pred)},{probs}\n")
        else:
            fh.write("item_id,prediction\n")
            if targets:
                weights = baselines.similarity_weights(args.algorithm, active, matrix)
                for j in targets:
                    pred = baselines.baseline_predict(
                        args.algorithm, j, active, matrix, weights
                    )
                    fh.write(f"{matrix.title_label(j)},{repr(pred)}\n")
    if targets:
        print(f"predict: wrote {len(targets)} predictions to {out_path}")
    else:
        print("predict: the profile rates every title; nothing to predict")
    return 0


def cmd_elicit(args) -> int:
    scale = _parse_scale(args.scale)
    matrix = ingest.load_ratings_csv(args.ratings, scale)
    params = PDParams(args.sigma)
    titles = _matrix_tables(matrix)
    answers = _load_profile(args.answers, scale, titles)
    active = (
        _load_profile(args.active, scale, titles) if args.active else UserProfile({})
    )

    cost = voi.CostModel.constant(args.cost_per_query, args.gain_to_benefit)
    final, transcript = voi.elicit(
        active, matrix, params, cost,
        lambda j: answers.ratings.get(j, NO_RATING),
        max_queries=args.budget,
    )

    withheld = sorted(set(answers.ratings) - set(final.ratings))

    def profile_mad(profile):
        if not withheld:
            return None
        post = personality.posterior(profile, matrix, params)
        table_exp = np.exp(personality.log_likelihood_table(scale, params))
        devs = [
            abs(
                personality.predict_from_posterior(j, post, matrix, params, table_exp)
                - answers.ratings[j]
            )
            for j in withheld
        ]
        return sum(devs) / len(devs)

    before = profile_mad(active)
    after = profile_mad(final)

    os.makedirs(args.out, exist_ok=True)
    _write_config(args, args.out)
    with open(os.path.join(args.out, "transcript.csv"), "w", encoding="utf-8") as fh:
        fh.write(transcript.serialize(matrix.title_label))
    with open(os.path.join(args.out, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"queries asked: {len(transcript.steps)}\n")
        fh.write(f"stop reason: {transcript.stop_reason}\n")
        fh.write(f"withheld targets: {len(withheld)}\n")
        fh.write(f"mad before: {'n/a' if before is None else repr(before)}\n")
        fh.write(f"mad after: {'n/a' if after is None else repr(after)}\n")
        cum = transcript.steps[-1].cumulative_cost if transcript.steps else 0.0
        fh.write(f"cumulative cost: {repr(cum)}\n")
        fh.write(f"seed: {args.seed}\nsigma: {args.sigma}\nbudget: {args.budget}\n")
    print(
        f"elicit: {len(transcript.steps)} queries ({transcript.stop_reason}); "
        f"wrote {args.out}/transcript.csv"
    )
    return 0


def cmd_prune(args) -> int:
    scale = _parse_scale(args.scale)
    matrix = ingest.load_ratings_csv(args.ratings, scale)
    params = PDParams(args.sigma)
    result = voi.prune(matrix, params, args.target, args.keep, rng_seed=args.seed)

    os.makedirs(args.out, exist_ok=True)
    _write_config(args, args.out)
    ingest.write_ratings_csv(result.matrix, os.path.join(args.out, "pruned_ratings.csv"))
    kept = set(result.kept)
    label = matrix.title_label if args.target == "titles" else matrix.user_label
    id_col = "title_id" if args.target == "titles" else "user_id"
    with open(os.path.join(args.out, "scores.csv"), "w", encoding="utf-8") as fh:
        fh.write(f"{id_col},score,kept\n")
        for idx in range(len(result.scores)):
            fh.write(f"{label(idx)},{repr(float(result.scores[idx]))},{int(idx in kept)}\n")
    print(
        f"prune: kept {len(result.kept)} of {len(result.scores)} {args.target}; "
        f"wrote {args.out}/pruned_ratings.csv"
    )
    return 0


def cmd_gen_data(args) -> int:
    scale = _parse_scale(args.scale)
    try:
        spec = ingest.SyntheticSpec(
            n_users=args.users,
            n_titles=args.titles,
            ratings_per_user=args.ratings_per_user,
            scale=scale,
            sigma_true=args.sigma_true,
            rng_seed=args.seed,
            n_test_users=args.test_users,
            n_personalities=args.personalities or None,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    train, test = ingest.generate_synthetic(spec)

    os.makedirs(args.out, exist_ok=True)
    _write_config(args, args.out)
    ingest.write_ratings_csv(train, os.path.join(args.out, "train.csv"))
    with open(os.path.join(args.out, "test.csv"), "w", encoding="utf-8") as fh:
        fh.write(ingest.RATINGS_HEADER + "\n")
        for u, synth in enumerate(test):
            for j, v in synth.profile.items_sorted():
                fh.write(f"t{u:05d},i{j:05d},{format_rating(v)}\n")
    with open(os.path.join(args.out, "truth.csv"), "w", encoding="utf-8") as fh:
        fh.write("user_id,item_id,true_rating\n")
        for u, synth in enumerate(test):
            for j in range(spec.n_titles):
                fh.write(f"t{u:05d},i{j:05d},{format_rating(synth.true_ratings[j])}\n")
    print(
        f"gen-data: wrote {train.n_users} train users and {len(test)} test users "
        f"to {args.out}"
    )
    return 0


_COMMANDS = {
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "elicit": cmd_elicit,
    "prune": cmd_prune,
    "gen-data": cmd_gen_data,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
