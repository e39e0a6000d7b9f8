"""``evobandit run|verify|compare`` command-line entry point."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from evobandit import __version__
from evobandit.config import ConfigError, RunSettings, parse_arm, resolve_settings, write_manifest
from evobandit.drivers import SCHEDULES, estimate_bayes_regret, run_trials
from evobandit.verify import run_checks

log = logging.getLogger("evobandit")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_VERIFY = 3


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _suffix(settings: RunSettings, M: int) -> str:
    return "" if len(settings.M_values) == 1 else f"_M{M}"


def cmd_run(settings: RunSettings, jobs: int = 1, single: bool = False) -> list[str]:
    """Run every configured population size and write the CSV outputs."""
    if single:
        settings = replace(settings, n_trials=1)
    out = Path(settings.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    regret_rows = []
    for config in settings.configs():
        log.info("running %s M=%d, %d trials", config.algorithm, config.M, settings.n_trials)
        est = estimate_bayes_regret(config, settings.n_trials, config.seed, jobs=jobs)
        for t, (m, se) in enumerate(zip(est.mean, est.stderr), start=1):
            regret_rows.append((t, config.M, repr(float(m)), repr(float(se))))

        fitness_name = f"fitness{_suffix(settings, config.M)}.csv"
        _write_csv(
            out / fitness_name,
            ["round", "trial", "mean_fitness"],
            (
                (t, k, repr(float(f)))
                for k, tr in enumerate(est.trajectories)
                for t, f in zip(tr.rounds, tr.mean_fitness)
            ),
        )
        written.append(fitness_name)

        if config.snapshot_every:
            snap_name = f"snapshots{_suffix(settings, config.M)}.csv"
            snaps = est.trajectories[0].snapshots
            _write_csv(
                out / snap_name,
                ["round", "member_index"] + [f"bit_{i}" for i in range(config.d)],
                ([t, m, *row.tolist()] for t, S in sorted(snaps.items()) for m, row in enumerate(S)),
            )
            written.append(snap_name)

    _write_csv(out / "regret.csv", ["round", "M", "mean_cum_regret_per_member", "stderr"], regret_rows)
    written.insert(0, "regret.csv")
    write_manifest(out / "manifest.json", settings, "run", written, __version__)
    return written


def compare_arms(settings: RunSettings, jobs: int = 1) -> dict[str, dict]:
    """Matched-seed trials for every arm; returns per-arm trajectories and summary."""
    if not settings.arms:
        raise ConfigError("compare needs an 'arms' list with a tsde arm and at least one basic-de arm")
    kinds = {a.algorithm for a in settings.arms}
    if kinds != {"tsde", "basic-de"}:
        raise ConfigError("compare needs at least one tsde arm and at least one basic-de arm")
    results = {}
    for arm in settings.arms:
        config = arm.apply(settings.configs()[0])
        trajs = run_trials(config, settings.n_trials, config.seed, jobs=jobs)
        evals = np.array([tr.evals_to_fraction(0.9) for tr in trajs])
        results[arm.label] = {
            "trajectories": trajs,
            "evals_to_90": evals,
            "median_evals_to_90": float(np.median(evals)),
            "reached": int(np.isfinite(evals).sum()),
        }
    return results


def cmd_compare(settings: RunSettings, jobs: int = 1) -> dict[str, dict]:
    results = compare_arms(settings, jobs=jobs)
    out = Path(settings.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "fitness-vs-evaluations.csv",
        ["arm", "trial", "round", "n_evals", "mean_fitness", "optimum"],
        (
            (label, k, t, int(n), repr(float(f)), repr(float(tr.optimum)))
            for label, res in results.items()
            for k, tr in enumerate(res["trajectories"])
            for t, n, f in zip(tr.rounds, tr.n_evals, tr.mean_fitness)
        ),
    )
    summary = [
        (label, res["median_evals_to_90"], res["reached"], settings.n_trials)
        for label, res in results.items()
    ]
    _write_csv(out / "summary.csv", ["arm", "median_evals_to_90", "trials_reached", "n_trials"], summary)
    width = max(len(s[0]) for s in summary)
    print(f"{'arm':<{width}}  {'median evals to 90%':>20}  reached")
    for label, med, reached, n in summary:
        shown = "never" if math.isinf(med) else f"{med:.0f}"
        print(f"{label:<{width}}  {shown:>20}  {reached}/{n}")
    write_manifest(
        out / "manifest.json", settings, "compare", ["fitness-vs-evaluations.csv", "summary.csv"], __version__
    )
    return results


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evobandit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"evobandit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--seed", type=int, help="master seed (else config, else $EVOBANDIT_SEED)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
        p.add_argument("--algorithm", choices=["tsde", "basic-de"])
        p.add_argument("--schedule", choices=SCHEDULES, help="basic-de mutation schedule")
        p.add_argument("--c", type=float, help="mutation schedule scale")
        p.add_argument("--out", help="output directory")

    run = sub.add_parser("run", help="estimate Bayesian regret curves")
    experiment_args(run)
    run.add_argument("--single", action="store_true", help="run one trial only")

    cmp_ = sub.add_parser("compare", help="TS-DE against basic-DE arms at matched seeds")
    experiment_args(cmp_)
    cmp_.add_argument("--single", action="store_true", help="run one trial per arm")

    ver = sub.add_parser("verify", help="run oracle and invariant self-checks")
    ver.add_argument("level", nargs="?", choices=["fast", "full"], default="fast")
    ver.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.command == "verify":
        return EXIT_OK if run_checks(args.level, seed=args.seed) else EXIT_VERIFY

    overrides = {
        "seed": args.seed,
        "algorithm": args.algorithm,
        "schedule": args.schedule,
        "c": args.c,
        "output_dir": args.out,
    }
    try:
        settings = resolve_settings(args.config, overrides)
        if args.command == "compare" and args.single:
            settings = replace(settings, n_trials=1)
        if args.command == "run":
            cmd_run(settings, jobs=args.jobs, single=args.single)
        else:
            cmd_compare(settings, jobs=args.jobs)
    except ConfigError as exc:
        print(f"evobandit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - top-level guard maps to exit code
        print(f"evobandit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
