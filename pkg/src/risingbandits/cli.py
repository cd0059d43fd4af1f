"""Command line entry point: ``run``, ``rank`` and ``validate``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Optional, Sequence

from .harness import ExperimentConfig, Setting, build_curves, build_streams, rank_results, run_experiment, \
    write_results
from .payoff import ConfigurationError, check_rising


def _load(path: str, seed=None, reps=None, K=None, T=None) -> ExperimentConfig:
    cfg = ExperimentConfig.load(path)
    overrides = {k: v for k, v in {"seed": seed, "replications": reps, "K": K, "T": T}.items() if v is not None}
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def cmd_run(args) -> int:
    cfg = _load(args.config, args.seed, args.reps, args.K, args.T)
    out = args.out or cfg.output
    if out is None:
        out = str(Path(args.config).with_suffix("")) + "_results"
    result = run_experiment(cfg, workers=args.workers)
    path = write_results(result, out)
    for lab in result.labels:
        final = result.regret[lab][:, -1]
        print(f"{lab:>14s}  final regret {final.mean():12.3f}")
    print(f"wrote {path}")
    return 0


def cmd_rank(args) -> int:
    ranking = rank_results(args.dirs)
    order = sorted(range(len(ranking.policies)), key=lambda i: ranking.mean_rank[i])
    print(f"{'policy':>14s}  mean rank  95% half-width   ({len(args.dirs)} scenarios)")
    for i in order:
        print(f"{ranking.policies[i]:>14s}  {ranking.mean_rank[i]:9.3f}  {ranking.half_width[i]:9.3f}")
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args.config)
    cfg.resolved_policies()
    if cfg.setting is Setting.MODELSEL:
        stream, held_out = build_streams(cfg)
        extra = f", held-out {len(held_out)}" if held_out is not None else ""
        print(f"model selection: {len(stream)} examples, d={stream.d}{extra}; learners are not checked")
        return 0
    ok = True
    for i, curve in enumerate(build_curves(cfg)):
        rep = check_rising(curve, max(cfg.T, 2))
        ok &= rep.nondecreasing and rep.concave
        print(f"arm {i}: {curve.kind.value} {rep}")
    print("all arms rising" if ok else "assumption violations found")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="risingbandits", description="Rising bandit experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config and write CSV results")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--reps", type=int, help="number of replications")
    r.add_argument("--K", type=int, help="arm count (synthetic suite)")
    r.add_argument("--T", type=int, help="horizon")
    r.add_argument("--out", help="output directory")
    r.add_argument("--workers", type=int, default=1, help="parallel replication processes")
    r.set_defaults(func=cmd_run)

    k = sub.add_parser("rank", help="rank policies across result directories")
    k.add_argument("dirs", nargs="+")
    k.set_defaults(func=cmd_rank)

    v = sub.add_parser("validate", help="check a config and its payoff curves")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
