"""Command-line entry points: ``run`` a benchmark and ``eval`` (audit) a results file."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .agent import AgentConfig
from .backends import BACKEND_KINDS, load_fixture, make_backends
from .environment import load_environments
from .errors import VLNError
from .eval import aggregate, audit_results, EpisodeMetrics, load_episodes, read_results, run_benchmark

log = logging.getLogger("vlnloop")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vlnloop", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the agent over an episode set and score it")
    run.add_argument("--env", required=True, help="directory of environment JSON files")
    run.add_argument("--episodes", required=True, help="episodes JSON file")
    run.add_argument("--config", help="JSON file with agent settings")
    run.add_argument("--backend", choices=BACKEND_KINDS, default="heuristic")
    run.add_argument("--fixtures", help="scripted fixture file (required for --backend scripted)")
    run.add_argument("--out", default="results.jsonl", help="results file (JSON lines)")
    run.add_argument("--parallel", type=int, default=1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--max-steps", type=int)
    run.add_argument("--no-qai", action="store_true", help="skip question answering on candidates")
    run.add_argument("--no-distance", action="store_true", help="omit object distances")
    run.add_argument("--no-seg", action="store_true", help="bbox-center depth instead of masks")
    run.add_argument("--first-instruction-only", action="store_true")

    ev = sub.add_parser("eval", help="recompute metrics of a results file and report mismatches")
    ev.add_argument("results", help="results file written by 'run'")
    ev.add_argument("--env", required=True)
    ev.add_argument("--episodes", required=True)
    return parser


def _agent_config(args) -> tuple[AgentConfig, dict]:
    settings = json.loads(Path(args.config).read_text()) if args.config else {}
    extra = {k: settings.pop(k) for k in ("summarize",) if k in settings}
    known = {f.name for f in dataclasses.fields(AgentConfig)}
    unknown = set(settings) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if args.max_steps is not None:
        settings["max_steps"] = args.max_steps
    if args.no_qai:
        settings["qai_enabled"] = False
    if args.no_distance:
        settings["include_distances"] = False
    if args.no_seg:
        settings["use_segmentation"] = False
    return AgentConfig(**settings), extra


def cmd_run(args) -> int:
    if args.backend == "scripted" and not args.fixtures:
        print("error: --backend scripted requires --fixtures", file=sys.stderr)
        return 2
    try:
        cfg, extra = _agent_config(args)
        envs = load_environments(args.env)
        episodes = load_episodes(args.episodes)
        fixture = load_fixture(args.fixtures) if args.fixtures else None
        goals = {
            f"{ep.path_id}_{i}": (envs[ep.scan], ep.goal)
            for ep in episodes if ep.scan in envs
            for i in range(len(ep.instructions))
        }
        backends = make_backends(
            args.backend,
            fixture=fixture,
            seed=args.seed,
            goals=goals,
            report_distance=cfg.include_distances,
            use_segmentation=cfg.use_segmentation,
            summarize=extra.get("summarize", "none"),
        )
        summary, records = run_benchmark(
            envs, episodes, cfg, backends, args.out,
            parallel=args.parallel,
            first_instruction_only=args.first_instruction_only,
            run_info={"backend": args.backend, "seed": args.seed},
        )
    except (VLNError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    failed = sum(r["termination"] == "Error" for r in records)
    print(summary.table(cfg.label))
    print(f"{len(records)} episodes, {failed} errored, results in {args.out}")
    return 0


def cmd_eval(args) -> int:
    try:
        records, stored = read_results(args.results)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not records:
        print(f"error: {args.results} contains no episode records", file=sys.stderr)
        return 2
    try:
        envs = load_environments(args.env)
        episodes = load_episodes(args.episodes)
        problems = audit_results(envs, episodes, records)
    except (VLNError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in problems:
        print(p)
    print(f"{len(problems)} mismatches")
    label = (stored or {}).get("config", {}).get("label", "base")
    print(aggregate([EpisodeMetrics.from_dict(r["metrics"]) for r in records]).table(label))
    return 1 if problems else 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return cmd_run(args)
    return cmd_eval(args)


if __name__ == "__main__":
    sys.exit(main())
