"""Command-line interface.

Exit codes (stable):

    0   success (prove: refuted; check: proof replays)
    1   check: proof does not replay
    2   usage error
    3   unreadable or malformed input
    4   input uses equality (out of scope)
    10  prove: saturated (the conjecture does not follow)
    11  prove: resource limit reached
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_EQUALITY = 4
EXIT_SATURATED = 10
EXIT_RESOURCE_OUT = 11

DETERMINISTIC_SEED = 0


def _queue_schedule(text: str):
    from herprover.saturation import QueueSchedule

    try:
        age, weight, learned = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("queue ratio must look like AGE:WEIGHT:LEARNED, e.g. 1:3:9")
    if text == "1:3:9":
        return QueueSchedule()
    return QueueSchedule.from_ratio(age, weight, learned)


def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _load(path, tptp_dir=None):
    from herprover.tptp import EqualityError, TPTPError, load_problem

    try:
        return load_problem(path, tptp_dir), None
    except EqualityError as e:
        return None, _fail(f"equality is out of scope: {e}", EXIT_EQUALITY)
    except (TPTPError, OSError) as e:
        return None, _fail(str(e), EXIT_INPUT)


def cmd_prove(args) -> int:
    from herprover.saturation import (
        REFUTED, SATURATED, SearchLimits, extract_proof, format_proof, search,
    )

    problem, err = _load(args.problem, args.tptp_dir)
    if problem is None:
        return err
    if not problem.input_clauses:
        return _fail("problem has no clauses", EXIT_INPUT)
    scorer = None
    if args.snapshot:
        from herprover.scorer import SnapshotError, SnapshotScorer, load_snapshot

        try:
            snap = load_snapshot(Path(args.snapshot).read_bytes())
        except (SnapshotError, OSError) as e:
            return _fail(f"cannot load snapshot: {e}", EXIT_INPUT)
        scorer = SnapshotScorer(snap, problem)
    if args.deterministic:
        from herprover.saturation import QueueSchedule

        schedule = QueueSchedule()
        import torch

        torch.manual_seed(DETERMINISTIC_SEED)
        torch.use_deterministic_algorithms(True)
    else:
        schedule = args.queue_ratio
    limits = SearchLimits(time_limit=args.time_limit, memory_cap=args.memory_cap, max_steps=args.max_steps)
    rec = search(problem, limits, scorer, schedule)
    c = rec.counters
    print(f"% problem: {problem.name}")
    print(f"% outcome: {rec.outcome}")
    print(f"% generated: {c['generated']} processed: {c['processed']} steps: {c['steps']}")
    if not args.deterministic:
        print(f"% seconds: {rec.elapsed:.3f}")
    if args.record_out:
        Path(args.record_out).write_text(rec.to_json())
    if rec.outcome == REFUTED:
        proof = extract_proof(rec)
        text = format_proof(proof, problem.symbols, [f"problem: {problem.name}", f"length: {proof.length}"])
        out = Path(args.proof_out) if args.proof_out else Path(f"{problem.name}.proof.p")
        out.write_text(text)
        print(f"% proof length: {proof.length} written to {out}")
        if not args.quiet:
            sys.stdout.write(text)
        return EXIT_OK
    if rec.outcome == SATURATED:
        return EXIT_SATURATED
    return EXIT_RESOURCE_OUT


def cmd_check(args) -> int:
    from herprover.saturation import parse_proof, replay_proof
    from herprover.tptp import TPTPError

    try:
        proof, _ = parse_proof(Path(args.proof).read_text(), args.proof)
    except (TPTPError, OSError, ValueError) as e:
        return _fail(str(e), EXIT_INPUT)
    ok = replay_proof(proof)
    print(f"{args.proof}: {'valid' if ok else 'INVALID'} ({proof.length} inference steps)")
    return EXIT_OK if ok else EXIT_INVALID


def cmd_export_examples(args) -> int:
    from herprover.hindsight import SamplerConfig, sample_examples, write_jsonl
    from herprover.saturation import AttemptRecord

    try:
        rec = AttemptRecord.from_json(Path(args.record).read_text())
    except (OSError, ValueError, KeyError) as e:
        return _fail(f"cannot read attempt record: {e}", EXIT_INPUT)
    elapsed = rec.elapsed if args.elapsed is None else args.elapsed
    rng = random.Random(args.seed)
    examples = sample_examples(rec, elapsed, SamplerConfig(args.rate), rng)
    if args.out:
        with open(args.out, "w") as fh:
            n = write_jsonl(examples, fh)
    else:
        n = write_jsonl(examples, sys.stdout)
    print(f"% {n} examples", file=sys.stderr)
    return EXIT_OK


def cmd_campaign(args) -> int:
    from herprover.orchestrator import CampaignConfig, run_campaign, campaign_stats

    cfg = CampaignConfig.load(args.config) if args.config else CampaignConfig()
    if args.actors is not None:
        cfg.actors = args.actors
    if args.learners is not None:
        cfg.learners = args.learners
    if args.baseline:
        cfg.scoring = False
    if args.seed is not None:
        cfg.seed = args.seed
    paths = sorted(Path(args.problem_dir).glob("*.p"))
    if not paths:
        return _fail(f"no *.p problems in {args.problem_dir}", EXIT_INPUT)
    problems = []
    for p in paths:
        problem, err = _load(p, args.tptp_dir)
        if problem is None:
            return err
        problems.append(problem)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=1))
    state = run_campaign(problems, cfg, args.wall_clock, out_dir=out)
    sys.stdout.write(campaign_stats(state))
    print(f"% proven {len(state.proven)}/{len(problems)} in {state.elapsed:.1f}s", file=sys.stderr)
    return EXIT_OK


def cmd_stats(args) -> int:
    from herprover.orchestrator import campaign_stats, load_state, survival_csv

    try:
        state = load_state(args.campaign_dir)
    except (OSError, ValueError, KeyError) as e:
        return _fail(f"cannot read campaign directory: {e}", EXIT_INPUT)
    sys.stdout.write(survival_csv(state) if args.survival else campaign_stats(state))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="herprover", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--tptp-dir", default=os.environ.get("TPTP"), help="TPTP root for include resolution (env TPTP)")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("prove", help="run one proof attempt")
    sp.add_argument("problem")
    sp.add_argument("--time-limit", type=float, default=3.0)
    sp.add_argument("--memory-cap", type=int, default=8 * 2**30, help="bytes")
    sp.add_argument("--max-steps", type=int, default=None)
    sp.add_argument("--snapshot", help="scorer snapshot file for the learned-cost queue")
    sp.add_argument("--queue-ratio", type=_queue_schedule, default=_queue_schedule("1:3:9"),
                    help="age:weight:learned picks per cycle (default 1:3:9)")
    sp.add_argument("--proof-out", help="proof file path (default <problem>.proof.p)")
    sp.add_argument("--record-out", help="write the full attempt record (JSON)")
    sp.add_argument("--deterministic", action="store_true", help="pin seeds and the fixed queue cycle")
    sp.add_argument("-q", "--quiet", action="store_true", help="do not echo the proof")
    sp.set_defaults(func=cmd_prove)

    sp = sub.add_parser("check", help="replay a proof file")
    sp.add_argument("proof")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("export-examples", help="hindsight examples from an attempt record as JSONL")
    sp.add_argument("record")
    sp.add_argument("--rate", type=float, default=64.0, help="target examples per second")
    sp.add_argument("--elapsed", type=float, default=None, help="override attempt duration (s)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_export_examples)

    sp = sub.add_parser("campaign", help="run an incremental learning campaign")
    sp.add_argument("problem_dir")
    sp.add_argument("--config", help="campaign config JSON")
    sp.add_argument("--wall-clock", type=float, default=1800.0, help="seconds")
    sp.add_argument("--out", default="campaign")
    sp.add_argument("--actors", type=int)
    sp.add_argument("--learners", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--baseline", action="store_true", help="disable the learned-cost queue")
    sp.set_defaults(func=cmd_campaign)

    sp = sub.add_parser("stats", help="per-conjecture CSV for a campaign directory")
    sp.add_argument("campaign_dir")
    sp.add_argument("--survival", action="store_true", help="first-proof events instead")
    sp.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(threadName)s %(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
