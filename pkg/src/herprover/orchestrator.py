"""Single-machine incremental learning campaign.

A manager thread picks conjectures uniformly and asks each conjecture's
scheduler for the next time limit; actor threads run searches and turn every
attempt into hindsight examples; learner threads train on uniform samples
from a bounded example buffer and publish immutable snapshots.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import queue
import random
import threading
import time
from collections import deque
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from herprover.hindsight import SamplerConfig, sample_examples
from herprover.saturation import (
    REFUTED,
    QueueSchedule,
    SearchLimits,
    extract_proof,
    format_proof,
    replay_proof,
    search,
)
from herprover.scheduler import UBSState, next_time_limit, record_completion
from herprover.scorer import Learner, ScorerConfig, SnapshotScorer, TrainingError
from herprover.tptp import Problem

log = logging.getLogger(__name__)


class ExampleBuffer:
    """Bounded FIFO of examples; uniform sampling with replacement once filled."""

    def __init__(self, capacity: int, min_fill: int):
        if capacity <= 0 or min_fill <= 0:
            raise ValueError("capacity and min_fill must be positive")
        self.capacity = capacity
        self.min_fill = min(min_fill, capacity)
        self._items: deque = deque(maxlen=capacity)
        self._cond = threading.Condition()
        self.total_put = 0

    def __len__(self) -> int:
        return len(self._items)

    @property
    def ready(self) -> bool:
        return len(self._items) >= self.min_fill

    def put(self, examples) -> None:
        with self._cond:
            for ex in examples:
                self._items.append(ex)
                self.total_put += 1
            if self.ready:
                self._cond.notify_all()

    def sample(self, n: int, rng: random.Random, timeout: Optional[float] = 0.0):
        """Return ``n`` uniform draws, or None if the buffer is below min fill after ``timeout``."""
        with self._cond:
            if not self.ready and timeout:
                self._cond.wait_for(lambda: self.ready, timeout)
            if not self.ready:
                return None
            items = self._items
            k = len(items)
            return [items[rng.randrange(k)] for _ in range(n)]

    def snapshot(self) -> list:
        with self._cond:
            return list(self._items)


def buffer_put(buf: ExampleBuffer, examples) -> None:
    buf.put(examples)


def buffer_sample(buf: ExampleBuffer, n: int, rng: random.Random):
    return buf.sample(n, rng)


@dataclass
class CampaignConfig:
    actors: int = field(default_factory=lambda: os.cpu_count() or 1)
    learners: int = 1
    memory_cap: int = 8 * 2**30
    warmup_updates: int = 1000
    seed: int = 0
    scoring: bool = True
    examples_per_second: float = 64.0
    buffer_capacity: int = 200_000
    k_max: int = 10
    base_budget: float = 3.0
    task_queue_size: int = 0  # 0 -> 2 * actors
    publish_every: int = 50
    clock: str = "thread"
    queue_pattern: Optional[List[str]] = None
    scorer: ScorerConfig = field(default_factory=ScorerConfig)

    def __post_init__(self):
        if self.actors < 1 or self.learners < 1:
            raise ValueError("actor and learner counts must be at least 1")
        if isinstance(self.scorer, dict):
            self.scorer = ScorerConfig.from_dict(self.scorer)

    @property
    def schedule(self) -> QueueSchedule:
        return QueueSchedule(tuple(self.queue_pattern)) if self.queue_pattern else QueueSchedule()

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown campaign config keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "CampaignConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class ProofEvent:
    conjecture: str
    time: float
    length: int
    generated: int
    attempt_seconds: float
    level: int
    path: Optional[str] = None


@dataclass
class ConjectureStats:
    attempts: int = 0
    generated: int = 0
    seconds: float = 0.0
    first_proof_time: Optional[float] = None
    shortest: Optional[int] = None


@dataclass
class CampaignState:
    schedulers: Dict[str, UBSState] = field(default_factory=dict)
    proofs: List[ProofEvent] = field(default_factory=list)
    stats: Dict[str, ConjectureStats] = field(default_factory=dict)
    counters: Dict[str, int] = field(default_factory=lambda: {
        "tasks": 0,
        "attempts": 0,
        "examples": 0,
        "updates": 0,
        "scored_attempts": 0,
        "scored_attempts_in_warmup": 0,
        "actor_errors": 0,
        "replay_failures": 0,
    })
    elapsed: float = 0.0

    @property
    def proven(self) -> List[str]:
        return [k for k, s in self.stats.items() if s.first_proof_time is not None]


class Campaign:
    """Runs the manager, actor and learner threads for one campaign."""

    def __init__(
        self,
        problems: Sequence[Problem],
        cfg: CampaignConfig,
        out_dir: Optional[Path] = None,
        record_tap: Optional[Callable] = None,
    ):
        if not problems:
            raise ValueError("no problems")
        names = [p.name for p in problems]
        if len(set(names)) != len(names):
            raise ValueError("problem names must be unique")
        self.problems = {p.name: p for p in problems}
        self.names = names
        self.cfg = cfg
        self.out_dir = Path(out_dir) if out_dir else None
        self.record_tap = record_tap
        self.state = CampaignState()
        for name in names:
            self.state.schedulers[name] = UBSState(name, cfg.k_max, cfg.base_budget)
            self.state.stats[name] = ConjectureStats()
        self.buffer = ExampleBuffer(cfg.buffer_capacity, cfg.scorer.min_fill)
        qsize = cfg.task_queue_size or 2 * cfg.actors
        self.tasks: queue.Queue = queue.Queue(maxsize=qsize)
        self.learners = [
            Learner(cfg.scorer, seed=cfg.seed * 1000 + i, warmup_updates=cfg.warmup_updates)
            for i in range(cfg.learners)
        ]
        self.snapshots = [None] * cfg.learners
        self.lock = threading.Lock()
        self.stop = threading.Event()
        self._proof_files: Dict[str, int] = {}
        self.start_time = 0.0
        self.deadline = 0.0
        if self.out_dir:
            (self.out_dir / "proofs").mkdir(parents=True, exist_ok=True)

    # ---- manager
    def all_proven(self) -> bool:
        with self.lock:
            return len(self.state.proven) == len(self.names)

    def manager(self) -> None:
        rng = random.Random(self.cfg.seed)
        while not self.stop.is_set():
            if self.all_proven() or time.monotonic() >= self.deadline:
                self.stop.set()
                break
            name = rng.choice(self.names)
            with self.lock:
                task = next_time_limit(self.state.schedulers[name])
                self.state.counters["tasks"] += 1
            while not self.stop.is_set():
                try:
                    self.tasks.put(task, timeout=0.2)
                    break
                except queue.Full:
                    if time.monotonic() >= self.deadline or self.all_proven():
                        self.stop.set()

    # ---- actors
    def actor(self, index: int) -> None:
        rng = random.Random(self.cfg.seed * 7919 + index)
        sampler = SamplerConfig(self.cfg.examples_per_second)
        last = time.monotonic()
        while not self.stop.is_set():
            try:
                task = self.tasks.get(timeout=0.2)
            except queue.Empty:
                continue
            try:
                self.attempt(task, rng, sampler, last)
            except Exception:
                log.exception("actor %d failed on %s; recycling task", index, task.conjecture)
                with self.lock:
                    self.state.counters["actor_errors"] += 1
                try:
                    self.tasks.put_nowait(task)
                except queue.Full:
                    pass
            last = time.monotonic()

    def attempt(self, task, rng: random.Random, sampler: SamplerConfig, last: float) -> None:
        problem = self.problems[task.conjecture]
        li = rng.randrange(len(self.learners))
        snapshot = self.snapshots[li]
        scorer = None
        if self.cfg.scoring and snapshot is not None and not snapshot.warming_up:
            scorer = SnapshotScorer(snapshot, problem)
        remaining = self.deadline - time.monotonic()
        if remaining <= 0:
            return
        limit = task.time_limit
        if self.cfg.clock == "wall":
            limit = min(limit, remaining)
        limits = SearchLimits(time_limit=limit, memory_cap=self.cfg.memory_cap, clock=self.cfg.clock)
        rec = search(problem, limits, scorer, self.cfg.schedule, interrupt=self.stop)
        found = time.monotonic() - self.start_time
        examples = []
        if self.cfg.scoring or self.record_tap is not None:
            examples = sample_examples(rec, time.monotonic() - last, sampler, rng)
        if self.cfg.scoring:
            self.buffer.put(examples)
        if self.record_tap is not None:
            self.record_tap(rec, examples)
        event = None
        if rec.outcome == REFUTED:
            proof = extract_proof(rec)
            ok = replay_proof(proof)
            if ok:
                event = ProofEvent(task.conjecture, found, proof.length, rec.counters["generated"],
                                   rec.elapsed, task.level)
                if self.out_dir:
                    event.path = self.write_proof(task, proof, problem, event)
        with self.lock:
            st = self.state.stats[task.conjecture]
            st.attempts += 1
            st.generated += rec.counters["generated"]
            st.seconds += rec.elapsed
            c = self.state.counters
            c["attempts"] += 1
            c["examples"] += len(examples)
            if scorer is not None:
                c["scored_attempts"] += 1
                if snapshot.warming_up:
                    c["scored_attempts_in_warmup"] += 1
            if rec.outcome == REFUTED and event is None:
                c["replay_failures"] += 1
            if event is not None:
                self.state.proofs.append(event)
                if st.first_proof_time is None:
                    st.first_proof_time = event.time
                if st.shortest is None or event.length < st.shortest:
                    st.shortest = event.length
            record_completion(self.state.schedulers[task.conjecture], task, min(rec.elapsed, task.time_limit))

    def write_proof(self, task, proof, problem, event) -> str:
        # the index is reserved under the lock so concurrent proofs never share a file
        with self.lock:
            n = self._proof_files.get(task.conjecture, 0)
            self._proof_files[task.conjecture] = n + 1
        path = self.out_dir / "proofs" / f"{task.conjecture}.{n:04d}.p"
        header = [
            f"problem: {problem.name}",
            "outcome: refuted",
            f"length: {proof.length}",
            f"found_at: {event.time:.3f}",
        ]
        path.write_text(format_proof(proof, problem.symbols, header))
        return str(path)

    # ---- learners
    def learner(self, index: int) -> None:
        state = self.learners[index]
        rng = random.Random(self.cfg.seed * 104729 + index)
        bs = self.cfg.scorer.batch_size
        self.snapshots[index] = state.publish()
        while not self.stop.is_set():
            batch = self.buffer.sample(bs, rng, timeout=0.5)
            if batch is None:
                continue
            try:
                state.train_step(batch)
            except TrainingError:
                log.exception("learner %d skipped a batch", index)
                continue
            with self.lock:
                self.state.counters["updates"] += 1
            if state.updates % self.cfg.publish_every == 0 or state.updates == state.warmup_updates:
                self.snapshots[index] = state.publish()

    # ---- driver
    def run(self, wall_clock_limit: float) -> CampaignState:
        self.start_time = time.monotonic()
        self.deadline = self.start_time + wall_clock_limit
        threads = [threading.Thread(target=self.manager, name="manager", daemon=True)]
        threads += [threading.Thread(target=self.actor, args=(i,), name=f"actor-{i}", daemon=True)
                    for i in range(self.cfg.actors)]
        if self.cfg.scoring:
            threads += [threading.Thread(target=self.learner, args=(i,), name=f"learner-{i}", daemon=True)
                        for i in range(self.cfg.learners)]
        for t in threads:
            t.start()
        try:
            while not self.stop.is_set():
                self.stop.wait(0.2)
                if time.monotonic() >= self.deadline:
                    self.stop.set()
        finally:
            self.stop.set()
            for t in threads:
                t.join()
            self.state.elapsed = time.monotonic() - self.start_time
            if self.out_dir:
                self.flush()
        return self.state

    def flush(self) -> None:
        out = self.out_dir
        with (out / "proof_log.jsonl").open("w") as fh:
            for e in self.state.proofs:
                fh.write(json.dumps(asdict(e)) + "\n")
        (out / "schedulers.json").write_text(
            json.dumps({k: v.to_dict() for k, v in self.state.schedulers.items()}, indent=1)
        )
        (out / "stats.csv").write_text(campaign_stats(self.state))
        (out / "survival.csv").write_text(survival_csv(self.state))
        (out / "counters.json").write_text(json.dumps(self.state.counters, indent=1))


def run_campaign(problems: Sequence[Problem], cfg: CampaignConfig, wall_clock_limit: float,
                 out_dir=None, record_tap=None) -> CampaignState:
    """Run an incremental learning campaign until all conjectures are proven or time runs out."""
    return Campaign(problems, cfg, out_dir, record_tap).run(wall_clock_limit)


STATS_FIELDS = ["conjecture", "solved", "first_proof_time", "shortest_proof_length",
                "attempts", "generated_clauses", "cumulative_seconds"]


def campaign_stats(state: CampaignState) -> str:
    """Per-conjecture CSV report."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STATS_FIELDS)
    for name, st in state.stats.items():
        solved = st.first_proof_time is not None
        w.writerow([
            name,
            int(solved),
            f"{st.first_proof_time:.3f}" if solved else "",
            st.shortest if solved else "",
            st.attempts,
            st.generated,
            f"{st.seconds:.3f}",
        ])
    return buf.getvalue()


def survival_csv(state: CampaignState) -> str:
    """One row per first-proof event: time, cumulative solved count, conjecture."""
    firsts = sorted((st.first_proof_time, name) for name, st in state.stats.items()
                    if st.first_proof_time is not None)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "solved", "conjecture"])
    for i, (t, name) in enumerate(firsts, start=1):
        w.writerow([f"{t:.3f}", i, name])
    return buf.getvalue()


def load_state(out_dir) -> CampaignState:
    """Rebuild a campaign state from a flushed campaign directory."""
    out = Path(out_dir)
    state = CampaignState()
    sched = json.loads((out / "schedulers.json").read_text())
    for name, d in sched.items():
        state.schedulers[name] = UBSState.from_dict(d)
        state.stats[name] = ConjectureStats()
    with (out / "stats.csv").open() as fh:
        for row in csv.DictReader(fh):
            st = state.stats.setdefault(row["conjecture"], ConjectureStats())
            st.attempts = int(row["attempts"])
            st.generated = int(row["generated_clauses"])
            st.seconds = float(row["cumulative_seconds"])
            if row["solved"] == "1":
                st.first_proof_time = float(row["first_proof_time"])
                st.shortest = int(row["shortest_proof_length"])
    log_path = out / "proof_log.jsonl"
    if log_path.exists():
        for line in log_path.read_text().splitlines():
            if line.strip():
                state.proofs.append(ProofEvent(**json.loads(line)))
    return state
