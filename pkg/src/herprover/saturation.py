"""Given-clause saturation with age, weight and learned-cost queues.

The loop follows the DISCOUNT variant: pick a candidate, stop on the empty
clause, drop tautologies, forward/backward subsumption against the active
set, then push factors and resolvents with every active clause.  Every
clause that enters the candidate set is recorded with its parents so failed
attempts can be mined for hindsight goals.
"""

from __future__ import annotations

import heapq
import json
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

from herprover import kernels
from herprover.calculus import factors, is_tautology, resolvents
from herprover.fol import Clause, SymbolTable, VarCounter, is_variant, rename_fresh, variant_key
from herprover.tptp import Problem, format_clause, parse_clause, parse_formulas, TPTPError

AGE = "age"
WEIGHT = "weight"
LEARNED = "learned"

REFUTED = "refuted"
SATURATED = "saturated"
RESOURCE_OUT = "resource_out"

INPUT = "input"
FACTOR = "factor"
RESOLVENT = "resolvent"

# rough per-node footprint of a stored term, used for the memory cap
BYTES_PER_NODE = 96
SCORE_BATCH = 320


CLOCKS = {"wall": time.monotonic, "thread": time.thread_time}


class PreconditionError(RuntimeError):
    pass


@dataclass(frozen=True)
class ClauseRecord:
    id: int
    clause: Clause
    parents: Tuple[int, ...]
    rule: str
    born_at_step: int
    role: str = "plain"


@dataclass
class SearchLimits:
    time_limit: float = 3.0
    memory_cap: int = 8 * 2**30
    max_steps: Optional[int] = None
    # "wall" measures elapsed real time; "thread" measures CPU time of the searching thread
    clock: str = "wall"

    def __post_init__(self):
        if self.clock not in CLOCKS:
            raise ValueError(f"unknown clock {self.clock!r}")
        if self.time_limit <= 0 or self.memory_cap <= 0:
            raise ValueError("search limits must be positive")
        if self.max_steps is not None and self.max_steps <= 0:
            raise ValueError("search limits must be positive")


DEFAULT_PATTERN = (
    LEARNED, LEARNED, LEARNED, WEIGHT,
    LEARNED, LEARNED, LEARNED, WEIGHT,
    LEARNED, LEARNED, LEARNED, WEIGHT,
    AGE,
)


@dataclass(frozen=True)
class QueueSchedule:
    """Repeating pick pattern; learned slots fall back to weight without a scorer."""

    pattern: Tuple[str, ...] = DEFAULT_PATTERN

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("queue pattern must be nonempty")
        bad = set(self.pattern) - {AGE, WEIGHT, LEARNED}
        if bad:
            raise ValueError(f"unknown queue names {sorted(bad)}")

    @classmethod
    def from_ratio(cls, age: int, weight: int, learned: int) -> "QueueSchedule":
        """Spread the picks evenly over a cycle of ``age + weight + learned`` slots."""
        total = age + weight + learned
        if total <= 0:
            raise ValueError("queue ratio must have a positive total")
        slots = []
        acc = {AGE: 0.0, WEIGHT: 0.0, LEARNED: 0.0}
        share = {AGE: age / total, WEIGHT: weight / total, LEARNED: learned / total}
        for _ in range(total):
            for k in acc:
                acc[k] += share[k]
            pick = max((LEARNED, WEIGHT, AGE), key=lambda k: acc[k])
            acc[pick] -= 1.0
            slots.append(pick)
        return cls(tuple(slots))

    def slot(self, step: int) -> str:
        return self.pattern[step % len(self.pattern)]


class Scorer(Protocol):
    def score_clauses(self, clauses: Sequence[Clause]) -> Sequence[float]:
        ...


@dataclass
class AttemptRecord:
    problem: Problem
    records: List[ClauseRecord]
    outcome: str
    empty_id: Optional[int] = None
    counters: Dict[str, int] = field(default_factory=dict)
    elapsed: float = 0.0
    num_inputs: int = 0

    def record(self, cid: int) -> ClauseRecord:
        if cid < 0 or cid >= len(self.records):
            raise KeyError(f"unknown clause id {cid}")
        return self.records[cid]

    @property
    def generated(self) -> List[ClauseRecord]:
        return [r for r in self.records if r.rule != INPUT]

    # ---- serialization (JSON with clauses in TPTP cnf syntax)
    def to_json(self) -> str:
        sy = self.problem.symbols
        data = {
            "format": "herprover-attempt/1",
            "problem": {
                "name": self.problem.name,
                "symbols": sy.to_list(),
                "axioms": [format_clause(c, sy) for c in self.problem.axioms],
                "negated_conjecture": [format_clause(c, sy) for c in self.problem.negated_conjecture],
            },
            "outcome": self.outcome,
            "empty_id": self.empty_id,
            "elapsed": self.elapsed,
            "counters": self.counters,
            "num_inputs": self.num_inputs,
            "records": [
                [r.id, r.rule, list(r.parents), r.born_at_step, r.role, format_clause(r.clause, sy)]
                for r in self.records
            ],
        }
        return json.dumps(data)

    @classmethod
    def from_json(cls, text: str) -> "AttemptRecord":
        data = json.loads(text)
        if data.get("format") != "herprover-attempt/1":
            raise ValueError("not an attempt record")
        p = data["problem"]
        symbols = SymbolTable.from_list(p["symbols"])
        problem = Problem(
            name=p["name"],
            symbols=symbols,
            axioms=[parse_clause(t, symbols) for t in p["axioms"]],
            negated_conjecture=[parse_clause(t, symbols) for t in p["negated_conjecture"]],
        )
        counter = VarCounter()
        records = []
        for rid, rule, parents, step, role, text in data["records"]:
            clause = rename_fresh(parse_clause(text, symbols), counter)
            records.append(ClauseRecord(rid, clause, tuple(parents), rule, step, role))
        return cls(
            problem=problem,
            records=records,
            outcome=data["outcome"],
            empty_id=data["empty_id"],
            counters=data["counters"],
            elapsed=data["elapsed"],
            num_inputs=data["num_inputs"],
        )


class _Search:
    def __init__(self, problem: Problem, limits: SearchLimits, scorer, schedule: QueueSchedule, batch_size: int,
                 interrupt=None):
        self.problem = problem
        self.interrupt = interrupt
        self.limits = limits
        self.scorer = scorer
        self.schedule = schedule
        self.batch_size = batch_size
        self.counter = VarCounter()
        self.records: List[ClauseRecord] = []
        self.seen: Dict[tuple, List[int]] = {}
        self.live = set()
        self.age_q: list = []
        self.weight_q: list = []
        self.learned_q: list = []
        self.pending: List[int] = []
        self.active: Dict[int, Clause] = {}
        # (sign, pred) -> active ids carrying such a literal
        self.lit_index: Dict[tuple, set] = {}
        self.step = 0
        self.memory = 0
        self.counters = {
            "generated": 0,
            "duplicates": 0,
            "processed": 0,
            "subsumed_forward": 0,
            "subsumed_backward": 0,
            "tautologies": 0,
            "scored": 0,
        }
        self.clock = CLOCKS[limits.clock]
        self.start = self.clock()
        self.deadline = self.start + limits.time_limit

    # ---- candidate management
    def add(self, clause: Clause, parents: tuple, rule: str, role: str = "plain") -> Optional[int]:
        if rule != INPUT:
            self.counters["generated"] += 1
        key = variant_key(clause)
        bucket = self.seen.get(key)
        if bucket is not None:
            for other in bucket:
                if kernels.variant(clause.literals, self.records[other].clause.literals):
                    self.counters["duplicates"] += 1
                    return None
        else:
            bucket = self.seen[key] = []
        cid = len(self.records)
        bucket.append(cid)
        self.records.append(ClauseRecord(cid, clause, parents, rule, self.step, role))
        self.memory += (clause.size + len(clause.literals) + 1) * BYTES_PER_NODE
        self.live.add(cid)
        heapq.heappush(self.age_q, cid)
        heapq.heappush(self.weight_q, (clause.size, cid))
        if self.scorer is not None:
            self.pending.append(cid)
            if len(self.pending) >= self.batch_size:
                self.flush_scores()
        return cid

    def flush_scores(self) -> None:
        ids = [i for i in self.pending if i in self.live]
        self.pending = []
        for k in range(0, len(ids), self.batch_size):
            chunk = ids[k:k + self.batch_size]
            probs = self.scorer.score_clauses([self.records[i].clause for i in chunk])
            self.counters["scored"] += len(chunk)
            for i, p in zip(chunk, probs):
                heapq.heappush(self.learned_q, (-float(p), i))

    def _pop(self, heap) -> Optional[int]:
        while heap:
            item = heapq.heappop(heap)
            cid = item if type(item) is int else item[1]
            if cid in self.live:
                return cid
        return None

    def select(self) -> Optional[int]:
        slot = self.schedule.slot(self.step)
        if slot == LEARNED:
            if self.scorer is None:
                slot = WEIGHT
            else:
                cid = self._pop(self.learned_q)
                if cid is None and self.pending:
                    self.flush_scores()
                    cid = self._pop(self.learned_q)
                if cid is not None:
                    return cid
                slot = WEIGHT
        if slot == AGE:
            return self._pop(self.age_q)
        return self._pop(self.weight_q)

    # ---- resource checks
    def out_of_resources(self) -> bool:
        if self.clock() >= self.deadline:
            return True
        if self.memory > self.limits.memory_cap:
            return True
        return self.interrupt is not None and self.interrupt.is_set()

    # ---- active set
    def activate(self, cid: int, clause: Clause) -> None:
        self.active[cid] = clause
        for pos, atom in clause.literals:
            self.lit_index.setdefault((pos, atom[0]), set()).add(cid)

    def deactivate(self, cid: int) -> None:
        clause = self.active.pop(cid)
        for pos, atom in clause.literals:
            s = self.lit_index.get((pos, atom[0]))
            if s is not None:
                s.discard(cid)

    def partners(self, clause: Clause) -> set:
        out = set()
        for pos, atom in clause.literals:
            s = self.lit_index.get((not pos, atom[0]))
            if s:
                out |= s
        return out

    # ---- main loop
    def run(self) -> AttemptRecord:
        problem = self.problem
        for c in problem.axioms:
            self.add(rename_fresh(c, self.counter), (), INPUT, "axiom")
        for c in problem.negated_conjecture:
            self.add(rename_fresh(c, self.counter), (), INPUT, "negated_conjecture")
        num_inputs = len(self.records)
        outcome = SATURATED
        empty_id = None
        max_steps = self.limits.max_steps
        while True:
            if self.out_of_resources() or (max_steps is not None and self.step >= max_steps):
                outcome = RESOURCE_OUT
                break
            cid = self.select()
            if cid is None:
                break
            self.live.discard(cid)
            self.step += 1
            given = self.records[cid].clause
            if given.is_empty:
                outcome = REFUTED
                empty_id = cid
                break
            if is_tautology(given):
                self.counters["tautologies"] += 1
                continue
            if self.forward_subsumed(given):
                self.counters["subsumed_forward"] += 1
                continue
            self.backward_subsume(given)
            self.counters["processed"] += 1
            for f in factors(given, self.counter):
                self.add(f, (cid,), FACTOR)
            aborted = False
            partners = self.partners(given)
            for aid, other in list(self.active.items()):
                if aid not in partners:
                    continue
                for r in resolvents(given, other, self.counter):
                    self.add(r, (cid, aid), RESOLVENT)
                if self.out_of_resources():
                    aborted = True
                    break
            if self._self_partner(given):
                for r in resolvents(given, given, self.counter):
                    self.add(r, (cid, cid), RESOLVENT)
            self.activate(cid, given)
            if aborted:
                outcome = RESOURCE_OUT
                break
        return AttemptRecord(
            problem=problem,
            records=self.records,
            outcome=outcome,
            empty_id=empty_id,
            counters=dict(self.counters, steps=self.step),
            elapsed=self.clock() - self.start,
            num_inputs=num_inputs,
        )

    @staticmethod
    def _self_partner(clause: Clause) -> bool:
        pos = {atom[0] for s, atom in clause.literals if s}
        return any(not s and atom[0] in pos for s, atom in clause.literals)

    def forward_subsumed(self, given: Clause) -> bool:
        lits = given.literals
        for other in self.active.values():
            if kernels.subsumes(other.literals, lits):
                return True
        return False

    def backward_subsume(self, given: Clause) -> None:
        lits = given.literals
        doomed = [aid for aid, other in self.active.items() if kernels.subsumes(lits, other.literals)]
        for aid in doomed:
            self.deactivate(aid)
        self.counters["subsumed_backward"] += len(doomed)


def search(
    problem: Problem,
    limits: Optional[SearchLimits] = None,
    scorer: Optional[Scorer] = None,
    queue_schedule: QueueSchedule = QueueSchedule(),
    batch_size: int = SCORE_BATCH,
    interrupt=None,
) -> AttemptRecord:
    """Run one proof attempt on ``problem`` and return the full trace.

    ``interrupt`` is an optional ``threading.Event``; setting it ends the
    attempt with ``resource_out`` at the next check.
    """
    if not problem.input_clauses:
        raise ValueError("problem has no input clauses")
    return _Search(problem, limits or SearchLimits(), scorer, queue_schedule, batch_size, interrupt).run()


# ---------------------------------------------------------------- proofs

@dataclass
class Proof:
    steps: List[ClauseRecord]
    problem_name: str = ""

    @property
    def length(self) -> int:
        return sum(1 for s in self.steps if s.rule != INPUT)


def ancestor_ids(records: Sequence[ClauseRecord], cid: int) -> set:
    """Strict ancestor closure of ``cid`` (ids only)."""
    out = set()
    stack = list(records[cid].parents)
    while stack:
        p = stack.pop()
        if p in out:
            continue
        out.add(p)
        stack.extend(records[p].parents)
    return out


def extract_proof(rec: AttemptRecord) -> Proof:
    if rec.outcome != REFUTED or rec.empty_id is None:
        raise PreconditionError(f"attempt outcome is {rec.outcome!r}, not refuted")
    ids = ancestor_ids(rec.records, rec.empty_id) | {rec.empty_id}
    return Proof([rec.records[i] for i in sorted(ids)], rec.problem.name)


def replay_proof(proof: Proof) -> bool:
    """Independently re-derive every non-input step of ``proof``."""
    if not proof.steps or not proof.steps[-1].clause.is_empty:
        return False
    by_id: Dict[int, ClauseRecord] = {}
    counter = VarCounter(1 << 40)
    for step in proof.steps:
        if step.id in by_id:
            return False
        if step.rule == INPUT:
            if step.parents:
                return False
        else:
            if any(p not in by_id for p in step.parents):
                return False
            parents = [rename_fresh(by_id[p].clause, counter) for p in step.parents]
            if step.rule == FACTOR:
                if len(parents) != 1:
                    return False
                derived = factors(parents[0], counter)
            elif step.rule == RESOLVENT:
                if len(parents) != 2:
                    return False
                derived = resolvents(parents[0], parents[1], counter)
            else:
                return False
            if not any(is_variant(step.clause, d) for d in derived):
                return False
        by_id[step.id] = step
    return True


def format_proof(proof: Proof, symbols: SymbolTable, header: Sequence[str] = ()) -> str:
    """One step per line as a TPTP cnf annotated formula."""
    lines = [f"% {h}" for h in header]
    for s in proof.steps:
        body = format_clause(s.clause, symbols)
        if s.rule == INPUT:
            role = s.role if s.role in ("axiom", "negated_conjecture") else "axiom"
            lines.append(f"cnf(c{s.id}, {role}, {body}, input).")
        else:
            parents = ",".join(f"c{p}" for p in s.parents)
            lines.append(f"cnf(c{s.id}, plain, {body}, inference({s.rule},[],[{parents}])).")
    return "\n".join(lines) + "\n"


def parse_proof(text: str, source: str = "<proof>") -> Tuple[Proof, SymbolTable]:
    """Read a proof written by :func:`format_proof`."""
    from herprover.tptp import _cnf_clause

    symbols = SymbolTable()
    steps = []
    counter = VarCounter()
    for item in parse_formulas(text, source):
        if not hasattr(item, "formula") or item.language != "cnf":
            raise TPTPError("proof files contain only cnf steps", source)
        if not item.name.startswith("c") or not item.name[1:].isdigit():
            raise TPTPError(f"bad step name {item.name!r}", source)
        cid = int(item.name[1:])
        clause = _cnf_clause(item.formula, symbols, source)
        if clause is None:
            raise TPTPError(f"step {item.name} is trivially true", source)
        clause = rename_fresh(clause, counter)
        ann = item.annotations
        if ann == "input":
            steps.append(ClauseRecord(cid, clause, (), INPUT, 0, item.role))
            continue
        try:
            head, args = ann
            rule = args[0]
            parents = tuple(int(p[1:]) for p in args[2])
        except (TypeError, ValueError, IndexError) as e:
            raise TPTPError(f"bad inference annotation on {item.name}", source) from e
        if head != "inference":
            raise TPTPError(f"bad inference annotation on {item.name}", source)
        steps.append(ClauseRecord(cid, clause, parents, rule, 0))
    return Proof(steps), symbols
