"""Hindsight relabeling of proof attempts into training examples.

Every non-input clause generated during an attempt is treated as a goal that
was reached: its ancestors become positive examples for that goal and other
generated clauses become negatives.  Goals are subsampled per tree size with
a heavy-tailed weight that favours small clauses.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

from herprover.fol import Clause, SymbolTable
from herprover.saturation import INPUT, AttemptRecord, ancestor_ids
from herprover.tptp import format_clause

E = math.e
POSITIVE = 1
NEGATIVE = 0
MAX_SIZE = 10**9


def weight(s: int) -> float:
    """Heavy-tail size weight ``1/ln(s+e) - 1/ln(s+e+1)``; sums to 1 over s >= 0."""
    if s < 0:
        raise ValueError("size must be nonnegative")
    return 1.0 / math.log(s + E) - 1.0 / math.log(s + E + 1.0)


def cumulative_weight(s: int) -> float:
    """Closed form of ``sum(weight(i) for i in range(s + 1))``."""
    return 1.0 - 1.0 / math.log(s + E + 1.0)


def sample_size(u: float, cap: int = MAX_SIZE) -> int:
    """Inverse-CDF draw: the least ``s`` with ``cumulative_weight(s) >= u``.

    The tail is so heavy that large ``u`` maps beyond any float; draws are
    truncated at ``cap``.
    """
    if not 0.0 <= u < 1.0:
        raise ValueError("u must lie in [0, 1)")
    if cumulative_weight(cap) < u:
        return cap
    s = min(cap, max(0, math.ceil(math.exp(1.0 / (1.0 - u)) - E - 1.0)))
    # guard the closed form against rounding at integer boundaries
    while s > 0 and cumulative_weight(s - 1) >= u:
        s -= 1
    while cumulative_weight(s) < u:
        s += 1
    return s


@dataclass
class SamplerConfig:
    target_num_examples_per_second: float = 64.0

    def __post_init__(self):
        if self.target_num_examples_per_second <= 0:
            raise ValueError("example rate must be positive")


@dataclass
class Example:
    x: Clause
    g: Clause
    conjecture_clauses: List[Clause]
    label: int
    symbols: Optional[SymbolTable] = field(default=None, repr=False)
    x_id: Optional[int] = None
    g_id: Optional[int] = None
    source: str = ""

    @property
    def positive(self) -> bool:
        return self.label == POSITIVE

    def encoded(self):
        """Graph input for the scorer.

        Not cached: a padded encoding is tens of kilobytes, while the clauses
        themselves are small, and the replay buffer holds many examples.
        """
        from herprover.clause_graph import assemble_input

        return assemble_input(self.x, self.g, self.conjecture_clauses, self.symbols)

    def to_dict(self) -> dict:
        sy = self.symbols
        return {
            "x": format_clause(self.x, sy),
            "g": format_clause(self.g, sy),
            "conjecture": [format_clause(c, sy) for c in self.conjecture_clauses],
            "label": self.label,
        }


def ancestors(cid: int, rec: AttemptRecord) -> set:
    """Strict ancestors of clause ``cid`` in ``rec``."""
    rec.record(cid)
    return ancestor_ids(rec.records, cid)


def sample_examples(
    rec: AttemptRecord,
    elapsed: float,
    cfg: SamplerConfig = SamplerConfig(),
    rng: Optional[random.Random] = None,
) -> List[Example]:
    """Subsample balanced positive/negative examples from one attempt."""
    rng = rng or random.Random()
    records = rec.records
    goals = [r.id for r in records if r.rule != INPUT]
    if not goals:
        return []
    target = elapsed * cfg.target_num_examples_per_second
    by_size = {}
    for gid in goals:
        by_size.setdefault(records[gid].clause.size, []).append(gid)
    goal_set = set(goals)
    conj = list(rec.problem.negated_conjecture)
    symbols = rec.problem.symbols
    name = rec.problem.name
    anc_cache = {}
    examples: List[Example] = []
    for size in sorted(by_size):
        size_goals = by_size[size]
        rounds = math.ceil(target * weight(size))
        for _ in range(rounds):
            gid = rng.choice(size_goals)
            entry = anc_cache.get(gid)
            if entry is None:
                anc = ancestor_ids(records, gid)
                entry = anc_cache[gid] = [anc, sorted(anc & goal_set), None]
            anc, pos_pool, _ = entry
            g = records[gid].clause
            if pos_pool:
                xid = rng.choice(pos_pool)
                examples.append(Example(records[xid].clause, g, conj, POSITIVE, symbols, xid, gid, name))
            xid = _draw_negative(rng, goals, anc, gid, entry, goal_set)
            if xid is not None:
                examples.append(Example(records[xid].clause, g, conj, NEGATIVE, symbols, xid, gid, name))
    return examples


def _draw_negative(rng, goals, anc, gid, entry, goal_set):
    # ancestors are usually a tiny fraction of the goals: try rejection first
    for _ in range(16):
        xid = rng.choice(goals)
        if xid != gid and xid not in anc:
            return xid
    if entry[2] is None:
        entry[2] = sorted(goal_set - anc - {gid})
    return rng.choice(entry[2]) if entry[2] else None


def write_jsonl(examples: Iterable[Example], fh) -> int:
    n = 0
    for ex in examples:
        fh.write(json.dumps(ex.to_dict()) + "\n")
        n += 1
    return n


def read_jsonl(lines: Iterable[str], symbols: Optional[SymbolTable] = None) -> List[Example]:
    from herprover.tptp import parse_clause

    symbols = symbols if symbols is not None else SymbolTable()
    out = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        d = json.loads(line)
        out.append(
            Example(
                parse_clause(d["x"], symbols),
                parse_clause(d["g"], symbols),
                [parse_clause(c, symbols) for c in d["conjecture"]],
                int(d["label"]),
                symbols,
            )
        )
    return out
