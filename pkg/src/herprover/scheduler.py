"""Uniform budgeted scheduler: restarting runs at geometric time budgets.

Level ``k`` (1-based) runs the prover for ``base * 2**(k-1)`` seconds and then
restarts.  Each new task goes to the level with the least cumulative time,
smallest level first on ties, so cumulative time stays balanced across levels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List

ONE_HOUR = 3600.0


@dataclass(frozen=True)
class Task:
    conjecture: str
    time_limit: float
    level: int
    restart: int
    serial: int = 0


@dataclass
class UBSState:
    conjecture: str = ""
    k_max: int = 10
    base: float = 3.0
    spent: List[float] = field(default_factory=list)
    restarts: List[int] = field(default_factory=list)
    outstanding: Dict[int, Task] = field(default_factory=dict)
    issued: int = 0

    def __post_init__(self):
        if self.k_max < 1 or self.base <= 0:
            raise ValueError("k_max and base must be positive")
        if self.budget(self.k_max) > ONE_HOUR:
            raise ValueError("largest budget exceeds one hour")
        if not self.spent:
            self.spent = [0.0] * self.k_max
        if not self.restarts:
            self.restarts = [0] * self.k_max

    def budget(self, k: int) -> float:
        return self.base * 2 ** (k - 1)

    def budgets(self) -> List[float]:
        return [self.budget(k) for k in range(1, self.k_max + 1)]

    def to_dict(self) -> dict:
        return {
            "conjecture": self.conjecture,
            "k_max": self.k_max,
            "base": self.base,
            "spent": list(self.spent),
            "restarts": list(self.restarts),
            "issued": self.issued,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UBSState":
        return cls(
            conjecture=d["conjecture"],
            k_max=d["k_max"],
            base=d["base"],
            spent=list(d["spent"]),
            restarts=list(d["restarts"]),
            issued=d.get("issued", 0),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


def committed(state: UBSState) -> List[float]:
    """Per-level time spent plus the full budget of tasks still running."""
    out = list(state.spent)
    for task in state.outstanding.values():
        out[task.level - 1] += task.time_limit
    return out


def next_time_limit(state: UBSState) -> Task:
    """Issue the next task: the least-served level, smallest ``k`` on ties.

    Tasks still running count at their full budget, so a burst of issues
    before any completion spreads over levels instead of piling onto one.
    """
    load = committed(state)
    idx = min(range(state.k_max), key=lambda i: (load[i], i))
    k = idx + 1
    state.restarts[idx] += 1
    state.issued += 1
    task = Task(state.conjecture, state.budget(k), k, state.restarts[idx], state.issued)
    state.outstanding[task.serial] = task
    return task


def record_completion(state: UBSState, task: Task, actual_seconds: float) -> None:
    """Charge the time actually used by ``task`` to its level."""
    if state.outstanding.pop(task.serial, None) is None:
        raise KeyError(f"task {task.serial} was not issued by this scheduler or already completed")
    if actual_seconds < 0:
        raise ValueError("negative duration")
    state.spent[task.level - 1] += actual_seconds
