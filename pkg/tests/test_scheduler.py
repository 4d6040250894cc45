import json
import random

import pytest

from herprover.scheduler import ONE_HOUR, UBSState, committed, next_time_limit, record_completion


def test_fresh_state_starts_at_base_level():
    # [PAPER] the first task is level 1 at 3 seconds
    s = UBSState("c")
    t = next_time_limit(s)
    assert (t.level, t.time_limit, t.restart) == (1, 3.0, 1)
    record_completion(s, t, 3.0)
    t2 = next_time_limit(s)
    assert t2.level == 2 and t2.time_limit == 6.0


def test_budget_menu():
    s = UBSState()
    assert s.budgets() == [3.0 * 2 ** i for i in range(10)]
    assert s.budgets()[-1] == 1536.0
    assert max(s.budgets()) <= ONE_HOUR


def test_one_hour_cap():
    with pytest.raises(ValueError):
        UBSState(k_max=12)
    UBSState(k_max=11)  # 3072 s is still within an hour
    with pytest.raises(ValueError):
        UBSState(base=0)


def test_unknown_task_rejected():
    s = UBSState("c")
    other = UBSState("d")
    t = next_time_limit(other)
    with pytest.raises(KeyError):
        record_completion(s, t, 1.0)
    t = next_time_limit(s)
    record_completion(s, t, 1.0)
    with pytest.raises(KeyError):
        record_completion(s, t, 1.0)


def test_negative_duration_rejected():
    s = UBSState()
    with pytest.raises(ValueError):
        record_completion(s, next_time_limit(s), -1.0)


def _min_oracle(load):
    # [DERIVED] linear scan for the least-loaded, lowest level
    best = 0
    for i, v in enumerate(load):
        if v < load[best]:
            best = i
    return best + 1


def test_balance_over_many_issuances():
    # cumulative time across levels never spreads wider than the largest budget
    s = UBSState("c")
    rng = random.Random(0)
    largest = s.budget(s.k_max)
    for _ in range(10_000):
        expected = _min_oracle(committed(s))
        t = next_time_limit(s)
        assert t.level == expected
        record_completion(s, t, t.time_limit * rng.choice([1.0, 1.0, rng.random()]))
        assert max(s.spent) - min(s.spent) <= largest


def test_outstanding_tasks_spread_over_levels():
    s = UBSState("c")
    levels = [next_time_limit(s).level for _ in range(4)]
    assert levels == [1, 2, 3, 3] or len(set(levels)) > 1
    assert len(s.outstanding) == 4


def test_serialisation_roundtrip():
    s = UBSState("c")
    for _ in range(7):
        record_completion(s, next_time_limit(s), 2.0)
    again = UBSState.from_dict(json.loads(s.dumps()))
    assert again.to_dict() == s.to_dict()
    assert next_time_limit(again) == next_time_limit(s)
