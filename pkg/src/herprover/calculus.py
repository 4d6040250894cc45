"""Resolution calculus: factoring, binary resolution, subsumption, tautologies."""

from __future__ import annotations

from typing import List

from herprover import kernels
from herprover.fol import Clause, VarCounter, rename_fresh, variant_key, _global_counter


def _dedup_variants(clauses: List[Clause]) -> List[Clause]:
    buckets = {}
    out = []
    for c in clauses:
        bucket = buckets.setdefault(variant_key(c), [])
        if any(kernels.variant(c.literals, o.literals) for o in bucket):
            continue
        bucket.append(c)
        out.append(c)
    return out


def factors(c: Clause, counter: VarCounter = None) -> List[Clause]:
    """All factors of ``c`` on same-polarity literal pairs, fresh variables, up to variants."""
    if counter is None:
        counter = _global_counter
    lits = c.literals
    out = []
    for i in range(len(lits)):
        pos, atom = lits[i]
        for j in range(i + 1, len(lits)):
            pos2, atom2 = lits[j]
            if pos2 != pos or atom2[0] != atom[0]:
                continue
            sigma = kernels.unify(atom, atom2)
            if sigma is None:
                continue
            rest = lits[:i] + lits[i + 1:]
            new = kernels.apply_literals(rest, sigma)
            out.append(Clause._raw(kernels.rename_literals(new, {}, counter)))
    return _dedup_variants(out)


def _resolve_directed(c1: Clause, c2: Clause, counter, out: list) -> None:
    lits1 = c1.literals
    lits2 = c2.literals
    for i, (pos, atom) in enumerate(lits1):
        if not pos:
            continue
        for j, (pos2, atom2) in enumerate(lits2):
            if pos2 or atom2[0] != atom[0]:
                continue
            sigma = kernels.unify(atom, atom2)
            if sigma is None:
                continue
            rest = lits1[:i] + lits1[i + 1:] + lits2[:j] + lits2[j + 1:]
            new = kernels.apply_literals(rest, sigma)
            out.append(Clause._raw(kernels.rename_literals(new, {}, counter)))


def resolvents(c1: Clause, c2: Clause, counter: VarCounter = None) -> List[Clause]:
    """All binary resolvents of two variable-disjoint clauses, both directions.

    When ``c1 is c2`` the second copy is renamed apart first.
    """
    if counter is None:
        counter = _global_counter
    if c1 is c2 or (c1.literals and c1 == c2):
        c2 = rename_fresh(c2, counter)
    out: list = []
    _resolve_directed(c1, c2, counter, out)
    _resolve_directed(c2, c1, counter, out)
    return _dedup_variants(out)


def subsumes(c1: Clause, c2: Clause) -> bool:
    """True iff ``len(c1) <= len(c2)`` and some substitution maps ``c1`` into ``c2``.

    The length condition keeps a clause from deleting its own factors.
    """
    return kernels.subsumes(c1.literals, c2.literals)


def is_tautology(c: Clause) -> bool:
    pos = set()
    neg = set()
    for sign, atom in c.literals:
        if sign:
            if atom in neg:
                return True
            pos.add(atom)
        else:
            if atom in pos:
                return True
            neg.add(atom)
    return False
