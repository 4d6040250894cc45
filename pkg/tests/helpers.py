"""Shared builders and independent oracles for the test suite."""

import itertools
import random
from pathlib import Path

from herprover.fol import Clause, SymbolTable
from herprover.tptp import parse_clause, parse_problem

ROOT = Path(__file__).resolve().parent.parent
PROBLEMS = ROOT / "problems"

GRANDPARENT = """
fof(c1, axiom, ![X,Y,Z]: ((parent(X,Y) & parent(Y,Z)) => grandparent(X,Z))).
fof(c2, axiom, parent(alice,bob)).
fof(c3, axiom, parent(bob,charlie)).
fof(c4, conjecture, ?[A]: grandparent(alice,A)).
"""


def grandparent():
    return parse_problem(GRANDPARENT, name="grandparent")


def clause(text, symbols):
    return parse_clause(text, symbols)


def lit(text, symbols):
    (lit,) = parse_clause(text, symbols).literals
    return lit


# --- random generation over a small fixed signature -------------------------

PREDS = [("p", 1), ("q", 2), ("r", 0)]
FUNCS = [("f", 1), ("g", 2)]
CONSTS = ["a", "b"]


def signature():
    st = SymbolTable()
    ids = {}
    for name, ar in PREDS:
        ids[name] = st.predicate(name, ar)
    for name, ar in FUNCS:
        ids[name] = st.function(name, ar)
    for name in CONSTS:
        ids[name] = st.function(name, 0)
    return st, ids


def random_term(rng, ids, nvars, depth):
    roll = rng.random()
    if nvars and (depth == 0 or roll < 0.4):
        if rng.random() < 0.75 or depth == 0:
            return rng.randrange(nvars)
    if depth == 0 or roll < 0.6:
        return (ids[rng.choice(CONSTS)],)
    name, ar = rng.choice(FUNCS)
    return (ids[name],) + tuple(random_term(rng, ids, nvars, depth - 1) for _ in range(ar))


def random_atom(rng, ids, nvars, depth=2, preds=PREDS):
    name, ar = rng.choice(preds)
    return (ids[name],) + tuple(random_term(rng, ids, nvars, depth) for _ in range(ar))


def random_clause(rng, ids, nvars=3, max_lits=3, depth=2, preds=PREDS):
    n = rng.randint(1, max_lits)
    return Clause((rng.random() < 0.5, random_atom(rng, ids, nvars, depth, preds)) for _ in range(n))


def shift_vars(c, offset):
    def sh(t):
        if type(t) is int:
            return t + offset
        return (t[0],) + tuple(sh(a) for a in t[1:])

    return Clause((pos, sh(atom)) for pos, atom in c.literals)


# --- independent oracles ----------------------------------------------------


def subst_term(t, m):
    """Naive simultaneous substitution (no resolution of chains)."""
    if type(t) is int:
        return m.get(t, t)
    return (t[0],) + tuple(subst_term(a, m) for a in t[1:])


def subst_lits(lits, m):
    return [(pos, subst_term(atom, m)) for pos, atom in lits]


def subterms(t, out):
    out.add(t)
    if type(t) is not int:
        for a in t[1:]:
            subterms(a, out)
    return out


def term_vars(t, out):
    if type(t) is int:
        out.add(t)
    else:
        for a in t[1:]:
            term_vars(a, out)
    return out


def brute_subsumes(c1, c2):
    """Enumerate every map from vars(c1) to subterms of c2."""
    if len(c1) > len(c2):
        return False
    vs = set()
    for _, atom in c1.literals:
        term_vars(atom, vs)
    vs = sorted(vs)
    cands = set()
    for _, atom in c2.literals:
        for a in atom[1:]:
            subterms(a, cands)
    targets = set(c2.literals)
    for images in itertools.product(sorted(cands, key=repr), repeat=len(vs)):
        m = dict(zip(vs, images))
        if all(l in targets for l in subst_lits(c1.literals, m)):
            return True
    return False


def brute_match(pattern, target, m=None):
    """Independent one-way matching used to witness generality."""
    m = {} if m is None else m
    if type(pattern) is int:
        if pattern in m:
            return m if m[pattern] == target else None
        m[pattern] = target
        return m
    if type(target) is int or pattern[0] != target[0] or len(pattern) != len(target):
        return None
    for p, t in zip(pattern[1:], target[1:]):
        if brute_match(p, t, m) is None:
            return None
    return m


def ground_atoms_true(lits, model):
    return any(model[atom] == pos for pos, atom in lits)


def herbrand_ground(clauses, consts):
    """All ground instances over the given constants (function-free clauses)."""
    out = []
    for c in clauses:
        vs = set()
        for _, atom in c.literals:
            term_vars(atom, vs)
        vs = sorted(vs)
        for images in itertools.product([(k,) for k in consts], repeat=len(vs)):
            out.append(subst_lits(c.literals, dict(zip(vs, images))))
    return out


def brute_unsat(ground_clauses):
    """Truth-table satisfiability over the ground atoms present."""
    atoms = sorted({atom for c in ground_clauses for _, atom in c}, key=repr)
    for bits in itertools.product((False, True), repeat=len(atoms)):
        model = dict(zip(atoms, bits))
        if all(ground_atoms_true(c, model) for c in ground_clauses):
            return False
    return True


def saturate(clauses, max_clauses=4000):
    """Exhaustive closure under resolvents and factors; True iff empty derived.

    Returns None when the closure exceeds ``max_clauses``.
    """
    from herprover.calculus import factors, resolvents, is_tautology
    from herprover.fol import is_variant, variant_key

    seen = {}
    todo = []

    def add(c):
        if is_tautology(c):
            return False
        bucket = seen.setdefault(variant_key(c), [])
        if any(is_variant(c, d) for d in bucket):
            return False
        bucket.append(c)
        todo.append(c)
        return True

    done = []
    for c in clauses:
        if c.is_empty:
            return True
        add(c)
    total = len(todo)
    while todo:
        c = todo.pop(0)
        new = list(factors(c))
        for d in done + [c]:
            new.extend(resolvents(c, d))
        done.append(c)
        for n in new:
            if n.is_empty:
                return True
            if add(n):
                total += 1
                if total > max_clauses:
                    return None
    return False


def rng(seed=0):
    return random.Random(seed)


# --- search against the Herbrand oracle ----------------------------------------

GROUND_PREDS = [("p", 1), ("q", 1), ("r", 0)]


def refutation_agrees(seed):
    """Search refutes iff the Herbrand expansion is unsatisfiable.

    Clause sets are function free over p/1, q/1, r/0 and the constants a, b.
    """
    from herprover.saturation import REFUTED, SATURATED, SearchLimits, search
    from herprover.tptp import Problem

    symbols, ids = signature()
    rng = random.Random(seed)
    n = rng.randint(2, 5)
    clauses = [random_clause(rng, ids, nvars=2, max_lits=3, depth=0, preds=GROUND_PREDS) for _ in range(n)]
    ground = herbrand_ground(clauses, [ids["a"], ids["b"]])
    unsat = brute_unsat(ground)
    problem = Problem("rand", symbols, clauses, [])
    rec = search(problem, SearchLimits(time_limit=30.0))
    assert rec.outcome in (REFUTED, SATURATED)
    return (rec.outcome == REFUTED) == unsat, unsat




# --- acceptance reporting --------------------------------------------------------

ACCEPTANCE_RESULTS = {}
