"""The compiled and pure-Python kernels must agree on every input."""

import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from herprover import kernels

from helpers import random_clause, random_term, signature

BACKENDS = kernels.backends()
SYMBOLS, IDS = signature()


def test_python_backend_always_available():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS


def test_compiled_backend_is_built():
    # the package ships the extension; a missing build would silently cost ~2x
    assert "cython" in BACKENDS


def _cases(seed, n=300):
    rng = random.Random(seed)
    for _ in range(n):
        a = random_clause(rng, IDS, nvars=3, max_lits=3)
        b = random_clause(rng, IDS, nvars=3, max_lits=4)
        yield rng, a, b


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_backend_matches_python(name):
    mod, ref = BACKENDS[name], BACKENDS["python"]
    for rng, a, b in _cases(7):
        la, lb = a.literals, b.literals
        assert mod.subsumes(la, lb) == ref.subsumes(la, lb)
        assert mod.variant(la, lb) == ref.variant(la, lb)
        assert mod.term_size(la[0][1]) == ref.term_size(la[0][1])
        t1, t2 = la[0][1], lb[0][1]
        assert mod.unify(t1, t2) == ref.unify(t1, t2)
        assert mod.match(t1, t2) == ref.match(t1, t2)
        sigma = {0: random_term(rng, IDS, 3, 1), 2: (IDS["a"],)}
        assert mod.apply_literals(la, sigma) == ref.apply_literals(la, sigma)
        assert mod.apply_term(t1, sigma) == ref.apply_term(t1, sigma)
        c1, c2 = itertools.count(100), itertools.count(100)
        assert mod.rename_literals(la, {}, c1) == ref.rename_literals(la, {}, c2)


@pytest.mark.parametrize("name", sorted(BACKENDS))
@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_unifier_is_idempotent(name, seed):
    mod = BACKENDS[name]
    rng = random.Random(seed)
    a = random_term(rng, IDS, 4, 3)
    b = random_term(rng, IDS, 4, 3)
    sigma = mod.unify(a, b)
    if sigma is None:
        return
    assert mod.apply_term(a, sigma) == mod.apply_term(b, sigma)
    # fully resolved: no image mentions a domain variable
    for image in sigma.values():
        assert mod.apply_term(image, sigma) == image
    assert all(k != v for k, v in sigma.items())


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_apply_literals_deduplicates(name):
    mod = BACKENDS[name]
    p = IDS["p"]
    lits = ((True, (p, 0)), (True, (p, 1)))
    assert mod.apply_literals(lits, {1: 0}) == ((True, (p, 0)),)
