"""First-order terms, literals, clauses and substitutions.

Terms are plain Python values so the hot kernels can walk them cheaply:
a variable is a non-negative ``int``, an application is a tuple
``(symbol_id, *args)`` and a constant is a 1-tuple.  A literal is a
``(positive, atom)`` pair where the atom is an application of a predicate.
Symbol names live in a :class:`SymbolTable`.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Optional, Tuple, Union

from herprover import kernels

Term = Union[int, tuple]
Atom = tuple
Literal = Tuple[bool, Atom]
Substitution = Dict[int, Term]

PREDICATE = "predicate"
FUNCTION = "function"


class ArityError(ValueError):
    """A symbol was used with two different arities (or kinds)."""


@dataclass(frozen=True)
class Symbol:
    id: int
    name: str
    arity: int
    kind: str


class SymbolTable:
    """Bidirectional name <-> id interning with arity and kind.

    Lookups are lock-free; interning a new name is serialized.
    """

    def __init__(self):
        self._by_name: Dict[str, Symbol] = {}
        self._by_id: list = []
        self._lock = threading.Lock()

    def intern(self, name: str, arity: int, kind: str = FUNCTION) -> int:
        sym = self._by_name.get(name)
        if sym is None:
            with self._lock:
                sym = self._by_name.get(name)
                if sym is None:
                    sym = Symbol(len(self._by_id), name, arity, kind)
                    self._by_id.append(sym)
                    self._by_name[name] = sym
                    return sym.id
        if sym.arity != arity or sym.kind != kind:
            raise ArityError(
                f"symbol {name!r} used as {kind}/{arity} but declared {sym.kind}/{sym.arity}"
            )
        return sym.id

    def predicate(self, name: str, arity: int) -> int:
        return self.intern(name, arity, PREDICATE)

    def function(self, name: str, arity: int) -> int:
        return self.intern(name, arity, FUNCTION)

    def name(self, sym_id: int) -> str:
        return self._by_id[sym_id].name

    def arity(self, sym_id: int) -> int:
        return self._by_id[sym_id].arity

    def kind(self, sym_id: int) -> str:
        return self._by_id[sym_id].kind

    def lookup(self, name: str) -> Optional[Symbol]:
        return self._by_name.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self) -> Iterator[Symbol]:
        return iter(list(self._by_id))

    def to_list(self):
        return [[s.name, s.arity, s.kind] for s in self._by_id]

    @classmethod
    def from_list(cls, items) -> "SymbolTable":
        table = cls()
        for name, arity, kind in items:
            table.intern(name, arity, kind)
        return table


def is_var(t: Term) -> bool:
    return type(t) is int


class Clause:
    """An immutable, duplicate-free disjunction of literals.

    Literal order is kept (first occurrence wins) so that printing and graph
    construction are deterministic, but equality is set equality.
    """

    __slots__ = ("literals", "_key", "_size")

    def __init__(self, literals: Iterable[Literal] = ()):
        seen = set()
        lits = []
        for lit in literals:
            if lit not in seen:
                seen.add(lit)
                lits.append(lit)
        self.literals: Tuple[Literal, ...] = tuple(lits)
        self._key = None
        self._size = None

    @classmethod
    def _raw(cls, literals: Tuple[Literal, ...]) -> "Clause":
        # literals already duplicate-free
        c = cls.__new__(cls)
        c.literals = literals
        c._key = None
        c._size = None
        return c

    def __len__(self) -> int:
        return len(self.literals)

    def __iter__(self):
        return iter(self.literals)

    def __bool__(self) -> bool:
        return True

    @property
    def is_empty(self) -> bool:
        return not self.literals

    def _frozen(self):
        if self._key is None:
            self._key = frozenset(self.literals)
        return self._key

    def __eq__(self, other) -> bool:
        if not isinstance(other, Clause):
            return NotImplemented
        return self._frozen() == other._frozen()

    def __hash__(self) -> int:
        return hash(self._frozen())

    def __repr__(self) -> str:
        return f"Clause({list(self.literals)!r})"

    @property
    def size(self) -> int:
        if self._size is None:
            self._size = sum(kernels.term_size(atom) for _, atom in self.literals)
        return self._size

    def variables(self) -> list:
        """Distinct variables in order of first occurrence."""
        out: Dict[int, None] = {}
        for _, atom in self.literals:
            _collect_vars(atom, out)
        return list(out)


EMPTY_CLAUSE = Clause()


def _collect_vars(t: Term, out: Dict[int, None]) -> None:
    if type(t) is int:
        out.setdefault(t, None)
        return
    for a in t[1:]:
        _collect_vars(a, out)


def term_vars(t: Term) -> list:
    out: Dict[int, None] = {}
    _collect_vars(t, out)
    return list(out)


def apply(sigma: Substitution, obj):
    """Apply a substitution to a term, literal or clause."""
    if isinstance(obj, Clause):
        if not sigma:
            return obj
        return Clause._raw(kernels.apply_literals(obj.literals, sigma))
    if type(obj) is int:
        return sigma.get(obj, obj)
    if len(obj) == 2 and type(obj[0]) is bool:
        return (obj[0], kernels.apply_term(obj[1], sigma))
    return kernels.apply_term(obj, sigma)


def unify(l1, l2) -> Optional[Substitution]:
    """Most general unifier of two literals (polarity ignored) or two terms."""
    if type(l1) is tuple and len(l1) == 2 and type(l1[0]) is bool:
        l1 = l1[1]
    if type(l2) is tuple and len(l2) == 2 and type(l2[0]) is bool:
        l2 = l2[1]
    return kernels.unify(l1, l2)


def tree_size(c: Clause) -> int:
    return c.size


_global_counter = itertools.count(1_000_000)


class VarCounter:
    """Monotone fresh-variable supply, one per proof attempt."""

    def __init__(self, start: int = 0):
        self._it = itertools.count(start)

    def __next__(self) -> int:
        return next(self._it)

    def __iter__(self):
        return self


def rename_fresh(c: Clause, counter=None) -> Clause:
    """Return a variant of ``c`` whose variables are new ids from ``counter``."""
    if counter is None:
        counter = _global_counter
    lits = kernels.rename_literals(c.literals, {}, counter)
    return Clause._raw(lits)


def normalize(c: Clause) -> Clause:
    """Rename variables to 0, 1, ... in order of first occurrence."""
    return Clause._raw(kernels.rename_literals(c.literals, {}, itertools.count()))


def is_variant(c1: Clause, c2: Clause) -> bool:
    return kernels.variant(c1.literals, c2.literals)


def _skeleton(t: Term):
    if type(t) is int:
        return ()
    if len(t) == 1:
        return t
    return (t[0],) + tuple(_skeleton(a) for a in t[1:])


def variant_key(c: Clause):
    """A renaming-invariant hashable key; variants always share a key."""
    return tuple(sorted((pos, _skeleton(atom)) for pos, atom in c.literals))


def max_var(c: Clause) -> int:
    vs = c.variables()
    return max(vs) if vs else -1


def make_literal(positive: bool, pred: int, *args: Term) -> Literal:
    return (positive, (pred,) + tuple(args))


def negate(lit: Literal) -> Literal:
    return (not lit[0], lit[1])
