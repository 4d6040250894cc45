"""TPTP frontend: cnf/fof parsing, include resolution, clausification, printing.

Only the equality-free fragment is accepted.  ``=`` and ``!=`` anywhere in a
formula raise :class:`EqualityError`.
"""

from __future__ import annotations

import itertools
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from herprover.fol import Clause, SymbolTable, Term

TPTP_ENV = "TPTP"

AXIOM_ROLES = {"axiom", "hypothesis", "lemma"}
KNOWN_ROLES = AXIOM_ROLES | {"conjecture", "negated_conjecture"}


class TPTPError(ValueError):
    """Malformed or unsupported TPTP input."""

    def __init__(self, message: str, source: str = "<input>", pos: Optional[int] = None, text: str = ""):
        self.source = source
        self.pos = pos
        self.line = self.col = None
        if pos is not None and text:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            message = f"{source}:{line}:{col}: {message}"
            self.line, self.col = line, col
        else:
            message = f"{source}: {message}"
        super().__init__(message)


class EqualityError(TPTPError):
    """The input uses the equality predicate, which is out of scope."""


class IncludeError(TPTPError):
    """An include directive could not be resolved."""


# ---------------------------------------------------------------- formulas

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Fn:
    name: str
    args: tuple = ()


@dataclass(frozen=True)
class Atom:
    name: str
    args: tuple = ()


@dataclass(frozen=True)
class Const:
    """``$true`` / ``$false``."""

    value: bool


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str  # one of & | => <= <=> <~> ~| ~&
    args: tuple


@dataclass(frozen=True)
class Quant:
    kind: str  # "!" or "?"
    names: tuple
    body: object


Formula = object


# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*|/\*.*?\*/)
  | (?P<op><~>|<=>|=>|<=|~\||~&|!=|[(),.\[\]:!?~&|=])
  | (?P<squote>'(?:[^'\\]|\\.)*')
  | (?P<dquote>"(?:[^"\\]|\\.)*")
  | (?P<dollar>\$\$?[a-zA-Z0-9_]+)
  | (?P<upper>[A-Z][a-zA-Z0-9_]*)
  | (?P<lower>[a-z][a-zA-Z0-9_]*)
  | (?P<num>[+-]?[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?(?:/[0-9]+)?)
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass
class Token:
    kind: str
    value: str
    pos: int


def tokenize(text: str, source: str = "<input>") -> List[Token]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise TPTPError(f"unexpected character {text[pos]!r}", source, pos, text)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "squote":
                value = re.sub(r"\\(.)", r"\1", value[1:-1])
                kind = "lower"
            tokens.append(Token(kind, value, pos))
        pos = m.end()
    tokens.append(Token("eof", "", n))
    return tokens


# ---------------------------------------------------------------- parser

@dataclass
class Annotated:
    language: str  # "cnf" or "fof"
    name: str
    role: str
    formula: Formula
    source: str
    annotations: object = None


@dataclass
class Include:
    path: str
    selection: Optional[List[str]]


class _Parser:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source
        self.toks = tokenize(text, source)
        self.i = 0

    # -- helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token = None):
        tok = tok or self.tok
        return TPTPError(msg, self.source, tok.pos, self.text)

    def take(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str) -> Token:
        t = self.tok
        if t.value != value or t.kind not in ("op",):
            raise self.error(f"expected {value!r}, found {t.value or t.kind!r}")
        return self.take()

    def at(self, value: str) -> bool:
        return self.tok.kind == "op" and self.tok.value == value

    # -- top level
    def parse_file(self):
        items = []
        while self.tok.kind != "eof":
            t = self.tok
            if t.kind != "lower":
                raise self.error("expected an annotated formula or include")
            if t.value == "include":
                items.append(self.parse_include())
            elif t.value in ("cnf", "fof"):
                items.append(self.parse_annotated())
            elif t.value in ("tff", "thf", "tcf"):
                raise self.error(f"{t.value} formulas are not supported")
            else:
                raise self.error(f"unknown directive {t.value!r}")
        return items

    def parse_include(self) -> Include:
        self.take()
        self.expect("(")
        t = self.take()
        if t.kind != "lower":
            raise self.error("include expects a quoted file name", t)
        selection = None
        if self.at(","):
            self.take()
            self.expect("[")
            selection = []
            if not self.at("]"):
                selection.append(self.parse_name())
                while self.at(","):
                    self.take()
                    selection.append(self.parse_name())
            self.expect("]")
        self.expect(")")
        self.expect(".")
        return Include(t.value, selection)

    def parse_name(self) -> str:
        t = self.take()
        if t.kind not in ("lower", "num", "upper"):
            raise self.error("expected a formula name", t)
        return t.value

    def parse_annotated(self) -> Annotated:
        lang = self.take().value
        self.expect("(")
        name = self.parse_name()
        self.expect(",")
        role_tok = self.take()
        if role_tok.kind != "lower":
            raise self.error("expected a formula role", role_tok)
        role = role_tok.value
        self.expect(",")
        if lang == "cnf":
            formula = self.parse_cnf()
        else:
            formula = self.parse_fof()
        annotations = None
        if self.at(","):
            self.take()
            annotations = self.parse_general()
            while self.at(","):
                self.take()
                self.parse_general()
        self.expect(")")
        self.expect(".")
        return Annotated(lang, name, role, formula, self.source, annotations)

    def parse_general(self):
        """General terms in annotations: kept as nested python values."""
        t = self.tok
        if self.at("["):
            self.take()
            out = []
            if not self.at("]"):
                out.append(self.parse_general())
                while self.at(","):
                    self.take()
                    out.append(self.parse_general())
            self.expect("]")
            return out
        if t.kind in ("lower", "upper", "num", "dollar", "dquote"):
            self.take()
            if self.at("("):
                self.take()
                args = [self.parse_general()]
                while self.at(","):
                    self.take()
                    args.append(self.parse_general())
                self.expect(")")
                return (t.value, args)
            if self.at(":"):
                self.take()
                return (t.value, [self.parse_general()])
            return t.value
        raise self.error("malformed annotation")

    # -- cnf
    def parse_cnf(self):
        if self.at("("):
            self.take()
            f = self.parse_cnf()
            self.expect(")")
            return f
        lits = [self.parse_cnf_literal()]
        while self.at("|"):
            self.take()
            lits.append(self.parse_cnf_literal())
        return BinOp("|", tuple(lits)) if len(lits) > 1 else lits[0]

    def parse_cnf_literal(self):
        if self.at("~"):
            self.take()
            return Not(self.parse_cnf_literal())
        if self.at("("):
            self.take()
            f = self.parse_cnf_literal()
            self.expect(")")
            return f
        return self.parse_atomic()

    # -- fof
    def parse_fof(self):
        left = self.parse_unitary()
        t = self.tok
        if t.kind == "op" and t.value in ("&", "|"):
            op = t.value
            args = [left]
            while self.at(op):
                self.take()
                args.append(self.parse_unitary())
            if self.tok.kind == "op" and self.tok.value in ("&", "|", "=>", "<=", "<=>", "<~>", "~|", "~&"):
                raise self.error("mixed connectives need parentheses")
            return BinOp(op, tuple(args))
        if t.kind == "op" and t.value in ("=>", "<=", "<=>", "<~>", "~|", "~&"):
            self.take()
            right = self.parse_unitary()
            return BinOp(t.value, (left, right))
        return left

    def parse_unitary(self):
        t = self.tok
        if self.at("("):
            self.take()
            f = self.parse_fof()
            self.expect(")")
            return f
        if self.at("~"):
            self.take()
            return Not(self.parse_unitary())
        if self.at("!") or self.at("?"):
            self.take()
            self.expect("[")
            names = [self.parse_variable()]
            while self.at(","):
                self.take()
                names.append(self.parse_variable())
            self.expect("]")
            self.expect(":")
            return Quant(t.value, tuple(names), self.parse_unitary())
        return self.parse_atomic()

    def parse_variable(self) -> str:
        t = self.take()
        if t.kind != "upper":
            raise self.error("expected a variable", t)
        return t.value

    def parse_atomic(self):
        t = self.tok
        if t.kind == "dollar":
            self.take()
            if t.value == "$true":
                return Const(True)
            if t.value == "$false":
                return Const(False)
            raise self.error(f"unsupported defined predicate {t.value}", t)
        if t.kind == "upper":
            # a bare variable can only be the lhs of an equation
            self.parse_term()
            self._reject_equality(t)
            raise self.error("expected an atom", t)
        if t.kind not in ("lower", "num", "dquote"):
            raise self.error("expected an atom", t)
        term = self.parse_term()
        self._reject_equality(t)
        if isinstance(term, Var):
            raise self.error("expected an atom", t)
        return Atom(term.name, term.args)

    def _reject_equality(self, start: Token):
        if self.at("=") or self.at("!="):
            raise EqualityError("equality is not supported", self.source, self.tok.pos, self.text)

    def parse_term(self):
        t = self.take()
        if t.kind == "upper":
            return Var(t.value)
        if t.kind in ("lower", "num", "dquote", "dollar"):
            args = []
            if self.at("("):
                self.take()
                args.append(self.parse_term())
                while self.at(","):
                    self.take()
                    args.append(self.parse_term())
                self.expect(")")
            return Fn(t.value, tuple(args))
        raise self.error("expected a term", t)


def parse_formulas(text: str, source: str = "<input>"):
    return _Parser(text, source).parse_file()


# ---------------------------------------------------------------- problem

@dataclass
class ClauseOrigin:
    source: str
    name: str
    role: str


@dataclass
class Problem:
    name: str
    symbols: SymbolTable
    axioms: List[Clause] = field(default_factory=list)
    negated_conjecture: List[Clause] = field(default_factory=list)
    axiom_origins: List[ClauseOrigin] = field(default_factory=list)
    conjecture_origins: List[ClauseOrigin] = field(default_factory=list)

    @property
    def input_clauses(self) -> List[Clause]:
        return list(self.axioms) + list(self.negated_conjecture)

    @property
    def origins(self) -> List[ClauseOrigin]:
        return list(self.axiom_origins) + list(self.conjecture_origins)


def tptp_root(explicit: Optional[str] = None) -> Optional[Path]:
    root = explicit or os.environ.get(TPTP_ENV)
    return Path(root) if root else None


def file_resolver(base_dir: Optional[Path] = None, root: Optional[Path] = None) -> Callable[[str], str]:
    """Resolve include paths against the including file's directory, then the TPTP root."""
    root = root if root is not None else tptp_root()

    def resolve(path: str) -> str:
        candidates = []
        p = Path(path)
        if p.is_absolute():
            candidates.append(p)
        else:
            if base_dir is not None:
                candidates.append(base_dir / p)
            if root is not None:
                candidates.append(root / p)
            candidates.append(Path.cwd() / p)
        for c in candidates:
            if c.is_file():
                return c.read_text()
        raise IncludeError(f"cannot resolve include {path!r}", source=path)

    return resolve


class _Clausifier:
    def __init__(self, symbols: SymbolTable, source: str):
        self.symbols = symbols
        self.source = source
        self.skolem_count = 0

    # -- term conversion
    def term(self, t, env: Dict[str, Term]) -> Term:
        if isinstance(t, Var):
            v = env.get(t.name)
            if v is None:
                raise TPTPError(f"unbound variable {t.name}", self.source)
            return v
        sym = self.symbols.function(t.name, len(t.args))
        return (sym,) + tuple(self.term(a, env) for a in t.args)

    def atom(self, a: Atom, env) -> tuple:
        pred = self.symbols.predicate(a.name, len(a.args))
        return (pred,) + tuple(self.term(x, env) for x in a.args)

    def fresh_skolem(self, arity: int) -> int:
        while True:
            name = f"sk{self.skolem_count}"
            self.skolem_count += 1
            if name not in self.symbols:
                return self.symbols.function(name, arity)

    # -- nnf with skolemization; variables become placeholder ints
    def nnf(self, f, positive: bool, env: Dict[str, Term], universals: list, vcount):
        """Return a nested ('and'|'or'|'lit'|'const', ...) structure in negation normal form."""
        if isinstance(f, Const):
            return ("const", f.value == positive)
        if isinstance(f, Atom):
            return ("lit", (positive, self.atom(f, env)))
        if isinstance(f, Not):
            return self.nnf(f.arg, not positive, env, universals, vcount)
        if isinstance(f, Quant):
            universal = (f.kind == "!") == positive
            env = dict(env)
            if universal:
                universals = list(universals)
                for name in f.names:
                    v = next(vcount)
                    env[name] = v
                    universals.append(v)
            else:
                for name in f.names:
                    sym = self.fresh_skolem(len(universals))
                    env[name] = (sym,) + tuple(universals)
            return self.nnf(f.body, positive, env, universals, vcount)
        if isinstance(f, BinOp):
            op, args = f.op, f.args
            if op in ("&", "|"):
                is_and = (op == "&") == positive
                parts = [self.nnf(a, positive, env, universals, vcount) for a in args]
                return ("and" if is_and else "or", parts)
            a, b = args
            if op == "=>":
                return self.nnf(BinOp("|", (Not(a), b)), positive, env, universals, vcount)
            if op == "<=":
                return self.nnf(BinOp("|", (a, Not(b))), positive, env, universals, vcount)
            if op == "~|":
                return self.nnf(Not(BinOp("|", (a, b))), positive, env, universals, vcount)
            if op == "~&":
                return self.nnf(Not(BinOp("&", (a, b))), positive, env, universals, vcount)
            if op == "<~>":
                return self.nnf(Not(BinOp("<=>", (a, b))), positive, env, universals, vcount)
            if op == "<=>":
                if positive:
                    g = BinOp("&", (BinOp("|", (Not(a), b)), BinOp("|", (a, Not(b)))))
                else:
                    g = BinOp("|", (BinOp("&", (a, Not(b))), BinOp("&", (Not(a), b))))
                    return self.nnf(g, True, env, universals, vcount)
                return self.nnf(g, True, env, universals, vcount)
        raise TPTPError(f"cannot clausify {f!r}", self.source)

    def cnf(self, node) -> Optional[List[list]]:
        """Distribute to a list of literal lists; None means the formula is true."""
        kind = node[0]
        if kind == "const":
            return None if node[1] else [[]]
        if kind == "lit":
            return [[node[1]]]
        if kind == "and":
            out = []
            for part in node[1]:
                sub = self.cnf(part)
                if sub is None:
                    continue
                out.extend(sub)
            return out
        # or
        acc: Optional[List[list]] = [[]]
        for part in node[1]:
            sub = self.cnf(part)
            if sub is None:
                return None
            acc = [a + b for a in acc for b in sub]
        return acc

    def clausify(self, f, free_vars: Sequence[str] = ()) -> List[Clause]:
        vcount = itertools.count()
        env: Dict[str, Term] = {}
        universals = []
        for name in free_vars:
            v = next(vcount)
            env[name] = v
            universals.append(v)
        node = self.nnf(f, True, env, universals, vcount)
        lists = self.cnf(node)
        if lists is None:
            return []
        return [Clause(lits) for lits in lists]


def _free_vars(f, bound=frozenset()) -> List[str]:
    out: Dict[str, None] = {}

    def term(t, bound):
        if isinstance(t, Var):
            if t.name not in bound:
                out.setdefault(t.name, None)
        elif isinstance(t, Fn):
            for a in t.args:
                term(a, bound)

    def walk(g, bound):
        if isinstance(g, Atom):
            for a in g.args:
                term(a, bound)
        elif isinstance(g, Not):
            walk(g.arg, bound)
        elif isinstance(g, BinOp):
            for a in g.args:
                walk(a, bound)
        elif isinstance(g, Quant):
            walk(g.body, bound | set(g.names))

    walk(f, bound)
    return list(out)


def clausify(f: Formula, symbols: SymbolTable, source: str = "<formula>") -> List[Clause]:
    """Clausify one closed (or implicitly universally closed) formula."""
    c = _Clausifier(symbols, source)
    return c.clausify(f, _free_vars(f))


def _collect(text: str, source: str, resolver, selection=None, depth=0) -> List[Annotated]:
    if depth > 32:
        raise IncludeError("include nesting too deep", source)
    out = []
    for item in parse_formulas(text, source):
        if isinstance(item, Include):
            try:
                inc_text = resolver(item.path)
            except IncludeError:
                raise
            except OSError as e:
                raise IncludeError(f"cannot read include {item.path!r}: {e}", source) from e
            out.extend(_collect(inc_text, item.path, resolver, item.selection, depth + 1))
        else:
            if selection is not None and item.name not in selection:
                continue
            out.append(item)
    return out


def parse_problem(
    text: str,
    include_resolver: Optional[Callable[[str], str]] = None,
    name: str = "problem",
    source: Optional[str] = None,
    symbols: Optional[SymbolTable] = None,
) -> Problem:
    """Parse a TPTP problem into axiom and negated-conjecture clauses."""
    source = source or name
    if include_resolver is None:
        include_resolver = file_resolver()
    items = _collect(text, source, include_resolver)
    symbols = symbols if symbols is not None else SymbolTable()
    problem = Problem(name=name, symbols=symbols)
    clausifier = _Clausifier(symbols, source)
    conjectures = []
    try:
        for item in items:
            if item.role not in KNOWN_ROLES:
                raise TPTPError(f"unsupported role {item.role!r} for {item.name}", item.source)
            if item.language == "cnf":
                clauses = [_cnf_clause(item.formula, symbols, item.source)]
                clauses = [c for c in clauses if c is not None]
            elif item.role == "conjecture":
                conjectures.append(item)
                continue
            else:
                clauses = clausifier.clausify(item.formula, _free_vars(item.formula))
            origin = ClauseOrigin(item.source, item.name, item.role)
            if item.role == "conjecture" or item.role == "negated_conjecture":
                if item.role == "conjecture":
                    # a cnf conjecture is a universally closed clause: negate it
                    clauses = clausifier.clausify(Not(_quantify_free(item.formula)))
                problem.negated_conjecture.extend(clauses)
                problem.conjecture_origins.extend([origin] * len(clauses))
            else:
                problem.axioms.extend(clauses)
                problem.axiom_origins.extend([origin] * len(clauses))
        if conjectures:
            body = conjectures[0].formula if len(conjectures) == 1 else BinOp(
                "&", tuple(_quantify_free(c.formula) for c in conjectures)
            )
            clauses = clausifier.clausify(Not(_quantify_free(body)))
            problem.negated_conjecture.extend(clauses)
            problem.conjecture_origins.extend(
                [ClauseOrigin(conjectures[0].source, ",".join(c.name for c in conjectures), "conjecture")]
                * len(clauses)
            )
    except TPTPError:
        raise
    except ValueError as e:  # arity conflicts
        raise TPTPError(str(e), source) from e
    return problem


def _quantify_free(f):
    names = _free_vars(f)
    return Quant("!", tuple(names), f) if names else f


def _cnf_clause(f, symbols: SymbolTable, source: str) -> Optional[Clause]:
    lits = []
    env: Dict[str, int] = {}
    vcount = itertools.count()

    def term(t):
        if isinstance(t, Var):
            v = env.get(t.name)
            if v is None:
                v = env[t.name] = next(vcount)
            return v
        sym = symbols.function(t.name, len(t.args))
        return (sym,) + tuple(term(a) for a in t.args)

    def literal(g, positive=True):
        if isinstance(g, Not):
            return literal(g.arg, not positive)
        if isinstance(g, Const):
            return g.value == positive
        pred = symbols.predicate(g.name, len(g.args))
        return (positive, (pred,) + tuple(term(a) for a in g.args))

    parts = f.args if isinstance(f, BinOp) else (f,)
    for g in parts:
        lit = literal(g)
        if lit is True:
            return None
        if lit is False:
            continue
        lits.append(lit)
    return Clause(lits)


def load_problem(path, tptp_dir: Optional[str] = None) -> Problem:
    path = Path(path)
    resolver = file_resolver(path.parent, tptp_root(tptp_dir))
    return parse_problem(path.read_text(), resolver, name=path.stem, source=str(path))


def parse_clause(text: str, symbols: SymbolTable) -> Clause:
    """Parse a single cnf formula body such as ``p(X) | ~q(X)``."""
    p = _Parser(text, "<clause>")
    f = p.parse_cnf()
    if p.tok.kind != "eof":
        raise p.error("trailing input after clause")
    c = _cnf_clause(f, symbols, "<clause>")
    return c if c is not None else Clause([])


# ---------------------------------------------------------------- printing

_LOWER_WORD = re.compile(r"[a-z][a-zA-Z0-9_]*\Z")
_NUMBER = re.compile(r"[+-]?[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?(?:/[0-9]+)?\Z")


def format_name(name: str) -> str:
    if _LOWER_WORD.match(name) or _NUMBER.match(name) or name.startswith('"'):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_term(t: Term, symbols: SymbolTable, names: Dict[int, str]) -> str:
    if type(t) is int:
        n = names.get(t)
        if n is None:
            n = names[t] = f"X{len(names)}"
        return n
    head = format_name(symbols.name(t[0]))
    if len(t) == 1:
        return head
    return head + "(" + ",".join(format_term(a, symbols, names) for a in t[1:]) + ")"


def format_clause(c: Clause, symbols: SymbolTable) -> str:
    """TPTP cnf syntax; variables are named X0, X1, ... by first occurrence."""
    if not c.literals:
        return "$false"
    names: Dict[int, str] = {}
    parts = []
    for pos, atom in c.literals:
        s = format_term(atom, symbols, names)
        parts.append(s if pos else "~" + s)
    return " | ".join(parts)


def format_problem(problem: Problem) -> str:
    lines = []
    for i, c in enumerate(problem.axioms):
        lines.append(f"cnf(a{i}, axiom, {format_clause(c, problem.symbols)}).")
    for i, c in enumerate(problem.negated_conjecture):
        lines.append(f"cnf(c{i}, negated_conjecture, {format_clause(c, problem.symbols)}).")
    return "\n".join(lines) + "\n"
