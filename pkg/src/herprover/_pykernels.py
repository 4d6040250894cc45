"""Pure-Python hot kernels: substitution, unification, matching, subsumption.

Representation shared with the compiled backend:

* a variable is a non-negative ``int``;
* an application is a ``tuple`` ``(symbol_id, arg0, arg1, ...)``; constants
  are 1-tuples;
* an atom is an application whose head is a predicate id;
* a literal is a 2-tuple ``(positive, atom)``.

Every function here has a twin in ``_ckernels.pyx`` with identical semantics.
"""


def term_size(t):
    if type(t) is int:
        return 1
    n = 1
    for a in t[1:]:
        n += term_size(a)
    return n


def apply_term(t, subst):
    """Apply a fully-resolved substitution to a term."""
    if type(t) is int:
        return subst.get(t, t)
    if len(t) == 1:
        return t
    return (t[0],) + tuple([apply_term(a, subst) for a in t[1:]])


def apply_literals(lits, subst):
    out = []
    seen = set()
    for pos, atom in lits:
        lit = (pos, apply_term(atom, subst))
        if lit not in seen:
            seen.add(lit)
            out.append(lit)
    return tuple(out)


def rename_literals(lits, mapping, counter):
    """Rename variables of ``lits`` using ``mapping``, drawing new ids from ``counter``."""

    def ren(t):
        if type(t) is int:
            v = mapping.get(t)
            if v is None:
                v = next(counter)
                mapping[t] = v
            return v
        if len(t) == 1:
            return t
        return (t[0],) + tuple([ren(a) for a in t[1:]])

    return tuple([(pos, ren(atom)) for pos, atom in lits])


def _walk(t, bind):
    while type(t) is int:
        nxt = bind.get(t)
        if nxt is None:
            return t
        t = nxt
    return t


def _occurs(v, t, bind):
    stack = [t]
    while stack:
        s = _walk(stack.pop(), bind)
        if type(s) is int:
            if s == v:
                return True
        else:
            stack.extend(s[1:])
    return False


def _resolve(t, bind):
    t = _walk(t, bind)
    if type(t) is int or len(t) == 1:
        return t
    return (t[0],) + tuple([_resolve(a, bind) for a in t[1:]])


def unify(a, b):
    """Most general unifier of two terms (or atoms) as a resolved dict, or None."""
    bind = {}
    stack = [(a, b)]
    while stack:
        s, t = stack.pop()
        s = _walk(s, bind)
        t = _walk(t, bind)
        if s is t:
            continue
        if type(s) is int:
            if type(t) is int:
                if s != t:
                    bind[s] = t
                continue
            if _occurs(s, t, bind):
                return None
            bind[s] = t
        elif type(t) is int:
            if _occurs(t, s, bind):
                return None
            bind[t] = s
        else:
            n = len(s)
            if n != len(t) or s[0] != t[0]:
                return None
            if s == t:
                continue
            for i in range(1, n):
                stack.append((s[i], t[i]))
    return {v: _resolve(t, bind) for v, t in bind.items()}


def _match(p, t, subst, trail):
    if type(p) is int:
        bound = subst.get(p)
        if bound is None:
            subst[p] = t
            trail.append(p)
            return True
        return bound == t
    if type(t) is int:
        return False
    n = len(p)
    if n != len(t) or p[0] != t[0]:
        return False
    for i in range(1, n):
        if not _match(p[i], t[i], subst, trail):
            return False
    return True


def match(pattern, target, subst=None):
    """One-way matching: extend ``subst`` so that pattern instantiates to target.

    Target variables are treated as constants.  Returns the substitution or None.
    """
    subst = {} if subst is None else dict(subst)
    if _match(pattern, target, subst, []):
        return subst
    return None


def _pred_key(lit):
    return (lit[0], lit[1][0])


def _multiset_included(lits1, lits2):
    counts = {}
    for lit in lits2:
        k = _pred_key(lit)
        counts[k] = counts.get(k, 0) + 1
    for lit in lits1:
        k = _pred_key(lit)
        c = counts.get(k, 0)
        if c == 0:
            return False
        counts[k] = c - 1
    return True


def _preds_included(lits1, lits2):
    keys = {_pred_key(lit) for lit in lits2}
    return all(_pred_key(lit) in keys for lit in lits1)


def _subsume_rec(i, order, lits1, lits2, subst):
    if i == len(order):
        return True
    pos, atom = lits1[order[i]]
    for pos2, atom2 in lits2:
        if pos2 != pos or atom2[0] != atom[0]:
            continue
        trail = []
        if _match(atom, atom2, subst, trail):
            if _subsume_rec(i + 1, order, lits1, lits2, subst):
                return True
        for v in trail:
            del subst[v]
    return False


def subsumes(lits1, lits2):
    """Some substitution maps every literal of ``lits1`` into ``lits2``.

    Clauses with more literals than ``lits2`` never subsume it; without this
    condition a clause would subsume its own factors.
    """
    if len(lits1) > len(lits2):
        return False
    if not _preds_included(lits1, lits2):
        return False
    order = sorted(range(len(lits1)), key=lambda k: -term_size(lits1[k][1]))
    return _subsume_rec(0, order, lits1, lits2, {})


def _vmatch(p, t, fwd, bwd, trail):
    if type(p) is int:
        if type(t) is not int:
            return False
        b = fwd.get(p)
        if b is None:
            if t in bwd:
                return False
            fwd[p] = t
            bwd[t] = p
            trail.append(p)
            return True
        return b == t
    if type(t) is int:
        return False
    n = len(p)
    if n != len(t) or p[0] != t[0]:
        return False
    for i in range(1, n):
        if not _vmatch(p[i], t[i], fwd, bwd, trail):
            return False
    return True


def _variant_rec(i, lits1, lits2, used, fwd, bwd):
    if i == len(lits1):
        return True
    pos, atom = lits1[i]
    for j in range(len(lits2)):
        if used[j]:
            continue
        pos2, atom2 = lits2[j]
        if pos2 != pos or atom2[0] != atom[0]:
            continue
        trail = []
        if _vmatch(atom, atom2, fwd, bwd, trail):
            used[j] = True
            if _variant_rec(i + 1, lits1, lits2, used, fwd, bwd):
                return True
            used[j] = False
        for v in trail:
            del bwd[fwd.pop(v)]
    return False


def variant(lits1, lits2):
    """True iff the literal sets are equal up to a variable bijection."""
    if len(lits1) != len(lits2):
        return False
    if not _multiset_included(lits1, lits2):
        return False
    return _variant_rec(0, lits1, lits2, [False] * len(lits2), {}, {})
