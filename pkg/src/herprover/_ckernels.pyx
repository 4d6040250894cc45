# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twins of the kernels in ``_pykernels``.

Same term representation and semantics; see that module for the layout.
"""


cpdef Py_ssize_t term_size(object t):
    cdef Py_ssize_t n, i, k
    if type(t) is int:
        return 1
    n = 1
    k = len(<tuple>t)
    for i in range(1, k):
        n += term_size((<tuple>t)[i])
    return n


cpdef object apply_term(object t, dict subst):
    cdef tuple tt
    cdef Py_ssize_t i, k
    cdef list out
    if type(t) is int:
        return subst.get(t, t)
    tt = <tuple>t
    k = len(tt)
    if k == 1:
        return tt
    out = [tt[0]]
    for i in range(1, k):
        out.append(apply_term(tt[i], subst))
    return tuple(out)


cpdef tuple apply_literals(tuple lits, dict subst):
    cdef list out = []
    cdef set seen = set()
    cdef tuple lit, new
    for lit in lits:
        new = (lit[0], apply_term(lit[1], subst))
        if new not in seen:
            seen.add(new)
            out.append(new)
    return tuple(out)


cdef object _ren(object t, dict mapping, object counter):
    cdef tuple tt
    cdef Py_ssize_t i, k
    cdef list out
    if type(t) is int:
        v = mapping.get(t)
        if v is None:
            v = next(counter)
            mapping[t] = v
        return v
    tt = <tuple>t
    k = len(tt)
    if k == 1:
        return tt
    out = [tt[0]]
    for i in range(1, k):
        out.append(_ren(tt[i], mapping, counter))
    return tuple(out)


cpdef tuple rename_literals(tuple lits, dict mapping, object counter):
    cdef tuple lit
    return tuple([(lit[0], _ren(lit[1], mapping, counter)) for lit in lits])


cdef inline object _walk(object t, dict bind):
    while type(t) is int:
        nxt = bind.get(t)
        if nxt is None:
            return t
        t = nxt
    return t


cdef bint _occurs(object v, object t, dict bind):
    cdef list stack = [t]
    cdef tuple st
    cdef Py_ssize_t i
    while stack:
        s = _walk(stack.pop(), bind)
        if type(s) is int:
            if s == v:
                return True
        else:
            st = <tuple>s
            for i in range(1, len(st)):
                stack.append(st[i])
    return False


cdef object _resolve(object t, dict bind):
    cdef tuple tt
    cdef Py_ssize_t i, k
    cdef list out
    t = _walk(t, bind)
    if type(t) is int:
        return t
    tt = <tuple>t
    k = len(tt)
    if k == 1:
        return tt
    out = [tt[0]]
    for i in range(1, k):
        out.append(_resolve(tt[i], bind))
    return tuple(out)


cpdef object unify(object a, object b):
    cdef dict bind = {}
    cdef list stack = [(a, b)]
    cdef tuple ss, tt, pair
    cdef Py_ssize_t n, i
    while stack:
        pair = <tuple>stack.pop()
        s = _walk(pair[0], bind)
        t = _walk(pair[1], bind)
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
            ss = <tuple>s
            tt = <tuple>t
            n = len(ss)
            if n != len(tt) or ss[0] != tt[0]:
                return None
            if ss == tt:
                continue
            for i in range(1, n):
                stack.append((ss[i], tt[i]))
    return {v: _resolve(t, bind) for v, t in bind.items()}


cdef bint _match(object p, object t, dict subst, list trail):
    cdef tuple pp, tt
    cdef Py_ssize_t n, i
    if type(p) is int:
        bound = subst.get(p)
        if bound is None:
            subst[p] = t
            trail.append(p)
            return True
        return bound == t
    if type(t) is int:
        return False
    pp = <tuple>p
    tt = <tuple>t
    n = len(pp)
    if n != len(tt) or pp[0] != tt[0]:
        return False
    for i in range(1, n):
        if not _match(pp[i], tt[i], subst, trail):
            return False
    return True


cpdef object match(object pattern, object target, dict subst=None):
    subst = {} if subst is None else dict(subst)
    if _match(pattern, target, subst, []):
        return subst
    return None


cdef bint _multiset_included(tuple lits1, tuple lits2):
    cdef dict counts = {}
    cdef tuple lit
    for lit in lits2:
        k = (lit[0], (<tuple>lit[1])[0])
        counts[k] = counts.get(k, 0) + 1
    for lit in lits1:
        k = (lit[0], (<tuple>lit[1])[0])
        c = counts.get(k, 0)
        if c == 0:
            return False
        counts[k] = c - 1
    return True


cdef bint _preds_included(tuple lits1, tuple lits2):
    cdef tuple lit
    keys = set()
    for lit in lits2:
        keys.add((lit[0], (<tuple>lit[1])[0]))
    for lit in lits1:
        if (lit[0], (<tuple>lit[1])[0]) not in keys:
            return False
    return True


cdef bint _subsume_rec(Py_ssize_t i, list order, tuple lits1, tuple lits2, dict subst):
    cdef tuple lit, lit2, atom, atom2
    cdef Py_ssize_t j
    cdef list trail
    if i == len(order):
        return True
    lit = <tuple>lits1[<Py_ssize_t>order[i]]
    atom = <tuple>lit[1]
    for j in range(len(lits2)):
        lit2 = <tuple>lits2[j]
        atom2 = <tuple>lit2[1]
        if lit2[0] != lit[0] or atom2[0] != atom[0]:
            continue
        trail = []
        if _match(atom, atom2, subst, trail):
            if _subsume_rec(i + 1, order, lits1, lits2, subst):
                return True
        for v in trail:
            del subst[v]
    return False


cpdef bint subsumes(tuple lits1, tuple lits2):
    cdef Py_ssize_t k
    if len(lits1) > len(lits2):
        return False
    if not _preds_included(lits1, lits2):
        return False
    sizes = [-term_size((<tuple>lits1[k])[1]) for k in range(len(lits1))]
    order = sorted(range(len(lits1)), key=sizes.__getitem__)
    return _subsume_rec(0, order, lits1, lits2, {})


cdef bint _vmatch(object p, object t, dict fwd, dict bwd, list trail):
    cdef tuple pp, tt
    cdef Py_ssize_t n, i
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
    pp = <tuple>p
    tt = <tuple>t
    n = len(pp)
    if n != len(tt) or pp[0] != tt[0]:
        return False
    for i in range(1, n):
        if not _vmatch(pp[i], tt[i], fwd, bwd, trail):
            return False
    return True


cdef bint _variant_rec(Py_ssize_t i, tuple lits1, tuple lits2, list used,
                       dict fwd, dict bwd):
    cdef tuple lit, lit2, atom, atom2
    cdef Py_ssize_t j
    cdef list trail
    if i == len(lits1):
        return True
    lit = <tuple>lits1[i]
    atom = <tuple>lit[1]
    for j in range(len(lits2)):
        if used[j]:
            continue
        lit2 = <tuple>lits2[j]
        atom2 = <tuple>lit2[1]
        if lit2[0] != lit[0] or atom2[0] != atom[0]:
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


cpdef bint variant(tuple lits1, tuple lits2):
    if len(lits1) != len(lits2):
        return False
    if not _multiset_included(lits1, lits2):
        return False
    return _variant_rec(0, lits1, lits2, [False] * len(lits2), {}, {})
