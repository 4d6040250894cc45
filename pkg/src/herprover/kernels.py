"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise, or when
``HERPROVER_PURE_PYTHON=1`` is set, the pure-Python twin is used.
"""

import os

from herprover import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("HERPROVER_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from herprover import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        _impl = _ckernels
        BACKEND = "cython"

term_size = _impl.term_size
apply_term = _impl.apply_term
apply_literals = _impl.apply_literals
rename_literals = _impl.rename_literals
unify = _impl.unify
match = _impl.match
subsumes = _impl.subsumes
variant = _impl.variant


def backends():
    """Return every importable backend module keyed by name."""
    found = {"python": _pykernels}
    try:
        from herprover import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
