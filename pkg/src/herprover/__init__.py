"""Saturation prover for equality-free first-order logic that learns its clause
selection from hindsight-relabeled proof attempts."""

__version__ = "0.1.0"

from herprover.fol import Clause, SymbolTable, apply, is_variant, rename_fresh, tree_size, unify
from herprover.kernels import BACKEND

__all__ = [
    "BACKEND",
    "Clause",
    "SymbolTable",
    "apply",
    "is_variant",
    "rename_fresh",
    "tree_size",
    "unify",
]
