"""Clause graphs, node features and Laplacian spectral encodings.

A clause becomes a DAG: one clause node, its literal nodes, then argument
nodes (atomic-term for applications, variable-term for variable
occurrences); every variable-term node points to the single variable node
of its variable.  Nodes are numbered in level order from the root, children
in argument order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from herprover.fol import Clause, SymbolTable

CLAUSE, LITERAL, ATOMIC_TERM, VARIABLE_TERM, VARIABLE = range(5)
NODE_TYPES = ("clause", "literal", "atomic-term", "variable-term", "variable")

ROLE_X, ROLE_GOAL, ROLE_CONJECTURE = range(3)
ROLES = {"x": ROLE_X, "g": ROLE_GOAL, "conjecture": ROLE_CONJECTURE}

HASH_DIM = 64
SPECTRAL_DIM = 64
MAX_NODES = 128
FEATURE_DIM = 3 + 5 + 2 + HASH_DIM + HASH_DIM  # 138

_ROLE = slice(0, 3)
_TYPE = slice(3, 8)
_POLARITY = slice(8, 10)
_SYMBOL = slice(10, 10 + HASH_DIM)
_SLOT = slice(10 + HASH_DIM, 10 + 2 * HASH_DIM)


@dataclass
class Node:
    type: int
    polarity: Optional[bool] = None
    symbol: Optional[str] = None
    slot: Optional[Tuple[str, int]] = None
    # literal index and argument path of the source sub-expression
    ref: tuple = ()


@dataclass
class ClauseGraph:
    nodes: List[Node] = field(default_factory=list)
    edges: List[Tuple[int, int]] = field(default_factory=list)
    role: int = ROLE_X

    def __len__(self) -> int:
        return len(self.nodes)

    def children(self, i: int) -> List[int]:
        return [c for p, c in self.edges if p == i]

    def parents(self, i: int) -> List[int]:
        return [p for p, c in self.edges if c == i]


def _role_index(role) -> int:
    if isinstance(role, str):
        return ROLES[role]
    return int(role)


def build_graph(c: Clause, role="x", symbols: SymbolTable = None) -> ClauseGraph:
    """Level-ordered clause graph of ``c``."""
    g = ClauseGraph(role=_role_index(role))
    g.nodes.append(Node(CLAUSE))
    var_nodes = {}
    # items: (node index, term or None, polarity, literal index, path)
    queue = []
    for li, (pos, atom) in enumerate(c.literals):
        idx = len(g.nodes)
        g.nodes.append(Node(LITERAL, pos, symbols.name(atom[0]), None, (li,)))
        g.edges.append((0, idx))
        queue.append((idx, atom, pos, (li,)))
    head = 0
    while head < len(queue):
        parent_idx, term, pos, path = queue[head]
        head += 1
        if type(term) is int:
            # variable-term node: link to the shared variable node
            v = var_nodes.get(term)
            if v is None:
                v = len(g.nodes)
                g.nodes.append(Node(VARIABLE, None, None, None, path))
                var_nodes[term] = v
            g.edges.append((parent_idx, v))
            continue
        parent_name = symbols.name(term[0])
        for ai, arg in enumerate(term[1:], start=1):
            idx = len(g.nodes)
            sub = path + (ai,)
            if type(arg) is int:
                g.nodes.append(Node(VARIABLE_TERM, pos, None, (parent_name, ai), sub))
                g.edges.append((parent_idx, idx))
                queue.append((idx, arg, pos, sub))
            else:
                g.nodes.append(Node(ATOMIC_TERM, pos, symbols.name(arg[0]), (parent_name, ai), sub))
                g.edges.append((parent_idx, idx))
                queue.append((idx, arg, pos, sub))
    return g


@lru_cache(maxsize=65536)
def _hash_vector(seed: str) -> np.ndarray:
    digest = hashlib.sha256(seed.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:16], "little"))
    v = rng.standard_normal(HASH_DIM)
    v /= np.linalg.norm(v)
    v.setflags(write=False)
    return v


def hash_vector(seed_string: str) -> np.ndarray:
    """Deterministic point on the unit sphere in 64 dimensions."""
    if not seed_string:
        raise ValueError("seed must be nonempty")
    return _hash_vector(seed_string)


def symbol_seed(name: str) -> str:
    return f"symbol:{name}"


def slot_seed(parent: str, index: int) -> str:
    return f"slot:{parent}:{index}"


def node_features(g: ClauseGraph, role=None) -> np.ndarray:
    """Feature matrix of shape (len(g), 138)."""
    r = g.role if role is None else _role_index(role)
    out = np.zeros((len(g.nodes), FEATURE_DIM))
    out[:, r] = 1.0
    for i, node in enumerate(g.nodes):
        out[i, _TYPE.start + node.type] = 1.0
        if node.polarity is not None and node.type in (LITERAL, ATOMIC_TERM, VARIABLE_TERM):
            out[i, _POLARITY.start + (0 if node.polarity else 1)] = 1.0
        if node.symbol is not None and node.type in (LITERAL, ATOMIC_TERM):
            out[i, _SYMBOL] = hash_vector(symbol_seed(node.symbol))
        if node.slot is not None and node.type in (ATOMIC_TERM, VARIABLE_TERM):
            out[i, _SLOT] = hash_vector(slot_seed(*node.slot))
    return out


def _laplacian(n: int, edges) -> np.ndarray:
    a = np.zeros((n, n))
    for p, c in edges:
        if p != c:
            a[p, c] = 1.0
            a[c, p] = 1.0
    return np.diag(a.sum(axis=1)) - a


def laplacian(g: ClauseGraph) -> np.ndarray:
    return _laplacian(len(g.nodes), g.edges)


def _fix_signs(vecs: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    # flip each column so its first entry above tol is positive
    big = np.abs(vecs) > tol
    first = big.argmax(axis=0)
    cols = np.arange(vecs.shape[1])
    flip = big[first, cols] & (vecs[first, cols] < 0)
    vecs[:, flip] *= -1.0
    return vecs


@lru_cache(maxsize=16384)
def _skeleton_eigen(n: int, edges: tuple) -> Tuple[np.ndarray, np.ndarray]:
    # the Laplacian only sees the skeleton, so clauses of equal shape share it
    lap = _laplacian(n, edges)
    vals, vecs = np.linalg.eigh(lap)
    tol = 1e-8 * max(1.0, float(np.abs(vals).max(initial=0.0)))
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and vals[stop] - vals[stop - 1] <= tol:
            stop += 1
        m = stop - start
        if m > 1:
            basis = vecs[:, start:stop]
            probe = np.random.default_rng(n * 7919 + start).standard_normal((n, m))
            q, _ = np.linalg.qr(basis @ (basis.T @ probe))
            vecs[:, start:stop] = q
            vals[start:stop] = vals[start:stop].mean()
        start = stop
    vecs = _fix_signs(vecs)
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return vals, vecs


def laplacian_eigen(g: ClauseGraph) -> Tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and a deterministic orthonormal eigenbasis.

    Repeated eigenvalues get a basis obtained by projecting a fixed-seed
    matrix onto the eigenspace and orthonormalizing, so the result does not
    depend on the LAPACK driver's arbitrary choice within the eigenspace.
    """
    vals, vecs = _skeleton_eigen(len(g.nodes), tuple(g.edges))
    return vals.copy(), vecs.copy()


def spectral_encoding(g: ClauseGraph, dim: int = SPECTRAL_DIM) -> np.ndarray:
    """Per-node coordinates on the ``dim`` lowest-frequency Laplacian eigenvectors."""
    _, vecs = _skeleton_eigen(len(g.nodes), tuple(g.edges))
    n = vecs.shape[0]
    out = np.zeros((n, dim))
    k = min(dim, vecs.shape[1])
    out[:, :k] = vecs[:, :k]
    return out


@dataclass
class ClauseGraphInput:
    features: np.ndarray  # (n, 138) float32
    spectral: np.ndarray  # (n, 64) float32
    root_index: int = 0
    # (role, clause index, node count kept) per graph, for inspection
    segments: List[Tuple[int, int, int]] = field(default_factory=list)

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]


def encode_clause(c: Clause, role, symbols: SymbolTable) -> Tuple[np.ndarray, np.ndarray]:
    g = build_graph(c, role, symbols)
    return node_features(g).astype(np.float32), spectral_encoding(g).astype(np.float32)


def assemble_encoded(parts: Sequence[Tuple[int, np.ndarray, np.ndarray]], max_nodes: int = MAX_NODES) -> ClauseGraphInput:
    """Concatenate pre-encoded graphs in priority order and truncate."""
    feats, specs, segments = [], [], []
    room = max_nodes
    for k, (role, f, s) in enumerate(parts):
        if room <= 0:
            segments.append((role, k, 0))
            continue
        take = min(room, f.shape[0])
        feats.append(f[:take])
        specs.append(s[:take])
        segments.append((role, k, take))
        room -= take
    return ClauseGraphInput(np.concatenate(feats), np.concatenate(specs), 0, segments)


def assemble_input(x: Clause, g: Clause, conj: Sequence[Clause], symbols: SymbolTable,
                   max_nodes: int = MAX_NODES) -> ClauseGraphInput:
    """Scorer input for clause ``x``, goal ``g`` and negated-conjecture clauses."""
    parts = [(ROLE_X,) + encode_clause(x, ROLE_X, symbols), (ROLE_GOAL,) + encode_clause(g, ROLE_GOAL, symbols)]
    for c in conj:
        parts.append((ROLE_CONJECTURE,) + encode_clause(c, ROLE_CONJECTURE, symbols))
    return assemble_encoded(parts, max_nodes)
