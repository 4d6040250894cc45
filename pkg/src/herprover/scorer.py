"""Transformer clause scorer: in-proofness probability of ``x`` for goal ``g``.

Node features are linearly embedded, the node's spectral encoding is
projected and added in place of a positional encoding, a pre-norm
Transformer encoder runs over the (masked) node set, and the output at the
root of ``x`` is projected to one logit.
"""

from __future__ import annotations

import io
import json
import math
import struct
import threading
from dataclasses import asdict, dataclass, fields
from typing import List, Optional, Sequence

import numpy as np
import torch
from torch import nn

from herprover.clause_graph import FEATURE_DIM, SPECTRAL_DIM, ClauseGraphInput

SNAPSHOT_MAGIC = b"HERSNAP1"
WARMUP_UPDATES = 1000


class ConfigurationError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


class SnapshotError(ValueError):
    pass


@dataclass
class ScorerConfig:
    layers: int = 2
    heads: int = 4
    width: int = 64
    ff: int = 128
    head_dim: int = 16
    dropout: float = 0.1
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 256
    min_fill: int = 2048
    feature_dim: int = FEATURE_DIM
    spectral_dim: int = SPECTRAL_DIM
    seed: int = 0

    def __post_init__(self):
        for name in ("layers", "heads", "width", "ff", "head_dim", "batch_size", "min_fill"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.width % self.heads:
            raise ConfigurationError("width must be divisible by heads")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError("dropout must lie in [0, 1)")
        if self.lr <= 0 or self.eps <= 0:
            raise ConfigurationError("lr and eps must be positive")

    @classmethod
    def full_scale(cls, **overrides) -> "ScorerConfig":
        """Full-scale values: 3 layers, 8 heads of 64, width 512, batch 2560."""
        base = dict(layers=3, heads=8, width=512, ff=1024, head_dim=64, dropout=0.1,
                    lr=1e-3, batch_size=2560, min_fill=65536)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_dict(cls, d: dict) -> "ScorerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown scorer config keys {sorted(unknown)}")
        return cls(**d)


class _Attention(nn.Module):
    def __init__(self, cfg: ScorerConfig):
        super().__init__()
        self.heads = cfg.heads
        self.head_dim = cfg.head_dim
        inner = cfg.heads * cfg.head_dim
        self.qkv = nn.Linear(cfg.width, 3 * inner)
        self.out = nn.Linear(inner, cfg.width)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x, pad_mask):
        b, n, _ = x.shape
        q, k, v = self.qkv(x).view(b, n, 3, self.heads, self.head_dim).permute(2, 0, 3, 1, 4)
        att = (q @ k.transpose(-1, -2)) / math.sqrt(self.head_dim)
        att = att.masked_fill(pad_mask[:, None, None, :], float("-inf"))
        att = self.drop(torch.softmax(att, dim=-1))
        y = (att @ v).transpose(1, 2).reshape(b, n, self.heads * self.head_dim)
        return self.out(y)


class _Block(nn.Module):
    def __init__(self, cfg: ScorerConfig):
        super().__init__()
        self.norm1 = nn.LayerNorm(cfg.width)
        self.attn = _Attention(cfg)
        self.norm2 = nn.LayerNorm(cfg.width)
        self.ff = nn.Sequential(
            nn.Linear(cfg.width, cfg.ff), nn.ReLU(), nn.Dropout(cfg.dropout), nn.Linear(cfg.ff, cfg.width)
        )
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x, pad_mask):
        x = x + self.drop(self.attn(self.norm1(x), pad_mask))
        return x + self.drop(self.ff(self.norm2(x)))


class ClauseScorerNet(nn.Module):
    def __init__(self, cfg: ScorerConfig):
        super().__init__()
        self.cfg = cfg
        self.embed = nn.Linear(cfg.feature_dim, cfg.width)
        self.spectral = nn.Linear(cfg.spectral_dim, cfg.width, bias=False)
        self.drop = nn.Dropout(cfg.dropout)
        self.blocks = nn.ModuleList([_Block(cfg) for _ in range(cfg.layers)])
        self.norm = nn.LayerNorm(cfg.width)
        self.head = nn.Linear(cfg.width, 1)

    def forward(self, feats, spec, pad_mask, root_index):
        h = self.drop(self.embed(feats) + self.spectral(spec))
        for blk in self.blocks:
            h = blk(h, pad_mask)
        h = self.norm(h)
        root = h[torch.arange(h.shape[0]), root_index]
        return self.head(root).squeeze(-1)


def collate(inputs: Sequence[ClauseGraphInput], cfg: ScorerConfig, dtype=torch.float32):
    """Pad a list of inputs to a batch; padded rows are masked out of attention."""
    for inp in inputs:
        if inp.features.shape[1] != cfg.feature_dim or inp.spectral.shape[1] != cfg.spectral_dim:
            raise ConfigurationError(
                f"input dims {inp.features.shape[1]}/{inp.spectral.shape[1]} do not match "
                f"config {cfg.feature_dim}/{cfg.spectral_dim}"
            )
    n = max(inp.num_nodes for inp in inputs)
    b = len(inputs)
    feats = np.zeros((b, n, cfg.feature_dim), dtype=np.float32)
    spec = np.zeros((b, n, cfg.spectral_dim), dtype=np.float32)
    mask = np.ones((b, n), dtype=bool)
    roots = np.zeros(b, dtype=np.int64)
    for i, inp in enumerate(inputs):
        k = inp.num_nodes
        feats[i, :k] = inp.features
        spec[i, :k] = inp.spectral
        mask[i, :k] = False
        roots[i] = inp.root_index
    return (
        torch.from_numpy(feats).to(dtype),
        torch.from_numpy(spec).to(dtype),
        torch.from_numpy(mask),
        torch.from_numpy(roots),
    )


class ModelSnapshot:
    """Immutable parameters plus version and update count; safe to share."""

    def __init__(self, cfg: ScorerConfig, state: dict, version: int = 0, updates: int = 0,
                 warmup_updates: int = WARMUP_UPDATES):
        self.cfg = cfg
        self.version = version
        self.updates = updates
        self.warmup_updates = warmup_updates
        self._net = ClauseScorerNet(cfg)
        self._net.load_state_dict(state)
        self._net.eval()
        for p in self._net.parameters():
            p.requires_grad_(False)
        self._lock = threading.Lock()

    @property
    def warming_up(self) -> bool:
        return self.updates < self.warmup_updates

    def state_dict(self) -> dict:
        return {k: v.clone() for k, v in self._net.state_dict().items()}

    def logits(self, inputs: Sequence[ClauseGraphInput]) -> np.ndarray:
        if not inputs:
            return np.zeros(0)
        feats, spec, mask, roots = collate(inputs, self.cfg)
        with torch.no_grad():
            out = self._net(feats, spec, mask, roots)
        return out.double().numpy()


def score(snapshot: ModelSnapshot, inp: ClauseGraphInput) -> float:
    return float(score_batch(snapshot, [inp])[0])


def score_batch(snapshot: ModelSnapshot, inputs: Sequence[ClauseGraphInput]) -> List[float]:
    logits = snapshot.logits(list(inputs))
    return [float(v) for v in 1.0 / (1.0 + np.exp(-logits))]


class Learner:
    """Mutable training state: one model, its Adam optimizer, update count."""

    def __init__(self, cfg: ScorerConfig, seed: Optional[int] = None, warmup_updates: int = WARMUP_UPDATES):
        self.cfg = cfg
        seed = cfg.seed if seed is None else seed
        self.generator = torch.Generator().manual_seed(seed)
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            self.net = ClauseScorerNet(cfg)
        self.opt = torch.optim.Adam(self.net.parameters(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2), eps=cfg.eps)
        self.updates = 0
        self.version = 0
        self.warmup_updates = warmup_updates
        self.seed = seed

    def loss(self, batch, train: bool = True) -> torch.Tensor:
        inputs = [ex.encoded() if hasattr(ex, "encoded") else ex[0] for ex in batch]
        labels = [float(ex.label) if hasattr(ex, "label") else float(ex[1]) for ex in batch]
        dtype = next(self.net.parameters()).dtype
        feats, spec, mask, roots = collate(inputs, self.cfg, dtype)
        self.net.train(train)
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(int(torch.randint(0, 2**31 - 1, (1,), generator=self.generator)))
            logits = self.net(feats, spec, mask, roots)
        target = torch.tensor(labels, dtype=dtype)
        return nn.functional.binary_cross_entropy_with_logits(logits, target)

    def train_step(self, batch) -> float:
        """One Adam step on binary cross-entropy; returns the batch mean loss."""
        if not batch:
            raise ValueError("empty training batch")
        self.opt.zero_grad(set_to_none=True)
        loss = self.loss(batch, train=True)
        if not torch.isfinite(loss):
            raise TrainingError(f"non-finite loss {loss.item()} at update {self.updates}")
        loss.backward()
        grads_ok = all(p.grad is None or torch.isfinite(p.grad).all() for p in self.net.parameters())
        if not grads_ok:
            self.opt.zero_grad(set_to_none=True)
            raise TrainingError(f"non-finite gradient at update {self.updates}")
        self.opt.step()
        self.updates += 1
        return float(loss.item())

    def publish(self) -> ModelSnapshot:
        self.version += 1
        state = {k: v.detach().clone().float() for k, v in self.net.state_dict().items()}
        return ModelSnapshot(self.cfg, state, self.version, self.updates, self.warmup_updates)


def publish_snapshot(state: Learner) -> ModelSnapshot:
    return state.publish()


# Snapshot file layout (all integers little-endian):
#   8 bytes   magic "HERSNAP1"
#   u32       length L of the UTF-8 JSON header
#   L bytes   header: {"config": {...}, "version": int, "updates": int,
#                      "warmup_updates": int, "tensors": [[name, shape], ...]}
#   u64       number P of float32 parameters
#   4P bytes  parameters, float32 little-endian, tensors concatenated in header order


def save_snapshot(snapshot: ModelSnapshot) -> bytes:
    state = snapshot.state_dict()
    names = list(state)
    header = {
        "config": asdict(snapshot.cfg),
        "version": snapshot.version,
        "updates": snapshot.updates,
        "warmup_updates": snapshot.warmup_updates,
        "tensors": [[k, list(state[k].shape)] for k in names],
    }
    hdr = json.dumps(header, sort_keys=True).encode("utf-8")
    flat = np.concatenate([state[k].float().numpy().ravel() for k in names]).astype("<f4")
    buf = io.BytesIO()
    buf.write(SNAPSHOT_MAGIC)
    buf.write(struct.pack("<I", len(hdr)))
    buf.write(hdr)
    buf.write(struct.pack("<Q", flat.size))
    buf.write(flat.tobytes())
    return buf.getvalue()


def load_snapshot(data: bytes) -> ModelSnapshot:
    try:
        if data[:8] != SNAPSHOT_MAGIC:
            raise SnapshotError("bad snapshot magic")
        (hlen,) = struct.unpack_from("<I", data, 8)
        header = json.loads(data[12:12 + hlen].decode("utf-8"))
        off = 12 + hlen
        (count,) = struct.unpack_from("<Q", data, off)
        off += 8
        if len(data) != off + 4 * count:
            raise SnapshotError("snapshot length does not match parameter count")
        flat = np.frombuffer(data, dtype="<f4", count=count, offset=off)
        cfg = ScorerConfig.from_dict(header["config"])
        state = {}
        pos = 0
        for name, shape in header["tensors"]:
            size = int(np.prod(shape)) if shape else 1
            state[name] = torch.from_numpy(flat[pos:pos + size].astype(np.float32).reshape(shape))
            pos += size
        if pos != count:
            raise SnapshotError("parameter count mismatch")
        return ModelSnapshot(cfg, state, header["version"], header["updates"], header.get("warmup_updates", WARMUP_UPDATES))
    except SnapshotError:
        raise
    except (struct.error, KeyError, ValueError, TypeError, RuntimeError, UnicodeDecodeError) as e:
        raise SnapshotError(f"corrupt snapshot: {e}") from e


class SnapshotScorer:
    """Scores candidate clauses of one search against the empty-clause goal.

    Goal and conjecture graphs are encoded once per search.
    """

    def __init__(self, snapshot: ModelSnapshot, problem, goal=None):
        from herprover.clause_graph import ROLE_CONJECTURE, ROLE_GOAL, encode_clause
        from herprover.fol import EMPTY_CLAUSE

        self.snapshot = snapshot
        self.symbols = problem.symbols
        goal = EMPTY_CLAUSE if goal is None else goal
        self._tail = [(ROLE_GOAL,) + encode_clause(goal, ROLE_GOAL, self.symbols)]
        for c in problem.negated_conjecture:
            self._tail.append((ROLE_CONJECTURE,) + encode_clause(c, ROLE_CONJECTURE, self.symbols))
        self.calls = 0

    def encode(self, clause):
        from herprover.clause_graph import ROLE_X, assemble_encoded, encode_clause

        return assemble_encoded([(ROLE_X,) + encode_clause(clause, ROLE_X, self.symbols)] + self._tail)

    def score_clauses(self, clauses):
        self.calls += 1
        return score_batch(self.snapshot, [self.encode(c) for c in clauses])
