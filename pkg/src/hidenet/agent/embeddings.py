"""Random-walk skip-gram node embeddings (node2vec with p = q = 1)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..graph import Graph


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 64
    walks_per_node: int = 10
    walk_length: int = 40
    window: int = 5
    epochs: int = 3
    negative: int = 5
    lr: float = 0.025
    batch_size: int = 512
    seed: int = 0

    def __post_init__(self):
        for name in ("dim", "walks_per_node", "walk_length", "window", "epochs",
                     "negative", "batch_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def random_walks(g: Graph, cfg: EmbeddingConfig, rng: np.random.Generator) -> list[np.ndarray]:
    nbrs = [np.array(sorted(g.neighbors(u)), dtype=np.int64) for u in range(g.n)]
    walks = []
    for _ in range(cfg.walks_per_node):
        for start in rng.permutation(g.n):
            walk = [int(start)]
            cur = int(start)
            for _ in range(cfg.walk_length - 1):
                nb = nbrs[cur]
                if nb.size == 0:
                    break
                cur = int(nb[rng.integers(nb.size)])
                walk.append(cur)
            walks.append(np.array(walk, dtype=np.int64))
    return walks


def _skipgram_pairs(walks, window: int) -> np.ndarray:
    pairs = []
    for w in walks:
        L = len(w)
        for off in range(1, window + 1):
            if off >= L:
                break
            pairs.append(np.stack([w[:-off], w[off:]], axis=1))
            pairs.append(np.stack([w[off:], w[:-off]], axis=1))
    if not pairs:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate(pairs)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def compute_embeddings(g: Graph, cfg: EmbeddingConfig = EmbeddingConfig()) -> np.ndarray:
    """Train ``n x dim`` embeddings with negative sampling; deterministic in ``cfg.seed``.

    Nodes that never occur in a walk window (isolated nodes) only receive
    updates when drawn as negatives, so their rows stay close to the
    initialisation but are always finite.
    """
    if g.n < 2:
        raise ValueError("embeddings need at least two nodes")
    rng = np.random.default_rng(cfg.seed)
    n, d = g.n, cfg.dim
    emb = (rng.random((n, d)) - 0.5) / d
    ctx = np.zeros((n, d))
    walks = random_walks(g, cfg, rng)
    pairs = _skipgram_pairs(walks, cfg.window)
    counts = np.bincount(np.concatenate(walks), minlength=n).astype(float) + 1e-3
    noise = counts ** 0.75
    noise /= noise.sum()
    total = cfg.epochs * max(1, len(pairs))
    seen = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        for start in range(0, len(order), cfg.batch_size):
            batch = pairs[order[start:start + cfg.batch_size]]
            lr = cfg.lr * max(1e-4, 1.0 - seen / total)
            seen += len(batch)
            centre, pos = batch[:, 0], batch[:, 1]
            neg = rng.choice(n, size=(len(batch), cfg.negative), p=noise)
            targets = np.concatenate([pos[:, None], neg], axis=1)
            labels = np.zeros(targets.shape)
            labels[:, 0] = 1.0
            h = emb[centre]
            c = ctx[targets]
            score = np.einsum("bd,bkd->bk", h, c)
            g_score = (labels - _sigmoid(score)) * lr
            grad_h = np.einsum("bk,bkd->bd", g_score, c)
            grad_c = g_score[:, :, None] * h[:, None, :]
            np.add.at(ctx, targets.ravel(), grad_c.reshape(-1, d))
            np.add.at(emb, centre, grad_h)
    return emb
