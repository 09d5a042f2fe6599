"""Set, partition and graph similarity measures used by the hiding objective."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import AbstractSet

from .detection import Partition, UndefinedMetricError
from .graph import DimensionError, Graph


@dataclass(frozen=True)
class PenaltyWeights:
    """``alpha`` balances community distance against graph distance;
    ``lam`` scales the distance penalty inside the loss and reward."""

    alpha: float = 0.5
    lam: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not self.lam > 0.0:
            raise ValueError(f"lambda must be positive, got {self.lam}")


def dice_similarity(a: AbstractSet, b: AbstractSet) -> float:
    """Sørensen-Dice coefficient ``2|a & b| / (|a| + |b|)``.

    Two empty sets are identical (1.0); an empty set against a non-empty one
    scores 0.0.
    """
    total = len(a) + len(b)
    if total == 0:
        return 1.0
    return 2.0 * len(a & b) / total


def _entropy(counts, n: int) -> float:
    h = 0.0
    for c in counts:
        if c:
            p = c / n
            h -= p * math.log(p)
    return h


def nmi(p: Partition, q: Partition) -> float:
    """Normalized mutual information with arithmetic-mean normalization."""
    if p.n != q.n:
        raise DimensionError(f"partitions cover {p.n} and {q.n} nodes")
    n = p.n
    if n == 0:
        raise UndefinedMetricError("nmi of empty partitions")
    hx = _entropy(Counter(p.assignment).values(), n)
    hy = _entropy(Counter(q.assignment).values(), n)
    if hx + hy == 0.0:
        # both partitions are a single community
        return 1.0
    hxy = _entropy(Counter(zip(p.assignment, q.assignment)).values(), n)
    value = (hx + hy - hxy) / ((hx + hy) / 2.0)
    return min(1.0, max(0.0, value))


def jaccard_graph_distance(g0: Graph, g1: Graph) -> float:
    if g0.n != g1.n:
        raise DimensionError(f"node counts differ: {g0.n} vs {g1.n}")
    union = len(g0.edges | g1.edges)
    if union == 0:
        raise UndefinedMetricError("jaccard distance of two empty graphs")
    return len(g0.edges ^ g1.edges) / union


def penalty(g0: Graph, gt: Graph, p0: Partition, pt: Partition,
            w: PenaltyWeights) -> float:
    """Composite distance ``alpha*(1 - NMI) + (1 - alpha)*Jaccard``."""
    if g0.edges == gt.edges:
        d_graph = 0.0
    else:
        d_graph = jaccard_graph_distance(g0, gt)
    d_comm = 1.0 - nmi(p0, pt)
    return w.alpha * d_comm + (1.0 - w.alpha) * d_graph


def harmonic_f1(sr: float, nmi_value: float) -> float:
    if sr + nmi_value == 0.0:
        return 0.0
    return 2.0 * sr * nmi_value / (sr + nmi_value)
