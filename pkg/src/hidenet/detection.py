"""Black-box community detectors: greedy modularity (CNM), Louvain, label propagation.

All detectors return a canonical :class:`Partition`, so two runs that find the
same grouping compare equal regardless of the labels used internally.
"""

from __future__ import annotations

import enum
import heapq
from collections import defaultdict
from typing import Sequence

import numpy as np

from .graph import Graph, GraphError


class UndefinedMetricError(GraphError):
    pass


class DetectorKind(str, enum.Enum):
    GREEDY = "greedy"
    LOUVAIN = "louvain"
    LABEL_PROPAGATION = "lpa"

    @classmethod
    def parse(cls, name: "str | DetectorKind") -> "DetectorKind":
        if isinstance(name, cls):
            return name
        aliases = {"greedy_modularity": "greedy", "cnm": "greedy",
                   "label_propagation": "lpa", "labelprop": "lpa"}
        key = str(name).lower()
        return cls(aliases.get(key, key))


class Partition:
    """Hard assignment of every node to exactly one non-empty community.

    Community ids are canonical: community 0 holds node 0, and ids increase
    with the smallest member of each community.
    """

    __slots__ = ("assignment", "k", "_members")

    def __init__(self, labels: Sequence[int]):
        remap: dict[int, int] = {}
        assignment = []
        for lab in labels:
            lab = int(lab)
            if lab not in remap:
                remap[lab] = len(remap)
            assignment.append(remap[lab])
        self.assignment = tuple(assignment)
        self.k = len(remap)
        members: list[list[int]] = [[] for _ in range(self.k)]
        for node, c in enumerate(self.assignment):
            members[c].append(node)
        self._members = tuple(frozenset(ms) for ms in members)

    @classmethod
    def from_communities(cls, n: int, communities) -> "Partition":
        labels = [-1] * n
        for c, nodes in enumerate(communities):
            for u in nodes:
                if labels[u] != -1:
                    raise GraphError(f"node {u} assigned twice")
                labels[u] = c
        if -1 in labels:
            raise GraphError(f"node {labels.index(-1)} unassigned")
        return cls(labels)

    @property
    def n(self) -> int:
        return len(self.assignment)

    @property
    def communities(self) -> tuple[frozenset[int], ...]:
        return self._members

    def __getitem__(self, u: int) -> int:
        return self.assignment[u]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.assignment == other.assignment

    def __hash__(self) -> int:
        return hash(self.assignment)

    def __repr__(self) -> str:
        return f"Partition(n={self.n}, k={self.k})"


def community_of(p: Partition, u: int) -> frozenset[int]:
    return p.communities[p.assignment[u]]


def modularity(g: Graph, p: Partition) -> float:
    """Newman modularity of a hard partition of an undirected graph."""
    if g.m == 0:
        raise UndefinedMetricError("modularity undefined on a graph without edges")
    if p.n != g.n:
        raise GraphError("partition size differs from graph size")
    m = g.m
    internal = np.zeros(p.k)
    degree = np.zeros(p.k)
    a = p.assignment
    for u, v in g.edges:
        if a[u] == a[v]:
            internal[a[u]] += 1
    for u in range(g.n):
        degree[a[u]] += g.degree(u)
    return float(np.sum(internal / m - (degree / (2.0 * m)) ** 2))


# -- greedy modularity (Clauset-Newman-Moore) ---------------------------------

def _cnm(g: Graph, trace: list | None = None) -> list[int]:
    # Merge scores are kept as exact integers: 2m*e_ij - D_i*D_j, which is
    # dQ scaled by 2m^2.  Exact ties then resolve by smallest (i, j).
    n, m = g.n, g.m
    labels = list(range(n))
    if m == 0:
        return labels
    two_m = 2 * m
    between: list[dict[int, int]] = [dict.fromkeys(g.neighbors(u), 1) for u in range(n)]
    deg = [g.degree(u) for u in range(n)]
    members: list[list[int]] = [[u] for u in range(n)]
    active = [True] * n
    heap = [(-(two_m - deg[u] * deg[v]), u, v) for u, v in g.edges]
    heapq.heapify(heap)
    while heap:
        neg, i, j = heapq.heappop(heap)
        if not (active[i] and active[j]):
            continue
        e = between[i].get(j)
        if e is None:
            continue
        score = two_m * e - deg[i] * deg[j]
        if score != -neg:
            continue
        if score <= 0:
            break
        if trace is not None:
            trace.append(score / (2.0 * m * m))
        # j is absorbed into i (i < j)
        for k, w in between[j].items():
            if k == i:
                continue
            between[i][k] = between[i].get(k, 0) + w
            between[k][i] = between[k].get(i, 0) + w
            del between[k][j]
        del between[i][j]
        between[j] = {}
        deg[i] += deg[j]
        members[i].extend(members[j])
        members[j] = []
        active[j] = False
        for k, w in between[i].items():
            a, b = (i, k) if i < k else (k, i)
            heapq.heappush(heap, (-(two_m * w - deg[i] * deg[k]), a, b))
    for c, ms in enumerate(members):
        for u in ms:
            labels[u] = c
    return labels


# -- Louvain -------------------------------------------------------------------

def _louvain_level(nbrs: list[dict[int, float]], loops: list[float],
                   rng: np.random.Generator, max_sweeps: int = 1000) -> list[int]:
    size = len(nbrs)
    k = [sum(nb.values()) + 2.0 * loops[i] for i, nb in enumerate(nbrs)]
    m2 = float(sum(k))
    comm = list(range(size))
    tot = list(k)
    for _ in range(max_sweeps):
        moved = False
        for i in rng.permutation(size):
            i = int(i)
            ci = comm[i]
            w_to: dict[int, float] = defaultdict(float)
            for j, w in nbrs[i].items():
                w_to[comm[j]] += w
            tot[ci] -= k[i]
            best, best_gain = ci, w_to.get(ci, 0.0) - tot[ci] * k[i] / m2
            for c in sorted(w_to):
                gain = w_to[c] - tot[c] * k[i] / m2
                if gain > best_gain + 1e-12:
                    best, best_gain = c, gain
            tot[best] += k[i]
            if best != ci:
                comm[i] = best
                moved = True
        if not moved:
            break
    return comm


def _weighted_modularity(nbrs, loops, comm) -> float:
    k = [sum(nb.values()) + 2.0 * loops[i] for i, nb in enumerate(nbrs)]
    m2 = float(sum(k))
    inside = defaultdict(float)
    tot = defaultdict(float)
    for i, nb in enumerate(nbrs):
        tot[comm[i]] += k[i]
        inside[comm[i]] += 2.0 * loops[i]
        for j, w in nb.items():
            if comm[j] == comm[i]:
                inside[comm[i]] += w
    return sum(inside[c] / m2 - (tot[c] / m2) ** 2 for c in tot)


def _louvain(g: Graph, seed: int, tol: float = 1e-7) -> list[int]:
    n = g.n
    if g.m == 0:
        return list(range(n))
    rng = np.random.default_rng(seed)
    nbrs: list[dict[int, float]] = [dict.fromkeys(g.neighbors(u), 1.0) for u in range(n)]
    loops = [0.0] * n
    node_comm = list(range(n))
    q = _weighted_modularity(nbrs, loops, list(range(n)))
    while True:
        comm = _louvain_level(nbrs, loops, rng)
        ids = {c: i for i, c in enumerate(sorted(set(comm)))}
        comm = [ids[c] for c in comm]
        new_q = _weighted_modularity(nbrs, loops, comm)
        if new_q - q <= tol:
            break
        q = new_q
        node_comm = [comm[c] for c in node_comm]
        size = len(ids)
        new_nbrs: list[dict[int, float]] = [defaultdict(float) for _ in range(size)]
        new_loops = [0.0] * size
        for i, nb in enumerate(nbrs):
            ci = comm[i]
            new_loops[ci] += loops[i]
            for j, w in nb.items():
                cj = comm[j]
                if ci == cj:
                    # each internal edge is seen from both ends
                    new_loops[ci] += w / 2.0
                else:
                    new_nbrs[ci][cj] += w
        nbrs = [dict(nb) for nb in new_nbrs]
        loops = new_loops
        if size == 1:
            break
    return node_comm


# -- label propagation ------------------------------------------------------

def _label_propagation(g: Graph, seed: int, max_sweeps: int = 100) -> list[int]:
    rng = np.random.default_rng(seed)
    n = g.n
    labels = list(range(n))
    nbr_lists = [sorted(g.neighbors(u)) for u in range(n)]
    for _ in range(max_sweeps):
        changed = False
        for u in rng.permutation(n):
            u = int(u)
            if not nbr_lists[u]:
                continue
            counts: dict[int, int] = defaultdict(int)
            for v in nbr_lists[u]:
                counts[labels[v]] += 1
            top = max(counts.values())
            best = sorted(lab for lab, c in counts.items() if c == top)
            if labels[u] in best:
                continue
            labels[u] = best[int(rng.integers(len(best)))]
            changed = True
        if not changed:
            break
    return labels


def detect(kind: DetectorKind | str, g: Graph, seed: int = 0) -> Partition:
    """Run detector ``kind`` on ``g``.  Deterministic in ``(kind, g, seed)``."""
    if g.n < 1:
        raise GraphError("detection needs at least one node")
    kind = DetectorKind.parse(kind)
    if kind is DetectorKind.GREEDY:
        labels = _cnm(g)
    elif kind is DetectorKind.LOUVAIN:
        labels = _louvain(g, seed)
    else:
        labels = _label_propagation(g, seed)
    return Partition(labels)
