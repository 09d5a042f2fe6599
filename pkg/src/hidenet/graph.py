"""Undirected simple graphs, edge-list ingestion and single-edge toggles."""

from __future__ import annotations

import enum
import io
import logging
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

logger = logging.getLogger(__name__)


class GraphError(ValueError):
    pass


class EdgeListParseError(GraphError):
    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line!r}")
        self.lineno = lineno


class InvalidActionError(GraphError):
    pass


class DimensionError(GraphError):
    pass


class ToggleKind(enum.Enum):
    ADD = "add"
    REMOVE = "remove"


@dataclass(frozen=True)
class EdgeToggle:
    u: int
    v: int
    kind: ToggleKind

    def __post_init__(self):
        if self.u == self.v:
            raise InvalidActionError(f"self-loop toggle on node {self.u}")

    @classmethod
    def add(cls, u: int, v: int) -> "EdgeToggle":
        return cls(u, v, ToggleKind.ADD)

    @classmethod
    def remove(cls, u: int, v: int) -> "EdgeToggle":
        return cls(u, v, ToggleKind.REMOVE)

    def inverse(self) -> "EdgeToggle":
        other = ToggleKind.REMOVE if self.kind is ToggleKind.ADD else ToggleKind.ADD
        return EdgeToggle(self.u, self.v, other)

    def sort_key(self) -> tuple[int, int, str]:
        return (self.u, self.v, self.kind.value)

    def __str__(self) -> str:
        return f"{self.kind.value}({self.u},{self.v})"


def _key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


class Graph:
    """Immutable undirected simple graph on nodes ``0..n-1``.

    ``labels`` optionally maps dense ids back to the ids found in the
    source file; it is carried along by :func:`toggle_edge`.
    """

    __slots__ = ("n", "_adj", "_edges", "_hash", "labels")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = (), labels=None):
        if n < 0:
            raise GraphError("negative node count")
        adj: list[set[int]] = [set() for _ in range(n)]
        keys = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u},{v}) out of range for n={n}")
            if u == v:
                raise GraphError(f"self-loop on node {u}")
            adj[u].add(v)
            adj[v].add(u)
            keys.add(_key(u, v))
        self.n = n
        self._adj = tuple(frozenset(a) for a in adj)
        self._edges = frozenset(keys)
        self._hash = None
        self.labels = tuple(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != n:
            raise GraphError("label table length differs from n")

    @classmethod
    def _from_parts(cls, n, adj, edges, labels):
        g = object.__new__(cls)
        g.n = n
        g._adj = adj
        g._edges = edges
        g._hash = None
        g.labels = labels
        return g

    @property
    def m(self) -> int:
        return len(self._edges)

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        """Edges as ``(min, max)`` pairs."""
        return self._edges

    def neighbors(self, u: int) -> frozenset[int]:
        return self._adj[u]

    def degree(self, u: int) -> int:
        return len(self._adj[u])

    def degrees(self) -> np.ndarray:
        return np.fromiter((len(a) for a in self._adj), dtype=np.int64, count=self.n)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self._edges)

    def adjacency_matrix(self, dtype=np.float64) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=dtype)
        if self._edges:
            idx = np.array(sorted(self._edges))
            a[idx[:, 0], idx[:, 1]] = 1
            a[idx[:, 1], idx[:, 0]] = 1
        return a

    def label(self, u: int):
        return self.labels[u] if self.labels is not None else u

    def node_of(self, label: int) -> int:
        """Dense id of an original node label (inverse of :meth:`label`)."""
        if self.labels is None:
            if not 0 <= label < self.n:
                raise KeyError(label)
            return label
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(label) from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self._edges == other._edges

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n, self._edges))
        return self._hash

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


@dataclass
class LoadReport:
    self_loops: int = 0
    duplicates: int = 0


def load_edge_list(source: IO | str | bytes, relabel: bool = True,
                   report: LoadReport | None = None) -> Graph:
    """Parse a whitespace-separated integer edge list.

    Lines starting with ``#`` or ``%`` are comments; extra columns after the
    first two (weights, timestamps in konect exports) are ignored.  By
    default ids are remapped densely in ascending order and the originals
    kept in ``Graph.labels`` (so 1-based konect files load without a phantom
    node 0).  With ``relabel=False`` ids are used as-is and
    ``n = max id + 1``.
    """
    if isinstance(source, bytes):
        source = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str):
        source = io.StringIO(source)
    report = report if report is not None else LoadReport()
    pairs = []
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line or line[0] in "#%":
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise EdgeListParseError(lineno, line, "expected two node ids")
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise EdgeListParseError(lineno, line, "non-integer node id") from None
        if u < 0 or v < 0:
            raise EdgeListParseError(lineno, line, "negative node id")
        pairs.append((u, v))

    labels = None
    if relabel:
        labels = sorted({x for p in pairs for x in p})
        index = {x: i for i, x in enumerate(labels)}
        pairs = [(index[u], index[v]) for u, v in pairs]
        n = len(labels)
    else:
        n = max((max(p) for p in pairs), default=-1) + 1

    seen = set()
    edges = []
    for u, v in pairs:
        if u == v:
            report.self_loops += 1
            continue
        k = _key(u, v)
        if k in seen:
            report.duplicates += 1
            continue
        seen.add(k)
        edges.append(k)
    if report.self_loops or report.duplicates:
        logger.warning("edge list: dropped %d self-loops and %d duplicate edges",
                       report.self_loops, report.duplicates)
    return Graph(n, edges, labels=labels)


def write_edge_list(g: Graph, sink: IO[str], header: bool = True) -> None:
    if header:
        sink.write(f"% n={g.n} m={g.m}\n")
    for u, v in g.sorted_edges():
        sink.write(f"{u} {v}\n")


def toggle_edge(g: Graph, t: EdgeToggle) -> Graph:
    """Return a new graph with one undirected edge added or removed."""
    u, v = t.u, t.v
    if not (0 <= u < g.n and 0 <= v < g.n):
        raise InvalidActionError(f"{t} out of range for n={g.n}")
    present = v in g._adj[u]
    k = _key(u, v)
    adj = list(g._adj)
    if t.kind is ToggleKind.ADD:
        if present:
            raise InvalidActionError(f"{t}: edge already present")
        adj[u] = adj[u] | {v}
        adj[v] = adj[v] | {u}
        edges = g._edges | {k}
    else:
        if not present:
            raise InvalidActionError(f"{t}: edge absent")
        adj[u] = adj[u] - {v}
        adj[v] = adj[v] - {u}
        edges = g._edges - {k}
    return Graph._from_parts(g.n, tuple(adj), edges, g.labels)


def graph_edit_count(g0: Graph, g1: Graph) -> int:
    if g0.n != g1.n:
        raise DimensionError(f"node counts differ: {g0.n} vs {g1.n}")
    return len(g0.edges ^ g1.edges)
