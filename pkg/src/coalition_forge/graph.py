"""Weighted undirected graphs, coalition values and cuts.

Nodes are dense integers ``0..n-1``. A coalition is any set of node ids
(``frozenset`` internally) and a coalition structure is a sequence of
disjoint coalitions covering every node. The value of a coalition is the
total weight of the edges it contains, so a structure's value is the sum of
all edges that are not cut by it.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from .errors import InvalidNodeError, InvalidPartitionError

Coalition = frozenset


class WeightedGraph:
    """Immutable simple graph with real edge weights.

    Edges are stored canonically as ``(u, v, w)`` with ``u < v``, sorted.
    Inserting the same unordered pair twice raises instead of merging.
    """

    __slots__ = ("_n", "_edges", "_adj")

    def __init__(self, n: int, edges: Iterable[tuple[int, int, float]] = ()):
        if int(n) != n or n < 0:
            raise ValueError(f"node count must be a non-negative integer, got {n!r}")
        n = int(n)
        adj: list[dict[int, float]] = [{} for _ in range(n)]
        canon = []
        for edge in edges:
            u, v, w = edge
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidNodeError(f"edge ({u}, {v}) references a node outside 0..{n - 1}")
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not math.isfinite(w):
                raise ValueError(f"non-finite weight on edge ({u}, {v})")
            if v in adj[u]:
                raise ValueError(f"duplicate edge ({min(u, v)}, {max(u, v)})")
            adj[u][v] = w
            adj[v][u] = w
            canon.append((min(u, v), max(u, v), w))
        canon.sort()
        self._n = n
        self._edges = tuple(canon)
        self._adj = tuple(adj)

    @property
    def n(self) -> int:
        return self._n

    @property
    def edges(self) -> tuple[tuple[int, int, float], ...]:
        return self._edges

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def nodes(self) -> range:
        return range(self._n)

    def neighbors(self, u: int) -> dict[int, float]:
        # read-only by convention; callers must not mutate
        return self._adj[u]

    def weight(self, u: int, v: int) -> float:
        """Edge weight, or 0.0 when ``u`` and ``v`` are not adjacent."""
        return self._adj[u].get(v, 0.0)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def degree(self, u: int) -> int:
        return len(self._adj[u])

    def total_weight(self) -> float:
        return math.fsum(w for _, _, w in self._edges)

    def weight_matrix(self) -> np.ndarray:
        mat = np.zeros((self._n, self._n))
        for u, v, w in self._edges:
            mat[u, v] = mat[v, u] = w
        return mat

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self._n == other._n and self._edges == other._edges

    def __hash__(self):
        return hash((self._n, self._edges))

    def __repr__(self):
        return f"WeightedGraph(n={self._n}, m={len(self._edges)})"

    def to_dict(self) -> dict:
        return {"n": self._n, "edges": [[u, v, w] for u, v, w in self._edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "WeightedGraph":
        try:
            return cls(data["n"], [tuple(e) for e in data["edges"]])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed graph document: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def load(cls, path: str | Path) -> "WeightedGraph":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")


def _as_coalition(g: WeightedGraph, c: Iterable[int]) -> frozenset:
    c = frozenset(c)
    for u in c:
        if not (isinstance(u, (int, np.integer)) and 0 <= u < g.n):
            raise InvalidNodeError(f"node {u!r} is not in the graph (n={g.n})")
    return c


def coalition_value(g: WeightedGraph, c: Iterable[int]) -> float:
    """Sum of the weights of edges with both endpoints in ``c``.

    >>> g = WeightedGraph(3, [(0, 1, 2.0), (1, 2, -5.0), (2, 0, 1.0)])
    >>> coalition_value(g, {0, 1, 2})
    -2.0
    """
    c = _as_coalition(g, c)
    total = 0.0
    for u in c:
        for v, w in g.neighbors(u).items():
            if u < v and v in c:
                total += w
    return total


def validate_partition(g: WeightedGraph, p: Iterable[Iterable[int]]) -> list[frozenset]:
    """Check that ``p`` partitions the nodes of ``g`` and return it as frozensets."""
    coalitions = []
    seen: set[int] = set()
    for block in p:
        block = frozenset(block)
        if not block:
            raise InvalidPartitionError("empty coalition")
        for u in block:
            if not (isinstance(u, (int, np.integer)) and 0 <= u < g.n):
                raise InvalidPartitionError(f"node {u!r} is not in the graph (n={g.n})")
        if seen & block:
            raise InvalidPartitionError(f"coalitions overlap on {sorted(seen & block)}")
        seen |= block
        coalitions.append(block)
    if len(seen) != g.n:
        missing = sorted(set(range(g.n)) - seen)
        raise InvalidPartitionError(f"partition does not cover nodes {missing}")
    return coalitions


def structure_value(g: WeightedGraph, p: Iterable[Iterable[int]]) -> float:
    return sum(coalition_value(g, c) for c in validate_partition(g, p))


def cut_weight(g: WeightedGraph, c: Iterable[int], side: Iterable[int]) -> float:
    """Weight of the internal edges of ``c`` crossing between ``side`` and ``c - side``."""
    c = _as_coalition(g, c)
    side = frozenset(side)
    if not side <= c:
        raise ValueError(f"side contains nodes outside the coalition: {sorted(side - c)}")
    total = 0.0
    for u in side:
        for v, w in g.neighbors(u).items():
            if v in c and v not in side:
                total += w
    return total


def connected_components(g: WeightedGraph, c: Iterable[int] | None = None) -> list[frozenset]:
    """Components of the subgraph induced by ``c`` (all nodes when omitted).

    Returned in ascending order of each component's smallest member.
    """
    c = frozenset(range(g.n)) if c is None else _as_coalition(g, c)
    seen: set[int] = set()
    comps = []
    for start in sorted(c):
        if start in seen:
            continue
        seen.add(start)
        stack = [start]
        comp = [start]
        while stack:
            u = stack.pop()
            for v in g.neighbors(u):
                if v in c and v not in seen:
                    seen.add(v)
                    stack.append(v)
                    comp.append(v)
        comps.append(frozenset(comp))
    return comps


def induced_subgraph(g: WeightedGraph, c: Iterable[int]) -> tuple[WeightedGraph, list[int]]:
    """Subgraph on ``c`` re-indexed densely.

    Returns ``(sub, index_map)`` where ``index_map[i]`` is the original id of
    node ``i`` in ``sub``; members keep their relative order.
    """
    members = sorted(_as_coalition(g, c))
    local = {u: i for i, u in enumerate(members)}
    edges = [(local[u], local[v], w) for u, v, w in g.edges if u in local and v in local]
    return WeightedGraph(len(members), edges), members


def canonical_structure(p: Iterable[Iterable[int]]) -> list[list[int]]:
    """Sorted member lists, ordered by smallest member (for output and comparison)."""
    return sorted((sorted(int(u) for u in block) for block in p), key=lambda b: b[0])
