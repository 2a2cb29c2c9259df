"""Directed graphs for broadcast gossip, plus the generators for the standard test families.

Adjacency is stored as sorted neighbor tuples, so every per-edge loop visits
neighbors in ascending node order.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import InvalidParameter


@dataclass(frozen=True)
class DegreeStats:
    out_deg: tuple[int, ...]
    in_deg: tuple[int, ...]
    deg_plus_max: int
    deg_minus_max: int
    deg_max: int

    def as_dict(self) -> dict:
        return {
            "deg_plus_max": self.deg_plus_max,
            "deg_minus_max": self.deg_minus_max,
            "deg_max": self.deg_max,
            "out_deg_min": min(self.out_deg),
            "in_deg_min": min(self.in_deg),
        }


@dataclass(frozen=True)
class Graph:
    """Immutable directed graph on nodes ``0..n-1``.

    ``out_adj[v]`` lists the nodes that receive ``v``'s broadcast and
    ``in_adj[v]`` the nodes whose broadcasts ``v`` receives. Construction
    validates every structural invariant and raises ``InvalidParameter`` on
    violation.
    """

    n: int
    out_adj: tuple[tuple[int, ...], ...]
    in_adj: tuple[tuple[int, ...], ...]
    family: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameter(f"graph needs at least one node, got n={self.n}")
        if len(self.out_adj) != self.n or len(self.in_adj) != self.n:
            raise InvalidParameter("adjacency lists must have one entry per node")
        for v, nbrs in enumerate(self.out_adj):
            if any(not 0 <= u < self.n for u in nbrs):
                raise InvalidParameter(f"node {v} has an out-neighbor outside [0, {self.n})")
            if v in nbrs:
                raise InvalidParameter(f"self-loop at node {v}")
            if len(set(nbrs)) != len(nbrs):
                raise InvalidParameter(f"duplicate edge out of node {v}")
        if _transpose(self.n, self.out_adj) != self.in_adj:
            raise InvalidParameter("in_adj is not the transpose of out_adj")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], family: str = "custom",
                   params: dict | None = None) -> Graph:
        """Build a graph from directed ``(u, v)`` pairs (broadcast flows u -> v).

        Duplicate pairs and self-loops are rejected, not silently dropped.
        """
        n = int(n)
        if n < 1:
            raise InvalidParameter(f"graph needs at least one node, got n={n}")
        out: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidParameter(f"edge ({u}, {v}) outside [0, {n})")
            out[u].append(v)
        out_adj = tuple(tuple(sorted(nbrs)) for nbrs in out)
        return cls(n, out_adj, _transpose(n, out_adj), family, dict(params or {}))

    @cached_property
    def edges(self) -> list[tuple[int, int]]:
        return [(v, u) for v in range(self.n) for u in self.out_adj[v]]

    @property
    def num_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self.out_adj)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Out-adjacency in CSR form: ``(indptr, indices)`` as int64 arrays."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(nbrs) for nbrs in self.out_adj])
        indices = np.fromiter(itertools.chain.from_iterable(self.out_adj), dtype=np.int64,
                              count=int(indptr[-1]))
        return indptr, indices

    @cached_property
    def degrees(self) -> DegreeStats:
        out_deg = tuple(len(nbrs) for nbrs in self.out_adj)
        in_deg = tuple(len(nbrs) for nbrs in self.in_adj)
        plus, minus = max(out_deg), max(in_deg)
        return DegreeStats(out_deg, in_deg, plus, minus, max(plus, minus))

    def is_balanced(self) -> bool:
        return is_balanced(self)

    def is_symmetric(self) -> bool:
        return is_symmetric(self)

    def is_connected(self) -> bool:
        return is_connected(self)

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in sorted(self.edges)],
                "family": self.family, "params": self.params}

    @classmethod
    def from_json(cls, doc: dict) -> Graph:
        try:
            n, edges = doc["n"], doc["edges"]
        except (KeyError, TypeError) as exc:
            raise InvalidParameter(f"graph document missing field: {exc}") from None
        if not isinstance(n, int) or isinstance(n, bool):
            raise InvalidParameter("graph document field 'n' must be an integer")
        pairs = []
        for e in edges:
            if len(e) != 2 or not all(isinstance(x, int) and not isinstance(x, bool) for x in e):
                raise InvalidParameter(f"malformed edge {e!r}")
            pairs.append((e[0], e[1]))
        if len(set(pairs)) != len(pairs):
            raise InvalidParameter("graph document contains duplicate edges")
        return cls.from_edges(n, pairs, doc.get("family", "custom"), doc.get("params", {}))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> Graph:
        return cls.from_json(json.loads(Path(path).read_text()))


def _transpose(n: int, out_adj) -> tuple[tuple[int, ...], ...]:
    inn: list[list[int]] = [[] for _ in range(n)]
    for v, nbrs in enumerate(out_adj):
        for u in nbrs:
            inn[u].append(v)
    return tuple(tuple(sorted(nbrs)) for nbrs in inn)


def _undirected(n: int, pairs: Iterable[tuple[int, int]], family: str, params: dict) -> Graph:
    edges = set()
    for u, v in pairs:
        edges.add((u, v))
        edges.add((v, u))
    return Graph.from_edges(n, edges, family, params)


def complete(n: int) -> Graph:
    if n < 2:
        raise InvalidParameter(f"complete graph needs n >= 2, got {n}")
    out_adj = tuple(tuple(u for u in range(n) if u != v) for v in range(n))
    return Graph(n, out_adj, out_adj, "complete", {"n": n})


def ring(n: int) -> Graph:
    if n < 3:
        raise InvalidParameter(f"ring needs n >= 3, got {n}")
    return _undirected(n, ((i, (i + 1) % n) for i in range(n)), "ring", {"n": n})


def torus_lattice(k: int, side: int) -> Graph:
    """k-dimensional torus with ``side`` nodes per axis; node index is row-major."""
    if k < 1 or side < 3:
        raise InvalidParameter(f"torus needs k >= 1 and side >= 3, got k={k}, side={side}")
    n = side ** k
    pairs = []
    for idx in range(n):
        stride = 1
        for _ in range(k):
            coord = (idx // stride) % side
            nxt = idx + ((coord + 1) % side - coord) * stride
            pairs.append((idx, nxt))
            stride *= side
    # side >= 3 guarantees distinct +/- neighbors, so the edge set has N*2k entries
    return _undirected(n, pairs, "torus", {"k": k, "side": side})


def hypercube(dim: int) -> Graph:
    if dim < 1:
        raise InvalidParameter(f"hypercube needs dim >= 1, got {dim}")
    n = 1 << dim
    out_adj = tuple(tuple(sorted(v ^ (1 << b) for b in range(dim))) for v in range(n))
    return Graph(n, out_adj, out_adj, "hypercube", {"dim": dim})


def de_bruijn(symbols: int, dimension: int) -> Graph:
    """De Bruijn graph on ``symbols`` letters of word length ``dimension``.

    Edges ``i -> (symbols*i + j) mod symbols**dimension`` for ``j < symbols``;
    the self-loops this produces (at the constant words) are dropped.
    """
    if symbols < 2 or dimension < 2:
        raise InvalidParameter(
            f"de Bruijn graph needs symbols >= 2 and dimension >= 2, got {symbols}, {dimension}")
    n = symbols ** dimension
    edges = [(i, (symbols * i + j) % n) for i in range(n) for j in range(symbols)]
    edges = [(u, v) for u, v in edges if u != v]
    return Graph.from_edges(n, edges, "debruijn", {"symbols": symbols, "dimension": dimension})


def rgg_radius(n: int) -> float:
    return 1.1 * math.sqrt(math.log(n) / n)


def random_geometric(n: int, rng: np.random.Generator | None = None, points=None) -> Graph:
    """Random geometric graph on the unit square with radius ``1.1*sqrt(log n / n)``.

    Nodes are joined when strictly closer than the radius. ``points`` overrides
    sampling (shape ``(n, 2)``). Connectivity is not enforced.
    """
    if n < 2:
        raise InvalidParameter(f"random geometric graph needs n >= 2, got {n}")
    if points is None:
        if rng is None:
            raise InvalidParameter("random_geometric needs an rng or explicit points")
        points = rng.random((n, 2))
    points = np.asarray(points, dtype=float)
    if points.shape != (n, 2):
        raise InvalidParameter(f"points must have shape ({n}, 2), got {points.shape}")
    r = rgg_radius(n)
    pairs = cKDTree(points).query_pairs(r, output_type="ndarray")
    keep = np.linalg.norm(points[pairs[:, 0]] - points[pairs[:, 1]], axis=1) < r
    return _undirected(n, map(tuple, pairs[keep].tolist()), "rgg", {"n": n})


def is_balanced(g: Graph) -> bool:
    d = g.degrees
    return d.out_deg == d.in_deg


def is_symmetric(g: Graph) -> bool:
    return g.out_adj == g.in_adj


def is_connected(g: Graph) -> bool:
    """Strong connectivity."""
    if g.n == 1:
        return True
    indptr, indices = g.csr
    adj = csr_matrix((np.ones(len(indices)), indices, indptr), shape=(g.n, g.n))
    ncomp, _ = connected_components(adj, directed=True, connection="strong")
    return ncomp == 1


FAMILIES = {
    "complete": complete,
    "ring": ring,
    "torus": torus_lattice,
    "hypercube": hypercube,
    "debruijn": de_bruijn,
    "rgg": random_geometric,
}
