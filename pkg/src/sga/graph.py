"""Signed graph storage, triangle balance statistics and local balance degree.

The graph is undirected. Every node keeps its positive and negative
neighbours in two ascending lists, plus a sign map for O(1) lookups.
Per-node balanced/unbalanced triangle counts are kept up to date as edges
are added, deleted or flipped, so the local balance degree of any node is
available without re-enumerating triangles.
"""

from __future__ import annotations

import bisect
import copy
import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

POSITIVE = 1
NEGATIVE = -1


class GraphError(ValueError):
    """Raised on invalid edges, conflicting records or bad change requests."""


class ChangeKind(str, enum.Enum):
    ADD = "add"
    DELETE = "delete"
    FLIP = "flip"


@dataclass(frozen=True)
class EdgeChange:
    """A single structural edit. ``sign`` is only meaningful for ``ADD``."""

    kind: ChangeKind
    u: int
    v: int
    sign: int = POSITIVE

    def __post_init__(self):
        object.__setattr__(self, "kind", ChangeKind(self.kind))
        if self.kind is ChangeKind.ADD and self.sign not in (POSITIVE, NEGATIVE):
            raise GraphError(f"invalid sign {self.sign!r} for edge ({self.u}, {self.v})")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.u, self.v) if self.u < self.v else (self.v, self.u)


@dataclass
class TriangleStats:
    """Per-node counts of balanced and unbalanced triangles."""

    balanced: np.ndarray
    unbalanced: np.ndarray

    @classmethod
    def zeros(cls, num_nodes: int) -> "TriangleStats":
        return cls(np.zeros(num_nodes, dtype=np.int64), np.zeros(num_nodes, dtype=np.int64))

    @property
    def total(self) -> np.ndarray:
        return self.balanced + self.unbalanced

    def copy(self) -> "TriangleStats":
        return TriangleStats(self.balanced.copy(), self.unbalanced.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, TriangleStats):
            return NotImplemented
        return np.array_equal(self.balanced, other.balanced) and np.array_equal(
            self.unbalanced, other.unbalanced
        )


def _canon(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


class SignedGraph:
    """Undirected signed graph with incrementally maintained triangle stats.

    Parameters
    ----------
    num_nodes:
        Nodes are the integers ``0 .. num_nodes - 1``.
    zero_triangle_degree:
        Local balance degree reported for nodes that lie in no triangle.
    """

    def __init__(self, num_nodes: int, zero_triangle_degree: float = 1.0):
        if num_nodes < 0:
            raise GraphError("num_nodes must be non-negative")
        self.num_nodes = int(num_nodes)
        self.zero_triangle_degree = float(zero_triangle_degree)
        self._sign: list[dict[int, int]] = [dict() for _ in range(self.num_nodes)]
        self._pos: list[list[int]] = [[] for _ in range(self.num_nodes)]
        self._neg: list[list[int]] = [[] for _ in range(self.num_nodes)]
        self.stats = TriangleStats.zeros(self.num_nodes)
        self._num_pos = 0
        self._num_neg = 0

    # -- construction -----------------------------------------------------

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[int, int, int]],
        num_nodes: int | None = None,
        zero_triangle_degree: float = 1.0,
    ) -> "SignedGraph":
        """Build a graph from already validated, duplicate-free records."""
        edges = [(int(u), int(v), int(s)) for u, v, s in edges]
        if num_nodes is None:
            num_nodes = 1 + max((max(u, v) for u, v, _ in edges), default=-1)
        g = cls(num_nodes, zero_triangle_degree)
        for u, v, s in edges:
            g._check_nodes(u, v)
            if s not in (POSITIVE, NEGATIVE):
                raise GraphError(f"invalid sign {s!r} for edge ({u}, {v})")
            if v in g._sign[u]:
                raise GraphError(f"duplicate edge ({u}, {v})")
            g._insert(u, v, s)
        g.recompute_stats()
        return g

    def copy(self) -> "SignedGraph":
        return copy.deepcopy(self)

    # -- queries ----------------------------------------------------------

    @property
    def num_edges(self) -> int:
        return self._num_pos + self._num_neg

    @property
    def num_positive(self) -> int:
        return self._num_pos

    @property
    def num_negative(self) -> int:
        return self._num_neg

    def has_edge(self, u: int, v: int) -> bool:
        return 0 <= u < self.num_nodes and v in self._sign[u]

    def sign(self, u: int, v: int) -> int:
        """Sign of edge (u, v), or 0 when absent."""
        return self._sign[u].get(v, 0)

    def positive_neighbors(self, u: int) -> Sequence[int]:
        return self._pos[u]

    def negative_neighbors(self, u: int) -> Sequence[int]:
        return self._neg[u]

    def neighbors(self, u: int) -> dict[int, int]:
        """Read-only view: neighbour id -> sign."""
        return self._sign[u]

    def degree(self, u: int) -> int:
        return len(self._sign[u])

    def edges(self) -> Iterator[tuple[int, int, int]]:
        """Yield ``(u, v, sign)`` with ``u < v`` in ascending (u, v) order."""
        for u in range(self.num_nodes):
            row = self._sign[u]
            for v in sorted(w for w in row if w > u):
                yield u, v, row[v]

    def edge_list(self) -> list[tuple[int, int, int]]:
        return list(self.edges())

    def edge_array(self) -> np.ndarray:
        """Edges as an ``(m, 3)`` int64 array, same order as :meth:`edges`."""
        arr = np.array(self.edge_list(), dtype=np.int64)
        return arr.reshape(-1, 3)

    def common_neighbors(self, u: int, v: int) -> list[int]:
        a, b = self._sign[u], self._sign[v]
        if len(a) > len(b):
            a, b = b, a
        return [w for w in a if w in b]

    def local_balance_degree(self, v: int) -> float:
        return local_balance_degree(self.stats, v, self.zero_triangle_degree)

    def balance_degrees(self) -> np.ndarray:
        """Local balance degree of every node as a float array."""
        b = self.stats.balanced.astype(float)
        u = self.stats.unbalanced.astype(float)
        tot = b + u
        out = np.full(self.num_nodes, self.zero_triangle_degree)
        nz = tot > 0
        out[nz] = (b[nz] - u[nz]) / tot[nz]
        return out

    # -- mutation ---------------------------------------------------------

    def recompute_stats(self) -> TriangleStats:
        """Rebuild triangle counts from scratch and store them."""
        self.stats = triangle_stats(self)
        return self.stats

    def apply(self, change: EdgeChange) -> None:
        """Apply ``change`` in place, updating triangle counts incrementally."""
        u, v = change.u, change.v
        self._check_change(change)
        kind = change.kind
        old = self._sign[u].get(v, 0)
        new = {ChangeKind.ADD: change.sign, ChangeKind.DELETE: 0, ChangeKind.FLIP: -old}[kind]
        bal, unb = self.stats.balanced, self.stats.unbalanced
        for w in self.common_neighbors(u, v):
            wedge = self._sign[u][w] * self._sign[v][w]
            if old:
                arr = bal if old * wedge > 0 else unb
                arr[u] -= 1
                arr[v] -= 1
                arr[w] -= 1
            if new:
                arr = bal if new * wedge > 0 else unb
                arr[u] += 1
                arr[v] += 1
                arr[w] += 1
        if old:
            self._remove(u, v)
        if new:
            self._insert(u, v, new)

    # -- internals --------------------------------------------------------

    def _check_nodes(self, u: int, v: int) -> None:
        if u == v:
            raise GraphError(f"self-loop on node {u}")
        for x in (u, v):
            if not 0 <= x < self.num_nodes:
                raise GraphError(f"unknown node id {x}")

    def _check_change(self, change: EdgeChange) -> None:
        u, v = change.u, change.v
        self._check_nodes(u, v)
        present = v in self._sign[u]
        if change.kind is ChangeKind.ADD and present:
            raise GraphError(f"cannot add ({u}, {v}): edge already present")
        if change.kind is not ChangeKind.ADD and not present:
            raise GraphError(f"cannot {change.kind.value} ({u}, {v}): edge absent")

    def _insert(self, u: int, v: int, s: int) -> None:
        self._sign[u][v] = s
        self._sign[v][u] = s
        lists = self._pos if s > 0 else self._neg
        bisect.insort(lists[u], v)
        bisect.insort(lists[v], u)
        if s > 0:
            self._num_pos += 1
        else:
            self._num_neg += 1

    def _remove(self, u: int, v: int) -> None:
        s = self._sign[u].pop(v)
        del self._sign[v][u]
        lists = self._pos if s > 0 else self._neg
        for a, b in ((u, v), (v, u)):
            row = lists[a]
            del row[bisect.bisect_left(row, b)]
        if s > 0:
            self._num_pos -= 1
        else:
            self._num_neg -= 1

    def __repr__(self) -> str:
        return (
            f"SignedGraph(num_nodes={self.num_nodes}, positive={self._num_pos}, "
            f"negative={self._num_neg})"
        )


def load_graph(
    edge_records: Iterable[tuple[int, int, int]],
    num_nodes: int | None = None,
    zero_triangle_degree: float = 1.0,
) -> SignedGraph:
    """Canonicalise ``(u, v, sign)`` records into a :class:`SignedGraph`.

    Repeated records for the same pair with the same sign collapse into one
    edge. The same pair carrying both signs, self-loops, negative ids and
    signs outside {+1, -1} are rejected.
    """
    seen: dict[tuple[int, int], int] = {}
    for rec in edge_records:
        u, v, s = (int(x) for x in rec)
        if u < 0 or v < 0:
            raise GraphError(f"negative node id in record {rec!r}")
        if u == v:
            raise GraphError(f"self-loop on node {u}")
        if s not in (POSITIVE, NEGATIVE):
            raise GraphError(f"invalid sign {s!r} for edge ({u}, {v})")
        key = _canon(u, v)
        prev = seen.setdefault(key, s)
        if prev != s:
            raise GraphError(f"conflicting signs for pair {key}")
    return SignedGraph.from_edges(
        ((u, v, s) for (u, v), s in seen.items()), num_nodes, zero_triangle_degree
    )


def enumerate_triangles(g: SignedGraph) -> list[tuple[int, int, int, bool]]:
    """List every triangle once as ``(i, j, k, balanced)`` with ``i < j < k``.

    For each edge (i, j) with i < j the sorted neighbour lists are merged to
    find common neighbours k > j.
    """
    out = []
    higher = [sorted(w for w in row if w > i) for i, row in enumerate(g._sign)]
    for i in range(g.num_nodes):
        row_i = g._sign[i]
        nb_i = higher[i]
        for j in nb_i:
            row_j = g._sign[j]
            nb_j = higher[j]
            a = bisect.bisect_right(nb_i, j)
            b = 0
            while a < len(nb_i) and b < len(nb_j):
                x, y = nb_i[a], nb_j[b]
                if x == y:
                    prod = row_i[j] * row_j[x] * row_i[x]
                    out.append((i, j, x, prod > 0))
                    a += 1
                    b += 1
                elif x < y:
                    a += 1
                else:
                    b += 1
    return out


def triangle_stats(g: SignedGraph) -> TriangleStats:
    """Per-node balanced/unbalanced counts from a full enumeration."""
    stats = TriangleStats.zeros(g.num_nodes)
    for i, j, k, balanced in _iter_triangles_fast(g):
        arr = stats.balanced if balanced else stats.unbalanced
        arr[i] += 1
        arr[j] += 1
        arr[k] += 1
    return stats


def _iter_triangles_fast(g: SignedGraph):
    # Set-intersection variant of enumerate_triangles; much faster in CPython
    # on high-degree graphs. Same output set.
    sign = g._sign
    for i in range(g.num_nodes):
        row_i = sign[i]
        higher_i = {w for w in row_i if w > i}
        for j in higher_i:
            row_j = sign[j]
            s_ij = row_i[j]
            small, big = (row_j, higher_i) if len(row_j) < len(higher_i) else (higher_i, row_j)
            for k in small:
                if k > j and k in big:
                    yield i, j, k, s_ij * row_j[k] * row_i[k] > 0


def local_balance_degree(
    stats: TriangleStats, v: int, zero_triangle_degree: float = 1.0
) -> float:
    """(balanced - unbalanced) / (balanced + unbalanced) for node ``v``.

    Nodes lying in no triangle get ``zero_triangle_degree``.
    """
    if not 0 <= v < len(stats.balanced):
        raise GraphError(f"unknown node id {v}")
    b = int(stats.balanced[v])
    u = int(stats.unbalanced[v])
    if b + u == 0:
        return float(zero_triangle_degree)
    return (b - u) / (b + u)


def exact_balance_degree(balanced: int, unbalanced: int, zero_triangle_degree=1) -> Fraction:
    """Rational form of the local balance degree, for exact comparisons."""
    if balanced + unbalanced == 0:
        return Fraction(zero_triangle_degree)
    return Fraction(balanced - unbalanced, balanced + unbalanced)


def _counts_after(g: SignedGraph, change: EdgeChange) -> tuple[tuple[int, int], tuple[int, int]]:
    """Balanced/unbalanced counts of both endpoints after ``change``."""
    g._check_change(change)
    u, v = change.u, change.v
    old = g.sign(u, v)
    new = {ChangeKind.ADD: change.sign, ChangeKind.DELETE: 0, ChangeKind.FLIP: -old}[change.kind]
    db = du = 0
    for w in g.common_neighbors(u, v):
        wedge = g._sign[u][w] * g._sign[v][w]
        if old:
            if old * wedge > 0:
                db -= 1
            else:
                du -= 1
        if new:
            if new * wedge > 0:
                db += 1
            else:
                du += 1
    bal, unb = g.stats.balanced, g.stats.unbalanced
    return (
        (int(bal[u]) + db, int(unb[u]) + du),
        (int(bal[v]) + db, int(unb[v]) + du),
    )


def balance_delta(g: SignedGraph, change: EdgeChange) -> tuple[float, float]:
    """Change in local balance degree at both endpoints if ``change`` were applied.

    ``g`` is not modified.
    """
    (bu, uu), (bv, uv) = _counts_after(g, change)
    z = g.zero_triangle_degree
    after_u = z if bu + uu == 0 else (bu - uu) / (bu + uu)
    after_v = z if bv + uv == 0 else (bv - uv) / (bv + uv)
    return after_u - g.local_balance_degree(change.u), after_v - g.local_balance_degree(change.v)


def exact_balance_delta(g: SignedGraph, change: EdgeChange) -> tuple[Fraction, Fraction]:
    """:func:`balance_delta` in exact rational arithmetic."""
    (bu, uu), (bv, uv) = _counts_after(g, change)
    z = Fraction(g.zero_triangle_degree)
    bal, unb = g.stats.balanced, g.stats.unbalanced
    u, v = change.u, change.v
    return (
        exact_balance_degree(bu, uu, z) - exact_balance_degree(int(bal[u]), int(unb[u]), z),
        exact_balance_degree(bv, uv, z) - exact_balance_degree(int(bal[v]), int(unb[v]), z),
    )


def apply_change(g: SignedGraph, change: EdgeChange) -> SignedGraph:
    """Apply ``change`` to ``g`` in place and return it."""
    g.apply(change)
    return g
