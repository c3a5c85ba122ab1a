"""Directed weighted graphs: storage, ingestion and basic structure.

Graphs are immutable. Edges are kept as three parallel numpy arrays sorted
by ``(u, v)``, which keeps equality checks and serialization deterministic.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import GraphError, ParseError

VertexLabels = dict[int, str]

_VERTEX_HINT = "vertices:"


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Weighted digraph on vertices ``0..n-1`` without self-loops or multi-edges.

    Use :meth:`from_edges` rather than the raw constructor; it validates and
    canonicalizes the edge arrays.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable, default_weight: float = 1.0) -> "DirectedGraph":
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples. Later duplicates win."""
        n = int(n)
        if n < 1:
            raise GraphError(f"vertex count must be >= 1, got {n}")
        table: dict[tuple[int, int], float] = {}
        for e in edges:
            if len(e) == 2:
                u, v = e
                w = default_weight
            else:
                u, v, w = e
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) references a vertex outside 0..{n - 1}")
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not math.isfinite(w) or w < 0:
                raise GraphError(f"edge ({u}, {v}) has invalid weight {w}")
            table[(u, v)] = w
        return cls._from_table(n, table)

    @classmethod
    def from_arrays(cls, n: int, src, dst, weight=None) -> "DirectedGraph":
        """Vectorized constructor for generators; same validation as :meth:`from_edges`."""
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if weight is None:
            weight = np.ones(src.shape[0])
        weight = np.asarray(weight, dtype=float).ravel()
        if not (src.shape == dst.shape == weight.shape):
            raise GraphError("edge arrays differ in length")
        if src.size:
            if src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n:
                raise GraphError(f"edge references a vertex outside 0..{n - 1}")
            if np.any(src == dst):
                raise GraphError(f"self-loop at vertex {int(src[src == dst][0])}")
            if not np.all(np.isfinite(weight)) or np.any(weight < 0):
                raise GraphError("edge weights must be finite and non-negative")
        key = src * n + dst
        # keep the last occurrence of each (u, v)
        rev_key = key[::-1]
        _, first_in_rev = np.unique(rev_key, return_index=True)
        keep = (key.size - 1 - first_in_rev)
        order = np.argsort(key[keep], kind="stable")
        keep = keep[order]
        return cls(
            n=int(n),
            src=_frozen(src[keep].copy()),
            dst=_frozen(dst[keep].copy()),
            weight=_frozen(weight[keep].copy()),
        )

    @classmethod
    def _from_table(cls, n: int, table: Mapping[tuple[int, int], float]) -> "DirectedGraph":
        items = sorted(table.items())
        src = np.array([k[0] for k, _ in items], dtype=np.int64)
        dst = np.array([k[1] for k, _ in items], dtype=np.int64)
        w = np.array([x for _, x in items], dtype=float)
        return cls(n=n, src=_frozen(src), dst=_frozen(dst), weight=_frozen(w))

    @property
    def num_edges(self) -> int:
        return int(self.src.size)

    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(u), int(v), float(w)) for u, v, w in zip(self.src, self.dst, self.weight)]

    def weight_of(self, u: int, v: int) -> float:
        """Weight of the directed edge ``u -> v`` (0 when absent)."""
        self._check_vertex(u)
        self._check_vertex(v)
        if not self._index:
            self._index.update({(int(a), int(b)): float(w) for a, b, w in zip(self.src, self.dst, self.weight)})
        return self._index.get((int(u), int(v)), 0.0)

    def weight_matrix(self) -> np.ndarray:
        """Dense ``n x n`` matrix ``W[u, v] = w(u, v)``."""
        W = np.zeros((self.n, self.n))
        W[self.src, self.dst] = self.weight
        return W

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.n)

    def in_degree(self) -> np.ndarray:
        return np.bincount(self.dst, minlength=self.n)

    def _check_vertex(self, u: int) -> None:
        if not 0 <= int(u) < self.n:
            raise GraphError(f"vertex {u} out of range 0..{self.n - 1}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.weight, other.weight)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"DirectedGraph(n={self.n}, edges={self.num_edges})"


@dataclass(frozen=True)
class SymmetricView:
    """Undirected counterpart with ``w_s(u, v) = (w(u, v) + w(v, u)) / 2``."""

    n: int
    weights: np.ndarray

    def degree(self) -> np.ndarray:
        return self.weights.sum(axis=1)


def symmetrize(g: DirectedGraph) -> SymmetricView:
    W = g.weight_matrix()
    Ws = (W + W.T) / 2
    return SymmetricView(n=g.n, weights=_frozen(Ws))


def flow_matrix(g: DirectedGraph) -> np.ndarray:
    """Antisymmetric matrix ``F[u, v] = w(u, v) - w(v, u)``."""
    W = g.weight_matrix()
    return W - W.T


def flow(g: DirectedGraph, u: int, v: int) -> float:
    return g.weight_of(u, v) - g.weight_of(v, u)


def _components(g: DirectedGraph) -> tuple[int, np.ndarray]:
    A = coo_matrix((np.ones(g.num_edges), (g.src, g.dst)), shape=(g.n, g.n))
    return connected_components(A, directed=True, connection="weak")


def is_weakly_connected(g: DirectedGraph) -> bool:
    ncomp, _ = _components(g)
    return ncomp == 1


def induced_subgraph(g: DirectedGraph, vertices) -> DirectedGraph:
    """Subgraph on ``vertices`` (kept in ascending order, relabeled ``0..k-1``)."""
    vertices = np.unique(np.asarray(vertices, dtype=np.int64))
    if vertices.size == 0:
        raise GraphError("cannot take an empty subgraph")
    remap = -np.ones(g.n, dtype=np.int64)
    remap[vertices] = np.arange(vertices.size)
    keep = (remap[g.src] >= 0) & (remap[g.dst] >= 0)
    return DirectedGraph.from_arrays(vertices.size, remap[g.src[keep]], remap[g.dst[keep]], g.weight[keep])


def largest_weak_component(g: DirectedGraph) -> tuple[DirectedGraph, np.ndarray]:
    """Largest weakly connected component and the original ids it keeps.

    Ties between equally large components go to the one holding the smallest id.
    """
    ncomp, labels = _components(g)
    if ncomp == 1:
        return g, np.arange(g.n)
    sizes = np.bincount(labels)
    best = int(np.argmax(sizes))
    kept = np.flatnonzero(labels == best)
    return induced_subgraph(g, kept), kept


def permute(g: DirectedGraph, sigma) -> DirectedGraph:
    """Relabel vertex ``u`` as ``sigma[u]``."""
    sigma = np.asarray(sigma, dtype=np.int64)
    if sigma.shape != (g.n,) or not np.array_equal(np.sort(sigma), np.arange(g.n)):
        raise GraphError("sigma is not a permutation of 0..n-1")
    return DirectedGraph.from_arrays(g.n, sigma[g.src], sigma[g.dst], g.weight)


def _as_text(data) -> str:
    if isinstance(data, (bytes, bytearray)):
        return data.decode("utf-8")
    if isinstance(data, str):
        return data
    raw = data.read()
    return raw.decode("utf-8") if isinstance(raw, bytes) else raw


def load_edge_list(data, n: int | None = None) -> DirectedGraph:
    """Parse ``u v [w]`` lines; ``#`` starts a comment and ``w`` defaults to 1.

    A ``# vertices: N`` comment (written by :func:`dump_edge_list`) pads the
    vertex count so trailing isolated vertices survive a round trip.
    """
    table: dict[tuple[int, int], float] = {}
    hinted = 0
    max_id = -1
    for lineno, line in enumerate(_as_text(data).splitlines(), start=1):
        body, _, comment = line.partition("#")
        comment = comment.strip()
        if comment.startswith(_VERTEX_HINT):
            try:
                hinted = int(comment[len(_VERTEX_HINT):].strip())
            except ValueError:
                raise ParseError(f"bad vertex-count hint {comment!r}", lineno) from None
        tokens = body.split()
        if not tokens:
            continue
        if len(tokens) not in (2, 3):
            raise ParseError(f"expected 'u v [w]', got {body.strip()!r}", lineno)
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise ParseError(f"non-integer vertex id in {body.strip()!r}", lineno) from None
        if u < 0 or v < 0:
            raise ParseError("negative vertex id", lineno)
        w = 1.0
        if len(tokens) == 3:
            try:
                w = float(tokens[2])
            except ValueError:
                raise ParseError(f"non-numeric weight {tokens[2]!r}", lineno) from None
            if not math.isfinite(w) or w < 0:
                raise ParseError(f"weight must be finite and non-negative, got {tokens[2]}", lineno)
        if u == v:
            raise ParseError(f"self-loop at vertex {u} rejected", lineno)
        table[(u, v)] = w
        max_id = max(max_id, u, v)
    size = max(max_id + 1, hinted, n or 0, 1)
    return DirectedGraph._from_table(size, table)


def dump_edge_list(g: DirectedGraph) -> str:
    out = io.StringIO()
    out.write(f"# {_VERTEX_HINT} {g.n}\n")
    for u, v, w in g.edges():
        out.write(f"{u} {v} {w!r}\n")
    return out.getvalue()


def load_labels(data, n: int | None = None) -> VertexLabels:
    """Parse ``id label`` lines. The label is the rest of the line, stripped."""
    labels: VertexLabels = {}
    for lineno, line in enumerate(_as_text(data).splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        head, _, rest = body.partition(" ")
        if not rest.strip():
            head, _, rest = body.partition("\t")
        try:
            vid = int(head)
        except ValueError:
            raise ParseError(f"non-integer vertex id {head!r}", lineno) from None
        if vid < 0 or (n is not None and vid >= n):
            raise ParseError(f"vertex id {vid} out of range", lineno)
        if not rest.strip():
            raise ParseError("missing label", lineno)
        labels[vid] = rest.strip()
    return labels


def dump_labels(labels: Mapping[int, str]) -> str:
    return "".join(f"{k} {labels[k]}\n" for k in sorted(labels))


def labels_array(labels: Mapping[int, str], n: int) -> np.ndarray:
    """Labels as an object array of length ``n``; unlabeled vertices hold ``None``."""
    out = np.full(n, None, dtype=object)
    for k, v in labels.items():
        if not 0 <= k < n:
            raise GraphError(f"labeled vertex {k} out of range")
        out[k] = v
    return out
