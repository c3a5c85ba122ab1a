"""Geometric coarse-graining in an embedding space, plus petal counting.

One coarse step embeds the graph, pairs vertices greedily by proximity,
and contracts each pair into a super-vertex. Super-edge ``l -> m`` exists
when the summed weight of edges from ``l``'s members to ``m``'s members is
at least one.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.signal import find_peaks

from . import embed, thermo
from .embed import EmbeddingCoords, Space
from .errors import GraphError
from .graph import DirectedGraph, dump_edge_list, is_weakly_connected, largest_weak_component

log = logging.getLogger(__name__)

Matching = list[tuple[int, ...]]


def _pairwise(coords: EmbeddingCoords) -> np.ndarray:
    X = coords.coords
    diff = X[:, None, :] - X[None, :, :]
    if coords.space is Space.FRUSTRATION_T2:
        diff = embed.wrap_phase(diff)
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def pair_by_proximity(coords: EmbeddingCoords) -> Matching:
    """Greedy matching: repeatedly join the closest pair of unmatched vertices.

    Distances are Euclidean, with torus wrapping for frustration coordinates.
    Ties go to the lexicographically smallest ``(u, v)``. With odd ``n`` the
    leftover vertex becomes a singleton. Pairs are returned sorted.
    """
    n = coords.n
    if n < 2:
        raise GraphError("pairing needs at least two vertices")
    D = _pairwise(coords)
    iu, iv = np.triu_indices(n, 1)
    order = np.lexsort((iv, iu, D[iu, iv]))
    matched = np.zeros(n, dtype=bool)
    pairs: Matching = []
    for k in order:
        u, v = int(iu[k]), int(iv[k])
        if matched[u] or matched[v]:
            continue
        matched[u] = matched[v] = True
        pairs.append((u, v))
        if len(pairs) == n // 2:
            break
    pairs.extend((int(u),) for u in np.flatnonzero(~matched))
    return sorted(pairs)


def _check_partition(n: int, matching: Matching) -> np.ndarray:
    owner = -np.ones(n, dtype=np.int64)
    for idx, group in enumerate(matching):
        for u in group:
            if not 0 <= u < n or owner[u] >= 0:
                raise GraphError(f"matching is not a partition of 0..{n - 1} (vertex {u})")
            owner[u] = idx
    if np.any(owner < 0):
        raise GraphError(f"matching misses vertex {int(np.flatnonzero(owner < 0)[0])}")
    return owner


def coarsen(g: DirectedGraph, matching: Matching) -> DirectedGraph:
    """Contract each group of ``matching`` into one vertex with binary super-edges."""
    owner = _check_partition(g.n, matching)
    k = len(matching)
    S = np.zeros((k, k))
    np.add.at(S, (owner[g.src], owner[g.dst]), g.weight)
    np.fill_diagonal(S, 0.0)
    src, dst = np.nonzero(S >= 1.0)
    return DirectedGraph.from_arrays(k, src, dst)


def _ring(hm: thermo.HeatMap, T_ring: float) -> np.ndarray:
    Ts = hm.T_grid
    lo, hi = Ts.min(), Ts.max()
    span = hi - lo
    if not (lo - 1e-12 * max(span, 1) <= T_ring <= hi + 1e-12 * max(span, 1)):
        raise ValueError(f"T_ring={T_ring} lies outside the grid [{lo}, {hi}]")
    row = hm.values[int(np.argmin(np.abs(Ts - T_ring)))]
    q = np.mod(hm.q_grid, 1.0)
    # mirror through q <-> 1 - q to cover the whole circle
    mirror = np.mod(1.0 - q, 1.0)
    angles = np.concatenate([q, mirror])
    vals = np.concatenate([row, row])
    order = np.argsort(angles, kind="stable")
    angles, vals = angles[order], vals[order]
    keep = np.ones(angles.size, dtype=bool)
    keep[1:] = ~np.isclose(angles[1:], angles[:-1], rtol=0, atol=1e-12)
    return vals[keep]


def petal_count(hm: thermo.HeatMap, T_ring: float, min_prominence: float = 0.01) -> int:
    """Number of angular maxima of ``c(q, T_ring)`` around the full charge circle.

    The nearest grid temperature is used. Maxima are counted circularly,
    plateaus once, and only when their prominence is at least
    ``min_prominence`` times the ring maximum (suppresses numerical ripple).
    """
    ring = _ring(hm, T_ring)
    k = ring.size
    top = ring.max()
    if k < 3 or top <= 0 or np.allclose(ring, ring[0], rtol=1e-12, atol=0):
        return 0
    tiled = np.concatenate([ring, ring, ring])
    peaks, props = find_peaks(tiled, prominence=min_prominence * top)
    return int(np.count_nonzero((peaks >= k) & (peaks < 2 * k)))


class Embedder(str, enum.Enum):
    FRUSTRATION_T2 = "FRUSTRATION_T2"
    DIFFUSION = "DIFFUSION"


@dataclass
class CoarseStep:
    graph: DirectedGraph
    heatmap: thermo.HeatMap
    coords: EmbeddingCoords
    matching: Matching | None
    disconnected: bool = False
    members: list[np.ndarray] = field(default_factory=list)


def embed_graph(g: DirectedGraph, q: float, embedder: Embedder | str, **kw) -> EmbeddingCoords:
    embedder = Embedder(embedder)
    if embedder is Embedder.FRUSTRATION_T2:
        return embed.eigenmap_t2(g, q)
    return embed.diffusion_embedding(g, q, **kw)


def coarse_flow(g: DirectedGraph, q: float, steps: int, embedder: Embedder | str = Embedder.FRUSTRATION_T2, *,
                q_grid=thermo.DEFAULT_Q_GRID, T_grid=thermo.DEFAULT_T_GRID, jobs: int = 1,
                embed_kw: dict | None = None) -> list[CoarseStep]:
    """Measure, embed, pair and coarsen ``steps`` times; returns ``steps + 1`` states.

    A graph that is (or becomes) disconnected is replaced by its largest weak
    component and the step is flagged. ``members`` tracks, for every vertex
    of the step's graph, the original vertex ids it absorbs.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if g.n < 2**steps:
        raise GraphError(f"graph with {g.n} vertices is too small for {steps} coarse steps")
    members = [np.array([u]) for u in range(g.n)]
    out: list[CoarseStep] = []
    for step in range(steps + 1):
        flag = False
        if not is_weakly_connected(g):
            flag = True
            g, kept = largest_weak_component(g)
            members = [members[i] for i in kept]
            log.warning("coarse step %d: graph disconnected, continuing on %d vertices", step, g.n)
        hm = thermo.heat_map(g, q_grid, T_grid, jobs=jobs)
        coords = embed_graph(g, q, embedder, **(embed_kw or {}))
        matching = pair_by_proximity(coords) if step < steps else None
        out.append(CoarseStep(g, hm, coords, matching, flag, members))
        if matching is not None:
            members = [np.concatenate([members[u] for u in grp]) for grp in matching]
            g = coarsen(g, matching)
    return out


def export_flow(flow: Sequence[CoarseStep], outdir: Path, T_ring: float | None = None,
                min_prominence: float = 0.01) -> dict:
    """Write per-step edge list, heat map and coordinates plus a JSON manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    steps = []
    for i, st in enumerate(flow):
        (outdir / f"step{i}_graph.txt").write_text(dump_edge_list(st.graph))
        (outdir / f"step{i}_heat.csv").write_text(thermo.heatmap_to_csv(st.heatmap))
        (outdir / f"step{i}_coords.csv").write_text(st.coords.to_csv())
        entry = {"step": i, "n": st.graph.n, "edges": st.graph.num_edges, "disconnected": st.disconnected}
        if T_ring is not None:
            entry["petals"] = petal_count(st.heatmap, T_ring, min_prominence)
        steps.append(entry)
    manifest = {"T_ring": T_ring, "steps": steps}
    (outdir / "flow.json").write_text(json.dumps(manifest, indent=2))
    return manifest
