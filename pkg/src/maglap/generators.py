"""Seeded random generators for the network families used in the experiments.

Every generator draws from a single ``numpy.random.Generator`` created from
its ``seed`` argument, so the same seed and parameters always produce the
same edge list.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import GraphError, ParseError
from .graph import DirectedGraph, VertexLabels


class Family(str, enum.Enum):
    ER = "ER"
    BA = "BA"
    WS_DIRECTED = "WS_DIRECTED"
    SF = "SF"
    FLUX = "FLUX"
    MULTILAYER = "MULTILAYER"


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 64-bit child seed for ``(seed, *keys)``."""
    state = np.random.SeedSequence([int(seed) & (2**64 - 1), *[int(k) for k in keys]]).generate_state(
        2, dtype=np.uint32
    )
    return int(state[0]) << 32 | int(state[1])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed) & (2**64 - 1))


def _check_prob(name: str, p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"{name} must lie in [0, 1], got {p}")


def gen_er(n: int, p: float, seed) -> DirectedGraph:
    """Directed Erdos-Renyi: each ordered pair ``u != v`` independently w.p. ``p``."""
    _check_prob("p", p)
    rng = _rng(seed)
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    src, dst = np.nonzero(mask)
    return DirectedGraph.from_arrays(n, src, dst)


def gen_ba(n: int, m: int, seed) -> DirectedGraph:
    """Directed preferential attachment.

    The first ``m`` vertices start without edges. Each later vertex emits
    ``m`` out-edges to distinct earlier vertices, picked with probability
    proportional to ``in_degree + 1``.
    """
    if m < 1 or n <= m:
        raise GraphError(f"need m >= 1 and n > m, got n={n}, m={m}")
    rng = _rng(seed)
    indeg = np.zeros(n)
    src = np.empty((n - m) * m, dtype=np.int64)
    dst = np.empty_like(src)
    k = 0
    for t in range(m, n):
        w = indeg[:t] + 1.0
        targets = rng.choice(t, size=m, replace=False, p=w / w.sum())
        src[k:k + m] = t
        dst[k:k + m] = targets
        indeg[targets] += 1
        k += m
    return DirectedGraph.from_arrays(n, src, dst)


def _rewire_target(rng, n: int, u: int, taken) -> int | None:
    # uniform target avoiding self-loops and existing edges; None after n misses
    for _ in range(n):
        w = int(rng.integers(n))
        if w != u and w not in taken:
            return w
    return None


def gen_ws_directed(n: int, k: int, p_rewire_stage2: float = 0.1, seed=0,
                    p_rewire_stage1: float = 0.01) -> DirectedGraph:
    """Directed small world built in two rewiring stages.

    A ring lattice with ``k`` nearest neighbours is rewired as an undirected
    graph with ``p_rewire_stage1``; each undirected edge then becomes two
    directed edges, each of which has its head rewired with
    ``p_rewire_stage2``.
    """
    if k % 2 or not 0 < k < n:
        raise GraphError(f"k must be even with 0 < k < n, got k={k}, n={n}")
    _check_prob("p_rewire_stage1", p_rewire_stage1)
    _check_prob("p_rewire_stage2", p_rewire_stage2)
    rng = _rng(seed)

    und: list[list[int]] = []
    adj: list[set[int]] = [set() for _ in range(n)]
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            und.append([u, v])
            adj[u].add(v)
            adj[v].add(u)
    for e in und:
        if rng.random() < p_rewire_stage1:
            u, v = e
            w = _rewire_target(rng, n, u, adj[u])
            if w is None:
                continue
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
            e[1] = w

    directed = [[u, v] for u, v in und] + [[v, u] for u, v in und]
    out: list[set[int]] = [set() for _ in range(n)]
    for u, v in directed:
        out[u].add(v)
    for e in directed:
        if rng.random() < p_rewire_stage2:
            u, v = e
            w = _rewire_target(rng, n, u, out[u])
            if w is None:
                continue
            out[u].discard(v)
            out[u].add(w)
            e[1] = w
    arr = np.array(directed, dtype=np.int64)
    return DirectedGraph.from_arrays(n, arr[:, 0], arr[:, 1])


def gen_sf(n: int, alpha: float = 0.41, beta: float = 0.54, gamma: float = 0.05, seed=0,
           delta_in: float = 0.2, delta_out: float = 0.2) -> DirectedGraph:
    """Directed scale-free growth with three attachment modes (Bollobas et al.).

    Starting from a single vertex, each step either adds a vertex with an
    out-edge to an existing vertex (``alpha``), adds an edge between existing
    vertices (``beta``) or adds a vertex receiving an edge from an existing
    vertex (``gamma``). Endpoints are chosen with probability proportional to
    ``in_degree + delta_in`` (heads) or ``out_degree + delta_out`` (tails).
    Growth stops at ``n`` vertices; every step adds exactly one edge.
    """
    if min(alpha, beta, gamma) < 0 or abs(alpha + beta + gamma - 1.0) > 1e-9:
        raise GraphError(f"alpha + beta + gamma must equal 1, got {alpha + beta + gamma}")
    if n < 1:
        raise GraphError("n must be >= 1")
    if n > 1 and alpha + gamma == 0:
        raise GraphError("alpha + gamma must be positive for the graph to grow")
    rng = _rng(seed)
    indeg = np.zeros(n)
    outdeg = np.zeros(n)
    present: set[tuple[int, int]] = set()
    src: list[int] = []
    dst: list[int] = []
    size = 1

    def pick(deg, delta):
        w = deg[:size] + delta
        total = w.sum()
        if total <= 0:
            return int(rng.integers(size))
        return int(rng.choice(size, p=w / total))

    while size < n:
        r = rng.random()
        if r < alpha:
            u, v = size, pick(indeg, delta_in)
            size += 1
        elif r < alpha + beta:
            if len(present) >= size * (size - 1):
                continue
            for _ in range(100):
                u, v = pick(outdeg, delta_out), pick(indeg, delta_in)
                if u != v and (u, v) not in present:
                    break
            else:
                continue
        else:
            u, v = pick(outdeg, delta_out), size
            size += 1
        present.add((u, v))
        src.append(u)
        dst.append(v)
        outdeg[u] += 1
        indeg[v] += 1
    return DirectedGraph.from_arrays(n, src, dst)


def gen_flux(N_f: int, N_c: int, p_c: float, p_d: float, seed) -> tuple[DirectedGraph, VertexLabels]:
    """Modular digraph with ``N_f`` blocks of ``N_c`` vertices and cyclic block flow.

    Vertex ``u`` belongs to block ``u // N_c``. Inside a block each ordered pair
    is linked with ``p_c``; from block ``i`` to block ``i + 1 (mod N_f)`` each
    pair is linked with ``p_d``.
    """
    if N_f < 2 or N_c < 1:
        raise GraphError(f"need N_f >= 2 and N_c >= 1, got N_f={N_f}, N_c={N_c}")
    _check_prob("p_c", p_c)
    _check_prob("p_d", p_d)
    rng = _rng(seed)
    n = N_f * N_c
    srcs, dsts = [], []
    for i in range(N_f):
        base, nxt = i * N_c, ((i + 1) % N_f) * N_c
        intra = rng.random((N_c, N_c)) < p_c
        np.fill_diagonal(intra, False)
        a, b = np.nonzero(intra)
        srcs.append(a + base)
        dsts.append(b + base)
        inter = rng.random((N_c, N_c)) < p_d
        a, b = np.nonzero(inter)
        srcs.append(a + base)
        dsts.append(b + nxt)
    g = DirectedGraph.from_arrays(n, np.concatenate(srcs), np.concatenate(dsts))
    labels = {u: str(u // N_c) for u in range(n)}
    return g, labels


@dataclass(frozen=True)
class GenConfig:
    """A generator family with its parameters and seed.

    ``params`` holds the family-specific keyword arguments; for
    ``MULTILAYER`` it holds ``layer_a``/``layer_b`` (``GenConfig``) and ``p_inter``.
    """

    family: Family
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def with_params(self, **kw) -> "GenConfig":
        return GenConfig(self.family, {**self.params, **kw}, self.seed)

    def with_seed(self, seed: int) -> "GenConfig":
        return GenConfig(self.family, dict(self.params), seed)

    def to_text(self) -> str:
        """Flat ``key=value`` lines; nested layer configs use ``layer_a.`` prefixes."""
        lines = [f"family={self.family.value}", f"seed={self.seed}"]
        for k in sorted(self.params):
            v = self.params[k]
            if isinstance(v, GenConfig):
                for sub in v.to_text().splitlines():
                    lines.append(f"{k}.{sub}")
            else:
                lines.append(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GenConfig":
        flat: dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ParseError(f"expected key=value, got {body!r}", lineno)
            k, v = (s.strip() for s in body.split("=", 1))
            flat[k] = v
        return cls._from_flat(flat)

    @classmethod
    def _from_flat(cls, flat: dict[str, str]) -> "GenConfig":
        try:
            family = Family(flat.pop("family").upper())
        except KeyError:
            raise ParseError("config lacks 'family'") from None
        except ValueError as exc:
            raise ParseError(str(exc)) from None
        seed = int(flat.pop("seed", "0"))
        nested: dict[str, dict[str, str]] = {}
        params: dict[str, Any] = {}
        for k, v in flat.items():
            if "." in k:
                head, rest = k.split(".", 1)
                nested.setdefault(head, {})[rest] = v
            else:
                params[k] = _parse_scalar(v)
        for k, sub in nested.items():
            params[k] = cls._from_flat(sub)
        return cls(family, params, seed)


def _parse_scalar(v: str):
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    return v


_PARAMS = {
    Family.ER: ("n", "p"),
    Family.BA: ("n", "m"),
    Family.WS_DIRECTED: ("n", "k", "p_rewire_stage2", "p_rewire_stage1"),
    Family.SF: ("n", "alpha", "beta", "gamma", "delta_in", "delta_out"),
    Family.FLUX: ("N_f", "N_c", "p_c", "p_d"),
    Family.MULTILAYER: ("layer_a", "layer_b", "p_inter"),
}


def family_parameters(family: Family | str) -> tuple[str, ...]:
    return _PARAMS[Family(family)]


def generate(config: GenConfig) -> tuple[DirectedGraph, VertexLabels | None]:
    """Dispatch on ``config.family``. Returns the graph and labels (or ``None``)."""
    family = Family(config.family)
    allowed = _PARAMS[family]
    unknown = set(config.params) - set(allowed)
    if unknown:
        raise GraphError(f"{family.value} does not take parameters {sorted(unknown)}")
    p = config.params
    seed = config.seed
    if family is Family.ER:
        return gen_er(int(p["n"]), float(p["p"]), seed), None
    if family is Family.BA:
        return gen_ba(int(p["n"]), int(p["m"]), seed), None
    if family is Family.WS_DIRECTED:
        kw = {k: float(p[k]) for k in ("p_rewire_stage2", "p_rewire_stage1") if k in p}
        return gen_ws_directed(int(p["n"]), int(p["k"]), seed=seed, **kw), None
    if family is Family.SF:
        kw = {k: float(p[k]) for k in ("alpha", "beta", "gamma", "delta_in", "delta_out") if k in p}
        return gen_sf(int(p["n"]), seed=seed, **kw), None
    if family is Family.FLUX:
        return gen_flux(int(p["N_f"]), int(p["N_c"]), float(p["p_c"]), float(p["p_d"]), seed)
    return gen_multilayer(p["layer_a"], p["layer_b"], float(p["p_inter"]), seed)


def gen_multilayer(layer_a: GenConfig, layer_b: GenConfig, p_inter: float, seed
                   ) -> tuple[DirectedGraph, VertexLabels]:
    """Disjoint union of two generated layers plus random directed inter-layer edges.

    Layer seeds are derived from ``seed``; the layer configs' own seeds are
    ignored so that one seed fixes the whole multilayer network. Labels are
    ``"A"`` and ``"B"``.
    """
    _check_prob("p_inter", p_inter)
    ga, _ = generate(layer_a.with_seed(derive_seed(seed, 0)))
    gb, _ = generate(layer_b.with_seed(derive_seed(seed, 1)))
    na, nb = ga.n, gb.n
    rng = _rng(derive_seed(seed, 2))
    ab = rng.random((na, nb)) < p_inter
    ba = rng.random((nb, na)) < p_inter
    a1, b1 = np.nonzero(ab)
    b2, a2 = np.nonzero(ba)
    src = np.concatenate([ga.src, gb.src + na, a1, b2 + na])
    dst = np.concatenate([ga.dst, gb.dst + na, b1 + na, a2])
    g = DirectedGraph.from_arrays(na + nb, src, dst)
    labels = {u: ("A" if u < na else "B") for u in range(na + nb)}
    return g, labels
