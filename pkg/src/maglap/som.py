"""Kohonen self-organizing map over flattened specific-heat fingerprints.

Neurons live on a ``width x height`` grid and are addressed as ``(x, y)``.
Internally they are stored in x-major order, so the flat index of ``(x, y)``
is ``x * height + y`` and ``argmin`` tie-breaking picks the smallest
``(x, y)`` lexicographically.
"""

from __future__ import annotations

import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from . import generators, thermo
from .errors import SizeMismatchError
from .generators import Family, GenConfig
from .graph import largest_weak_component


@dataclass
class SomGrid:
    width: int
    height: int
    weights: np.ndarray  # (width * height, dim)
    epochs: int = 50
    lr_initial: float = 0.5
    lr_final: float = 0.01
    radius_initial: float | None = None
    radius_final: float = 1.0
    seed: int = 0
    qe_history: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return int(self.weights.shape[1])

    def positions(self) -> np.ndarray:
        xs, ys = np.meshgrid(np.arange(self.width), np.arange(self.height), indexing="ij")
        return np.column_stack([xs.ravel(), ys.ravel()]).astype(float)

    def weight_grid(self) -> np.ndarray:
        return self.weights.reshape(self.width, self.height, self.dim)


def _as_samples(samples) -> np.ndarray:
    if len(samples) == 0:
        raise ValueError("no samples given")
    try:
        X = np.asarray(samples, dtype=float)
    except ValueError as exc:
        raise SizeMismatchError("samples have differing dimensions") from exc
    if X.ndim != 2:
        raise SizeMismatchError("samples have differing dimensions")
    if not np.all(np.isfinite(X)):
        raise ValueError("samples contain non-finite values")
    return X


def _schedule(start: float, end: float, epoch: int, epochs: int) -> float:
    if epochs <= 1:
        return start
    return start * (end / start) ** (epoch / (epochs - 1))


def train(samples, width: int = 12, height: int = 12, *, epochs: int = 50, lr_initial: float = 0.5,
          lr_final: float = 0.01, radius_initial: float | None = None, radius_final: float = 1.0,
          seed: int = 0) -> SomGrid:
    """Online Kohonen training with a Gaussian neighbourhood.

    Weights start uniform within each dimension's data range. Every epoch
    visits the samples in a fresh seeded order; learning rate and radius
    decay exponentially from their initial to final values.
    """
    X = _as_samples(samples)
    if width < 1 or height < 1 or epochs < 1:
        raise ValueError("grid dimensions and epochs must be positive")
    if radius_initial is None:
        radius_initial = max(width, height) / 2
    radius_final = min(radius_final, radius_initial)
    rng = np.random.default_rng(seed)
    lo, hi = X.min(axis=0), X.max(axis=0)
    W = lo + rng.random((width * height, X.shape[1])) * (hi - lo)
    som = SomGrid(width, height, W, epochs, lr_initial, lr_final, radius_initial, radius_final, seed)
    pos = som.positions()
    for e in range(epochs):
        lr = _schedule(lr_initial, lr_final, e, epochs)
        radius = _schedule(radius_initial, radius_final, e, epochs)
        denom = 2.0 * radius * radius
        for i in rng.permutation(X.shape[0]):
            x = X[i]
            b = int(np.argmin(((W - x) ** 2).sum(axis=1)))
            d2 = ((pos - pos[b]) ** 2).sum(axis=1)
            h = np.exp(-d2 / denom)
            W += (lr * h)[:, None] * (x - W)
        som.qe_history.append(quantization_error(som, X))
    return som


def _check_dim(som: SomGrid, x: np.ndarray) -> None:
    if x.shape[-1] != som.dim:
        raise SizeMismatchError(f"sample dimension {x.shape[-1]} != SOM dimension {som.dim}")


def bmu(som: SomGrid, sample) -> tuple[int, int]:
    x = np.asarray(sample, dtype=float)
    _check_dim(som, x)
    b = int(np.argmin(((som.weights - x) ** 2).sum(axis=1)))
    return divmod(b, som.height)


def bmu_indices(som: SomGrid, samples) -> np.ndarray:
    """Flat BMU index for every sample."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    _check_dim(som, X)
    return np.array([np.argmin(((som.weights - x) ** 2).sum(axis=1)) for x in X], dtype=np.int64)


def quantization_error(som: SomGrid, samples) -> float:
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    _check_dim(som, X)
    idx = bmu_indices(som, X)
    return float(np.linalg.norm(X - som.weights[idx], axis=1).mean())


def label_map(som: SomGrid, samples, labels: Sequence) -> list[list[Counter]]:
    """``hist[x][y]`` counts the labels of samples whose BMU is ``(x, y)``."""
    if len(samples) != len(labels):
        raise SizeMismatchError("samples and labels differ in length")
    hist = [[Counter() for _ in range(som.height)] for _ in range(som.width)]
    if len(samples) == 0:
        return hist
    for b, lab in zip(bmu_indices(som, samples), labels):
        x, y = divmod(int(b), som.height)
        hist[x][y][lab] += 1
    return hist


def map_purity(hist: list[list[Counter]]) -> float:
    """Fraction of samples carrying the majority label of their BMU."""
    total = sum(sum(c.values()) for row in hist for c in row)
    if total == 0:
        return 0.0
    return sum(max(c.values()) for row in hist for c in row if c) / total


def u_matrix(som: SomGrid) -> np.ndarray:
    """Mean Euclidean distance from each neuron to its 4-neighbours, shape ``(width, height)``."""
    G = som.weight_grid()
    total = np.zeros((som.width, som.height))
    count = np.zeros((som.width, som.height))
    dx = np.linalg.norm(G[1:] - G[:-1], axis=2)
    total[1:] += dx
    total[:-1] += dx
    count[1:] += 1
    count[:-1] += 1
    dy = np.linalg.norm(G[:, 1:] - G[:, :-1], axis=2)
    total[:, 1:] += dy
    total[:, :-1] += dy
    count[:, 1:] += 1
    count[:, :-1] += 1
    return np.divide(total, count, out=np.zeros_like(total), where=count > 0)


def class_regions(som: SomGrid, samples, labels: Sequence) -> dict:
    """For each label, the largest share of its BMUs falling in one connected region.

    Regions are 4-connected groups of neurons carrying that label in
    :func:`neuron_classes`, so the neurons between BMUs count towards
    contiguity.
    """
    idx = bmu_indices(som, samples)
    labels = np.asarray(labels, dtype=object)
    classes = neuron_classes(som, samples, labels).ravel()
    out = {}
    for lab in dict.fromkeys(labels.tolist()):
        comp, k = ndimage.label((classes == lab).reshape(som.width, som.height))
        hits = comp.ravel()[idx[labels == lab]]
        hits = hits[hits > 0]
        out[lab] = float(np.bincount(hits).max() / np.count_nonzero(labels == lab)) if hits.size else 0.0
    return out


def neuron_classes(som: SomGrid, samples, labels: Sequence) -> np.ndarray:
    """Label of the sample nearest to each neuron's weight vector, shape ``(width, height)``."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    _check_dim(som, X)
    d2 = (som.weights**2).sum(1)[:, None] - 2 * som.weights @ X.T + (X**2).sum(1)[None, :]
    nearest = np.argmin(d2, axis=1)
    return np.asarray(labels, dtype=object)[nearest].reshape(som.width, som.height)


def boundary_mask(classes: np.ndarray) -> np.ndarray:
    """Neurons with at least one 4-neighbour of a different class."""
    b = np.zeros(classes.shape, dtype=bool)
    dx = classes[1:] != classes[:-1]
    b[1:] |= dx
    b[:-1] |= dx
    dy = classes[:, 1:] != classes[:, :-1]
    b[:, 1:] |= dy
    b[:, :-1] |= dy
    return b


def boundary_elevation(som: SomGrid, samples, labels: Sequence) -> tuple[float, float]:
    """Mean U-matrix value on class-boundary neurons and on interior neurons."""
    U = u_matrix(som)
    mask = boundary_mask(neuron_classes(som, samples, labels))
    inner = U[~mask].mean() if (~mask).any() else float("nan")
    edge = U[mask].mean() if mask.any() else float("nan")
    return float(edge), float(inner)


def save(som: SomGrid) -> str:
    buf = io.StringIO()
    buf.write(f"{som.width} {som.height} {som.dim}\n")
    for row in som.weights:
        buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    return buf.getvalue()


def load(text: str) -> SomGrid:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty SOM file")
    try:
        width, height, dim = (int(t) for t in lines[0].split())
        W = np.array([[float(t) for t in ln.split()] for ln in lines[1:]])
    except ValueError as exc:
        raise ValueError(f"malformed SOM file: {exc}") from exc
    if W.shape != (width * height, dim):
        raise SizeMismatchError(f"expected {width * height} rows of {dim} weights, got {W.shape}")
    return SomGrid(width, height, W)


def label_map_csv(hist: list[list[Counter]]) -> str:
    buf = io.StringIO()
    buf.write("x,y,label,count\n")
    for x, row in enumerate(hist):
        for y, c in enumerate(row):
            for lab, k in sorted(c.items()):
                buf.write(f"{x},{y},{lab},{k}\n")
    return buf.getvalue()


def grid_csv(values: np.ndarray) -> str:
    return "".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in values)


CORPUS_CLASSES = ("ER", "BA", "SF", "WS", "flux3", "flux4")


def corpus_config(cls: str, n: int, rng: np.random.Generator, seed: int) -> GenConfig:
    """Random generator configuration for one corpus member of class ``cls``."""
    if cls == "ER":
        return GenConfig(Family.ER, {"n": n, "p": float(rng.uniform(4 / n, 13 / n))}, seed)
    if cls == "BA":
        return GenConfig(Family.BA, {"n": n, "m": int(rng.integers(2, 7))}, seed)
    if cls == "SF":
        return GenConfig(Family.SF, {"n": n}, seed)
    if cls == "WS":
        return GenConfig(Family.WS_DIRECTED, {"n": n, "k": int(rng.choice([4, 6, 8]))}, seed)
    if cls in ("flux3", "flux4"):
        N_f = int(cls[-1])
        return GenConfig(Family.FLUX, {"N_f": N_f, "N_c": n // N_f, "p_c": float(rng.uniform(0.05, 0.2)),
                                       "p_d": float(rng.uniform(0.2, 0.5))}, seed)
    raise ValueError(f"unknown corpus class {cls!r}")


def build_corpus(per_class: int = 10, n_range: tuple[int, int] = (100, 300), seed: int = 0,
                 q_grid=thermo.DEFAULT_Q_GRID, T_grid=thermo.DEFAULT_T_GRID,
                 classes: Sequence[str] = CORPUS_CLASSES, jobs: int = 1):
    """Flattened heat maps for ``per_class`` random networks of every class.

    Heat maps are computed on the largest weak component. Returns
    ``(samples, labels, configs)``.
    """
    samples, labels, configs = [], [], []
    for ci, cls in enumerate(classes):
        for i in range(per_class):
            s = generators.derive_seed(seed, ci, i)
            rng = np.random.default_rng(s)
            n = int(rng.integers(n_range[0], n_range[1] + 1))
            cfg = corpus_config(cls, n, rng, s)
            g, _ = generators.generate(cfg)
            g, _ = largest_weak_component(g)
            hm = thermo.heat_map(g, q_grid, T_grid, jobs=jobs)
            samples.append(hm.flat())
            labels.append(cls)
            configs.append(cfg)
    return np.array(samples), labels, configs
