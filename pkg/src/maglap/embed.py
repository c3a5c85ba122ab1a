"""Vertex embeddings derived from the magnetic Laplacian.

Two routes are provided:

* frustration space: the phases of the lowest eigenvectors place each vertex
  on a circle (first eigenvector) or on the torus (first two);
* dynamics: the Laplace-smoothed evolution operator
  ``U(s) = sum_l |psi_l><psi_l| / (s + i lambda_l)`` applied to ``|u>`` yields
  a vector of phases per vertex. A Gaussian kernel on those phases (or the
  cheaper ``H * H^T`` kernel) defines a Markov chain whose diffusion map gives
  low-dimensional Euclidean coordinates.

Diffusion eigenvectors are normalized in the stationary-measure inner
product. Under that normalization Euclidean distances between full
coordinate vectors equal the diffusion distance, with each squared
difference weighted by the inverse stationary probability.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg
from sklearn.cluster import KMeans

from . import laplacian
from .constants import SINGULAR_TOL
from .errors import GraphError, SizeMismatchError
from .graph import DirectedGraph, flow_matrix, symmetrize


class Space(str, enum.Enum):
    FRUSTRATION_T2 = "FRUSTRATION_T2"
    DIFFUSION = "DIFFUSION"


@dataclass(frozen=True)
class EmbeddingCoords:
    coords: np.ndarray
    space: Space

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def to_csv(self, labels=None) -> str:
        buf = io.StringIO()
        k = self.coords.shape[1]
        head = ["id"] + [f"c{i + 1}" for i in range(k)] + (["label"] if labels is not None else [])
        buf.write(",".join(head) + "\n")
        for u, row in enumerate(self.coords):
            cells = [str(u)] + [f"{x:.17g}" for x in row]
            if labels is not None:
                lab = labels.get(u) if hasattr(labels, "get") else labels[u]
                cells.append("" if lab is None else str(lab))
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()


def wrap_phase(x):
    """Map angles into ``(-pi, pi]``."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(y <= -np.pi, np.pi, y)


def frustration(g: DirectedGraph, phases, q: float) -> float:
    """Frustration of a phase assignment.

    ``1/2 * sum_{u,v} w_s(u,v) |1 - exp(i (2 pi q f(u,v) - (phi_u - phi_v)))| / vol``
    with the sum over ordered pairs and ``vol`` the total symmetrized degree.
    Zero exactly when ``phi_u - phi_v = 2 pi q f(u, v)`` on every edge, the
    condition that also zeroes the magnetic-Laplacian quadratic form.
    """
    phi = np.asarray(phases, dtype=float)
    if phi.shape != (g.n,):
        raise SizeMismatchError(f"expected {g.n} phases, got {phi.size}")
    Ws = symmetrize(g).weights
    F = flow_matrix(g)
    vol = Ws.sum()
    if vol == 0:
        return 0.0
    arg = 2 * np.pi * q * F - (phi[:, None] - phi[None, :])
    return float(0.5 * np.sum(Ws * np.abs(1 - np.exp(1j * arg))) / vol)


def _fix_gauge(v: np.ndarray) -> np.ndarray:
    # rotate so the largest-modulus component is real positive
    k = int(np.argmax(np.abs(v)))
    return v * np.exp(-1j * np.angle(v[k]))


def eigenvector_phases(g: DirectedGraph, q: float, k: int = 1) -> np.ndarray:
    """``(n, k)`` phases of the ``k`` lowest eigenvectors of ``H_q``, gauge-fixed."""
    spec = laplacian.spectrum(laplacian.build(g, q))
    cols = [wrap_phase(np.angle(_fix_gauge(spec.eigenvectors[:, i]))) for i in range(k)]
    return np.column_stack(cols)


def eigenmap_t2(g: DirectedGraph, q: float) -> EmbeddingCoords:
    """Torus coordinates from the phases of the first two eigenvectors."""
    if g.n < 2:
        raise GraphError("torus embedding needs at least two vertices")
    return EmbeddingCoords(eigenvector_phases(g, q, 2), Space.FRUSTRATION_T2)


def circle_distance_matrix(phases) -> np.ndarray:
    """``|wrap(phi_u - phi_v)|`` for every pair."""
    phi = np.asarray(phases, dtype=float)
    return np.abs(wrap_phase(phi[:, None] - phi[None, :]))


@dataclass(frozen=True)
class PhaseMatrix:
    """Row ``u`` holds the phases of ``U_q(s) |u>``."""

    theta: np.ndarray
    s: float
    q: float

    @property
    def n(self) -> int:
        return self.theta.shape[0]


def propagator(spec: laplacian.Spectrum, s: float) -> np.ndarray:
    if s <= 0:
        raise ValueError(f"s must be positive, got {s}")
    V = spec.eigenvectors
    return (V / (s + 1j * spec.eigenvalues)[None, :]) @ V.conj().T


def propagate(g: DirectedGraph, q: float, s: float = 0.01, normalized: bool = True) -> PhaseMatrix:
    """Phases of the Laplace-smoothed evolution of every localized state."""
    if s <= 0:
        raise ValueError(f"s must be positive, got {s}")
    spec = laplacian.spectrum(laplacian.build(g, q, normalized))
    U = propagator(spec, s)
    # column u of U is U|u>; store it as row u
    theta = wrap_phase(np.angle(U.T))
    return PhaseMatrix(theta=theta, s=float(s), q=float(q))


def phase_distance(pm: PhaseMatrix, u: int, v: int) -> float:
    if not (0 <= u < pm.n and 0 <= v < pm.n):
        raise GraphError(f"vertex pair ({u}, {v}) out of range")
    return float(np.linalg.norm(wrap_phase(pm.theta[u] - pm.theta[v])))


def phase_distance_matrix(pm: PhaseMatrix | np.ndarray, block: int = 64) -> np.ndarray:
    """All pairwise phase distances; rows are processed in blocks to bound memory."""
    theta = pm.theta if isinstance(pm, PhaseMatrix) else np.asarray(pm)
    n = theta.shape[0]
    D = np.empty((n, n))
    for a in range(0, n, block):
        diff = wrap_phase(theta[a:a + block, None, :] - theta[None, :, :])
        D[a:a + block] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    D = (D + D.T) / 2
    np.fill_diagonal(D, 0.0)
    return D


def kernel_matrix(pm: PhaseMatrix | np.ndarray, epsilon: float = 1.0) -> np.ndarray:
    """Gaussian kernel ``exp(-d^2 / (epsilon (2 n pi)^2))`` on phase distances."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    D = phase_distance_matrix(pm)
    n = D.shape[0]
    return np.exp(-(D**2) / (epsilon * (2 * n * np.pi) ** 2))


def kernel_hadamard(h: laplacian.HermitianOperator) -> np.ndarray:
    """``H * H^T`` entrywise; for Hermitian ``H`` this is ``|H_uv|^2``."""
    K = h.matrix * h.matrix.T
    K = K.real
    return (K + K.T) / 2


@dataclass(frozen=True)
class DiffusionModel:
    """Markov chain ``P = N^-1 K`` with its spectral decomposition.

    ``eigenvalues`` descend; column ``i`` of ``eigenvectors`` is the right
    eigenvector ``psi_i``, normalized so that ``sum_x pi(x) psi_i(x) psi_j(x)``
    is the identity. ``psi_1`` is the constant vector.
    """

    P: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    stationary: np.ndarray
    t: int = 1
    m: int = 4


def diffusion_model(K: np.ndarray, t: int = 1, m: int = 4) -> DiffusionModel:
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if K.shape != (n, n):
        raise SizeMismatchError("kernel must be square")
    if np.any(K < 0):
        raise ValueError("kernel must be non-negative")
    if not np.allclose(K, K.T, rtol=0, atol=1e-12 * max(1.0, np.abs(K).max())):
        raise ValueError("kernel must be symmetric")
    if not 2 <= m <= n:
        raise ValueError(f"m must satisfy 2 <= m <= n, got m={m}, n={n}")
    if t < 1:
        raise ValueError("t must be a positive integer")
    rows = K.sum(axis=1)
    bad = np.flatnonzero(rows <= 0)
    if bad.size:
        raise GraphError(f"vertex {int(bad[0])} is an isolated point of the kernel")
    P = K / rows[:, None]
    inv_sqrt = 1.0 / np.sqrt(rows)
    A = K * inv_sqrt[:, None] * inv_sqrt[None, :]
    A = (A + A.T) / 2
    lam, U = scipy.linalg.eigh(A)
    order = np.argsort(-lam, kind="stable")
    lam, U = lam[order], U[:, order]
    pi = rows / rows.sum()
    psi = U / np.sqrt(pi)[:, None]
    # fix the sign of the trivial vector to +1
    if psi[:, 0].sum() < 0:
        psi[:, 0] *= -1
    return DiffusionModel(P=P, eigenvalues=lam, eigenvectors=psi, stationary=pi, t=int(t), m=int(m))


def diffusion_distance_direct(model: DiffusionModel, t: int, u: int, v: int) -> float:
    """Diffusion distance from the explicit ``t``-step transition matrix.

    ``D_t(u, v)^2 = sum_x (P^t[u, x] - P^t[v, x])^2 / pi(x)``.
    """
    if t < 1:
        raise ValueError("t must be a positive integer")
    Pt = np.linalg.matrix_power(model.P, int(t))
    d = Pt[u] - Pt[v]
    return float(np.sqrt(np.sum(d * d / model.stationary)))


def diffusion_coords(model: DiffusionModel, m: int | None = None, t: int | None = None,
                     transform: str = "power") -> EmbeddingCoords:
    """Diffusion coordinates with ``m - 1`` components.

    ``transform="power"`` gives ``(l_i^t psi_i(u))`` for ``i = 2..m``, dropping
    the constant first component. ``transform="complement"`` weights every
    component by ``1 - l_i^t`` and keeps the ``m - 1`` largest weights; the
    constant component has weight zero and falls out on its own. This is the
    right choice for kernels whose informative structure sits at the bottom
    of the spectrum (near-bipartite graphs under the Hadamard kernel).
    """
    m = model.m if m is None else m
    t = model.t if t is None else t
    n = model.P.shape[0]
    if not 2 <= m <= n:
        raise ValueError(f"m must satisfy 2 <= m <= n, got m={m}, n={n}")
    if transform == "power":
        scale = model.eigenvalues[1:m] ** t
        return EmbeddingCoords(model.eigenvectors[:, 1:m] * scale[None, :], Space.DIFFUSION)
    if transform == "complement":
        w = 1.0 - model.eigenvalues ** t
        order = np.argsort(-w, kind="stable")[: m - 1]
        return EmbeddingCoords(model.eigenvectors[:, order] * w[order][None, :], Space.DIFFUSION)
    raise ValueError(f"unknown transform {transform!r}")


def diffusion_embedding(g: DirectedGraph, q: float, *, kernel: str = "phase", s: float = 0.01,
                        epsilon: float = 1.0, t: int = 1, m: int = 4,
                        transform: str | None = None) -> EmbeddingCoords:
    """Diffusion coordinates of a graph from the phase kernel or the Hadamard kernel.

    ``transform`` defaults to ``"power"`` for the phase kernel and to
    ``"complement"`` for the Hadamard kernel.
    """
    if kernel == "phase":
        K = kernel_matrix(propagate(g, q, s), epsilon)
    elif kernel == "hadamard":
        K = kernel_hadamard(laplacian.build(g, q))
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    if transform is None:
        transform = "complement" if kernel == "hadamard" else "power"
    return diffusion_coords(diffusion_model(K, t, m), transform=transform)


class Separability(NamedTuple):
    J: float
    singular: bool


def separability_J(coords, labels: Sequence, n_classes: int | None = None) -> Separability:
    """Ratio of determinants of between- and within-class scatter matrices.

    ``coords`` is an ``(n, d)`` array (unit vectors on the circle in the
    usual use). When the within-class scatter is singular the result is
    ``J = inf`` with ``singular=True``.
    """
    X = np.asarray(coords, dtype=float)
    y = np.asarray(list(labels))
    if y.shape[0] != X.shape[0]:
        raise SizeMismatchError("labels must cover every vertex")
    classes = list(dict.fromkeys(y.tolist()))
    if n_classes is not None and len(classes) != n_classes:
        raise ValueError(f"expected {n_classes} classes, found {len(classes)}")
    mu = X.mean(axis=0)
    d = X.shape[1]
    Sb = np.zeros((d, d))
    Sw = np.zeros((d, d))
    for c in classes:
        Xc = X[y == c]
        mc = Xc.mean(axis=0)
        diff = (mc - mu)[:, None]
        Sb += Xc.shape[0] * diff @ diff.T
        R = Xc - mc
        Sw += R.T @ R
    det_w = np.linalg.det(Sw)
    if abs(det_w) <= SINGULAR_TOL:
        return Separability(float("inf"), True)
    return Separability(float(np.linalg.det(Sb) / det_w), False)


def circle_points(phases) -> np.ndarray:
    phi = np.asarray(phases, dtype=float)
    return np.column_stack([np.cos(phi), np.sin(phi)])


def separability_curve(g: DirectedGraph, labels: Sequence, q_values) -> np.ndarray:
    """``J(q)`` of the first-eigenvector circle embedding at each charge."""
    out = []
    for q in q_values:
        phi = eigenvector_phases(g, float(q), 1)[:, 0]
        out.append(separability_J(circle_points(phi), labels).J)
    return np.array(out)


def two_means(X, seed: int = 0) -> np.ndarray:
    """Seeded 2-means labels (0/1) for the rows of ``X``."""
    km = KMeans(n_clusters=2, n_init=10, random_state=seed)
    return km.fit_predict(np.asarray(X, dtype=float))


def purity(predicted, truth) -> float:
    """Fraction of points whose cluster's majority truth label matches their own."""
    predicted = np.asarray(list(predicted))
    truth = np.asarray(list(truth))
    total = 0
    for c in np.unique(predicted):
        _, counts = np.unique(truth[predicted == c], return_counts=True)
        total += counts.max()
    return total / truth.size
