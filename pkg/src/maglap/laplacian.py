"""Magnetic Laplacian assembly and dense Hermitian eigendecomposition.

For charge ``q`` the off-diagonal entry ``(u, v)`` is
``-w_s(u, v) * exp(2*pi*i*q*f(u, v))`` with ``w_s`` the symmetrized weight and
``f`` the flow; the diagonal holds the symmetrized degree. The normalized
operator divides entry ``(u, v)`` by ``sqrt(d_u d_v)``.

Degenerate eigenvalues come back in no particular order. Everything
downstream depends only on the eigenvalue multiset or on spectral
projectors, so this does not matter.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .constants import EIG_BOUND_TOL, HERMITIAN_TOL, RESIDUAL_TOL
from .errors import GraphError, NormalizationError, NumericalError
from .graph import DirectedGraph


@dataclass(frozen=True)
class HermitianOperator:
    n: int
    matrix: np.ndarray
    q: float
    normalized: bool

    def hermiticity_error(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max(initial=0.0))


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues and the matching eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __len__(self) -> int:
        return int(self.eigenvalues.size)


def build(g: DirectedGraph, q: float, normalized: bool = True) -> HermitianOperator:
    """Assemble ``L_q`` (``normalized=False``) or ``H_q`` (``normalized=True``)."""
    W = g.weight_matrix()
    Ws = (W + W.T) / 2
    F = W - W.T
    deg = Ws.sum(axis=1)
    M = -Ws * np.exp(2j * np.pi * q * F)
    if normalized:
        zero = np.flatnonzero(deg <= 0)
        if zero.size:
            raise NormalizationError(int(zero[0]))
        inv = 1.0 / np.sqrt(deg)
        M *= inv[:, None]
        M *= inv[None, :]
        np.fill_diagonal(M, 1.0)
    else:
        np.fill_diagonal(M, deg)
    # exp(2 pi i q f) and exp(-2 pi i q f) are not bitwise conjugates; symmetrize
    M = (M + M.conj().T) / 2
    return HermitianOperator(n=g.n, matrix=M, q=float(q), normalized=normalized)


def spectrum(h: HermitianOperator, check: bool = False) -> Spectrum:
    """Full eigendecomposition. ``check=True`` also verifies every residual."""
    try:
        lam, vecs = scipy.linalg.eigh(h.matrix, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    if h.normalized and (lam[0] < -EIG_BOUND_TOL or lam[-1] > 2 + EIG_BOUND_TOL):
        raise NumericalError(f"normalized spectrum outside [0, 2]: [{lam[0]}, {lam[-1]}]")
    if check:
        res = residuals(h, Spectrum(lam, vecs))
        scale = max(np.linalg.norm(h.matrix, 2), 1.0)
        if res.max(initial=0.0) > RESIDUAL_TOL * scale:
            raise NumericalError(f"eigen-residual {res.max()} exceeds tolerance")
    return Spectrum(eigenvalues=lam, eigenvectors=vecs)


def eigenvalues(g: DirectedGraph, q: float, normalized: bool = True) -> np.ndarray:
    """Eigenvalues only; cheaper than :func:`spectrum` when vectors are not needed."""
    h = build(g, q, normalized)
    try:
        lam = scipy.linalg.eigh(h.matrix, eigvals_only=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    return lam


def residuals(h: HermitianOperator, spec: Spectrum) -> np.ndarray:
    """``||H psi_l - lambda_l psi_l||`` for every eigenpair."""
    R = h.matrix @ spec.eigenvectors - spec.eigenvectors * spec.eigenvalues[None, :]
    return np.linalg.norm(R, axis=0)


def check_hermitian(h: HermitianOperator, tol: float = HERMITIAN_TOL) -> None:
    err = h.hermiticity_error()
    if err > tol:
        raise NumericalError(f"operator is not Hermitian: max deviation {err}")


def uniform_flux_graph(N_f: int, N_c: int) -> DirectedGraph:
    """Flux network with complete undirected blocks and complete forward block links.

    Every vertex has symmetrized degree ``2 N_c - 1``.
    """
    n = N_f * N_c
    src, dst = [], []
    for i in range(N_f):
        blk = np.arange(i * N_c, (i + 1) * N_c)
        nxt = np.arange(((i + 1) % N_f) * N_c, ((i + 1) % N_f + 1) * N_c)
        a, b = np.meshgrid(blk, blk, indexing="ij")
        off = a != b
        src.append(a[off])
        dst.append(b[off])
        a, b = np.meshgrid(blk, nxt, indexing="ij")
        src.append(a.ravel())
        dst.append(b.ravel())
    return DirectedGraph.from_arrays(n, np.concatenate(src), np.concatenate(dst))


def _half_count(N: int) -> int:
    return (N + 1) // 2 if N % 2 else N // 2


def cosine_sum(v: int, N_c: int, m_c: int | None = None) -> float:
    """``sum_{l=0}^{m_c - 1} cos(2 pi v l / N_c)`` in closed form (``m_c`` at ``v = 0``)."""
    if m_c is None:
        m_c = _half_count(N_c)
    if v % N_c == 0:
        return float(m_c)
    x = np.pi * v / N_c
    return float(np.sin(x * m_c) / np.sin(x) * np.cos(x * (m_c - 1)))


def analytic_flux_spectrum(N_f: int, N_c: int, q: float) -> np.ndarray:
    """Closed-form normalized spectrum of :func:`uniform_flux_graph`, sorted.

    The block-circulant structure reduces ``H_q`` to one ``N_c x N_c``
    circulant per petal index ``u``, with diagonal ``h_0 = 1 - c_u / d`` and
    constant off-diagonal ``h_1 = -(1 + c_u) / d`` where
    ``c_u = cos(2 pi (u / N_f - q))`` and ``d = 2 N_c - 1``. Its eigenvalues are
    ``h_0 + 2 h_1 (F(v) - 1) + Delta`` with ``F`` from :func:`cosine_sum`;
    ``Delta = (-1)^v h_1`` picks up the unpaired middle column when ``N_c`` is
    even.
    """
    if N_f < 3:
        raise GraphError(f"closed form needs N_f >= 3, got {N_f}")
    if N_c < 1:
        raise GraphError("N_c must be >= 1")
    d = 2 * N_c - 1
    m_c = _half_count(N_c)
    F = np.array([cosine_sum(v, N_c, m_c) for v in range(N_c)])
    sign = (-1.0) ** np.arange(N_c)
    out = []
    for u in range(N_f):
        c = np.cos(2 * np.pi * (u / N_f - q))
        h0 = 1 - c / d
        h1 = -(1 + c) / d
        lam = h0 + 2 * h1 * (F - 1)
        if N_c % 2 == 0:
            lam = lam + sign * h1
        out.append(lam)
    return np.sort(np.concatenate(out))


def spectrum_to_csv(spec: Spectrum | np.ndarray) -> str:
    lam = spec.eigenvalues if isinstance(spec, Spectrum) else np.asarray(spec)
    return "".join(f"{x:.17g}\n" for x in lam)


def operator_to_csv(h: HermitianOperator) -> str:
    """Nonzero entries as ``row col re im`` lines."""
    buf = io.StringIO()
    rows, cols = np.nonzero(h.matrix)
    for r, c in zip(rows, cols):
        z = h.matrix[r, c]
        buf.write(f"{r} {c} {z.real:.17g} {z.imag:.17g}\n")
    return buf.getvalue()
