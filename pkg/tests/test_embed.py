import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.cluster import KMeans

from maglap import embed, laplacian
from maglap.errors import GraphError, SizeMismatchError
from maglap.generators import gen_flux
from maglap.graph import DirectedGraph

from conftest import digraphs, random_digraph

TAU = 2 * np.pi


def cycle3():
    return DirectedGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)])


def test_wrap_phase_range():
    x = np.array([-np.pi, np.pi, 3 * np.pi, -3 * np.pi + 1e-9, 0.5])
    y = embed.wrap_phase(x)
    assert np.all(y > -np.pi) and np.all(y <= np.pi)
    assert np.allclose(np.exp(1j * x), np.exp(1j * y))


def test_frustration_zero_for_equal_phases_at_zero_charge(rng):
    g = random_digraph(rng, 10, 0.3)
    assert embed.frustration(g, np.full(10, 0.7), 0.0) == pytest.approx(0.0, abs=1e-15)


def test_frustration_zero_on_synchronized_cycle():
    # each edge u -> v wants phi_u - phi_v = 2 pi q, so phases fall along the cycle
    assert embed.frustration(cycle3(), [0, -TAU / 3, -2 * TAU / 3], 1 / 3) == pytest.approx(0.0, abs=1e-15)
    reversed_cycle = DirectedGraph.from_edges(3, [(1, 0), (2, 1), (0, 2)])
    assert embed.frustration(reversed_cycle, [0, TAU / 3, 2 * TAU / 3], 1 / 3) == pytest.approx(0.0, abs=1e-15)
    assert embed.frustration(cycle3(), [0, TAU / 3, 2 * TAU / 3], 1 / 3) > 0.5


def test_frustration_and_quadratic_form_vanish_together(rng):
    g = cycle3()
    L = laplacian.build(g, 1 / 3, normalized=False).matrix
    phi = embed.eigenvector_phases(g, 1 / 3)[:, 0]
    x = np.exp(1j * phi)
    assert abs(x.conj() @ L @ x) == pytest.approx(0.0, abs=1e-12)
    assert embed.frustration(g, phi, 1 / 3) == pytest.approx(0.0, abs=1e-12)
    phi = rng.uniform(-np.pi, np.pi, 3)
    x = np.exp(1j * phi)
    assert np.real(x.conj() @ L @ x) > 1e-6
    assert embed.frustration(g, phi, 1 / 3) > 1e-6


def test_frustration_rejects_wrong_length():
    with pytest.raises(SizeMismatchError):
        embed.frustration(cycle3(), [0.0, 1.0], 0.2)


def test_eigenvector_phases_beat_random_phases():
    g, _ = gen_flux(3, 20, 0.3, 0.6, 4)
    rng = np.random.default_rng(0)
    best = embed.frustration(g, embed.eigenvector_phases(g, 1 / 3)[:, 0], 1 / 3)
    wins = sum(embed.frustration(g, rng.uniform(-np.pi, np.pi, g.n), 1 / 3) >= best for _ in range(100))
    assert wins == 100


def test_first_eigenvector_phases_constant_without_direction(rng):
    g = random_digraph(rng, 15, 0.3)
    phi0 = embed.eigenvector_phases(g, 0.0)[:, 0]
    assert np.abs(embed.wrap_phase(phi0 - phi0[0])).max() < 1e-8
    W = g.weight_matrix()
    und = DirectedGraph.from_arrays(15, *np.nonzero(W + W.T))
    phi = embed.eigenvector_phases(und, 0.3)[:, 0]
    assert np.abs(embed.wrap_phase(phi - phi[0])).max() < 1e-8


def test_flux_phases_cluster_by_module():
    g, labels = gen_flux(3, 40, 0.5, 0.8, 2)
    coords = embed.eigenmap_t2(g, 1 / 3)
    assert coords.space is embed.Space.FRUSTRATION_T2 and coords.coords.shape == (120, 2)
    pts = embed.circle_points(coords.coords[:, 0])
    pred = KMeans(3, n_init=10, random_state=0).fit_predict(pts)
    truth = [labels[u] for u in range(g.n)]
    assert embed.purity(pred, truth) >= 0.9


def test_global_phase_shift_keeps_differences(rng):
    phi = rng.uniform(-np.pi, np.pi, 10)
    D = embed.circle_distance_matrix(phi)
    assert np.allclose(embed.circle_distance_matrix(embed.wrap_phase(phi + 1.234)), D, atol=1e-12)


def test_propagator_is_gauge_invariant(rng):
    g = random_digraph(rng, 12, 0.3)
    spec = laplacian.spectrum(laplacian.build(g, 0.3))
    U = embed.propagator(spec, 0.01)
    gauges = np.exp(1j * rng.uniform(0, TAU, 12))
    twisted = laplacian.Spectrum(spec.eigenvalues, spec.eigenvectors * gauges[None, :])
    assert np.allclose(embed.propagator(twisted, 0.01), U, atol=1e-10)


def test_propagator_equals_resolvent(rng):
    g = random_digraph(rng, 10, 0.3)
    h = laplacian.build(g, 0.2)
    U = embed.propagator(laplacian.spectrum(h), 0.05)
    assert np.allclose(U, np.linalg.inv(0.05 * np.eye(10) + 1j * h.matrix), atol=1e-9)


def test_propagate_large_s_limit(rng):
    g = random_digraph(rng, 10, 0.3)
    W = g.weight_matrix()
    und = DirectedGraph.from_arrays(10, *np.nonzero(W + W.T))
    pm = embed.propagate(und, 0.0, s=100.0)
    assert np.abs(np.diag(pm.theta)).max() < 0.03
    assert np.all(pm.theta > -np.pi) and np.all(pm.theta <= np.pi)


def test_propagate_single_vertex_and_bad_s():
    single = DirectedGraph.from_edges(1, [])
    assert embed.propagate(single, 0.3, normalized=False).theta.tolist() == [[0.0]]
    with pytest.raises(ValueError):
        embed.propagate(cycle3(), 0.3, s=0.0)


def test_phase_distance_basics():
    theta = np.zeros((3, 4))
    theta[1, 2] = np.pi
    pm = embed.PhaseMatrix(theta, 0.01, 0.0)
    assert embed.phase_distance(pm, 0, 0) == 0.0
    assert embed.phase_distance(pm, 0, 1) == pytest.approx(np.pi)
    with pytest.raises(GraphError):
        embed.phase_distance(pm, 0, 3)
    D = embed.phase_distance_matrix(pm)
    assert D[0, 1] == D[1, 0] == pytest.approx(np.pi)


def test_phase_distance_triangle_inequality(rng):
    theta = rng.uniform(-np.pi, np.pi, (40, 15))
    D = embed.phase_distance_matrix(theta, block=7)
    idx = rng.integers(0, 40, (1000, 3))
    a, b, c = idx.T
    assert np.all(D[a, c] <= D[a, b] + D[b, c] + 1e-12)


def test_kernel_values(rng):
    n = 5
    theta = np.zeros((n, n))
    K = embed.kernel_matrix(theta)
    assert np.all(K == 1.0)
    theta = rng.uniform(-np.pi, np.pi, (n, 3))
    K = embed.kernel_matrix(theta, epsilon=0.5)
    assert np.abs(K - K.T).max() <= 1e-15
    assert np.all(np.diag(K) == 1.0)
    # a distance of 2 n pi with epsilon 1 maps to 1/e
    d = 2 * n * np.pi
    assert np.exp(-(d**2) / (1.0 * (2 * n * np.pi) ** 2)) == pytest.approx(np.exp(-1))
    with pytest.raises(ValueError):
        embed.kernel_matrix(theta, 0.0)


@given(digraphs(connected=True), st.floats(0, 1))
def test_hadamard_kernel_is_squared_modulus(g, q):
    h = laplacian.build(g, q)
    K = embed.kernel_hadamard(h)
    assert np.allclose(K, np.abs(h.matrix) ** 2, atol=1e-14)
    assert np.array_equal(K, K.T) and np.all(K >= 0)


def test_diffusion_model_on_special_kernels():
    m = embed.diffusion_model(np.eye(4))
    assert np.array_equal(m.P, np.eye(4))
    assert np.allclose(m.eigenvalues, 1.0)
    ones = embed.diffusion_model(np.ones((4, 4)))
    assert np.allclose(ones.eigenvalues, [1, 0, 0, 0], atol=1e-12)
    assert embed.diffusion_distance_direct(ones, 1, 0, 3) == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(embed.diffusion_coords(ones).coords, 0.0, atol=1e-12)


def test_diffusion_model_errors():
    K = np.ones((3, 3))
    K[1, :] = K[:, 1] = 0
    with pytest.raises(GraphError, match="vertex 1"):
        embed.diffusion_model(K, m=2)
    with pytest.raises(ValueError):
        embed.diffusion_model(np.array([[1.0, 0.5], [0.2, 1.0]]))
    with pytest.raises(ValueError):
        embed.diffusion_coords(embed.diffusion_model(np.ones((3, 3)), m=3), m=4)


def random_kernel(seed, n=20):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, 3))
    D2 = ((X[:, None] - X[None]) ** 2).sum(-1)
    return np.exp(-D2 / r.uniform(0.5, 4))


@given(st.integers(0, 10**6), st.integers(1, 4))
def test_spectral_distance_matches_matrix_power(seed, t):
    K = random_kernel(seed)
    model = embed.diffusion_model(K, t=t, m=20)
    assert np.abs(model.P.sum(axis=1) - 1).max() <= 1e-12
    assert abs(model.eigenvalues[0] - 1) <= 1e-9
    assert np.all(np.abs(model.eigenvalues) <= 1 + 1e-9)
    assert np.allclose(model.eigenvectors[:, 0], 1.0, atol=1e-8)
    R = embed.diffusion_coords(model, m=20, t=t).coords
    r = np.random.default_rng(seed)
    for u, v in r.integers(0, 20, (10, 2)):
        direct = embed.diffusion_distance_direct(model, t, int(u), int(v))
        assert np.linalg.norm(R[u] - R[v]) == pytest.approx(direct, abs=1e-8)
    assert embed.diffusion_distance_direct(model, t, 3, 3) == 0.0


def test_complement_transform_weights_and_order():
    model = embed.diffusion_model(random_kernel(3), m=4)
    out = embed.diffusion_coords(model, transform="complement").coords
    w = 1 - model.eigenvalues
    order = np.argsort(-w, kind="stable")[:3]
    assert np.allclose(out, model.eigenvectors[:, order] * w[order])
    # the stationary direction has zero weight and is never chosen
    assert 0 not in order
    with pytest.raises(ValueError):
        embed.diffusion_coords(model, transform="other")


def test_diffusion_embedding_kernels():
    g, labels = gen_flux(3, 20, 0.5, 0.8, 1)
    for kernel in ("phase", "hadamard"):
        c = embed.diffusion_embedding(g, 1 / 3, kernel=kernel)
        assert c.space is embed.Space.DIFFUSION and c.coords.shape == (60, 3)
        assert np.all(np.isfinite(c.coords))
    with pytest.raises(ValueError):
        embed.diffusion_embedding(g, 1 / 3, kernel="nope")


def test_separability_singular_sentinel():
    pts = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    res = embed.separability_J(pts, ["a", "a", "b", "b"])
    assert res.singular and res.J == float("inf")
    with pytest.raises(SizeMismatchError):
        embed.separability_J(pts, ["a"])


def test_separability_drops_when_labels_shuffled():
    rng = np.random.default_rng(8)
    centres = np.array([0.0, TAU / 3, 2 * TAU / 3])
    labels = np.repeat([0, 1, 2], 30)
    wins = 0
    for _ in range(100):
        phi = centres[labels] + rng.normal(0, 0.4, labels.size)
        pts = embed.circle_points(phi)
        true = embed.separability_J(pts, labels).J
        shuffled = embed.separability_J(pts, rng.permutation(labels)).J
        wins += true > shuffled
    assert wins >= 95


def test_two_means_and_purity():
    X = np.vstack([np.zeros((10, 2)), np.ones((10, 2)) * 5])
    truth = ["x"] * 10 + ["y"] * 10
    assert embed.purity(embed.two_means(X), truth) == 1.0
    assert embed.purity([0, 0, 0, 0], ["a", "a", "b", "b"]) == 0.5


def test_coords_csv():
    c = embed.EmbeddingCoords(np.array([[0.5, 1.0], [2.0, 3.0]]), embed.Space.DIFFUSION)
    lines = c.to_csv({0: "A", 1: "B"}).splitlines()
    assert lines[0] == "id,c1,c2,label"
    assert lines[2] == "1,2,3,B"
