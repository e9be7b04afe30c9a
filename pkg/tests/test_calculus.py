import numpy as np
import pytest
from hypothesis import given, strategies as st

from graphrom.calculus import (
    DerivativeCache,
    commutator,
    first_derivative,
    gram_matrices,
    nonlocal_gradient,
    partial_derivative,
    scalar_inner_product,
    unit_vector,
    vector_dot_at,
    verify_unit_norm,
)
from graphrom.graph import GraphError, build_graph
from graphrom.weights import WeightSpec

from conftest import random_states


def two_vertex():
    return build_graph(np.array([[0.0], [1.0]]), {}, WeightSpec("polynomial", 1, epsilon=0.0))


def loop_derivative(g, f, a):
    # independent double loop over ordered pairs
    out = np.zeros(g.n)
    for i in range(g.n):
        s = 0.0
        for j in range(g.n):
            if j != i:
                s += (f[j] - f[i]) * (g.X[j, a] - g.X[i, a]) * g.weights[i, j]
        out[i] = s / (g.n - 1)
    return out


def test_gradient_two_vertices():
    G = nonlocal_gradient(two_vertex(), np.array([0.0, 1.0]))
    assert G[0, 1] == 1.0 and G[1, 0] == -1.0
    np.testing.assert_array_equal(unit_vector(two_vertex(), 0), G)


def test_gradient_constant_and_antisymmetry(rng):
    g = build_graph(random_states(rng, 6, 2), {}, WeightSpec("gaussian", 2))
    assert not np.any(nonlocal_gradient(g, np.full(6, 3.3)))
    f = rng.standard_normal(6)
    G = nonlocal_gradient(g, f)
    np.testing.assert_array_equal(G, -G.T)


def test_unit_vector_is_coordinate_gradient(rng):
    g = build_graph(random_states(rng, 5, 3), {}, WeightSpec("gaussian", 3))
    for a in range(3):
        np.testing.assert_array_equal(unit_vector(g, a), nonlocal_gradient(g, g.X[:, a]))


def test_unit_vector_degenerate_direction():
    X = np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 1.0]])
    g = build_graph(X, {}, WeightSpec("gaussian", 2))
    assert not np.any(unit_vector(g, 1))


def test_inner_products(rng):
    g = build_graph(random_states(rng, 6, 2), {}, WeightSpec("gaussian", 2))
    assert scalar_inner_product(g, np.ones(6), np.ones(6)) == 1.0
    a = np.array([1.0, 1, 0, 0, 0, 0])
    assert scalar_inner_product(g, a, 1 - a) == 0.0
    f1, f2 = rng.standard_normal(6), rng.standard_normal(6)
    alt = sum(f1[k] * f2[k] for k in reversed(range(6))) / 6
    assert scalar_inner_product(g, f1, f2) == pytest.approx(alt, rel=1e-14)
    v = nonlocal_gradient(g, f1)
    assert vector_dot_at(g, v, np.zeros((6, 6)), 2) == 0.0
    assert vector_dot_at(g, v, v, 3) >= 0
    with pytest.raises(GraphError):
        vector_dot_at(g, v, v, 6)


def test_first_derivative_matches_loop(rng):
    g = build_graph(random_states(rng, 7, 2), {}, WeightSpec("polynomial", 2))
    f = rng.standard_normal(7)
    for a in range(2):
        np.testing.assert_allclose(first_derivative(g, f, a), loop_derivative(g, f, a), rtol=1e-12, atol=1e-14)


def test_linear_function_exact_with_rescaled_weights():
    x = np.array([0.0, 0.3, 1.1, 1.7, 2.0, 3.2])
    g = build_graph(x[:, None], {}, WeightSpec("polynomial", 1))
    # w = 1/dx^2 gives a unit Gram value at every vertex
    d =x[None, :] - x[:, None]
    W = np.where(d != 0, 1.0 / np.where(d == 0, 1, d) ** 2, 0.0)
    h = g.with_weights(W)
    np.testing.assert_allclose(verify_unit_norm(h), [[0.0]], atol=1e-14)
    np.testing.assert_allclose(partial_derivative(h, 2.5 * x - 1, ["x0"]), 2.5, rtol=1e-13)


def test_two_vertex_gram_is_one():
    np.testing.assert_allclose(verify_unit_norm(two_vertex(), 0), [[1.0]])


def test_quadratic_error_profile_on_uniform_mesh():
    for n in (4, 8, 16, 32):
        L, a2 = 1.0, 1.7
        x = np.linspace(0, L, n + 1)
        g = build_graph(x[:, None], {}, WeightSpec("polynomial", 1, epsilon=0.0))
        err = partial_derivative(g, a2 * x**2, [0]) - 2 * a2 * x
        np.testing.assert_allclose(err, (n + 1) / n * (L / 2 - x) * a2, atol=1e-10)
        # exact at the mesh midpoint
        assert abs(err[n // 2]) < 1e-12


def test_constant_has_zero_derivatives(rng):
    g = build_graph(random_states(rng, 6, 2), {}, WeightSpec("gaussian", 2))
    for idx in ([0], [1, 0], [0, 0, 1]):
        assert not np.any(partial_derivative(g, np.full(6, 2.0), idx))


def test_order_and_request_validation(rng):
    g = build_graph(random_states(rng, 4, 1), {}, WeightSpec("gaussian", 1))
    f = np.arange(4.0)
    with pytest.raises(GraphError, match="exceeds"):
        partial_derivative(g, f, [0] * 9)
    with pytest.raises(GraphError):
        partial_derivative(g, f, [])
    with pytest.raises(GraphError, match="unknown"):
        partial_derivative(g, f, ["y"])
    with pytest.raises(GraphError, match="shape"):
        partial_derivative(g, np.arange(3.0), [0])


def test_cache_reuses_prefixes(rng):
    g = build_graph(random_states(rng, 6, 2), {}, WeightSpec("gaussian", 2))
    f = rng.standard_normal(6)
    c = DerivativeCache(g, f)
    np.testing.assert_array_equal(c(("x0", "x1", "x1")), partial_derivative(g, f, [0, 1, 1]))
    assert len(c) == 3
    c((0, 1))
    assert len(c) == 3
    np.testing.assert_array_equal(c(()), f)
    np.testing.assert_array_equal(c("x1"), first_derivative(g, f, 1))


def test_commutator_reported_not_assumed(rng):
    g = build_graph(random_states(rng, 8, 2), {}, WeightSpec("gaussian", 2))
    f = g.X[:, 0] ** 2 * g.X[:, 1]
    comm = commutator(g, f, 0, 1)
    assert comm.shape == (8,)
    assert np.max(np.abs(comm)) > 1e-8


def test_gram_matrices_symmetric(rng):
    g = build_graph(random_states(rng, 30, 2), {}, WeightSpec("gaussian", 2))
    G = gram_matrices(g)
    np.testing.assert_array_equal(G, np.transpose(G, (0, 2, 1)))
    assert np.all(G[:, 0, 0] > 0)
    worst = verify_unit_norm(g)
    assert worst.shape == (2, 2) and np.all(worst >= 0)


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3),
       st.lists(st.integers(0, 1), min_size=1, max_size=3))
def test_linearity_all_orders(seed, a, b, idx):
    rng = np.random.default_rng(seed)
    g = build_graph(random_states(rng, 6, 2), {}, WeightSpec("gaussian", 2))
    f1, f2 = rng.standard_normal(6), rng.standard_normal(6)
    lhs = partial_derivative(g, a * f1 + b * f2, idx)
    rhs = a * partial_derivative(g, f1, idx) + b * partial_derivative(g, f2, idx)
    scale = np.abs(a * partial_derivative(g, f1, idx)).max() + np.abs(b * partial_derivative(g, f2, idx)).max()
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * max(scale, 1e-300))


@given(st.integers(0, 2**32 - 1))
def test_results_are_reproducible(seed):
    rng = np.random.default_rng(seed)
    X = random_states(rng, 9, 3)
    f = rng.standard_normal(9)
    a = partial_derivative(build_graph(X, {}, WeightSpec("gaussian", 3)), f, [2, 0])
    b = partial_derivative(build_graph(X.copy(), {}, WeightSpec("gaussian", 3)), f.copy(), [2, 0])
    assert np.array_equal(a, b)
