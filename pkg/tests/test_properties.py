import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from graphlap.bayes import inverse_gamma_discretized_h
from graphlap.estimators import empirical_rate, tune_jh
from graphlap.graph import build_graph, dirichlet_form, inner_nu, laplacian
from graphlap.spectral import decompose, heat_apply, heat_kernel, heat_operator

coords = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


@st.composite
def clouds(draw, max_n=40):
    n = draw(st.integers(1, max_n))
    D = draw(st.integers(1, 3))
    pts = draw(arrays(np.float64, (n, D), elements=coords))
    h = draw(st.floats(0.05, 4.0))
    return pts, h


@settings(max_examples=60, deadline=None)
@given(clouds())
def test_graph_invariants(args):
    pts, h = args
    g = build_graph(pts, h)
    dist = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    np.testing.assert_array_equal(g.adjacency.toarray(), (dist < h).astype(float))
    assert g.nu.sum() == np.float64(1.0) or abs(g.nu.sum() - 1) < 1e-14
    assert g.degrees.min() >= 1
    assert g.nu.min() >= 1 / g.n_vertices**2


@settings(max_examples=60, deadline=None)
@given(clouds(), st.integers(0, 2**32 - 1))
def test_laplacian_properties(args, seed):
    pts, h = args
    g = build_graph(pts, h)
    op = laplacian(g)
    rng = np.random.default_rng(seed)
    f, k = rng.standard_normal((2, g.n_vertices))
    assert np.all(op.apply(np.full(g.n_vertices, 1.3)) == 0)
    np.testing.assert_allclose(op.apply(f), op.matrix @ f, rtol=1e-10, atol=1e-10 * h**-2)
    lhs = inner_nu(g, f, op.apply(k, scaled=False))
    assert math.isclose(dirichlet_form(g, f, k), lhs, rel_tol=1e-9, abs_tol=1e-12)
    assert abs(inner_nu(g, f, op.apply(k)) - inner_nu(g, op.apply(f), k)) <= 1e-9 * (
        1 + abs(inner_nu(g, f, op.apply(k))))


@settings(max_examples=40, deadline=None)
@given(clouds())
def test_decomposition_accuracy(args):
    pts, h = args
    g = build_graph(pts, h)
    b = decompose(g, g.n_vertices)
    assert b.orthonormality_defect() <= 1e-8
    assert np.all(b.residuals <= 1e-6 * np.maximum(1, b.eigenvalues))
    assert np.all(b.eigenvalues <= 2 / h**2 + 1e-9)
    assert np.sum(b.eigenvalues < 1e-9 / h**2) == g.n_components


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 50), st.floats(0.1, 10.0))
def test_complete_graph_spectrum(n, h):
    pts = np.linspace(0, 0.99 * h, n)[:, None] / 2
    b = decompose(build_graph(pts, h), n)
    expect = np.r_[0.0, np.full(n - 1, h**-2)]
    np.testing.assert_allclose(b.eigenvalues, expect, atol=1e-10 * max(1, h**-2))


@settings(max_examples=30, deadline=None)
@given(clouds(max_n=30), st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.integers(0, 2**32 - 1))
def test_heat_invariants(args, s, t, seed):
    pts, h = args
    g = build_graph(pts, h)
    b = decompose(g, g.n_vertices)
    s, t = s * h**2, t * h**2
    np.testing.assert_allclose(heat_operator(b, t).sum(axis=1), 1.0, atol=1e-8)
    K = heat_kernel(b, t)
    np.testing.assert_allclose(K, K.T, atol=1e-10 * max(1, np.abs(K).max()))
    f = np.random.default_rng(seed).standard_normal(g.n_vertices)
    np.testing.assert_allclose(heat_apply(b, s, heat_apply(b, t, f)), heat_apply(b, s + t, f),
                               atol=1e-7)
    assert np.all(np.diag(heat_kernel(b, t + s)) <= np.diag(K) + 1e-9 * np.diag(K).max())


@given(st.integers(2, 10**6), st.integers(0, 3), st.floats(0.5, 4), st.floats(0.01, 100))
def test_tune_jh_J_positive(n, extra, beta, jc):
    N = n * (1 + extra)
    J, h = tune_jh(n, N, 1, beta, 1.0, h_log_exponent=0, J_log_exponent=0, J_const=jc)
    assert 1 <= J <= N and h > 0


@given(st.floats(-2, 2), st.floats(0.01, 10))
def test_rate_recovers_power(alpha, scale):
    ns = [100, 200, 400, 800]
    rep = empirical_rate(ns, [[scale * n**alpha] * 10 for n in ns])
    assert abs(rep.slope - alpha) < 1e-9


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.01, 0.5), st.integers(0, 12))
def test_ig_masses(a, lam, hstar, L):
    m = inverse_gamma_discretized_h(a, lam, hstar, L)
    assert m.size == L + 1
    assume(np.all(np.isfinite(m)))
    assert abs(m.sum() - 1) <= 1e-12 and np.all(m >= 0)
