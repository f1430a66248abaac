import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    feasible_interior_model,
    finite_difference_gradient,
    gradient_rel_error,
    naive_posterior,
    random_model,
)
from turtleshell.densities import softmax
from turtleshell.objective import (
    Hyper,
    Model,
    gradient,
    mutual_information,
    n_params_per_cluster,
    objective,
    pack,
    posterior,
    r1,
    r2,
    unpack,
)


def one_cluster(D=2):
    return Model([0.3], [0.6], np.zeros((1, D)), np.eye(D)[None], -np.ones((1, D)),
                 2 * np.ones((1, D)))


def test_posterior_single_cluster_is_one():
    X = np.random.default_rng(0).normal(size=(20, 2))
    np.testing.assert_array_equal(posterior(X, one_cluster()), np.ones((20, 1)))


def test_posterior_mirror_symmetry():
    m = Model([0.0, 0.0], [0.7, 0.7], [[-1.0, 0.0], [1.0, 0.0]],
              [np.eye(2), np.eye(2)], [[-2.0, -1.0], [0.5, -1.0]], [[1.5, 2.0], [1.5, 2.0]])
    X = np.array([[0.0, 0.3], [0.0, -2.0]])
    np.testing.assert_allclose(posterior(X, m), 0.5, atol=1e-15)


def test_posterior_matches_naive_bayes_rule():
    rng = np.random.default_rng(1)
    for _ in range(5):
        X = rng.normal(size=(10, 2))
        m = random_model(rng, 3, 2)
        np.testing.assert_allclose(posterior(X, m), naive_posterior(X, m), rtol=0, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 200), st.integers(1, 6), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_posterior_rows_sum_to_one(N, K, D, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(scale=3, size=(N, D))
    P = posterior(X, random_model(rng, K, D))
    assert np.all(P >= 0)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-10)


def test_posterior_dimension_mismatch():
    with pytest.raises(ValueError):
        posterior(np.zeros((3, 3)), one_cluster(2))


def test_mutual_information_examples():
    assert mutual_information(np.full((7, 3), 1 / 3)) == pytest.approx(0.0, abs=1e-15)
    P = np.repeat(np.eye(4), 5, axis=0)
    assert mutual_information(P) == pytest.approx(np.log(4), abs=1e-12)


def mi_log_ratio_form(P):
    phat = P.mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log(P / phat), 0.0)
    return terms.sum() / P.shape[0]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 50), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_mutual_information_two_forms_and_range(N, K, seed):
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.full(K, 0.5), size=N)
    mi = mutual_information(P)
    assert mi == pytest.approx(mi_log_ratio_form(P), abs=1e-12)
    assert -1e-12 <= mi <= np.log(K) + 1e-12


def test_r1_examples():
    m = random_model(np.random.default_rng(2), 3, 2)
    assert r1(m, 0.0) == 0.0
    two = Model([1.0, 1.0], [0.5, 0.5], np.zeros((2, 1)), np.ones((2, 1, 1)),
                np.zeros((2, 1)), np.ones((2, 1)))
    assert r1(two, 1.0) == pytest.approx(2 * np.log(2), abs=1e-12)
    assert r1(m, 0.7) == pytest.approx(-0.7 * np.log(softmax(m.pi)).sum(), rel=1e-12)


def test_r1_minimized_at_equal_proportions():
    rng = np.random.default_rng(3)
    base = random_model(rng, 4, 2)
    base.pi[:] = 0.25
    for _ in range(50):
        other = base.copy()
        other.pi = base.pi + rng.normal(size=4)
        assert r1(base, 1.0) <= r1(other, 1.0) + 1e-12


def test_r2_examples():
    rng = np.random.default_rng(4)
    m = random_model(rng, 3, 3)
    assert r2(m, 0.0) == 0.0
    centered = m.copy()
    centered.a = centered.mu - centered.w / 2
    assert r2(centered, 5.0) == pytest.approx(0.0, abs=1e-24)
    d = 0.5 * (m.a + m.b) - m.mu
    prec = m.L @ np.swapaxes(m.L, 1, 2)
    want = 1.3 * sum(d[k] @ prec[k] @ d[k] for k in range(3))
    assert r2(m, 1.3) == pytest.approx(want, rel=1e-12)


def test_objective_is_sum_of_parts():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 2))
    m = random_model(rng, 3, 2)
    mi = mutual_information(posterior(X, m))
    assert objective(X, m, Hyper(0, 0)) == mi
    h = Hyper(0.4, 0.9)
    assert objective(X, m, h) == pytest.approx(mi - r1(m, 0.4) - r2(m, 0.9), abs=1e-14)
    assert objective(X, one_cluster(), Hyper(0.5, 0.0)) == pytest.approx(-r1(one_cluster(), 0.5))


def test_pack_roundtrip_and_length():
    rng = np.random.default_rng(6)
    for K, D in [(1, 1), (2, 3), (4, 2)]:
        m = random_model(rng, K, D)
        v = pack(m)
        assert v.size == K * (2 + 2 * D + D + D * (D + 1) // 2) == K * n_params_per_cluster(D)
        back = unpack(v, K, D)
        for name in ("pi", "omega", "mu", "L", "a", "w"):
            np.testing.assert_array_equal(getattr(back, name), getattr(m, name))
    with pytest.raises(ValueError):
        unpack(np.zeros(5), 1, 1)


@pytest.mark.parametrize("K", [1, 2, 3])
@pytest.mark.parametrize("D", [1, 2, 3])
def test_gradient_matches_finite_differences(K, D):
    rng = np.random.default_rng(100 * K + D)
    X = rng.normal(size=(50, D))
    for _ in range(3):
        m = feasible_interior_model(rng, K, D, X)
        h = Hyper(rng.uniform(0, 1), rng.uniform(0, 1))
        err = gradient_rel_error(gradient(X, m, h), finite_difference_gradient(X, m, h))
        assert err.max() < 1e-5


def test_gradient_in_box_width_coordinates():
    # (a, w) coordinates: moving a with w fixed shifts the whole box
    rng = np.random.default_rng(7)
    X = rng.normal(size=(50, 2))
    m = feasible_interior_model(rng, 2, 2, X)
    h = Hyper(0.0, 0.8)
    g = unpack(gradient(X, m, h), 2, 2)
    fd = unpack(finite_difference_gradient(X, m, h), 2, 2)
    np.testing.assert_allclose(g.a, fd.a, atol=1e-8)
    np.testing.assert_allclose(g.w, fd.w, atol=1e-8)


def test_gradient_shift_direction_is_zero():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(60, 2))
    for _ in range(10):
        m = random_model(rng, 4, 2)
        h = Hyper(rng.uniform(0, 2), rng.uniform(0, 2))
        g = unpack(gradient(X, m, h), 4, 2)
        assert abs(g.pi.sum()) < 1e-8
        shifted = m.copy()
        shifted.pi = m.pi + 3.7
        assert objective(X, shifted, h) == pytest.approx(objective(X, m, h), abs=1e-10)


def test_single_cluster_gradient_is_penalty_only():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(30, 2))
    m = random_model(rng, 1, 2)
    h = Hyper(0.5, 0.7)
    g = unpack(gradient(X, m, h), 1, 2)
    assert g.pi[0] == 0.0
    assert g.omega[0] == 0.0
    d = 0.5 * (m.a + m.b) - m.mu
    prec = m.L[0] @ m.L[0].T
    np.testing.assert_allclose(g.mu[0], 2 * 0.7 * prec @ d[0], rtol=1e-12)
    np.testing.assert_allclose(g.a[0], -2 * 0.7 * prec @ d[0], rtol=1e-12)
    np.testing.assert_allclose(g.w[0], -0.7 * prec @ d[0], rtol=1e-12)
    np.testing.assert_allclose(g.L[0], np.tril(-2 * 0.7 * np.outer(d[0], d[0]) @ m.L[0]),
                               rtol=1e-12, atol=1e-15)
