import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turtleshell.baselines import GmmFit, bic, gmm_em, gmm_posterior, icl, select_k, select_k_both


def blobs(rng, centers, n=80, sd=0.3):
    X = np.vstack([rng.normal(size=(n, len(c))) * sd + c for c in centers])
    y = np.repeat(np.arange(len(centers)), n)
    return X, y


def test_single_component_is_sample_moments():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(100, 3)) @ rng.normal(size=(3, 3))
    fit = gmm_em(X, 1, n_restarts=2)
    S = np.cov(X.T, bias=True)
    ridge = 1e-6 * np.trace(S) / 3
    np.testing.assert_allclose(fit.means[0], X.mean(axis=0), atol=1e-12)
    np.testing.assert_allclose(fit.covariances[0], S + ridge * np.eye(3), atol=1e-12)
    assert fit.weights[0] == 1.0


def test_two_blobs_recovered():
    rng = np.random.default_rng(1)
    centers = np.array([[0.0, 0.0], [4.0, 1.0]])
    X, _ = blobs(rng, centers)
    fit = gmm_em(X, 2, n_restarts=3)
    order = np.argsort(fit.means[:, 0])
    np.testing.assert_allclose(fit.means[order], centers, atol=0.5)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_loglik_trace_monotone(K, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 2)) * rng.uniform(0.5, 2, size=2)
    fit = gmm_em(X, K, n_restarts=1, seed=seed)
    tr = np.array(fit.loglik_trace)
    assert np.all(np.diff(tr) >= -1e-9 * np.abs(tr[1:]).clip(1))


def test_parameter_count():
    f = GmmFit(np.ones(3) / 3, np.zeros((3, 2)), np.tile(np.eye(2), (3, 1, 1)), 0.0)
    assert f.n_params == 2 + 6 + 9


def test_bic_formula_and_icl_bounds():
    rng = np.random.default_rng(2)
    X, _ = blobs(rng, [[0.0, 0.0], [1.0, 0.0]], n=50, sd=0.5)
    fit = gmm_em(X, 2, n_restarts=2)
    assert bic(fit, 100) == pytest.approx(2 * fit.loglik - fit.n_params * np.log(100))
    assert icl(fit, X) <= bic(fit, 100)
    P = gmm_posterior(X, fit)
    want = bic(fit, 100) + 2 * np.log(P.max(axis=1)).sum()
    assert icl(fit, X) == pytest.approx(want, rel=1e-12)


def test_icl_equals_bic_for_certain_posteriors_and_one_component():
    rng = np.random.default_rng(3)
    X, _ = blobs(rng, [[0.0, 0.0], [400.0, 0.0]], n=30, sd=0.3)
    fit = gmm_em(X, 2, n_restarts=2)
    assert icl(fit, X) == bic(fit, X.shape[0])
    one = gmm_em(X, 1, n_restarts=1)
    assert icl(one, X) == bic(one, X.shape[0])


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_icl_never_exceeds_bic(K, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(50, 2))
    fit = gmm_em(X, K, n_restarts=1, seed=seed)
    assert icl(fit, X) <= bic(fit, 50) + 1e-9


def test_single_blob_selects_one():
    X = np.random.default_rng(4).normal(size=(150, 2))
    for crit in ("bic", "icl"):
        assert select_k(X, range(1, 6), crit, n_restarts=3)[0] == 1
    both = select_k_both(X, range(1, 6), n_restarts=3)
    assert both["bic"][0] == both["icl"][0] == 1


def test_select_k_three_blobs_and_errors():
    rng = np.random.default_rng(5)
    X, _ = blobs(rng, [[0, 0], [5, 0], [0, 5]], n=60)
    assert select_k(X, range(1, 6), "bic", n_restarts=3)[0] == 3
    with pytest.raises(ValueError):
        select_k(X, [], "bic")
    with pytest.raises(ValueError):
        select_k(X, [2], "aic")


def test_em_deterministic():
    X = np.random.default_rng(6).normal(size=(80, 2))
    a = gmm_em(X, 3, n_restarts=2, seed=11)
    b = gmm_em(X, 3, n_restarts=2, seed=11)
    np.testing.assert_array_equal(a.means, b.means)
