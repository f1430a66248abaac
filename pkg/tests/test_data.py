import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turtleshell.data import (
    BENCHMARKS,
    DATA_DIR_ENV,
    GENERATORS,
    ParseError,
    SimSpec,
    Standardizer,
    find_benchmark,
    load_benchmark,
    load_csv,
    replicate_seed,
    simulate,
    write_csv,
)


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# ---------------------------------------------------------------------------
# generators

@pytest.mark.parametrize("family,N,K", [("gu6", 1150, 6), ("cross", 300, 4), ("mixg", 210, 3),
                                        ("outlier", 350, 3), ("fig1", None, 4)])
def test_generator_shapes(family, N, K):
    ds = simulate(family, 3)
    if N is not None:
        assert ds.N == N
    assert ds.D == 2
    assert np.unique(ds.true_labels).size == K
    assert np.all(np.isfinite(ds.X))


@pytest.mark.parametrize("family", sorted(GENERATORS))
def test_generators_deterministic(family):
    a, b = simulate(family, 5), simulate(family, 5)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.true_labels, b.true_labels)
    c = simulate(family, 6)
    assert not np.array_equal(a.X, c.X)


def test_cross_labels():
    ds = simulate("cross", 0)
    np.testing.assert_array_equal(np.bincount(ds.true_labels), [100, 100, 50, 50])
    gen = ds.extra_labels["generative"]
    np.testing.assert_array_equal(np.bincount(gen), [50] * 6)
    # generative components nest inside the intuitive clusters
    for g in range(6):
        assert np.unique(ds.true_labels[gen == g]).size == 1


def test_mixg_two_labelings():
    ds = simulate("mixg", 0)
    gen = ds.extra_labels["generative"]
    assert np.unique(gen).size == 4
    np.testing.assert_array_equal(ds.true_labels, np.array([0, 0, 1, 2])[gen])


def test_outlier_counts_and_nearest_labels():
    from turtleshell.data import OUTLIER_MEANS
    ds = simulate("outlier", 0)
    flag = ds.extra_labels["is_outlier"]
    assert flag.sum() == 50 and (~flag).sum() == 300
    U = ds.X[flag]
    nearest = np.argmin(((U[:, None] - OUTLIER_MEANS[None]) ** 2).sum(axis=2), axis=1)
    np.testing.assert_array_equal(ds.true_labels[flag], nearest)
    G = ds.X[~flag]
    assert np.all(U >= G.min(axis=0)) and np.all(U <= G.max(axis=0))


def test_replicate_seeds_and_simspec():
    assert replicate_seed(0, 1) != replicate_seed(0, 2)
    assert replicate_seed(3, 4) == replicate_seed(3, 4)
    ds = SimSpec("mixg", 0, 2).generate()
    np.testing.assert_array_equal(ds.X, simulate("mixg", replicate_seed(0, 2)).X)
    with pytest.raises(ValueError):
        SimSpec("spiral")
    with pytest.raises(ValueError):
        simulate("spiral")


# ---------------------------------------------------------------------------
# standardization

@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_standardizer_roundtrip(N, D, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(loc=5, scale=rng.uniform(0.1, 10, size=D), size=(N, D))
    st_ = Standardizer.fit(X)
    Z = st_.transform(X)
    np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(Z.std(axis=0, ddof=1), 1, atol=1e-12)
    np.testing.assert_allclose(st_.inverse(Z), X, rtol=1e-12, atol=1e-12)


def test_standardizer_constant_column():
    st_ = Standardizer.fit(np.array([[1.0, 2.0], [1.0, 3.0]]))
    assert st_.sd[0] == 1.0


# ---------------------------------------------------------------------------
# CSV

def test_csv_plain(tmp_path):
    ds = load_csv(write(tmp_path, "1,2\n3,4\n5,6\n"), standardize=False)
    np.testing.assert_array_equal(ds.X, [[1, 2], [3, 4], [5, 6]])
    assert ds.true_labels is None


def test_csv_standardized(tmp_path):
    ds = load_csv(write(tmp_path, "1,2\n3,4\n5,6\n"))
    np.testing.assert_allclose(ds.X.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(ds.X.std(axis=0, ddof=1), 1, atol=1e-12)
    np.testing.assert_allclose(ds.raw(), [[1, 2], [3, 4], [5, 6]], atol=1e-12)


def test_csv_bad_cell_names_row(tmp_path):
    with pytest.raises(ParseError, match="row 1"):
        load_csv(write(tmp_path, "a,2\n3,4\n"), has_header=False)
    with pytest.raises(ParseError, match="row 2"):
        load_csv(write(tmp_path, "x,y\n1,2\n3,?\n"))
    with pytest.raises(ParseError, match="fields"):
        load_csv(write(tmp_path, "1,2\n3\n"))
    with pytest.raises(ParseError, match="missing"):
        load_csv(write(tmp_path, "1,2\n3,nan\n"))
    with pytest.raises(ParseError):
        load_csv(tmp_path / "nope.csv")
    with pytest.raises(ParseError):
        load_csv(write(tmp_path, ""))


def test_csv_header_and_label_column(tmp_path):
    p = write(tmp_path, "x,y,label\n1,2,a\n3,4,b\n5,6,a\n")
    ds = load_csv(p, label_column="label", standardize=False)
    np.testing.assert_array_equal(ds.X, [[1, 2], [3, 4], [5, 6]])
    np.testing.assert_array_equal(ds.true_labels, ["a", "b", "a"])
    by_index = load_csv(p, label_column=-1, standardize=False)
    np.testing.assert_array_equal(by_index.true_labels, ds.true_labels)
    with pytest.raises(ParseError):
        load_csv(p, label_column="class")
    num = load_csv(write(tmp_path, "1,2,0\n3,4,1\n", "n.csv"), label_column=2, standardize=False)
    assert num.true_labels.dtype.kind == "i"


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 20), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_csv_roundtrip_full_precision(N, D, seed):
    import tempfile
    from pathlib import Path
    rng = np.random.default_rng(seed)
    X = rng.normal(scale=10.0 ** rng.integers(-8, 8), size=(N, D))
    y = rng.integers(0, 3, size=N)
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "r.csv"
        write_csv(p, X, y)
        back = load_csv(p, label_column="label", standardize=False)
    np.testing.assert_array_equal(back.X, X)
    np.testing.assert_array_equal(back.true_labels, y)


# ---------------------------------------------------------------------------
# benchmark datasets

def test_wine_is_bundled():
    ds = load_benchmark("wine", standardize=False)
    assert (ds.N, ds.D) == (178, 13)
    np.testing.assert_array_equal(np.bincount(ds.true_labels)[1:], [59, 71, 48])


def test_benchmark_lookup(tmp_path, monkeypatch):
    with pytest.raises(ValueError):
        find_benchmark("iris")
    monkeypatch.setenv(DATA_DIR_ENV, str(tmp_path))
    write(tmp_path, "a,b,label\n1,2,0\n2,1,1\n3,3,0\n", "seeds.csv")
    ds = load_benchmark("seeds")
    assert ds.name == "seeds" and ds.N == 3
    for name in BENCHMARKS:
        path = find_benchmark(name)
        if path is None:
            with pytest.raises(FileNotFoundError, match=DATA_DIR_ENV):
                load_benchmark(name)
