"""Seeded simulation generators, CSV ingestion and benchmark dataset loaders.

Generator constants are fixed here; none of the simulated designs publish their
parameters, so means, spreads and box sizes were chosen to reproduce the
qualitative behaviour of each design (see ``scripts/tune_generators.py``).
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np


class ParseError(ValueError):
    pass


@dataclass
class Standardizer:
    mean: np.ndarray
    sd: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        sd = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.ones(X.shape[1])
        sd = np.where(sd > 0, sd, 1.0)
        return cls(X.mean(axis=0), sd)

    @classmethod
    def identity(cls, D: int) -> "Standardizer":
        return cls(np.zeros(D), np.ones(D))

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.sd

    def inverse(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.sd + self.mean


@dataclass
class LabeledDataset:
    X: np.ndarray
    true_labels: np.ndarray | None = None
    name: str = ""
    standardizer: Standardizer | None = None
    extra_labels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.true_labels is not None:
            self.true_labels = np.asarray(self.true_labels)
            if self.true_labels.shape[0] != self.X.shape[0]:
                raise ValueError("label vector length differs from N")
        if self.standardizer is None:
            self.standardizer = Standardizer.identity(self.X.shape[1])

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def D(self) -> int:
        return self.X.shape[1]

    def raw(self) -> np.ndarray:
        return self.standardizer.inverse(self.X)

    def standardized(self) -> "LabeledDataset":
        raw = self.raw()
        st = Standardizer.fit(raw)
        return LabeledDataset(st.transform(raw), self.true_labels, self.name, st,
                              dict(self.extra_labels))


# ---------------------------------------------------------------------------
# simulation designs

def _rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _split_counts(n, k, rng):
    return rng.multinomial(n, np.full(k, 1.0 / k))


GU6_CENTERS = 7.0 * np.array(
    [[np.cos(t), np.sin(t)] for t in np.arange(6) * np.pi / 3])
GU6_SD = np.array([1.0, 0.6])
GU6_BOX_HALF = np.array([0.8, 0.8])
GU6_OMEGA = 0.7


def gen_gu6(seed: int = 0) -> LabeledDataset:
    """Six Gaussian/uniform clusters on a hexagon; N=1150, D=2."""
    rng = np.random.default_rng(seed)
    counts = _split_counts(1150, 6, rng)
    Xs, ys = [], []
    for k, n in enumerate(counts):
        R = _rotation(k * np.pi / 6)
        n_gauss = rng.binomial(n, GU6_OMEGA)
        g = rng.normal(size=(n_gauss, 2)) * GU6_SD @ R.T + GU6_CENTERS[k]
        u = rng.uniform(-GU6_BOX_HALF, GU6_BOX_HALF, size=(n - n_gauss, 2)) + GU6_CENTERS[k]
        Xs.append(np.vstack([g, u]))
        ys.append(np.full(n, k))
    X, y = np.vstack(Xs), np.concatenate(ys)
    perm = rng.permutation(X.shape[0])
    return LabeledDataset(X[perm], y[perm], "gu6")


# cross: two X shapes (each two crossing elongated Gaussians) and two round blobs
CROSS_N_PER = 50
CROSS_ARM_SD = np.array([2.0, 0.3])
CROSS_CENTERS = np.array([[-5.0, 0.0], [5.0, 0.0]])
CROSS_ROUND = np.array([[0.0, 6.0], [0.0, -6.0]])
CROSS_ROUND_SD = 0.8


def gen_cross(seed: int = 0) -> LabeledDataset:
    """Six Gaussians forming two crosses plus two round clusters.

    ``true_labels`` is the 4-way intuitive labelling (crosses merged);
    ``extra_labels["generative"]`` keeps the 6 source components.
    """
    rng = np.random.default_rng(seed)
    Xs, intuitive, gen = [], [], []
    comp = 0
    for c, center in enumerate(CROSS_CENTERS):
        for theta in (np.pi / 4, -np.pi / 4):
            z = rng.normal(size=(CROSS_N_PER, 2)) * CROSS_ARM_SD @ _rotation(theta).T
            Xs.append(z + center)
            intuitive.append(np.full(CROSS_N_PER, c))
            gen.append(np.full(CROSS_N_PER, comp))
            comp += 1
    for c, center in enumerate(CROSS_ROUND, start=2):
        Xs.append(rng.normal(size=(CROSS_N_PER, 2)) * CROSS_ROUND_SD + center)
        intuitive.append(np.full(CROSS_N_PER, c))
        gen.append(np.full(CROSS_N_PER, comp))
        comp += 1
    X = np.vstack(Xs)
    perm = rng.permutation(X.shape[0])
    return LabeledDataset(X[perm], np.concatenate(intuitive)[perm], "cross",
                          extra_labels={"generative": np.concatenate(gen)[perm]})


MIXG_N = 210
MIXG_MEANS = np.array([[0.0, 0.0], [1.6, 0.0], [6.0, 4.0], [6.0, -4.0]])
MIXG_SD = np.array([0.6, 0.6, 1.0, 1.0])
MIXG_INTUITIVE = np.array([0, 0, 1, 2])


def gen_mixg(seed: int = 0) -> LabeledDataset:
    """Four-component GMM with two components close together; N=210.

    ``true_labels`` is the 3-way intuitive labelling, ``extra_labels["generative"]``
    the 4-way one.
    """
    rng = np.random.default_rng(seed)
    counts = _split_counts(MIXG_N, 4, rng)
    Xs, gen = [], []
    for k, n in enumerate(counts):
        Xs.append(rng.normal(size=(n, 2)) * MIXG_SD[k] + MIXG_MEANS[k])
        gen.append(np.full(n, k))
    X, g = np.vstack(Xs), np.concatenate(gen)
    perm = rng.permutation(X.shape[0])
    g = g[perm]
    return LabeledDataset(X[perm], MIXG_INTUITIVE[g], "mixg",
                          extra_labels={"generative": g})


OUTLIER_MEANS = np.array([[0.0, 0.0], [7.0, 0.0], [3.5, 6.0]])
OUTLIER_SD = np.array([0.6, 0.6, 0.6])
OUTLIER_N_GAUSS = 300
OUTLIER_N_UNIF = 50


def gen_outlier(seed: int = 0) -> LabeledDataset:
    """300 points from a 3-component GMM plus 50 uniform points over the bounding box.

    Uniform points are labelled with the Gaussian component of highest density
    at their location; ``extra_labels["is_outlier"]`` marks them.
    """
    rng = np.random.default_rng(seed)
    counts = _split_counts(OUTLIER_N_GAUSS, 3, rng)
    Xs, ys = [], []
    for k, n in enumerate(counts):
        Xs.append(rng.normal(size=(n, 2)) * OUTLIER_SD[k] + OUTLIER_MEANS[k])
        ys.append(np.full(n, k))
    G = np.vstack(Xs)
    U = rng.uniform(G.min(axis=0), G.max(axis=0), size=(OUTLIER_N_UNIF, 2))
    d2 = ((U[:, None, :] - OUTLIER_MEANS[None]) ** 2).sum(axis=2) / OUTLIER_SD ** 2
    logdens = -0.5 * d2 - 2 * np.log(OUTLIER_SD)
    X = np.vstack([G, U])
    y = np.concatenate(ys + [np.argmax(logdens, axis=1)])
    flag = np.r_[np.zeros(OUTLIER_N_GAUSS, bool), np.ones(OUTLIER_N_UNIF, bool)]
    perm = rng.permutation(X.shape[0])
    return LabeledDataset(X[perm], y[perm], "outlier", extra_labels={"is_outlier": flag[perm]})


FIG1_N = 600
FIG1_MEANS = np.array([[0.0, 0.0], [2.4, 0.0], [6.0, 5.0], [6.0, -5.0]])
FIG1_SD = np.array([0.7, 0.7, 1.0, 1.0])


def gen_fig1(seed: int = 0) -> LabeledDataset:
    """Four Gaussians, one pair overlapping: BIC tends to 4 clusters, ICL to 3."""
    rng = np.random.default_rng(seed)
    counts = _split_counts(FIG1_N, 4, rng)
    Xs, ys = [], []
    for k, n in enumerate(counts):
        Xs.append(rng.normal(size=(n, 2)) * FIG1_SD[k] + FIG1_MEANS[k])
        ys.append(np.full(n, k))
    X, y = np.vstack(Xs), np.concatenate(ys)
    perm = rng.permutation(X.shape[0])
    return LabeledDataset(X[perm], y[perm], "fig1")


GENERATORS = {
    "gu6": gen_gu6,
    "cross": gen_cross,
    "mixg": gen_mixg,
    "outlier": gen_outlier,
    "fig1": gen_fig1,
}


@dataclass(frozen=True)
class SimSpec:
    family: str
    seed: int = 0
    replicate: int = 0

    def __post_init__(self):
        if self.family not in GENERATORS:
            raise ValueError(f"unknown simulation family {self.family!r}")

    def generate(self) -> LabeledDataset:
        return GENERATORS[self.family](replicate_seed(self.seed, self.replicate))


def replicate_seed(seed: int, replicate: int) -> int:
    return int(np.random.SeedSequence([seed, replicate]).generate_state(1)[0])


def simulate(family: str, seed: int = 0) -> LabeledDataset:
    if family not in GENERATORS:
        raise ValueError(f"unknown simulation family {family!r}")
    return GENERATORS[family](seed)


# ---------------------------------------------------------------------------
# CSV

def load_csv(path, has_header: bool | None = None, label_column=None,
             standardize: bool = True) -> LabeledDataset:
    """Read a comma-separated numeric table.

    ``has_header=None`` sniffs the first row: it is a header when any cell fails
    to parse as a number. ``label_column`` is a 0-based index or a header name.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path} is empty")

    header = None
    if has_header is None:
        has_header = not all(_is_number(c) for c in rows[0])
    if has_header:
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    offset = 2 if header is not None else 1

    width = len(rows[0]) if rows else 0
    lab_idx = None
    if label_column is not None:
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            if header is None or label_column not in header:
                raise ParseError(f"label column {label_column!r} not found in header")
            lab_idx = header.index(label_column)
        else:
            lab_idx = int(label_column)
            if lab_idx < 0:
                lab_idx += width
        if not 0 <= lab_idx < width:
            raise ParseError(f"label column {label_column!r} out of range")

    feats, labels = [], []
    for r, row in enumerate(rows):
        line = r + offset
        if len(row) != width:
            raise ParseError(f"row {r + 1} (line {line}) has {len(row)} fields, expected {width}")
        vals = []
        for c, cell in enumerate(row):
            if c == lab_idx:
                labels.append(cell.strip())
                continue
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"row {r + 1} (line {line}), column {c}: "
                                 f"non-numeric value {cell!r}") from None
            if not np.isfinite(v):
                raise ParseError(f"row {r + 1} (line {line}), column {c}: missing/non-finite value")
            vals.append(v)
        feats.append(vals)
    X = np.array(feats, dtype=float).reshape(len(feats), -1)
    y = None
    if lab_idx is not None:
        y = np.array([_maybe_int(v) for v in labels], dtype=object)
        if all(isinstance(v, int) for v in y):
            y = y.astype(int)
        else:
            y = y.astype(str)
    ds = LabeledDataset(X, y, path.stem)
    return ds.standardized() if standardize else ds


def _is_number(s) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _maybe_int(s):
    try:
        f = float(s)
    except ValueError:
        return s
    return int(f) if f.is_integer() else s


def write_csv(path, X, labels=None, header=None):
    X = np.asarray(X, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is None:
            header = [f"x{j + 1}" for j in range(X.shape[1])] + (["label"] if labels is not None else [])
        w.writerow(header)
        for i, row in enumerate(X):
            out = [repr(float(v)) for v in row]
            if labels is not None:
                out.append(str(labels[i]))
            w.writerow(out)


# ---------------------------------------------------------------------------
# benchmark datasets

BENCHMARKS = ("bankruptcy", "wine", "seeds", "thyroid", "wholesale")
DATA_DIR_ENV = "TURTLESHELL_DATA"


def _bundled(name: str) -> Path | None:
    res = resources.files("turtleshell") / "data" / f"{name}.csv"
    return Path(str(res)) if res.is_file() else None


def find_benchmark(name: str) -> Path | None:
    """Locate ``<name>.csv``: $TURTLESHELL_DATA first, then the bundled copies."""
    if name not in BENCHMARKS:
        raise ValueError(f"unknown benchmark dataset {name!r}")
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        p = Path(env) / f"{name}.csv"
        if p.is_file():
            return p
    return _bundled(name)


def load_benchmark(name: str, standardize: bool = True) -> LabeledDataset:
    """Benchmark CSVs carry a header and a final ``label`` column."""
    path = find_benchmark(name)
    if path is None:
        raise FileNotFoundError(
            f"benchmark {name!r} is not bundled; place {name}.csv (features..., label) "
            f"in ${DATA_DIR_ENV}")
    ds = load_csv(path, has_header=True, label_column="label", standardize=standardize)
    ds.name = name
    return ds
