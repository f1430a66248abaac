"""Discriminative mixture-of-mixtures clustering.

Each cluster is a Gaussian blended with a uniform box; parameters maximize the
mutual information between data and cluster labels, penalized towards balanced
proportions (``lambda1``) and boxes centred on their Gaussians (``lambda2``).
"""

from .baselines import GmmFit, bic, gmm_em, icl, select_k
from .data import LabeledDataset, Standardizer, load_benchmark, load_csv, simulate
from .initialization import InitConfig, initialize
from .metrics import ari, silhouette
from .objective import Hyper, Model, gradient, objective, posterior
from .optimizer import OptimizerConfig, maximize
from .selection import FitConfig, FitError, FitResult, fit

__version__ = "0.1.0"

__all__ = [
    "FitConfig", "FitError", "FitResult", "GmmFit", "Hyper", "InitConfig", "LabeledDataset",
    "Model", "OptimizerConfig", "Standardizer", "ari", "bic", "fit", "gmm_em", "gradient",
    "icl", "initialize", "load_benchmark", "load_csv", "maximize", "objective", "posterior",
    "select_k", "silhouette", "simulate",
]
