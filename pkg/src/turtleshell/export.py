"""Writing fit results: labels.csv, posteriors.csv, model.json, trace.csv."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .selection import FitResult

MODEL_SCHEMA_VERSION = 1


def _f(x) -> str:
    return format(float(x), ".17g")


def model_to_dict(res: FitResult, extra: dict | None = None) -> dict:
    """Model parameters in the original data units.

    With per-column scale ``s`` and shift ``c``: ``mean = s*mu + c``,
    ``covariance = S Sigma S`` and ``precision_cholesky = S^-1 L`` (``S = diag(s)``).
    """
    m = res.model
    sd, shift = res.standardizer.sd, res.standardizer.mean
    S = np.diag(sd)
    Sinv = np.diag(1.0 / sd)
    tau = m.tau
    cov = m.covariance
    clusters = []
    for k in range(m.K):
        clusters.append({
            "tau": float(tau[k]),
            "pi": float(m.pi[k]),
            "omega": float(m.omega[k]),
            "mean": (m.mu[k] * sd + shift).tolist(),
            "covariance": (S @ cov[k] @ S).tolist(),
            "precision_cholesky": (Sinv @ m.L[k]).tolist(),
            "lower": (m.a[k] * sd + shift).tolist(),
            "upper": (m.b[k] * sd + shift).tolist(),
        })
    out = {
        "version": MODEL_SCHEMA_VERSION,
        "K": int(m.K),
        "D": int(m.D),
        "lambda1": float(res.hyper.lambda1),
        "lambda2": float(res.hyper.lambda2),
        "asw": float(res.asw),
        "initial_K": int(res.initial_K),
        "standardizer": {"mean": shift.tolist(), "sd": sd.tolist()},
        "clusters": clusters,
        "history": res.history,
    }
    if extra:
        out.update(extra)
    return out


def write_fit_outputs(res: FitResult, out_dir, extra: dict | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "labels.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "label"])
        for i, lab in enumerate(res.labels):
            w.writerow([i, int(lab)])
    with open(out / "posteriors.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"p{k + 1}" for k in range(res.responsibilities.shape[1])])
        for row in res.responsibilities:
            w.writerow([_f(v) for v in row])
    with open(out / "trace.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "phase", "objective"])
        for i, (phase, value) in enumerate(res.objective_trace):
            w.writerow([i, phase, _f(value)])
    with open(out / "model.json", "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(res, extra), fh, indent=2, sort_keys=True)
        fh.write("\n")
