"""Acquisition functions scoring candidate settings from the GP posterior.

All three kinds are expressed as utilities to be maximized under the
minimization convention: `best` is the smallest objective value observed
so far, and the lower-confidence-bound utility is the negated bound.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import NumericError
from .gp import GpPosterior, predict

ACQUISITION_KINDS = ("pi", "ei", "lcb")
DEFAULT_BETA = 2.0
DEFAULT_CANDIDATE_COUNT = 4096


@dataclass
class AcquisitionConfig:
    kind: str = "lcb"
    beta: float = DEFAULT_BETA
    # auto: grid nodes when the objective is grid-backed, else a Sobol set
    candidate_source: str = "auto"
    candidate_count: int = DEFAULT_CANDIDATE_COUNT
    exclude_visited: bool = False  # for noiseless grid replay

    def __post_init__(self):
        if self.kind not in ACQUISITION_KINDS:
            raise ValueError(f"unknown acquisition kind {self.kind!r}")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.candidate_source not in ("auto", "sobol", "grid"):
            raise ValueError("candidate_source must be 'auto', 'sobol' or 'grid'")
        if self.candidate_count < 1:
            raise ValueError("candidate_count must be >= 1")


def acquisition_value(kind: str, mean, std, best: float, beta: float = DEFAULT_BETA):
    """Utility of a predicted (mean, std) against the incumbent `best`.

    pi  -> Phi((best - mean) / std)
    ei  -> (best - mean) Phi(z) + std phi(z), z = (best - mean) / std
    lcb -> -(mean - beta * std)

    Exact zero-variance limits: pi degenerates to an indicator (0.5 at
    equality), ei to max(0, best - mean).  Accepts scalars or arrays.
    """
    if kind not in ACQUISITION_KINDS:
        raise ValueError(f"unknown acquisition kind {kind!r}")
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    if np.any(std < 0):
        raise ValueError("std must be >= 0")

    if kind == "lcb":
        out = -(mean - beta * std)
        return float(out) if out.ndim == 0 else out

    improve = best - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(std > 0, improve / np.where(std > 0, std, 1.0), 0.0)
    if kind == "pi":
        out = np.where(
            std > 0,
            norm.cdf(z),
            np.where(improve > 0, 1.0, np.where(improve < 0, 0.0, 0.5)),
        )
    else:
        out = np.where(
            std > 0,
            improve * norm.cdf(z) + std * norm.pdf(z),
            np.maximum(improve, 0.0),
        )
    return float(out) if out.ndim == 0 else out


def propose_next(
    posterior: GpPosterior,
    config: AcquisitionConfig,
    candidates: np.ndarray,
    best: float | None = None,
) -> np.ndarray:
    """Candidate maximizing the acquisition utility; ties break toward the
    lowest row index.  Deterministic given posterior, config, candidates."""
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.shape[0] < 1:
        raise ValueError("candidates must be non-empty")
    if best is None:
        best = float(np.min(posterior.dataset.y))
    mean, var = predict(posterior, candidates)
    values = np.asarray(
        acquisition_value(config.kind, mean, np.sqrt(var), best, config.beta)
    )
    if not np.any(np.isfinite(values)):
        raise NumericError("acquisition is non-finite at every candidate")
    values = np.where(np.isfinite(values), values, -np.inf)
    return candidates[int(np.argmax(values))].copy()
