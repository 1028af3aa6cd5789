"""Initial measurement designs on the unit cube.

Latin hypercube variants are implemented directly (one point per stratum,
jittered uniformly within its cell; the maximin variant keeps the best of
K random draws).  Sobol and Halton come from scipy's unscrambled
generators with the leading all-zeros point skipped.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

DESIGN_SCHEMES = ("random", "lhs", "maximin_lhs", "sobol", "halton")
DEFAULT_MAXIMIN_CANDIDATES = 1000


@dataclass
class DesignSpec:
    scheme: str
    n_points: int
    dim: int
    maximin_candidates: int = DEFAULT_MAXIMIN_CANDIDATES

    def __post_init__(self):
        if self.scheme not in DESIGN_SCHEMES:
            raise ValueError(f"unknown design scheme {self.scheme!r}")
        if self.n_points < 1 or self.dim < 1:
            raise ValueError("n_points and dim must be >= 1")
        if self.maximin_candidates < 1:
            raise ValueError("maximin_candidates must be >= 1")


def _lhs(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    cells = np.stack([rng.permutation(n) for _ in range(dim)], axis=1)
    return (cells + rng.uniform(size=(n, dim))) / n


def _min_pairwise_distance(points: np.ndarray) -> float:
    if points.shape[0] < 2:
        return np.inf
    diffs = points[:, None, :] - points[None, :, :]
    d = np.sqrt(np.sum(diffs**2, axis=-1))
    return float(d[np.triu_indices_from(d, k=1)].min())


def _low_discrepancy(engine_cls, n: int, dim: int) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # non-power-of-two draws
        points = engine_cls(d=dim, scramble=False).random(n + 1)
    assert not points[0].any(), "expected an all-zeros leading point"
    return points[1:]


def generate_design(spec: DesignSpec, rng: np.random.Generator) -> np.ndarray:
    """n_points x dim design in [0, 1]^dim.  Deterministic given the seed
    for random/lhs/maximin_lhs; sobol and halton ignore the generator."""
    if spec.scheme == "random":
        return rng.uniform(size=(spec.n_points, spec.dim))
    if spec.scheme == "lhs":
        return _lhs(spec.n_points, spec.dim, rng)
    if spec.scheme == "maximin_lhs":
        best, best_dist = None, -np.inf
        for _ in range(spec.maximin_candidates):
            cand = _lhs(spec.n_points, spec.dim, rng)
            dist = _min_pairwise_distance(cand)
            if dist > best_dist:
                best, best_dist = cand, dist
        return best
    if spec.scheme == "sobol":
        return _low_discrepancy(qmc.Sobol, spec.n_points, spec.dim)
    return _low_discrepancy(qmc.Halton, spec.n_points, spec.dim)
