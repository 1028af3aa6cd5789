"""Sequential optimization drivers: the GP loop and a finite-difference
gradient-descent baseline with comparable evaluation accounting.

Runs operate on normalized coordinates internally; records store physical
settings.  A run is replay-deterministic given its seed and a
deterministic objective.
"""

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .acquisition import AcquisitionConfig, propose_next
from .design import DesignSpec, generate_design
from .errors import ObjectiveError
from .gp import Dataset, HyperBounds, fit, optimize_hyperparameters
from .measurement import Objective

SOBOL_CANDIDATE_FALLBACK = "sobol"


def normalize(domain: np.ndarray, x_phys: np.ndarray) -> np.ndarray:
    domain = np.asarray(domain, dtype=float)
    return (np.asarray(x_phys, dtype=float) - domain[:, 0]) / (domain[:, 1] - domain[:, 0])


def denormalize(domain: np.ndarray, u: np.ndarray) -> np.ndarray:
    domain = np.asarray(domain, dtype=float)
    return domain[:, 0] + np.asarray(u, dtype=float) * (domain[:, 1] - domain[:, 0])


def _check_domain(domain) -> np.ndarray:
    domain = np.asarray(domain, dtype=float)
    if domain.ndim != 2 or domain.shape[1] != 2:
        raise ValueError("domain must be a (D, 2) array of bounds")
    if not np.all(np.isfinite(domain)) or not np.all(domain[:, 0] < domain[:, 1]):
        raise ValueError("domain bounds must be finite with lower < upper")
    return domain


@dataclass
class BoConfig:
    """Loop settings: initial design size, total budget, surrogate and
    acquisition choices, and the refit cadence."""

    n_init: int = 12
    n_max: int = 42
    design: str = "lhs"
    kernel_family: str = "matern52"
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    refit_every: int = 1
    restarts: int = 8
    hyper_bounds: HyperBounds = field(default_factory=HyperBounds)
    seed: int = 0
    patience: int | None = None  # optional no-improvement stop, off by default

    def __post_init__(self):
        if self.n_init < 2:
            raise ValueError("n_init must be >= 2")
        if self.n_max < self.n_init:
            raise ValueError("n_max must be >= n_init")
        if self.refit_every < 1:
            raise ValueError("refit_every must be >= 1")

    def summary(self) -> dict:
        return {
            "n_init": self.n_init,
            "n_max": self.n_max,
            "design": self.design,
            "kernel_family": self.kernel_family,
            "acquisition": self.acquisition.kind,
            "beta": self.acquisition.beta,
            "refit_every": self.refit_every,
            "restarts": self.restarts,
        }


@dataclass
class GdConfig:
    """Gradient-descent baseline settings (step size and forward-difference
    step are in normalized coordinates)."""

    step_size: float = 0.1
    fd_step: float = 1e-3
    max_iterations: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.step_size <= 0 or self.fd_step <= 0:
            raise ValueError("step_size and fd_step must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def summary(self) -> dict:
        return {
            "step_size": self.step_size,
            "fd_step": self.fd_step,
            "max_iterations": self.max_iterations,
        }


@dataclass
class RunEntry:
    iteration: int
    x: list[float]
    y: float
    best: float
    theta: dict
    t_wall_ms: float


@dataclass
class RunRecord:
    """Ordered evaluation log of one optimization trial."""

    domain: np.ndarray
    config: dict
    seed: int
    entries: list[RunEntry] = field(default_factory=list)
    complete: bool = True
    failure: str | None = None

    def best_so_far(self) -> np.ndarray:
        return np.array([e.best for e in self.entries])

    def best_entry(self) -> RunEntry:
        return min(self.entries, key=lambda e: e.y)

    def header(self) -> dict:
        return {
            "domain": [[float(lo), float(hi)] for lo, hi in self.domain],
            "config": self.config,
            "seed": int(self.seed),
            "complete": self.complete,
            "failure": self.failure,
        }

    def to_jsonl(self, include_timing: bool = True) -> str:
        lines = [json.dumps(self.header(), sort_keys=True)]
        for e in self.entries:
            row = {
                "iter": e.iteration,
                "x": e.x,
                "y": e.y,
                "best": e.best,
                "theta": e.theta,
            }
            if include_timing:
                row["t_wall_ms"] = e.t_wall_ms
            lines.append(json.dumps(row, sort_keys=True))
        return "\n".join(lines) + "\n"

    def write_jsonl(self, path, include_timing: bool = True) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl(include_timing))


def _theta_dict(config) -> dict:
    theta = {
        "length_scale": config.length_scale,
        "output_scale": config.output_scale,
        "noise_variance": config.noise_variance,
    }
    if config.period is not None:
        theta["period"] = config.period
    return theta


class _Evaluator:
    """Applies the retry-once-then-abort policy around objective calls."""

    def __init__(self, objective, domain, record):
        self.objective = objective
        self.domain = domain
        self.record = record

    def __call__(self, u: np.ndarray) -> float | None:
        x_phys = denormalize(self.domain, u)
        t0 = time.perf_counter()
        try:
            y = self.objective(x_phys)
        except ObjectiveError as first:
            try:
                y = self.objective(x_phys)
            except ObjectiveError as second:
                self.record.complete = False
                self.record.failure = f"{first}; retry failed: {second}"
                return None
        best = min(y, self.record.entries[-1].best) if self.record.entries else y
        self.record.entries.append(
            RunEntry(
                iteration=len(self.record.entries) + 1,
                x=[float(v) for v in x_phys],
                y=float(y),
                best=float(best),
                theta={},
                t_wall_ms=(time.perf_counter() - t0) * 1e3,
            )
        )
        return y


def _candidates(objective: Objective, config: BoConfig, domain: np.ndarray) -> np.ndarray:
    source = config.acquisition.candidate_source
    nodes = getattr(objective, "nodes", None)
    if source == "grid" and nodes is None:
        raise ValueError("grid candidate source requires a grid-backed objective")
    if nodes is not None and source != "sobol":
        return normalize(domain, nodes)
    spec = DesignSpec("sobol", config.acquisition.candidate_count, domain.shape[0])
    return generate_design(spec, np.random.default_rng(0))


def run_bo(objective: Objective, config: BoConfig, domain=None) -> RunRecord:
    """Run the full loop: initial design, then fit / refit hyperparameters /
    propose / evaluate until the budget is spent."""
    domain = _check_domain(domain if domain is not None else objective.domain)
    dim = domain.shape[0]
    rng = np.random.default_rng(config.seed)
    record = RunRecord(domain=domain, config=config.summary(), seed=config.seed)
    evaluate = _Evaluator(objective, domain, record)

    design = generate_design(DesignSpec(config.design, config.n_init, dim), rng)
    for u in design:
        if evaluate(u) is None:
            return record

    candidates = _candidates(objective, config, domain)
    kernel_config = None
    since_improvement = 0
    while len(record.entries) < config.n_max:
        X = normalize(domain, np.array([e.x for e in record.entries]))
        X = np.clip(X, 0.0, 1.0)
        y = np.array([e.y for e in record.entries])
        dataset = Dataset(X, y)
        iterations_done = len(record.entries) - config.n_init
        if kernel_config is None or iterations_done % config.refit_every == 0:
            kernel_config = optimize_hyperparameters(
                dataset,
                config.kernel_family,
                bounds=config.hyper_bounds,
                restarts=config.restarts,
                rng=rng,
                extra_starts=[kernel_config] if kernel_config else None,
            )
        posterior = fit(dataset, kernel_config)

        pool = candidates
        if config.acquisition.exclude_visited:
            visited = {tuple(np.round(row, 12)) for row in X}
            keep = [
                i for i, row in enumerate(pool)
                if tuple(np.round(row, 12)) not in visited
            ]
            if keep:
                pool = pool[keep]
        proposal = propose_next(posterior, config.acquisition, pool)

        previous_best = record.entries[-1].best
        y_new = evaluate(proposal)
        if y_new is None:
            return record
        record.entries[-1].theta = _theta_dict(kernel_config)
        if config.patience is not None:
            since_improvement = 0 if y_new < previous_best else since_improvement + 1
            if since_improvement >= config.patience:
                break
    return record


def gradient_descent_baseline(objective: Objective, config: GdConfig, domain=None) -> RunRecord:
    """Forward-difference gradient descent; every probe evaluation is
    recorded so budgets are comparable with the GP loop (D+1 per step)."""
    domain = _check_domain(domain if domain is not None else objective.domain)
    dim = domain.shape[0]
    rng = np.random.default_rng(config.seed)
    record = RunRecord(domain=domain, config=config.summary(), seed=config.seed)
    evaluate = _Evaluator(objective, domain, record)

    u = rng.uniform(size=dim)
    for _ in range(config.max_iterations):
        f0 = evaluate(u)
        if f0 is None:
            return record
        grad = np.zeros(dim)
        for d in range(dim):
            probe = u.copy()
            probe[d] = min(probe[d] + config.fd_step, 1.0)
            step = probe[d] - u[d]
            f1 = evaluate(probe)
            if f1 is None:
                return record
            grad[d] = (f1 - f0) / step if step > 0 else 0.0
        u = np.clip(u - config.step_size * grad, 0.0, 1.0)
    return record
