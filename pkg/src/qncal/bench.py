"""Benchmark harness: baseline grids, repeated seeded trials with
aggregated convergence curves, and kernel/acquisition/design sweeps.

Per-trial generators derive from (master_seed, trial_index), so results
are reproducible bit-for-bit regardless of worker count, and sweep
variants share trial seeds for paired comparisons.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .measurement import (
    CountConfig,
    GridData,
    ObjectiveSpec,
    SimulatorSource,
    g2_estimate,
    make_objective,
    sample_counts,
)
from .optics import g2_objective, scenario_probabilities
from .optimize import BoConfig, GdConfig, RunRecord, gradient_descent_baseline, run_bo
from .scenarios import ScenarioTemplate

logger = logging.getLogger(__name__)

SWEEP_AXES = {
    "kernel": ("matern52", "rbf", "periodic"),
    "acquisition": ("lcb", "ei", "pi"),
    "design": ("maximin_lhs", "lhs", "sobol", "halton", "random"),
}
BOOTSTRAP_RESAMPLES = 10_000
RANKING_ITERATION = 30


@dataclass
class BenchmarkSpec:
    objective: ObjectiveSpec
    bo: BoConfig
    n_trials: int = 100
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class ConvergenceCurve:
    """Across-trial statistics of best-so-far, per evaluation index."""

    iterations: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    low: np.ndarray
    high: np.ndarray
    n_trials: int
    reference_minimum: float | None = None

    def rows(self) -> list[list[float]]:
        return [
            [int(i), float(m), float(s), float(lo), float(hi)]
            for i, m, s, lo, hi in zip(
                self.iterations, self.mean, self.std, self.low, self.high
            )
        ]


def trial_seeds(master_seed: int, index: int) -> tuple[int, int]:
    """Independent (run, noise) seeds for one trial."""
    state = np.random.SeedSequence([int(master_seed), int(index)]).generate_state(2)
    return int(state[0]), int(state[1])


def _run_single_trial(args) -> RunRecord:
    spec, index = args
    run_seed, noise_seed = trial_seeds(spec.master_seed, index)
    objective_spec = spec.objective
    if objective_spec.noise is not None:
        objective_spec = replace(
            objective_spec, noise=replace(objective_spec.noise, seed=noise_seed)
        )
    bo = replace(spec.bo, seed=run_seed)
    with make_objective(objective_spec) as objective:
        return run_bo(objective, bo)


def run_benchmark(spec: BenchmarkSpec) -> tuple[ConvergenceCurve, list[RunRecord], int]:
    """Run n_trials independent seeded trials and aggregate best-so-far.

    Returns the curve, all records (failed ones included), and the number
    of failed trials excluded from aggregation.
    """
    jobs = [(spec, i) for i in range(spec.n_trials)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(_run_single_trial, jobs, chunksize=4))
    else:
        records = [_run_single_trial(job) for job in jobs]

    curves = [r.best_so_far() for r in records if r.complete]
    n_failed = spec.n_trials - len(curves)
    if n_failed:
        logger.warning("%d of %d trials failed and were excluded", n_failed, spec.n_trials)
    if not curves:
        raise RuntimeError("every benchmark trial failed")
    length = min(len(c) for c in curves)
    stacked = np.stack([c[:length] for c in curves])
    curve = ConvergenceCurve(
        iterations=np.arange(1, length + 1),
        mean=stacked.mean(axis=0),
        std=stacked.std(axis=0),
        low=stacked.min(axis=0),
        high=stacked.max(axis=0),
        n_trials=len(curves),
    )
    return curve, records, n_failed


def run_gd_baseline_trials(
    objective_spec: ObjectiveSpec,
    config: GdConfig,
    n_trials: int = 1,
    master_seed: int = 0,
) -> list[RunRecord]:
    """Seeded repeats of the gradient-descent baseline for comparison."""
    records = []
    for index in range(n_trials):
        run_seed, noise_seed = trial_seeds(master_seed, index)
        spec = objective_spec
        if spec.noise is not None:
            spec = replace(spec, noise=replace(spec.noise, seed=noise_seed))
        with make_objective(spec) as objective:
            records.append(
                gradient_descent_baseline(objective, replace(config, seed=run_seed))
            )
    return records


# ---------------------------------------------------------------------------
# baseline generation and reference minima


def make_grid_axes(domain: np.ndarray, counts: list[int]) -> list[np.ndarray]:
    if len(counts) != len(domain):
        raise ValueError("one grid count per domain axis required")
    if any(c < 2 for c in counts):
        raise ValueError("grid axes need at least 2 levels")
    return [np.linspace(lo, hi, c) for (lo, hi), c in zip(domain, counts)]


def generate_baseline(
    template: ScenarioTemplate,
    counts: list[int],
    noise: CountConfig | None = None,
    seed: int = 0,
) -> GridData:
    """Tabulate the objective on a rectangular grid of knob settings,
    exactly or through Poisson-sampled counts."""
    axes = make_grid_axes(template.domain, counts)
    grid = GridData(axes=axes, values=np.zeros(int(np.prod(counts))))
    nodes = grid.nodes
    rng = np.random.default_rng(seed)
    values = np.empty(len(nodes))
    for i, node in enumerate(nodes):
        if noise is None:
            values[i] = g2_objective(template.params_at(node))
        else:
            p = scenario_probabilities(template.params_at(node))
            drawn = sample_counts(p, noise, rng)
            values[i] = g2_estimate(*drawn, noise)
    return GridData(axes=axes, values=values)


def reference_minimum(
    template: ScenarioTemplate, resolution: int = 101
) -> tuple[float, np.ndarray]:
    """Exhaustive fine-grid scan of the noiseless objective."""
    axes = make_grid_axes(template.domain, [resolution] * template.dim)
    grid = GridData(axes=axes, values=np.zeros(resolution**template.dim))
    nodes = grid.nodes
    best_val, best_x = np.inf, nodes[0]
    for node in nodes:
        val = g2_objective(template.params_at(node))
        if val < best_val:
            best_val, best_x = val, node
    return float(best_val), best_x


# ---------------------------------------------------------------------------
# sweeps


def bootstrap_mean_interval(
    values: np.ndarray,
    n_resamples: int = BOOTSTRAP_RESAMPLES,
    level: float = 0.90,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean."""
    values = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(values), size=(n_resamples, len(values)))
    means = values[idx].mean(axis=1)
    lo, hi = np.quantile(means, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)


def _apply_variant(bo: BoConfig, axis: str, variant: str) -> BoConfig:
    if axis == "kernel":
        return replace(bo, kernel_family=variant)
    if axis == "acquisition":
        return replace(bo, acquisition=replace(bo.acquisition, kind=variant))
    if axis == "design":
        return replace(bo, design=variant)
    raise ValueError(f"unknown sweep axis {axis!r}")


def compare_configs(
    base: BenchmarkSpec,
    axis: str,
    variants: list[str] | None = None,
    ranking_iteration: int = RANKING_ITERATION,
) -> dict:
    """Benchmark every variant of one axis under common master seeding and
    rank the mean best-so-far at the chosen iteration with bootstrap
    intervals."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {sorted(SWEEP_AXES)}")
    variants = list(variants) if variants else list(SWEEP_AXES[axis])
    for variant in variants:
        if variant not in SWEEP_AXES[axis]:
            raise ValueError(f"variant {variant!r} invalid for axis {axis!r}")

    at = min(ranking_iteration, base.bo.n_max) - 1
    report: dict = {
        "axis": axis,
        "n_trials": base.n_trials,
        "master_seed": base.master_seed,
        "ranking_iteration": at + 1,
        "variants": {},
    }
    for variant in variants:
        spec = replace(base, bo=_apply_variant(base.bo, axis, variant))
        curve, records, n_failed = run_benchmark(spec)
        finals = np.array(
            [r.best_so_far()[at] for r in records if r.complete and len(r.entries) > at]
        )
        lo, hi = bootstrap_mean_interval(finals, seed=base.master_seed)
        report["variants"][variant] = {
            "curve": curve.rows(),
            "mean_at_ranking_iteration": float(finals.mean()),
            "bootstrap_90": [lo, hi],
            "n_failed": n_failed,
        }
    ordered = sorted(
        report["variants"], key=lambda v: report["variants"][v]["mean_at_ranking_iteration"]
    )
    report["ranking"] = ordered
    return report


# ---------------------------------------------------------------------------
# deterministic writers


def write_curve_csv(path, curve: ConvergenceCurve) -> None:
    lines = ["iteration,mean,std,min,max"]
    for i, m, s, lo, hi in curve.rows():
        lines.append(f"{i},{m!r},{s!r},{lo!r},{hi!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_records_jsonl(path, records: list[RunRecord], include_timing: bool = False) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(record.to_jsonl(include_timing))
