"""Shot-noisy counting, g2 estimation, and objective handles.

Count records are independent Poisson draws of the singles and
coincidences over the effective number of detection windows.  Objective
handles wrap three sources behind one callable: the built-in simulator
(exact or Poisson-sampled), a tabulated CSV grid, and an external command
speaking a line-oriented JSON protocol on stdio.
"""

import json
import shlex
import subprocess
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientCountsError, ObjectiveError
from .optics import ClickProbabilities, g2_objective, scenario_probabilities
from .scenarios import ScenarioTemplate

DEFAULT_COINCIDENCE_WINDOW = 2e-9


@dataclass
class CountConfig:
    """Integration time, coincidence window, and effective trial rate."""

    integration_time: float
    coincidence_window: float = DEFAULT_COINCIDENCE_WINDOW
    window_rate: float | None = None  # defaults to 1 / coincidence_window
    seed: int = 0

    def __post_init__(self):
        if self.integration_time <= 0:
            raise ValueError("integration_time must be > 0")
        if self.coincidence_window <= 0:
            raise ValueError("coincidence_window must be > 0")
        if self.window_rate is not None and self.window_rate <= 0:
            raise ValueError("window_rate must be > 0")

    @property
    def effective_rate(self) -> float:
        return self.window_rate if self.window_rate else 1.0 / self.coincidence_window

    def windows(self, time_scale: float = 1.0) -> float:
        return self.effective_rate * self.integration_time * time_scale


def sample_counts(
    p: ClickProbabilities,
    config: CountConfig,
    rng: np.random.Generator,
    time_scale: float = 1.0,
) -> tuple[int, int, int]:
    """Poisson draws (S1, S2, C12) with means p * window_rate * T."""
    n_windows = config.windows(time_scale)
    s1 = int(rng.poisson(p.p_d1 * n_windows))
    s2 = int(rng.poisson(p.p_d2 * n_windows))
    c12 = int(rng.poisson(p.p_coinc * n_windows))
    return s1, s2, c12


def g2_estimate(s1: int, s2: int, c12: int, config: CountConfig, time_scale: float = 1.0) -> float:
    """Normalized correlation C12 * T / (S1 * S2 * dtau) from counts."""
    if s1 <= 0 or s2 <= 0:
        raise InsufficientCountsError("zero singles; cannot normalize the estimate")
    t = config.integration_time * time_scale
    return c12 * t / (s1 * s2 * config.coincidence_window)


# ---------------------------------------------------------------------------
# tabulated grids


@dataclass
class GridData:
    """Rectangular grid of objective values: per-axis levels plus values
    indexed in C order over the axis product."""

    axes: list[np.ndarray]
    values: np.ndarray

    def __post_init__(self):
        size = int(np.prod([len(a) for a in self.axes]))
        if self.values.size != size:
            raise ObjectiveError("grid values do not fill the full axis product")

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def domain(self) -> np.ndarray:
        return np.array([[a[0], a[-1]] for a in self.axes])

    def lookup_nearest(self, x) -> float:
        x = np.asarray(x, dtype=float).ravel()
        idx = 0
        for axis, xi in zip(self.axes, x):
            idx = idx * len(axis) + int(np.argmin(np.abs(axis - xi)))
        return float(self.values[idx])


def load_grid(path) -> GridData:
    """Parse a CSV grid with header x1,...,xD,y and validate that every
    axis combination is present exactly once."""
    try:
        raw = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    except (OSError, ValueError) as exc:
        raise ObjectiveError(f"cannot parse grid file {path}: {exc}") from exc
    names = list(raw.dtype.names or [])
    if len(names) < 2 or names[-1] != "y":
        raise ObjectiveError("grid file must have columns x1,...,xD,y")
    rows = np.stack([np.atleast_1d(raw[name]) for name in names], axis=1)
    if not np.all(np.isfinite(rows)):
        raise ObjectiveError("grid file contains non-finite entries")
    coords, values = rows[:, :-1], rows[:, -1]
    axes = [np.unique(coords[:, d]) for d in range(coords.shape[1])]
    size = int(np.prod([len(a) for a in axes]))
    if size != len(values):
        raise ObjectiveError("grid file is not a complete rectangular grid")
    grid_values = np.full(size, np.nan)
    for row, value in zip(coords, values):
        idx = 0
        for axis, xi in zip(axes, row):
            j = int(np.searchsorted(axis, xi))
            idx = idx * len(axis) + j
        grid_values[idx] = value
    if np.any(np.isnan(grid_values)):
        raise ObjectiveError("grid file has duplicate or missing nodes")
    return GridData(axes=axes, values=grid_values)


def write_grid_csv(path, grid: GridData) -> None:
    dim = grid.dim
    header = ",".join([f"x{d + 1}" for d in range(dim)] + ["y"])
    lines = [header]
    for node, value in zip(grid.nodes, grid.values):
        lines.append(",".join([repr(float(v)) for v in node] + [repr(float(value))]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# objective sources


@dataclass
class SimulatorSource:
    template: ScenarioTemplate


@dataclass
class GridSource:
    path: str


@dataclass
class ExternalSource:
    command: str | list[str]


@dataclass
class ObjectiveSpec:
    """What to evaluate (simulator, grid, external command), whether to add
    Poisson noise (simulator only), and an optional domain override."""

    source: SimulatorSource | GridSource | ExternalSource
    noise: CountConfig | None = None
    domain: np.ndarray | None = None

    def __post_init__(self):
        if self.noise is not None and not isinstance(self.source, SimulatorSource):
            raise ValueError("Poisson noise applies to the simulator source only")


class Objective:
    """Callable objective handle with its physical domain and, for grid
    sources, the node set usable as the optimizer candidate set."""

    def __init__(self, fn, domain: np.ndarray, nodes: np.ndarray | None = None, closer=None):
        self._fn = fn
        self.domain = np.asarray(domain, dtype=float)
        self.nodes = nodes
        self._closer = closer

    def __call__(self, x) -> float:
        y = self._fn(np.asarray(x, dtype=float).ravel())
        if not np.isfinite(y):
            raise ObjectiveError(f"objective returned a non-finite value {y!r}")
        return float(y)

    def close(self) -> None:
        if self._closer is not None:
            self._closer()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _simulator_objective(spec: ObjectiveSpec) -> Objective:
    template = spec.source.template
    noise = spec.noise
    if noise is None:
        fn = lambda x: g2_objective(template.params_at(x))  # noqa: E731
    else:
        rng = np.random.default_rng(noise.seed)

        def fn(x, _noise=noise):
            p = scenario_probabilities(template.params_at(x))
            counts = sample_counts(p, _noise, rng)
            try:
                return g2_estimate(*counts, _noise)
            except InsufficientCountsError:
                # one retry at doubled integration time
                counts = sample_counts(p, _noise, rng, time_scale=2.0)
                try:
                    return g2_estimate(*counts, _noise, time_scale=2.0)
                except InsufficientCountsError as exc:
                    raise ObjectiveError(
                        f"no singles recorded at x={list(x)} even at doubled integration time"
                    ) from exc

    domain = spec.domain if spec.domain is not None else template.domain
    return Objective(fn, domain)


def _grid_objective(spec: ObjectiveSpec) -> Objective:
    grid = load_grid(spec.source.path)
    domain = spec.domain if spec.domain is not None else grid.domain
    return Objective(grid.lookup_nearest, domain, nodes=grid.nodes)


class _ExternalProcess:
    def __init__(self, command):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            self.proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ObjectiveError(f"cannot launch external objective: {exc}") from exc

    def __call__(self, x) -> float:
        if self.proc.poll() is not None:
            raise ObjectiveError("external objective process has exited")
        try:
            self.proc.stdin.write(json.dumps({"x": [float(v) for v in x]}) + "\n")
            self.proc.stdin.flush()
            line = self.proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise ObjectiveError(f"external objective pipe failed: {exc}") from exc
        if not line:
            raise ObjectiveError("external objective closed its output stream")
        try:
            reply = json.loads(line)
            y = float(reply["y"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ObjectiveError(f"protocol violation in reply {line!r}") from exc
        return y

    def close(self):
        if self.proc.poll() is None:
            self.proc.stdin.close()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()


def make_objective(spec: ObjectiveSpec) -> Objective:
    """Build the objective handle for a spec; external sources own a child
    process and should be closed after use."""
    if isinstance(spec.source, SimulatorSource):
        return _simulator_objective(spec)
    if isinstance(spec.source, GridSource):
        return _grid_objective(spec)
    if isinstance(spec.source, ExternalSource):
        if spec.domain is None:
            raise ValueError("external objectives require an explicit domain")
        proc = _ExternalProcess(spec.source.command)
        return Objective(proc, spec.domain, closer=proc.close)
    raise ValueError(f"unknown objective source {type(spec.source).__name__}")
