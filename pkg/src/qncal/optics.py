"""Gaussian-state simulator for Hong-Ou-Mandel interference.

States are described by a quadrature displacement vector and covariance
matrix in the ordering (x1, p1, x2, p2, ...), with the vacuum normalized
to the identity covariance.  Linear-optics elements act as symplectic
matrices S on the quadrature vector, so covariances map as S @ cov @ S.T.

The interference pipeline models the experiment with virtual beam
splitters: coupling losses (eta_u, eta_d), mode overlap (zeta, the
indistinguishable fraction), a swept relative phase that is averaged out,
and threshold detectors whose click probabilities follow from vacuum
projections of the final covariance matrix.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ObjectiveError

DEFAULT_PHASE_GRID = 32
DEFAULT_FILTER_SIGMA_GHZ = 5.1


# ---------------------------------------------------------------------------
# states


@dataclass
class GaussianState:
    """Zero-mean-capable Gaussian state: displacement vector and covariance."""

    cov: np.ndarray
    mean: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.cov.shape[0] // 2

    def validate(self, tol: float = 1e-9) -> None:
        """Check symmetry and the uncertainty relation cov + i*Omega >= 0."""
        cov = self.cov
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise ValueError(f"covariance must be square 2n x 2n, got {cov.shape}")
        if self.mean.shape != (cov.shape[0],):
            raise ValueError("displacement length must match covariance size")
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise ValueError("covariance must be symmetric")
        omega = symplectic_form(self.n_modes)
        eigs = np.linalg.eigvalsh(cov + 1j * omega)
        if eigs.min() < -tol:
            raise ValueError(
                f"covariance violates the uncertainty relation (min eig {eigs.min():.3e})"
            )


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form for the (x1, p1, ...) ordering."""
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        omega[2 * k, 2 * k + 1] = 1.0
        omega[2 * k + 1, 2 * k] = -1.0
    return omega


def vacuum_state(n_modes: int) -> GaussianState:
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    return GaussianState(np.eye(2 * n_modes), np.zeros(2 * n_modes))


def squeezed_state(r: float) -> GaussianState:
    """Single-mode squeezed vacuum, cov = diag(e^-2r, e^2r)."""
    if r < 0:
        raise ValueError("squeezing parameter must be >= 0")
    cov = np.diag([np.exp(-2.0 * r), np.exp(2.0 * r)])
    return GaussianState(cov, np.zeros(2))


def tmsv_state(r: float) -> GaussianState:
    """Two-mode squeezed vacuum with cosh(2r) diagonals and +/- sinh(2r)
    cross-mode blocks."""
    if r < 0:
        raise ValueError("squeezing parameter must be >= 0")
    c = np.cosh(r) ** 2 + np.sinh(r) ** 2
    s = 2.0 * np.cosh(r) * np.sinh(r)
    cov = np.array(
        [
            [c, 0.0, s, 0.0],
            [0.0, c, 0.0, -s],
            [s, 0.0, c, 0.0],
            [0.0, -s, 0.0, c],
        ]
    )
    return GaussianState(cov, np.zeros(4))


def thermal_state(mean_photons: float) -> GaussianState:
    """Single-mode thermal state, cov = (1 + 2*mu) * identity."""
    if mean_photons < 0:
        raise ValueError("mean photon number must be >= 0")
    cov = (1.0 + 2.0 * mean_photons) * np.eye(2)
    return GaussianState(cov, np.zeros(2))


def make_state(kind: str, param: float | int = 0.0) -> GaussianState:
    """Factory dispatch: 'vacuum' (param = n_modes), 'squeezed' (r),
    'tmsv' (r), 'thermal' (mean photons)."""
    if kind == "vacuum":
        return vacuum_state(int(param))
    if kind == "squeezed":
        return squeezed_state(float(param))
    if kind == "tmsv":
        return tmsv_state(float(param))
    if kind == "thermal":
        return thermal_state(float(param))
    raise ValueError(f"unknown state kind {kind!r}")


def join_states(*states: GaussianState) -> GaussianState:
    """Tensor product: block-diagonal covariance, concatenated displacement."""
    dim = sum(2 * s.n_modes for s in states)
    cov = np.zeros((dim, dim))
    mean = np.zeros(dim)
    at = 0
    for s in states:
        d = 2 * s.n_modes
        cov[at : at + d, at : at + d] = s.cov
        mean[at : at + d] = s.mean
        at += d
    return GaussianState(cov, mean)


# ---------------------------------------------------------------------------
# linear-optics elements


def _check_mode(n_modes: int, i: int) -> None:
    if not 0 <= i < n_modes:
        raise ValueError(f"mode index {i} out of range for {n_modes} modes")


def beam_splitter_matrix(n_modes: int, i: int, j: int, transmittance: float) -> np.ndarray:
    """Symplectic matrix mixing modes i and j:
    new_i = sqrt(t)*old_i + sqrt(1-t)*old_j, new_j = -sqrt(1-t)*old_i + sqrt(t)*old_j."""
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError("transmittance must lie in [0, 1]")
    _check_mode(n_modes, i)
    _check_mode(n_modes, j)
    if i == j:
        raise ValueError("beam splitter needs two distinct modes")
    t = np.sqrt(transmittance)
    rfl = np.sqrt(1.0 - transmittance)
    s = np.eye(2 * n_modes)
    for q in (0, 1):  # x and p quadratures transform identically
        a, b = 2 * i + q, 2 * j + q
        s[a, a] = t
        s[a, b] = rfl
        s[b, a] = -rfl
        s[b, b] = t
    return s


def rotation_matrix(n_modes: int, i: int, phase: float) -> np.ndarray:
    """Symplectic matrix rotating the (x, p) plane of mode i by `phase`."""
    _check_mode(n_modes, i)
    s = np.eye(2 * n_modes)
    c, sn = np.cos(phase), np.sin(phase)
    a = 2 * i
    s[a, a] = c
    s[a, a + 1] = sn
    s[a + 1, a] = -sn
    s[a + 1, a + 1] = c
    return s


def apply_symplectic(state: GaussianState, s: np.ndarray) -> GaussianState:
    return GaussianState(s @ state.cov @ s.T, s @ state.mean)


def beam_splitter(state: GaussianState, i: int, j: int, transmittance: float) -> GaussianState:
    return apply_symplectic(state, beam_splitter_matrix(state.n_modes, i, j, transmittance))


def phase_shift(state: GaussianState, i: int, phase: float) -> GaussianState:
    return apply_symplectic(state, rotation_matrix(state.n_modes, i, phase))


# ---------------------------------------------------------------------------
# threshold detection


def _quad_indices(modes: tuple[int, ...] | list[int]) -> np.ndarray:
    idx = []
    for m in modes:
        idx += [2 * m, 2 * m + 1]
    return np.asarray(idx)


def no_click_probability(state: GaussianState, modes) -> float:
    """Vacuum-projection probability 2^k / sqrt(det(cov_sub + I)) for the k
    modes seen by a threshold detector.  Requires zero displacement."""
    modes = tuple(modes)
    if not modes:
        raise ValueError("mode subset must be non-empty")
    for m in modes:
        _check_mode(state.n_modes, m)
    if np.any(state.mean != 0.0):
        raise ValueError("no_click_probability supports only zero-displacement states")
    idx = _quad_indices(modes)
    sub = state.cov[np.ix_(idx, idx)]
    k = len(modes)
    return float(2.0**k / np.sqrt(np.linalg.det(sub + np.eye(2 * k))))


def _no_click_batch(covs: np.ndarray, modes) -> np.ndarray:
    """Vacuum projection over a batch of covariance matrices (B, 2n, 2n)."""
    idx = _quad_indices(tuple(modes))
    sub = covs[:, idx[:, None], idx[None, :]]
    k = len(tuple(modes))
    return 2.0**k / np.sqrt(np.linalg.det(sub + np.eye(2 * k)))


# ---------------------------------------------------------------------------
# interference pipeline


@dataclass
class ClickProbabilities:
    p_d1: float
    p_d2: float
    p_coinc: float


@dataclass
class ScenarioParams:
    """Physical settings of one interference evaluation.

    `overlap` is the indistinguishable mode fraction zeta in [0, 1]
    (a stage offset x maps to zeta = exp(-x^2) upstream).  `detuning`
    switches on the spectral-blend objective for the 3-knob setting.
    """

    input_kind: str = "sv"  # sv | tmsv | thermal
    squeezing: float = 0.0
    mean_photons: float = 0.0
    mean_photons_2: float = 0.0
    eta_u: float = 1.0
    eta_d: float = 1.0
    overlap: float = 1.0
    phase_grid: int = DEFAULT_PHASE_GRID
    detuning_ghz: float | None = None
    filter_sigma_ghz: float = DEFAULT_FILTER_SIGMA_GHZ

    def __post_init__(self):
        if self.input_kind not in ("sv", "tmsv", "thermal"):
            raise ValueError(f"unknown input kind {self.input_kind!r}")
        if self.squeezing < 0 or self.mean_photons < 0 or self.mean_photons_2 < 0:
            raise ValueError("squeezing and mean photon numbers must be >= 0")
        for name in ("eta_u", "eta_d", "overlap"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.phase_grid < 1:
            raise ValueError("phase_grid must be >= 1")
        if self.detuning_ghz is not None and self.detuning_ghz < 0:
            raise ValueError("detuning must be >= 0")
        if self.filter_sigma_ghz <= 0:
            raise ValueError("filter_sigma_ghz must be > 0")


# Fixed 8-mode graph: 0 upper signal, 1 lower signal, 2/3 loss environments,
# 4/5 reflected (distinguishable) parts, 6/7 final mixing vacua.
_N_MODES = 8
_D1_MODES = (0, 4, 5)
_D2_MODES = (1, 6, 7)


def _input_state(params: ScenarioParams) -> GaussianState:
    rest = vacuum_state(_N_MODES - 2)
    if params.input_kind == "sv":
        return join_states(squeezed_state(params.squeezing), vacuum_state(1), rest)
    if params.input_kind == "tmsv":
        return join_states(tmsv_state(params.squeezing), rest)
    return join_states(
        thermal_state(params.mean_photons),
        thermal_state(params.mean_photons_2),
        rest,
    )


def hom_probabilities(params: ScenarioParams) -> ClickProbabilities:
    """Exact click probabilities of the two threshold detectors, averaged
    over the swept relative phase.

    Stages: probabilistic pair splitting (sv only), loss splitters against
    the environment, phase shift in the lower arm, overlap splitters that
    separate the interfering from the distinguishable parts, a balanced
    splitter for the interfering parts and balanced vacuum mixers for the
    distinguishable ones.  Detector 1 sees one output of each of the three
    final splitters, detector 2 the other three.
    """
    state = _input_state(params)

    # Non-degenerate (tmsv) photons occupy distinct spectral modes and can
    # never overlap on the interference splitter, which is equivalent to
    # forcing zero overlap; the requested zeta is ignored for that kind.
    overlap = 0.0 if params.input_kind == "tmsv" else params.overlap

    pre = np.eye(2 * _N_MODES)
    if params.input_kind == "sv":
        pre = beam_splitter_matrix(_N_MODES, 0, 1, 0.5) @ pre
    pre = beam_splitter_matrix(_N_MODES, 0, 2, params.eta_u) @ pre
    pre = beam_splitter_matrix(_N_MODES, 1, 3, params.eta_d) @ pre

    post = beam_splitter_matrix(_N_MODES, 0, 4, overlap)
    post = beam_splitter_matrix(_N_MODES, 1, 5, overlap) @ post
    post = beam_splitter_matrix(_N_MODES, 0, 1, 0.5) @ post
    post = beam_splitter_matrix(_N_MODES, 4, 6, 0.5) @ post
    post = beam_splitter_matrix(_N_MODES, 5, 7, 0.5) @ post

    cov_pre = pre @ state.cov @ pre.T
    phases = 2.0 * np.pi * np.arange(params.phase_grid) / params.phase_grid
    rots = np.broadcast_to(np.eye(2 * _N_MODES), (params.phase_grid, 2 * _N_MODES, 2 * _N_MODES)).copy()
    c, s = np.cos(phases), np.sin(phases)
    rots[:, 2, 2] = c
    rots[:, 2, 3] = s
    rots[:, 3, 2] = -s
    rots[:, 3, 3] = c

    total = post @ rots
    covs = total @ cov_pre @ np.transpose(total, (0, 2, 1))

    p0_d1 = _no_click_batch(covs, _D1_MODES)
    p0_d2 = _no_click_batch(covs, _D2_MODES)
    p0_both = _no_click_batch(covs, _D1_MODES + _D2_MODES)

    def _clean(p: float) -> float:
        # roundoff can leave O(1e-16) negatives for vacuum-dominated cases
        return 0.0 if -1e-12 < p < 0.0 else p

    p_d1 = _clean(float(np.mean(1.0 - p0_d1)))
    p_d2 = _clean(float(np.mean(1.0 - p0_d2)))
    p_coinc = _clean(float(np.mean(1.0 - p0_d1 - p0_d2 + p0_both)))
    return ClickProbabilities(p_d1, p_d2, p_coinc)


def _blend_weight(detuning_ghz: float, filter_sigma_ghz: float) -> float:
    return float(np.exp(-(detuning_ghz**2) / (2.0 * filter_sigma_ghz**2)))


def _nondegenerate_squeezing(r: float) -> float:
    # The detuned filter pair carries the same pair flux as the single
    # degenerate mode, whose pair-emission probability is tanh^2(r)/2.
    return float(np.arctanh(np.tanh(r) / np.sqrt(2.0)))


def scenario_probabilities(params: ScenarioParams) -> ClickProbabilities:
    """Click probabilities including the spectral-detuning blend.

    With a detuning set, the degenerate (squeezed-vacuum) and fully
    non-degenerate (two-mode squeezed, zero overlap) pipelines are mixed
    probability-by-probability with a Gaussian weight in the detuning.
    """
    if params.detuning_ghz is None:
        return hom_probabilities(params)
    if params.input_kind != "sv":
        raise ValueError("the detuning blend is defined for the sv input kind")
    w = _blend_weight(params.detuning_ghz, params.filter_sigma_ghz)
    deg = hom_probabilities(replace(params, detuning_ghz=None))
    nondeg = hom_probabilities(
        replace(
            params,
            input_kind="tmsv",
            squeezing=_nondegenerate_squeezing(params.squeezing),
            overlap=0.0,
            detuning_ghz=None,
        )
    )
    return ClickProbabilities(
        w * deg.p_d1 + (1.0 - w) * nondeg.p_d1,
        w * deg.p_d2 + (1.0 - w) * nondeg.p_d2,
        w * deg.p_coinc + (1.0 - w) * nondeg.p_coinc,
    )


def g2_objective(params: ScenarioParams) -> float:
    """Normalized zero-delay correlation p_coinc / (p_d1 * p_d2)."""
    p = scenario_probabilities(params)
    if p.p_d1 <= 0.0 or p.p_d2 <= 0.0:
        raise ObjectiveError(
            "zero singles probability: the objective is undefined at this setting"
        )
    return p.p_coinc / (p.p_d1 * p.p_d2)
