"""Exact Gaussian-process regression on the unit cube.

Kernels: squared-exponential (rbf), periodic, and Matern with nu fixed at
5/2.  Inputs are expected normalized to [0, 1]^D by the caller; outputs
are standardized internally before fitting and the transform is inverted
on prediction.  Hyperparameters (length scale, output scale, noise
variance, period) are fitted by multistart maximum marginal likelihood in
log space.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .errors import NumericError

logger = logging.getLogger(__name__)

KERNEL_FAMILIES = ("rbf", "periodic", "matern52")

# Diagonal jitter ladder used when a covariance factorization fails.
JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class KernelConfig:
    """Kernel family plus hyperparameters.

    `length_scale` and `period` are in normalized input units;
    `output_scale` multiplies the unit-amplitude kernel; `noise_variance`
    is the observation noise added on the Gram diagonal.
    """

    family: str
    length_scale: float
    output_scale: float = 1.0
    noise_variance: float = 0.0
    period: float | None = None

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.length_scale <= 0:
            raise ValueError("length_scale must be > 0")
        if self.output_scale <= 0:
            raise ValueError("output_scale must be > 0")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be >= 0")
        if self.family == "periodic":
            if self.period is None or self.period <= 0:
                raise ValueError("periodic kernel requires period > 0")


@dataclass
class Dataset:
    """Observed inputs (n x D, inside [0,1]^D) and outputs (length n)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y lengths disagree")
        if self.X.shape[0] < 1:
            raise ValueError("dataset must contain at least one point")
        _check_unit_cube(self.X)
        if not np.all(np.isfinite(self.y)):
            raise ValueError("observations must be finite")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def _check_unit_cube(X: np.ndarray, tol: float = 1e-9) -> None:
    if X.size and (X.min() < -tol or X.max() > 1.0 + tol):
        raise ValueError("inputs must lie in the unit cube [0, 1]^D")


# ---------------------------------------------------------------------------
# kernels


def _pairwise_sq_dists(X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    d2 = (
        np.sum(X**2, axis=1)[:, None]
        + np.sum(Z**2, axis=1)[None, :]
        - 2.0 * X @ Z.T
    )
    return np.maximum(d2, 0.0)


def _base_kernel(config: KernelConfig, dists: np.ndarray) -> np.ndarray:
    """Unit-amplitude kernel as a function of Euclidean distance."""
    ell = config.length_scale
    if config.family == "rbf":
        return np.exp(-0.5 * (dists / ell) ** 2)
    if config.family == "periodic":
        u = np.pi * dists / config.period
        return np.exp(-2.0 * np.sin(u) ** 2 / ell**2)
    a = np.sqrt(5.0) * dists / ell
    return (1.0 + a + a**2 / 3.0) * np.exp(-a)


def gram_matrix(config: KernelConfig, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Cross-covariance matrix output_scale * k(X_i, Z_j), without noise."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if X.shape[1] != Z.shape[1]:
        raise ValueError("point dimensions disagree")
    dists = np.sqrt(_pairwise_sq_dists(X, Z))
    return config.output_scale * _base_kernel(config, dists)


def kernel_eval(config: KernelConfig, x, xp) -> float:
    x = np.asarray(x, dtype=float).ravel()
    xp = np.asarray(xp, dtype=float).ravel()
    if x.shape != xp.shape:
        raise ValueError("point dimensions disagree")
    return float(gram_matrix(config, x[None, :], xp[None, :])[0, 0])


# ---------------------------------------------------------------------------
# factorization and posterior


def _cholesky_with_jitter(cov: np.ndarray) -> tuple[np.ndarray, float]:
    for jitter in JITTER_LADDER:
        try:
            L = cholesky(cov + jitter * np.eye(cov.shape[0]), lower=True)
            return L, jitter
        except np.linalg.LinAlgError:
            continue
    eigs = np.linalg.eigvalsh(cov)
    cond = abs(eigs.max()) / max(abs(eigs.min()), 1e-300)
    raise NumericError("covariance factorization failed after jitter escalation", cond)


@dataclass
class GpPosterior:
    """Immutable fitted posterior with a cached Cholesky factor of
    (K + noise * I) in standardized-output space."""

    dataset: Dataset
    kernel: KernelConfig
    prior_mean: float  # in standardized space
    y_shift: float
    y_scale: float
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    jitter: float = 0.0

    def predict(self, X_star: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return predict(self, X_star)


def _standardization(y: np.ndarray) -> tuple[float, float]:
    if y.size >= 2:
        scale = float(np.std(y))
        if scale > 0.0:
            return float(np.mean(y)), scale
    return 0.0, 1.0


def fit(dataset: Dataset, config: KernelConfig, prior_mean_mode: str = "zero") -> GpPosterior:
    """Fit the posterior: standardize outputs, factorize (K + noise*I)."""
    if prior_mean_mode not in ("zero", "data_mean"):
        raise ValueError("prior_mean_mode must be 'zero' or 'data_mean'")
    y_shift, y_scale = _standardization(dataset.y)
    y_std = (dataset.y - y_shift) / y_scale
    prior_mean = float(np.mean(y_std)) if prior_mean_mode == "data_mean" else 0.0

    cov = gram_matrix(config, dataset.X, dataset.X)
    cov[np.diag_indices_from(cov)] += config.noise_variance
    L, jitter = _cholesky_with_jitter(cov)
    alpha = cho_solve((L, True), y_std - prior_mean)
    return GpPosterior(
        dataset=dataset,
        kernel=config,
        prior_mean=prior_mean,
        y_shift=y_shift,
        y_scale=y_scale,
        chol=L,
        alpha=alpha,
        jitter=jitter,
    )


def predict(posterior: GpPosterior, X_star: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and (latent-function) variances in original units."""
    X_star = np.atleast_2d(np.asarray(X_star, dtype=float))
    _check_unit_cube(X_star)
    k_star = gram_matrix(posterior.kernel, posterior.dataset.X, X_star)
    mean_std = posterior.prior_mean + k_star.T @ posterior.alpha
    v = solve_triangular(posterior.chol, k_star, lower=True)
    var_std = posterior.kernel.output_scale - np.sum(v**2, axis=0)
    low = var_std.min() if var_std.size else 0.0
    if low < -1e-9:
        logger.warning("clamping posterior variance at %.3e to zero", low)
    var_std = np.maximum(var_std, 0.0)
    mean = posterior.y_shift + posterior.y_scale * mean_std
    var = posterior.y_scale**2 * var_std
    return mean, var


def log_marginal_likelihood(
    dataset: Dataset, config: KernelConfig, prior_mean: float = 0.0
) -> float:
    """Log marginal likelihood of the data as given (no standardization),
    including the -(n/2) log(2 pi) constant."""
    cov = gram_matrix(config, dataset.X, dataset.X)
    cov[np.diag_indices_from(cov)] += config.noise_variance
    L, _ = _cholesky_with_jitter(cov)
    resid = dataset.y - prior_mean
    alpha = cho_solve((L, True), resid)
    return float(
        -np.sum(np.log(np.diag(L)))
        - 0.5 * resid @ alpha
        - 0.5 * dataset.n * _LOG_2PI
    )


# ---------------------------------------------------------------------------
# hyperparameter optimization


@dataclass
class HyperBounds:
    """Box bounds for the marginal-likelihood search."""

    length_scale: tuple[float, float] = (0.05, 10.0)
    output_scale: tuple[float, float] = (0.05, 20.0)
    noise_variance: tuple[float, float] = (1e-8, 1.0)
    period: tuple[float, float] = (0.1, 4.0)

    def for_family(self, family: str) -> list[tuple[float, float]]:
        out = [self.length_scale, self.output_scale, self.noise_variance]
        if family == "periodic":
            out.append(self.period)
        return out


def _config_from_params(family: str, params: np.ndarray) -> KernelConfig:
    period = float(params[3]) if family == "periodic" else None
    return KernelConfig(
        family=family,
        length_scale=float(params[0]),
        output_scale=float(params[1]),
        noise_variance=float(params[2]),
        period=period,
    )


def _kernel_and_length_grad(
    family: str, dists: np.ndarray, ell: float, period: float | None
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Unit-amplitude kernel, its d/d(log ell), and d/d(log period)."""
    if family == "rbf":
        k0 = np.exp(-0.5 * (dists / ell) ** 2)
        return k0, k0 * (dists / ell) ** 2, None
    if family == "periodic":
        u = np.pi * dists / period
        s2 = np.sin(u) ** 2
        k0 = np.exp(-2.0 * s2 / ell**2)
        d_ell = k0 * 4.0 * s2 / ell**2
        d_per = k0 * (2.0 / ell**2) * u * np.sin(2.0 * u)
        return k0, d_ell, d_per
    a = np.sqrt(5.0) * dists / ell
    e = np.exp(-a)
    k0 = (1.0 + a + a**2 / 3.0) * e
    return k0, (a**2 / 3.0) * (1.0 + a) * e, None


def _neg_lml_and_grad(
    log_params: np.ndarray, family: str, dists: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray]:
    """Negative log marginal likelihood and gradient w.r.t. log parameters."""
    params = np.exp(log_params)
    ell, out_scale, noise = params[0], params[1], params[2]
    period = params[3] if family == "periodic" else None
    n = y.size

    k0, dk_ell, dk_per = _kernel_and_length_grad(family, dists, ell, period)
    cov = out_scale * k0
    cov[np.diag_indices_from(cov)] += noise
    try:
        L = cholesky(cov, lower=True)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros_like(log_params)
    alpha = cho_solve((L, True), y)
    lml = -np.sum(np.log(np.diag(L))) - 0.5 * y @ alpha - 0.5 * n * _LOG_2PI

    # d lml / d theta_j = 0.5 tr((alpha alpha^T - C^-1) dC/dtheta_j)
    inv_cov = cho_solve((L, True), np.eye(n))
    outer = np.outer(alpha, alpha) - inv_cov
    grads = [
        0.5 * np.sum(outer * (out_scale * dk_ell)),
        0.5 * np.sum(outer * (out_scale * k0)),
        0.5 * np.trace(outer) * noise,
    ]
    if family == "periodic":
        grads.append(0.5 * np.sum(outer * (out_scale * dk_per)))
    return -lml, -np.asarray(grads)


def optimize_hyperparameters(
    dataset: Dataset,
    family: str,
    bounds: HyperBounds | None = None,
    restarts: int = 8,
    rng: np.random.Generator | None = None,
    extra_starts: list[KernelConfig] | None = None,
) -> KernelConfig:
    """Multistart log-space search for the maximum-marginal-likelihood
    hyperparameters on internally standardized outputs.

    The returned config scores at least as high as every start point.
    """
    if family not in KERNEL_FAMILIES:
        raise ValueError(f"unknown kernel family {family!r}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = rng or np.random.default_rng()
    bounds = bounds or HyperBounds()
    box = np.log(np.asarray(bounds.for_family(family), dtype=float))
    if np.any(box[:, 0] >= box[:, 1]):
        raise ValueError("bounds must have lower < upper")

    y_shift, y_scale = _standardization(dataset.y)
    y_std = (dataset.y - y_shift) / y_scale
    dists = np.sqrt(_pairwise_sq_dists(dataset.X, dataset.X))

    random_starts = list(
        rng.uniform(box[:, 0], box[:, 1], size=(restarts, box.shape[0]))
    )
    warm_starts = []
    for cfg in extra_starts or []:
        vals = [cfg.length_scale, cfg.output_scale, cfg.noise_variance]
        if family == "periodic":
            vals.append(cfg.period if cfg.period else 1.0)
        warm_starts.append(np.clip(np.log(np.asarray(vals)), box[:, 0], box[:, 1]))

    start_vals = [
        _neg_lml_and_grad(s, family, dists, y_std)[0]
        for s in random_starts + warm_starts
    ]
    best_val = min(start_vals)
    best_params = (random_starts + warm_starts)[int(np.argmin(start_vals))]

    # Screen the random starts by likelihood and run local searches only
    # from the most promising few; warm starts always get a search.
    order = np.argsort(start_vals[: len(random_starts)])
    searched = [random_starts[i] for i in order[:3]] + warm_starts
    for start in searched:
        result = minimize(
            _neg_lml_and_grad,
            start,
            args=(family, dists, y_std),
            method="L-BFGS-B",
            jac=True,
            bounds=box,
            options={"maxiter": 40, "ftol": 1e-7, "gtol": 1e-3},
        )
        if np.isfinite(result.fun) and result.fun < best_val:
            best_params, best_val = np.clip(result.x, box[:, 0], box[:, 1]), result.fun
    if best_params is None or best_val >= 1e25:
        raise NumericError("no restart produced a finite marginal likelihood")
    return _config_from_params(family, np.exp(best_params))
