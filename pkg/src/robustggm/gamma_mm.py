"""Gamma-divergence estimation of sparse Gaussian graphical models.

The penalized negative gamma-likelihood is minimized by a
majorize-minimize loop: at each step the current iterate induces
per-observation weights proportional to f(x_i)^gamma, the surrogate is
the weighted negative log-likelihood plus an iterate-only constant, and
minimizing it reduces to a weighted mean update followed by a rescaled
graphical lasso.  The surrogate touches the objective at the current
iterate, so the penalized objective is non-increasing along the run.

The off-diagonal support empties exactly at the penalty level
``lambda_max``; the regularization path is fit on a geometric grid
downward from there with warm starts.

One fit is single-threaded (warm-start chains are sequential), but all
functions here are pure given their inputs, so independent fits across
datasets, gamma values, or replicates can run concurrently with the
data shared read-only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import glasso
from .errors import (
    DegenerateSample,
    DegenerateScatter,
    DimensionMismatch,
    EmptyDataset,
    MaxSweepsExceeded,
    NotPositiveDefinite,
)
from .objective import (
    ModelParams,
    RobustConfig,
    log_density,
    penalized_gamma_objective,
)

MAD_CONSTANT = 1.4826  # normal-consistent scaling of the median absolute deviation


@dataclass(frozen=True)
class UnivariateFit:
    """Robust location/variance estimate for one variable."""

    mu_j: float
    sigma_jj: float


@dataclass(frozen=True)
class FitResult:
    """One converged (or iteration-capped) estimate at a fixed (gamma, lam).

    ``weights`` are the gamma-divergence weights evaluated at the
    returned parameters; they are nonnegative and sum to one.
    ``objective_trace`` holds the penalized objective from the initial
    point onward and is non-increasing up to roundoff.
    """

    theta: ModelParams
    weights: np.ndarray
    objective_trace: tuple
    converged: bool
    mm_iterations: int
    config: RobustConfig
    iterates: tuple | None = None


@dataclass(frozen=True)
class SolutionPath:
    """Warm-started fits over a decreasing geometric penalty grid.

    ``statuses[k]`` is "ok", "max_iter", or "error: ..." per grid point;
    failed points hold None in ``fits``.
    """

    lambdas: np.ndarray
    fits: tuple
    gamma: float
    statuses: tuple


def compute_weights(X: np.ndarray, theta: ModelParams, gamma: float) -> np.ndarray:
    """Per-observation weights w_i = f(x_i)^gamma / sum_j f(x_j)^gamma,
    computed entirely in the log domain."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise EmptyDataset("need at least one observation")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if gamma == 0.0:
        return np.full(X.shape[0], 1.0 / X.shape[0])
    logits = gamma * log_density(X, theta)
    w = np.exp(logits - logsumexp(logits))
    return w / w.sum()


def weighted_scatter(X: np.ndarray, mu: np.ndarray, w: np.ndarray) -> np.ndarray:
    """sum_i w_i (x_i - mu)(x_i - mu)^T, exactly symmetric."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mu = np.asarray(mu, dtype=float)
    w = np.asarray(w, dtype=float)
    if mu.shape[0] != X.shape[1] or w.shape[0] != X.shape[0]:
        raise DimensionMismatch(
            f"X {X.shape}, mu {mu.shape}, w {w.shape} do not agree"
        )
    d = X - mu
    s = (d * w[:, None]).T @ d
    return (s + s.T) / 2.0


def _check_scatter(s: np.ndarray) -> np.ndarray:
    d = np.diag(s)
    top = d.max() if d.size else 0.0
    if top <= 0.0 or np.any(d < 1e-15 * top):
        j = int(np.argmin(d))
        raise DegenerateScatter(
            f"weighted scatter has a vanishing diagonal entry (index {j}); "
            "weights collapsed onto too few observations"
        )
    return s


def robust_init(X: np.ndarray) -> ModelParams:
    """Coordinatewise median location and diagonal precision from the
    adjusted MAD (sample-deviation fallback for zero-MAD columns)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mu = np.median(X, axis=0)
    scale = MAD_CONSTANT * np.median(np.abs(X - mu), axis=0)
    fallback = X.std(axis=0)
    scale = np.where(scale > 0, scale, fallback)
    if np.any(scale <= 0):
        j = int(np.argmin(scale))
        raise DegenerateSample(f"column {j} is constant")
    return ModelParams(mu=mu, omega=np.diag(1.0 / scale**2))


def mm_step(
    X: np.ndarray,
    theta_t: ModelParams,
    cfg: RobustConfig,
    solver_tol: float = 1e-6,
    solver_max_sweeps: int = 500,
) -> tuple[ModelParams, np.ndarray]:
    """One majorize-minimize step from ``theta_t``.

    Weights are computed at theta_t; the location update is their
    weighted mean; the precision update solves the graphical lasso on
    the weighted scatter with log-determinant coefficient 1/(1+gamma),
    warm-started at the current precision.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    w = compute_weights(X, theta_t, cfg.gamma)
    mu_next = w @ X
    s_w = _check_scatter(weighted_scatter(X, mu_next, w))
    problem = glasso.GlassoProblem(
        s=s_w, lam=cfg.lam, logdet_scale=1.0 / (1.0 + cfg.gamma)
    )
    sol = glasso.solve(
        problem, init=theta_t.omega, tol=solver_tol, max_sweeps=solver_max_sweeps
    )
    return ModelParams(mu=mu_next, omega=sol.omega), w


def fit(
    X: np.ndarray,
    cfg: RobustConfig,
    init: ModelParams | None = None,
    tol: float = 1e-7,
    max_iter: int = 200,
    keep_iterates: bool = False,
) -> FitResult:
    """Minimize the penalized negative gamma-likelihood by MM iteration.

    Stops when the relative change of the penalized objective falls
    below ``tol`` (the objective is the monotone quantity; parameter
    stagnation is not required).  Exceeding ``max_iter`` is a soft
    failure: the result is returned with ``converged=False``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise EmptyDataset("need at least two observations")
    theta = init if init is not None else robust_init(X)
    obj = penalized_gamma_objective(X, theta, cfg)
    trace = [obj]
    iterates = [theta] if keep_iterates else None
    converged = False
    iterations = 0
    for _ in range(max_iter):
        theta, _ = mm_step(X, theta, cfg)
        iterations += 1
        new_obj = penalized_gamma_objective(X, theta, cfg)
        trace.append(new_obj)
        if keep_iterates:
            iterates.append(theta)
        if abs(new_obj - obj) <= tol * max(1.0, abs(obj)):
            obj = new_obj
            converged = True
            break
        obj = new_obj
    return FitResult(
        theta=theta,
        weights=compute_weights(X, theta, cfg.gamma),
        objective_trace=tuple(trace),
        converged=converged,
        mm_iterations=iterations,
        config=cfg,
        iterates=tuple(iterates) if keep_iterates else None,
    )


def univariate_gamma_fit(
    x: np.ndarray, gamma: float, tol: float = 1e-12, max_iter: int = 500
) -> UnivariateFit:
    """Robust univariate normal fit under the gamma-divergence.

    Iterates the weighted fixed point
    ``mu <- sum w_i x_i``, ``sigma <- (1+gamma) sum w_i (x_i - mu)^2``
    with weights proportional to the gamma-th density power, starting
    from the median and the adjusted MAD.  The variance is floored at a
    tiny multiple of the squared data range so that configurations whose
    objective is unbounded below (nearly all observations identical)
    terminate at the collapse point instead of dividing by zero.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] < 2:
        raise EmptyDataset("need at least two observations")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    span = float(x.max() - x.min())
    if span == 0.0:
        raise DegenerateSample("all values identical")
    mu = float(np.median(x))
    mad = MAD_CONSTANT * float(np.median(np.abs(x - mu)))
    sigma = mad**2 if mad > 0 else float(x.var())
    floor = 1e-15 * span**2
    n = x.shape[0]
    for _ in range(max_iter):
        if gamma == 0.0:
            w = np.full(n, 1.0 / n)
        else:
            logits = -0.5 * gamma * ((x - mu) ** 2 / sigma + np.log(sigma))
            w = np.exp(logits - logsumexp(logits))
            w /= w.sum()
        mu_new = float(w @ x)
        sigma_new = max((1.0 + gamma) * float(w @ (x - mu_new) ** 2), floor)
        done = max(abs(mu_new - mu), abs(sigma_new - sigma)) <= tol * max(
            1.0, abs(mu), sigma
        )
        mu, sigma = mu_new, sigma_new
        if done:
            break
    return UnivariateFit(mu_j=mu, sigma_jj=sigma)


def diagonal_start(
    X: np.ndarray, gamma: float, tol: float = 1e-13, max_iter: int = 2000
) -> tuple[ModelParams, np.ndarray, float]:
    """Diagonal-precision fixed point and the penalty level that keeps it.

    Per-variable univariate fits seed a joint iteration constrained to
    diagonal precision (weights from the product density, weighted mean,
    per-coordinate variance times (1+gamma)).  At its fixed point the
    weighted scatter S_w is returned along with
    ``lam1 = max_{j != k} |S_w[j, k]|``: for any lam >= lam1 the MM
    iteration started here is stationary with empty off-diagonal
    support.

    Returns (theta, S_w, lam1).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, p = X.shape
    if p < 2:
        raise DimensionMismatch("need at least two variables")
    mu = np.empty(p)
    sig = np.empty(p)
    for j in range(p):
        uni = univariate_gamma_fit(X[:, j], gamma)
        mu[j] = uni.mu_j
        sig[j] = uni.sigma_jj
    for _ in range(max_iter):
        if gamma == 0.0:
            w = np.full(n, 1.0 / n)
        else:
            d2 = (X - mu) ** 2 / sig
            logits = -0.5 * gamma * (d2.sum(axis=1) + np.log(sig).sum())
            w = np.exp(logits - logsumexp(logits))
            w /= w.sum()
        mu_new = w @ X
        sig_new = (1.0 + gamma) * (w @ (X - mu_new) ** 2)
        if np.any(sig_new <= 0):
            raise DegenerateScatter("weights collapsed in the diagonal fit")
        done = max(
            np.max(np.abs(mu_new - mu)), np.max(np.abs(sig_new - sig))
        ) <= tol * max(1.0, np.max(np.abs(mu)), np.max(sig))
        mu, sig = mu_new, sig_new
        if done:
            break
    if gamma == 0.0:
        w = np.full(n, 1.0 / n)
    else:
        d2 = (X - mu) ** 2 / sig
        logits = -0.5 * gamma * (d2.sum(axis=1) + np.log(sig).sum())
        w = np.exp(logits - logsumexp(logits))
        w /= w.sum()
    s_w = weighted_scatter(X, mu, w)
    off = ~np.eye(p, dtype=bool)
    lam1 = float(np.max(np.abs(s_w[off])))
    theta = ModelParams(mu=mu, omega=np.diag(1.0 / ((1.0 + gamma) * np.diag(s_w))))
    return theta, s_w, lam1


def lambda_max(X: np.ndarray, gamma: float) -> float:
    """Smallest penalty at which the estimated precision is fully
    diagonal: the max absolute off-diagonal of the weighted covariance
    at the diagonal fixed point (see :func:`diagonal_start`)."""
    _, _, lam1 = diagonal_start(X, gamma)
    return lam1


def solution_path(
    X: np.ndarray,
    gamma: float,
    K: int = 10,
    delta: float = 0.2,
    tol: float = 1e-7,
    max_iter: int = 200,
) -> SolutionPath:
    """Fit a warm-started path over lam_k = lam1 * delta^((k-1)/(K-1)).

    The first point starts at the diagonal fixed point (so its support
    is empty); each later point starts from its predecessor's estimate.
    Estimation errors are recorded per point and do not abort the path.
    """
    if K < 2:
        raise ValueError("K must be >= 2")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    theta0, _, lam1 = diagonal_start(X, gamma)
    lambdas = lam1 * delta ** (np.arange(K) / (K - 1))
    fits: list[FitResult | None] = []
    statuses: list[str] = []
    theta = theta0
    for lam in lambdas:
        cfg = RobustConfig(gamma=gamma, lam=float(lam))
        try:
            res = fit(X, cfg, init=theta, tol=tol, max_iter=max_iter)
        except (DegenerateScatter, MaxSweepsExceeded, NotPositiveDefinite) as exc:
            fits.append(None)
            statuses.append(f"error: {exc}")
            continue
        fits.append(res)
        statuses.append("ok" if res.converged else "max_iter")
        theta = res.theta
    return SolutionPath(
        lambdas=lambdas, fits=tuple(fits), gamma=gamma, statuses=tuple(statuses)
    )
