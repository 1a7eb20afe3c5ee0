"""Comparison estimators: multivariate-t EM (tlasso) and the
nonparanormal rank transform followed by a graphical lasso.

The standard graphical lasso itself is the gamma = 0 branch of
:mod:`robustggm.gamma_mm` and needs no separate code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtri
from scipy.stats import rankdata

from . import glasso
from .errors import DegenerateColumn, EmptyDataset
from .gamma_mm import FitResult, robust_init
from .matcore import quad_form, spd_factorize
from .objective import ModelParams, RobustConfig, l1_offdiag


@dataclass(frozen=True)
class TlassoConfig:
    """Degrees of freedom, penalty weight, and stopping rule for the
    penalized multivariate-t EM."""

    nu: float
    lam: float
    tol: float = 1e-6
    max_iter: int = 200

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be > 0")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")


@dataclass(frozen=True)
class NpnConfig:
    """Truncation level for the empirical CDF ("auto" uses the
    rate-matched default) and the penalty weight of the downstream
    graphical lasso."""

    delta_n: float | str = "auto"
    lam: float = 0.0
    use_correlation: bool = False

    def __post_init__(self):
        if isinstance(self.delta_n, str):
            if self.delta_n != "auto":
                raise ValueError("delta_n must be a float or 'auto'")
        elif not 0.0 < self.delta_n < 0.5:
            raise ValueError("explicit delta_n must lie in (0, 0.5)")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")


def t_log_density(X: np.ndarray, mu: np.ndarray, omega: np.ndarray, nu: float):
    """Multivariate-t log-density with shape matrix omega^{-1}."""
    f = spd_factorize(omega)
    p = mu.shape[0]
    q = quad_form(f, np.atleast_2d(X) - mu)
    const = (
        gammaln((nu + p) / 2.0)
        - gammaln(nu / 2.0)
        - (p / 2.0) * (math.log(nu) + math.log(math.pi))
        + 0.5 * f.logdet
    )
    return const - ((nu + p) / 2.0) * np.log1p(q / nu)


def _t_objective(X, mu, omega, cfg: TlassoConfig) -> float:
    """Mean penalized t negative log-likelihood.  Monitored only: the
    normalized-weight EM below is not guaranteed to decrease it."""
    return float(
        -np.mean(t_log_density(X, mu, omega, cfg.nu))
        + 0.5 * cfg.lam * l1_offdiag(omega)
    )


def tlasso_weights(X: np.ndarray, theta: ModelParams, nu: float) -> np.ndarray:
    """Normalized EM weights u_i = u~_i / sum_j u~_j with
    u~_i = (nu + p) / (nu + (x_i - mu)' omega (x_i - mu))."""
    f = spd_factorize(theta.omega)
    q = quad_form(f, np.atleast_2d(X) - theta.mu)
    raw = (nu + theta.p) / (nu + q)
    return raw / raw.sum()


def fit_tlasso(
    X: np.ndarray, cfg: TlassoConfig, init: ModelParams | None = None
) -> FitResult:
    """Penalized multivariate-t estimate via EM with a graphical-lasso
    M-step on the weighted scatter of the normalized weights.

    Stops when the max-abs change of (mu, omega) drops below
    ``cfg.tol``; hitting ``cfg.max_iter`` is a soft failure
    (``converged=False``).  The returned weights are the normalized EM
    weights at the estimate.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise EmptyDataset("need at least two observations")
    theta = init if init is not None else robust_init(X)
    trace = [_t_objective(X, theta.mu, theta.omega, cfg)]
    converged = False
    iterations = 0
    for _ in range(cfg.max_iter):
        u = tlasso_weights(X, theta, cfg.nu)
        mu_next = u @ X
        d = X - mu_next
        s_u = (d * u[:, None]).T @ d
        s_u = (s_u + s_u.T) / 2.0
        sol = glasso.solve(
            glasso.GlassoProblem(s=s_u, lam=cfg.lam), init=theta.omega
        )
        change = max(
            np.max(np.abs(mu_next - theta.mu)),
            np.max(np.abs(sol.omega - theta.omega)),
        )
        theta = ModelParams(mu=mu_next, omega=sol.omega)
        trace.append(_t_objective(X, theta.mu, theta.omega, cfg))
        iterations += 1
        if change < cfg.tol:
            converged = True
            break
    return FitResult(
        theta=theta,
        weights=tlasso_weights(X, theta, cfg.nu),
        objective_trace=tuple(trace),
        converged=converged,
        mm_iterations=iterations,
        config=RobustConfig(gamma=0.0, lam=cfg.lam),
    )


def tlasso_diagonal_start(
    X: np.ndarray, nu: float, tol: float = 1e-12, max_iter: int = 2000
) -> tuple[ModelParams, float]:
    """Diagonal-precision EM fixed point and the penalty level that
    keeps the t estimate diagonal (the max absolute off-diagonal of the
    weighted scatter there); anchors the tlasso path grid."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, p = X.shape
    start = robust_init(X)
    mu = start.mu.copy()
    sig = 1.0 / np.diag(start.omega)
    for _ in range(max_iter):
        q = np.sum((X - mu) ** 2 / sig, axis=1)
        raw = (nu + p) / (nu + q)
        u = raw / raw.sum()
        mu_new = u @ X
        sig_new = u @ (X - mu_new) ** 2
        done = max(
            np.max(np.abs(mu_new - mu)), np.max(np.abs(sig_new - sig))
        ) <= tol * max(1.0, np.max(np.abs(mu)), np.max(sig))
        mu, sig = mu_new, sig_new
        if done:
            break
    q = np.sum((X - mu) ** 2 / sig, axis=1)
    raw = (nu + p) / (nu + q)
    u = raw / raw.sum()
    d = X - mu
    s_u = (d * u[:, None]).T @ d
    off = ~np.eye(p, dtype=bool)
    lam1 = float(np.max(np.abs(s_u[off])))
    return ModelParams(mu=mu, omega=np.diag(1.0 / np.diag(s_u))), lam1


def npn_delta(n: int) -> float:
    """Truncation level 1 / (4 n^{1/4} sqrt(pi log n)) matched to the
    high-dimensional convergence rate of the transform estimator."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return 1.0 / (4.0 * n**0.25 * math.sqrt(math.pi * math.log(n)))


def npn_transform(X: np.ndarray, cfg: NpnConfig) -> np.ndarray:
    """Columnwise Gaussianizing transform.

    Each column is mapped through
    ``mean_j + sd_j * Phi^{-1}(F~_j(x))`` where F~_j is the empirical
    CDF (ties averaged, rank / (n + 1)) truncated to
    [delta_n, 1 - delta_n]; mean and (biased) standard deviation are the
    column sample moments.  Monotone in each column, so within-column
    rank order is preserved.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, p = X.shape
    if n < 2:
        raise EmptyDataset("need at least two observations")
    delta = npn_delta(n) if cfg.delta_n == "auto" else float(cfg.delta_n)
    out = np.empty_like(X)
    for j in range(p):
        col = X[:, j]
        if col.max() == col.min():
            raise DegenerateColumn(f"column {j} has fewer than 2 distinct values")
        cdf = rankdata(col, method="average") / (n + 1.0)
        cdf = np.clip(cdf, delta, 1.0 - delta)
        out[:, j] = col.mean() + col.std() * ndtri(cdf)
    return out


def fit_nonparanormal(X: np.ndarray, cfg: NpnConfig) -> FitResult:
    """Graphical lasso on the biased sample covariance (or correlation)
    of the transformed data; weights are reported as uniform."""
    Z = npn_transform(X, cfg)
    n = Z.shape[0]
    mu = Z.mean(axis=0)
    d = Z - mu
    s = d.T @ d / n
    s = (s + s.T) / 2.0
    if cfg.use_correlation:
        scale = np.sqrt(np.diag(s))
        s = s / np.outer(scale, scale)
        s = (s + s.T) / 2.0
    sol = glasso.solve(glasso.GlassoProblem(s=s, lam=cfg.lam))
    theta = ModelParams(mu=mu, omega=sol.omega)
    obj = float(glasso.glasso_objective(sol.omega, glasso.GlassoProblem(s=s, lam=cfg.lam)))
    return FitResult(
        theta=theta,
        weights=np.full(n, 1.0 / n),
        objective_trace=(obj,),
        converged=True,
        mm_iterations=sol.iterations,
        config=RobustConfig(gamma=0.0, lam=cfg.lam),
    )
