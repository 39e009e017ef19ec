"""
Fused Joint Graphical Lasso by ADMM

Estimates one inverse covariance per class from residual sample
covariances, with a lasso on off-diagonal entries and an l1 fusion of
corresponding entries across classes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from mcvar.exceptions import (
    ConfigurationError,
    DimensionError,
    InvalidPenaltyError,
    NonSymmetricError,
)
from mcvar.panel import LaggedDesign
from mcvar.solvers.prox import eigen_theta_update, fused_prox_k, soft_threshold

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdmmOptions:
    """
    ADMM Settings

    Attributes
    ----------
    rho: float
        Initial augmented Lagrangian parameter, > 0.
    max_iter: int
        Iteration cap.
    abs_tol: float
        Absolute part of the primal and dual residual tolerances.
    rel_tol: float
        Relative part of the primal and dual residual tolerances.
    balance: float
        Residual ratio beyond which rho is doubled or halved, 0 disables it.
    """

    rho: float = 1.0
    max_iter: int = 2000
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    balance: float = 10.0

    def __post_init__(self) -> None:
        if not self.rho > 0:
            msg = f"ADMM rho must be positive, got {self.rho}"
            raise ConfigurationError(msg)
        if self.max_iter < 1:
            msg = f"ADMM needs at least one iteration, got {self.max_iter}"
            raise ConfigurationError(msg)
        if self.abs_tol < 0 or self.rel_tol < 0 or self.abs_tol + self.rel_tol == 0:
            raise ConfigurationError("ADMM tolerances must be non-negative, not both 0")
        if self.balance < 0:
            raise ConfigurationError("ADMM residual balancing ratio must be >= 0")


@dataclass(frozen=True)
class AdmmResult:
    """
    Outcome of one inverse covariance step
    """

    precisions: np.ndarray
    iterations: int
    converged: bool
    primal_residual: float
    dual_residual: float
    rho: float


def residual_covariances(
    coefficients: np.ndarray, designs: Sequence[LaggedDesign]
) -> tuple[np.ndarray, np.ndarray]:
    """
    Residual sample covariances S_k = E_k'E_k / N_k and the sample sizes N_k
    """
    if coefficients.shape[0] != len(designs):
        msg = f"{coefficients.shape[0]} coefficient blocks for {len(designs)} classes"
        raise DimensionError(msg)
    covariances = []
    for b, design in zip(coefficients, designs):
        if b.shape != (design.n_series, design.predictors.shape[1]):
            msg = f"Coefficient block of shape {b.shape} does not match the design"
            raise DimensionError(msg)
        residuals = design.responses - design.predictors @ b.T
        covariances.append(residuals.T @ residuals / design.n_obs)
    n_obs = np.array([design.n_obs for design in designs], dtype=float)
    return np.stack(covariances), n_obs


def _is_positive_definite(matrix: np.ndarray) -> bool:
    return bool(np.linalg.eigvalsh(matrix)[0] > 0)


def _z_update(
    a: np.ndarray, lambda3: float, lambda4: float, rho: float
) -> np.ndarray:
    """
    Element-wise penalty prox: fuse across classes, then shrink off-diagonals
    """
    fused = fused_prox_k(a, lambda4, rho)
    off_diagonal = ~np.eye(a.shape[1], dtype=bool)
    shrunk = fused.copy()
    shrunk[:, off_diagonal] = soft_threshold(fused[:, off_diagonal], lambda3 / rho)
    return shrunk


def _validate_inputs(
    covariances: np.ndarray, n_obs: np.ndarray, lambda3: float, lambda4: float
) -> None:
    if covariances.ndim != 3 or covariances.shape[1] != covariances.shape[2]:  # noqa: PLR2004
        msg = f"Covariances must be a K x J x J stack, got {covariances.shape}"
        raise DimensionError(msg)
    if n_obs.shape != (covariances.shape[0],):
        raise DimensionError("One sample size is required per class")
    if not (n_obs > 0).all():
        raise DimensionError("Sample sizes must be positive")
    for name, value in (("lambda3", lambda3), ("lambda4", lambda4)):
        if not np.isfinite(value) or value < 0:
            msg = f"{name} must be finite and non-negative, got {value}"
            raise InvalidPenaltyError(msg)
    scale = max(float(np.abs(covariances).max(initial=0.0)), 1.0)
    asymmetry = np.abs(covariances - np.swapaxes(covariances, 1, 2)).max(initial=0.0)
    if asymmetry > 1e-10 * scale:
        msg = f"Covariance input is not symmetric (max deviation {asymmetry:.3g})"
        raise NonSymmetricError(msg)


def admm_fgl(
    covariances: np.ndarray,
    n_obs: Sequence[float] | np.ndarray,
    lambda3: float,
    lambda4: float,
    options: AdmmOptions | None = None,
    warm_start: np.ndarray | None = None,
) -> AdmmResult:
    """
    Fused graphical lasso over K classes

    Minimizes sum_k n_k (tr(S_k Theta_k) - log|Theta_k|)
    + lambda3 sum_k sum_{i != j} |Theta_k,ij|
    + lambda4 sum_{k < k'} sum_ij |Theta_k,ij - Theta_k',ij|.

    The Theta-update solves each class by eigendecomposition, the
    Z-update is the element-wise fused prox followed by off-diagonal
    soft-thresholding. Iterations stop when both the primal and the dual
    residual fall below their tolerances; rho is rebalanced when one
    residual dominates the other.

    Parameters
    ----------
    covariances: np.ndarray
        K x J x J symmetric sample covariances.
    n_obs: Sequence[float] | np.ndarray
        Sample size of every class.
    lambda3: float
        Off-diagonal lasso weight.
    lambda4: float
        Fusion weight over unordered class pairs.
    options: AdmmOptions | None
        Solver settings, defaults to `AdmmOptions()`.
    warm_start: np.ndarray | None
        K x J x J starting precisions, identities when omitted.

    Raises
    ------
    NonSymmetricError
        A covariance matrix is not symmetric.

    Returns
    -------
    AdmmResult
        Sparse Z iterate as the estimate; a class whose Z is not positive
        definite falls back to its Theta iterate.
    """
    options = options or AdmmOptions()
    covariances = np.asarray(covariances, dtype=float)
    n_obs = np.asarray(n_obs, dtype=float)
    _validate_inputs(covariances, n_obs, lambda3, lambda4)
    n_classes, n_series, _ = covariances.shape
    if lambda4 == 0 and n_classes > 1:
        return _decoupled(covariances, n_obs, lambda3, options, warm_start)

    z = (
        np.tile(np.eye(n_series), (n_classes, 1, 1))
        if warm_start is None
        else np.array(warm_start, dtype=float)
    )
    if z.shape != covariances.shape:
        msg = f"Warm start has shape {z.shape}, expected {covariances.shape}"
        raise DimensionError(msg)
    u = np.zeros_like(z)
    theta = z.copy()
    rho = options.rho
    rho_bounds = (options.rho * 1e-4, options.rho * 1e4)
    size = np.sqrt(z.size)
    primal = dual = np.inf
    converged = False
    iteration = 0
    for iteration in range(1, options.max_iter + 1):  # noqa: B007
        for k in range(n_classes):
            class_rho = rho / n_obs[k]
            target = z[k] - u[k] - covariances[k] / class_rho
            theta[k] = eigen_theta_update(target, class_rho)
        z_old = z
        z = _z_update(theta + u, lambda3, lambda4, rho)
        u = u + theta - z
        primal = float(np.linalg.norm(theta - z))
        dual = float(rho * np.linalg.norm(z - z_old))
        primal_tol = size * options.abs_tol + options.rel_tol * max(
            float(np.linalg.norm(theta)), float(np.linalg.norm(z))
        )
        dual_tol = size * options.abs_tol + options.rel_tol * rho * float(
            np.linalg.norm(u)
        )
        if primal <= primal_tol and dual <= dual_tol:
            converged = True
            break
        if options.balance > 0:
            new_rho = rho
            if primal > options.balance * dual:
                new_rho = min(rho * 2.0, rho_bounds[1])
            elif dual > options.balance * primal:
                new_rho = max(rho / 2.0, rho_bounds[0])
            u = u * (rho / new_rho)
            rho = new_rho
    if not converged:
        logger.warning(
            "ADMM stopped at the iteration cap (%d), primal %.3g dual %.3g",
            options.max_iter,
            primal,
            dual,
        )
    estimate = (z + np.swapaxes(z, 1, 2)) / 2.0
    for k in range(n_classes):
        if not _is_positive_definite(estimate[k]):
            logger.warning(
                "Sparse ADMM iterate of class %d is not positive definite, "
                "using the likelihood iterate",
                k,
            )
            estimate[k] = (theta[k] + theta[k].T) / 2.0
    return AdmmResult(
        precisions=estimate,
        iterations=iteration,
        converged=converged,
        primal_residual=primal,
        dual_residual=dual,
        rho=rho,
    )


def _decoupled(
    covariances: np.ndarray,
    n_obs: np.ndarray,
    lambda3: float,
    options: AdmmOptions,
    warm_start: np.ndarray | None,
) -> AdmmResult:
    """
    Without fusion the classes separate into single-class problems
    """
    results = [
        admm_fgl(
            covariances[k : k + 1],
            n_obs[k : k + 1],
            lambda3,
            0.0,
            options=options,
            warm_start=None if warm_start is None else warm_start[k : k + 1],
        )
        for k in range(covariances.shape[0])
    ]
    return AdmmResult(
        precisions=np.concatenate([result.precisions for result in results]),
        iterations=max(result.iterations for result in results),
        converged=all(result.converged for result in results),
        primal_residual=max(result.primal_residual for result in results),
        dual_residual=max(result.dual_residual for result in results),
        rho=results[-1].rho,
    )
