"""
Smoothing Proximal Gradient for the Coefficient Step

Minimizes the Omega-weighted least-squares loss of every class plus a
Nesterov-smoothed cross-class fusion term and an exact lasso term. The
lasso is handled in the proximal step, so returned coefficients carry
exact zeros; the fusion term only ever pulls classes together.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mcvar.exceptions import ConfigurationError, DimensionError, SolverDivergenceError
from mcvar.panel import LaggedDesign
from mcvar.solvers.prox import soft_threshold

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpgOptions:
    """
    Smoothing Proximal Gradient Settings

    Attributes
    ----------
    mu: float
        Smoothing parameter of the fusion term, > 0.
    max_iter: int
        Iteration cap.
    tol: float
        Relative objective change that stops the iterations.
    step_init: float
        Initial step as a multiple of the inverse least-squares Lipschitz bound.
    shrink: float
        Backtracking factor in (0, 1).
    """

    mu: float = 1e-4
    max_iter: int = 5000
    tol: float = 1e-6
    step_init: float = 1.0
    shrink: float = 0.5

    def __post_init__(self) -> None:
        if not self.mu > 0:
            msg = f"SPG smoothing parameter must be positive, got {self.mu}"
            raise ConfigurationError(msg)
        if not 0 < self.shrink < 1:
            msg = f"SPG shrink factor must lie in (0, 1), got {self.shrink}"
            raise ConfigurationError(msg)
        if self.max_iter < 1:
            msg = f"SPG needs at least one iteration, got {self.max_iter}"
            raise ConfigurationError(msg)
        if not self.tol > 0 or not self.step_init > 0:
            raise ConfigurationError("SPG tolerance and initial step must be positive")


@dataclass(frozen=True)
class SpgResult:
    """
    Outcome of one coefficient step

    `trace` holds one `(iteration, objective, step)` row per iteration,
    the objective being the smoothed composite one that is minimized.
    """

    coefficients: np.ndarray
    objective: float
    iterations: int
    converged: bool
    trace: list[tuple[int, float, float]] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class GlsTerms:
    """
    Per-class sufficient statistics of the weighted least-squares loss
    """

    response_gram: np.ndarray
    cross: np.ndarray
    gram: np.ndarray

    @classmethod
    def from_designs(cls, designs: Sequence[LaggedDesign]) -> GlsTerms:
        """
        Stack Y'Y, Y'X and X'X of every class
        """
        if not designs:
            raise DimensionError("At least one class design is required")
        shapes = {design.predictors.shape[1] for design in designs}
        shapes_y = {design.n_series for design in designs}
        if len(shapes) != 1 or len(shapes_y) != 1:
            raise DimensionError("Class designs disagree on dimensions")
        return cls(
            response_gram=np.stack([design.response_gram for design in designs]),
            cross=np.stack([design.cross for design in designs]),
            gram=np.stack([design.gram for design in designs]),
        )

    @property
    def shape(self) -> tuple[int, int, int]:
        """
        Coefficient stack shape K x J x JP
        """
        n_classes, n_series, n_predictors = self.cross.shape
        return n_classes, n_series, n_predictors


def _check_shapes(coefficients: np.ndarray, precisions: np.ndarray, terms: GlsTerms) -> None:
    if coefficients.shape != terms.shape:
        msg = f"Coefficients have shape {coefficients.shape}, expected {terms.shape}"
        raise DimensionError(msg)
    expected = (terms.shape[0], terms.shape[1], terms.shape[1])
    if precisions.shape != expected:
        msg = f"Precisions have shape {precisions.shape}, expected {expected}"
        raise DimensionError(msg)


def _gls_value_grad(
    coefficients: np.ndarray, precisions: np.ndarray, terms: GlsTerms
) -> tuple[float, np.ndarray]:
    transposed = np.swapaxes(coefficients, 1, 2)
    bg = coefficients @ terms.gram
    cb = terms.cross @ transposed
    residual_gram = terms.response_gram - cb - np.swapaxes(cb, 1, 2) + bg @ transposed
    value = float(np.einsum("kij,kij->", precisions, residual_gram))
    gradient = -2.0 * precisions @ (terms.cross - bg)
    return value, gradient


def gls_value_grad(
    coefficients: np.ndarray,
    designs: Sequence[LaggedDesign],
    precisions: np.ndarray,
) -> tuple[float, np.ndarray]:
    """
    Weighted least-squares loss and its gradient

    The loss is sum_k sum_t (y_t - B_k x_t)' Omega_k (y_t - B_k x_t), the
    gradient -2 Omega_k (Y'X - B_k X'X) for every class.

    Parameters
    ----------
    coefficients: np.ndarray
        K x J x JP coefficient stack.
    designs: Sequence[LaggedDesign]
        One lagged design per class.
    precisions: np.ndarray
        K x J x J inverse error covariances.

    Returns
    -------
    tuple[float, np.ndarray]
    """
    terms = GlsTerms.from_designs(designs)
    _check_shapes(coefficients, precisions, terms)
    return _gls_value_grad(coefficients, precisions, terms)


def gls_grad(
    coefficients: np.ndarray,
    designs: Sequence[LaggedDesign],
    precisions: np.ndarray,
) -> np.ndarray:
    """
    Gradient of the weighted least-squares loss for every class
    """
    return gls_value_grad(coefficients, designs, precisions)[1]


def fusion_penalty(stack: np.ndarray) -> float:
    """
    sum over ordered class pairs k != k' of the l1 distance between classes
    """
    differences = stack[:, None] - stack[None, :]
    return float(np.abs(differences).sum())


def smooth_fusion_value_grad(
    coefficients: np.ndarray, lambda2: float, mu: float
) -> tuple[float, np.ndarray]:
    """
    Nesterov-smoothed fusion penalty over ordered class pairs

    With D_kk' = B_k - B_k' and alpha = clip(D / mu, -1, 1) the smoothed
    value is lambda2 * sum(alpha * D - mu / 2 * alpha ** 2) and the
    gradient with respect to B_k is lambda2 * 2 * sum_k' alpha_kk'.
    """
    if not mu > 0:
        msg = f"Smoothing parameter must be positive, got {mu}"
        raise ConfigurationError(msg)
    if lambda2 == 0 or coefficients.shape[0] < 2:  # noqa: PLR2004
        return 0.0, np.zeros_like(coefficients)
    differences = coefficients[:, None] - coefficients[None, :]
    alpha = np.clip(differences / mu, -1.0, 1.0)
    value = lambda2 * float((alpha * differences - mu / 2.0 * alpha**2).sum())
    gradient = lambda2 * 2.0 * alpha.sum(axis=1)
    return value, gradient


def fusion_smoothing_gap(n_classes: int, n_coefficients: int) -> float:
    """
    D in the bound |smoothed - exact| <= mu * D, for a unit fusion weight

    Half the number of ordered class pairs times the coefficients per class.
    """
    return n_classes * (n_classes - 1) * n_coefficients / 2.0


def _lipschitz_bound(precisions: np.ndarray, terms: GlsTerms) -> float:
    bounds = [
        2.0 * np.linalg.eigvalsh(omega)[-1] * np.linalg.eigvalsh(gram)[-1]
        for omega, gram in zip(precisions, terms.gram)
    ]
    return max(max(bounds), 1e-12)


def spg_fit(
    designs: Sequence[LaggedDesign],
    precisions: np.ndarray,
    lambda1: float,
    lambda2: float,
    options: SpgOptions | None = None,
    warm_start: np.ndarray | None = None,
) -> SpgResult:
    """
    Penalized coefficient step by accelerated proximal gradient

    Runs monotone FISTA with backtracking on
    GLS(B) + smoothed lambda2 fusion(B) + lambda1 * |B|_1. The
    accepted iterate never increases the objective, so the returned
    coefficients are the best seen, warm start included.

    Parameters
    ----------
    designs: Sequence[LaggedDesign]
        One lagged design per class.
    precisions: np.ndarray
        K x J x J inverse error covariances, positive definite.
    lambda1: float
        Lasso weight.
    lambda2: float
        Fusion weight.
    options: SpgOptions | None
        Solver settings, defaults to `SpgOptions()`.
    warm_start: np.ndarray | None
        K x J x JP starting coefficients, zeros when omitted.

    Raises
    ------
    SolverDivergenceError
        The objective became non-finite.

    Returns
    -------
    SpgResult
    """
    options = options or SpgOptions()
    terms = GlsTerms.from_designs(designs)
    start = (
        np.zeros(terms.shape) if warm_start is None else np.array(warm_start, dtype=float)
    )
    _check_shapes(start, precisions, terms)

    def smooth(b: np.ndarray) -> tuple[float, np.ndarray]:
        loss, loss_grad = _gls_value_grad(b, precisions, terms)
        fuse, fuse_grad = smooth_fusion_value_grad(b, lambda2, options.mu)
        return loss + fuse, loss_grad + fuse_grad

    def composite(smooth_value: float, b: np.ndarray) -> float:
        return smooth_value + lambda1 * float(np.abs(b).sum())

    step = options.step_init / _lipschitz_bound(precisions, terms)
    x = start
    x_value = composite(smooth(x)[0], x)
    if not np.isfinite(x_value):
        raise SolverDivergenceError("SPG objective is not finite at the starting point")
    y, momentum = x.copy(), 1.0
    trace: list[tuple[int, float, float]] = []
    converged = False
    iteration = 0
    for iteration in range(1, options.max_iter + 1):  # noqa: B007
        y_value, y_grad = smooth(y)
        while True:
            z = soft_threshold(y - step * y_grad, step * lambda1)
            z_smooth = smooth(z)[0]
            delta = z - y
            bound = (
                y_value
                + float((y_grad * delta).sum())
                + float((delta**2).sum()) / (2.0 * step)
            )
            if z_smooth <= bound + 1e-12 * max(abs(bound), 1.0):
                break
            step *= options.shrink
            if step < 1e-300:
                raise SolverDivergenceError("SPG line search collapsed the step size")
        z_value = composite(z_smooth, z)
        if not np.isfinite(z_value):
            msg = f"SPG objective became non-finite at iteration {iteration}"
            raise SolverDivergenceError(msg)
        next_momentum = (1.0 + np.sqrt(1.0 + 4.0 * momentum**2)) / 2.0
        if z_value <= x_value:
            change = abs(x_value - z_value) / max(abs(x_value), 1.0)
            y = z + ((momentum - 1.0) / next_momentum) * (z - x)
            x, x_value = z, z_value
            momentum = next_momentum
        elif np.array_equal(y, x):
            # a plain proximal step from x no longer descends
            change = 0.0
        else:
            change = np.inf
            y, momentum = x.copy(), 1.0
        trace.append((iteration, x_value, step))
        if change < options.tol:
            converged = True
            break
    if not converged:
        logger.warning(
            "SPG stopped at the iteration cap (%d) before reaching tol %g",
            options.max_iter,
            options.tol,
        )
    return SpgResult(
        coefficients=x,
        objective=x_value,
        iterations=iteration,
        converged=converged,
        trace=trace,
    )
