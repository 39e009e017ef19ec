"""
Multi-class VAR Estimation

Alternates the penalized coefficient step and the fused graphical lasso
step, and selects the lag order and penalty weights by BIC.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import pandas as pd

from mcvar.config import (
    fusion_merge_tolerance,
    null_model_margin,
    standardization_tolerance,
)
from mcvar.exceptions import (
    ConfigurationError,
    EmptyGridError,
    InsufficientObservationsError,
    NotStandardizedError,
    SingularRegressionError,
)
from mcvar.model import (
    FitDiagnostics,
    MultiClassVarFit,
    PenaltyConfig,
    objective_value,
    precision_objective,
)
from mcvar.panel import LaggedDesign, ReturnPanel, build_lagged_design
from mcvar.solvers.admm import AdmmOptions, admm_fgl, residual_covariances
from mcvar.solvers.spg import SpgOptions, spg_fit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSpec:
    """
    Penalty grid, relative to the data-driven anchors

    `lambda1` values multiply lambda1_max, `lambda2` values multiply the
    current lambda1, `lambda3` values multiply lambda3_max and `lambda4`
    values multiply the current lambda3. Explicit `points` bypass the
    relative grid.
    """

    lambda1: tuple[float, ...] = tuple(np.logspace(0, -2, 10).tolist())
    lambda2: tuple[float, ...] = (0.0, 0.25, 0.5, 1.0, 2.0)
    lambda3: tuple[float, ...] = tuple(np.logspace(0, -2, 3).tolist())
    lambda4: tuple[float, ...] = (0.0, 1.0)
    points: tuple[PenaltyConfig, ...] | None = None

    def __post_init__(self) -> None:
        if self.points is not None:
            if len(self.points) == 0:
                raise EmptyGridError("The penalty grid holds no points")
            return
        for name in ("lambda1", "lambda2", "lambda3", "lambda4"):
            values = getattr(self, name)
            if len(values) == 0:
                msg = f"The {name} grid is empty"
                raise EmptyGridError(msg)
            if any(not np.isfinite(v) or v < 0 for v in values):
                msg = f"The {name} grid must hold finite non-negative factors"
                raise ConfigurationError(msg)

    @classmethod
    def single(cls, penalty: PenaltyConfig) -> GridSpec:
        """
        A one-point grid
        """
        return cls(points=(penalty,))


@dataclass(frozen=True)
class FitOptions:
    """
    Outer Alternation and Selection Settings

    Grid points of `select_penalties` are fitted with the `grid_*`
    settings, looser than the ones used for the final refit of the winner.
    """

    max_outer: int = 25
    tol_outer: float = 1e-4
    spg: SpgOptions = field(default_factory=SpgOptions)
    admm: AdmmOptions = field(default_factory=AdmmOptions)
    grid: GridSpec = field(default_factory=GridSpec)
    merge_tolerance: float = fusion_merge_tolerance
    threads: int = 1
    grid_max_outer: int = 5
    grid_tol_outer: float = 1e-3
    grid_spg: SpgOptions = field(
        default_factory=lambda: SpgOptions(mu=1e-2, tol=1e-4, max_iter=500)
    )
    grid_admm: AdmmOptions = field(
        default_factory=lambda: AdmmOptions(abs_tol=1e-6, rel_tol=1e-4, max_iter=500)
    )

    def __post_init__(self) -> None:
        if self.max_outer < 1 or self.grid_max_outer < 1:
            msg = (
                "Need at least one outer iteration, got "
                f"{self.max_outer} (fit) and {self.grid_max_outer} (grid)"
            )
            raise ConfigurationError(msg)
        if (
            not self.tol_outer > 0
            or not self.grid_tol_outer > 0
            or not self.merge_tolerance > 0
        ):
            raise ConfigurationError("Tolerances must be positive")
        if self.threads < 1:
            msg = f"Need at least one thread, got {self.threads}"
            raise ConfigurationError(msg)

    def screening(self) -> FitOptions:
        """
        Settings for the grid points of a penalty search
        """
        return replace(
            self,
            max_outer=self.grid_max_outer,
            tol_outer=self.grid_tol_outer,
            spg=self.grid_spg,
            admm=self.grid_admm,
        )


@dataclass(frozen=True, eq=False)
class SelectionResult:
    """
    Outcome of the penalty grid search

    `grid` has one row per grid point, in grid order, with the penalty
    weights, BIC, degrees of freedom, non-zero coefficient count and the
    convergence flag.
    """

    penalty: PenaltyConfig
    fit: MultiClassVarFit
    grid: pd.DataFrame


def _relative_change(new: np.ndarray, old: np.ndarray) -> float:
    return float(np.linalg.norm(new - old) / max(float(np.linalg.norm(old)), 1.0))


def _check_standardized(panel: ReturnPanel) -> None:
    if not panel.is_standardized(standardization_tolerance):
        msg = (
            "The estimator expects standardized returns (mean 0, sd 1 per series); "
            "run `standardize` or the `preprocess` command first"
        )
        raise NotStandardizedError(msg)


def _alternate(
    designs: Sequence[LaggedDesign],
    penalty: PenaltyConfig,
    options: FitOptions,
    warm_coefficients: np.ndarray | None = None,
    warm_precisions: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, FitDiagnostics]:
    """
    Outer alternation on raw designs, from Omega = I unless warm-started
    """
    spg_options = penalty.spg or options.spg
    admm_options = penalty.admm or options.admm
    n_classes = len(designs)
    n_series = designs[0].n_series
    n_predictors = designs[0].predictors.shape[1]
    coefficients = (
        np.zeros((n_classes, n_series, n_predictors))
        if warm_coefficients is None
        else warm_coefficients.copy()
    )
    precisions = (
        np.tile(np.eye(n_series), (n_classes, 1, 1))
        if warm_precisions is None
        else warm_precisions.copy()
    )
    trace = [objective_value(coefficients, precisions, designs, penalty)]
    coefficient_changes: list[float] = []
    precision_changes: list[float] = []
    spg_iterations: list[int] = []
    admm_iterations: list[int] = []
    spg_trace: list[tuple[int, float, float]] = []
    converged = False
    for outer in range(1, options.max_outer + 1):
        step = spg_fit(
            designs,
            precisions,
            penalty.lambda1,
            penalty.lambda2,
            options=spg_options,
            warm_start=coefficients,
        )
        covariances, n_obs = residual_covariances(step.coefficients, designs)
        omega_step = admm_fgl(
            covariances,
            n_obs,
            penalty.lambda3,
            2.0 * penalty.lambda4,
            options=admm_options,
            warm_start=precisions,
        )
        new_precisions = omega_step.precisions
        current = precision_objective(
            precisions, covariances, n_obs, penalty.lambda3, penalty.lambda4
        )
        proposed = precision_objective(
            new_precisions, covariances, n_obs, penalty.lambda3, penalty.lambda4
        )
        if proposed > current:
            new_precisions = precisions
        coefficient_changes.append(_relative_change(step.coefficients, coefficients))
        precision_changes.append(_relative_change(new_precisions, precisions))
        coefficients, precisions = step.coefficients, new_precisions
        spg_iterations.append(step.iterations)
        admm_iterations.append(omega_step.iterations)
        spg_trace = step.trace
        trace.append(objective_value(coefficients, precisions, designs, penalty))
        logger.debug(
            "outer iteration %d objective %.10g (dB %.3g, dOmega %.3g)",
            outer,
            trace[-1],
            coefficient_changes[-1],
            precision_changes[-1],
        )
        if max(coefficient_changes[-1], precision_changes[-1]) < options.tol_outer:
            converged = True
            break
    diagnostics = FitDiagnostics(
        objective_trace=trace,
        outer_iterations=len(coefficient_changes),
        converged=converged,
        coefficient_changes=coefficient_changes,
        precision_changes=precision_changes,
        spg_iterations=spg_iterations,
        admm_iterations=admm_iterations,
        spg_trace=spg_trace,
    )
    return coefficients, precisions, diagnostics


def _combine(parts: list[FitDiagnostics]) -> FitDiagnostics:
    """
    Merge the diagnostics of independent per-class alternations
    """
    longest = max(len(part.objective_trace) for part in parts)

    def padded(values: list[float]) -> np.ndarray:
        return np.array(values + [values[-1]] * (longest - len(values)))

    def column_max(rows: list[list[float]]) -> list[float]:
        width = max(len(row) for row in rows)
        return [max(row[i] for row in rows if i < len(row)) for i in range(width)]

    trace = np.sum([padded(part.objective_trace) for part in parts], axis=0)
    return FitDiagnostics(
        objective_trace=[float(v) for v in trace],
        outer_iterations=max(part.outer_iterations for part in parts),
        converged=all(part.converged for part in parts),
        coefficient_changes=column_max([part.coefficient_changes for part in parts]),
        precision_changes=column_max([part.precision_changes for part in parts]),
        spg_iterations=[
            int(v) for v in column_max([part.spg_iterations for part in parts])
        ],
        admm_iterations=[
            int(v) for v in column_max([part.admm_iterations for part in parts])
        ],
        spg_trace=parts[-1].spg_trace,
    )


def fit_designs(
    designs: Sequence[LaggedDesign],
    penalty: PenaltyConfig,
    options: FitOptions | None = None,
    warm_coefficients: np.ndarray | None = None,
    warm_precisions: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, FitDiagnostics]:
    """
    Fit raw class designs; classes run separately when no fusion couples them
    """
    options = options or FitOptions()
    if penalty.couples_classes or len(designs) == 1:
        return _alternate(
            designs, penalty, options, warm_coefficients, warm_precisions
        )
    parts = [
        _alternate(
            designs[k : k + 1],
            penalty,
            options,
            None if warm_coefficients is None else warm_coefficients[k : k + 1],
            None if warm_precisions is None else warm_precisions[k : k + 1],
        )
        for k in range(len(designs))
    ]
    return (
        np.concatenate([part[0] for part in parts]),
        np.concatenate([part[1] for part in parts]),
        _combine([part[2] for part in parts]),
    )


def fit(
    panel: ReturnPanel,
    lag_order: int,
    penalty: PenaltyConfig,
    options: FitOptions | None = None,
) -> MultiClassVarFit:
    """
    Penalized Multi-class VAR fit

    Starting from Omega = I, alternates the coefficient step (warm-started
    SPG) and the inverse covariance step (fused graphical lasso on the
    residual covariances) until the relative changes of both blocks drop
    below `tol_outer` or `max_outer` iterations ran.

    Parameters
    ----------
    panel: ReturnPanel
        Standardized returns.
    lag_order: int
        VAR order P >= 1.
    penalty: PenaltyConfig
        The four penalty weights.
    options: FitOptions | None
        Outer loop and solver settings.

    Raises
    ------
    NotStandardizedError
        The panel is not standardized.

    Returns
    -------
    MultiClassVarFit
    """
    options = options or FitOptions()
    _check_standardized(panel)
    designs = build_lagged_design(panel, lag_order)
    coefficients, precisions, diagnostics = fit_designs(designs, penalty, options)
    if not diagnostics.converged:
        logger.warning(
            "Outer alternation stopped at the iteration cap (%d) before tol %g",
            options.max_outer,
            options.tol_outer,
        )
    return MultiClassVarFit(
        coefficients=coefficients,
        precisions=precisions,
        penalty=penalty,
        diagnostics=diagnostics,
        classes=list(panel.classes),
        series=list(panel.series),
        types=list(panel.types),
    )


def lambda1_max(
    panel: ReturnPanel, lag_order: int, precision_weighted: bool = True
) -> float:
    """
    Smallest lasso weight keeping every coefficient of the fit at zero

    The coefficient step at B = 0 returns zero when lambda1 bounds the
    largest entry of the weighted null gradient 2 |Omega Y'X|. The fit
    starts from Omega = I and, with lambda3 >= lambda3_max, the inverse
    covariance step at B = 0 returns diag(1 / S_jj), fused diagonals
    staying within the class range. Row j of the gradient is therefore
    weighted by max(1, max_k 1 / S_k,jj), and the bound is widened by
    `null_model_margin` to absorb the ADMM tolerance.

    Parameters
    ----------
    panel: ReturnPanel
        Returns, standardized for use with `fit`.
    lag_order: int
        VAR order P.
    precision_weighted: bool
        With False, the bound at Omega = I only, 2 max|Y'X|, which scales
        by c^2 when the returns are scaled by c.

    Returns
    -------
    float
    """
    designs = build_lagged_design(panel, lag_order)
    if not precision_weighted:
        return float(max(2.0 * np.abs(design.cross).max() for design in designs))
    inverse_variances = np.max(
        [design.n_obs / np.diag(design.response_gram) for design in designs], axis=0
    )
    weights = np.maximum(inverse_variances, 1.0)[:, None]
    bound = max(2.0 * np.abs(weights * design.cross).max() for design in designs)
    return float(bound) * (1.0 + null_model_margin)


def lambda3_max(panel: ReturnPanel, lag_order: int) -> float:
    """
    Smallest off-diagonal lasso weight giving diagonal precisions at B = 0

    max_k N * max_{i != j} |S_k,ij| with S_k the response covariance.
    """
    designs = build_lagged_design(panel, lag_order)
    mask = ~np.eye(panel.n_series, dtype=bool)
    return float(
        max(np.abs(design.response_gram)[mask].max(initial=0.0) for design in designs)
    )


def _log_det_covariance(residuals: np.ndarray) -> float:
    sigma = residuals.T @ residuals / residuals.shape[0]
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        raise SingularRegressionError("Residual covariance is singular")
    return float(logdet)


def select_order(panel: ReturnPanel, p_max: int) -> int:
    """
    Lag order minimizing the summed per-class least-squares BIC

    Every candidate P in 1..p_max is fitted on the same N = T - p_max rows;
    BIC_k = N log|Sigma_k| + log(N) J^2 P. Ties go to the smaller P.

    Raises
    ------
    InsufficientObservationsError
        Too few observations for the p_max design.
    """
    if p_max < 1:
        msg = f"p_max must be at least 1, got {p_max}"
        raise ConfigurationError(msg)
    n_series = panel.n_series
    n_rows = panel.n_periods - p_max
    if n_rows <= n_series * p_max:
        msg = (
            f"Order selection up to P={p_max} needs more than "
            f"{n_series * p_max + p_max} observations, got {panel.n_periods}"
        )
        raise InsufficientObservationsError(msg)
    designs = build_lagged_design(panel, p_max)
    scores = []
    for lag_order in range(1, p_max + 1):
        score = 0.0
        for design in designs:
            x = design.predictors[:, : n_series * lag_order]
            b, *_ = np.linalg.lstsq(x, design.responses, rcond=None)
            residuals = design.responses - x @ b
            score += n_rows * _log_det_covariance(residuals) + np.log(n_rows) * (
                n_series**2 * lag_order
            )
        scores.append(score)
        logger.debug("order %d BIC %.6f", lag_order, score)
    return int(np.argmin(scores)) + 1


def _merged_count(values: np.ndarray, tol: float) -> int:
    """
    Distinct values along the class axis after merging near-equal ones
    """
    if values.size == 0:
        return 0
    ordered = np.sort(values, axis=0)
    new_group = np.diff(ordered, axis=0) >= tol
    return int(values.shape[1] + new_group.sum())


def degrees_of_freedom(
    coefficients: np.ndarray,
    precisions: np.ndarray,
    tol: float = fusion_merge_tolerance,
) -> int:
    """
    Parameter count with fused cross-class values counted once

    Counts, position by position, the distinct non-zero coefficient values
    across classes, the distinct non-zero upper off-diagonal precision
    values and the distinct precision diagonal values.
    """
    n_classes, n_series = precisions.shape[:2]
    total = 0
    flat = coefficients.reshape(n_classes, -1)
    for column in flat.T:
        nonzero = column[column != 0]
        total += _merged_count(nonzero[:, None], tol)
    upper = np.triu_indices(n_series, k=1)
    for column in precisions[:, upper[0], upper[1]].T:
        nonzero = column[column != 0]
        total += _merged_count(nonzero[:, None], tol)
    diagonal = np.einsum("kii->ki", precisions)
    total += _merged_count(diagonal, tol)
    return total


def bic(
    coefficients: np.ndarray,
    precisions: np.ndarray,
    designs: Sequence[LaggedDesign],
    tol: float = fusion_merge_tolerance,
) -> tuple[float, int]:
    """
    Multi-class BIC, sum_k N log|Sigma_k| + log(N) df, and its df
    """
    covariances, n_obs = residual_covariances(coefficients, designs)
    df = degrees_of_freedom(coefficients, precisions, tol)
    fit_term = 0.0
    for sigma, n in zip(covariances, n_obs):
        sign, logdet = np.linalg.slogdet(sigma)
        if sign <= 0:
            raise SingularRegressionError("Residual covariance is singular")
        fit_term += n * logdet
    return float(fit_term + np.log(n_obs.mean()) * df), df


def penalty_grid(
    panel: ReturnPanel, lag_order: int, grid: GridSpec
) -> list[list[PenaltyConfig]]:
    """
    Grid points as lambda1 paths, each ordered from large to small lambda1

    One path per (lambda2, lambda3, lambda4) factor combination.
    """
    if grid.points is not None:
        return [[point] for point in grid.points]
    l1_max = lambda1_max(panel, lag_order)
    l3_max = lambda3_max(panel, lag_order)
    lambda1_values = sorted({l1_max * f for f in grid.lambda1}, reverse=True)
    paths = []
    for f2, f3, f4 in itertools.product(grid.lambda2, grid.lambda3, grid.lambda4):
        lambda3 = l3_max * f3
        paths.append(
            [
                PenaltyConfig(
                    lambda1=lambda1,
                    lambda2=lambda1 * f2,
                    lambda3=lambda3,
                    lambda4=lambda3 * f4,
                )
                for lambda1 in lambda1_values
            ]
        )
    return paths


def _run_path(
    designs: Sequence[LaggedDesign],
    path: list[PenaltyConfig],
    options: FitOptions,
) -> list[dict[str, float | int | bool]]:
    rows = []
    coefficients = precisions = None
    for penalty in path:
        coefficients, precisions, diagnostics = fit_designs(
            designs,
            penalty,
            options,
            warm_coefficients=coefficients,
            warm_precisions=precisions,
        )
        score, df = bic(coefficients, precisions, designs, options.merge_tolerance)
        logger.debug(
            "grid point %s BIC %.6f df %d", penalty.weights, score, df
        )
        rows.append(
            {
                **penalty.weights,
                "bic": score,
                "df": df,
                "nonzero": int(np.count_nonzero(coefficients)),
                "converged": diagnostics.converged,
            }
        )
    return rows


def select_penalties(
    panel: ReturnPanel,
    lag_order: int,
    grid: GridSpec | None = None,
    options: FitOptions | None = None,
) -> SelectionResult:
    """
    Grid search of the four penalty weights by multi-class BIC

    Each lambda1 path runs from large to small lambda1 with warm starts and
    the looser `FitOptions.screening()` settings;
    paths may run concurrently on `options.threads` workers, but rows are
    collected in grid order and BIC ties resolve to the first grid point.
    The winning configuration is refitted from a cold start.

    Raises
    ------
    EmptyGridError
        The grid holds no points.
    NotStandardizedError
        The panel is not standardized.

    Returns
    -------
    SelectionResult
    """
    options = options or FitOptions()
    grid = grid or options.grid
    _check_standardized(panel)
    designs = build_lagged_design(panel, lag_order)
    paths = penalty_grid(panel, lag_order, grid)
    if not paths or not any(paths):
        raise EmptyGridError("The penalty grid holds no points")
    screening = options.screening()
    if options.threads > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=options.threads) as pool:
            results = list(
                pool.map(lambda path: _run_path(designs, path, screening), paths)
            )
    else:
        results = [_run_path(designs, path, screening) for path in paths]
    table = pd.DataFrame([row for rows in results for row in rows])
    best = int(table["bic"].to_numpy().argmin())
    winner = table.iloc[best]
    penalty = PenaltyConfig(
        lambda1=float(winner["lambda1"]),
        lambda2=float(winner["lambda2"]),
        lambda3=float(winner["lambda3"]),
        lambda4=float(winner["lambda4"]),
    )
    logger.info(
        "selected penalties lambda1=%.6g lambda2=%.6g lambda3=%.6g lambda4=%.6g",
        penalty.lambda1,
        penalty.lambda2,
        penalty.lambda3,
        penalty.lambda4,
    )
    table["selected"] = np.arange(len(table)) == best
    return SelectionResult(
        penalty=penalty,
        fit=fit(panel, lag_order, penalty, options),
        grid=table,
    )

