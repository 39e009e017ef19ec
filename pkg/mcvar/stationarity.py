"""
Augmented Dickey-Fuller Stationarity Checks
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import ClassVar, Sequence

import numpy as np
import pandas as pd

from mcvar.config import adf_min_length
from mcvar.exceptions import (
    ConfigurationError,
    MissingValueError,
    SeriesTooShortError,
    SingularRegressionError,
)
from mcvar.panel import ReturnPanel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdfResult:
    """
    Augmented Dickey-Fuller Test Result
    """

    statistic: float
    pvalue: float
    lags: int
    nobs: int
    critical_values: dict[str, float]

    levels: ClassVar[tuple[str, ...]] = ("1%", "5%", "10%")

    @property
    def reject(self) -> dict[str, bool]:
        """
        Unit-root rejection at each tabulated significance level
        """
        return {
            level: bool(self.statistic < value)
            for level, value in self.critical_values.items()
        }


@lru_cache(maxsize=1)
def critical_value_table() -> pd.DataFrame:
    """
    Bundled Dickey-Fuller quantiles, indexed by sample size (0 = asymptotic)
    """
    source = resources.files("mcvar.data").joinpath("adf_critical_values.csv")
    with source.open("r", encoding="utf-8") as buf:
        table = pd.read_csv(buf, comment="#", index_col="n")
    table.columns = [float(column) for column in table.columns]
    return table


def _quantiles_at(nobs: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Quantiles interpolated linearly in 1/n between tabulated sample sizes
    """
    table = critical_value_table()
    inverse_n = np.array([0.0 if n == 0 else 1.0 / n for n in table.index])
    order = np.argsort(inverse_n)
    target = 1.0 / nobs
    probabilities = np.array(table.columns, dtype=float)
    quantiles = np.array(
        [
            np.interp(target, inverse_n[order], table[column].to_numpy()[order])
            for column in table.columns
        ]
    )
    return probabilities, quantiles


def _pvalue(statistic: float, probabilities: np.ndarray, quantiles: np.ndarray) -> float:
    """
    Linear interpolation in the quantile table, end segments extrapolated
    """
    if statistic < quantiles[0]:
        slope = (probabilities[1] - probabilities[0]) / (quantiles[1] - quantiles[0])
        pvalue = probabilities[0] - (quantiles[0] - statistic) * slope
    elif statistic > quantiles[-1]:
        slope = (probabilities[-1] - probabilities[-2]) / (
            quantiles[-1] - quantiles[-2]
        )
        pvalue = probabilities[-1] + (statistic - quantiles[-1]) * slope
    else:
        pvalue = float(np.interp(statistic, quantiles, probabilities))
    return float(np.clip(pvalue, 0.0, 1.0))


def schwert_lag(n_obs: int) -> int:
    """
    Schwert rule lag order floor(12 * (T / 100) ** (1/4))
    """
    return int(np.floor(12 * (n_obs / 100) ** 0.25))


def adf_test(series: Sequence[float] | np.ndarray, max_lag: int | None = None) -> AdfResult:
    """
    Augmented Dickey-Fuller test with a constant and no trend

    The regression is dy_t = a + g * y_{t-1} + sum_i c_i * dy_{t-i} + e_t with
    min(Schwert lag, `max_lag`) lagged differences; the statistic is the
    t-ratio of g.

    Raises
    ------
    SeriesTooShortError
        Fewer than 25 observations, or no residual degrees of freedom.
    SingularRegressionError
        The ADF design is rank deficient (for instance a constant series).
    """
    y = np.asarray(series, dtype=float).ravel()
    if y.size < adf_min_length:
        msg = f"ADF needs at least {adf_min_length} observations, got {y.size}"
        raise SeriesTooShortError(msg)
    if not np.isfinite(y).all():
        raise MissingValueError("ADF input contains non-finite values")
    lags = schwert_lag(y.size)
    if max_lag is not None:
        if max_lag < 0:
            msg = f"max_lag must be non-negative, got {max_lag}"
            raise ConfigurationError(msg)
        lags = min(lags, max_lag)
    dy = np.diff(y)
    n_obs = dy.size - lags
    target = dy[lags:]
    columns = [np.ones(n_obs), y[lags:-1]]
    columns += [dy[lags - lag : dy.size - lag] for lag in range(1, lags + 1)]
    design = np.column_stack(columns)
    dof = n_obs - design.shape[1]
    if dof <= 0:
        msg = f"ADF regression with {lags} lags has no residual degrees of freedom"
        raise SeriesTooShortError(msg)
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise SingularRegressionError("ADF regression design is rank deficient")
    beta, *_ = np.linalg.lstsq(design, target, rcond=None)
    residuals = target - design @ beta
    sigma2 = residuals @ residuals / dof
    covariance = sigma2 * np.linalg.inv(design.T @ design)
    statistic = float(beta[1] / np.sqrt(covariance[1, 1]))
    probabilities, quantiles = _quantiles_at(n_obs)
    critical_values = {
        level: float(np.interp(float(level[:-1]) / 100, probabilities, quantiles))
        for level in AdfResult.levels
    }
    return AdfResult(
        statistic=statistic,
        pvalue=_pvalue(statistic, probabilities, quantiles),
        lags=lags,
        nobs=n_obs,
        critical_values=critical_values,
    )


def adf_table(panel: ReturnPanel, max_lag: int | None = None) -> pd.DataFrame:
    """
    Per-series ADF results of a panel, one row per (class, series)
    """
    rows = []
    for k, class_id in enumerate(panel.classes):
        for j, series_id in enumerate(panel.series):
            result = adf_test(panel.values[k, j], max_lag=max_lag)
            rows.append(
                {
                    "class": class_id,
                    "series": series_id,
                    "statistic": result.statistic,
                    "pvalue": result.pvalue,
                    "lags": result.lags,
                    "nobs": result.nobs,
                    **{
                        f"reject_{level[:-1]}": flag
                        for level, flag in result.reject.items()
                    },
                }
            )
    return pd.DataFrame(rows)


def pooled_rejections(table: pd.DataFrame, level: str = "5%") -> tuple[int, int]:
    """
    Count of series rejecting a unit root at `level`, and the series total
    """
    column = f"reject_{level.rstrip('%')}"
    return int(table[column].sum()), int(len(table))
