"""
Synthetic Multi-class VAR Panels

Generates stationary panels with known sparse coefficients, used by the
`simulate` command and as ground truth when checking the estimator.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from mcvar.config import burn_in, commodity_types
from mcvar.exceptions import (
    ConfigurationError,
    DimensionError,
    NotPositiveDefiniteError,
    UnstableModelError,
)
from mcvar.panel import PricePanel, ReturnPanel

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Simulation:
    """
    A simulated panel together with the model that generated it

    `panel` holds the raw (unstandardized) observations.
    """

    panel: ReturnPanel
    coefficients: np.ndarray
    covariances: np.ndarray

    @property
    def support(self) -> np.ndarray:
        """
        Boolean K x J x JP mask of the non-zero true coefficients
        """
        return self.coefficients != 0

    def to_dict(self) -> dict[str, object]:
        """
        Ground truth as a JSON-ready document
        """
        n_series = self.panel.n_series
        n_lags = self.coefficients.shape[2] // n_series
        return {
            "classes": list(self.panel.classes),
            "series": [
                {"id": series_id, "type": series_type}
                for series_id, series_type in zip(self.panel.series, self.panel.types)
            ],
            "lags": n_lags,
            "coefficients": [
                b.reshape(n_series, n_lags, n_series).swapaxes(0, 1).tolist()
                for b in self.coefficients
            ],
            "covariances": self.covariances.tolist(),
        }


def companion_matrix(coefficients: np.ndarray) -> np.ndarray:
    """
    JP x JP companion form of a J x JP coefficient matrix
    """
    n_series, n_predictors = coefficients.shape
    companion = np.zeros((n_predictors, n_predictors))
    companion[:n_series] = coefficients
    companion[n_series:, :-n_series] = np.eye(n_predictors - n_series)
    return companion


def spectral_radius(coefficients: np.ndarray) -> float:
    """
    Largest eigenvalue modulus of the companion form
    """
    return float(np.abs(np.linalg.eigvals(companion_matrix(coefficients))).max())


def _validate_model(coefficients: np.ndarray, covariances: np.ndarray) -> list[np.ndarray]:
    if coefficients.ndim != 3 or covariances.ndim != 3:  # noqa: PLR2004
        raise DimensionError("Expected K x J x JP coefficients and K x J x J covariances")
    n_classes, n_series, n_predictors = coefficients.shape
    if n_predictors % n_series or covariances.shape != (n_classes, n_series, n_series):
        msg = (
            f"Coefficients {coefficients.shape} and covariances "
            f"{covariances.shape} do not describe the same model"
        )
        raise DimensionError(msg)
    factors = []
    for k in range(n_classes):
        radius = spectral_radius(coefficients[k])
        if radius >= 1:
            msg = f"Class {k} is not stationary, companion spectral radius {radius:.4f}"
            raise UnstableModelError(msg)
        sigma = covariances[k]
        if np.abs(sigma - sigma.T).max() > 1e-10:
            msg = f"Error covariance of class {k} is not symmetric"
            raise NotPositiveDefiniteError(msg)
        try:
            factors.append(np.linalg.cholesky(sigma))
        except np.linalg.LinAlgError as e:
            msg = f"Error covariance of class {k} is not positive definite"
            raise NotPositiveDefiniteError(msg) from e
    return factors


def simulate_panel(
    coefficients: np.ndarray,
    covariances: np.ndarray,
    n_periods: int,
    seed: int | None = None,
    classes: Sequence[str] | None = None,
    series: Sequence[str] | None = None,
    types: Sequence[str] | None = None,
    start: str = "2000-01-03",
) -> Simulation:
    """
    Draw a Multi-class VAR panel

    y_t = sum_p B_p y_{t-p} + e_t with e_t ~ N(0, Sigma) for every class,
    started at zero and run for a burn-in before the kept observations.

    Parameters
    ----------
    coefficients: np.ndarray
        K x J x JP true coefficients.
    covariances: np.ndarray
        K x J x J true error covariances.
    n_periods: int
        Number of observations T kept after the burn-in.
    seed: int | None
        Seed of the generator owned by this call.
    classes, series, types: Sequence[str] | None
        Identifiers, generated when omitted.
    start: str
        First business day of the calendar.

    Raises
    ------
    UnstableModelError
        Some class has companion spectral radius >= 1.
    NotPositiveDefiniteError
        Some error covariance is not positive definite.

    Returns
    -------
    Simulation
    """
    coefficients = np.asarray(coefficients, dtype=float)
    covariances = np.asarray(covariances, dtype=float)
    factors = _validate_model(coefficients, covariances)
    if n_periods < 1:
        msg = f"Need at least one period, got {n_periods}"
        raise ConfigurationError(msg)
    n_classes, n_series, n_predictors = coefficients.shape
    n_lags = n_predictors // n_series
    rng = np.random.default_rng(seed)
    total = n_periods + burn_in
    values = np.empty((n_classes, n_series, n_periods))
    for k in range(n_classes):
        shocks = rng.standard_normal((total, n_series)) @ factors[k].T
        path = np.zeros((total + n_lags, n_series))
        for t in range(n_lags, total + n_lags):
            lags = path[t - n_lags : t][::-1].reshape(-1)
            path[t] = coefficients[k] @ lags + shocks[t - n_lags]
        values[k] = path[-n_periods:].T
    panel = ReturnPanel(
        classes=list(classes or [f"class{k + 1}" for k in range(n_classes)]),
        series=list(series or [f"s{j + 1:02d}" for j in range(n_series)]),
        types=list(types or _default_types(n_series)),
        dates=pd.bdate_range(start=start, periods=n_periods + 1)[1:],
        values=values,
    )
    return Simulation(panel=panel, coefficients=coefficients, covariances=covariances)


def _default_types(n_series: int) -> list[str]:
    labels = commodity_types[1:] or commodity_types
    return [labels[j % len(labels)] for j in range(n_series)]


def random_sparse_coefficients(
    n_series: int,
    n_classes: int,
    n_lags: int = 1,
    density: float = 0.1,
    seed: int | None = None,
    shared: bool = True,
    spectral_radius_max: float = 0.9,
) -> np.ndarray:
    """
    Random stationary sparse coefficients

    Non-zero entries are drawn with probability `density`, magnitudes in
    [0.2, 0.5] with random signs. With `shared` every class receives the
    same matrix. Each class is shrunk until its companion spectral radius
    is below `spectral_radius_max`.

    Returns
    -------
    np.ndarray
        K x J x JP coefficients.
    """
    if not 0 <= density <= 1:
        msg = f"Density must lie in [0, 1], got {density}"
        raise ConfigurationError(msg)
    if not 0 < spectral_radius_max < 1:
        msg = f"Spectral radius bound must lie in (0, 1), got {spectral_radius_max}"
        raise ConfigurationError(msg)
    rng = np.random.default_rng(seed)
    shape = (n_series, n_series * n_lags)

    def draw() -> np.ndarray:
        mask = rng.random(shape) < density
        magnitude = rng.uniform(0.2, 0.5, shape)
        sign = rng.choice([-1.0, 1.0], size=shape)
        b = np.where(mask, magnitude * sign, 0.0)
        while spectral_radius(b) >= spectral_radius_max:
            b = b * 0.9
        return b

    if shared:
        b = draw()
        return np.stack([b.copy() for _ in range(n_classes)])
    return np.stack([draw() for _ in range(n_classes)])


def prices_from_returns(
    simulation: Simulation, return_scale: float = 0.01, start_price: float = 100.0
) -> PricePanel:
    """
    Price panel whose log-differences are the scaled simulated observations

    The calendar gains one leading business day holding `start_price`.
    """
    panel = simulation.panel
    log_prices = np.concatenate(
        [
            np.zeros((panel.n_classes, panel.n_series, 1)),
            np.cumsum(panel.values * return_scale, axis=2),
        ],
        axis=2,
    )
    first = panel.dates[0] - pd.offsets.BDay(1)
    return PricePanel(
        classes=list(panel.classes),
        series=list(panel.series),
        types=list(panel.types),
        dates=pd.DatetimeIndex([first]).append(panel.dates),
        values=start_price * np.exp(log_prices),
    )
