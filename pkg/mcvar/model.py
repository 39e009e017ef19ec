"""
Multi-class VAR Model Objects

Coefficient convention: block p of `coefficients[k]` is the J x J lag-(p+1)
matrix whose entry (j, i) is the effect of series i on series j.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import pathlib
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from mcvar.__about__ import __application__, __version__
from mcvar.exceptions import (
    ClassNotFoundError,
    DimensionError,
    FitFormatError,
    InvalidPenaltyError,
    NonSymmetricError,
    NotPositiveDefiniteError,
)
from mcvar.panel import LaggedDesign
from mcvar.solvers.admm import AdmmOptions
from mcvar.solvers.spg import SpgOptions, fusion_penalty
from mcvar.utils import write_json

logger = logging.getLogger(__name__)

FIT_FORMAT = "mcvar-fit"
FIT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class PenaltyConfig:
    """
    Regularization Weights

    Attributes
    ----------
    lambda1: float
        Coefficient lasso weight.
    lambda2: float
        Coefficient fusion weight, over ordered class pairs.
    lambda3: float
        Off-diagonal inverse covariance lasso weight.
    lambda4: float
        Inverse covariance fusion weight, over ordered class pairs.
    spg: SpgOptions | None
        Coefficient solver override for this configuration.
    admm: AdmmOptions | None
        Inverse covariance solver override for this configuration.
    """

    lambda1: float = 0.0
    lambda2: float = 0.0
    lambda3: float = 0.0
    lambda4: float = 0.0
    spg: SpgOptions | None = None
    admm: AdmmOptions | None = None

    def __post_init__(self) -> None:
        for name, value in self.weights.items():
            if not np.isfinite(value) or value < 0:
                msg = f"{name} must be finite and non-negative, got {value}"
                raise InvalidPenaltyError(msg)

    @property
    def weights(self) -> dict[str, float]:
        """
        The four penalty weights by name
        """
        return {
            "lambda1": float(self.lambda1),
            "lambda2": float(self.lambda2),
            "lambda3": float(self.lambda3),
            "lambda4": float(self.lambda4),
        }

    @property
    def couples_classes(self) -> bool:
        """
        Whether any fusion penalty ties the classes together
        """
        return self.lambda2 > 0 or self.lambda4 > 0


@dataclass(frozen=True)
class FitDiagnostics:
    """
    Convergence record of the outer alternation

    Every per-iteration sequence has one entry per outer iteration;
    `objective_trace` additionally starts with the value at initialization.
    """

    objective_trace: list[float] = field(default_factory=list)
    outer_iterations: int = 0
    converged: bool = False
    coefficient_changes: list[float] = field(default_factory=list)
    precision_changes: list[float] = field(default_factory=list)
    spg_iterations: list[int] = field(default_factory=list)
    admm_iterations: list[int] = field(default_factory=list)
    spg_trace: list[tuple[int, float, float]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        """
        JSON-ready representation
        """
        document = dataclasses.asdict(self)
        document["spg_trace"] = [list(row) for row in self.spg_trace]
        return document

    @classmethod
    def from_dict(cls, document: dict[str, Any]) -> FitDiagnostics:
        """
        Rebuild diagnostics from `to_dict` output
        """
        return cls(
            objective_trace=[float(v) for v in document["objective_trace"]],
            outer_iterations=int(document["outer_iterations"]),
            converged=bool(document["converged"]),
            coefficient_changes=[float(v) for v in document["coefficient_changes"]],
            precision_changes=[float(v) for v in document["precision_changes"]],
            spg_iterations=[int(v) for v in document["spg_iterations"]],
            admm_iterations=[int(v) for v in document["admm_iterations"]],
            spg_trace=[
                (int(i), float(value), float(step))
                for i, value, step in document["spg_trace"]
            ],
        )


@dataclass(frozen=True, eq=False)
class MultiClassVarFit:
    """
    Fitted Multi-class VAR

    Attributes
    ----------
    coefficients: np.ndarray
        K x J x (J * P) stack; block p of class k holds the lag-(p+1) effects.
    precisions: np.ndarray
        K x J x J symmetric positive definite inverse error covariances.
    penalty: PenaltyConfig
        Weights the fit was produced with.
    diagnostics: FitDiagnostics
        Outer alternation record.
    classes: list[str]
        Class identifiers.
    series: list[str]
        Series identifiers.
    types: list[str]
        Commodity type of every series.
    """

    coefficients: np.ndarray
    precisions: np.ndarray
    penalty: PenaltyConfig
    diagnostics: FitDiagnostics
    classes: list[str]
    series: list[str]
    types: list[str]

    def __post_init__(self) -> None:
        n_classes, n_series = len(self.classes), len(self.series)
        if self.coefficients.ndim != 3 or self.coefficients.shape[:2] != (  # noqa: PLR2004
            n_classes,
            n_series,
        ):
            msg = f"Coefficients have shape {self.coefficients.shape}"
            raise DimensionError(msg)
        if n_series == 0 or self.coefficients.shape[2] % n_series:
            raise DimensionError("Coefficient columns must be a multiple of J")
        if self.precisions.shape != (n_classes, n_series, n_series):
            msg = f"Precisions have shape {self.precisions.shape}"
            raise DimensionError(msg)
        if len(self.types) != n_series:
            raise DimensionError("Every series needs exactly one commodity type")
        for k, omega in enumerate(self.precisions):
            if np.abs(omega - omega.T).max() > 1e-10:
                msg = f"Precision matrix of class `{self.classes[k]}` is not symmetric"
                raise NonSymmetricError(msg)
            if not np.linalg.eigvalsh(omega)[0] > 0:
                msg = (
                    f"Precision matrix of class `{self.classes[k]}` "
                    "is not positive definite"
                )
                raise NotPositiveDefiniteError(msg)

    @property
    def n_classes(self) -> int:
        """
        Number of classes K
        """
        return len(self.classes)

    @property
    def n_series(self) -> int:
        """
        Number of series J
        """
        return len(self.series)

    @property
    def lag_order(self) -> int:
        """
        VAR order P
        """
        return self.coefficients.shape[2] // self.n_series

    @property
    def converged(self) -> bool:
        """
        Whether the outer alternation met its tolerance
        """
        return self.diagnostics.converged

    def class_index(self, class_id: str | int) -> int:
        """
        Position of a class, given its identifier or its index
        """
        if isinstance(class_id, (int, np.integer)) and not isinstance(class_id, bool):
            if 0 <= class_id < self.n_classes:
                return int(class_id)
        elif class_id in self.classes:
            return self.classes.index(class_id)
        msg = f"Unknown class `{class_id}`, expected one of {self.classes}"
        raise ClassNotFoundError(msg)

    def lag_blocks(self, class_id: str | int) -> np.ndarray:
        """
        P x J x J lag matrices of one class
        """
        b = self.coefficients[self.class_index(class_id)]
        return b.reshape(self.n_series, self.lag_order, self.n_series).swapaxes(0, 1)

    def effect_sums(self, class_id: str | int) -> np.ndarray:
        """
        Sum over lags of the coefficient matrices, entry (j, i) for i -> j
        """
        return self.lag_blocks(class_id).sum(axis=0)

    def covariances(self) -> np.ndarray:
        """
        Error covariances, the inverses of the precisions
        """
        return np.linalg.inv(self.precisions)

    def nonzero_coefficients(self) -> int:
        """
        Count of non-zero coefficients over all classes
        """
        return int(np.count_nonzero(self.coefficients))

    def to_dict(self) -> dict[str, Any]:
        """
        JSON document with dense lag blocks and lower-triangular precisions
        """
        lower = np.tril_indices(self.n_series)
        return {
            "format": FIT_FORMAT,
            "format_version": FIT_FORMAT_VERSION,
            "generator": f"{__application__} {__version__}",
            "dimensions": {
                "classes": self.n_classes,
                "series": self.n_series,
                "lags": self.lag_order,
            },
            "series": [
                {"id": series_id, "type": series_type}
                for series_id, series_type in zip(self.series, self.types)
            ],
            "penalty": self.penalty.weights,
            "classes": [
                {
                    "id": class_id,
                    "coefficients": self.lag_blocks(k).tolist(),
                    "precision_lower": [
                        float(v) for v in self.precisions[k][lower]
                    ],
                }
                for k, class_id in enumerate(self.classes)
            ],
            "diagnostics": self.diagnostics.to_dict(),
        }

    @classmethod
    def from_dict(cls, document: dict[str, Any]) -> MultiClassVarFit:
        """
        Rebuild a fit from `to_dict` output

        Raises
        ------
        FitFormatError
            The document is not a well formed fit.
        """
        try:
            if document.get("format") != FIT_FORMAT:
                msg = f"Not a {FIT_FORMAT} document"
                raise FitFormatError(msg)
            dims = document["dimensions"]
            n_series, n_lags = int(dims["series"]), int(dims["lags"])
            lower = np.tril_indices(n_series)
            coefficients, precisions = [], []
            for entry in document["classes"]:
                blocks = np.asarray(entry["coefficients"], dtype=float)
                if blocks.shape != (n_lags, n_series, n_series):
                    msg = f"Class `{entry['id']}` has lag blocks of shape {blocks.shape}"
                    raise FitFormatError(msg)
                coefficients.append(np.concatenate(list(blocks), axis=1))
                omega = np.zeros((n_series, n_series))
                omega[lower] = np.asarray(entry["precision_lower"], dtype=float)
                precisions.append(omega + np.tril(omega, -1).T)
            if len(coefficients) != int(dims["classes"]):
                raise FitFormatError("Class count disagrees with the dimensions")
            return cls(
                coefficients=np.stack(coefficients),
                precisions=np.stack(precisions),
                penalty=PenaltyConfig(**document["penalty"]),
                diagnostics=FitDiagnostics.from_dict(document["diagnostics"]),
                classes=[str(entry["id"]) for entry in document["classes"]],
                series=[str(entry["id"]) for entry in document["series"]],
                types=[str(entry["type"]) for entry in document["series"]],
            )
        except (KeyError, TypeError, ValueError) as e:
            msg = f"Malformed fit document: {e!r}"
            raise FitFormatError(msg) from e


def save_fit(fit: MultiClassVarFit, file_path: str | pathlib.Path) -> pathlib.Path:
    """
    Write a fit as JSON
    """
    return write_json(fit.to_dict(), pathlib.Path(file_path))


def load_fit(file_path: str | pathlib.Path) -> MultiClassVarFit:
    """
    Read a fit written by `save_fit`
    """
    path = pathlib.Path(file_path)
    if not path.exists():
        msg = f"No such file: {path}"
        raise FileNotFoundError(msg)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        msg = f"{path} is not valid JSON: {e}"
        raise FitFormatError(msg) from e
    if not isinstance(document, dict):
        msg = f"{path} does not hold a fit document"
        raise FitFormatError(msg)
    return MultiClassVarFit.from_dict(document)


def off_diagonal_l1(precisions: np.ndarray) -> float:
    """
    sum_k sum_{i != j} |Omega_k,ij|
    """
    mask = ~np.eye(precisions.shape[-1], dtype=bool)
    return float(np.abs(precisions[:, mask]).sum())


def log_determinants(precisions: np.ndarray) -> np.ndarray:
    """
    log|Omega_k| of every class

    Raises
    ------
    NotPositiveDefiniteError
        Some Omega_k is not positive definite.
    """
    signs, logdets = np.linalg.slogdet(precisions)
    if (signs <= 0).any() or any(
        np.linalg.eigvalsh(omega)[0] <= 0 for omega in precisions
    ):
        raise NotPositiveDefiniteError("Log-determinant of a non-positive-definite Omega")
    return logdets


def precision_objective(
    precisions: np.ndarray,
    covariances: np.ndarray,
    n_obs: np.ndarray,
    lambda3: float,
    lambda4: float,
) -> float:
    """
    The inverse covariance part of the penalized criterion

    sum_k n_k (tr(S_k Omega_k) - log|Omega_k|) + lambda3 off-diagonal l1
    + lambda4 fusion over ordered class pairs.
    """
    likelihood = float(
        (
            n_obs
            * (
                np.einsum("kij,kij->k", covariances, precisions)
                - log_determinants(precisions)
            )
        ).sum()
    )
    return (
        likelihood
        + lambda3 * off_diagonal_l1(precisions)
        + lambda4 * fusion_penalty(precisions)
    )


def objective_value(
    coefficients: np.ndarray,
    precisions: np.ndarray,
    designs: Sequence[LaggedDesign],
    penalty: PenaltyConfig,
) -> float:
    """
    Penalized generalized least-squares criterion on raw arrays

    sum_k [sum_t e_t' Omega_k e_t - N log|Omega_k|] + lambda1 |B|_1
    + lambda2 sum_{k != k'} |B_k - B_k'|_1 + lambda3 off-diagonal |Omega|_1
    + lambda4 sum_{k != k'} |Omega_k - Omega_k'|_1.
    The log-determinant enters once per observation.
    """
    if len(designs) != coefficients.shape[0] or precisions.shape[0] != len(designs):
        msg = f"{len(designs)} designs for {coefficients.shape[0]} coefficient blocks"
        raise DimensionError(msg)
    logdets = log_determinants(precisions)
    total = 0.0
    for k, design in enumerate(designs):
        residuals = design.responses - design.predictors @ coefficients[k].T
        if residuals.shape[1] != precisions.shape[1]:
            raise DimensionError("Precision dimension does not match the design")
        quadratic = float(np.einsum("ti,ij,tj->", residuals, precisions[k], residuals))
        total += quadratic - design.n_obs * float(logdets[k])
    return (
        total
        + penalty.lambda1 * float(np.abs(coefficients).sum())
        + penalty.lambda2 * fusion_penalty(coefficients)
        + penalty.lambda3 * off_diagonal_l1(precisions)
        + penalty.lambda4 * fusion_penalty(precisions)
    )


def objective(
    fit: MultiClassVarFit,
    designs: Sequence[LaggedDesign],
    penalty: PenaltyConfig | None = None,
) -> float:
    """
    Penalized criterion of a fit, with its own penalty unless one is given
    """
    return objective_value(
        fit.coefficients, fit.precisions, designs, penalty or fit.penalty
    )


def count_parameters(n_series: int, n_classes: int, n_lags: int) -> tuple[int, int]:
    """
    Coefficients K * J^2 * P and unique precision entries K * J (J + 1) / 2
    """
    for name, value in (("J", n_series), ("K", n_classes), ("P", n_lags)):
        if int(value) != value or value < 1:
            msg = f"{name} must be a positive integer, got {value}"
            raise DimensionError(msg)
    return (
        n_classes * n_series**2 * n_lags,
        n_classes * n_series * (n_series + 1) // 2,
    )
