"""
mcvar.exceptions

Every error carries the exit code the command line reports for it.
"""

from __future__ import annotations

from typing import ClassVar


class McVarError(Exception):
    """
    Base mcvar Error
    """

    exit_code: ClassVar[int] = 1


class ConfigurationError(McVarError):
    """
    Inconsistent or Invalid Run Configuration
    """


class InvalidPenaltyError(ConfigurationError):
    """
    Negative or Non-Finite Regularization Weight
    """


class EmptyGridError(ConfigurationError):
    """
    Penalty Grid Without Points
    """


class DataError(McVarError):
    """
    Input Data Error
    """

    exit_code: ClassVar[int] = 2


class PanelFormatError(DataError):
    """
    Panel File Does Not Follow the Long Schema
    """


class DateParseError(DataError):
    """
    Unparseable Calendar Date
    """


class MissingValueError(DataError):
    """
    Missing (class, series, date) Cell
    """


class NonPositivePriceError(DataError):
    """
    Price Not Strictly Positive
    """


class InconsistentSeriesError(DataError):
    """
    Classes Do Not Hold the Same Series
    """


class ZeroVarianceError(DataError):
    """
    Constant Series Cannot Be Standardized
    """

    def __init__(self, class_id: str, series_id: str) -> None:
        self.class_id = class_id
        self.series_id = series_id
        super().__init__(
            f"Series `{series_id}` of class `{class_id}` has zero variance"
        )


class SeriesTooShortError(DataError):
    """
    Too Few Observations for the Requested Operation
    """


class InsufficientObservationsError(DataError):
    """
    Too Few Observations for the Lag Order
    """


class NotStandardizedError(DataError):
    """
    Estimator Input Is Not Standardized
    """


class FitFormatError(DataError):
    """
    Malformed Fit Document
    """


class ModelError(McVarError):
    """
    Invalid Model Specification
    """

    exit_code: ClassVar[int] = 2


class DimensionError(ModelError):
    """
    Array Dimensions Do Not Agree
    """


class UnstableModelError(ModelError):
    """
    Coefficients Outside the Stationary Region
    """


class NotPositiveDefiniteError(ModelError):
    """
    Matrix Not Positive Definite
    """


class SingularRegressionError(ModelError):
    """
    Rank Deficient Regression Design
    """


class ClassNotFoundError(ModelError):
    """
    Unknown Class Index or Identifier
    """


class NodeMismatchError(ModelError):
    """
    Networks Over Different Node Sets
    """


class UntypedNodeError(ModelError):
    """
    Node Without a Commodity Type
    """


class SolverError(McVarError):
    """
    Numerical Solver Failure
    """

    exit_code: ClassVar[int] = 2


class SolverDivergenceError(SolverError):
    """
    Objective Became Non-Finite
    """


class NonSymmetricError(SolverError):
    """
    Covariance Input Is Not Symmetric
    """
