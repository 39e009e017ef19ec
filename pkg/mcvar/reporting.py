"""
Console Reporting

Logging setup and rich tables for the command line.
"""

from __future__ import annotations

import logging

import pandas as pd
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table
from rich.traceback import install

from mcvar.model import MultiClassVarFit

logger = logging.getLogger(__name__)


def setup_logging(debug: bool = False) -> None:
    """
    Route the `mcvar` loggers through rich on stderr
    """
    package_logger = logging.getLogger("mcvar")
    for handler in list(package_logger.handlers):
        if isinstance(handler, RichHandler):
            package_logger.removeHandler(handler)
    handler = RichHandler(
        console=Console(stderr=True),
        show_path=debug,
        rich_tracebacks=debug,
        markup=False,
    )
    handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
    package_logger.addHandler(handler)
    package_logger.setLevel(logging.DEBUG if debug else logging.INFO)
    if debug:
        install(show_locals=True)


def adf_report_table(table: pd.DataFrame) -> Table:
    """
    Per-series ADF statistics
    """
    report = Table(title="Augmented Dickey-Fuller", box=None, header_style="bold green")
    for column in ["class", "series", "statistic", "pvalue", "lags", "5%"]:
        report.add_column(column, justify="left" if column in ("class", "series") else "right")
    for row in table.itertuples(index=False):
        report.add_row(
            str(row[0]),
            str(row[1]),
            f"{row.statistic:.3f}",
            f"{row.pvalue:.4f}",
            str(row.lags),
            "reject" if row.reject_5 else "[red]keep[/red]",
        )
    return report


def pooled_summary(rejections: int, total: int, level: str = "5%") -> str:
    """
    One-line pooled ADF summary
    """
    return f"Unit root rejected at {level} for {rejections} of {total} series"


def convergence_frame(fit: MultiClassVarFit) -> pd.DataFrame:
    """
    One row per outer iteration, row 0 being the initialization
    """
    diagnostics = fit.diagnostics
    n_rows = len(diagnostics.objective_trace)

    def pad(values: list[float] | list[int]) -> list[float | int | None]:
        return [None, *values] + [None] * (n_rows - 1 - len(values))

    return pd.DataFrame(
        {
            "iteration": range(n_rows),
            "objective": diagnostics.objective_trace,
            "coefficient_change": pad(diagnostics.coefficient_changes),
            "precision_change": pad(diagnostics.precision_changes),
            "spg_iterations": pd.array(pad(diagnostics.spg_iterations), dtype="Int64"),
            "admm_iterations": pd.array(pad(diagnostics.admm_iterations), dtype="Int64"),
        }
    )


def spg_trace_frame(fit: MultiClassVarFit) -> pd.DataFrame:
    """
    Iterations of the last coefficient step
    """
    return pd.DataFrame(
        fit.diagnostics.spg_trace, columns=["iteration", "objective", "step"]
    )


def fit_summary_table(fit: MultiClassVarFit) -> Table:
    """
    Penalty weights and per-class sparsity of a fit
    """
    report = Table(
        title=f"Multi-class VAR({fit.lag_order})", box=None, header_style="bold green"
    )
    report.add_column("class")
    report.add_column("non-zero coefficients", justify="right")
    report.add_column("non-zero precision off-diagonals", justify="right")
    for k, class_id in enumerate(fit.classes):
        omega = fit.precisions[k]
        off_diagonal = int((omega != 0).sum() - (omega.diagonal() != 0).sum())
        report.add_row(
            class_id,
            str(int((fit.coefficients[k] != 0).sum())),
            str(off_diagonal // 2),
        )
    weights = ", ".join(f"{name}={value:.4g}" for name, value in fit.penalty.weights.items())
    report.caption = (
        f"{weights}; {fit.diagnostics.outer_iterations} outer iterations, "
        f"{'converged' if fit.converged else 'not converged'}"
    )
    return report
