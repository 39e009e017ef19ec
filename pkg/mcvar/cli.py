"""
mcvar command line interface
"""

from __future__ import annotations

import contextlib
import logging
import pathlib
from typing import Any, Iterator

import click
import numpy as np
import rich_click
from rich.console import Console

from mcvar.__about__ import __application__, __version__
from mcvar.base import RunConfig, load_config_file
from mcvar.estimator import fit, select_order, select_penalties
from mcvar.exceptions import McVarError
from mcvar.export import connectedness_tables, to_dot, to_json
from mcvar.model import load_fit, save_fit
from mcvar.network import (
    build_networks,
    network_summary,
    shared_effects,
    type_effects,
)
from mcvar.panel import load_panel, load_returns, log_diff, standardize
from mcvar.reporting import (
    adf_report_table,
    convergence_frame,
    fit_summary_table,
    pooled_summary,
    setup_logging,
    spg_trace_frame,
)
from mcvar.simulate import prices_from_returns, random_sparse_coefficients, simulate_panel
from mcvar.stationarity import adf_table, pooled_rejections
from mcvar.utils import safe_filename, write_json, write_table

rich_click.rich_click.MAX_WIDTH = 100
rich_click.rich_click.STYLE_OPTION = "bold green"
rich_click.rich_click.STYLE_SWITCH = "bold blue"
rich_click.rich_click.STYLE_METAVAR = "bold red"
rich_click.rich_click.STYLE_HELPTEXT_FIRST_LINE = "bold blue"
rich_click.rich_click.STYLE_HELPTEXT = ""
rich_click.rich_click.STYLE_HEADER_TEXT = "bold green"
rich_click.rich_click.STYLE_OPTION_DEFAULT = "bold yellow"
rich_click.rich_click.STYLE_OPTION_HELP = ""
rich_click.rich_click.STYLE_ERRORS_SUGGESTION = "bold red"
rich_click.rich_click.STYLE_OPTIONS_TABLE_BOX = "SIMPLE_HEAVY"
rich_click.rich_click.STYLE_COMMANDS_TABLE_BOX = "SIMPLE_HEAVY"

logger = logging.getLogger(__name__)
console = Console()

NON_CONVERGENCE_EXIT_CODE = 3


class McVarCommandError(click.ClickException):
    """
    A library error surfaced with its exit code
    """

    def __init__(self, message: str, exit_code: int) -> None:
        super().__init__(message)
        self.exit_code = exit_code


@contextlib.contextmanager
def _reported_errors() -> Iterator[None]:
    try:
        yield
    except McVarError as e:
        raise McVarCommandError(
            f"{type(e).__name__}: {e}", exit_code=e.exit_code
        ) from e


def _apply_config_file(ctx: click.Context, values: dict[str, Any]) -> None:
    """
    Turn flat config file values into per-command click defaults
    """
    commands = ctx.command.commands if isinstance(ctx.command, click.Group) else {}
    default_map: dict[str, dict[str, Any]] = {}
    for name, command in commands.items():
        params: dict[str, click.Parameter] = {}
        for param in command.params:
            if not param.name:
                continue
            params[param.name] = param
            for opt in param.opts:
                params.setdefault(opt.lstrip("-").replace("-", "_"), param)
        command_defaults = {}
        for key, value in values.items():
            param = params.get(key)
            if param is None:
                continue
            if getattr(param, "multiple", False):
                value = [item.strip() for item in str(value).split(",") if item.strip()]
            command_defaults[param.name] = value
        default_map[name] = command_defaults
    ctx.default_map = default_map


@click.group(name="mcvar", cls=rich_click.rich_command.RichGroup)
@click.version_option(version=__version__, prog_name=__application__)
@click.option(
    "--config",
    "config_file",
    default=None,
    type=click.Path(exists=True, dir_okay=False, path_type=pathlib.Path),
    help="Flat key=value file with option defaults",
    envvar="MCVAR_CONFIG",
    show_envvar=True,
)
@click.option(
    "--debug/--no-debug",
    default=False,
    help="Enable extra debugging output",
    type=click.BOOL,
    envvar="MCVAR_DEBUG",
    show_envvar=True,
)
@click.pass_context
def cli(ctx: click.Context, config_file: pathlib.Path | None, debug: bool) -> None:
    """
    mcvar 📈 sparse Multi-class VAR models and commodity effect networks

    Turn price panels into standardized returns, estimate lasso and fusion
    penalized Multi-class VAR models jointly with fused graphical lasso
    inverse covariances, and export the resulting directed effect networks
    with their connectedness statistics.

    \f

    ## Usage Examples

    ```shell
    mcvar simulate --out-dir sim --seed 1
    mcvar preprocess --input sim/prices.csv --out-dir prep
    mcvar fit --input prep/returns.csv --out-dir model --p-max 3 --grid
    mcvar network --input model/fit.json --out-dir networks
    ```

    ## Configuration

    Flags override `MCVAR_*` environment variables, which override values
    from the `--config` file, which override built-in defaults.
    """
    setup_logging(debug=debug)
    ctx.obj = {"debug": debug}
    if config_file is not None:
        with _reported_errors():
            _apply_config_file(ctx, load_config_file(config_file))


@cli.command(name="preprocess", cls=rich_click.rich_command.RichCommand)
@click.option(
    "-i",
    "--input",
    "input_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Long-format price file: date, class, series, type, price",
)
@click.option(
    "-o",
    "--out-dir",
    default=".",
    show_default=True,
    type=click.Path(file_okay=False),
    help="Directory receiving returns.csv, standardization.csv and adf.csv",
    envvar="MCVAR_OUT_DIR",
    show_envvar=True,
)
@click.option(
    "--forward-fill/--no-forward-fill",
    default=False,
    help="Carry the last price forward into missing cells",
    envvar="MCVAR_FORWARD_FILL",
    show_envvar=True,
)
@click.option("--start", default=None, help="First date of the window (inclusive)")
@click.option("--end", default=None, help="Last date of the window (inclusive)")
@click.option(
    "--max-adf-lag",
    default=None,
    type=click.IntRange(min=0),
    help="Cap on the Schwert lag order of the ADF regressions",
)
@click.pass_context
def preprocess(
    ctx: click.Context,
    input_path: str,
    out_dir: str,
    forward_fill: bool,
    start: str | None,
    end: str | None,
    max_adf_lag: int | None,
) -> None:
    """
    Log-difference and standardize prices, then test every series for a unit root
    """
    config = RunConfig(
        command="preprocess",
        input_path=input_path,
        out_dir=out_dir,
        debug=ctx.obj["debug"],
        forward_fill=forward_fill,
        start=start,
        end=end,
        max_adf_lag=max_adf_lag,
    )
    with _reported_errors():
        config.validate()
        prices = load_panel(
            input_path, forward_fill=forward_fill, start=start, end=end
        )
        returns = standardize(log_diff(prices))
        adf = adf_table(returns, max_lag=max_adf_lag)
    out = config.out_path
    write_table(returns.to_frame(), out / "returns.csv", config.config_hash)
    write_table(
        returns.standardization_frame(), out / "standardization.csv", config.config_hash
    )
    write_table(adf, out / "adf.csv", config.config_hash)
    console.print(adf_report_table(adf))
    console.print(pooled_summary(*pooled_rejections(adf)))


@cli.command(name="fit", cls=rich_click.rich_command.RichCommand)
@click.option(
    "-i",
    "--input",
    "input_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Standardized returns written by `mcvar preprocess`",
)
@click.option(
    "-o",
    "--out-dir",
    default=".",
    show_default=True,
    type=click.Path(file_okay=False),
    help="Directory receiving fit.json and the diagnostics tables",
    envvar="MCVAR_OUT_DIR",
    show_envvar=True,
)
@click.option("--p", "p", default=None, type=int, help="Fixed VAR order")
@click.option(
    "--p-max",
    default=None,
    type=int,
    help=f"Largest order tried by BIC order selection [default: {RunConfig.default_p_max}]",
)
@click.option("--lambda1", default=None, type=float, help="Coefficient lasso weight")
@click.option("--lambda2", default=None, type=float, help="Coefficient fusion weight")
@click.option("--lambda3", default=None, type=float, help="Precision lasso weight")
@click.option("--lambda4", default=None, type=float, help="Precision fusion weight")
@click.option(
    "--grid/--no-grid",
    default=False,
    help="Select the penalties by BIC over the default grid",
)
@click.option(
    "--threads",
    default=1,
    show_default=True,
    type=int,
    help="Workers for the grid search; 1 keeps results bit-reproducible",
    envvar="MCVAR_THREADS",
    show_envvar=True,
)
@click.option(
    "--seed",
    default=None,
    type=int,
    help="Seed recorded with the run",
    envvar="MCVAR_SEED",
    show_envvar=True,
)
@click.option(
    "--tol-outer",
    default=1e-4,
    show_default=True,
    type=float,
    help="Relative change stopping the outer alternation",
)
@click.option(
    "--max-outer",
    default=25,
    show_default=True,
    type=int,
    help="Outer iteration cap",
)
@click.option(
    "--mu",
    default=1e-4,
    show_default=True,
    type=float,
    help="Smoothing parameter of the coefficient fusion term",
)
@click.option(
    "--rho",
    default=1.0,
    show_default=True,
    type=float,
    help="Initial ADMM penalty parameter",
)
@click.pass_context
def fit_command(
    ctx: click.Context,
    input_path: str,
    out_dir: str,
    p: int | None,
    p_max: int | None,
    lambda1: float | None,
    lambda2: float | None,
    lambda3: float | None,
    lambda4: float | None,
    grid: bool,
    threads: int,
    seed: int | None,
    tol_outer: float,
    max_outer: int,
    mu: float,
    rho: float,
) -> None:
    """
    Estimate a penalized Multi-class VAR from standardized returns

    Without `--p` the order is chosen by BIC up to `--p-max`. Without
    explicit `--lambda1..4` the penalties are chosen by BIC over a grid.
    Exits with code 3, after writing every artifact, when the outer
    alternation stops at its iteration cap.
    """
    config = RunConfig(
        command="fit",
        input_path=input_path,
        out_dir=out_dir,
        debug=ctx.obj["debug"],
        p=p,
        p_max=p_max,
        lambda1=lambda1,
        lambda2=lambda2,
        lambda3=lambda3,
        lambda4=lambda4,
        grid=grid,
        threads=threads,
        seed=seed,
        tol_outer=tol_outer,
        max_outer=max_outer,
        mu=mu,
        rho=rho,
    )
    out = config.out_path
    with _reported_errors():
        config.validate()
        panel = load_returns(input_path)
        lag_order = config.p
        if lag_order is None:
            lag_order = select_order(panel, config.p_max or RunConfig.default_p_max)
            logger.info("selected P=%d", lag_order)
        options = config.fit_options()
        if config.use_grid:
            selection = select_penalties(panel, lag_order, options=options)
            result = selection.fit
            write_table(selection.grid, out / "grid.csv", config.config_hash)
        else:
            result = fit(panel, lag_order, config.penalty(), options)
    save_fit(result, out / "fit.json")
    write_table(convergence_frame(result), out / "convergence.csv", config.config_hash)
    write_table(spg_trace_frame(result), out / "spg_trace.csv", config.config_hash)
    console.print(fit_summary_table(result))
    if not result.converged:
        raise McVarCommandError(
            f"Outer alternation did not converge within {config.max_outer} iterations; "
            f"artifacts were written to {out}",
            exit_code=NON_CONVERGENCE_EXIT_CODE,
        )


@cli.command(name="network", cls=rich_click.rich_command.RichCommand)
@click.option(
    "-i",
    "--input",
    "input_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Fit document written by `mcvar fit`",
)
@click.option(
    "-o",
    "--out-dir",
    default=".",
    show_default=True,
    type=click.Path(file_okay=False),
    help="Directory receiving the graphs and statistics tables",
    envvar="MCVAR_OUT_DIR",
    show_envvar=True,
)
@click.option(
    "-f",
    "--format",
    "formats",
    multiple=True,
    default=("dot", "json", "csv"),
    show_default=True,
    type=click.Choice(["dot", "json", "csv"]),
    help="Artifacts to write, repeat the flag for several",
)
@click.option(
    "--grayscale/--color",
    default=False,
    help="Draw positive and negative effects in gray tones",
)
@click.pass_context
def network(
    ctx: click.Context,
    input_path: str,
    out_dir: str,
    formats: tuple[str, ...],
    grayscale: bool,
) -> None:
    """
    Build per-class effect networks and their connectedness statistics
    """
    config = RunConfig(
        command="network",
        input_path=input_path,
        out_dir=out_dir,
        debug=ctx.obj["debug"],
        formats=sorted(set(formats)),
        grayscale=grayscale,
    )
    out = config.out_path
    with _reported_errors():
        config.validate()
        result = load_fit(input_path)
        networks = build_networks(result)
        type_tables = {net.class_id: type_effects(net) for net in networks}
    for net in networks:
        stem = safe_filename(net.class_id)
        if "dot" in config.formats:
            path = out / f"{stem}.dot"
            out.mkdir(parents=True, exist_ok=True)
            path.write_text(to_dot(net, grayscale=grayscale), encoding="utf-8")
            logger.info("Wrote %s", path)
        if "json" in config.formats:
            write_json(to_json(net), out / f"{stem}.json")
    if "csv" in config.formats:
        for measure, table in connectedness_tables(networks).items():
            write_table(
                table, out / f"connectedness_{measure}.csv", config.config_hash, index=True
            )
        write_table(
            shared_effects(networks), out / "shared_effects.csv", config.config_hash, index=True
        )
        for class_id, table in type_tables.items():
            write_table(
                table,
                out / f"type_effects_{safe_filename(class_id)}.csv",
                config.config_hash,
                index=True,
            )
        write_table(network_summary(networks), out / "network_summary.csv", config.config_hash)


@cli.command(name="simulate", cls=rich_click.rich_command.RichCommand)
@click.option(
    "-o",
    "--out-dir",
    default=".",
    show_default=True,
    type=click.Path(file_okay=False),
    help="Directory receiving prices.csv and truth.json",
    envvar="MCVAR_OUT_DIR",
    show_envvar=True,
)
@click.option("--classes", "n_classes", default=3, show_default=True, type=click.IntRange(min=1))
@click.option("--series", "n_series", default=10, show_default=True, type=click.IntRange(min=1))
@click.option("--lags", "n_lags", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--periods", default=500, show_default=True, type=click.IntRange(min=2))
@click.option(
    "--density",
    default=0.1,
    show_default=True,
    type=click.FloatRange(min=0, max=1),
    help="Share of non-zero true coefficients",
)
@click.option(
    "--shared/--independent",
    default=True,
    help="Give every class the same true coefficients",
)
@click.option(
    "--seed",
    default=0,
    show_default=True,
    type=int,
    help="Seed of the generator; all randomness flows from it",
    envvar="MCVAR_SEED",
    show_envvar=True,
)
@click.pass_context
def simulate(
    ctx: click.Context,
    out_dir: str,
    n_classes: int,
    n_series: int,
    n_lags: int,
    periods: int,
    density: float,
    shared: bool,
    seed: int,
) -> None:
    """
    Write a synthetic price panel from a known sparse Multi-class VAR
    """
    config = RunConfig(
        command="simulate",
        out_dir=out_dir,
        debug=ctx.obj["debug"],
        p=n_lags,
        seed=seed,
        settings={
            "classes": n_classes,
            "series": n_series,
            "periods": periods,
            "density": density,
            "shared": shared,
        },
    )
    out = config.out_path
    with _reported_errors():
        coefficients = random_sparse_coefficients(
            n_series, n_classes, n_lags, density=density, seed=seed, shared=shared
        )
        covariances = np.tile(np.eye(n_series), (n_classes, 1, 1))
        simulation = simulate_panel(
            coefficients, covariances, n_periods=periods, seed=seed
        )
        prices = prices_from_returns(simulation)
    write_table(prices.to_frame(), out / "prices.csv", config.config_hash)
    write_json(simulation.to_dict(), out / "truth.json")
