"""
CLI Tests
"""

from __future__ import annotations

import json
import logging
import pathlib

import numpy as np
import pytest
from click.testing import CliRunner, Result

from mcvar.__about__ import __version__
from mcvar.cli import cli
from tests.conftest import PriceWriter, price_frame


def invoke(runner: CliRunner, *args: str | pathlib.Path) -> Result:
    """
    Run the command line with string arguments
    """
    return runner.invoke(cli, [str(arg) for arg in args])


@pytest.fixture
def prepared(runner: CliRunner, tmp_path: pathlib.Path) -> pathlib.Path:
    """
    Simulated prices run through `preprocess`, returns the output directory
    """
    sim = tmp_path / "sim"
    prep = tmp_path / "prep"
    result = invoke(
        runner,
        "simulate",
        "--out-dir", sim,
        "--classes", "2",
        "--series", "3",
        "--periods", "200",
        "--density", "0.3",
        "--seed", "5",
    )  # fmt: skip
    assert result.exit_code == 0, result.output
    result = invoke(runner, "preprocess", "--input", sim / "prices.csv", "--out-dir", prep)
    assert result.exit_code == 0, result.output
    return prep


def test_cli_main(runner: CliRunner) -> None:
    """
    Test the main CLI help text
    """
    result = invoke(runner, "--help")
    assert result.exit_code == 0
    for command in ("preprocess", "fit", "network", "simulate"):
        assert command in result.output


def test_cli_version(runner: CliRunner) -> None:
    """
    --version prints the package version
    """
    result = invoke(runner, "--version")
    assert result.exit_code == 0
    assert __version__ in result.output


def test_simulate_is_deterministic(runner: CliRunner, tmp_path: pathlib.Path) -> None:
    """
    The same seed writes byte-identical artifacts in any directory
    """
    for name in ("first", "second"):
        result = invoke(
            runner, "simulate", "-o", tmp_path / name, "--series", "4", "--periods", "50"
        )
        assert result.exit_code == 0, result.output
    for artifact in ("prices.csv", "truth.json"):
        first = (tmp_path / "first" / artifact).read_bytes()
        assert first == (tmp_path / "second" / artifact).read_bytes()
    header = (tmp_path / "first" / "prices.csv").read_text().splitlines()[0]
    assert header.startswith(f"# mcvar {__version__} config=")
    truth = json.loads((tmp_path / "first" / "truth.json").read_text())
    assert truth["classes"] == ["class1", "class2", "class3"]


def test_preprocess(prepared: pathlib.Path) -> None:
    """
    preprocess writes returns, moments and ADF results
    """
    for artifact in ("returns.csv", "standardization.csv", "adf.csv"):
        assert (prepared / artifact).exists()
    adf = (prepared / "adf.csv").read_text().splitlines()
    assert adf[1].startswith("class,series,statistic,pvalue")
    assert len(adf) == 2 + 6


def test_preprocess_zero_variance(
    runner: CliRunner,
    write_prices: PriceWriter,
    random_prices: np.ndarray,
    tmp_path: pathlib.Path,
) -> None:
    """
    A constant series is a data error with exit code 2
    """
    random_prices[0, 2] = 10.0
    path = write_prices(price_frame(random_prices))
    result = invoke(runner, "preprocess", "-i", path, "-o", tmp_path / "out")
    assert result.exit_code == 2
    assert "ZeroVarianceError" in result.output
    assert "gold" in result.output


def test_fit_with_explicit_penalties(
    runner: CliRunner,
    prepared: pathlib.Path,
    tmp_path: pathlib.Path,
    caplog: pytest.LogCaptureFixture,
) -> None:
    """
    fit selects the order by BIC and writes the fit and its diagnostics
    """
    model = tmp_path / "model"
    with caplog.at_level(logging.INFO, logger="mcvar"):
        result = invoke(
            runner,
            "fit",
            "-i", prepared / "returns.csv",
            "-o", model,
            "--p-max", "3",
            "--lambda1", "5",
            "--lambda3", "5",
            "--tol-outer", "1e-3",
            "--max-outer", "100",
        )  # fmt: skip
    assert result.exit_code == 0, result.output
    assert "selected P=" in caplog.text
    for artifact in ("fit.json", "convergence.csv", "spg_trace.csv"):
        assert (model / artifact).exists()
    assert not (model / "grid.csv").exists()
    document = json.loads((model / "fit.json").read_text())
    assert document["format"] == "mcvar-fit"
    assert document["penalty"]["lambda1"] == 5.0
    assert document["dimensions"]["classes"] == 2


def test_fit_rejects_grid_with_penalties(
    runner: CliRunner, prepared: pathlib.Path, tmp_path: pathlib.Path
) -> None:
    """
    Explicit penalties and --grid are a configuration error
    """
    result = invoke(
        runner,
        "fit",
        "-i", prepared / "returns.csv",
        "-o", tmp_path / "model",
        "--p", "1",
        "--lambda1", "1",
        "--grid",
    )  # fmt: skip
    assert result.exit_code == 1
    assert "exclusive" in result.output


def test_fit_non_convergence(
    runner: CliRunner, prepared: pathlib.Path, tmp_path: pathlib.Path
) -> None:
    """
    Hitting the outer cap exits with code 3 after writing the artifacts
    """
    model = tmp_path / "model"
    result = invoke(
        runner,
        "fit",
        "-i", prepared / "returns.csv",
        "-o", model,
        "--p", "1",
        "--lambda1", "1",
        "--max-outer", "1",
        "--tol-outer", "1e-12",
    )  # fmt: skip
    assert result.exit_code == 3
    assert (model / "fit.json").exists()
    assert (model / "convergence.csv").exists()


def test_fit_reads_config_file(
    runner: CliRunner, prepared: pathlib.Path, tmp_path: pathlib.Path
) -> None:
    """
    Values from --config act as option defaults
    """
    config = tmp_path / "mcvar.cfg"
    config.write_text("# fixed model\np=1\nlambda1=7.5\nlambda3=2\nmax-outer=100\n")
    model = tmp_path / "model"
    result = invoke(
        runner,
        "--config", config,
        "fit",
        "-i", prepared / "returns.csv",
        "-o", model,
        "--lambda3", "3",
    )  # fmt: skip
    assert result.exit_code in (0, 3), result.output
    document = json.loads((model / "fit.json").read_text())
    assert document["dimensions"]["lags"] == 1
    assert document["penalty"]["lambda1"] == 7.5
    assert document["penalty"]["lambda3"] == 3.0


def test_fit_is_deterministic(
    runner: CliRunner, prepared: pathlib.Path, tmp_path: pathlib.Path
) -> None:
    """
    Repeated single-threaded fits write identical documents
    """
    for name in ("first", "second"):
        result = invoke(
            runner,
            "fit",
            "-i", prepared / "returns.csv",
            "-o", tmp_path / name,
            "--p", "1",
            "--lambda1", "5",
            "--lambda2", "1",
            "--lambda3", "5",
            "--lambda4", "1",
        )  # fmt: skip
        assert result.exit_code in (0, 3), result.output
    for artifact in ("fit.json", "convergence.csv"):
        first = (tmp_path / "first" / artifact).read_bytes()
        assert first == (tmp_path / "second" / artifact).read_bytes()


def test_network(runner: CliRunner, prepared: pathlib.Path, tmp_path: pathlib.Path) -> None:
    """
    network writes graphs per class and the statistics tables
    """
    model = tmp_path / "model"
    result = invoke(
        runner,
        "fit",
        "-i", prepared / "returns.csv",
        "-o", model,
        "--p", "1",
        "--lambda1", "5",
        "--lambda3", "5",
    )  # fmt: skip
    assert result.exit_code in (0, 3), result.output
    networks = tmp_path / "networks"
    result = invoke(runner, "network", "-i", model / "fit.json", "-o", networks)
    assert result.exit_code == 0, result.output
    for class_id in ("class1", "class2"):
        assert (networks / f"{class_id}.dot").read_text().startswith(
            f'digraph "{class_id}" {{'
        )
        assert json.loads((networks / f"{class_id}.json").read_text())["class"] == class_id
        assert (networks / f"type_effects_{class_id}.csv").exists()
    for table in (
        "connectedness_in.csv",
        "connectedness_out.csv",
        "connectedness_total.csv",
        "shared_effects.csv",
        "network_summary.csv",
    ):
        assert (networks / table).exists()


def test_network_dot_only(
    runner: CliRunner, prepared: pathlib.Path, tmp_path: pathlib.Path
) -> None:
    """
    --format restricts the written artifacts
    """
    model = tmp_path / "model"
    invoke(
        runner,
        "fit",
        "-i", prepared / "returns.csv",
        "-o", model,
        "--p", "1",
        "--lambda1", "5",
    )  # fmt: skip
    networks = tmp_path / "networks"
    result = invoke(
        runner, "network", "-i", model / "fit.json", "-o", networks, "-f", "dot", "--grayscale"
    )
    assert result.exit_code == 0, result.output
    assert sorted(path.name for path in networks.iterdir()) == ["class1.dot", "class2.dot"]
    assert "blue" not in (networks / "class1.dot").read_text()


def test_network_rejects_malformed_fit(runner: CliRunner, tmp_path: pathlib.Path) -> None:
    """
    A document that is not a fit is a data error
    """
    path = tmp_path / "fit.json"
    path.write_text(json.dumps({"format": "other"}))
    result = invoke(runner, "network", "-i", path, "-o", tmp_path / "out")
    assert result.exit_code == 2
    assert "FitFormatError" in result.output


def run_pipeline(runner: CliRunner, root: pathlib.Path) -> None:
    """
    simulate, preprocess, fit and network into subdirectories of `root`
    """
    steps: list[tuple[str | pathlib.Path, ...]] = [
        ("simulate", "-o", root / "sim", "--classes", "2", "--series", "3",
         "--periods", "150", "--density", "0.3", "--seed", "9"),
        ("preprocess", "--input", root / "sim" / "prices.csv", "--out-dir", root / "prep"),
        ("fit", "-i", root / "prep" / "returns.csv", "-o", root / "model", "--p", "1",
         "--lambda1", "4", "--lambda2", "0.5", "--lambda3", "4", "--lambda4", "0.5",
         "--threads", "1"),
        ("network", "-i", root / "model" / "fit.json", "-o", root / "networks"),
    ]  # fmt: skip
    for step in steps:
        result = invoke(runner, *step)
        assert result.exit_code in (0, 3), result.output


def test_pipeline_is_deterministic(runner: CliRunner, tmp_path: pathlib.Path) -> None:
    """
    Two end-to-end runs write the same files with identical bytes
    """
    run_pipeline(runner, tmp_path / "first")
    run_pipeline(runner, tmp_path / "second")
    first = sorted(
        path.relative_to(tmp_path / "first")
        for path in (tmp_path / "first").rglob("*")
        if path.is_file()
    )
    second = sorted(
        path.relative_to(tmp_path / "second")
        for path in (tmp_path / "second").rglob("*")
        if path.is_file()
    )
    assert first == second
    assert pathlib.Path("networks", "shared_effects.csv") in first
    for relative in first:
        assert (tmp_path / "first" / relative).read_bytes() == (
            tmp_path / "second" / relative
        ).read_bytes(), relative
