"""
mcvar Utility Functions
"""

from __future__ import annotations

import json
import logging
import pathlib
import re
from typing import Any

import pandas as pd

from mcvar.__about__ import __application__, __version__
from mcvar.config import missing_marker, table_extensions
from mcvar.exceptions import PanelFormatError

logger = logging.getLogger(__name__)


def read_table(file_path: str | pathlib.Path) -> pd.DataFrame:
    """
    Load a long-format table into a DataFrame, regardless of the file format

    Lines starting with `#` are provenance comments and skipped.
    """
    path = pathlib.Path(file_path)
    if not path.exists():
        msg = f"No such file: {path}"
        raise FileNotFoundError(msg)
    joined_suffixes = "".join(path.suffixes).lower()
    try:
        if ".csv" in path.suffixes or joined_suffixes == ".csv.gz":
            return pd.read_csv(path, comment="#", dtype={"class": str, "series": str})
        elif path.suffix.lower() in [".parquet"]:
            return pd.read_parquet(path)
        elif path.suffix.lower() in [".feather", ".fea"]:
            return pd.read_feather(path)
    except ImportError as ie:
        msg = (
            f"Reading {path.suffix} files requires pyarrow. "
            "Install mcvar with the `parquet` extra."
        )
        raise ImportError(msg) from ie
    except (pd.errors.ParserError, UnicodeDecodeError) as pe:
        msg = f"Cannot parse {path}: {pe}"
        raise PanelFormatError(msg) from pe
    msg = f"Unsupported table format {path.name}, expected one of {table_extensions}"
    raise PanelFormatError(msg)


def provenance_line(config_hash: str) -> str:
    """
    Header comment carried by every output table
    """
    return f"# {__application__} {__version__} config={config_hash}\n"


def write_table(
    df: pd.DataFrame,
    file_path: pathlib.Path,
    config_hash: str,
    index: bool = False,
) -> pathlib.Path:
    """
    Write a DataFrame as CSV with a provenance header

    Undefined cells are written as the `NA` marker and floats with full
    precision so that re-reading reproduces the values exactly.
    """
    file_path.parent.mkdir(parents=True, exist_ok=True)
    body = df.to_csv(
        index=index,
        na_rep=missing_marker,
        float_format="%.17g",
        lineterminator="\n",
    )
    file_path.write_text(provenance_line(config_hash) + body, encoding="utf-8")
    logger.info("Wrote %s", file_path)
    return file_path


def write_json(document: Any, file_path: pathlib.Path) -> pathlib.Path:
    """
    Write a JSON document deterministically
    """
    file_path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(document, indent=2, sort_keys=False, allow_nan=False)
    file_path.write_text(text + "\n", encoding="utf-8")
    logger.info("Wrote %s", file_path)
    return file_path


def safe_filename(name: str) -> str:
    """
    Make an identifier usable as a file stem
    """
    return re.sub(r"[^\w.\-]+", "_", name).strip("_") or "unnamed"
