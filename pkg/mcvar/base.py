"""
Run Configuration
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import pathlib
from dataclasses import dataclass, field
from typing import Any, ClassVar

from mcvar.estimator import FitOptions
from mcvar.exceptions import ConfigurationError
from mcvar.model import PenaltyConfig
from mcvar.solvers.admm import AdmmOptions
from mcvar.solvers.spg import SpgOptions


@dataclass
class RunConfig:
    """
    Run Context Object

    Everything a command resolved from flags, environment, config file and
    defaults. Paths are kept out of `config_hash` so identical runs in
    different directories carry the same provenance.
    """

    command: str = "fit"
    input_path: str | None = None
    out_dir: str = "."
    debug: bool = False
    p: int | None = None
    p_max: int | None = None
    lambda1: float | None = None
    lambda2: float | None = None
    lambda3: float | None = None
    lambda4: float | None = None
    grid: bool = False
    threads: int = 1
    seed: int | None = None
    tol_outer: float = 1e-4
    max_outer: int = 25
    mu: float = 1e-4
    spg_max_iter: int = 5000
    spg_tol: float = 1e-6
    rho: float = 1.0
    admm_max_iter: int = 2000
    forward_fill: bool = False
    start: str | None = None
    end: str | None = None
    max_adf_lag: int | None = None
    formats: list[str] = field(default_factory=lambda: ["dot", "json", "csv"])
    grayscale: bool = False
    settings: dict[str, Any] = field(default_factory=dict)

    path_fields: ClassVar[tuple[str, ...]] = ("input_path", "out_dir", "debug")
    default_p_max: ClassVar[int] = 5

    @property
    def explicit_penalties(self) -> bool:
        """
        Whether any penalty weight was given explicitly
        """
        return any(
            value is not None
            for value in (self.lambda1, self.lambda2, self.lambda3, self.lambda4)
        )

    @property
    def out_path(self) -> pathlib.Path:
        """
        Resolve `out_dir` to a Path
        """
        return pathlib.Path(self.out_dir)

    def validate(self) -> RunConfig:
        """
        Check that the resolved settings are mutually consistent

        Raises
        ------
        ConfigurationError
            Explicit penalties together with grid selection, both a fixed
            lag order and a maximum lag order, or out-of-range settings.
        """
        if self.explicit_penalties and self.grid:
            raise ConfigurationError(
                "Explicit --lambda1..4 and --grid are mutually exclusive"
            )
        if self.p is not None and self.p_max is not None:
            raise ConfigurationError("--p and --p-max are mutually exclusive")
        for name in ("p", "p_max"):
            value = getattr(self, name)
            if value is not None and value < 1:
                msg = f"--{name.replace('_', '-')} must be at least 1, got {value}"
                raise ConfigurationError(msg)
        if self.threads < 1:
            msg = f"--threads must be at least 1, got {self.threads}"
            raise ConfigurationError(msg)
        unknown = sorted(set(self.formats) - {"dot", "json", "csv"})
        if unknown:
            msg = f"Unknown export formats {unknown}"
            raise ConfigurationError(msg)
        # constructing the option objects checks their ranges
        self.fit_options()
        self.penalty()
        return self

    @property
    def use_grid(self) -> bool:
        """
        Penalties come from the grid search unless given explicitly
        """
        return self.grid or not self.explicit_penalties

    def penalty(self) -> PenaltyConfig:
        """
        Explicit penalty weights, unset ones being zero
        """
        return PenaltyConfig(
            lambda1=self.lambda1 or 0.0,
            lambda2=self.lambda2 or 0.0,
            lambda3=self.lambda3 or 0.0,
            lambda4=self.lambda4 or 0.0,
        )

    def fit_options(self) -> FitOptions:
        """
        Estimator settings
        """
        return FitOptions(
            max_outer=self.max_outer,
            tol_outer=self.tol_outer,
            spg=SpgOptions(mu=self.mu, max_iter=self.spg_max_iter, tol=self.spg_tol),
            admm=AdmmOptions(rho=self.rho, max_iter=self.admm_max_iter),
            threads=self.threads,
        )

    @property
    def config_hash(self) -> str:
        """
        First 12 hex digits of the SHA-256 of the sorted settings
        """
        settings = {
            key: value
            for key, value in dataclasses.asdict(self).items()
            if key not in self.path_fields
        }
        text = json.dumps(settings, sort_keys=True, default=str)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def load_config_file(file_path: str | pathlib.Path) -> dict[str, Any]:
    """
    Parse a flat `key=value` configuration file

    Blank lines and lines starting with `#` are ignored; keys are
    normalized to option names (`p-max` and `p_max` are the same key).

    Raises
    ------
    ConfigurationError
        A line is not a `key=value` pair.
    """
    path = pathlib.Path(file_path)
    values: dict[str, Any] = {}
    for number, raw_line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        key, separator, value = line.partition("=")
        if not separator or not key.strip():
            msg = f"{path}:{number}: expected key=value, got {raw_line!r}"
            raise ConfigurationError(msg)
        values[key.strip().replace("-", "_")] = value.strip()
    return values
