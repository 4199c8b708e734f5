"""
Configuration module for pdm-superint.
Handles environment variable loading from .env file, key=value config files
and provides validated run settings for the verification and solver commands.
"""

import os
from pathlib import Path
from typing import Any, Dict, Literal, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator


class Config:
    """
    Configuration handler for the application.
    Loads environment variables from .env file and provides typed access.
    """

    _loaded = False

    # environment variable -> RunConfig field
    ENV_OVERRIDES = {
        "PDM_SEED": "seed",
        "PDM_OPERATOR_TOL": "operator_tol",
        "PDM_RESIDUAL_TOL": "residual_tol",
        "PDM_SPECTRUM_TOL": "spectrum_tol",
        "PDM_POINTS": "points",
        "PDM_GRID_N": "grid_n",
        "PDM_WORKERS": "workers",
    }

    @classmethod
    def load(cls) -> None:
        """
        Pull PDM_* settings from the project .env (or a .env found upward
        from the working directory) into os.environ, once per process.
        """
        if cls._loaded:
            return

        project_env = Path(__file__).parent / ".env"
        load_dotenv(project_env if project_env.exists() else None)

        cls._loaded = True

    @classmethod
    def get(cls, key: str, default: str | None = None) -> str | None:
        """
        Get an environment variable with optional default.

        Args:
            key: Environment variable name
            default: Default value if not found

        Returns:
            str | None: The environment variable value or default
        """
        cls.load()
        return os.getenv(key, default)

    @classmethod
    def env_overrides(cls) -> Dict[str, str]:
        """
        Collect the RunConfig overrides present in the environment.

        Returns:
            Dict[str, str]: RunConfig field name -> raw string value
        """
        cls.load()
        found = {}
        for env_key, field_name in cls.ENV_OVERRIDES.items():
            value = os.getenv(env_key)
            if value is not None and value.strip() != "":
                found[field_name] = value.strip()
        return found

    @classmethod
    def read_config_file(cls, path: str | Path) -> Dict[str, str]:
        """
        Read a simple key=value config file.

        Keys may be given either as RunConfig field names (``grid_n=2000``)
        or as their environment spelling (``PDM_GRID_N=2000``).

        Args:
            path: Location of the config file

        Returns:
            Dict[str, str]: RunConfig field name -> raw string value

        Raises:
            ValueError: If the file is missing or names an unknown key
        """
        path = Path(path)
        if not path.exists():
            raise ValueError(f"Config file not found: {path}")

        raw = dotenv_values(path)
        values = {}
        for key, value in raw.items():
            if value is None:
                continue
            name = cls.ENV_OVERRIDES.get(key, key).lower()
            if name not in RunConfig.model_fields:
                raise ValueError(
                    f"Unknown key '{key}' in config file {path}. "
                    f"Known keys: {', '.join(sorted(RunConfig.model_fields))}"
                )
            values[name] = value
        return values


class RunConfig(BaseModel):
    """Settings shared by every CLI command and the library oracles."""

    seed: int = Field(default=7, description="seed for random sample points")
    operator_tol: float = Field(default=1e-8, description="relative tolerance for [H, Q] = 0")
    residual_tol: float = Field(default=1e-8, description="tolerance for determining-equation residuals")
    spectrum_tol: float = Field(default=1e-5, description="relative tolerance closed form vs numeric")
    points: int = Field(default=100, description="number of random sample points")
    grid_n: int = Field(default=4000, description="finite-difference node count")
    x_scale: float = Field(default=1.0, description="length scale of the radial grid")
    grading: float = Field(default=1.0, description="mesh grading exponent near the origin")
    coordinate: Literal["auto", "x", "arctan", "y"] = Field(default="auto")
    output_format: Literal["json", "csv", "table"] = Field(default="table")
    output_path: Optional[str] = Field(default=None)
    workers: int = Field(default=4, description="worker pool size for fan-out")

    @field_validator("operator_tol", "residual_tol", "spectrum_tol", "x_scale", "grading")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("must be > 0")
        return value

    @field_validator("points", "workers")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be >= 1")
        return value

    @field_validator("grid_n")
    @classmethod
    def _enough_nodes(cls, value: int) -> int:
        if value < 16:
            raise ValueError("grid needs at least 16 nodes")
        return value

    @classmethod
    def from_sources(
        cls,
        config_file: str | Path | None = None,
        overrides: Dict[str, Any] | None = None,
    ) -> "RunConfig":
        """
        Build a RunConfig from defaults, config file, environment and explicit overrides.

        Later sources win: file < environment < overrides.

        Args:
            config_file: Optional key=value file
            overrides: Explicit values, typically parsed CLI flags (None entries are ignored)

        Returns:
            RunConfig: The validated settings

        Raises:
            ValueError: If any value is invalid
        """
        values: Dict[str, Any] = {}
        if config_file is not None:
            values.update(Config.read_config_file(config_file))
        values.update(Config.env_overrides())
        if overrides:
            values.update({k: v for k, v in overrides.items() if v is not None})

        try:
            return cls(**values)
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
            )
            raise ValueError(f"Invalid configuration: {problems}") from e
