"""Experiment configuration: TOML file plus command-line overrides."""
import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Literal, Optional, Union, get_args

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from rrt_lab.env import EnvModel
from rrt_lab.errors import ConfigurationError, UsageError
from rrt_lab.treegrow import EdgeLenSpec
from rrt_lab.walk import IncrementSpec

logger = logging.getLogger(__name__)

ExperimentName = Literal[
    "depth-law",
    "depth-exact-check",
    "arcsine",
    "outdeg-profile",
    "scaling",
    "subcritical",
    "texpect",
    "sanity",
    "bench",
]
EXPERIMENT_NAMES: tuple[str, ...] = get_args(ExperimentName)

THREADS_ENV_VAR = "RRT_LAB_THREADS"


class Tolerances(BaseModel):
    """Pass/fail thresholds; every experiment reports which ones it applied."""

    model_config = ConfigDict(extra="forbid")

    ks: float = 0.05
    arcsine_ks: float = 0.03
    ks_level: float = Field(default=0.99, gt=0.0, lt=1.0)
    profile_rel: float = 0.10
    constant_profile_rel: float = 0.02
    tv: float = 0.01
    normalization: float = 1e-12
    mean_outdegree_sum: float = 1e-9
    harmonic: float = 1e-10
    power_rel: float = 0.10
    stretched_range: tuple[float, float] = (0.9, 1.1)
    iid_rel: float = 0.02
    # slope bounds for rho = 1/2; shifted by rho - 1/2 for asymmetric increments
    root_slope: tuple[float, float] = (0.45, 0.55)
    last_slope: tuple[float, float] = (-0.60, -0.40)
    max_rebuilds: int = 20
    grow_seconds: float = 2.0


class ExperimentConfig(BaseModel):
    """One experiment run. Unset sizes fall back to the experiment's defaults."""

    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    experiment: ExperimentName
    seed: int = Field(ge=0, lt=1 << 64)
    n: Optional[int] = Field(default=None, ge=1)
    n_grid: Optional[list[int]] = None
    n_large: Optional[int] = Field(default=None, ge=1)
    t_grid: Optional[list[float]] = None
    j_values: Optional[list[int]] = None
    profile_half_width: Optional[int] = Field(default=None, ge=0)
    reps: Optional[int] = Field(default=None, ge=1)
    calibration_reps: Optional[int] = Field(default=None, ge=1)
    threads: int = Field(default=1, ge=1)
    output: Path = Path("results")
    env: Optional[EnvModel] = None
    increments: IncrementSpec = IncrementSpec(kind="gaussian")
    edges: EdgeLenSpec = EdgeLenSpec(kind="unit")
    tolerances: Tolerances = Tolerances()

    @model_validator(mode="after")
    def _check_grids(self):
        if self.n_grid is not None and (len(self.n_grid) < 2 or min(self.n_grid) < 1):
            raise ValueError("n_grid needs at least two sizes >= 1")
        if self.t_grid is not None and not all(0.0 < t < 1.0 for t in self.t_grid):
            raise ValueError("t_grid values must lie in (0, 1)")
        if self.j_values is not None and min(self.j_values, default=0) < 0:
            raise ValueError("j_values must be >= 0")
        return self

    def resolved(self) -> "ExperimentConfig":
        """Fill every unset field from the experiment's defaults."""
        defaults = EXPERIMENT_DEFAULTS[self.experiment]
        update = {key: value for key, value in defaults.items() if getattr(self, key) is None}
        n = update.get("n", self.n)
        if self.experiment == "depth-exact-check" and self.j_values is None:
            update["j_values"] = [0, n // 2, n - 1]
        if self.experiment == "outdeg-profile" and self.profile_half_width is None:
            update["profile_half_width"] = n // 200
        return self.model_copy(update=update)

    def echo(self) -> dict:
        """JSON-safe copy of the configuration for result metadata."""
        return self.model_dump(
            mode="json",
            exclude={"env": {"path"}, "edges": {"sampler", "char_fn"}},
        )


def _product_form() -> EnvModel:
    return EnvModel(kind="product_form")


EXPERIMENT_DEFAULTS: dict[str, dict[str, Any]] = {
    "depth-law": {"n": 10_000, "reps": 10_000, "calibration_reps": 10_000, "env": _product_form()},
    "depth-exact-check": {"n": 200, "reps": 100_000, "env": _product_form()},
    "arcsine": {"n": 10_000, "reps": 10_000, "calibration_reps": 10_000, "env": _product_form()},
    "outdeg-profile": {
        "n": 10_000,
        "reps": 10_000,
        "calibration_reps": 10_000,
        "t_grid": [0.2, 0.5, 0.8],
        "env": _product_form(),
    },
    "scaling": {"n_grid": [1_000, 3_000, 10_000, 30_000, 100_000], "reps": 10_000, "calibration_reps": 10_000, "env": _product_form()},
    "subcritical": {"n_grid": [1_000, 10_000], "reps": 1, "env": EnvModel(kind="power", alpha=-2.0)},
    "texpect": {"n": 10_000, "reps": 10_000, "env": _product_form()},
    "sanity": {"n": 10_000, "n_large": 1_000_000, "reps": 1, "env": EnvModel(kind="constant")},
    "bench": {"n": 1_000_000, "reps": 3, "env": _product_form()},
}


def _read_toml(config_path: Path) -> dict:
    try:
        with open(config_path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError as e:
        raise ConfigurationError(f"Config file not found: {config_path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"Config file {config_path} is not valid TOML: {e}") from e


def load_config(
    experiment: str,
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> ExperimentConfig:
    """Merge file, environment and flags (flags win) into a validated config."""
    if experiment not in EXPERIMENT_NAMES:
        raise UsageError(f"Unknown experiment '{experiment}', choose one of: {', '.join(EXPERIMENT_NAMES)}")

    data: dict[str, Any] = _read_toml(Path(config_path)) if config_path else {}
    if data.get("experiment", experiment) != experiment:
        logger.warning(f"⚠️ Config file names experiment '{data['experiment']}', running '{experiment}'")
    data["experiment"] = experiment

    if "threads" not in data and os.getenv(THREADS_ENV_VAR):
        data["threads"] = os.environ[THREADS_ENV_VAR]
    data.update({key: value for key, value in (overrides or {}).items() if value is not None})

    if "seed" not in data:
        raise UsageError("A seed is mandatory: pass --seed or set seed in the config file")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid experiment config: {e}") from e
