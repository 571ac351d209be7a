"""Result tables, JSON summaries and plot-ready CSVs."""
import logging
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
import orjson
import pandas as pd
from pydantic import BaseModel, computed_field

from rrt_lab import __version__
from rrt_lab.errors import DomainError, OutputError
from rrt_lab.limits import LimitLaw, max_bm_cdf
from rrt_lab.stats import EmpiricalDist

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


# ============================
# 📌 Result types
# ============================
@dataclass(frozen=True, eq=False)
class ResultTable:
    """Named columns plus the metadata block echoing the run."""

    frame: pd.DataFrame
    metadata: dict = field(default_factory=dict)

    @property
    def columns(self) -> list[str]:
        return list(self.frame.columns)

    def require(self, *columns: str) -> None:
        missing = [c for c in columns if c not in self.frame.columns]
        if missing:
            raise DomainError(f"Result table is missing columns: {', '.join(missing)}")

    def to_csv_bytes(self) -> bytes:
        return _csv_bytes(self.frame)


class Check(BaseModel):
    """One tolerance check: ``lower <= value <= upper``, bounds optional."""

    name: str
    value: float
    lower: Optional[float] = None
    upper: Optional[float] = None

    @computed_field
    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        return (self.lower is None or self.value >= self.lower) and (self.upper is None or self.value <= self.upper)


class Summary(BaseModel):
    experiment: str
    theorem: str
    checks: list[Check]
    metadata: dict = {}

    @computed_field
    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_json_bytes(self) -> bytes:
        return orjson.dumps(self.model_dump(), option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY)


def version_string() -> str:
    """``git describe`` of the working tree, or the package version outside git."""
    try:
        result = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True,
            text=True,
            check=True,
            cwd=Path(__file__).resolve().parent,
        )
        return f"rrt-lab {__version__} ({result.stdout.strip()})"
    except (OSError, subprocess.CalledProcessError):
        return f"rrt-lab {__version__}"


# ============================
# 📌 CSV emission
# ============================
def _csv_bytes(frame: pd.DataFrame) -> bytes:
    return frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n").encode("utf-8")


def _write_bytes(payload: bytes, output_path: Path) -> Path:
    try:
        output_path.parent.mkdir(parents=True, exist_ok=True)
        output_path.write_bytes(payload)
    except OSError as e:
        raise OutputError(f"Failed to write {output_path}: {e}") from e
    logger.info(f"💾 Saved {output_path}")
    return output_path


def save_result(table: ResultTable, summary: Summary, output_dir: Union[str, Path]) -> dict[str, Path]:
    """Write ``<experiment>.csv``, ``<experiment>.summary.json`` and, when the
    experiment has one, ``<experiment>.plot.csv`` under output_dir."""
    out = Path(output_dir)
    name = summary.experiment
    paths = {
        "csv": _write_bytes(table.to_csv_bytes(), out / f"{name}.csv"),
        "summary": _write_bytes(summary.to_json_bytes(), out / f"{name}.summary.json"),
    }
    if name in PLOT_KINDS:
        paths["plot"] = emit_plot_data(table, name, out / f"{name}.plot.csv")
    return paths


# ============================
# 📌 Plot data
# ============================
def _limit_from_metadata(table: ResultTable) -> LimitLaw:
    limit = table.metadata.get("limit")
    if not limit:
        raise DomainError("Result table metadata names no limit law")
    return LimitLaw(kind=limit["kind"], rho=limit.get("rho"))


def _ecdf_frame(table: ResultTable, column: str, limit_column: str, limit_cdf) -> pd.DataFrame:
    x = np.unique(table.frame[column].to_numpy(dtype=np.float64))
    emp = EmpiricalDist.from_samples(table.frame[column].to_numpy(dtype=np.float64))
    return pd.DataFrame({"x": x, "ecdf": emp.cdf(x), limit_column: limit_cdf(x)})


def _outdeg_profile_plot(table: ResultTable) -> pd.DataFrame:
    table.require("t", "mean_outdegree")
    if table.frame.empty:
        return pd.DataFrame(columns=["t", "mean_estimate", "stderr", "limit"])
    law = _limit_from_metadata(table)
    grouped = table.frame.groupby("t", sort=True)["mean_outdegree"]
    frame = pd.DataFrame(
        {
            "mean_estimate": grouped.mean(),
            "stderr": grouped.std(ddof=1).fillna(0.0) / np.sqrt(grouped.count()),
        }
    ).reset_index()
    frame["limit"] = [law.profile(t) for t in frame["t"]]
    return frame


def _arcsine_plot(table: ResultTable) -> pd.DataFrame:
    table.require("x")
    if table.frame.empty:
        return pd.DataFrame(columns=["x", "ecdf", "arcsine_cdf"])
    return _ecdf_frame(table, "x", "arcsine_cdf", _limit_from_metadata(table).cdf)


def _depth_law_plot(table: ResultTable) -> pd.DataFrame:
    table.require("D_n_scaled")
    if table.frame.empty:
        return pd.DataFrame(columns=["x", "ecdf", "max_bm_cdf"])
    return _ecdf_frame(table, "D_n_scaled", "max_bm_cdf", max_bm_cdf)


PLOT_KINDS = {
    "outdeg-profile": _outdeg_profile_plot,
    "arcsine": _arcsine_plot,
    "depth-law": _depth_law_plot,
}


def plot_frame(table: ResultTable, kind: str) -> pd.DataFrame:
    if kind not in PLOT_KINDS:
        raise DomainError(f"No plot data for '{kind}', choose one of: {', '.join(PLOT_KINDS)}")
    return PLOT_KINDS[kind](table)


def emit_plot_data(table: ResultTable, kind: str, output_file: Union[str, Path]) -> Path:
    """Write the (x, empirical, limit) columns for one experiment kind."""
    return _write_bytes(_csv_bytes(plot_frame(table, kind)), Path(output_file))
