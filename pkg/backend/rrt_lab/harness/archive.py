"""DuckDB archive of experiment runs.

Every run appends one row to ``analytics.runs`` and its result rows to
``analytics.results_<experiment>``, tagged with the same run id.
"""
import logging
import re
import uuid
from pathlib import Path
from typing import Union

import duckdb

from rrt_lab.errors import OutputError
from rrt_lab.harness.output import ResultTable, Summary

logger = logging.getLogger(__name__)

ARCHIVE_SCHEMA = "analytics"

RUNS_DDL = f"""
CREATE TABLE IF NOT EXISTS {ARCHIVE_SCHEMA}.runs (
    run_id TEXT PRIMARY KEY,
    experiment TEXT,
    seed UBIGINT,
    passed BOOLEAN,
    theorem TEXT,
    version TEXT,
    created_at TIMESTAMP DEFAULT current_timestamp,
    summary TEXT
);
"""


def results_table_name(experiment: str) -> str:
    return f"{ARCHIVE_SCHEMA}.results_{re.sub(r'[^0-9a-zA-Z]+', '_', experiment)}"


def ensure_schema(con: duckdb.DuckDBPyConnection) -> None:
    con.execute(f"CREATE SCHEMA IF NOT EXISTS {ARCHIVE_SCHEMA};")
    con.execute(RUNS_DDL)


def archive_result(table: ResultTable, summary: Summary, db_path: Union[str, Path]) -> str:
    """Append one run to the archive and return its run id."""
    run_id = uuid.uuid4().hex
    target = results_table_name(summary.experiment)
    try:
        Path(db_path).parent.mkdir(parents=True, exist_ok=True)
        con = duckdb.connect(str(db_path))
    except (OSError, duckdb.Error) as e:
        raise OutputError(f"Failed to open archive {db_path}: {e}") from e

    try:
        ensure_schema(con)
        con.execute(
            f"INSERT INTO {ARCHIVE_SCHEMA}.runs (run_id, experiment, seed, passed, theorem, version, summary) "
            "VALUES (?, ?, ?, ?, ?, ?, ?);",
            [
                run_id,
                summary.experiment,
                summary.metadata["config"]["seed"],
                summary.passed,
                summary.theorem,
                summary.metadata.get("version", ""),
                summary.to_json_bytes().decode("utf-8"),
            ],
        )
        result_frame = table.frame.assign(run_id=run_id)
        con.register("result_frame", result_frame)
        con.execute(f"CREATE TABLE IF NOT EXISTS {target} AS SELECT * FROM result_frame LIMIT 0;")
        con.execute(f"INSERT INTO {target} BY NAME SELECT * FROM result_frame;")
        con.unregister("result_frame")
    except duckdb.Error as e:
        raise OutputError(f"Failed to archive run into {db_path}: {e}") from e
    finally:
        con.close()

    logger.info(f"💾 Archived run {run_id} into {db_path} ({target})")
    return run_id
