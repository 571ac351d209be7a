import sys
from pathlib import Path

import duckdb

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
from rrt_lab.harness.archive import ARCHIVE_SCHEMA, ensure_schema  # noqa: E402

DEFAULT_DB_PATH = "results/archive.duckdb"


def setup_archive(db_path: str = DEFAULT_DB_PATH):
    """
    Initializes the 'analytics' schema and the 'analytics.runs' table of the results archive.
    """
    Path(db_path).parent.mkdir(parents=True, exist_ok=True)
    con = duckdb.connect(db_path)

    #----------------------------------
    #-------- CREATE SCHEMA + RUNS ----
    #----------------------------------
    ensure_schema(con)

    #----------------------------------
    #-------- QC  ---------------------
    #----------------------------------
    tables = con.execute(
        "SELECT table_name FROM information_schema.tables WHERE table_schema = ?;", [ARCHIVE_SCHEMA]
    ).fetchall()
    con.close()
    print(f"'{ARCHIVE_SCHEMA}' schema ready in {db_path}, tables: {[t[0] for t in tables]}")


# Run the setup when executed
if __name__ == "__main__":
    setup_archive(sys.argv[1] if len(sys.argv) > 1 else DEFAULT_DB_PATH)
