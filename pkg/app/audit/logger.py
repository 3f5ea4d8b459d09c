"""
Run Ledger
Records every command invocation (config hash, seed, exit code, summary) for reproducibility.
"""
import json
import logging

import pandas as pd

from app.config import DB_PATH, RUN_RETENTION_DAYS, VERSION
from app.core.io import to_json
from app.db import get_connection, init_db

logger = logging.getLogger(__name__)

_COLUMNS = ["id", "command", "config_hash", "seed", "version", "exit_code", "created_at"]


class RunLedger:
    """Logs command runs and their summaries to SQLite."""

    def __init__(self, db_path=DB_PATH):
        self.db_path = db_path
        init_db(self.db_path)

    def log_run(self, command, config_hash, seed, exit_code, summary=None, version=VERSION):
        """Insert one run and return its id."""
        con = get_connection(self.db_path)
        cur = con.cursor()
        cur.execute(
            """
            INSERT INTO runs (command, config_hash, seed, version, exit_code, summary_json)
            VALUES (?, ?, ?, ?, ?, ?)
            """,
            (command, config_hash, seed, version, exit_code, to_json(summary or {})),
        )
        run_id = cur.lastrowid
        con.commit()
        con.close()
        logger.info("ledger: recorded %s run %d (exit %d)", command, run_id, exit_code)
        return run_id

    def get_runs(self, limit=100, command=None):
        """Most recent runs first, without summaries."""
        con = get_connection(self.db_path)
        cur = con.cursor()
        query = f"SELECT {', '.join(_COLUMNS)} FROM runs"
        params = []
        if command is not None:
            query += " WHERE command = ?"
            params.append(command)
        query += " ORDER BY id DESC LIMIT ?"
        params.append(limit)
        cur.execute(query, params)
        rows = cur.fetchall()
        con.close()
        return [dict(row) for row in rows]

    def get_run(self, run_id):
        """Full record including the decoded summary, or None."""
        con = get_connection(self.db_path)
        cur = con.cursor()
        cur.execute(f"SELECT {', '.join(_COLUMNS)}, summary_json FROM runs WHERE id = ?", (run_id,))
        row = cur.fetchone()
        con.close()
        if row is None:
            return None
        record = dict(row)
        record["summary"] = json.loads(record.pop("summary_json") or "{}")
        return record

    def export_runs(self, format="json"):
        """Export every run as a JSON document or CSV text."""
        con = get_connection(self.db_path)
        frame = pd.read_sql_query(f"SELECT {', '.join(_COLUMNS)}, summary_json FROM runs ORDER BY id", con)
        con.close()

        if format == "json":
            data = []
            for record in frame.to_dict(orient="records"):
                record["summary"] = json.loads(record.pop("summary_json") or "{}")
                data.append(record)
            return json.dumps(data, indent=2, default=str)
        if format == "csv":
            return frame.to_csv(index=False)
        return None

    def cleanup_old_runs(self, days=RUN_RETENTION_DAYS):
        """Remove runs older than the retention period; returns the number deleted."""
        con = get_connection(self.db_path)
        cur = con.cursor()
        cur.execute(
            """
            DELETE FROM runs
            WHERE created_at < datetime('now', '-' || ? || ' days')
            """,
            (days,),
        )
        deleted = cur.rowcount
        con.commit()
        con.close()
        return deleted
