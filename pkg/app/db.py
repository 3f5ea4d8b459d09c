# app/db.py
"""
Database utilities for the run ledger.
Handles the SQLite connection and creation of the runs table.
"""

import sqlite3
from pathlib import Path

from app.config import DB_PATH


def get_connection(db_path=DB_PATH):
    """Return a SQLite3 connection to the ledger database."""
    Path(db_path).parent.mkdir(parents=True, exist_ok=True)
    con = sqlite3.connect(str(db_path))
    con.row_factory = sqlite3.Row
    return con


def init_db(db_path=DB_PATH):
    """Create tables if they don't exist."""
    con = get_connection(db_path)
    cur = con.cursor()
    cur.executescript(
        """
        CREATE TABLE IF NOT EXISTS runs (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            command TEXT NOT NULL,
            config_hash TEXT,
            seed INTEGER,
            version TEXT,
            exit_code INTEGER,
            summary_json TEXT,
            created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
        );

        CREATE INDEX IF NOT EXISTS idx_runs_created ON runs (created_at);
        """
    )
    con.commit()
    con.close()


if __name__ == "__main__":
    init_db()
    print("Run ledger initialized at", DB_PATH)
