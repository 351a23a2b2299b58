import json
import os
import sqlite3
import uuid
from datetime import datetime

import pandas as pd

REGISTRY_NAME = 'registry.db'


def _registry_path(out_dir):
    return os.path.join(out_dir, REGISTRY_NAME)


def initialize_database(out_dir):
    """Create the run/artifact registry inside an output directory if it doesn't exist."""
    os.makedirs(out_dir, exist_ok=True)
    conn = sqlite3.connect(_registry_path(out_dir))
    cursor = conn.cursor()

    cursor.execute('''
    CREATE TABLE IF NOT EXISTS runs (
        id TEXT PRIMARY KEY,
        command TEXT,
        config_hash TEXT,
        seed INTEGER,
        created_at TEXT
    )
    ''')

    cursor.execute('''
    CREATE TABLE IF NOT EXISTS artifacts (
        id INTEGER PRIMARY KEY AUTOINCREMENT,
        run_id TEXT,
        kind TEXT,
        path TEXT,
        shape TEXT,
        omega REAL,
        metadata TEXT,
        FOREIGN KEY (run_id) REFERENCES runs (id)
    )
    ''')

    conn.commit()
    conn.close()


def register_run(out_dir, command, config_hash, seed):
    """Record a run and return its id."""
    conn = sqlite3.connect(_registry_path(out_dir))
    cursor = conn.cursor()
    run_id = str(uuid.uuid4())
    cursor.execute(
        'INSERT INTO runs (id, command, config_hash, seed, created_at) VALUES (?, ?, ?, ?, ?)',
        (run_id, command, config_hash, seed, datetime.now().strftime('%Y-%m-%d %H:%M:%S'))
    )
    conn.commit()
    conn.close()
    return run_id


def register_artifacts(out_dir, run_id, artifacts):
    """Record written files; ``artifacts`` holds dicts with kind, path and optional shape/omega/metadata."""
    conn = sqlite3.connect(_registry_path(out_dir))
    cursor = conn.cursor()
    rows = [
        (run_id, a['kind'], os.path.relpath(a['path'], out_dir), a.get('shape'), a.get('omega'),
         json.dumps(a.get('metadata', {}), sort_keys=True))
        for a in artifacts
    ]
    cursor.executemany(
        'INSERT INTO artifacts (run_id, kind, path, shape, omega, metadata) VALUES (?, ?, ?, ?, ?, ?)',
        rows
    )
    conn.commit()
    conn.close()
    return len(rows)


def get_latest_run(out_dir, command):
    """Most recent run of a command, or None."""
    if not os.path.exists(_registry_path(out_dir)):
        return None
    conn = sqlite3.connect(_registry_path(out_dir))
    cursor = conn.cursor()
    cursor.execute(
        'SELECT id, config_hash, seed FROM runs WHERE command = ? ORDER BY created_at DESC, rowid DESC LIMIT 1',
        (command,)
    )
    row = cursor.fetchone()
    conn.close()
    if row:
        return {'id': row[0], 'config_hash': row[1], 'seed': row[2]}
    return None


def get_artifacts(out_dir, kind, run_id=None, shape=None):
    """Artifacts of one kind as a DataFrame ordered by omega, with absolute paths."""
    conn = sqlite3.connect(_registry_path(out_dir))
    query = 'SELECT run_id, kind, path, shape, omega, metadata FROM artifacts WHERE kind = ?'
    params = [kind]
    if run_id is not None:
        query += ' AND run_id = ?'
        params.append(run_id)
    if shape is not None:
        query += ' AND shape = ?'
        params.append(shape)
    query += ' ORDER BY shape, omega, id'
    df = pd.read_sql_query(query, conn, params=params)
    conn.close()
    df['path'] = df['path'].apply(lambda p: os.path.join(out_dir, p))
    return df
