"""Flat-file serialization of the fingerprint databases

Layout (whitespace separated, one table row per line):

    # mmwave-sim fingerprint databases v1
    L N
    D_0 D_1 ... D_{N-1}
    PSI
    <L rows of N dBm values, 6 decimals>
    PHI
    <L rows of N sector IDs, -1 = null>
    P_OFF
    <L rows of N dBm values, 6 decimals, NULL = zero power>
    END
"""

from pathlib import Path
from typing import List, Union

import numpy as np

from src.learning.databases import NULL_SECTOR, FingerprintDatabases
from src.utils.errors import ConfigurationError
from src.utils.logger import get_logger

logger = get_logger()

HEADER = "# mmwave-sim fingerprint databases v1"
NULL_POWER = "NULL"


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def dumps_databases(db: FingerprintDatabases) -> str:
    lines = [HEADER, f"{db.num_lps} {db.num_aps}", " ".join(str(d) for d in db.num_sectors), "PSI"]
    lines += [" ".join(_fmt(v) for v in row) for row in db.psi]
    lines.append("PHI")
    lines += [" ".join(str(int(v)) for v in row) for row in db.phi]
    lines.append("P_OFF")
    lines += [
        " ".join(NULL_POWER if s == NULL_SECTOR else _fmt(v) for v, s in zip(row, srow))
        for row, srow in zip(db.p_off_dbm, db.phi)
    ]
    lines.append("END")
    return "\n".join(lines) + "\n"


def _read_block(lines: List[str], start: int, name: str, rows: int) -> List[List[str]]:
    if start >= len(lines) or lines[start] != name:
        raise ConfigurationError(f"expected section {name}", key=name, line=start + 1)
    block = [line.split() for line in lines[start + 1:start + 1 + rows]]
    if len(block) != rows:
        raise ConfigurationError(f"section {name} is truncated", key=name, line=start + 1)
    return block


def loads_databases(text: str) -> FingerprintDatabases:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != HEADER:
        raise ConfigurationError("not a fingerprint database file", key="header", line=1)
    try:
        L, N = (int(v) for v in lines[1].split())
        num_sectors = [int(v) for v in lines[2].split()]

        pos = 3
        psi = np.array([[float(v) for v in row] for row in _read_block(lines, pos, "PSI", L)])
        pos += L + 1
        phi = np.array([[int(v) for v in row] for row in _read_block(lines, pos, "PHI", L)], dtype=int)
        pos += L + 1
        p_off = np.array([
            [-np.inf if v == NULL_POWER else float(v) for v in row]
            for row in _read_block(lines, pos, "P_OFF", L)
        ])
        pos += L + 1
    except ValueError as e:
        if isinstance(e, ConfigurationError):
            raise
        raise ConfigurationError(f"malformed database file: {e}", key="databases") from e

    if pos >= len(lines) or lines[pos] != "END":
        raise ConfigurationError("missing END marker", key="END", line=pos + 1)
    for name, table in (("PSI", psi), ("PHI", phi), ("P_OFF", p_off)):
        if table.shape != (L, N):
            raise ConfigurationError(f"section {name} is not {L} x {N}", key=name)
    return FingerprintDatabases(psi, phi, p_off, tuple(num_sectors))


def save_databases(db: FingerprintDatabases, path: Union[str, Path]) -> Path:
    """
    Write databases to a flat file.

    Args:
        db: Databases to write
        path: Output path (parent directories are created)

    Returns:
        Path written
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps_databases(db))
    except OSError as e:
        raise OSError(f"Could not write databases to {path}: {e}") from e
    logger.info(f"Databases written to {path}")
    return path


def load_databases(path: Union[str, Path]) -> FingerprintDatabases:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Database file not found: {path}")
    return loads_databases(path.read_text())
