"""CSV log files: one header row of column names, then one row per 500 Hz tick.

Values are written with 17 significant digits, which round-trips every
float64 exactly, so two runs with the same seed give byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigError

FMT = "%.17g"


def write_csv(path, log: np.ndarray, columns) -> Path:
    path = Path(path)
    log = np.asarray(log, dtype=float)
    if log.ndim != 2 or log.shape[1] != len(columns):
        raise ValueError(f"log has shape {log.shape}, expected (n, {len(columns)})")
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, log, fmt=FMT, delimiter=",", header=",".join(columns), comments="")
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    """Column name -> array, in file order."""
    path = Path(path)
    try:
        with open(path) as fh:
            header = fh.readline().strip()
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found") from None
    names = header.split(",")
    if not header or len(set(names)) != len(names):
        raise ConfigError(f"{path}: missing or duplicated header names")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        data = np.zeros((0, len(names)))
    if data.shape[1] != len(names):
        raise ConfigError(f"{path}: {data.shape[1]} columns but {len(names)} header names")
    return {name: data[:, i] for i, name in enumerate(names)}


def result_columns(result) -> dict[str, np.ndarray]:
    """The same mapping as :func:`read_csv`, built from an in-memory result."""
    return {name: result.log[:, i] for i, name in enumerate(result.columns)}
