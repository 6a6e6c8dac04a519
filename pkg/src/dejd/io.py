"""File formats: input series, key = value configs, and run outputs.

All numeric output uses 17 significant digits so that floats round-trip.
"""
from __future__ import annotations

import csv
import hashlib
import math
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .model import DEFAULT_DELTA, InputError, ReturnsSeries
from .sampler import CHAIN_COLUMNS

__all__ = [
    "DataError",
    "fmt",
    "ingest",
    "log_returns",
    "read_returns_and_prices",
    "read_keyvalue",
    "keyvalue_text",
    "read_draws",
    "read_jump_probabilities",
    "atomic_outputs",
    "write_table",
    "read_table",
    "file_sha256",
]

DRAWS_HEADER = ("sweep_index",) + CHAIN_COLUMNS
JUMP_PROB_HEADER = ("day_index", "p_minus", "p_plus")


class DataError(ValueError):
    """Malformed or unusable input data."""


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return format(float(v), ".17g")


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _sniff_delimiter(header: str) -> str | None:
    for d in (",", "\t", ";"):
        if d in header:
            return d
    return None  # whitespace or single column


def _split(line: str, delim):
    return [c.strip() for c in (line.split(delim) if delim else line.split())]


def _read_rows(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    # header is the first non-blank line
    content = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not content:
        raise DataError(f"{path}: empty file")
    delim = _sniff_delimiter(content[0][1])
    header = _split(content[0][1], delim)
    rows = [(lineno, _split(ln, delim)) for lineno, ln in content[1:]]
    return header, rows


def _parse_float(token, path, lineno):
    try:
        v = float(token)
    except ValueError:
        raise DataError(f"{path}:{lineno}: cannot parse number {token!r}") from None
    if not math.isfinite(v):
        raise DataError(f"{path}:{lineno}: non-finite value {token!r}")
    return v


def read_returns_and_prices(path, kind: str):
    """Parse an input file into ``(labels, values)``; values are prices or returns."""
    header, rows = _read_rows(path)
    if kind == "prices":
        if len(header) < 2:
            raise DataError(f"{path}: prices files need (date, price) columns")
        labels, values = [], []
        for lineno, cells in rows:
            if len(cells) < 2:
                raise DataError(f"{path}:{lineno}: expected 2 columns, got {len(cells)}")
            p = _parse_float(cells[1], path, lineno)
            if p <= 0:
                raise DataError(f"{path}:{lineno}: price must be positive, got {p}")
            labels.append(cells[0])
            values.append(p)
        return labels, np.array(values)
    if kind == "returns":
        col = len(header) - 1  # last column holds the return
        labels, values = [], []
        for lineno, cells in rows:
            if len(cells) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} columns, got {len(cells)}")
            values.append(_parse_float(cells[col], path, lineno))
            labels.append(cells[0] if len(header) > 1 else str(len(labels) + 1))
        return labels, np.array(values)
    raise DataError(f"unknown input kind {kind!r}; expected 'prices' or 'returns'")


def log_returns(prices) -> np.ndarray:
    """``log(p_{i+1} / p_i)`` for a positive price sequence."""
    prices = np.asarray(prices, dtype=float)
    if np.any(~np.isfinite(prices)) or np.any(prices <= 0):
        raise DataError("prices must be positive and finite")
    return np.diff(np.log(prices))


def ingest(path, kind: str = "prices", delta: float = DEFAULT_DELTA) -> ReturnsSeries:
    """Read a price or return file into a :class:`ReturnsSeries`.

    Prices ``p_1..p_n`` become the ``n - 1`` log-returns ``log(p_{i+1}/p_i)``,
    labelled by the date of the later price.
    """
    labels, values = read_returns_and_prices(path, kind)
    if kind == "prices":
        if values.size < 3:
            raise DataError(f"{path}: need at least 3 prices, got {values.size}")
        returns = log_returns(values)
        labels = labels[1:]
    else:
        if values.size < 2:
            raise DataError(f"{path}: need at least 2 returns, got {values.size}")
        returns = values
    try:
        return ReturnsSeries(returns, delta, tuple(labels))
    except InputError as exc:
        raise DataError(str(exc)) from None


# --- key = value files ---------------------------------------------------------------

def read_keyvalue(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    out = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"{path}:{lineno}: empty key")
        out[key] = value
    return out


def keyvalue_text(items) -> str:
    return "".join(f"{k} = {fmt(v) if not isinstance(v, str) else v}\n" for k, v in items)


# --- atomic output ---------------------------------------------------------------------

class _Staging:
    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.staged: list[tuple[Path, Path]] = []

    def path(self, name: str) -> Path:
        fd, tmp = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=self.out_dir)
        os.close(fd)
        tmp = Path(tmp)
        self.staged.append((tmp, self.out_dir / name))
        return tmp

    def write_text(self, name: str, text: str):
        self.path(name).write_text(text)


@contextmanager
def atomic_outputs(out_dir):
    """Stage output files and move them into place only if the block succeeds."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    staging = _Staging(out_dir)
    try:
        yield staging
    except BaseException:
        for tmp, _ in staging.staged:
            tmp.unlink(missing_ok=True)
        raise
    for tmp, final in staging.staged:
        os.replace(tmp, final)


def write_table(path, header, columns):
    """Write equal-length columns as comma-separated text with a header."""
    n = len(columns[0]) if columns else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(n):
            w.writerow([fmt(c[i]) if not isinstance(c[i], str) else c[i] for c in columns])


def read_table(path, expected_header=None):
    """Read a comma-separated table; returns ``(header, list of string rows)``."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = rows[0]
    if expected_header is not None and tuple(header) != tuple(expected_header):
        raise DataError(f"{path}: unexpected header {header}")
    return header, rows[1:]


def read_draws(path):
    _, rows = read_table(path, DRAWS_HEADER)
    if not rows:
        raise DataError(f"{path}: no draws")
    arr = np.array(rows, dtype=float)
    return arr[:, 0].astype(np.int64), arr[:, 1:]


def read_jump_probabilities(path):
    _, rows = read_table(path, JUMP_PROB_HEADER)
    arr = np.array(rows, dtype=float)
    return arr[:, 1], arr[:, 2]
