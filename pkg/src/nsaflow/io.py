"""Plain-text matrix and trace files.

Matrices are delimiter-separated rows with an optional header line. Lines
starting with ``#`` at the top of a file are comments. Floats are written with
17 significant digits so a read after a write reproduces every value exactly.
Writes go to a temporary file in the target directory and are renamed into
place, so readers never observe a half-written file.
"""
from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError

FLOAT_FMT = ".17g"


class MatrixFormatError(ValueError):
    """Malformed matrix text: ragged rows, non-numeric cells or no data."""


@dataclass
class MatrixFile:
    data: np.ndarray
    header: list[str] | None = None
    comments: list[str] | None = None


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), FLOAT_FMT)


def _is_numeric_row(cells: Sequence[str]) -> bool:
    try:
        for c in cells:
            float(c)
    except ValueError:
        return False
    return True


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sniff_delimiter(line: str, default: str) -> str:
    for d in (",", "\t", ";"):
        if d in line:
            return d
    return default if default in line else " "


def parse_matrix(text: str, delimiter: str | None = None) -> MatrixFile:
    comments: list[str] = []
    body: list[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not body and (not line or line.startswith("#")):
            if line:
                comments.append(line[1:].strip())
            continue
        if line:
            body.append(line)
    if not body:
        raise MatrixFormatError("no data rows")
    delim = delimiter or _sniff_delimiter(body[0], ",")
    if delim == " ":
        rows = [line.split() for line in body]
    else:
        rows = [[c.strip() for c in r] for r in csv.reader(body, delimiter=delim)]

    header = None
    if not _is_numeric_row(rows[0]):
        header, rows = rows[0], rows[1:]
    if not rows:
        raise MatrixFormatError("header without data rows")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise MatrixFormatError(f"ragged row {i + 1}: {len(r)} fields, expected {width}")
    if header is not None and len(header) != width:
        raise MatrixFormatError(f"header has {len(header)} fields, rows have {width}")
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise MatrixFormatError(f"non-numeric cell: {exc}") from exc
    return MatrixFile(data=data, header=header, comments=comments or None)


def read_matrix(path: str | os.PathLike, delimiter: str | None = None) -> np.ndarray:
    """Read a matrix; raises ``OSError`` for unreadable paths and ``MatrixFormatError`` for bad content."""
    return read_matrix_file(path, delimiter).data


def read_matrix_file(path: str | os.PathLike, delimiter: str | None = None) -> MatrixFile:
    with open(path, "r", newline="") as fh:
        return parse_matrix(fh.read(), delimiter)


def format_table(
    rows: Iterable[Sequence],
    header: Sequence[str] | None = None,
    comments: Sequence[str] | None = None,
    delimiter: str = ",",
) -> str:
    buf = io.StringIO()
    for c in comments or ():
        buf.write(f"# {c}\n")
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    if header is not None:
        writer.writerow(header)
    for r in rows:
        writer.writerow([v if isinstance(v, str) else _fmt(v) for v in r])
    return buf.getvalue()


def write_matrix(
    path: str | os.PathLike,
    M,
    header: Sequence[str] | None = None,
    comments: Sequence[str] | None = None,
    delimiter: str = ",",
) -> None:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {M.shape}")
    if header is not None and len(header) != M.shape[1]:
        raise DimensionError("header length does not match column count")
    atomic_write_text(path, format_table(M.tolist(), header, comments, delimiter))


def write_table(
    path: str | os.PathLike,
    rows: Iterable[Sequence],
    header: Sequence[str],
    comments: Sequence[str] | None = None,
) -> None:
    """Write a header plus records; ints stay ints, floats get 17 digits."""
    atomic_write_text(path, format_table(rows, header, comments))
