"""
CSV formats.

Ratings matrix::

    user,item_1,...,item_d,target
    Jim,NA,6,7,8,9,NA

``NA`` (exact, case-sensitive) is the only missing token; a literal 0 is
rejected.  Users with a non-``NA`` target are the responders.

Results file: columns ``n,k,replications,mean_abs_err,std_err`` followed by
one comment line ``# slope=<v> intercept=<v> r2=<v>``.  Floats are written
with ``repr`` so they read back bit-exactly.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import TextIO

import numpy as np

from collabknn.core import DatabaseSnapshot, InvalidRatingError, QueryUser
from collabknn.harness import ConvergenceResult, ConvergenceRow

NA = "NA"
RESULT_COLUMNS = ["n", "k", "replications", "mean_abs_err", "std_err"]


class DataFormatError(ValueError):
    pass


def _value(tok: str, s: float, where: str) -> float:
    tok = tok.strip()
    if tok == NA:
        return 0.0
    try:
        v = float(tok)
    except ValueError:
        raise DataFormatError(f"{where}: {tok!r} is neither a number nor NA") from None
    if not 1 <= v <= s:
        raise DataFormatError(f"{where}: rating {tok} outside [1, {s}] (use NA for unrated)")
    return v


def parse_row(values: list[str], s: float, where: str = "query") -> np.ndarray:
    return np.array([_value(v, s, f"{where}, field {j + 1}") for j, v in enumerate(values)])


def parse_query(text: str, d: int, s: float = 10.0) -> QueryUser:
    """Query ratings as ``d`` comma-separated values (``NA`` for unrated)."""
    values = [t for t in next(csv.reader([text]))]
    if len(values) != d:
        raise DataFormatError(f"query has {len(values)} values but the matrix has {d} items")
    x = parse_row(values, s)
    if not x.any():
        raise DataFormatError("query must rate at least one item")
    return QueryUser.from_ratings(x, s)


def format_row(x: np.ndarray, shown: np.ndarray | None = None) -> list[str]:
    shown = x != 0 if shown is None else shown
    return [repr(float(v)) if f else NA for v, f in zip(x, shown)]


def read_ratings_matrix(src: str | Path | TextIO, s: float = 10.0) -> tuple[list[str], DatabaseSnapshot]:
    """Parse a ratings matrix into user ids and a snapshot (reveal = rated items)."""
    if isinstance(src, (str, Path)):
        try:
            text = Path(src).read_text()
        except OSError as e:
            raise DataFormatError(f"cannot read {src}: {e}") from None
        fh: TextIO = io.StringIO(text)
    else:
        fh = src
    rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError("line 1: empty file")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 2
    expected = ["user"] + [f"item_{j}" for j in range(1, d + 1)] + ["target"]
    if d < 1 or header != expected:
        raise DataFormatError(f"line 1: header must be {','.join(expected) if d >= 1 else 'user,item_1,...,item_d,target'}")
    ids, raw, y = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != d + 2:
            raise DataFormatError(f"line {lineno}: expected {d + 2} fields, got {len(row)}")
        ids.append(row[0].strip())
        raw.append(parse_row(row[1:d + 1], s, f"line {lineno}"))
        y.append(_value(row[d + 1], s, f"line {lineno}, target"))
    if not ids:
        raise DataFormatError("line 2: no users")
    raw_a = np.array(raw)
    y_a = np.array(y)
    resp = y_a != 0
    if not resp.any():
        raise DataFormatError("no user has rated the target item")
    try:
        db = DatabaseSnapshot(raw_a, raw_a != 0, np.where(resp, y_a, np.nan), resp, s)
    except InvalidRatingError as e:
        raise DataFormatError(str(e)) from None
    return ids, db


def write_ratings_matrix(fh: TextIO, db: DatabaseSnapshot, ids: list[str] | None = None) -> None:
    """Unrevealed ratings and non-responder targets are written as NA."""
    ids = ids or [f"u{i}" for i in range(1, db.n + 1)]
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["user"] + [f"item_{j}" for j in range(1, db.d + 1)] + ["target"])
    for i in range(db.n):
        target = repr(float(db.y[i])) if db.responders[i] else NA
        w.writerow([ids[i]] + format_row(db.raw[i], db.reveal[i]) + [target])


def write_results(fh: TextIO, result: ConvergenceResult) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in result.rows:
        w.writerow([r.n, r.k, r.replications, repr(r.mean_abs_err), repr(r.std_err)])
    f = result.fit
    fh.write(f"# slope={f.slope!r} intercept={f.intercept!r} r2={f.r_squared!r}\n")


def read_results(src: str | Path) -> tuple[list[ConvergenceRow], dict[str, float]]:
    """Rows of a results file plus the values in its trailing comment, if any."""
    try:
        lines = Path(src).read_text().splitlines()
    except OSError as e:
        raise DataFormatError(f"cannot read {src}: {e}") from None
    body = [(i, ln) for i, ln in enumerate(lines, start=1) if ln.strip() and not ln.startswith("#")]
    comment = {}
    for ln in lines:
        if ln.startswith("#"):
            for part in ln[1:].split():
                key, _, val = part.partition("=")
                if val:
                    comment[key] = float(val)
    if not body:
        raise DataFormatError("line 1: empty results file")
    lineno, head = body[0]
    if [c.strip() for c in head.split(",")] != RESULT_COLUMNS:
        raise DataFormatError(f"line {lineno}: header must be {','.join(RESULT_COLUMNS)}")
    rows = []
    for lineno, ln in body[1:]:
        parts = ln.split(",")
        if len(parts) != len(RESULT_COLUMNS):
            raise DataFormatError(f"line {lineno}: expected {len(RESULT_COLUMNS)} fields")
        try:
            rows.append(ConvergenceRow(int(parts[0]), int(parts[1]), int(parts[2]),
                                       float(parts[3]), float(parts[4])))
        except ValueError:
            raise DataFormatError(f"line {lineno}: malformed number") from None
    if not rows:
        raise DataFormatError("results file has no data rows")
    return rows, comment
