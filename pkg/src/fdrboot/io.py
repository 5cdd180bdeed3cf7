"""CSV readers and writers for t-values, null draws, return/factor panels and reports."""

from __future__ import annotations

import csv
import os
import tempfile
from pathlib import Path

import numpy as np

from fdrboot.factor_model import AlphaEstimates, NullSampleSet


class CsvFormatError(ValueError):
    pass


def _parse_float(cell: str, line: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise CsvFormatError(f"line {line}, column {column!r}: not a number: {cell!r}") from None
    if not np.isfinite(value):
        raise CsvFormatError(f"line {line}, column {column!r}: non-finite value {cell!r}")
    return value


def read_numeric_csv(path) -> tuple[list[str], np.ndarray]:
    """Header plus a dense float matrix. Line numbers in errors are 1-based."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CsvFormatError(
                    f"{path}: line {line_no} has {len(row)} cells, header has {len(header)}"
                )
            rows.append([_parse_float(c.strip(), line_no, header[j]) for j, c in enumerate(row)])
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    return header, np.array(rows, dtype=float)


def load_tvalues(path, df: int | None = None, column: str | None = None) -> AlphaEstimates:
    """Observed t-values: one numeric column, optionally a constant ``df`` column."""
    header, data = read_numeric_csv(path)
    lowered = [h.lower() for h in header]
    file_df = None
    if "df" in lowered:
        col = data[:, lowered.index("df")]
        if np.any(col != col[0]) or col[0] != int(col[0]):
            raise CsvFormatError(f"{path}: df column must hold one integer value")
        file_df = int(col[0])
    value_cols = [j for j, h in enumerate(lowered) if h != "df"]
    if column is not None:
        if column not in header:
            raise CsvFormatError(f"{path}: no column named {column!r}")
        j = header.index(column)
    elif len(value_cols) == 1:
        j = value_cols[0]
    else:
        raise CsvFormatError(f"{path}: expected one t-value column, found {len(value_cols)}")
    use_df = file_df if file_df is not None else df
    if use_df is None:
        raise CsvFormatError(f"{path}: degrees of freedom missing (no df column and none given)")
    return AlphaEstimates(data[:, j], use_df)


def load_nulls(path, df: int, n_expected: int | None = None) -> NullSampleSet:
    """Null draws: rows are draws, columns are hypotheses."""
    _, data = read_numeric_csv(path)
    if n_expected is not None and data.shape[1] != n_expected:
        raise CsvFormatError(
            f"{path}: {data.shape[1]} hypothesis columns, expected {n_expected}"
        )
    return NullSampleSet(data, df)


def load_panel(path) -> tuple[list[str], np.ndarray]:
    """Rows are time steps, columns are portfolios or factors."""
    return read_numeric_csv(path)


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_matrix_csv(header, matrix) -> str:
    lines = [",".join(header)]
    for row in np.atleast_2d(matrix):
        lines.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def write_nulls(path, sample: NullSampleSet, header=None) -> None:
    header = header or [f"h{j + 1}" for j in range(sample.n)]
    atomic_write_text(path, format_matrix_csv(header, sample.draws))


def write_tvalues(path, alphas: AlphaEstimates) -> None:
    rows = np.column_stack([alphas.alpha_hat, np.full(alphas.n, alphas.df)])
    lines = ["tvalue,df"] + [f"{a:.17g},{int(d)}" for a, d in rows]
    atomic_write_text(path, "\n".join(lines) + "\n")
