"""Core matrix types, CSV I/O and validation.

Matrices are stored samples-as-columns (``dim x count``), so column ``j`` of a
high-dimensional matrix and column ``j`` of its embedding refer to the same
sample. Files use the usual tabular layout (one sample per row) unless told
otherwise.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "MatrixFormatError",
    "DataMatrix",
    "PairedDataset",
    "CenteringOperator",
    "as_matrix",
    "load_matrix",
    "write_matrix",
    "center",
    "extract_columns",
]


class MatrixFormatError(ValueError):
    """A matrix file or array could not be interpreted."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


def _frozen(values):
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """Dense ``dim x count`` matrix of samples stored as columns.

    The underlying array is read-only. ``np.asarray(dm)`` returns it, so every
    numeric routine in the package accepts a DataMatrix or a plain array.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise MatrixFormatError(f"expected a 2-D matrix, got {arr.ndim} dimensions")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise MatrixFormatError(f"matrix must be non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise MatrixFormatError(
                f"non-finite entry at row {bad[0]}, column {bad[1]}"
            )
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def count(self) -> int:
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        if dtype is None or np.dtype(dtype) == self.values.dtype:
            return self.values.copy() if copy else self.values
        return self.values.astype(dtype)

    def __repr__(self):
        return f"DataMatrix(dim={self.dim}, count={self.count})"

    @classmethod
    def from_samples(cls, rows) -> "DataMatrix":
        """Build from an array with one sample per row."""
        return cls(np.asarray(rows, dtype=np.float64).T)


@dataclass(frozen=True)
class PairedDataset:
    """High-dimensional data and its embedding, column-aligned by sample."""

    high: DataMatrix
    low: DataMatrix

    def __post_init__(self):
        if not isinstance(self.high, DataMatrix):
            object.__setattr__(self, "high", DataMatrix(self.high))
        if not isinstance(self.low, DataMatrix):
            object.__setattr__(self, "low", DataMatrix(self.low))
        if self.high.count != self.low.count:
            raise ValueError(
                f"sample counts differ: high has {self.high.count}, low has {self.low.count}"
            )
        if self.low.dim > self.high.dim:
            raise ValueError(
                f"embedding dimension {self.low.dim} exceeds input dimension {self.high.dim}"
            )


@dataclass(frozen=True)
class CenteringOperator:
    """The projector ``I_k - (1/k) e e^T`` acting on the sample axis."""

    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("size must be positive")

    def matrix(self) -> np.ndarray:
        k = self.size
        return np.eye(k) - np.full((k, k), 1.0 / k)

    def __call__(self, M):
        arr = np.asarray(M, dtype=np.float64)
        if arr.shape[-1] != self.size:
            raise ValueError(f"expected {self.size} columns, got {arr.shape[-1]}")
        return arr - arr.mean(axis=-1, keepdims=True)


def as_matrix(M, name="matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array (samples as columns)."""
    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _split_fields(line: str, delimiter):
    if delimiter == ",":
        return next(csv.reader(io.StringIO(line)))
    return line.split()


def load_matrix(path, rows_are_samples=True, header=False) -> DataMatrix:
    """Read a comma- or whitespace-delimited numeric file.

    The delimiter is detected from the first data line. Blank lines and lines
    starting with ``#`` are skipped. With ``rows_are_samples`` (the default)
    an ``R x C`` file becomes a matrix with ``dim=C`` and ``count=R``.
    """
    with open(os.fspath(path), "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    rows = []
    width = None
    delimiter = None
    first_width_line = None
    for lineno, raw in enumerate(lines, start=1):
        if header and lineno == 1:
            continue
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if delimiter is None:
            delimiter = "," if "," in line else None
        fields = [f.strip() for f in _split_fields(line, delimiter)]
        if width is None:
            width = len(fields)
            first_width_line = lineno
        elif len(fields) != width:
            raise MatrixFormatError(
                f"ragged row: expected {width} fields (as on line {first_width_line}), "
                f"found {len(fields)}",
                line=lineno,
            )
        row = []
        for col, field in enumerate(fields, start=1):
            try:
                value = float(field)
            except ValueError:
                raise MatrixFormatError(
                    f"non-numeric field {field!r}", line=lineno, column=col
                ) from None
            if not np.isfinite(value):
                raise MatrixFormatError(
                    f"non-finite field {field!r}", line=lineno, column=col
                )
            row.append(value)
        rows.append(row)

    if not rows:
        raise MatrixFormatError(f"empty file: {os.fspath(path)}")
    table = np.array(rows, dtype=np.float64)
    return DataMatrix(table.T if rows_are_samples else table)


def write_matrix(path, M, rows_are_samples=True, delimiter=","):
    """Write ``M`` with full float64 precision (round-trips exactly)."""
    arr = np.asarray(M, dtype=np.float64)
    table = arr.T if rows_are_samples else arr
    with open(os.fspath(path), "w", encoding="utf-8", newline="") as fh:
        for row in table:
            fh.write(delimiter.join(repr(float(v)) for v in row))
            fh.write("\n")


def center(M) -> DataMatrix:
    """Remove each row's mean: ``M (I_k - (1/k) e e^T)``."""
    arr = np.asarray(M, dtype=np.float64)
    return DataMatrix(CenteringOperator(arr.shape[1])(arr))


def extract_columns(M, idx: Sequence[int]) -> DataMatrix:
    """Sub-matrix of the listed columns, in order; duplicates allowed."""
    arr = np.asarray(M, dtype=np.float64)
    idx = np.asarray(idx, dtype=np.intp).ravel()
    if idx.size == 0:
        raise IndexError("empty index list")
    count = arr.shape[1]
    bad = idx[(idx < 0) | (idx >= count)]
    if bad.size:
        raise IndexError(f"column index {int(bad[0])} out of range [0, {count})")
    return DataMatrix(arr[:, idx])
