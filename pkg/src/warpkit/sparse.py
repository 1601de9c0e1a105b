"""Sparse matrix storage (COO, CSR, SELL-P), MatrixMarket I/O, and the
sequential dense reference product.

All formats hold 64-bit real scalars and are immutable after construction.
The dense reference fold order is one row at a time, entries left to right
in column order; every sequential kernel in this package uses the same
order so results can be compared bit for bit.
"""

import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidSliceSize, ParseError, UnsupportedFormat
from .config import is_power_of_two


def _as_index_array(values, name):
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return arr


@dataclass(frozen=True)
class CooMatrix:
    """Coordinate storage: parallel (row, col, value) arrays.

    Entries are sorted row-major then by column, contain no duplicate
    (row, col) pairs, and all indices are in bounds.
    """

    nrows: int
    ncols: int
    row_idx: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_idx", _as_index_array(self.row_idx, "row_idx"))
        object.__setattr__(self, "col_idx", _as_index_array(self.col_idx, "col_idx"))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if not (len(self.row_idx) == len(self.col_idx) == len(self.values)):
            raise ValueError("row_idx, col_idx, values must have equal length")
        if self.nrows < 0 or self.ncols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        if self.nnz:
            if self.row_idx.min() < 0 or self.row_idx.max() >= self.nrows:
                raise ValueError("row index out of bounds")
            if self.col_idx.min() < 0 or self.col_idx.max() >= self.ncols:
                raise ValueError("column index out of bounds")
            keys = self.row_idx * self.ncols + self.col_idx
            if not np.all(np.diff(keys) > 0):
                raise ValueError("entries must be sorted row-major with unique (row, col) pairs")

    @property
    def nnz(self) -> int:
        return len(self.values)

    @classmethod
    def from_entries(cls, nrows, ncols, rows, cols, values, *, sum_duplicates=True) -> "CooMatrix":
        """Build from unsorted triplets; duplicates are summed."""
        rows = _as_index_array(rows, "rows")
        cols = _as_index_array(cols, "cols")
        values = np.asarray(values, dtype=np.float64)
        if len(rows) == 0:
            return cls(nrows, ncols, rows, cols, values)
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        if sum_duplicates:
            keys = rows * max(ncols, 1) + cols
            unique_mask = np.concatenate(([True], np.diff(keys) != 0))
            group_ids = np.cumsum(unique_mask) - 1
            summed = np.zeros(group_ids[-1] + 1, dtype=np.float64)
            np.add.at(summed, group_ids, values)
            rows, cols, values = rows[unique_mask], cols[unique_mask], summed
        return cls(nrows, ncols, rows, cols, values)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.nrows, self.ncols))
        dense[self.row_idx, self.col_idx] += self.values
        return dense

    def row_nnz(self) -> np.ndarray:
        counts = np.zeros(self.nrows, dtype=np.int64)
        np.add.at(counts, self.row_idx, 1)
        return counts

    def is_symmetric(self) -> bool:
        if self.nrows != self.ncols:
            return False
        order = np.lexsort((self.row_idx, self.col_idx))
        return (
            np.array_equal(self.col_idx[order], self.row_idx)
            and np.array_equal(self.row_idx[order], self.col_idx)
            and np.array_equal(self.values[order], self.values)
        )


@dataclass(frozen=True)
class CsrMatrix:
    """Compressed sparse row storage with strictly increasing columns per row."""

    nrows: int
    ncols: int
    row_ptrs: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_ptrs", _as_index_array(self.row_ptrs, "row_ptrs"))
        object.__setattr__(self, "col_idx", _as_index_array(self.col_idx, "col_idx"))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if len(self.row_ptrs) != self.nrows + 1:
            raise ValueError("row_ptrs must have length nrows + 1")
        if self.row_ptrs[0] != 0 or self.row_ptrs[-1] != len(self.values):
            raise ValueError("row_ptrs must start at 0 and end at nnz")
        if np.any(np.diff(self.row_ptrs) < 0):
            raise ValueError("row_ptrs must be nondecreasing")
        if len(self.col_idx) != len(self.values):
            raise ValueError("col_idx and values must have equal length")
        for r in range(self.nrows):
            cols = self.col_idx[self.row_ptrs[r] : self.row_ptrs[r + 1]]
            if len(cols) and (cols.min() < 0 or cols.max() >= self.ncols):
                raise ValueError("column index out of bounds")
            if np.any(np.diff(cols) <= 0):
                raise ValueError(f"columns of row {r} must be strictly increasing")

    @property
    def nnz(self) -> int:
        return len(self.values)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.nrows, self.ncols))
        for r in range(self.nrows):
            lo, hi = self.row_ptrs[r], self.row_ptrs[r + 1]
            dense[r, self.col_idx[lo:hi]] += self.values[lo:hi]
        return dense

    def row_nnz(self) -> np.ndarray:
        return np.diff(self.row_ptrs)


@dataclass(frozen=True)
class SellpMatrix:
    """Sliced ELLPACK with padding.

    Rows are grouped into slices of ``slice_size``; each slice is padded to
    its longest row and stored column-major with stride ``slice_size``.
    ``slice_sets`` holds cumulative per-slice widths, so slice s occupies
    storage ``[slice_sets[s] * slice_size, slice_sets[s+1] * slice_size)``.
    Padding entries hold column 0 and value 0; real entry counts live in
    ``row_lengths``.
    """

    nrows: int
    ncols: int
    slice_size: int
    slice_sets: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    row_lengths: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "slice_sets", _as_index_array(self.slice_sets, "slice_sets"))
        object.__setattr__(self, "col_idx", _as_index_array(self.col_idx, "col_idx"))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "row_lengths", _as_index_array(self.row_lengths, "row_lengths"))
        if not is_power_of_two(self.slice_size):
            raise InvalidSliceSize(f"slice_size must be a positive power of two, got {self.slice_size}")
        nslices = (self.nrows + self.slice_size - 1) // self.slice_size
        if len(self.slice_sets) != nslices + 1 or (nslices and self.slice_sets[0] != 0):
            raise ValueError("slice_sets must hold cumulative widths for every slice")
        if len(self.slice_sets) and np.any(np.diff(self.slice_sets) < 0):
            raise ValueError("slice widths must be nonnegative")
        stored = (self.slice_sets[-1] if nslices else 0) * self.slice_size
        if len(self.values) != stored or len(self.col_idx) != stored:
            raise ValueError("storage size must equal slice_size times the total width")
        if len(self.row_lengths) != self.nrows:
            raise ValueError("row_lengths must have one entry per row")

    @property
    def nslices(self) -> int:
        return (self.nrows + self.slice_size - 1) // self.slice_size

    @property
    def nnz(self) -> int:
        return int(self.row_lengths.sum())

    def slice_width(self, s: int) -> int:
        return int(self.slice_sets[s + 1] - self.slice_sets[s])

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.nrows, self.ncols))
        ss = self.slice_size
        for s in range(self.nslices):
            base = self.slice_sets[s] * ss
            for r in range(s * ss, min((s + 1) * ss, self.nrows)):
                local = r - s * ss
                for j in range(self.row_lengths[r]):
                    k = base + j * ss + local
                    dense[r, self.col_idx[k]] += self.values[k]
        return dense

    def row_nnz(self) -> np.ndarray:
        return self.row_lengths.copy()


def coo_to_csr(m: CooMatrix) -> CsrMatrix:
    counts = np.zeros(m.nrows + 1, dtype=np.int64)
    np.add.at(counts[1:], m.row_idx, 1)
    row_ptrs = np.cumsum(counts)
    return CsrMatrix(m.nrows, m.ncols, row_ptrs, m.col_idx.copy(), m.values.copy())


def coo_to_sellp(m: CooMatrix, slice_size: int = 64) -> SellpMatrix:
    if not is_power_of_two(slice_size):
        raise InvalidSliceSize(f"slice_size must be a positive power of two, got {slice_size}")
    csr = coo_to_csr(m)
    row_lengths = csr.row_nnz()
    nslices = (m.nrows + slice_size - 1) // slice_size
    widths = np.zeros(nslices, dtype=np.int64)
    for s in range(nslices):
        chunk = row_lengths[s * slice_size : (s + 1) * slice_size]
        widths[s] = chunk.max() if len(chunk) else 0
    slice_sets = np.concatenate(([0], np.cumsum(widths)))
    total = int(slice_sets[-1]) * slice_size if nslices else 0
    col_idx = np.zeros(total, dtype=np.int64)
    values = np.zeros(total, dtype=np.float64)
    for s in range(nslices):
        base = slice_sets[s] * slice_size
        for r in range(s * slice_size, min((s + 1) * slice_size, m.nrows)):
            local = r - s * slice_size
            lo = csr.row_ptrs[r]
            for j in range(row_lengths[r]):
                k = base + j * slice_size + local
                col_idx[k] = csr.col_idx[lo + j]
                values[k] = csr.values[lo + j]
    return SellpMatrix(m.nrows, m.ncols, slice_size, slice_sets, col_idx, values, row_lengths)


# -- MatrixMarket ---------------------------------------------------------

_MM_BANNER = "%%matrixmarket"


def _open_stream(source):
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            return data
        return data.encode("ascii")
    if isinstance(source, bytes):
        return source
    if isinstance(source, str) and "\n" not in source and os.path.exists(source):
        with open(source, "rb") as fh:
            return fh.read()
    if isinstance(source, os.PathLike):
        with open(source, "rb") as fh:
            return fh.read()
    if isinstance(source, str):
        return source.encode("ascii")
    raise TypeError(f"cannot read MatrixMarket data from {type(source)!r}")


def read_matrix_market(source) -> CooMatrix:
    """Parse a MatrixMarket ``coordinate`` file into a CooMatrix.

    Supports real/integer/pattern fields and general/symmetric symmetry.
    Indices are converted from 1- to 0-based, symmetric inputs are expanded
    to full storage, pattern entries get value 1.0, and duplicates are
    summed.
    """
    try:
        text = _open_stream(source).decode("ascii")
    except UnicodeDecodeError as exc:
        raise ParseError(f"MatrixMarket files must be ASCII: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty MatrixMarket stream")
    banner = lines[0].strip().lower().split()
    if len(banner) != 5 or banner[0] != _MM_BANNER or banner[1] != "matrix":
        raise ParseError(f"malformed MatrixMarket banner: {lines[0]!r}")
    layout, fieldname, symmetry = banner[2], banner[3], banner[4]
    if layout != "coordinate":
        raise UnsupportedFormat(f"only coordinate layout is supported, got {layout!r}")
    if fieldname not in ("real", "integer", "pattern"):
        raise UnsupportedFormat(f"unsupported field {fieldname!r} (complex files are not supported)")
    if symmetry not in ("general", "symmetric"):
        raise UnsupportedFormat(f"unsupported symmetry {symmetry!r}")

    body = [
        (n, line) for n, line in enumerate(lines[1:], start=2)
        if line.strip() and not line.lstrip().startswith("%")
    ]
    if not body:
        raise ParseError("missing size line")
    size_line_no, size_line = body[0]
    parts = size_line.split()
    if len(parts) != 3:
        raise ParseError(f"line {size_line_no}: size line must be 'nrows ncols nnz'")
    try:
        nrows, ncols, nnz = (int(p) for p in parts)
    except ValueError as exc:
        raise ParseError(f"line {size_line_no}: {exc}") from exc
    if nrows < 0 or ncols < 0 or nnz < 0:
        raise ParseError(f"line {size_line_no}: negative size")
    entries = body[1:]
    if len(entries) != nnz:
        raise ParseError(f"expected {nnz} entries, found {len(entries)}")

    pattern = fieldname == "pattern"
    want = 2 if pattern else 3
    rows, cols, vals = [], [], []
    for line_no, line in entries:
        parts = line.split()
        if len(parts) != want:
            raise ParseError(f"line {line_no}: expected {want} fields, got {len(parts)}")
        try:
            i = int(parts[0])
            j = int(parts[1])
            v = 1.0 if pattern else float(parts[2])
        except ValueError as exc:
            raise ParseError(f"line {line_no}: {exc}") from exc
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise ParseError(f"line {line_no}: entry ({i}, {j}) outside {nrows}x{ncols}")
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
        if symmetry == "symmetric" and i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            vals.append(v)
    return CooMatrix.from_entries(nrows, ncols, rows, cols, vals)


def write_matrix_market(m: CooMatrix, target=None) -> str:
    """Serialize as 'coordinate real general'; values keep full precision."""
    out = io.StringIO()
    out.write("%%MatrixMarket matrix coordinate real general\n")
    out.write(f"{m.nrows} {m.ncols} {m.nnz}\n")
    for r, c, v in zip(m.row_idx, m.col_idx, m.values):
        out.write(f"{r + 1} {c + 1} {v:.17g}\n")
    text = out.getvalue()
    if target is not None:
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w") as fh:
                fh.write(text)
    return text


# -- sequential reference product ------------------------------------------


def _x_as_list(x):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch("x must be a vector")
    return arr.tolist(), len(arr)


def dense_spmv_reference(m, x) -> np.ndarray:
    """y = A x computed sequentially, row by row, entries left to right.

    Accepts any of the three sparse formats or a dense 2-D array. This is
    the correctness oracle every simulated backend is validated against.
    """
    xs, n = _x_as_list(x)
    if isinstance(m, CooMatrix):
        if m.ncols != n:
            raise DimensionMismatch(f"matrix is {m.nrows}x{m.ncols}, x has length {n}")
        y = [0.0] * m.nrows
        rows = m.row_idx.tolist()
        cols = m.col_idx.tolist()
        vals = m.values.tolist()
        for k in range(m.nnz):
            y[rows[k]] += vals[k] * xs[cols[k]]
        return np.asarray(y)
    if isinstance(m, CsrMatrix):
        if m.ncols != n:
            raise DimensionMismatch(f"matrix is {m.nrows}x{m.ncols}, x has length {n}")
        y = [0.0] * m.nrows
        ptrs = m.row_ptrs.tolist()
        cols = m.col_idx.tolist()
        vals = m.values.tolist()
        for r in range(m.nrows):
            acc = 0.0
            for k in range(ptrs[r], ptrs[r + 1]):
                acc += vals[k] * xs[cols[k]]
            y[r] = acc
        return np.asarray(y)
    if isinstance(m, SellpMatrix):
        if m.ncols != n:
            raise DimensionMismatch(f"matrix is {m.nrows}x{m.ncols}, x has length {n}")
        y = [0.0] * m.nrows
        ss = m.slice_size
        sets = m.slice_sets.tolist()
        cols = m.col_idx.tolist()
        vals = m.values.tolist()
        lengths = m.row_lengths.tolist()
        for s in range(m.nslices):
            base = sets[s] * ss
            hi = min((s + 1) * ss, m.nrows)
            for r in range(s * ss, hi):
                local = r - s * ss
                acc = 0.0
                k = base + local
                for _ in range(lengths[r]):
                    acc += vals[k] * xs[cols[k]]
                    k += ss
                y[r] = acc
        return np.asarray(y)
    dense = np.asarray(m, dtype=np.float64)
    if dense.ndim != 2:
        raise DimensionMismatch("dense operand must be two-dimensional")
    if dense.shape[1] != n:
        raise DimensionMismatch(f"matrix is {dense.shape[0]}x{dense.shape[1]}, x has length {n}")
    y = [0.0] * dense.shape[0]
    for r in range(dense.shape[0]):
        acc = 0.0
        row = dense[r].tolist()
        for c in range(dense.shape[1]):
            acc += row[c] * xs[c]
        y[r] = acc
    return np.asarray(y)
