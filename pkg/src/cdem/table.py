"""Integer contingency tables, their sufficient statistics, and moves.

The sufficient statistic of the common diagonal effect model is the
vector of row sums, column sums and the diagonal sum, where the diagonal
of an R x C table is the cells ``(i, i)`` for ``i < min(R, C)``.  A move
is an integer array annihilated by that map; adding an applicable move to
a table keeps it in the same fiber.
"""
from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import DimensionError, NegativeCellError, TableFormatError

__all__ = [
    "Table",
    "SufficientStat",
    "Move",
    "MoveType",
    "suff_stat",
    "is_move",
    "is_applicable",
    "apply_move",
    "l1_distance",
    "parse_table",
    "read_table",
    "format_table",
    "write_table",
]

# Largest count accepted per cell; totals must also stay representable.
MAX_COUNT = 2**62


class Table:
    """Immutable R x C array of non-negative integer counts."""

    __slots__ = ("_cells",)

    def __init__(self, cells) -> None:
        if isinstance(cells, Table):
            self._cells = cells._cells
            return
        raw = np.asarray(cells, dtype=object)
        if raw.ndim != 2 or raw.shape[0] < 1 or raw.shape[1] < 1:
            raise DimensionError(f"a table must be a non-empty 2-d array, got shape {raw.shape}")
        total = 0
        for v in raw.flat:
            if isinstance(v, (bool, np.bool_)) or not isinstance(v, (int, np.integer)):
                if isinstance(v, (float, np.floating)) and float(v).is_integer():
                    v = int(v)
                else:
                    raise TableFormatError(f"cell value {v!r} is not an integer")
            v = int(v)
            if v < 0:
                raise NegativeCellError(f"cell value {v} is negative")
            if v > MAX_COUNT:
                raise OverflowError(f"cell value {v} exceeds the supported range")
            total += v
        if total > MAX_COUNT:
            raise OverflowError("table total exceeds the supported range")
        arr = np.array(raw.tolist(), dtype=np.int64)
        arr.setflags(write=False)
        self._cells = arr

    @classmethod
    def _trusted(cls, arr: np.ndarray) -> "Table":
        # Skips validation; callers guarantee a non-negative int64 2-d array.
        t = object.__new__(cls)
        a = np.array(arr, dtype=np.int64)
        a.setflags(write=False)
        t._cells = a
        return t

    @property
    def cells(self) -> np.ndarray:
        """Read-only ``int64`` view of the counts."""
        return self._cells

    @property
    def shape(self) -> tuple[int, int]:
        return self._cells.shape

    @property
    def rows(self) -> int:
        return self._cells.shape[0]

    @property
    def cols(self) -> int:
        return self._cells.shape[1]

    @property
    def total(self) -> int:
        return int(self._cells.sum())

    def tolist(self) -> list[list[int]]:
        return self._cells.tolist()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Table):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._cells, other._cells))

    def __hash__(self) -> int:
        return hash((self.shape, self._cells.tobytes()))

    def __lt__(self, other: "Table") -> bool:
        return (self.shape, self.tolist()) < (other.shape, other.tolist())

    def __repr__(self) -> str:
        return f"Table({self.tolist()})"


@dataclass(frozen=True)
class SufficientStat:
    """Row sums, column sums, diagonal sum and total of a table."""

    row_sums: tuple[int, ...]
    col_sums: tuple[int, ...]
    diag_sum: int
    n: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "row_sums", tuple(int(v) for v in self.row_sums))
        object.__setattr__(self, "col_sums", tuple(int(v) for v in self.col_sums))
        object.__setattr__(self, "diag_sum", int(self.diag_sum))
        object.__setattr__(self, "n", int(self.n))
        if not self.row_sums or not self.col_sums:
            raise DimensionError("row and column sums must be non-empty")
        if min(self.row_sums + self.col_sums + (self.diag_sum, self.n)) < 0:
            raise ValueError("sufficient statistics must be non-negative")
        if sum(self.row_sums) != self.n or sum(self.col_sums) != self.n:
            raise ValueError("row sums and column sums must both total n")
        cap = sum(min(r, c) for r, c in zip(self.row_sums, self.col_sums))
        if self.diag_sum > cap:
            raise ValueError(f"diagonal sum {self.diag_sum} exceeds its cap {cap}")

    @classmethod
    def from_margins(cls, row_sums: Sequence[int], col_sums: Sequence[int], diag_sum: int) -> "SufficientStat":
        return cls(tuple(row_sums), tuple(col_sums), diag_sum, sum(row_sums))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row_sums), len(self.col_sums)

    def as_vector(self) -> tuple[int, ...]:
        """The stacked vector (row sums, column sums, diagonal sum)."""
        return self.row_sums + self.col_sums + (self.diag_sum,)


class MoveType(enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    V = "V"
    VI = "VI"
    OTHER = "OTHER"

    @property
    def order(self) -> int:
        return _TYPE_ORDER[self]

    @classmethod
    def parse(cls, text: str) -> "MoveType":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ValueError(f"unknown move type {text!r}") from None

    def __str__(self) -> str:
        return self.value


_TYPE_ORDER = {t: k for k, t in enumerate(MoveType)}

Entry = tuple[tuple[int, int], int]


@dataclass(frozen=True)
class Move:
    """Sparse integer array in the kernel of the sufficient-statistic map.

    ``entries`` holds the nonzero cells as ``((i, j), value)`` pairs in
    row-major order; equality and hashing ignore the type tag.
    """

    rows: int
    cols: int
    entries: tuple[Entry, ...]
    type_tag: MoveType = field(default=MoveType.OTHER, compare=False)

    def __post_init__(self) -> None:
        cleaned = {}
        for (i, j), v in self.entries:
            i, j, v = int(i), int(j), int(v)
            if not (0 <= i < self.rows and 0 <= j < self.cols):
                raise DimensionError(f"cell ({i}, {j}) outside a {self.rows}x{self.cols} table")
            if (i, j) in cleaned:
                raise ValueError(f"cell ({i}, {j}) listed twice")
            if v:
                cleaned[(i, j)] = v
        object.__setattr__(self, "entries", tuple(sorted(cleaned.items())))

    @classmethod
    def from_array(cls, arr, type_tag: MoveType = MoveType.OTHER) -> "Move":
        a = np.asarray(arr)
        if a.ndim != 2:
            raise DimensionError("a move must be 2-d")
        if a.dtype.kind not in "iu":
            if not np.all(np.mod(a, 1) == 0):
                raise ValueError("move entries must be integers")
        a = a.astype(np.int64)
        idx = np.argwhere(a != 0)
        return cls(a.shape[0], a.shape[1], tuple(((int(i), int(j)), int(a[i, j])) for i, j in idx), type_tag)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def degree(self) -> int:
        return sum(v for _, v in self.entries if v > 0)

    @property
    def support(self) -> tuple[tuple[int, int], ...]:
        return tuple(c for c, _ in self.entries)

    def dense(self) -> np.ndarray:
        a = np.zeros(self.shape, dtype=np.int64)
        for (i, j), v in self.entries:
            a[i, j] = v
        return a

    def positive_part(self) -> np.ndarray:
        return np.maximum(self.dense(), 0)

    def negative_part(self) -> np.ndarray:
        return np.maximum(-self.dense(), 0)

    def canonical(self) -> "Move":
        """The member of ``{z, -z}`` whose first nonzero entry is positive."""
        if self.entries and self.entries[0][1] < 0:
            return -self
        return self

    def with_tag(self, tag: MoveType) -> "Move":
        return Move(self.rows, self.cols, self.entries, tag)

    def __neg__(self) -> "Move":
        return Move(self.rows, self.cols, tuple((c, -v) for c, v in self.entries), self.type_tag)

    def __repr__(self) -> str:
        body = ", ".join(f"{c}: {v:+d}" for c, v in self.entries)
        return f"Move[{self.type_tag}]({self.rows}x{self.cols}; {body})"


TableLike = Union[Table, np.ndarray, Sequence[Sequence[int]]]
MoveLike = Union[Move, np.ndarray, Sequence[Sequence[int]]]


def _cells(x: TableLike) -> np.ndarray:
    return x.cells if isinstance(x, Table) else Table(x).cells


def _move_array(z: MoveLike) -> np.ndarray:
    if isinstance(z, Move):
        return z.dense()
    a = np.asarray(z)
    if a.ndim != 2:
        raise DimensionError("a move must be 2-d")
    return a.astype(np.int64)


def _diag_sum(a: np.ndarray) -> int:
    d = min(a.shape)
    return int(np.trace(a[:d, :d]))


def suff_stat(x: TableLike) -> SufficientStat:
    a = _cells(x)
    return SufficientStat(tuple(a.sum(axis=1).tolist()), tuple(a.sum(axis=0).tolist()), _diag_sum(a), int(a.sum()))


def is_move(z: MoveLike) -> bool:
    """True when every row sum, column sum and the diagonal sum of ``z`` is 0."""
    a = _move_array(z)
    return bool(not a.sum(axis=1).any() and not a.sum(axis=0).any() and _diag_sum(a) == 0)


def _check_shapes(a_shape, b_shape) -> None:
    if tuple(a_shape) != tuple(b_shape):
        raise DimensionError(f"shape mismatch: {tuple(a_shape)} vs {tuple(b_shape)}")


def is_applicable(z: MoveLike, x: TableLike) -> bool:
    a = _cells(x)
    if isinstance(z, Move):
        _check_shapes(z.shape, a.shape)
        return all(a[c] + v >= 0 for c, v in z.entries)
    zz = _move_array(z)
    _check_shapes(zz.shape, a.shape)
    return bool(np.all(a + zz >= 0))


def apply_move(x: TableLike, z: MoveLike) -> Table:
    a = _cells(x)
    zz = _move_array(z)
    _check_shapes(zz.shape, a.shape)
    out = a + zz
    if (out < 0).any():
        raise NegativeCellError("move is not applicable: a cell would become negative")
    return Table._trusted(out)


def l1_distance(x: TableLike, y: TableLike) -> int:
    a, b = _cells(x), _cells(y)
    _check_shapes(a.shape, b.shape)
    return int(np.abs(a - b).sum())


# -- CSV ---------------------------------------------------------------------

def parse_table(text: str) -> Table:
    """Parse comma-separated integer rows (no header) into a table.

    Blank lines are ignored.  Negative values, non-integers and ragged rows
    raise :class:`TableFormatError`.
    """
    rows: list[list[int]] = []
    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.strip()
        if not line:
            continue
        row = []
        for field_ in line.split(","):
            tok = field_.strip()
            try:
                v = int(tok, 10)
            except ValueError:
                raise TableFormatError(f"line {lineno}: {tok!r} is not an integer") from None
            if v < 0:
                raise TableFormatError(f"line {lineno}: negative count {v}")
            row.append(v)
        if rows and len(row) != len(rows[0]):
            raise TableFormatError(f"line {lineno}: expected {len(rows[0])} fields, got {len(row)}")
        rows.append(row)
    if not rows:
        raise TableFormatError("no table rows found")
    try:
        return Table(rows)
    except OverflowError as exc:
        raise TableFormatError(str(exc)) from None


def read_table(path: Union[str, Path]) -> Table:
    return parse_table(Path(path).read_text())


def format_table(x: TableLike) -> str:
    return "".join(",".join(str(v) for v in row) + "\n" for row in _cells(x).tolist())


def write_table(x: TableLike, path: Union[str, Path]) -> None:
    Path(path).write_text(format_table(x))

