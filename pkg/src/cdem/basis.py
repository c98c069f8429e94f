"""Markov bases for tables with fixed row sums, column sums and diagonal sum.

Six families of moves are generated.  With ``d = min(R, C)`` and indices
below ``d`` called diagonal indices:

* Type I: degree-2 basic moves on a 2x2 subtable with no diagonal cell.
* Type II: degree-3 moves on a diagonal triple, zero on its diagonal.
* Type III: degree-3 moves on a diagonal triple with one +1 and one -1
  on the diagonal; the three per triple share one fiber.
* Type IV: like Type III, with the third row and column replaced by a
  distinct row ``j'`` and column ``j``.
* Type V: degree-4 moves ``[+1, +1, -2 / -1, -1, +2]`` over rows
  ``(i, i')`` and columns ``(i, i', j'')``, and their transposes.
* Type VI: degree-4 moves ``[+1, +1, -1, -1 / -1, -1, +1, +1]`` over rows
  ``(i, i')`` and columns ``(i, i', j'', j''')``, and their transposes.

Small tables need no special casing: the families that cannot fit simply
come out empty, which yields the reduced bases for 2x2, 2x3, 2xC and 3x3.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .table import Move, MoveLike, MoveType, _move_array, is_move

__all__ = [
    "MarkovBasis",
    "generate_basis",
    "classify_move",
    "format_move",
    "parse_move",
    "BASIS_TYPES",
]

BASIS_TYPES = (MoveType.I, MoveType.II, MoveType.III, MoveType.IV, MoveType.V, MoveType.VI)


@dataclass(frozen=True)
class MarkovBasis:
    """Sign-invariant move set; one representative is stored per +/- pair."""

    rows: int
    cols: int
    moves: tuple[Move, ...]
    minimal: bool = False

    def __post_init__(self) -> None:
        seen = set()
        for z in self.moves:
            if z.shape != (self.rows, self.cols):
                raise ValueError(f"move of shape {z.shape} in a {self.rows}x{self.cols} basis")
            key = z.canonical().entries
            if not key:
                raise ValueError("the zero move cannot belong to a basis")
            if key in seen:
                raise ValueError(f"duplicate move (up to sign): {z!r}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.moves)

    def __iter__(self) -> Iterator[Move]:
        return iter(self.moves)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def counts(self) -> dict[MoveType, int]:
        c = Counter(z.type_tag for z in self.moves)
        return {t: c.get(t, 0) for t in BASIS_TYPES}

    def restrict(self, types: Iterable[MoveType]) -> "MarkovBasis":
        keep = set(types)
        return MarkovBasis(self.rows, self.cols, tuple(z for z in self.moves if z.type_tag in keep), self.minimal)

    def sparse_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flat cell indices, values and support lengths, padded per move.

        This is the layout the sampling and connectivity kernels consume.
        """
        width = max((len(z.entries) for z in self.moves), default=1)
        cells = np.zeros((len(self.moves), width), dtype=np.int64)
        vals = np.zeros((len(self.moves), width), dtype=np.int64)
        lens = np.zeros(len(self.moves), dtype=np.int64)
        for k, z in enumerate(self.moves):
            lens[k] = len(z.entries)
            for t, ((i, j), v) in enumerate(z.entries):
                cells[k, t] = i * self.cols + j
                vals[k, t] = v
        return cells, vals, lens

    def to_lines(self) -> list[str]:
        return [format_move(z) for z in self.moves]


# -- generation --------------------------------------------------------------

def _move(R: int, C: int, tag: MoveType, cells: dict) -> Move:
    return Move(R, C, tuple(cells.items()), tag).canonical()


def _type_i(R, C, d):
    for i, i2 in combinations(range(R), 2):
        for j, j2 in combinations(range(C), 2):
            if {i, i2} & {j, j2}:
                continue
            yield (i, i2, j, j2), {(i, j): 1, (i, j2): -1, (i2, j): -1, (i2, j2): 1}


def _type_ii(R, C, d):
    for a, b, c in combinations(range(d), 3):
        yield (a, b, c), {(a, b): 1, (a, c): -1, (b, a): -1, (b, c): 1, (c, a): 1, (c, b): -1}


def _fixed_point_perm(triple, t):
    # Permutation matrix on the triple fixing t and swapping the other two.
    u, w = (k for k in triple if k != t)
    return [(t, t), (u, w), (w, u)]


def _type_iii(R, C, d):
    for triple in combinations(range(d), 3):
        for s, t in combinations(triple, 2):
            cells = {c: 1 for c in _fixed_point_perm(triple, s)}
            for c in _fixed_point_perm(triple, t):
                cells[c] = -1
            z = Move(R, C, tuple(cells.items())).canonical()
            # after canonical signing, (s, s) carries +1 and (t, t) carries -1
            plus = next(k for k in triple if dict(z.entries).get((k, k), 0) == 1)
            minus = next(k for k in triple if dict(z.entries).get((k, k), 0) == -1)
            yield triple + (plus, minus), dict(z.entries)


def _type_iv(R, C, d):
    for i, i2 in combinations(range(d), 2):
        for j in range(C):
            if j in (i, i2):
                continue
            for jr in range(R):
                if jr in (i, i2, j):
                    continue
                yield (i, i2, j, jr), {
                    (i, i): 1, (i, j): -1,
                    (i2, i2): -1, (i2, j): 1,
                    (jr, i): -1, (jr, i2): 1,
                }


def _type_v(R, C, d):
    for i, i2 in combinations(range(d), 2):
        for j in range(C):
            if j not in (i, i2):
                yield (0, i, i2, j), {(i, i): 1, (i, i2): 1, (i, j): -2, (i2, i): -1, (i2, i2): -1, (i2, j): 2}
        for j in range(R):
            if j not in (i, i2):
                yield (1, i, i2, j), {(i, i): 1, (i2, i): 1, (j, i): -2, (i, i2): -1, (i2, i2): -1, (j, i2): 2}


def _type_vi(R, C, d):
    for i, i2 in combinations(range(d), 2):
        for j, j2 in combinations([c for c in range(C) if c not in (i, i2)], 2):
            yield (0, i, i2, j, j2), {
                (i, i): 1, (i, i2): 1, (i, j): -1, (i, j2): -1,
                (i2, i): -1, (i2, i2): -1, (i2, j): 1, (i2, j2): 1,
            }
        for j, j2 in combinations([r for r in range(R) if r not in (i, i2)], 2):
            yield (1, i, i2, j, j2), {
                (i, i): 1, (i2, i): 1, (j, i): -1, (j2, i): -1,
                (i, i2): -1, (i2, i2): -1, (j, i2): 1, (j2, i2): 1,
            }


_GENERATORS = {
    MoveType.I: _type_i,
    MoveType.II: _type_ii,
    MoveType.III: _type_iii,
    MoveType.IV: _type_iv,
    MoveType.V: _type_v,
    MoveType.VI: _type_vi,
}


def generate_basis(R: int, C: int, minimal: bool = False,
                   types: Optional[Sequence[MoveType]] = None) -> MarkovBasis:
    """Markov basis for the diagonal sum problem on R x C tables.

    Moves are ordered by type, then by their index tuple.  With
    ``minimal=True`` only the first two Type III moves of every diagonal
    triple are kept, which leaves a minimal basis.  ``types`` restricts
    the output to the listed families.
    """
    R, C = int(R), int(C)
    if R < 2 or C < 2:
        raise ValueError(f"tables must be at least 2x2, got {R}x{C}")
    d = min(R, C)
    wanted = BASIS_TYPES if types is None else tuple(types)
    moves = []
    for tag in BASIS_TYPES:
        if tag not in wanted:
            continue
        keyed = sorted(_GENERATORS[tag](R, C, d), key=lambda kv: kv[0])
        if tag is MoveType.III and minimal:
            per_triple = Counter()
            kept = []
            for key, cells in keyed:
                if per_triple[key[:3]] < 2:
                    kept.append((key, cells))
                    per_triple[key[:3]] += 1
            keyed = kept
        moves.extend(_move(R, C, tag, cells) for _, cells in keyed)
    return MarkovBasis(R, C, tuple(moves), bool(minimal))


# -- classification ----------------------------------------------------------

def _rows_cols(entries):
    return sorted({i for (i, _), _ in entries}), sorted({j for (_, j), _ in entries})


def _classify_row_form(cells: dict, rows, cols, d: int) -> Optional[MoveType]:
    """Types V and VI in their row form: two diagonal rows, both diagonal cells used."""
    if len(rows) != 2:
        return None
    a, b = rows
    if b >= d or a not in cols or b not in cols:
        return None
    s = cells.get((a, a), 0)
    if s not in (1, -1) or cells.get((a, b), 0) != s:
        return None
    others = [c for c in cols if c not in (a, b)]
    row_a = [cells.get((a, c), 0) for c in others]
    if len(others) == 1 and row_a == [-2 * s]:
        return MoveType.V
    if len(others) == 2 and row_a == [-s, -s]:
        return MoveType.VI
    return None


def classify_move(z: MoveLike) -> MoveType:
    """Which of the six templates ``z`` matches up to sign, else ``OTHER``."""
    a = _move_array(z)
    if not is_move(a):
        return MoveType.OTHER
    R, C = a.shape
    d = min(R, C)
    cells = {(int(i), int(j)): int(a[i, j]) for i, j in np.argwhere(a != 0)}
    if not cells:
        return MoveType.OTHER
    rows, cols = _rows_cols(cells.items())
    vals = sorted(cells.values())
    unit = all(abs(v) == 1 for v in vals)
    diag = {k: cells[(k, k)] for k in range(d) if (k, k) in cells}

    if len(cells) == 4 and unit and len(rows) == 2 and len(cols) == 2 and not diag:
        return MoveType.I
    if len(cells) == 6 and unit and len(rows) == 3 and len(cols) == 3:
        if rows == cols and max(rows) < d:
            if not diag:
                return MoveType.II
            if sorted(diag.values()) == [-1, 1]:
                return MoveType.III
        shared = set(rows) & set(cols)
        if len(shared) == 2 and set(diag) == shared and sorted(diag.values()) == [-1, 1]:
            return MoveType.IV
        return MoveType.OTHER
    if (len(cells) == 6 and vals == [-2, -1, -1, 1, 1, 2]) or (len(cells) == 8 and unit):
        hit = _classify_row_form(cells, rows, cols, d)
        if hit is None:
            t_cells = {(j, i): v for (i, j), v in cells.items()}
            hit = _classify_row_form(t_cells, cols, rows, d)
        if hit is not None:
            return hit
    return MoveType.OTHER


# -- text format -------------------------------------------------------------

def format_move(z: Move) -> str:
    """``TAG: (i,j)=v; ...`` with 1-based indices."""
    body = "; ".join(f"({i + 1},{j + 1})={v}" for (i, j), v in z.entries)
    return f"{z.type_tag}: {body}"


_ENTRY = re.compile(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*=\s*([+-]?\d+)")


def parse_move(line: str, rows: int, cols: int) -> Move:
    tag, _, body = line.partition(":")
    entries = []
    for part in body.split(";"):
        part = part.strip()
        if not part:
            continue
        m = _ENTRY.fullmatch(part)
        if m is None:
            raise ValueError(f"cannot parse move entry {part!r}")
        entries.append(((int(m.group(1)) - 1, int(m.group(2)) - 1), int(m.group(3))))
    return Move(rows, cols, tuple(entries), MoveType.parse(tag))
