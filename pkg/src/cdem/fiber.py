"""Brute-force fibers and connectivity checks.

Everything here is an oracle: exhaustive enumeration of the tables that
share a sufficient statistic, the graph a move set induces on them, and
an exhaustive scan for every low-degree move.  These are independent of
the Markov basis construction and are used to check it.
"""
from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Iterator, Optional

import numpy as np

from . import _backend
from .basis import MarkovBasis, classify_move
from .errors import ResourceLimitError
from .table import (
    Move,
    MoveLike,
    SufficientStat,
    Table,
    TableLike,
    _cells,
    _move_array,
    suff_stat,
)

__all__ = [
    "Fiber",
    "FiberGraph",
    "ConnectivityReport",
    "enumerate_fiber",
    "count_fiber",
    "is_connected",
    "components",
    "disconnected_witness",
    "check_distance_reduction",
    "scan_moves",
    "verify_connectivity",
    "verify_fiber",
    "DEFAULT_STATE_CAP",
]

DEFAULT_STATE_CAP = 5_000_000


@dataclass(frozen=True)
class Fiber:
    stat: SufficientStat
    tables: tuple[Table, ...]

    def __len__(self) -> int:
        return len(self.tables)

    def __iter__(self) -> Iterator[Table]:
        return iter(self.tables)

    def __contains__(self, x) -> bool:
        return Table(x) in self._members

    @property
    def _members(self) -> frozenset:
        return frozenset(self.tables)

    def dump(self) -> str:
        lines = [f"fiber rows={list(self.stat.row_sums)} cols={list(self.stat.col_sums)} "
                 f"diag={self.stat.diag_sum} size={len(self.tables)}"]
        for t in self.tables:
            lines.append("  " + " | ".join(" ".join(str(v) for v in row) for row in t.tolist()))
        return "\n".join(lines)


def enumerate_fiber(stat: SufficientStat, R: Optional[int] = None, C: Optional[int] = None,
                    state_cap: int = DEFAULT_STATE_CAP) -> Fiber:
    """Every non-negative table with sufficient statistic ``stat``.

    Cells are filled in row-major order; a branch is cut as soon as a row,
    a column or the diagonal overshoots its target or can no longer reach
    it.  More than ``state_cap`` partial states raises
    :class:`ResourceLimitError` instead of returning a truncated fiber.
    """
    if R is None or C is None:
        R, C = stat.shape
    if (R, C) != stat.shape:
        raise ValueError(f"statistic is for {stat.shape[0]}x{stat.shape[1]} tables, not {R}x{C}")
    d = min(R, C)
    rows, cols, target_diag = stat.row_sums, stat.col_sums, stat.diag_sum
    x = [[0] * C for _ in range(R)]
    col_left = list(cols)
    # diagonal capacity still available strictly after row i
    diag_cap_after = [0] * (R + 1)
    for i in range(R - 1, -1, -1):
        diag_cap_after[i] = diag_cap_after[i + 1] + (min(rows[i], cols[i]) if i < d else 0)
    found: list[Table] = []
    states = 0

    def fill(i: int, j: int, row_left: int, diag: int) -> None:
        nonlocal states
        states += 1
        if states > state_cap:
            raise ResourceLimitError(f"fiber enumeration exceeded {state_cap} partial states")
        if i == R:
            if diag == target_diag and not any(col_left):
                found.append(Table._trusted(np.array(x)))
            return
        if j == C - 1:
            v = row_left
            if v > col_left[j]:
                return
            nd = diag + v if (i == j and i < d) else diag
            if nd > target_diag or nd + diag_cap_after[i + 1] < target_diag:
                return
            x[i][j] = v
            col_left[j] -= v
            fill(i + 1, 0, rows[i + 1] if i + 1 < R else 0, nd)
            col_left[j] += v
            x[i][j] = 0
            return
        # the columns right of j must be able to absorb what is left of the row
        room = sum(col_left[j + 1:])
        lo = max(0, row_left - room)
        hi = min(row_left, col_left[j])
        for v in range(lo, hi + 1):
            nd = diag + v if (i == j and i < d) else diag
            if nd > target_diag:
                break
            x[i][j] = v
            col_left[j] -= v
            fill(i, j + 1, row_left - v, nd)
            col_left[j] += v
        x[i][j] = 0

    if R > 0 and C > 0:
        fill(0, 0, rows[0], 0)
    return Fiber(stat, tuple(sorted(found)))


def count_fiber(stat: SufficientStat) -> int:
    """Fiber size by a separate recursion: whole rows at a time.

    Each row is chosen as a composition of its row sum that fits under the
    remaining column sums; memoised on (row, remaining columns, diagonal).
    """
    R, C = stat.shape
    d = min(R, C)
    rows = stat.row_sums

    def row_options(total: int, caps: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if len(caps) == 1:
            if total <= caps[0]:
                yield (total,)
            return
        rest_cap = sum(caps[1:])
        for v in range(max(0, total - rest_cap), min(total, caps[0]) + 1):
            for tail in row_options(total - v, caps[1:]):
                yield (v,) + tail

    @lru_cache(maxsize=None)
    def count(i: int, caps: tuple[int, ...], diag_left: int) -> int:
        if i == R:
            return int(diag_left == 0 and not any(caps))
        out = 0
        for opt in row_options(rows[i], caps):
            dv = opt[i] if i < d else 0
            if dv > diag_left:
                continue
            out += count(i + 1, tuple(c - v for c, v in zip(caps, opt)), diag_left - dv)
        return out

    return count(0, tuple(stat.col_sums), stat.diag_sum)


@dataclass
class FiberGraph:
    """Undirected graph on a fiber; edges join tables one basis move apart."""

    fiber: Fiber
    basis: MarkovBasis
    adjacency: dict[int, set[int]] = field(default_factory=dict)

    @classmethod
    def build(cls, fiber: Fiber, basis: MarkovBasis) -> "FiberGraph":
        index = {t: k for k, t in enumerate(fiber.tables)}
        adj: dict[int, set[int]] = {k: set() for k in range(len(fiber.tables))}
        moves = [z.entries for z in basis.moves]
        for k, t in enumerate(fiber.tables):
            a = t.cells
            for entries in moves:
                # +z only: the -z edges are found from the other endpoint
                if any(a[c] + v < 0 for c, v in entries):
                    continue
                b = a.copy()
                for c, v in entries:
                    b[c] += v
                other = index.get(Table._trusted(b))
                if other is None:
                    raise AssertionError("a move left the fiber; the basis is not a move set")
                if other != k:
                    adj[k].add(other)
                    adj[other].add(k)
        return cls(fiber, basis, adj)


def components(graph: FiberGraph) -> list[list[int]]:
    seen: set[int] = set()
    comps = []
    for start in graph.adjacency:
        if start in seen:
            continue
        seen.add(start)
        comp, queue = [start], deque([start])
        while queue:
            for nb in graph.adjacency[queue.popleft()]:
                if nb not in seen:
                    seen.add(nb)
                    comp.append(nb)
                    queue.append(nb)
        comps.append(sorted(comp))
    return comps


def is_connected(graph: FiberGraph) -> bool:
    if not graph.fiber.tables:
        raise ValueError("connectivity of an empty fiber is undefined")
    return len(components(graph)) == 1


def disconnected_witness(graph: FiberGraph) -> Optional[tuple[Table, Table]]:
    """Two tables of the fiber that no sequence of basis moves joins, if any."""
    comps = components(graph)
    if len(comps) < 2:
        return None
    return graph.fiber.tables[comps[0][0]], graph.fiber.tables[comps[1][0]]


def check_distance_reduction(x: TableLike, y: TableLike, z: MoveLike) -> bool:
    """Whether one of the four sufficient conditions for ``z`` to shorten ``|x - y|`` holds.

    (i) ``z+ <= x`` and ``min(z-, y) != 0``; (ii) ``z+ <= y`` and
    ``min(z-, x) != 0``; (iii) ``z- <= x`` and ``min(z+, y) != 0``;
    (iv) ``z- <= y`` and ``min(z+, x) != 0``.
    """
    a, b = _cells(x), _cells(y)
    zz = _move_array(z)
    plus, minus = np.maximum(zz, 0), np.maximum(-zz, 0)
    return bool(
        (np.all(plus <= a) and np.minimum(minus, b).any())
        or (np.all(plus <= b) and np.minimum(minus, a).any())
        or (np.all(minus <= a) and np.minimum(plus, b).any())
        or (np.all(minus <= b) and np.minimum(plus, a).any())
    )


def scan_moves(R: int, C: int, max_degree: int = 4, max_entry: int = 2) -> list[Move]:
    """Every move of degree <= ``max_degree`` with entries in ``[-max_entry, max_entry]``.

    Each move is ``P - N`` for two tables ``P``, ``N`` of equal total and
    sufficient statistic with disjoint supports, so the scan walks all
    small tables and pairs them within statistic classes.  Moves come back
    canonically signed and tagged by :func:`classify_move`.
    """
    ncell = R * C
    found = {}
    for deg in range(1, max_degree + 1):
        classes: dict[tuple, list[np.ndarray]] = defaultdict(list)
        for combo in _multisets(ncell, deg, max_entry):
            a = np.zeros(ncell, dtype=np.int64)
            for c in combo:
                a[c] += 1
            t = a.reshape(R, C)
            classes[suff_stat(Table._trusted(t)).as_vector()].append(a)
        for members in classes.values():
            for p, q in combinations(members, 2):
                if np.any((p > 0) & (q > 0)):
                    continue
                z = Move.from_array((p - q).reshape(R, C)).canonical()
                if z.entries not in found:
                    found[z.entries] = z.with_tag(classify_move(z))
    return sorted(found.values(), key=lambda z: (z.type_tag.order, z.entries))


def _multisets(ncell: int, size: int, max_mult: int) -> Iterator[tuple[int, ...]]:
    def rec(start, left, prefix):
        if left == 0:
            yield tuple(prefix)
            return
        for c in range(start, ncell):
            # cap the multiplicity of c
            if len(prefix) >= max_mult and all(p == c for p in prefix[-max_mult:]):
                continue
            prefix.append(c)
            yield from rec(c, left - 1, prefix)
            prefix.pop()
    yield from rec(0, size, [])


# -- exhaustive connectivity -------------------------------------------------

@dataclass
class ConnectivityReport:
    rows: int
    cols: int
    n_max: int
    tables: int = 0
    fibers: int = 0
    witnesses: list[tuple[Table, Table]] = field(default_factory=list)

    @property
    def connected(self) -> bool:
        return not self.witnesses

    def summary(self) -> str:
        head = (f"{self.rows}x{self.cols}, n <= {self.n_max}: {self.fibers} fibers, "
                f"{self.tables} tables")
        if self.connected:
            return head + "; connected: all fibers"
        return head + f"; DISCONNECTED fibers: {len(self.witnesses)}"


def _binomials(top: int, width: int) -> np.ndarray:
    b = np.zeros((top + 1, width + 1), dtype=np.int64)
    for nn in range(top + 1):
        for k in range(min(nn, width) + 1):
            b[nn, k] = math.comb(nn, k)
    return b


def _unrank(rank: int, n: int, F: int, binom: np.ndarray) -> list[int]:
    a, s = [], n
    for i in range(F - 1):
        k = F - i - 2
        v = 0
        while True:
            block = int(binom[s - v + k, k])
            if rank < block:
                break
            rank -= block
            v += 1
        a.append(v)
        s -= v
    a.append(s)
    return a


def verify_connectivity(basis: MarkovBasis, n_max: int, n_min: int = 0, structural_zero_diagonal: bool = False,
                        table_cap: int = 50_000_000) -> ConnectivityReport:
    """Check every fiber of every table with total in ``[n_min, n_max]``.

    All tables of each total are enumerated and merged with union-find
    along the basis moves; a fiber containing two components yields a
    witness pair.  ``structural_zero_diagonal`` restricts to tables whose
    diagonal is identically zero.
    """
    R, C = basis.shape
    d = min(R, C)
    free = np.array([i * C + j for i in range(R) for j in range(C)
                     if not (structural_zero_diagonal and i == j and i < d)], dtype=np.int64)
    free_set = set(free.tolist())
    usable = MarkovBasis(R, C, tuple(z for z in basis.moves
                                     if all(i * C + j in free_set for (i, j), _ in z.entries)), basis.minimal)
    cells, vals, lens = usable.sparse_arrays()
    F = len(free)
    width = max(F, R, C) + 1
    binom = _binomials(n_max + width + 1, width)
    report = ConnectivityReport(R, C, n_max)
    for n in range(n_min, n_max + 1):
        size = math.comb(n + F - 1, F - 1) if F else int(n == 0)
        if size > table_cap:
            raise ResourceLimitError(f"{size} tables of total {n} exceed the cap of {table_cap}")
        total, nfib, first, other = _backend.fiber_components(R, C, n, free, cells, vals, lens, binom)
        report.tables += int(total)
        report.fibers += int(nfib)
        for r1, r2 in zip(first.tolist(), other.tolist()):
            report.witnesses.append(tuple(_table_from_rank(r, n, free, R, C, binom) for r in (r1, r2)))
    return report


def _table_from_rank(rank: int, n: int, free: np.ndarray, R: int, C: int, binom: np.ndarray) -> Table:
    a = np.zeros(R * C, dtype=np.int64)
    a[free] = _unrank(rank, n, len(free), binom)
    return Table._trusted(a.reshape(R, C))


def verify_fiber(stat: SufficientStat, basis: MarkovBasis, state_cap: int = DEFAULT_STATE_CAP
                 ) -> Optional[tuple[Table, Table]]:
    """Enumerate one fiber and return a disconnected pair, or None if connected."""
    fiber = enumerate_fiber(stat, *basis.shape, state_cap=state_cap)
    if len(fiber) < 2:
        return None
    return disconnected_witness(FiberGraph.build(fiber, basis))


def random_stats(R: int, C: int, n_max: int, count: int, rng: np.random.Generator) -> Iterable[SufficientStat]:
    """Statistics of uniformly random multinomial tables with totals up to ``n_max``."""
    for _ in range(count):
        n = int(rng.integers(1, n_max + 1))
        cells = rng.multinomial(n, np.full(R * C, 1.0 / (R * C))).reshape(R, C)
        yield suff_stat(Table._trusted(cells))

