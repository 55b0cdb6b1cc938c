"""Exact maximal linear-sum assignment on rectangular score matrices.

The solver is a shortest-augmenting-path method (Jonker-Volgenant style,
O(n^3)) run as a minimizer on negated scores.  Rectangular inputs are handled
natively by augmenting only min(m, n) times; no padding or sentinel values.

Among equally scoring optima the returned assignment is the one whose
row-sorted pair list is lexicographically smallest; near-ties within an
absolute 1e-9 of the optimum are treated as exact ties.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteEntry, ValidationError

_TIE_TOL = 1e-9


@dataclass(frozen=True)
class Assignment:
    pairs: tuple[tuple[int, int], ...]
    objective: float


def _lap_min_cols(cost: np.ndarray) -> np.ndarray:
    """Column assigned to each row of an m x n cost matrix with m <= n.

    Standard shortest-augmenting-path minimizer with dual potentials.
    """
    m, n = cost.shape
    u = np.zeros(m)
    v = np.zeros(n)
    col4row = np.full(m, -1, dtype=int)
    row4col = np.full(n, -1, dtype=int)

    for cur in range(m):
        shortest = np.full(n, np.inf)
        path = np.full(n, -1, dtype=int)
        scanned_rows = np.zeros(m, dtype=bool)
        scanned_cols = np.zeros(n, dtype=bool)
        min_val = 0.0
        i = cur
        sink = -1
        while sink == -1:
            scanned_rows[i] = True
            open_cols = ~scanned_cols
            reduced = min_val + cost[i, open_cols] - u[i] - v[open_cols]
            idx = np.flatnonzero(open_cols)
            better = reduced < shortest[idx]
            shortest[idx[better]] = reduced[better]
            path[idx[better]] = i
            j = idx[np.argmin(shortest[idx])]
            min_val = shortest[j]
            scanned_cols[j] = True
            if row4col[j] == -1:
                sink = j
            else:
                i = row4col[j]
        u[cur] += min_val
        extra = scanned_rows.copy()
        extra[cur] = False
        for k in np.flatnonzero(extra):
            u[k] += min_val - shortest[col4row[k]]
        cols = np.flatnonzero(scanned_cols)
        v[cols] -= min_val - shortest[cols]
        # augment along the alternating path back to cur
        j = sink
        while True:
            i = path[j]
            row4col[j] = i
            col4row[i], j = j, col4row[i]
            if i == cur:
                break
    return col4row


def _max_total(matrix: np.ndarray) -> float:
    """Optimal assignment total of a (validated) score matrix."""
    m, n = matrix.shape
    if m <= n:
        cols = _lap_min_cols(-matrix)
        return float(matrix[np.arange(m), cols].sum())
    cols = _lap_min_cols(-matrix.T)
    return float(matrix[cols, np.arange(n)].sum())


def _lex_smallest_pairs(matrix: np.ndarray, optimum: float) -> list[tuple[int, int]]:
    """Row-sorted pair list of the lexicographically smallest optimum.

    Greedily fixes pairs in ascending (row, col) order, keeping a candidate
    only if the best completion on the remaining submatrix still reaches the
    running target.  Rows may be skipped only when more rows than columns
    remain (m > n).
    """
    m, n = matrix.shape
    size = min(m, n)
    rows = list(range(m))
    cols = list(range(n))
    target = optimum
    pairs: list[tuple[int, int]] = []

    for pos in range(size):
        need = size - pos - 1
        chosen = None
        for ri, r in enumerate(rows):
            if len(rows) - ri - 1 < need:
                break  # skipping r would leave too few rows
            rest_rows = rows[ri + 1 :]
            if need:
                # cheap upper bound: best columns per remaining row
                row_best = np.sort(np.max(matrix[np.ix_(rest_rows, cols)], axis=1))
                ub_rest = float(row_best[-need:].sum())
            else:
                ub_rest = 0.0
            for c in cols:
                if matrix[r, c] + ub_rest < target - _TIE_TOL:
                    continue
                if need:
                    rest_cols = [x for x in cols if x != c]
                    best_rest = _max_total(matrix[np.ix_(rest_rows, rest_cols)])
                else:
                    best_rest = 0.0
                if matrix[r, c] + best_rest >= target - _TIE_TOL:
                    chosen = (ri, r, c)
                    break
            if chosen:
                break
        assert chosen is not None, "optimal completion must exist"
        ri, r, c = chosen
        pairs.append((r, c))
        rows = rows[ri + 1 :]
        cols.remove(c)
        target -= matrix[r, c]
    return pairs


def solve_max(matrix) -> Assignment:
    """Injective row->column matching of size min(m, n) maximizing the total."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValidationError(f"assignment needs a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteEntry("score matrix contains NaN/Inf entries")
    optimum = _max_total(a)
    pairs = _lex_smallest_pairs(a, optimum)
    objective = float(sum(a[r, c] for r, c in pairs))
    return Assignment(tuple(pairs), objective)


def mean_assigned(matrix, assignment: Assignment) -> float:
    """Arithmetic mean of the matrix entries over the assigned pairs."""
    a = np.asarray(matrix, dtype=float)
    return float(sum(a[r, c] for r, c in assignment.pairs) / len(assignment.pairs))
