import itertools

import numpy as np
import pytest

from polyeval.assignment import mean_assigned, solve_max
from polyeval.errors import NonFiniteEntry, ValidationError


def brute_force(matrix):
    """Exhaustive maximum over injective row->column mappings, with the
    lexicographically smallest row-sorted pair list among ties."""
    a = np.asarray(matrix, dtype=float)
    m, n = a.shape
    best_total = -np.inf
    best_pairs = None
    if m <= n:
        row_sets = [tuple(range(m))]
    else:
        row_sets = list(itertools.combinations(range(m), n))
    for rows in row_sets:
        for perm in itertools.permutations(range(n), len(rows)):
            total = sum(a[r, c] for r, c in zip(rows, perm))
            pairs = tuple(zip(rows, perm))
            if total > best_total + 1e-9 or (
                abs(total - best_total) <= 1e-9 and pairs < best_pairs
            ):
                best_total, best_pairs = total, pairs
    return best_total, best_pairs


def test_single_cell():
    res = solve_max([[5.0]])
    assert res.pairs == ((0, 0),)
    assert res.objective == 5.0
    assert mean_assigned([[5.0]], res) == 5.0


def test_diagonal_dominant():
    eye = np.eye(3)
    res = solve_max(eye)
    assert res.pairs == ((0, 0), (1, 1), (2, 2))
    assert res.objective == pytest.approx(3.0, abs=1e-12)
    assert mean_assigned(eye, res) == pytest.approx(1.0, abs=1e-12)


def test_rectangular_fixture():
    matrix = [[0.9, 0.1, 0.2], [0.2, 0.8, 0.1]]
    res = solve_max(matrix)
    assert res.pairs == ((0, 0), (1, 1))
    assert res.objective == pytest.approx(1.7, abs=1e-12)
    assert mean_assigned(matrix, res) == pytest.approx(0.85, abs=1e-12)
    # six-mapping enumeration agrees
    assert brute_force(matrix)[0] == pytest.approx(res.objective, abs=1e-9)


def test_matches_brute_force_on_seeded_grids():
    rng = np.random.default_rng(42)
    for trial in range(300):
        m = int(rng.integers(1, 6))
        n = int(rng.integers(1, 6))
        if trial % 2 == 0:
            a = rng.integers(0, 16, size=(m, n)) / 8.0  # dyadic grid with ties
        else:
            a = rng.random((m, n))
        res = solve_max(a)
        expect_total, expect_pairs = brute_force(a)
        assert res.objective == pytest.approx(expect_total, abs=1e-9)
        assert res.pairs == expect_pairs  # includes the tie-break contract


def test_tie_break_prefers_lexicographically_smallest():
    ones = np.ones((3, 3))
    assert solve_max(ones).pairs == ((0, 0), (1, 1), (2, 2))
    # two optima: (0,0),(1,1) and (0,1),(1,0); the first is lexicographically smaller
    tied = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert solve_max(tied).pairs == ((0, 0), (1, 1))
    # tall matrix: rows may be skipped; smaller rows win when tied
    wide = np.zeros((3, 2))
    assert solve_max(wide).pairs == ((0, 0), (1, 1))


def test_transpose_objective_equal():
    rng = np.random.default_rng(7)
    for _ in range(40):
        a = rng.random((int(rng.integers(1, 6)), int(rng.integers(1, 6))))
        assert solve_max(a).objective == pytest.approx(
            solve_max(a.T).objective, abs=1e-9
        )


def test_row_permutation_permutes_pairs():
    rng = np.random.default_rng(13)
    for _ in range(40):
        m, n = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        a = rng.random((m, n))  # continuous entries: ties have measure zero
        perm = rng.permutation(m)
        res = solve_max(a)
        res_p = solve_max(a[perm])
        assert res_p.objective == pytest.approx(res.objective, abs=1e-9)
        mapping = {int(orig): new for new, orig in enumerate(perm)}
        expected = tuple(sorted((mapping[r], c) for r, c in res.pairs))
        assert res_p.pairs == expected


def test_constant_shift_property():
    rng = np.random.default_rng(23)
    for _ in range(40):
        m, n = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        a = rng.integers(0, 16, size=(m, n)) / 4.0  # exact dyadic arithmetic
        shift = 0.5
        res = solve_max(a)
        res_s = solve_max(a + shift)
        assert res_s.objective == pytest.approx(
            res.objective + shift * min(m, n), abs=1e-9
        )
        assert res_s.pairs == res.pairs


def test_invalid_inputs():
    with pytest.raises(NonFiniteEntry):
        solve_max([[1.0, float("nan")]])
    with pytest.raises(NonFiniteEntry):
        solve_max([[float("inf")]])
    with pytest.raises(ValidationError):
        solve_max(np.zeros((0, 3)))
