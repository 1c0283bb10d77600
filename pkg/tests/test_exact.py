from fractions import Fraction

import flint
import pytest
from hypothesis import given, strategies as st

from gkmsheaves import exact

small = st.integers(-4, 4)


def matrices(max_rows=6, max_cols=6):
    return st.integers(1, max_cols).flatmap(
        lambda n: st.lists(st.lists(small, min_size=n, max_size=n), min_size=0, max_size=max_rows)
        .map(lambda rows: (rows, n)))


def test_parse_rational_accepts_integers_and_fractions():
    assert exact.parse_rational("3/6") == Fraction(1, 2)
    assert exact.parse_rational("-7") == Fraction(-7)
    assert exact.parse_rational(5) == Fraction(5)


@pytest.mark.parametrize("text", ["0.5", "1e3", "", "1/0", "a/b", True])
def test_parse_rational_rejects(text):
    with pytest.raises(exact.RationalParseError):
        exact.parse_rational(text)


def test_format_rational_round_trip():
    for x in (Fraction(3, 4), Fraction(-2), Fraction(0)):
        assert exact.parse_rational(exact.format_rational(x)) == x


def test_ragged_rows_rejected():
    with pytest.raises(exact.ShapeMismatch):
        exact.matrix([[1, 2], [3]])


def test_empty_matrix_needs_width():
    with pytest.raises(exact.ShapeMismatch):
        exact.matrix([])
    assert exact.matrix([], 3).ncols() == 3


@given(matrices())
def test_rref_matches_fraction_route(data):
    rows, n = data
    m = exact.matrix(rows, n)
    r, piv = exact.rref(m)
    ref, ref_piv = exact.fraction_rref(rows)
    assert list(piv) == ref_piv
    assert exact.to_rows(exact.select_rows(r, range(len(piv)))) == ref


@given(matrices())
def test_kernel_matches_fraction_route(data):
    rows, n = data
    m = exact.matrix(rows, n)
    k = exact.kernel_basis(m)
    assert k.ncols() == n - exact.rank(m)
    if rows:
        assert all(x == 0 for x in (m * k).entries())
    ref = exact.fraction_kernel(rows, n)
    assert len(ref) == k.ncols()
    if ref:
        assert exact.to_rows(exact.row_basis(exact.matrix(ref))) == exact.to_rows(k.transpose())


@given(matrices(4, 5), matrices(4, 5))
def test_intersection_of_row_spaces(a_data, b_data):
    (a, n), (b, n2) = a_data, b_data
    if n != n2:
        b = [row[:n] + [0] * (n - len(row[:n])) for row in b]
    ma, mb = exact.matrix(a, n), exact.matrix(b, n)
    inter = exact.intersect_row_spaces(ma, mb)
    ra, rb = exact.rank(ma), exact.rank(mb)
    joint = exact.rank(exact.stack([ma, mb], n))
    assert inter.nrows() == ra + rb - joint
    for block in (ma, mb):
        assert exact.rank(exact.stack([block, inter], n)) == exact.rank(block)


@given(matrices(5, 4), st.lists(small, min_size=4, max_size=4))
def test_solve_reproduces_consistent_right_hand_sides(data, x):
    rows, n = data
    if not rows:
        return
    a = exact.matrix(rows, n)
    xs = exact.matrix([[v] for v in (x + [0] * n)[:n]])
    b = a * xs
    sol = exact.solve(a, b)
    assert sol is not None and a * sol == b


def test_solve_detects_inconsistency():
    a = exact.matrix([[1, 1], [2, 2]])
    b = exact.matrix([[1], [3]])
    assert exact.solve(a, b) is None


def test_reduce_rows_lands_in_complement():
    basis, piv = exact.rref(exact.matrix([[1, 2, 0], [0, 0, 1]]))
    rows = exact.matrix([[3, 6, 5], [0, 1, 0]])
    red = exact.reduce_rows(rows, basis, piv)
    assert exact.to_rows(red) == [[0, 0, 0], [0, 1, 0]]


def test_shape_mismatch_in_stack():
    with pytest.raises(exact.ShapeMismatch):
        exact.stack([exact.identity(2), exact.identity(3)], 2)


def test_fmpq_conversion():
    assert exact.to_fraction(flint.fmpq(3, 9)) == Fraction(1, 3)
    assert exact.to_fmpq("2/4") == flint.fmpq(1, 2)
