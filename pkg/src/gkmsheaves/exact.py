"""Exact rational linear algebra.

Matrices are ``flint.fmpq_mat`` objects.  Row reduction, kernels and ranks are
delegated to FLINT; everything here is exact.  ``fraction_rref`` is a plain
Gaussian elimination over :class:`fractions.Fraction` used as an independent
reference and for very small systems.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import flint

Matrix = flint.fmpq_mat
Scalar = "int | Fraction | flint.fmpq"


class ShapeMismatch(ValueError):
    pass


class RationalParseError(ValueError):
    pass


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"`` or an integer.  Decimal points are rejected."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool):
        raise RationalParseError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise RationalParseError(f"not a rational: {text!r}")
    s = text.strip()
    if not s or "." in s or "e" in s.lower():
        raise RationalParseError(f"not a rational: {text!r}")
    num, _, den = s.partition("/")
    try:
        value = Fraction(int(num), int(den) if den else 1)
    except (ValueError, ZeroDivisionError) as exc:
        raise RationalParseError(f"not a rational: {text!r}") from exc
    return value


def format_rational(x) -> str:
    x = to_fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, flint.fmpq):
        return Fraction(int(x.p), int(x.q))
    if isinstance(x, flint.fmpz):
        return Fraction(int(x))
    if isinstance(x, int):
        return Fraction(x)
    return parse_rational(x)


def to_fmpq(x) -> flint.fmpq:
    if isinstance(x, flint.fmpq):
        return x
    if isinstance(x, Fraction):
        return flint.fmpq(x.numerator, x.denominator)
    if isinstance(x, (int, flint.fmpz)):
        return flint.fmpq(x)
    f = parse_rational(x)
    return flint.fmpq(f.numerator, f.denominator)


def matrix(rows: Sequence[Sequence], ncols: int | None = None) -> Matrix:
    """Build a matrix from nested rows.  ``ncols`` is needed for zero rows."""
    rows = [list(r) for r in rows]
    if ncols is None:
        if not rows:
            raise ShapeMismatch("ncols required for an empty matrix")
        ncols = len(rows[0])
    for r in rows:
        if len(r) != ncols:
            raise ShapeMismatch(f"ragged row: expected {ncols} entries, got {len(r)}")
    flat = [to_fmpq(x) for r in rows for x in r]
    return flint.fmpq_mat(len(rows), ncols, flat)


def zeros(nrows: int, ncols: int) -> Matrix:
    return flint.fmpq_mat(nrows, ncols)


def identity(n: int) -> Matrix:
    m = flint.fmpq_mat(n, n)
    for i in range(n):
        m[i, i] = 1
    return m


def to_rows(m: Matrix) -> list[list[Fraction]]:
    n = m.ncols()
    flat = [to_fraction(x) for x in m.entries()]
    return [flat[i * n:(i + 1) * n] for i in range(m.nrows())]


def row_entries(m: Matrix) -> list[list[flint.fmpq]]:
    n = m.ncols()
    flat = m.entries()
    return [flat[i * n:(i + 1) * n] for i in range(m.nrows())]


def stack(blocks: Iterable[Matrix], ncols: int) -> Matrix:
    """Vertical concatenation."""
    flat: list = []
    nrows = 0
    for b in blocks:
        if b.ncols() != ncols:
            raise ShapeMismatch(f"cannot stack {b.ncols()} columns onto {ncols}")
        flat.extend(b.entries())
        nrows += b.nrows()
    return flint.fmpq_mat(nrows, ncols, flat) if nrows else flint.fmpq_mat(0, ncols)


def hstack(blocks: Sequence[Matrix]) -> Matrix:
    if not blocks:
        raise ShapeMismatch("nothing to concatenate")
    n = blocks[0].nrows()
    for b in blocks:
        if b.nrows() != n:
            raise ShapeMismatch("row counts differ")
    return stack([b.transpose() for b in blocks], n).transpose()


def select_columns(m: Matrix, cols: Sequence[int]) -> Matrix:
    rows = row_entries(m)
    return flint.fmpq_mat(m.nrows(), len(cols), [r[c] for r in rows for c in cols])


def select_rows(m: Matrix, idx: Sequence[int]) -> Matrix:
    n = m.ncols()
    flat = m.entries()
    if isinstance(idx, range) and idx.step == 1:
        out = flat[idx.start * n:idx.stop * n]
    else:
        out = [x for i in idx for x in flat[i * n:(i + 1) * n]]
    return flint.fmpq_mat(len(idx), n, out) if len(idx) else flint.fmpq_mat(0, n)


def _pivots(r: Matrix, rank: int) -> tuple[int, ...]:
    piv = []
    n = r.ncols()
    flat = r.entries()
    c = 0
    for i in range(rank):
        base = i * n
        while c < n and flat[base + c] == 0:
            c += 1
        piv.append(c)
        c += 1
    return tuple(piv)


def _clear_denominators(m: Matrix) -> flint.fmpz_mat:
    num, _ = m.numer_denom()
    return num


def rref(m: Matrix) -> tuple[Matrix, tuple[int, ...]]:
    """Reduced row-echelon form and pivot columns."""
    if m.nrows() == 0 or m.ncols() == 0:
        return m, ()
    z = _clear_denominators(m)
    rz, den, rank = z.rref()
    r = flint.fmpq_mat(rz) / den
    return r, _pivots(r, rank)


def rank(m: Matrix) -> int:
    if m.nrows() == 0 or m.ncols() == 0:
        return 0
    return _clear_denominators(m).rank()


def row_basis(m: Matrix) -> Matrix:
    """Canonical basis of the row space: the nonzero rows of the RREF."""
    r, piv = rref(m)
    return select_rows(r, range(len(piv))) if piv else flint.fmpq_mat(0, m.ncols())


def kernel_basis(m: Matrix) -> Matrix:
    """Basis of ``{x : m x = 0}`` as the columns of the returned matrix.

    The basis is canonical: its transpose is in reduced row-echelon form.
    """
    n = m.ncols()
    if m.nrows() == 0:
        return identity(n)
    x, nullity = _clear_denominators(m).nullspace()
    if nullity == 0:
        return flint.fmpq_mat(n, 0)
    cols = flint.fmpq_mat(x).transpose()
    basis = select_rows(cols, range(nullity))
    return row_basis(basis).transpose()


def left_kernel_rows(m: Matrix) -> Matrix:
    """Rows ``y`` with ``y m = 0``; canonical RREF rows."""
    return kernel_basis(m.transpose()).transpose()


def intersect_column_spaces(u: Matrix, v: Matrix) -> Matrix:
    """Basis of col(u) ∩ col(v) from the kernel of ``[u | -v]``."""
    if u.nrows() != v.nrows():
        raise ShapeMismatch(f"column spaces live in dimensions {u.nrows()} and {v.nrows()}")
    n = u.nrows()
    if u.ncols() == 0 or v.ncols() == 0:
        return flint.fmpq_mat(n, 0)
    k = kernel_basis(hstack([u, -v]))
    if k.ncols() == 0:
        return flint.fmpq_mat(n, 0)
    top = select_rows(k, range(u.ncols()))
    vecs = u * top
    return row_basis(vecs.transpose()).transpose()


def intersect_row_spaces(a: Matrix, b: Matrix) -> Matrix:
    """Canonical row basis of row(a) ∩ row(b)."""
    if a.ncols() != b.ncols():
        raise ShapeMismatch("row spaces live in different dimensions")
    if a.nrows() == 0 or b.nrows() == 0:
        return flint.fmpq_mat(0, a.ncols())
    return intersect_column_spaces(a.transpose(), b.transpose()).transpose()


def solve(a: Matrix, b: Matrix) -> Matrix | None:
    """One solution of ``a x = b`` or ``None`` when inconsistent."""
    if a.nrows() != b.nrows():
        raise ShapeMismatch("right-hand side has the wrong number of rows")
    aug = hstack([a, b])
    r, piv = rref(aug)
    n = a.ncols()
    if any(p >= n for p in piv):
        return None
    x = flint.fmpq_mat(n, b.ncols())
    for i, p in enumerate(piv):
        for j in range(b.ncols()):
            x[p, j] = r[i, n + j]
    return x


def reduce_rows(rows: Matrix, basis: Matrix, pivots: Sequence[int]) -> Matrix:
    """Reduce ``rows`` modulo the RREF ``basis`` with the given pivots."""
    if basis.nrows() == 0 or rows.nrows() == 0:
        return rows
    return rows - select_columns(rows, pivots) * basis


# Independent reference route


def fraction_rref(rows: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Textbook Gauss-Jordan over Fractions."""
    m = [[to_fraction(x) for x in r] for r in rows]
    if not m:
        return [], []
    nrows, ncols = len(m), len(m[0])
    piv: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(nrows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        piv.append(c)
        r += 1
        if r == nrows:
            break
    return m[:r], piv


def fraction_kernel(rows: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Kernel vectors (one per free column) from ``fraction_rref``."""
    red, piv = fraction_rref(rows) if rows else ([], [])
    free = [c for c in range(ncols) if c not in piv]
    out = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, p in enumerate(piv):
            v[p] = -red[i][f]
        out.append(v)
    return out
