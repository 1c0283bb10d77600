"""Finitely generated graded submodules of free modules over S(t*).

A :class:`Submodule` is the S(t*)-span of homogeneous generators inside a
:class:`~gkmsheaves.algebra.ModuleSpace`.  Everything is computed one degree
at a time: the degree-``d`` slice is a canonical (reduced row-echelon) basis
of ``M_d`` in the coordinates of the ambient piece.  Submodules produced by
intersections may instead carry exactly known slices up to a truncation
degree; past it they are the span of their minimal generators.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Callable, Iterable, Sequence

import flint

from . import exact
from .algebra import (
    AmbientMismatch,
    AmbientSpec,
    GradedElement,
    ModuleSpace,
    ext_tuples,
    from_coords,
    multiplication_matrix,
    multiply,
    mul_var_index,
    ring_space,
)
from .exact import Matrix


class NonHomogeneousGenerator(ValueError):
    pass


class NotDivisible(ValueError):
    pass


def _empty(space: ModuleSpace, d: int) -> Matrix:
    return flint.fmpq_mat(0, space.dim(d))


def _vector(x: GradedElement) -> Matrix:
    return flint.fmpq_mat(1, x.space.dim(x.degree), [exact.to_fmpq(c) for c in x.coords()])


def shift_rows(space: ModuleSpace, rows: Matrix, d: int, j: int) -> Matrix:
    """Multiply each row (a vector of piece ``d``) by the variable ``x_j``."""
    k = rows.nrows()
    n_new = space.dim(d + 2)
    if k == 0:
        return flint.fmpq_mat(0, n_new)
    target = mul_var_index(space, d, j)
    flat = rows.entries()
    n_old = rows.ncols()
    out = [0] * (k * n_new)
    for i in range(k):
        base_old, base_new = i * n_old, i * n_new
        for c in range(n_old):
            v = flat[base_old + c]
            if v != 0:
                out[base_new + target[c]] = v
    return flint.fmpq_mat(k, n_new, out)


@dataclass(frozen=True)
class HilbertData:
    dims: tuple[int, ...]
    numerator: tuple[int, ...]
    stable: bool
    window: int

    @property
    def truncation(self) -> int:
        return len(self.dims) - 1

    def polynomial(self) -> list[int]:
        coeffs = list(self.numerator)
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        return coeffs


def numerator_from_dims(dims: Sequence[int], rank: int, denominator_degrees: Sequence[int] | None = None
                        ) -> tuple[int, ...]:
    """Truncated product of Σ dims_d t^d with Π (1 - t^k).

    ``denominator_degrees`` defaults to ``rank`` copies of 2.
    """
    ks = list(denominator_degrees) if denominator_degrees is not None else [2] * rank
    cur = list(dims)
    for k in ks:
        cur = [cur[d] - (cur[d - k] if d >= k else 0) for d in range(len(cur))]
    return tuple(cur)


def hilbert_data(dims: Sequence[int], rank: int, window: int = 4,
                 denominator_degrees: Sequence[int] | None = None) -> HilbertData:
    num = numerator_from_dims(dims, rank, denominator_degrees)
    stable = len(num) >= window and all(c == 0 for c in num[len(num) - window:])
    return HilbertData(tuple(dims), num, stable, window)


def polynomial_ring_dim(rank: int, d: int) -> int:
    """dim S(t*)_d with variables in degree 2."""
    if d < 0 or d % 2:
        return 0
    q = d // 2
    return comb(q + rank - 1, rank - 1) if rank else int(q == 0)


class Submodule:
    """S(t*)-span of homogeneous generators in a free module space."""

    def __init__(self, space: ModuleSpace, generators: Iterable[GradedElement] = (), label: str = "",
                 *, slices: dict[int, Matrix] | None = None, bound: int | None = None,
                 dim_function: Callable[[int], int] | None = None,
                 gen_count_function: Callable[[int], int] | None = None):
        gens = []
        for x in generators:
            if x.space != space:
                raise AmbientMismatch("generator lives in another space")
            if not x.is_zero():
                gens.append(x)
        self.space = space
        self._generators = tuple(gens)
        self.label = label
        self._slices: dict[int, Matrix] = {}
        self._known_bound = -1
        if slices is not None:
            if bound is None:
                raise ValueError("known slices need a truncation bound")
            self._slices.update(slices)
            self._known_bound = bound
        self._dim_function = dim_function
        self._gen_count_function = gen_count_function
        self._decomposable: dict[int, tuple[Matrix, tuple[int, ...]]] = {}
        self._span_gens: tuple[GradedElement, ...] | None = None if slices is not None else self._generators

    @property
    def rank(self) -> int:
        return self.space.rank

    @property
    def generators(self) -> tuple[GradedElement, ...]:
        if self._span_gens is None:
            self._span_gens = tuple(self.minimal_generators(self._known_bound))
        return self._span_gens

    def __repr__(self):
        return f"Submodule({self.label or '?'}, {len(self._generators)} generators)"

    def slice(self, d: int) -> Matrix:
        """Canonical row basis of M_d."""
        if d < 0:
            return _empty(self.space, d)
        got = self._slices.get(d)
        if got is not None:
            return got
        if d <= self._known_bound:
            raise KeyError(f"known slice {d} missing")
        gens = self.generators
        lowest = min((x.degree for x in gens), default=d + 1)
        if d < lowest:
            res = _empty(self.space, d)
        else:
            parts = []
            if d - 2 >= lowest:
                below = self.slice(d - 2)
                parts.extend(shift_rows(self.space, below, d - 2, j) for j in range(self.rank))
            parts.extend(_vector(x) for x in gens if x.degree == d)
            res = exact.row_basis(exact.stack(parts, self.space.dim(d))) if parts else _empty(self.space, d)
        self._slices[d] = res
        return res

    def dim(self, d: int) -> int:
        if self._dim_function is not None and d > self._known_bound and d not in self._slices:
            return self._dim_function(d)
        return self.slice(d).nrows()

    def dims(self, upto: int) -> list[int]:
        return [self.dim(d) for d in range(upto + 1)]

    def decomposable(self, d: int) -> tuple[Matrix, tuple[int, ...]]:
        """RREF basis and pivots of (S⁺ M)_d = Σ_j x_j M_{d-2}."""
        if d in self._decomposable:
            return self._decomposable[d]
        below = self.slice(d - 2)
        n = self.space.dim(d)
        if below.nrows() == 0:
            res = (flint.fmpq_mat(0, n), ())
        else:
            rows = exact.stack([shift_rows(self.space, below, d - 2, j) for j in range(self.rank)], n)
            r, piv = exact.rref(rows)
            res = (exact.select_rows(r, range(len(piv))), piv)
        self._decomposable[d] = res
        return res

    def new_generator_rows(self, d: int) -> Matrix:
        """Canonical complement of (S⁺M)_d in M_d."""
        m = self.slice(d)
        if m.nrows() == 0:
            return m
        basis, piv = self.decomposable(d)
        if len(piv) == m.nrows():
            return flint.fmpq_mat(0, m.ncols())
        reduced = exact.reduce_rows(m, basis, piv)
        return exact.row_basis(reduced)

    def generator_count(self, d: int) -> int:
        if self._gen_count_function is not None:
            return self._gen_count_function(d)
        return self.dim(d) - len(self.decomposable(d)[1]) if self.slice(d).nrows() else 0

    def minimal_generators(self, upto: int) -> list[GradedElement]:
        out = []
        for d in range(upto + 1):
            rows = self.new_generator_rows(d)
            for row in exact.to_rows(rows):
                out.append(from_coords(self.space, d, row))
        return out

    def generator_degrees(self, upto: int) -> list[int]:
        return [d for d in range(upto + 1) for _ in range(self.generator_count(d))]

    def hilbert(self, upto: int, window: int = 4) -> HilbertData:
        return hilbert_data(self.dims(upto), self.rank, window)

    def contains(self, x: GradedElement) -> bool:
        if x.space != self.space:
            raise AmbientMismatch("element lives in another space")
        if x.is_zero():
            return True
        s = self.slice(x.degree)
        return exact.rank(exact.stack([s, _vector(x)], s.ncols())) == s.nrows()

    def contains_module(self, other: Submodule, upto: int) -> bool:
        for d in range(upto + 1):
            o = other.slice(d)
            if o.nrows() == 0:
                continue
            s = self.slice(d)
            if exact.rank(exact.stack([s, o], s.ncols())) != s.nrows():
                return False
        return True


def full_module(space: ModuleSpace, label: str = "free") -> Submodule:
    """The whole space as an S(t*)-module: one generator per exterior monomial and block."""
    amb = space.ambient
    gens = []
    for b, s in enumerate(space.shifts):
        for e in range(amb.rank * amb.g + 1):
            for ext in ext_tuples(amb.rank, amb.g, e):
                gens.append(GradedElement(space, s + e, {(b, ext, (0,) * space.rank): 1}))
    return Submodule(space, gens, label)


def module_sum(mods: Sequence[Submodule], label: str = "") -> Submodule:
    if not mods:
        raise ValueError("empty sum")
    space = mods[0].space
    gens = []
    for m in mods:
        if m.space != space:
            raise AmbientMismatch("summands live in different spaces")
        gens.extend(m.generators)
    return Submodule(space, gens, label)


def intersect(m: Submodule, n: Submodule, upto: int, label: str = "") -> Submodule:
    """M ∩ N, exact in every degree up to ``upto``."""
    if m.space != n.space:
        raise AmbientMismatch("cannot intersect submodules of different spaces")
    slices = {d: exact.intersect_row_spaces(m.slice(d), n.slice(d)) for d in range(upto + 1)}
    return Submodule(m.space, (), label, slices=slices, bound=upto)


def intersect_all(mods: Sequence[Submodule], upto: int, label: str = "") -> Submodule:
    if not mods:
        raise ValueError("empty intersection")
    if len(mods) == 1:
        m = mods[0]
        return Submodule(m.space, (), label, slices={d: m.slice(d) for d in range(upto + 1)}, bound=upto)
    slices = {}
    for d in range(upto + 1):
        cur = mods[0].slice(d)
        for other in mods[1:]:
            if cur.nrows() == 0:
                break
            cur = exact.intersect_row_spaces(cur, other.slice(d))
        slices[d] = cur
    return Submodule(mods[0].space, (), label, slices=slices, bound=upto)


def from_slices(space: ModuleSpace, slices: dict[int, Matrix], upto: int, label: str = "") -> Submodule:
    return Submodule(space, (), label, slices=dict(slices), bound=upto)


# Freeness


@dataclass(frozen=True)
class FreenessVerdict:
    kind: str  # "free", "not-free" or "inconclusive"
    generator_degrees: tuple[int, ...]
    witness_degree: int | None = None
    detail: str = ""

    @property
    def is_free(self) -> bool:
        return self.kind == "free"


def certify_free_counts(dims: Sequence[int], gen_counts: Sequence[int], base_dim: Callable[[int], int],
                        numerator: Sequence[int], stable: bool) -> FreenessVerdict:
    """Compare dim M_d with Σ_i dim B_{d-d_i} over the generator degrees d_i.

    ``base_dim`` is the Hilbert function of the base polynomial ring.
    """
    degrees = tuple(d for d, c in enumerate(gen_counts) for _ in range(c))
    for d, c in enumerate(numerator):
        if c < 0:
            return FreenessVerdict("not-free", degrees, d, f"numerator coefficient {c} at t^{d}")
    for d, got in enumerate(dims):
        expected = sum(base_dim(d - e) for e in degrees if e <= d)
        if got < expected:
            return FreenessVerdict("not-free", degrees, d,
                                   f"dimension {got} below {expected} forced by free generators")
        if got > expected:
            raise AssertionError("generators do not span the module")
    if not stable:
        return FreenessVerdict("inconclusive", degrees, None, "numerator not stable at truncation")
    return FreenessVerdict("free", degrees)


def certify_free(m: Submodule, upto: int, window: int = 4) -> FreenessVerdict:
    data = m.hilbert(upto, window)
    counts = [m.generator_count(d) for d in range(upto + 1)]
    r = m.rank
    return certify_free_counts(data.dims, counts, lambda d: polynomial_ring_dim(r, d),
                               data.numerator, data.stable)


# Top exterior projection and duality


def top_mask(spec: AmbientSpec) -> tuple[int, ...]:
    return ((1 << spec.rank) - 1,) * spec.g


def proj_top_element(x: GradedElement) -> GradedElement:
    """Coefficient of the top exterior monomial, as a polynomial."""
    spec = x.space.ambient
    if not x.space.is_ring() or spec.g < 1:
        raise AmbientMismatch("top projection needs the ring Λ^{⊗g} ⊗ S with g ≥ 1")
    top = top_mask(spec)
    poly_space = ring_space(AmbientSpec(spec.rank, 0, spec.labels))
    terms = {(0, (), m): c for (_, e, m), c in x.terms.items() if e == top}
    return GradedElement(poly_space, x.degree - spec.rank * spec.g, terms)


def proj_top(m: Submodule, upto: int | None = None) -> Submodule:
    gens = m.generators if upto is None else m.minimal_generators(upto)
    images = [proj_top_element(x) for x in gens]
    if not images:
        raise ValueError("empty module")
    return Submodule(images[0].space, images, f"top({m.label})")


def divide(p: GradedElement, f: GradedElement) -> GradedElement:
    """Exact quotient of polynomials; raises NotDivisible."""
    if p.is_zero():
        return GradedElement(p.space, p.degree - f.degree, {})
    k = p.degree - f.degree
    if k < 0:
        raise NotDivisible("degree too small")
    mult = multiplication_matrix(p.space, k, f)
    target = flint.fmpq_mat(1, p.space.dim(p.degree), [exact.to_fmpq(c) for c in p.coords()])
    sol = exact.solve(mult.transpose(), target.transpose())
    if sol is None:
        raise NotDivisible("not a multiple")
    return from_coords(p.space, k, [exact.to_fraction(sol[i, 0]) for i in range(sol.nrows())])


@dataclass(frozen=True)
class PairingReport:
    generators: tuple[GradedElement, ...]
    quotients: tuple[tuple[GradedElement | None, ...], ...]
    contained: bool
    upper_triangular: bool
    unipotent: bool
    scalar_matrix: tuple[tuple[object, ...], ...]

    @property
    def maximal(self) -> bool:
        return self.contained and self.unipotent and len(self.generators) == 2 ** (
            self.generators[0].space.ambient.rank * self.generators[0].space.ambient.g)


def duality_pairing_check(m: Submodule, orientation: GradedElement, upto: int) -> PairingReport:
    """Pair generators x_i (ascending degree) against x_{n-1-j} through the top projection.

    ``Q[i][j] = top(x_{n-1-i} · x_j) / orientation``.  With generators sorted by
    degree, ``Q`` has degree ``deg x_j - deg x_i`` entries, so it is block upper
    triangular; it is reported unipotent when the equal-degree diagonal blocks
    are invertible scalar matrices (a change of basis inside each degree then
    makes it unipotent).
    """
    gens = sorted(m.minimal_generators(upto), key=lambda x: x.degree)
    n = len(gens)
    quotients: list[list[GradedElement | None]] = []
    contained = True
    for i in range(n):
        row = []
        for j in range(n):
            p = proj_top_element(multiply(gens[n - 1 - i], gens[j]))
            try:
                row.append(divide(p, orientation))
            except NotDivisible:
                row.append(None)
                contained = False
        quotients.append(row)
    upper = contained and all(
        quotients[i][j].is_zero() for i in range(n) for j in range(i) if gens[j].degree < gens[i].degree)
    unip = upper
    scalars = []
    for i in range(n):
        srow = []
        for j in range(n):
            q = quotients[i][j]
            srow.append(q.terms.get((0, (), (0,) * m.rank), 0) if q is not None and q.degree == 0 else 0)
        scalars.append(tuple(srow))
    if unip:
        degs = sorted({x.degree for x in gens})
        for dg in degs:
            idx = [i for i in range(n) if gens[i].degree == dg]
            block = exact.matrix([[scalars[i][j] for j in idx] for i in idx])
            if exact.rank(block) != len(idx):
                unip = False
    return PairingReport(tuple(gens), tuple(tuple(r) for r in quotients), contained, upper, unip,
                         tuple(scalars))
