"""The bigraded ring Λ(t*)^{⊗g} ⊗ S(t*) and free modules over it.

Exterior generators sit in degree 1, polynomial variables in degree 2.  A
basis element of a degree piece is a key ``(ext, exps)``: ``ext`` holds one
bitmask per exterior slot and ``exps`` is the exponent vector of the
polynomial part.  Within a piece keys are ordered by total exterior degree,
then slot by slot (each slot by subset size, then lexicographically), then
by exponent vector in descending lexicographic order (``x1^q`` first).

A :class:`ModuleSpace` is a direct sum of shifted copies of the ring.  Keys
of a module space carry a leading block index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import comb
from typing import Iterable, Mapping, Sequence

import flint

from .exact import Matrix, to_fmpq, to_fraction

Ext = tuple[int, ...]
Exps = tuple[int, ...]
Key = tuple[int, Ext, Exps]


class DegreeMismatch(ValueError):
    pass


class AmbientMismatch(ValueError):
    pass


@dataclass(frozen=True)
class AmbientSpec:
    rank: int
    g: int = 1
    labels: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.rank < 0 or self.g < 0:
            raise ValueError("rank and g must be non-negative")
        if self.labels is not None and len(self.labels) != self.rank:
            raise ValueError("one label per variable")

    def var_names(self) -> tuple[str, ...]:
        return self.labels or tuple(f"x{i + 1}" for i in range(self.rank))


def piece_dimension(spec: AmbientSpec, d: int) -> int:
    if d < 0:
        return 0
    r, n = spec.rank, spec.rank * spec.g
    total = 0
    for e in range(d % 2, min(n, d) + 1, 2):
        q = (d - e) // 2
        total += comb(n, e) * (comb(q + r - 1, r - 1) if r else int(q == 0))
    return total


@lru_cache(maxsize=None)
def slot_subsets(r: int) -> tuple[int, ...]:
    masks = range(1 << r)
    return tuple(sorted(masks, key=lambda m: (bin(m).count("1"), _bits(m))))


@lru_cache(maxsize=None)
def _bits(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


@lru_cache(maxsize=None)
def ext_tuples(r: int, g: int, e: int) -> tuple[Ext, ...]:
    by_size: dict[int, list[int]] = {}
    for m in slot_subsets(r):
        by_size.setdefault(bin(m).count("1"), []).append(m)
    order = {m: i for i, m in enumerate(slot_subsets(r))}
    out = [t for t in product(slot_subsets(r), repeat=g)
           if sum(bin(m).count("1") for m in t) == e]
    out.sort(key=lambda t: tuple(order[m] for m in t))
    return tuple(out)


@lru_cache(maxsize=None)
def monomials(r: int, q: int) -> tuple[Exps, ...]:
    """Exponent vectors of degree ``q`` in descending lexicographic order."""
    if q < 0:
        return ()
    if r == 0:
        return ((),) if q == 0 else ()
    if r == 1:
        return ((q,),)
    out = []
    for a in range(q, -1, -1):
        for rest in monomials(r - 1, q - a):
            out.append((a,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def ring_piece(spec: AmbientSpec, d: int) -> tuple[tuple[Ext, Exps], ...]:
    if d < 0:
        return ()
    r, g = spec.rank, spec.g
    out = []
    for e in range(d % 2, min(r * g, d) + 1, 2):
        mons = monomials(r, (d - e) // 2)
        for ext in ext_tuples(r, g, e):
            out.extend((ext, m) for m in mons)
    return tuple(out)


@dataclass(frozen=True)
class ModuleSpace:
    """Free module ⊕_b R[-shift_b] over R = Λ(t*)^{⊗g} ⊗ S(t*)."""

    ambient: AmbientSpec
    shifts: tuple[int, ...] = (0,)
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"b{i}" for i in range(len(self.shifts))))
        if len(self.labels) != len(self.shifts):
            raise ValueError("one label per block")

    @property
    def rank(self) -> int:
        return self.ambient.rank

    @property
    def nblocks(self) -> int:
        return len(self.shifts)

    def is_ring(self) -> bool:
        return self.shifts == (0,)

    def dim(self, d: int) -> int:
        return sum(piece_dimension(self.ambient, d - s) for s in self.shifts)

    def piece(self, d: int) -> tuple[Key, ...]:
        return _space_piece(self, d)

    def index(self, d: int) -> dict[Key, int]:
        return _space_index(self, d)


@lru_cache(maxsize=None)
def _space_piece(space: ModuleSpace, d: int) -> tuple[Key, ...]:
    out = []
    for b, s in enumerate(space.shifts):
        out.extend((b, ext, m) for ext, m in ring_piece(space.ambient, d - s))
    return tuple(out)


@lru_cache(maxsize=None)
def _space_index(space: ModuleSpace, d: int) -> dict[Key, int]:
    return {k: i for i, k in enumerate(_space_piece(space, d))}


def ring_space(spec: AmbientSpec) -> ModuleSpace:
    return ModuleSpace(spec, (0,), ("R",))


def key_degree(space: ModuleSpace, key: Key) -> int:
    b, ext, exps = key
    return space.shifts[b] + sum(bin(m).count("1") for m in ext) + 2 * sum(exps)


@lru_cache(maxsize=None)
def mul_var_index(space: ModuleSpace, d: int, j: int) -> tuple[int, ...]:
    """Position in piece ``d + 2`` of ``x_j`` times each key of piece ``d``."""
    idx = space.index(d + 2)
    out = []
    for b, ext, exps in space.piece(d):
        e = list(exps)
        e[j] += 1
        out.append(idx[(b, ext, tuple(e))])
    return tuple(out)


@dataclass(frozen=True)
class GradedElement:
    space: ModuleSpace
    degree: int
    terms: Mapping[Key, Fraction] = field(hash=False, compare=False)

    def __post_init__(self):
        clean = {}
        for k, c in self.terms.items():
            c = to_fraction(c)
            if c == 0:
                continue
            if key_degree(self.space, k) != self.degree:
                raise DegreeMismatch(f"term {k} does not have degree {self.degree}")
            clean[k] = c
        object.__setattr__(self, "terms", clean)

    def __eq__(self, other):
        return (isinstance(other, GradedElement) and self.space == other.space
                and (self.degree == other.degree or not self.terms)
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.space, self.degree, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def coords(self) -> list[Fraction]:
        piece = self.space.piece(self.degree)
        return [self.terms.get(k, Fraction(0)) for k in piece]

    def __add__(self, other: GradedElement) -> GradedElement:
        _same(self, other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return GradedElement(self.space, self.degree, out)

    def __neg__(self) -> GradedElement:
        return GradedElement(self.space, self.degree, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: GradedElement) -> GradedElement:
        return self + (-other)

    def scale(self, c) -> GradedElement:
        c = to_fraction(c)
        return GradedElement(self.space, self.degree, {k: c * v for k, v in self.terms.items()})

    def __repr__(self):
        return f"GradedElement(deg={self.degree}, {format_element(self)})"


def _same(x: GradedElement, y: GradedElement):
    if x.space != y.space:
        raise AmbientMismatch("elements live in different spaces")
    if x.degree != y.degree and x.terms and y.terms:
        raise DegreeMismatch(f"cannot add degrees {x.degree} and {y.degree}")


def from_coords(space: ModuleSpace, d: int, coords: Sequence) -> GradedElement:
    piece = space.piece(d)
    if len(coords) != len(piece):
        raise DegreeMismatch(f"expected {len(piece)} coordinates in degree {d}")
    return GradedElement(space, d, {k: to_fraction(c) for k, c in zip(piece, coords) if c != 0})


def zero(space: ModuleSpace, d: int) -> GradedElement:
    return GradedElement(space, d, {})


def one(spec: AmbientSpec) -> GradedElement:
    return GradedElement(ring_space(spec), 0, {(0, (0,) * spec.g, (0,) * spec.rank): 1})


def variable(spec: AmbientSpec, i: int) -> GradedElement:
    exps = tuple(int(j == i) for j in range(spec.rank))
    return GradedElement(ring_space(spec), 2, {(0, (0,) * spec.g, exps): 1})


def exterior(spec: AmbientSpec, i: int, slot: int = 0) -> GradedElement:
    ext = tuple((1 << i) if s == slot else 0 for s in range(spec.g))
    return GradedElement(ring_space(spec), 1, {(0, ext, (0,) * spec.rank): 1})


def linear_form(spec: AmbientSpec, coeffs: Sequence) -> GradedElement:
    terms = {}
    for i, c in enumerate(coeffs):
        exps = tuple(int(j == i) for j in range(spec.rank))
        terms[(0, (0,) * spec.g, exps)] = to_fraction(c)
    return GradedElement(ring_space(spec), 2, terms)


def polynomial(spec: AmbientSpec, terms: Mapping[Exps, object]) -> GradedElement:
    """Element of S(t*) inside the ring from ``{exps: coefficient}``."""
    degs = {2 * sum(e) for e in terms}
    d = degs.pop() if len(degs) == 1 else (0 if not degs else None)
    if d is None:
        raise DegreeMismatch("polynomial is not homogeneous")
    return GradedElement(ring_space(spec), d,
                         {(0, (0,) * spec.g, tuple(e)): c for e, c in terms.items()})


def wedge_sign(a: int, b: int) -> int:
    """Sign of e_A ∧ e_B relative to e_{A∪B}; 0 if they overlap."""
    if a & b:
        return 0
    inv = 0
    for j in _bits(b):
        inv += bin(a >> (j + 1)).count("1")
    return -1 if inv & 1 else 1


def _ext_product(a: Ext, b: Ext) -> tuple[int, Ext]:
    sign = 1
    g = len(a)
    sizes_a = [bin(m).count("1") for m in a]
    for i in range(g):
        s = wedge_sign(a[i], b[i])
        if s == 0:
            return 0, ()
        sign *= s
        if bin(b[i]).count("1") & 1 and sum(sizes_a[i + 1:]) & 1:
            sign = -sign
    return sign, tuple(x | y for x, y in zip(a, b))


def multiply(x: GradedElement, y: GradedElement) -> GradedElement:
    """Ring element times ring or module element (graded-commutative signs)."""
    if not x.space.is_ring():
        raise AmbientMismatch("left factor must lie in the ring")
    if x.space.ambient != y.space.ambient:
        raise AmbientMismatch("factors have different ambients")
    out: dict[Key, Fraction] = {}
    for (_, ea, ma), ca in x.terms.items():
        for (b, eb, mb), cb in y.terms.items():
            s, e = _ext_product(ea, eb)
            if s == 0:
                continue
            k = (b, e, tuple(i + j for i, j in zip(ma, mb)))
            out[k] = out.get(k, 0) + s * ca * cb
    return GradedElement(y.space, x.degree + y.degree, out)


def power(x: GradedElement, n: int) -> GradedElement:
    out = one(x.space.ambient)
    for _ in range(n):
        out = multiply(out, x)
    return out


def product_of(factors: Iterable[GradedElement], spec: AmbientSpec) -> GradedElement:
    out = one(spec)
    for f in factors:
        out = multiply(out, f)
    return out


def tensor_space(s1: ModuleSpace, s2: ModuleSpace) -> ModuleSpace:
    if s1.rank != s2.rank:
        raise AmbientMismatch("tensor factors need the same rank")
    amb = AmbientSpec(s1.rank, s1.ambient.g + s2.ambient.g)
    shifts = tuple(a + b for a in s1.shifts for b in s2.shifts)
    labels = tuple(f"{a}*{b}" for a in s1.labels for b in s2.labels)
    return ModuleSpace(amb, shifts, labels)


def tensor(x: GradedElement, y: GradedElement,
           space: ModuleSpace | None = None) -> GradedElement:
    """x ⊗ y over S(t*): exterior slots concatenate, polynomial parts multiply."""
    space = space or tensor_space(x.space, y.space)
    nb = y.space.nblocks
    out: dict[Key, Fraction] = {}
    for (ba, ea, ma), ca in x.terms.items():
        for (bb, eb, mb), cb in y.terms.items():
            k = (ba * nb + bb, ea + eb, tuple(i + j for i, j in zip(ma, mb)))
            out[k] = out.get(k, 0) + ca * cb
    return GradedElement(space, x.degree + y.degree, out)


def embed(x: GradedElement, space: ModuleSpace, block: int = 0) -> GradedElement:
    """Place a ring element into block ``block`` of a module space."""
    if x.space.ambient != space.ambient:
        raise AmbientMismatch("ambients differ")
    terms = {(block, e, m): c for (_, e, m), c in x.terms.items()}
    return GradedElement(space, x.degree + space.shifts[block], terms)


def move(x: GradedElement, space: ModuleSpace, block_map: Mapping[int, int]) -> GradedElement:
    """Relabel blocks of ``x`` into ``space``."""
    terms = {(block_map[b], e, m): c for (b, e, m), c in x.terms.items()}
    return GradedElement(space, x.degree, terms)


def slot_embed(x: GradedElement, slot: int, g: int) -> GradedElement:
    """Put a g=1 ring element into exterior slot ``slot`` of the g-fold ring."""
    if x.space.ambient.g != 1 or not x.space.is_ring():
        raise AmbientMismatch("slot_embed needs a g=1 ring element")
    spec = AmbientSpec(x.space.ambient.rank, g, x.space.ambient.labels)
    terms = {}
    for (_, (m,), exps), c in x.terms.items():
        ext = tuple(m if s == slot else 0 for s in range(g))
        terms[(0, ext, exps)] = c
    return GradedElement(ring_space(spec), x.degree, terms)


# Linear substitutions


@dataclass(frozen=True)
class LinearSubstitution:
    """x_i ↦ Σ_j sym[j][i] x_j on S(t*), e_i ↦ Σ_j ext[j][i] e_j in every slot.

    ``None`` means the identity on that factor.
    """

    sym: tuple[tuple[Fraction, ...], ...] | None
    ext: tuple[tuple[Fraction, ...], ...] | None

    @staticmethod
    def of(sym=None, ext="same") -> LinearSubstitution:
        def norm(m):
            return None if m is None else tuple(tuple(to_fraction(v) for v in row) for row in m)
        s = norm(sym)
        e = s if ext == "same" else norm(ext)
        return LinearSubstitution(s, e)


@lru_cache(maxsize=None)
def _sym_image(sym, exps: Exps) -> dict[Exps, Fraction]:
    r = len(exps)
    if sum(exps) == 0:
        return {exps: Fraction(1)}
    i = next(j for j in range(r - 1, -1, -1) if exps[j])
    rest = list(exps)
    rest[i] -= 1
    base = _sym_image(sym, tuple(rest))
    out: dict[Exps, Fraction] = {}
    for j in range(r):
        c = sym[j][i]
        if c == 0:
            continue
        for m, v in base.items():
            mm = list(m)
            mm[j] += 1
            mm = tuple(mm)
            out[mm] = out.get(mm, 0) + c * v
    return {m: v for m, v in out.items() if v}


@lru_cache(maxsize=None)
def _ext_image(ext, mask: int) -> dict[int, Fraction]:
    out = {0: Fraction(1)}
    r = len(ext)
    for i in _bits(mask):
        nxt: dict[int, Fraction] = {}
        for m, v in out.items():
            for j in range(r):
                c = ext[j][i]
                if c == 0:
                    continue
                s = wedge_sign(m, 1 << j)
                if s:
                    nxt[m | 1 << j] = nxt.get(m | 1 << j, 0) + s * c * v
        out = {m: v for m, v in nxt.items() if v}
    return out


def _key_image(sub: LinearSubstitution, ext: Ext, exps: Exps) -> dict[tuple[Ext, Exps], Fraction]:
    sym_img = {exps: Fraction(1)} if sub.sym is None else _sym_image(sub.sym, exps)
    ext_parts = [{m: Fraction(1)} if sub.ext is None else _ext_image(sub.ext, m) for m in ext]
    ext_img: dict[Ext, Fraction] = {(): Fraction(1)}
    for part in ext_parts:
        ext_img = {e + (m,): v * w for e, v in ext_img.items() for m, w in part.items()}
    return {(e, m): v * w for e, v in ext_img.items() for m, w in sym_img.items()}


def substitute(x: GradedElement, sub: LinearSubstitution) -> GradedElement:
    out: dict[Key, Fraction] = {}
    for (b, ext, exps), c in x.terms.items():
        for (e, m), v in _key_image(sub, ext, exps).items():
            k = (b, e, m)
            out[k] = out.get(k, 0) + c * v
    return GradedElement(x.space, x.degree, out)


def substitution_matrix(space: ModuleSpace, d: int, sub: LinearSubstitution) -> Matrix:
    """Matrix (rows = source keys, columns = target keys) of ``sub`` on piece ``d``.

    A row vector of coordinates ``v`` maps to ``v * M``.
    """
    piece = space.piece(d)
    idx = space.index(d)
    n = len(piece)
    m = flint.fmpq_mat(n, n)
    for i, (b, ext, exps) in enumerate(piece):
        for (e, mm), v in _key_image(sub, ext, exps).items():
            m[i, idx[(b, e, mm)]] = to_fmpq(v)
    return m


def multiplication_matrix(space: ModuleSpace, d: int, f: GradedElement) -> Matrix:
    """Matrix of v ↦ f·v from piece ``d`` to piece ``d + deg f`` for polynomial ``f``."""
    if any(any(e) for (_, e, _) in f.terms):
        raise AmbientMismatch("multiplier must be a polynomial")
    src = space.piece(d)
    tgt = space.index(d + f.degree)
    m = flint.fmpq_mat(len(src), len(tgt))
    for i, (b, ext, exps) in enumerate(src):
        for (_, _, fm), c in f.terms.items():
            j = tgt[(b, ext, tuple(a + bb for a, bb in zip(exps, fm)))]
            m[i, j] += to_fmpq(c)
    return m


def format_element(x: GradedElement) -> str:
    if not x.terms:
        return "0"
    names = x.space.ambient.var_names()
    multi = x.space.nblocks > 1
    parts = []
    for k in x.space.piece(x.degree):
        c = x.terms.get(k)
        if c is None:
            continue
        b, ext, exps = k
        factors = []
        if multi:
            factors.append(f"[{x.space.labels[b]}]")
        slot_txt = []
        for m in ext:
            bits = _bits(m)
            slot_txt.append("^".join(f"e{i + 1}" for i in bits) if bits else "1")
        if any(ext):
            factors.append("(" + "⊗".join(slot_txt) + ")")
        for n, a in zip(names, exps):
            if a:
                factors.append(n if a == 1 else f"{n}^{a}")
        body = "*".join(factors) or "1"
        parts.append(f"{c}*{body}" if c != 1 else body)
    return " + ".join(parts)
