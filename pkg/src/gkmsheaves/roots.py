"""Root data of compact Lie groups, their Weyl groups and the 2-torsion torus.

Coordinates: roots and other weights are vectors in a fixed basis of t*; coroots
and coweights are vectors in the dual basis of t, so ``<λ, h> = Σ λ_i h_i``.
The cocharacter lattice ``I = ker(exp 2πi ·)`` determines the 2-torsion
subgroup ``T₂ = (½I)/I ≅ I/2I``; a character of T₂ is a bit vector over a
basis of I.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Iterable, Mapping, Sequence

import flint

from .exact import kernel_basis, matrix, to_fraction, to_rows

Vec = tuple[Fraction, ...]
Mat = tuple[tuple[Fraction, ...], ...]
Bits = tuple[int, ...]


class UnknownGroupType(KeyError):
    pass


class UnknownCharacter(ValueError):
    pass


class UnsupportedQuotient(ValueError):
    pass


def _vec(v) -> Vec:
    return tuple(to_fraction(x) for x in v)


def _dot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def mat_mul(a: Mat, b: Mat) -> Mat:
    n, k, m = len(a), len(b), len(b[0])
    return tuple(tuple(sum((a[i][l] * b[l][j] for l in range(k)), Fraction(0)) for j in range(m))
                 for i in range(n))


def mat_vec(a: Mat, v: Sequence) -> Vec:
    return tuple(_dot(row, v) for row in a)


def transpose(a: Mat) -> Mat:
    return tuple(zip(*a)) if a else ()


def mat_inv(a: Mat) -> Mat:
    inv = matrix(a).inv()
    return tuple(tuple(r) for r in to_rows(inv))


def identity_mat(n: int) -> Mat:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


@dataclass(frozen=True)
class CentralElement:
    """c = exp(2πi μ); the base vertex is s = exp(πi μ), a square root of c."""

    name: str
    coweight: Vec


@dataclass(frozen=True)
class WeylElement:
    matrix: Mat  # action on t* coordinates (column vectors)

    @cached_property
    def on_t(self) -> Mat:
        return transpose(mat_inv(self.matrix))


@dataclass(frozen=True)
class RootDatum:
    name: str
    rank: int
    positive_roots: tuple[Vec, ...]
    coroots: tuple[Vec, ...]
    lattice: tuple[tuple[int, ...], ...]
    invariant_degrees: tuple[int, ...]
    labels: tuple[str, ...]
    root_labels: tuple[str, ...]
    extra_central: tuple[CentralElement, ...] = field(default=())

    def pairing(self, weight: Sequence, coweight: Sequence) -> Fraction:
        return _dot(_vec(weight), _vec(coweight))

    @property
    def dim(self) -> int:
        return self.rank + 2 * len(self.positive_roots)

    def reflection(self, i: int) -> Mat:
        a, h = self.positive_roots[i], self.coroots[i]
        r = self.rank
        return tuple(tuple(Fraction(int(p == q)) - a[p] * h[q] for q in range(r)) for p in range(r))

    @cached_property
    def weyl_group(self) -> tuple[WeylElement, ...]:
        gens = [self.reflection(i) for i in range(len(self.positive_roots))]
        return tuple(WeylElement(m) for m in close_group(gens, self.rank))

    @cached_property
    def simple_roots(self) -> tuple[int, ...]:
        roots = set(self.positive_roots)
        out = []
        for i, a in enumerate(self.positive_roots):
            if not any(tuple(x - y for x, y in zip(a, b)) in roots for b in self.positive_roots):
                out.append(i)
        return tuple(out)

    # 2-torsion subgroup and its characters

    @cached_property
    def _lattice_inverse(self) -> Mat:
        basis = tuple(tuple(Fraction(x) for x in row) for row in self.lattice)
        return mat_inv(transpose(basis))

    def lattice_coords(self, v: Sequence) -> tuple[int, ...]:
        c = mat_vec(self._lattice_inverse, _vec(v))
        if any(x.denominator != 1 for x in c):
            raise ValueError(f"{v} is not in the cocharacter lattice")
        return tuple(int(x) for x in c)

    def t2_class(self, v: Sequence) -> Bits:
        """Class in I/2I of a lattice vector, i.e. the element exp(πi v) of T₂."""
        return tuple(x % 2 for x in self.lattice_coords(v))

    def coroot_t2(self, i: int) -> Bits:
        return self.t2_class(self.coroots[i])

    def characters(self) -> tuple[Bits, ...]:
        return tuple(product((0, 1), repeat=self.rank))

    def char_value(self, chi: Bits, t: Bits) -> int:
        return -1 if sum(a * b for a, b in zip(chi, t)) % 2 else 1

    def chi_on_coroot(self, chi: Bits, i: int) -> int:
        return self.char_value(chi, self.coroot_t2(i))

    def act_on_character(self, w: WeylElement, chi: Bits) -> Bits:
        """(w·χ)(t) = χ(w⁻¹ t)."""
        out = []
        winv_t = transpose(w.matrix)  # inverse of on_t
        basis = self.lattice
        images = [self.t2_class(mat_vec(winv_t, [Fraction(x) for x in b])) for b in basis]
        for k in range(self.rank):
            out.append(sum(chi[j] * images[k][j] for j in range(self.rank)) % 2)
        return tuple(out)

    def orbits(self) -> list[list[Bits]]:
        seen: set[Bits] = set()
        out = []
        for chi in self.characters():
            if chi in seen:
                continue
            orb = sorted({self.act_on_character(w, chi) for w in self.weyl_group})
            seen.update(orb)
            out.append(orb)
        out.sort(key=lambda o: o[0])
        return out

    def stabilizer(self, chi: Bits, within: Iterable[WeylElement] | None = None) -> list[WeylElement]:
        group = self.weyl_group if within is None else within
        return [w for w in group if self.act_on_character(w, chi) == chi]

    def character_from_values(self, values: Mapping[int, int]) -> Bits:
        """Character with prescribed signs on the coroots of the given positive roots."""
        hits = [chi for chi in self.characters()
                if all(self.chi_on_coroot(chi, i) == s for i, s in values.items())]
        if len(hits) != 1:
            raise UnknownCharacter(f"{len(hits)} characters match {dict(values)}")
        return hits[0]

    # central elements

    def _in_lattice(self, v: Sequence[Fraction]) -> bool:
        return all(x.denominator == 1 for x in mat_vec(self._lattice_inverse, v))

    @cached_property
    def central_elements(self) -> dict[str, CentralElement]:
        out = {"identity": CentralElement("identity", (Fraction(0),) * self.rank)}
        if not self.simple_roots or len(self.simple_roots) != self.rank:
            for c in self.extra_central:
                out[c.name] = c
            return out
        simple = [self.positive_roots[i] for i in self.simple_roots]
        inv = mat_inv(tuple(simple))
        # one name per class of fundamental coweights modulo the cocharacter lattice
        for k in range(self.rank):
            mu = tuple(inv[i][k] for i in range(self.rank))
            if any(self._in_lattice(tuple(a - b for a, b in zip(mu, c.coweight))) for c in out.values()):
                continue
            out[f"z{k + 1}"] = CentralElement(f"z{k + 1}", mu)
        for c in self.extra_central:
            out[c.name] = c
        return out

    def centralizer_weyl(self, c: CentralElement) -> list[WeylElement]:
        """W_c: Weyl elements fixing c = exp(2πi μ)."""
        out = []
        for w in self.weyl_group:
            diff = tuple(a - b for a, b in zip(mat_vec(w.on_t, c.coweight), c.coweight))
            try:
                self.lattice_coords(diff)
            except ValueError:
                continue
            out.append(w)
        return out

    def twist(self, w: WeylElement, c: CentralElement) -> Bits:
        """t_w with w·s = t_w s for s = exp(πi μ)."""
        diff = tuple(a - b for a, b in zip(mat_vec(w.on_t, c.coweight), c.coweight))
        return self.t2_class(diff)

    def top_degree(self, g: int = 1) -> int:
        return g * self.dim

    def poincare_k(self) -> list[int]:
        """Coefficients of P_t(K) = Π (1 + t^{2d-1})."""
        poly = [1]
        for d in self.invariant_degrees:
            k = 2 * d - 1
            new = poly + [0] * k
            for i, c in enumerate(poly):
                new[i + k] += c
            poly = new
        return poly


def close_group(gens: Sequence[Mat], n: int, limit: int = 100000) -> list[Mat]:
    """All products of the generators, in breadth-first order from the identity."""
    ident = identity_mat(n)
    seen = {ident: None}
    order = [ident]
    frontier = [ident]
    while frontier:
        nxt = []
        for m in frontier:
            for s in gens:
                p = mat_mul(s, m)
                if p not in seen:
                    seen[p] = None
                    order.append(p)
                    nxt.append(p)
                    if len(order) > limit:
                        raise ValueError("group too large")
        frontier = nxt
    return order


def _hnf_basis(vectors: Sequence[Sequence[Fraction]]) -> tuple[tuple[int, ...], ...]:
    rows = [[int(x) for x in v] for v in vectors]
    h = flint.fmpz_mat(rows).hnf()
    out = []
    for i in range(h.nrows()):
        row = tuple(int(h[i, j]) for j in range(h.ncols()))
        if any(row):
            out.append(row)
    return tuple(out)


def from_realization(name: str, roots: Sequence[Sequence], basis: Sequence[Sequence],
                     degrees: Sequence[int], labels: Sequence[str] | None = None,
                     root_labels: Sequence[str] | None = None,
                     lattice: Sequence[Sequence[int]] | None = None,
                     extra_central: Sequence[CentralElement] = ()) -> RootDatum:
    """Build a root datum from roots in a Euclidean realization.

    ``basis`` lists vectors of the realization forming the chosen basis of t*.
    Coroots are ``2α/(α,α)``; their t-coordinates are the pairings with the
    basis vectors.  The cocharacter lattice defaults to the coroot lattice.
    """
    roots = [_vec(a) for a in roots]
    basis = [_vec(b) for b in basis]
    r = len(basis)
    gram = matrix(basis) * matrix(basis).transpose()
    pos, cor = [], []
    for a in roots:
        rhs = matrix([[_dot(b, a)] for b in basis])
        coords = gram.solve(rhs)
        c = tuple(to_fraction(coords[i, 0]) for i in range(r))
        if tuple(sum((c[i] * basis[i][k] for i in range(r)), Fraction(0)) for k in range(len(a))) != a:
            raise ValueError(f"root {a} is not in the span of the basis")
        h = tuple(2 * x / _dot(a, a) for x in a)
        pos.append(c)
        cor.append(tuple(_dot(b, h) for b in basis))
    lat = tuple(tuple(int(x) for x in v) for v in lattice) if lattice else _hnf_basis(cor)
    if len(lat) != r:
        raise ValueError("cocharacter lattice must have full rank")
    return RootDatum(name, r, tuple(pos), tuple(cor), lat, tuple(degrees),
                     tuple(labels) if labels else tuple(f"x{i + 1}" for i in range(r)),
                     tuple(root_labels) if root_labels else tuple(f"a{i + 1}" for i in range(len(pos))),
                     tuple(extra_central))


def _unit(n: int, i: int, scale=1) -> list[Fraction]:
    v = [Fraction(0)] * n
    v[i] = Fraction(scale)
    return v


def _type_a(n: int) -> RootDatum:
    m = n + 1
    roots, names = [], []
    for i in range(m):
        for j in range(i + 1, m):
            v = [Fraction(0)] * m
            v[i], v[j] = Fraction(1), Fraction(-1)
            roots.append(v)
            names.append(f"a{i + 1}{j + 1}")
    basis = []
    for i in range(n):
        v = [Fraction(0)] * m
        v[i], v[n] = Fraction(1), Fraction(-1)
        basis.append(v)
    return from_realization(f"A{n}", roots, basis, range(2, n + 2),
                            [f"x{i + 1}" for i in range(n)], names)


def _pm_pairs(n: int) -> tuple[list[list[Fraction]], list[str]]:
    roots, names = [], []
    for i in range(n):
        for j in range(i + 1, n):
            v = _unit(n, i)
            v[j] = Fraction(-1)
            roots.append(v)
            names.append(f"e{i + 1}-e{j + 1}")
            w = _unit(n, i)
            w[j] = Fraction(1)
            roots.append(w)
            names.append(f"e{i + 1}+e{j + 1}")
    return roots, names


def _type_b(n: int) -> RootDatum:
    roots, names = _pm_pairs(n)
    for i in range(n):
        roots.append(_unit(n, i))
        names.append(f"e{i + 1}")
    basis = [_unit(n, i) for i in range(n)]
    return from_realization(f"B{n}", roots, basis, [2 * k for k in range(1, n + 1)],
                            [f"e{i + 1}" for i in range(n)], names)


def _type_c(n: int, name: str | None = None) -> RootDatum:
    roots, names = _pm_pairs(n)
    for i in range(n):
        roots.append(_unit(n, i, 2))
        names.append(f"2e{i + 1}")
    basis = [_unit(n, i) for i in range(n)]
    return from_realization(name or f"C{n}", roots, basis, [2 * k for k in range(1, n + 1)],
                            [f"e{i + 1}" for i in range(n)], names)


def _type_d4() -> RootDatum:
    roots, names = _pm_pairs(4)
    basis = [_unit(4, i) for i in range(4)]
    return from_realization("D4", roots, basis, [2, 4, 4, 6], [f"e{i + 1}" for i in range(4)], names)


def _type_g2() -> RootDatum:
    a = [Fraction(1), Fraction(-1), Fraction(0)]
    b = [Fraction(-2), Fraction(1), Fraction(1)]

    def comb(p, q):
        return [p * x + q * y for x, y in zip(a, b)]

    coeffs = [(1, 0), (0, 1), (1, 1), (2, 1), (3, 1), (3, 2)]
    roots = [comb(p, q) for p, q in coeffs]
    names = ["a", "b", "a+b", "2a+b", "3a+b", "3a+2b"]
    basis = [comb(1, 1), comb(2, 1)]
    return from_realization("G2", roots, basis, [2, 6], ["x", "y"], names)


def _type_f4() -> RootDatum:
    roots, names = _pm_pairs(4)
    for i in range(4):
        roots.append(_unit(4, i))
        names.append(f"e{i + 1}")
    half = Fraction(1, 2)
    for signs in product((1, -1), repeat=3):
        v = [half] + [half * s for s in signs]
        roots.append(v)
        names.append("h(" + "".join("+" if s > 0 else "-" for s in signs) + ")")
    basis = [_unit(4, i) for i in range(4)]
    return from_realization("F4", roots, basis, [2, 6, 8, 12], [f"e{i + 1}" for i in range(4)], names)


def _so3() -> RootDatum:
    # t* = Q·x with the root x; the coroot pairs to 2, the cocharacter lattice is Z.
    return RootDatum("SO3", 1, ((Fraction(1),),), ((Fraction(2),),), ((1,),), (2,), ("x",), ("a",),
                     (CentralElement("rot", (Fraction(1, 2),)),))


def _u2() -> RootDatum:
    return RootDatum("U2", 2, ((Fraction(1), Fraction(-1)),), ((Fraction(1), Fraction(-1)),),
                     ((1, 0), (0, 1)), (1, 2), ("e1", "e2"), ("e1-e2",),
                     (CentralElement("minus", (Fraction(1, 2), Fraction(1, 2))),))


_BUILDERS = {
    "A1": lambda: _type_a(1),
    "A2": lambda: _type_a(2),
    "A3": lambda: _type_a(3),
    "A4": lambda: _type_a(4),
    "B2": lambda: _type_c(2, "B2"),
    "B3": lambda: _type_b(3),
    "B4": lambda: _type_b(4),
    "C3": lambda: _type_c(3),
    "C4": lambda: _type_c(4),
    "D4": _type_d4,
    "G2": _type_g2,
    "F4": _type_f4,
    "SO3": _so3,
    "U2": _u2,
}

ALIASES = {"SU2": "A1", "PSU3": "A2", "SU3": "A2", "SU4": "A3", "SU5": "A4", "SPIN5": "B2", "SP2": "B2"}
MANDATORY = ("A2", "B2", "G2", "A3")
EXTENDED = ("B3", "C3", "A4", "B4", "C4", "D4", "F4")

_CACHE: dict[str, RootDatum] = {}


def registry_keys() -> tuple[str, ...]:
    return tuple(_BUILDERS)


def load(name: str) -> RootDatum:
    key = name.strip().upper()
    key = ALIASES.get(key, key)
    if key not in _BUILDERS:
        raise UnknownGroupType(name)
    if key not in _CACHE:
        _CACHE[key] = _BUILDERS[key]()
    return _CACHE[key]


def adapted_basis(datum: RootDatum, i: int) -> Mat:
    """Rows: α_i followed by a basis of the +1 eigenspace of its reflection."""
    a, h = datum.positive_roots[i], datum.coroots[i]
    ker = kernel_basis(matrix([list(h)]))
    rows = [a] + [tuple(to_fraction(ker[p, q]) for p in range(datum.rank)) for q in range(ker.ncols())]
    return tuple(tuple(r) for r in rows)


def primitive(v: Sequence[Fraction]) -> tuple[int, ...]:
    """Primitive integer representative with positive leading entry."""
    v = [to_fraction(x) for x in v]
    from math import gcd, lcm
    den = 1
    for x in v:
        den = lcm(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        raise ValueError("zero weight")
    ints = [x // g for x in ints]
    lead = next(x for x in ints if x)
    return tuple(-x for x in ints) if lead < 0 else tuple(ints)


def molien_degrees(group: Sequence[Mat], n: int, bound: int = 40) -> tuple[int, ...] | None:
    """Degrees of basic invariants if the invariant ring is polynomial, else None.

    Works on the Molien series in the variable ``u`` (polynomial degree).
    """
    series = [Fraction(0)] * (bound + 1)
    for m in group:
        # det(1 - u m) via characteristic polynomial
        cp = matrix(m).charpoly()  # det(z - m)
        coeffs = [to_fraction(c) for c in cp.coeffs()]  # low to high
        # det(1 - u m) = u^n det(1/u - m) = sum coeffs[k] u^(n-k)
        poly = [Fraction(0)] * (n + 1)
        for k, c in enumerate(coeffs):
            poly[n - k] = c
        inv = [Fraction(0)] * (bound + 1)
        inv[0] = 1 / poly[0]
        for k in range(1, bound + 1):
            s = sum((poly[j] * inv[k - j] for j in range(1, min(k, n) + 1)), Fraction(0))
            inv[k] = -s / poly[0]
        for k in range(bound + 1):
            series[k] += inv[k]
    series = [x / len(group) for x in series]
    degrees: list[int] = []
    cur = series
    while len(degrees) < n:
        k = next((k for k in range(1, bound + 1) if cur[k] != 0), None)
        if k is None or cur[k] < 0:
            return None
        for _ in range(int(cur[k])):
            degrees.append(k)
            cur = [cur[j] - (cur[j - k] if j >= k else 0) for j in range(bound + 1)]
        if len(degrees) > n:
            return None
    if any(cur[1:]):
        return None
    return tuple(degrees)
