"""Equivariant cohomology of representation-variety sheaves, character by character.

For a compact connected group with root datum ``datum`` the sheaf over the
regular-case GKM graph splits over characters χ of the 2-torsion subgroup.
For a positive root α choose an adapted basis (α, β_1, ...) of t* with the
β_i annihilating the coroot.  The χ-component of the global sections is the
submodule of Λ(t*)^{⊗g} ⊗ S(t*) whose coefficient on each adapted exterior
monomial m_1 ⊗ ... ⊗ m_g is divisible by α^n, where n counts the slots with
(-1)^{[α ∈ m_i]} χ(exp πi h_α) = -1; this for every positive root.  For g = 1
the condition reads ω − χ(exp πi h_α) S_α ω ≡ 0 (mod α).

Two routes compute it: the kernel of the stacked divisibility constraints
(``method="kernel"``) and the intersection of the rank-one images spanned by
the adapted generators (``method="intersect"``).  Weyl invariants, relative
Hilbert numerators and freeness verdicts are assembled into table rows.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import flint

from . import exact
from .algebra import (
    AmbientSpec,
    GradedElement,
    LinearSubstitution,
    _key_image,
    ext_tuples,
    from_coords,
    linear_form,
    multiplication_matrix,
    multiply,
    one,
    ring_space,
    slot_embed,
    substitute,
    substitution_matrix,
)
from .modules import (
    FreenessVerdict,
    HilbertData,
    Submodule,
    certify_free,
    certify_free_counts,
    from_slices,
    hilbert_data,
    intersect_all,
)
from .roots import (
    Bits,
    CentralElement,
    RootDatum,
    UnsupportedQuotient,
    WeylElement,
    adapted_basis,
    close_group,
    load,
    molien_degrees,
)

PRODUCT_NOTE = "product-module, tensor identification unproven"


def default_truncation(datum: RootDatum, g: int) -> int:
    return g * datum.dim + 4


def default_weyl_truncation(datum: RootDatum, g: int) -> int:
    # invariant generators may sit above the top degree by up to Σ (2 d_i - 2)
    return g * datum.dim + 2 * len(datum.positive_roots) + 4


def bits_label(chi: Bits) -> str:
    return "".join(str(b) for b in chi)


def parse_bits(text: str, rank: int) -> Bits:
    if len(text) != rank or set(text) - {"0", "1"}:
        raise ValueError(f"character must be {rank} bits, got {text!r}")
    return tuple(int(c) for c in text)


# rank-one images


def rank_one_image(datum: RootDatum, root: int, chi: Bits, g: int = 1) -> Submodule:
    """Image of restriction to the α-fixed locus for one character.

    In an adapted basis (α, β_1, ...) with β_i annihilating the coroot, an
    exterior monomial m_1 ⊗ ... ⊗ m_g spans m ⊗ α^n, with n the number of
    slots where (-1)^{[α ∈ m_i]} χ(h_α) = -1.
    """
    spec = AmbientSpec(datum.rank, g, datum.labels)
    basis = adapted_basis(datum, root)
    r = datum.rank
    to_x = LinearSubstitution.of(None, tuple(tuple(basis[i][j] for i in range(r)) for j in range(r)))
    alpha = linear_form(spec, datum.positive_roots[root])
    sign = datum.chi_on_coroot(chi, root)
    space = ring_space(spec)
    gens = []
    for e in range(r * g + 1):
        for ext in ext_tuples(r, g, e):
            x = substitute(GradedElement(space, e, {(0, ext, (0,) * r): 1}), to_x)
            for _ in range(_alpha_power(ext, sign)):
                x = multiply(alpha, x)
            gens.append(x)
    return Submodule(space, gens, f"image[{datum.root_labels[root]},{bits_label(chi)}]")


def _alpha_power(ext: Sequence[int], sign: int) -> int:
    return sum(1 for m in ext if (-1 if m & 1 else 1) * sign == -1)


# constraint kernel


def _adapted_coordinates(datum: RootDatum, root: int) -> tuple[int, LinearSubstitution]:
    """Exterior part into the adapted basis; polynomial part into (α, x_j for j ≠ k)."""
    alpha = datum.positive_roots[root]
    r = datum.rank
    nz = [j for j in range(r) if alpha[j] != 0]
    k = min(nz, key=lambda j: (abs(alpha[j]) != 1, j))
    sym = [[Fraction(int(p == q)) for q in range(r)] for p in range(r)]
    for j in range(r):
        sym[j][k] = 1 / alpha[k] if j == k else -alpha[j] / alpha[k]
    binv = exact.matrix(adapted_basis(datum, root)).inv()
    ext = [[exact.to_fraction(binv[j, a]) for j in range(r)] for a in range(r)]
    return k, LinearSubstitution.of(sym, ext)


def constraint_matrix(datum: RootDatum, g: int, d: int, chi: Bits) -> exact.Matrix:
    """Stacked constraints; rows are conditions, columns the basis of piece ``d``.

    Each condition is the coefficient of a monomial α^j y^b ⊗ m (adapted
    coordinates) with j below the required power of α.
    """
    spec = AmbientSpec(datum.rank, g)
    piece = ring_space(spec).piece(d)
    cols: dict = {}
    entries = []
    for i, _ in enumerate(datum.positive_roots):
        s = datum.chi_on_coroot(chi, i)
        k, sub = _adapted_coordinates(datum, i)
        for row, (_, ext, exps) in enumerate(piece):
            for (e, m), v in _key_image(sub, ext, exps).items():
                if v and m[k] < _alpha_power(e, s):
                    c = cols.setdefault((i, e, m), len(cols))
                    entries.append((c, row, v))
    mat = flint.fmpq_mat(len(cols), len(piece))
    for c, row, v in entries:
        mat[c, row] += exact.to_fmpq(v)
    return mat


def kernel_slice(datum: RootDatum, g: int, d: int, chi: Bits) -> exact.Matrix:
    c = constraint_matrix(datum, g, d, chi)
    return exact.kernel_basis(c).transpose()


def direct_sections(datum: RootDatum, g: int, chi: Bits, upto: int) -> Submodule:
    """H⁰ of the g-fold sheaf's χ-component, exact through degree ``upto``."""
    space = ring_space(AmbientSpec(datum.rank, g, datum.labels))
    slices = {d: kernel_slice(datum, g, d, chi) for d in range(upto + 1)}
    return from_slices(space, slices, upto, f"H0[{datum.name},g={g},{bits_label(chi)}]")


def sections_f1_chi(datum: RootDatum, chi: Bits, upto: int | None = None,
                    method: str = "kernel") -> Submodule:
    upto = default_truncation(datum, 1) if upto is None else upto
    if method == "kernel":
        return direct_sections(datum, 1, chi, upto)
    if method == "intersect":
        images = [rank_one_image(datum, i, chi) for i in range(len(datum.positive_roots))]
        return intersect_all(images, upto, f"H0[{datum.name},g=1,{bits_label(chi)}]")
    raise ValueError(f"unknown method {method!r}")


@dataclass
class SectionsResult:
    module: Submodule
    hilbert: HilbertData
    verdict: FreenessVerdict
    note: str = ""


def sections_fg_chi(datum: RootDatum, g: int, chi: Bits, upto: int | None = None,
                    base_upto: int | None = None) -> SectionsResult:
    """Product module spanned by g-fold products of the g=1 generators."""
    upto = default_truncation(datum, g) if upto is None else upto
    base_upto = default_truncation(datum, 1) if base_upto is None else base_upto
    base = sections_f1_chi(datum, chi, base_upto)
    base_verdict = certify_free(base, base_upto)
    gens1 = base.minimal_generators(base_upto)
    if g == 1:
        mod = base if upto <= base_upto else Submodule(base.space, gens1, base.label)
        h = mod.hilbert(upto)
        return SectionsResult(mod, h, certify_free(mod, upto))
    spec = AmbientSpec(datum.rank, g, datum.labels)
    embedded = [[slot_embed(x, s, g) for x in gens1] for s in range(g)]
    prods = [one(spec)]
    for s in range(g):
        prods = [multiply(p, x) for p in prods for x in embedded[s]]
    mod = Submodule(ring_space(spec), prods, f"prod[{datum.name},g={g},{bits_label(chi)}]")
    h = mod.hilbert(upto)
    verdict = certify_free(mod, upto)
    note = "" if base_verdict.is_free else PRODUCT_NOTE
    return SectionsResult(mod, h, verdict, note)


# Weyl group actions


def generating_set(elements: Sequence[WeylElement], rank: int) -> list[WeylElement]:
    """A small generating set of the group formed by ``elements``."""
    gens: list[WeylElement] = []
    closure = {m for m in close_group([], rank)}
    for w in elements:
        if w.matrix in closure:
            continue
        gens.append(w)
        closure = set(close_group([x.matrix for x in gens], rank))
        if len(closure) == len(elements):
            break
    return gens


def weyl_substitution(w: WeylElement) -> LinearSubstitution:
    return LinearSubstitution.of(w.matrix)


def invariant_slice(space, d: int, basis: exact.Matrix, group: Sequence[tuple[WeylElement, int]]
                    ) -> exact.Matrix:
    """Rows of ``basis``-span fixed up to sign: v·w = σ(w) v for the given pairs."""
    k = basis.nrows()
    if k == 0 or not group:
        return basis
    blocks = []
    n = basis.ncols()
    for w, sigma in group:
        m = substitution_matrix(space, d, weyl_substitution(w))
        blocks.append(basis * m - basis * sigma)
    big = exact.hstack(blocks)
    coeffs = exact.left_kernel_rows(big)
    if coeffs.nrows() == 0:
        return flint.fmpq_mat(0, n)
    return exact.row_basis(coeffs * basis)


def averaged_slice(space, d: int, basis: exact.Matrix, group: Sequence[tuple[WeylElement, int]]
                   ) -> exact.Matrix:
    """Same space through the averaging projector (1/|G|) Σ σ(w) w."""
    n = basis.ncols()
    if basis.nrows() == 0:
        return basis
    proj = flint.fmpq_mat(n, n)
    for w, sigma in group:
        proj += substitution_matrix(space, d, weyl_substitution(w)) * sigma
    proj = proj / len(group)
    return exact.row_basis(basis * proj)


def twisted_stabilizer(datum: RootDatum, chi: Bits, c: CentralElement) -> list[tuple[WeylElement, int]]:
    wc = datum.centralizer_weyl(c)
    stab = datum.stabilizer(chi, wc)
    return [(w, datum.char_value(chi, datum.twist(w, c))) for w in stab]


def _relative_degrees(datum: RootDatum, c: CentralElement) -> tuple[int, ...]:
    wc = datum.centralizer_weyl(c)
    if len(wc) == len(datum.weyl_group):
        return datum.invariant_degrees
    degs = molien_degrees([w.matrix for w in wc], datum.rank)
    if degs is None:
        raise UnsupportedQuotient("invariant ring of W_c is not polynomial")
    return degs


def _series_dims(degrees: Sequence[int], upto: int) -> list[int]:
    """Hilbert function of a polynomial ring with generators in degrees 2·deg."""
    out = [0] * (upto + 1)
    out[0] = 1
    for k in degrees:
        step = 2 * k
        for d in range(step, upto + 1):
            out[d] += out[d - step]
    return out


def basic_invariants(datum: RootDatum, group: Sequence[WeylElement], degrees: Sequence[int]
                     ) -> list[GradedElement]:
    """Homogeneous generators of S(t*)^group in the given polynomial degrees."""
    spec = AmbientSpec(datum.rank, 0, datum.labels)
    space = ring_space(spec)
    pairs = [(w, 1) for w in generating_set(group, datum.rank)]
    found: list[GradedElement] = []
    for k in sorted(set(degrees)):
        d = 2 * k
        n = space.dim(d)
        inv = invariant_slice(space, d, exact.identity(n), pairs)
        parts = []
        for f in found:
            lower = invariant_slice(space, d - f.degree, exact.identity(space.dim(d - f.degree)), pairs)
            if lower.nrows():
                parts.append(lower * multiplication_matrix(space, d - f.degree, f))
        dec = exact.row_basis(exact.stack(parts, n)) if parts else flint.fmpq_mat(0, n)
        r, piv = exact.rref(dec) if dec.nrows() else (dec, ())
        new = exact.row_basis(exact.reduce_rows(inv, dec, piv)) if dec.nrows() else inv
        for row in exact.to_rows(new):
            found.append(from_coords(space, d, row))
    return found


@dataclass
class InvariantResult:
    dims: tuple[int, ...]
    hilbert: HilbertData
    verdict: FreenessVerdict
    group_order: int
    relative_degrees: tuple[int, ...]


def weyl_invariant_sections(datum: RootDatum, g: int, chi: Bits, c: CentralElement, upto: int,
                            method: str = "kernel", check_free: bool = True) -> InvariantResult:
    """Twisted (W_c)_χ-invariants of the χ-component, with numerators relative to P_t(BZ(c))."""
    group = twisted_stabilizer(datum, chi, c)
    gens = generating_set([w for w, _ in group], datum.rank)
    sign = {w.matrix: s for w, s in group}
    pairs = [(w, sign[w.matrix]) for w in gens]
    mod = direct_sections(datum, g, chi, upto)
    space = mod.space
    inv_slices = {}
    for d in range(upto + 1):
        if method == "kernel":
            inv_slices[d] = invariant_slice(space, d, mod.slice(d), pairs)
        else:
            inv_slices[d] = averaged_slice(space, d, mod.slice(d), group)
    dims = tuple(inv_slices[d].nrows() for d in range(upto + 1))
    rel = _relative_degrees(datum, c)
    h = hilbert_data(dims, datum.rank, denominator_degrees=[2 * k for k in rel])
    if check_free:
        verdict = _certify_free_invariants(datum, c, rel, space, inv_slices, h, upto)
    else:
        verdict = FreenessVerdict("inconclusive", (), None, "not checked")
    return InvariantResult(dims, h, verdict, len(group), rel)


def _certify_free_invariants(datum, c, rel, space, inv_slices, h: HilbertData, upto: int) -> FreenessVerdict:
    wc = datum.centralizer_weyl(c)
    fs = basic_invariants(datum, wc, rel)
    counts = []
    for d in range(upto + 1):
        n_d = inv_slices[d]
        if n_d.nrows() == 0:
            counts.append(0)
            continue
        parts = []
        for f in fs:
            lower = inv_slices.get(d - f.degree)
            if lower is not None and lower.nrows():
                f_lift = _lift_polynomial(f, space.ambient)
                parts.append(lower * multiplication_matrix(space, d - f.degree, f_lift))
        dec = exact.rank(exact.stack(parts, n_d.ncols())) if parts else 0
        counts.append(n_d.nrows() - dec)
    base = _series_dims(rel, upto)
    return certify_free_counts(h.dims, counts, lambda d: base[d] if 0 <= d <= upto else 0,
                               h.numerator, h.stable)


def _lift_polynomial(f: GradedElement, spec: AmbientSpec) -> GradedElement:
    space = ring_space(spec)
    terms = {(0, (0,) * spec.g, m): v for (_, _, m), v in f.terms.items()}
    return GradedElement(space, f.degree, terms)


# table rows


@dataclass
class Component:
    character: str
    orbit_size: int
    numerator: tuple[int, ...]
    stable: bool
    verdict: str
    generator_degrees: tuple[int, ...]
    witness: str = ""
    note: str = ""
    stabilizer_order: int | None = None


@dataclass
class TableRow:
    group: str
    g: int
    c: str
    truncation: int
    normalization: str
    components: list[Component] = field(default_factory=list)

    @property
    def total(self) -> tuple[int, ...]:
        out = [0] * (self.truncation + 1)
        for comp in self.components:
            for i, v in enumerate(comp.numerator):
                out[i] += comp.orbit_size * v if self.c == "regular" else v
        return tuple(out)

    def total_polynomial(self) -> list[int]:
        t = list(self.total)
        while t and t[-1] == 0:
            t.pop()
        return t

    @property
    def free(self) -> bool | None:
        kinds = {comp.verdict for comp in self.components}
        if "not-free" in kinds:
            return False
        if "inconclusive" in kinds:
            return None
        return True

    @property
    def stable(self) -> bool:
        return all(comp.stable for comp in self.components)

    def to_json(self) -> dict:
        return {
            "group": self.group,
            "g": self.g,
            "c": self.c,
            "truncation": self.truncation,
            "normalization": self.normalization,
            "total": self.total_polynomial(),
            "stable": self.stable,
            "free": self.free,
            "components": [
                {
                    "character": comp.character,
                    "orbit_size": comp.orbit_size,
                    "stabilizer_order": comp.stabilizer_order,
                    "numerator": _trim(comp.numerator),
                    "stable": comp.stable,
                    "verdict": comp.verdict,
                    "generator_degrees": list(comp.generator_degrees),
                    "witness": comp.witness,
                    "note": comp.note,
                }
                for comp in self.components
            ],
        }


def _trim(xs: Sequence[int]) -> list[int]:
    out = list(xs)
    while out and out[-1] == 0:
        out.pop()
    return out


def _regular_component(name: str, g: int, chi: Bits, upto: int, orbit_size: int) -> Component:
    datum = load(name)
    if g == 1:
        mod = direct_sections(datum, 1, chi, upto)
        h = mod.hilbert(upto)
        v = certify_free(mod, upto)
        note = ""
    else:
        res = sections_fg_chi(datum, g, chi, upto)
        h, v, note = res.hilbert, res.verdict, res.note
    return Component(bits_label(chi), orbit_size, h.numerator, h.stable, v.kind, v.generator_degrees,
                     v.detail, note)


def _weyl_component(name: str, g: int, chi: Bits, c_name: str, upto: int, orbit_size: int) -> Component:
    datum = load(name)
    c = datum.central_elements[c_name]
    res = weyl_invariant_sections(datum, g, chi, c, upto)
    v = res.verdict
    return Component(bits_label(chi), orbit_size, res.hilbert.numerator, res.hilbert.stable, v.kind,
                     v.generator_degrees, v.detail, "", res.group_order)


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get("GKM_WORKERS")
        workers = int(env) if env else 1
    return max(1, int(workers))


def character_orbits(datum: RootDatum, c: str) -> list[list[Bits]]:
    if c == "regular":
        return datum.orbits()
    cent = datum.central_elements[c]
    wc = datum.centralizer_weyl(cent)
    seen: set[Bits] = set()
    out = []
    for chi in datum.characters():
        if chi in seen:
            continue
        orb = sorted({datum.act_on_character(w, chi) for w in wc})
        seen.update(orb)
        out.append(orb)
    out.sort(key=lambda o: o[0])
    return out


def table_row(group: str, g: int = 1, c: str = "regular", upto: int | None = None,
              workers: int | None = None, characters: Sequence[Bits] | None = None) -> TableRow:
    """Numerators per character orbit (one representative each) and their total."""
    datum = load(group)
    if c != "regular" and c not in datum.central_elements:
        raise UnsupportedQuotient(f"{c!r} is not a supported central element of {datum.name}")
    if upto is None:
        upto = default_truncation(datum, g) if c == "regular" else default_weyl_truncation(datum, g)
    orbits = character_orbits(datum, c)
    if characters is not None:
        wanted = set(characters)
        orbits = [o for o in orbits if wanted & set(o)]
    jobs = [(o[0], len(o)) for o in orbits]
    nw = resolve_workers(workers)
    if c == "regular":
        args = [(datum.name, g, chi, upto, size) for chi, size in jobs]
        fn = _regular_component
        norm = f"(1-t^2)^{datum.rank}"
    else:
        args = [(datum.name, g, chi, c, upto, size) for chi, size in jobs]
        fn = _weyl_component
        degs = _relative_degrees(datum, datum.central_elements[c])
        norm = "*".join(f"(1-t^{2 * k})" for k in degs)
    if nw > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            comps = list(pool.map(_call, [(fn, a) for a in args]))
    else:
        comps = [fn(*a) for a in args]
    return TableRow(datum.name, g, c, upto, norm, comps)


def _call(job):
    fn, args = job
    return fn(*args)
