from collections import Counter

import flint
import pytest

from gkmsheaves import exact
from gkmsheaves.algebra import AmbientSpec, linear_form, multiply, one, product_of, ring_space, substitution_matrix
from gkmsheaves.modules import NotDivisible, certify_free, divide, duality_pairing_check, proj_top_element
from gkmsheaves.pipeline import (
    PRODUCT_NOTE,
    averaged_slice,
    bits_label,
    default_truncation,
    direct_sections,
    generating_set,
    intersect_all,
    invariant_slice,
    parse_bits,
    rank_one_image,
    sections_f1_chi,
    sections_fg_chi,
    table_row,
    twisted_stabilizer,
    weyl_substitution,
)
from gkmsheaves.roots import UnsupportedQuotient, load

SMALL = ("A2", "B2", "G2")
TOP_DEGREE = {"A2": 8, "B2": 10, "G2": 14}


def characters(name):
    return [o[0] for o in load(name).orbits()]


def cases(names):
    return [(n, chi) for n in names for chi in characters(n)]


def positive_root_product(datum):
    spec = AmbientSpec(datum.rank, 0, datum.labels)
    return product_of([linear_form(spec, a) for a in datum.positive_roots], spec)


def numerator_poly(coeffs) -> flint.fmpz_poly:
    return flint.fmpz_poly(list(coeffs))


def test_bits_round_trip():
    assert parse_bits("011", 3) == (0, 1, 1)
    assert bits_label((1, 0)) == "10"
    with pytest.raises(ValueError):
        parse_bits("012", 3)
    with pytest.raises(ValueError):
        parse_bits("01", 3)


@pytest.mark.parametrize("name,chi", cases(SMALL + ("SO3", "U2", "A1")))
def test_kernel_and_intersection_routes_agree(name, chi):
    d = load(name)
    upto = default_truncation(d, 1)
    a = sections_f1_chi(d, chi, upto, "kernel")
    b = sections_f1_chi(d, chi, upto, "intersect")
    for k in range(upto + 1):
        assert exact.to_rows(a.slice(k)) == exact.to_rows(b.slice(k))


@pytest.mark.parametrize("name,chi", cases(("A2", "SO3", "U2")))
def test_routes_agree_for_two_slots(name, chi):
    d = load(name)
    upto = 12
    a = direct_sections(d, 2, chi, upto)
    b = intersect_all([rank_one_image(d, i, chi, 2) for i in range(len(d.positive_roots))], upto)
    assert a.dims(upto) == b.dims(upto)
    assert b.contains_module(a, upto)


@pytest.mark.parametrize("name,chi", cases(("A1", "SO3", "U2")))
def test_direct_two_slot_sections_equal_product_module(name, chi):
    d = load(name)
    upto = default_truncation(d, 2)
    direct = direct_sections(d, 2, chi, upto)
    prod = sections_fg_chi(d, 2, chi, upto)
    assert prod.note == ""
    assert direct.dims(upto) == prod.module.dims(upto)


def test_product_module_carries_note_when_base_is_not_free():
    d = load("A3")
    chi = (0, 1, 0)
    assert certify_free(direct_sections(d, 1, chi, 20), 20).kind == "not-free"
    res = sections_fg_chi(d, 2, chi, upto=4, base_upto=20)
    assert res.note == PRODUCT_NOTE


@pytest.mark.parametrize("name,chi", cases(SMALL))
def test_free_numerator_counts_generator_degrees(name, chi):
    d = load(name)
    upto = default_truncation(d, 1)
    m = direct_sections(d, 1, chi, upto)
    verdict = certify_free(m, upto)
    assert verdict.is_free
    counts = Counter(verdict.generator_degrees)
    numerator = m.hilbert(upto).polynomial()
    assert numerator == [counts.get(k, 0) for k in range(len(numerator))]
    assert len(verdict.generator_degrees) == 2 ** d.rank


@pytest.mark.parametrize("name,chi", cases(SMALL))
def test_two_slot_numerator_is_square_of_one_slot(name, chi):
    d = load(name)
    one_slot = direct_sections(d, 1, chi, d.dim + 4).hilbert(d.dim + 4)
    two_slot = direct_sections(d, 2, chi, 2 * d.dim + 4).hilbert(2 * d.dim + 4)
    assert one_slot.stable and two_slot.stable
    assert numerator_poly(two_slot.polynomial()) == numerator_poly(one_slot.polynomial()) ** 2


@pytest.mark.parametrize("name,chi", cases(SMALL + ("A3",)))
def test_top_projection_of_products_lands_in_positive_root_ideal(name, chi):
    d = load(name)
    upto = 20 if name == "A3" else default_truncation(d, 1)
    m = direct_sections(d, 1, chi, upto)
    delta = positive_root_product(d)
    gens = m.minimal_generators(upto)
    for i, x in enumerate(gens):
        for y in gens[i:]:
            divide(proj_top_element(multiply(x, y)), delta)


def test_top_projection_check_can_fail():
    d = load("A2")
    spec = AmbientSpec(d.rank, 0, d.labels)
    with pytest.raises(NotDivisible):
        divide(linear_form(spec, d.positive_roots[0]), positive_root_product(d))


@pytest.mark.parametrize("name,chi", cases(SMALL))
def test_duality_pairing_is_unipotent(name, chi):
    d = load(name)
    upto = default_truncation(d, 1)
    report = duality_pairing_check(direct_sections(d, 1, chi, upto), positive_root_product(d), upto)
    assert report.maximal
    degrees = [x.degree for x in report.generators]
    assert all(a + b == TOP_DEGREE[name] for a, b in zip(degrees, reversed(degrees)))


@pytest.mark.parametrize("name,chi", cases(("A2", "B2")))
def test_two_slot_pairing_top_degree(name, chi):
    d = load(name)
    upto = default_truncation(d, 2)
    m = direct_sections(d, 2, chi, upto)
    spec = AmbientSpec(d.rank, 0, d.labels)
    orientation = product_of([positive_root_product(d)] * 2, spec)
    report = duality_pairing_check(m, orientation, upto)
    assert report.maximal
    degrees = [x.degree for x in report.generators]
    assert all(a + b == 2 * TOP_DEGREE[name] for a, b in zip(degrees, reversed(degrees)))


@pytest.mark.parametrize("name", SMALL + ("A3",))
def test_sections_are_weyl_equivariant(name):
    d = load(name)
    upto = 12
    space = ring_space(AmbientSpec(d.rank, 1, d.labels))
    mods = {chi: direct_sections(d, 1, chi, upto) for chi in d.characters()}
    gens = generating_set(list(d.weyl_group), d.rank)
    for w in gens:
        for chi, m in mods.items():
            target = mods[d.act_on_character(w, chi)]
            for k in range(upto + 1):
                moved = m.slice(k) * substitution_matrix(space, k, weyl_substitution(w)) \
                    if m.slice(k).nrows() else m.slice(k)
                tk = target.slice(k)
                assert exact.rank(exact.stack([tk, moved], tk.ncols())) == tk.nrows()
                assert moved.nrows() == tk.nrows()


@pytest.mark.parametrize("name,c", [("A2", "identity"), ("B2", "identity"), ("A2", "z1"), ("SO3", "rot"),
                                    ("U2", "minus")])
def test_weyl_invariants_kernel_matches_averaging(name, c):
    d = load(name)
    cent = d.central_elements[c]
    upto = 14
    for chi in d.characters():
        group = twisted_stabilizer(d, chi, cent)
        pairs_gen = generating_set([w for w, _ in group], d.rank)
        sign = {w.matrix: s for w, s in group}
        pairs = [(w, sign[w.matrix]) for w in pairs_gen]
        m = direct_sections(d, 1, chi, upto)
        for k in range(upto + 1):
            a = invariant_slice(m.space, k, m.slice(k), pairs)
            b = averaged_slice(m.space, k, m.slice(k), group)
            assert exact.to_rows(a) == exact.to_rows(b)


def test_regular_rows_of_small_types():
    assert table_row("A2").total_polynomial() == [1, 0, 0, 4, 6, 4, 0, 0, 1]
    assert table_row("SO3", 3).total_polynomial() == [2, 0, 0, 6, 0, 0, 6, 0, 0, 2]


def test_rank_one_weyl_rows():
    t = flint.fmpz_poly([0, 1])
    for g in (1, 2, 3):
        assert numerator_poly(table_row("SO3", g, "rot").total_polynomial()) == (1 + t ** 3) ** g * (1 + t ** 2)
        u = (1 + t) ** g * (2 * (1 + t ** 3) ** g + (t + t ** 2) ** g * (1 + t ** 2))
        assert numerator_poly(table_row("U2", g, "minus").total_polynomial()) == u


def test_restricting_characters():
    row = table_row("A2", characters=[(1, 0)])
    assert [c.character for c in row.components] == ["01"]
    assert row.components[0].orbit_size == 3


def test_unknown_central_element():
    with pytest.raises(UnsupportedQuotient):
        table_row("A2", c="z7")


def test_unit_is_a_section_of_trivial_character():
    d = load("B2")
    m = direct_sections(d, 1, (0, 0), 6)
    assert m.contains(one(m.space.ambient))
    assert not direct_sections(d, 1, (1, 1), 6).contains(one(m.space.ambient))
