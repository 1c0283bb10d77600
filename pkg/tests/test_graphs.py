import pytest

from gkmsheaves.graphs import (
    FiniteAction,
    FiniteGroup,
    GraphMorphism,
    InvalidPartition,
    NotAHomomorphism,
    NotAMorphism,
    NotAnAction,
    canonical_weight,
    check_homomorphism,
    cyclic_group,
    elementary_abelian,
    graph_from_edges,
    hypergraph,
    induce_with_action,
    product,
    quotient,
    relabel,
)
from gkmsheaves.roots import UnsupportedQuotient


def square():
    return graph_from_edges(["a", "b", "c", "d"], 2,
                            [("a", "b", (1, 0)), ("c", "d", (1, 0)), ("a", "d", (0, 1)), ("b", "c", (0, 2))])


def swap_action():
    g = cyclic_group(2)
    ident = {v: v for v in "abcd"}
    flip = {"a": "c", "c": "a", "b": "d", "d": "b"}
    return FiniteAction(g, (ident, flip))


def test_weights_are_canonical():
    assert canonical_weight([-2, 4]) == (1, -2)
    h = square()
    assert h.weights == ((0, 1), (1, 0))
    assert h.block_of((0, -3), "b") == frozenset({"b", "c"})


def test_missing_vertices_become_singletons():
    h = hypergraph(["a", "b", "c"], 1, {(1,): [["a", "b"]]})
    assert h.blocks((1,)) == (frozenset("ab"), frozenset("c"))
    assert h.nondegenerate_blocks((1,)) == (frozenset("ab"),)
    assert h.blocks((2,)) == h.blocks((1,))


@pytest.mark.parametrize("parts", [
    {(1, 0): [["a", "b"], ["b", "c"]]},
    {(1, 0): [["a", "z"]]},
    {(0, 0): [["a"]]},
    {(1,): [["a"]]},
])
def test_invalid_partitions(parts):
    with pytest.raises(InvalidPartition):
        hypergraph(["a", "b", "c"], 2, parts)


def test_duplicate_weights_after_canonicalization():
    with pytest.raises(InvalidPartition):
        hypergraph(["a", "b"], 1, [((1,), [["a", "b"]]), ((-2,), [["a", "b"]])])


def test_product_blocks_are_products():
    h = graph_from_edges(["p", "q"], 1, [("p", "q", (1,))])
    pr = product(h, h)
    assert len(pr.vertices) == 4
    assert pr.blocks((1,)) == (frozenset({"p|p", "p|q", "q|p", "q|q"}),)
    assert not pr.is_graph()


def test_quotient_by_free_swap():
    q, m = quotient(square(), swap_action())
    assert q.vertices == ("a", "b")
    assert m.vertex_map["c"] == "a"
    assert q.blocks((1, 0)) == (frozenset("ab"),)


def test_action_must_respect_partitions():
    g = cyclic_group(2)
    bad = FiniteAction(g, ({v: v for v in "abcd"}, {"a": "b", "b": "a", "c": "c", "d": "d"}))
    with pytest.raises(NotAnAction):
        quotient(square(), bad)


def test_action_must_compose():
    g = cyclic_group(3)
    p = {"a": "b", "b": "a", "c": "c", "d": "d"}
    with pytest.raises(NotAnAction):
        quotient(square(), FiniteAction(g, ({v: v for v in "abcd"}, p, p)))


def test_twisted_quotient_rejected():
    g = cyclic_group(2)
    ident = {v: v for v in "abcd"}
    twist = ((1, 0), (0, 1)), ((0, 1), (1, 0))
    h = graph_from_edges(["a", "b", "c", "d"], 2, [("a", "b", (1, 0)), ("a", "b", (0, 1))])
    with pytest.raises(UnsupportedQuotient):
        quotient(h, FiniteAction(g, (ident, ident), twist))


def test_group_tables():
    v = elementary_abelian(2)
    assert v.order == 4 and v.is_abelian()
    assert v.elements == ("00", "01", "10", "11")
    assert all(v.mul(a, a) == v.identity for a in range(4))
    with pytest.raises(ValueError):
        FiniteGroup(("e", "x"), ((0, 1), (0, 1)))


def test_homomorphism_check():
    check_homomorphism(cyclic_group(2), cyclic_group(4), [0, 2])
    with pytest.raises(NotAHomomorphism):
        check_homomorphism(cyclic_group(2), cyclic_group(4), [0, 1])


def test_induction_from_trivial_subgroup_gives_disjoint_copies():
    h = graph_from_edges(["p", "q"], 1, [("p", "q", (1,))])
    trivial = FiniteGroup(("e",), ((0,),))
    act = FiniteAction(trivial, ({"p": "p", "q": "q"},))
    big = cyclic_group(3)
    ind, residual = induce_with_action(h, act, [0], big)
    assert len(ind.vertices) == 6
    assert len(ind.nondegenerate_blocks((1,))) == 3
    assert [len(o) for o in residual.orbits(ind.vertices)] == [3, 3]


def test_morphism_check_detects_torn_blocks():
    h = square()
    target = hypergraph(["x", "y"], 2, {})
    m = GraphMorphism(h, target, {"a": "x", "b": "y", "c": "x", "d": "y"})
    with pytest.raises(NotAMorphism):
        m.check()


def test_relabel_preserves_structure():
    h = square()
    r = relabel(h, {v: v.upper() for v in h.vertices})
    assert r.vertices == ("A", "B", "C", "D")
    assert r.summary() == h.summary()
