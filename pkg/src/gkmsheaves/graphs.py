"""GKM hypergraphs: a vertex set with, for each projective weight, a partition.

Weights are stored as primitive integer vectors with positive leading entry,
so ``w`` and ``-w`` (or ``2w``) name the same projective weight.  Weights that
are not listed carry the discrete partition.  Vertex ids are strings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .roots import UnsupportedQuotient, primitive

Weight = tuple[int, ...]
Block = frozenset


class InvalidPartition(ValueError):
    pass


class NotAnAction(ValueError):
    pass


class NotAHomomorphism(ValueError):
    pass


class NotAMorphism(ValueError):
    pass


def canonical_weight(v: Sequence) -> Weight:
    try:
        return primitive(v)
    except ValueError as exc:
        raise InvalidPartition(f"zero weight {list(v)}") from exc


def _sorted_blocks(blocks: Iterable[Iterable[str]], order: Mapping[str, int]) -> tuple[Block, ...]:
    out = [frozenset(b) for b in blocks]
    out.sort(key=lambda b: sorted(order[v] for v in b))
    return tuple(out)


@dataclass(frozen=True)
class GkmHypergraph:
    vertices: tuple[str, ...]
    rank: int
    partitions: Mapping[Weight, tuple[Block, ...]] = field(hash=False, compare=False)

    def __eq__(self, other):
        return (isinstance(other, GkmHypergraph) and self.vertices == other.vertices
                and self.rank == other.rank and dict(self.partitions) == dict(other.partitions))

    def __hash__(self):
        return hash((self.vertices, self.rank, tuple(sorted(self.partitions))))

    @property
    def weights(self) -> tuple[Weight, ...]:
        return tuple(sorted(self.partitions))

    def blocks(self, w: Sequence) -> tuple[Block, ...]:
        w = canonical_weight(w)
        got = self.partitions.get(w)
        if got is None:
            return tuple(frozenset([v]) for v in self.vertices)
        return got

    def nondegenerate_blocks(self, w: Sequence) -> tuple[Block, ...]:
        return tuple(b for b in self.blocks(w) if len(b) > 1)

    def block_of(self, w: Sequence, v: str) -> Block:
        for b in self.blocks(w):
            if v in b:
                return b
        raise KeyError(v)

    def is_graph(self) -> bool:
        return all(len(b) <= 2 for bl in self.partitions.values() for b in bl)

    def edges(self) -> list[tuple[Weight, Block]]:
        return [(w, b) for w in self.weights for b in self.partitions[w] if len(b) > 1]

    def summary(self) -> dict:
        return {
            "vertices": len(self.vertices),
            "weights": {",".join(map(str, w)): sorted(len(b) for b in self.partitions[w]) for w in self.weights},
        }


def hypergraph(vertices: Sequence[str], rank: int,
               partitions: Mapping[Sequence, Iterable[Iterable[str]]] | Iterable) -> GkmHypergraph:
    """Validate and canonicalize.  Vertices missing from a partition become singletons."""
    verts = tuple(vertices)
    if len(set(verts)) != len(verts):
        raise InvalidPartition("duplicate vertex ids")
    order = {v: i for i, v in enumerate(verts)}
    items = partitions.items() if isinstance(partitions, Mapping) else partitions
    out: dict[Weight, tuple[Block, ...]] = {}
    for w, blocks in items:
        if len(w) != rank:
            raise InvalidPartition(f"weight {list(w)} does not have rank {rank}")
        cw = canonical_weight(w)
        seen: set[str] = set()
        blist = []
        for b in blocks:
            b = list(b)
            for v in b:
                if v not in order:
                    raise InvalidPartition(f"unknown vertex {v!r}")
                if v in seen:
                    raise InvalidPartition(f"vertex {v!r} appears twice for weight {list(cw)}")
                seen.add(v)
            if b:
                blist.append(b)
        blist.extend([v] for v in verts if v not in seen)
        if cw in out:
            raise InvalidPartition(f"weight {list(cw)} listed twice")
        out[cw] = _sorted_blocks(blist, order)
    return GkmHypergraph(verts, rank, dict(sorted(out.items())))


def graph_from_edges(vertices: Sequence[str], rank: int,
                     edges: Iterable[tuple[str, str, Sequence]]) -> GkmHypergraph:
    """Build a graph (blocks of size ≤ 2) from weighted edges."""
    parts: dict[Weight, list[list[str]]] = {}
    for a, b, w in edges:
        parts.setdefault(canonical_weight(w), []).append([a, b])
    return hypergraph(vertices, rank, parts)


def pair_id(a: str, b: str) -> str:
    return f"{a}|{b}"


def product(h1: GkmHypergraph, h2: GkmHypergraph) -> GkmHypergraph:
    if h1.rank != h2.rank:
        raise InvalidPartition("factors have different ranks")
    verts = [pair_id(a, b) for a in h1.vertices for b in h2.vertices]
    parts = {}
    for w in sorted(set(h1.partitions) | set(h2.partitions)):
        parts[w] = [[pair_id(a, b) for a in b1 for b in b2] for b1 in h1.blocks(w) for b2 in h2.blocks(w)]
    return hypergraph(verts, h1.rank, parts)


# finite group actions


@dataclass(frozen=True)
class FiniteGroup:
    elements: tuple[str, ...]
    table: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.elements)
        if len(self.table) != n or any(len(r) != n for r in self.table):
            raise NotAnAction("multiplication table has the wrong shape")
        ident = [i for i in range(n) if all(self.table[i][j] == j and self.table[j][i] == j for j in range(n))]
        if len(ident) != 1:
            raise NotAnAction("no identity element")
        for a in range(n):
            if all(self.table[a][b] != ident[0] for b in range(n)):
                raise NotAnAction(f"{self.elements[a]} has no inverse")
            for b in range(n):
                for c in range(n):
                    if self.table[self.table[a][b]][c] != self.table[a][self.table[b][c]]:
                        raise NotAnAction("multiplication is not associative")

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def identity(self) -> int:
        n = len(self.elements)
        return next(i for i in range(n) if all(self.table[i][j] == j for j in range(n)))

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def inverse(self, a: int) -> int:
        return next(b for b in range(self.order) if self.table[a][b] == self.identity)

    def is_abelian(self) -> bool:
        n = self.order
        return all(self.table[a][b] == self.table[b][a] for a in range(n) for b in range(n))


def cyclic_group(n: int, prefix: str = "g") -> FiniteGroup:
    return FiniteGroup(tuple(f"{prefix}{i}" for i in range(n)),
                       tuple(tuple((i + j) % n for j in range(n)) for i in range(n)))


def elementary_abelian(rank: int) -> FiniteGroup:
    """(Z/2)^rank with elements named by bit strings."""
    n = 1 << rank
    names = tuple(format(i, f"0{rank}b") if rank else "e" for i in range(n))
    return FiniteGroup(names, tuple(tuple(i ^ j for j in range(n)) for i in range(n)))


@dataclass(frozen=True)
class FiniteAction:
    group: FiniteGroup
    perms: tuple[Mapping[str, str], ...] = field(hash=False)
    weight_maps: tuple[tuple[tuple[Fraction, ...], ...], ...] | None = field(default=None, hash=False)

    def apply(self, a: int, v: str) -> str:
        return self.perms[a][v]

    def is_twisted(self) -> bool:
        if self.weight_maps is None:
            return False
        for m in self.weight_maps:
            n = len(m)
            if any(m[i][j] != (1 if i == j else 0) for i in range(n) for j in range(n)):
                return True
        return False

    def map_weight(self, a: int, w: Weight) -> Weight:
        if self.weight_maps is None:
            return w
        m = self.weight_maps[a]
        return canonical_weight([sum(Fraction(m[i][j]) * w[j] for j in range(len(w))) for i in range(len(w))])

    def orbits(self, vertices: Sequence[str]) -> list[list[str]]:
        seen: set[str] = set()
        out = []
        for v in vertices:
            if v in seen:
                continue
            orb = sorted({self.apply(a, v) for a in range(self.group.order)})
            seen.update(orb)
            out.append(orb)
        return out


def validate_action(h: GkmHypergraph, act: FiniteAction) -> None:
    g = act.group
    if len(act.perms) != g.order:
        raise NotAnAction("one permutation per group element")
    for p in act.perms:
        if set(p) != set(h.vertices) or set(p.values()) != set(h.vertices):
            raise NotAnAction("permutations must be bijections of the vertex set")
    for a in range(g.order):
        for b in range(g.order):
            ab = g.mul(a, b)
            for v in h.vertices:
                if act.apply(ab, v) != act.apply(a, act.apply(b, v)):
                    raise NotAnAction("permutations do not compose like the group")
    for w in h.weights:
        for a in range(g.order):
            tw = act.map_weight(a, w)
            targets = set(h.blocks(tw))
            for b in h.blocks(w):
                if frozenset(act.apply(a, v) for v in b) not in targets:
                    raise NotAnAction(f"element {g.elements[a]} does not respect the partition of {list(w)}")


@dataclass(frozen=True)
class GraphMorphism:
    source: GkmHypergraph
    target: GkmHypergraph
    vertex_map: Mapping[str, str] = field(hash=False)

    def check(self) -> None:
        """Preimages of basic open sets are open: every block maps into one target block."""
        for v in self.source.vertices:
            if self.vertex_map.get(v) not in set(self.target.vertices):
                raise NotAMorphism(f"vertex {v!r} has no image")
        for w in self.source.weights:
            for b in self.source.blocks(w):
                imgs = {self.vertex_map[v] for v in b}
                if not any(imgs <= set(tb) for tb in self.target.blocks(w)):
                    raise NotAMorphism(f"block {sorted(b)} of {list(w)} is torn apart")

    def block_image(self, w: Sequence, b: Block) -> Block:
        imgs = {self.vertex_map[v] for v in b}
        for tb in self.target.blocks(w):
            if imgs <= set(tb):
                return tb
        raise NotAMorphism("block has no image")


def quotient(h: GkmHypergraph, act: FiniteAction) -> tuple[GkmHypergraph, GraphMorphism]:
    """Γ/G for an untwisted action; vertex ids are the least ids of the orbits."""
    validate_action(h, act)
    if act.is_twisted():
        raise UnsupportedQuotient("twisted quotients are not supported")
    orbits = act.orbits(h.vertices)
    rep = {}
    for orb in orbits:
        name = min(orb, key=lambda v: h.vertices.index(v))
        for v in orb:
            rep[v] = name
    verts = [min(orb, key=lambda v: h.vertices.index(v)) for orb in orbits]
    verts.sort(key=lambda v: h.vertices.index(v))
    parts = {}
    for w in h.weights:
        blocks = {frozenset(rep[v] for v in b) for b in h.blocks(w)}
        parts[w] = [sorted(b) for b in blocks]
        cover: dict[str, frozenset] = {}
        for b in blocks:
            for v in b:
                if v in cover and cover[v] != b:
                    raise InvalidPartition("quotient blocks overlap")
                cover[v] = b
    q = hypergraph(verts, h.rank, parts)
    m = GraphMorphism(h, q, rep)
    m.check()
    return q, m


def check_homomorphism(h: FiniteGroup, g: FiniteGroup, phi: Sequence[int]) -> None:
    if len(phi) != h.order:
        raise NotAHomomorphism("one image per element")
    for a in range(h.order):
        for b in range(h.order):
            if phi[h.mul(a, b)] != g.mul(phi[a], phi[b]):
                raise NotAHomomorphism(f"φ({h.elements[a]}·{h.elements[b]}) ≠ φ({h.elements[a]})φ({h.elements[b]})")


def induce_with_action(h: GkmHypergraph, act: FiniteAction, phi: Sequence[int], big: FiniteGroup
                       ) -> tuple[GkmHypergraph, FiniteAction]:
    """G ×_H Γ with its residual G-action.  H acts by h·(g, x) = (g φ(h)⁻¹, h·x)."""
    check_homomorphism(act.group, big, phi)
    validate_action(h, act)
    if act.is_twisted():
        raise UnsupportedQuotient("twisted induction is not supported")
    verts = [pair_id(ge, v) for ge in big.elements for v in h.vertices]
    parts = {w: [[pair_id(ge, v) for v in b] for ge in big.elements for b in h.blocks(w)] for w in h.weights}
    prod = hypergraph(verts, h.rank, parts)
    perms = []
    for a in range(act.group.order):
        inv = big.inverse(phi[a])
        p = {}
        for gi, ge in enumerate(big.elements):
            for v in h.vertices:
                p[pair_id(ge, v)] = pair_id(big.elements[big.mul(gi, inv)], act.apply(a, v))
        perms.append(p)
    q, m = quotient(prod, FiniteAction(act.group, tuple(perms)))
    rperms = []
    for a in range(big.order):
        p = {}
        for gi, ge in enumerate(big.elements):
            for v in h.vertices:
                src = m.vertex_map[pair_id(ge, v)]
                p[src] = m.vertex_map[pair_id(big.elements[big.mul(a, gi)], v)]
        rperms.append(p)
    return q, FiniteAction(big, tuple(rperms))


def induce(h: GkmHypergraph, act: FiniteAction, phi: Sequence[int], big: FiniteGroup) -> GkmHypergraph:
    return induce_with_action(h, act, phi, big)[0]


def relabel(h: GkmHypergraph, names: Mapping[str, str]) -> GkmHypergraph:
    verts = [names[v] for v in h.vertices]
    parts = {w: [[names[v] for v in b] for b in h.blocks(w)] for w in h.weights}
    return hypergraph(verts, h.rank, parts)
