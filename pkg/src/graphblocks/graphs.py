"""Graph blocks: specifications, descriptors, and local-complementation orbits.

Vertices are labeled 1..n and the vertex-to-chain-site assignment is the
identity, so the descriptors below depend on the labeling, not just the
isomorphism class. ``gamma`` (mean cut entropy) is invariant under local
complementation; the ordered connectivity ``wp`` generally is not.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .f2 import rank_binary_matrix
from .stabilizer import StabilizerTableau

Edge = tuple[int, int]


@dataclass(frozen=True)
class GraphSpec:
    """Labeled simple graph on vertices 1..n_vertices."""

    n_vertices: int
    edges: frozenset[Edge]
    name: str = ""

    def __post_init__(self):
        if self.n_vertices < 2:
            raise ValueError(f"blocks need at least 2 vertices, got {self.n_vertices}")
        norm = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (1 <= u <= self.n_vertices and 1 <= v <= self.n_vertices):
                raise ValueError(f"edge ({u},{v}) outside 1..{self.n_vertices}")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, n_vertices: int, edges, name: str = "") -> "GraphSpec":
        return cls(n_vertices, frozenset((u, v) for u, v in edges), name)

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def neighbors(self, v: int) -> set[int]:
        out = set()
        for a, b in self.edges:
            if a == v:
                out.add(b)
            elif b == v:
                out.add(a)
        return out

    def is_connected(self) -> bool:
        if self.n_vertices == 1:
            return True
        adj = {v: self.neighbors(v) for v in range(1, self.n_vertices + 1)}
        seen = {1}
        stack = [1]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n_vertices

    def relabel(self, perm: dict[int, int], name: str = "") -> "GraphSpec":
        return GraphSpec.from_edges(
            self.n_vertices, ((perm[u], perm[v]) for u, v in self.edges), name)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_vertices, self.n_vertices), dtype=np.uint8)
        for u, v in self.edges:
            a[u - 1, v - 1] = a[v - 1, u - 1] = 1
        return a

    def edge_key(self) -> tuple[Edge, ...]:
        return tuple(self.sorted_edges())


# -- named block constructors used throughout the tests -----------------

def star_graph(n: int, center: int = 1) -> GraphSpec:
    return GraphSpec.from_edges(
        n, ((center, v) for v in range(1, n + 1) if v != center), name=f"star-{n}")


def path_graph(n: int) -> GraphSpec:
    return GraphSpec.from_edges(n, ((k, k + 1) for k in range(1, n)), name=f"path-{n}")


def ring_graph(n: int) -> GraphSpec:
    edges = [(k, k + 1) for k in range(1, n)] + [(1, n)]
    return GraphSpec.from_edges(n, edges, name=f"ring-{n}")


def complete_graph(n: int) -> GraphSpec:
    return GraphSpec.from_edges(n, combinations(range(1, n + 1), 2), name=f"complete-{n}")


# -- preparation circuit -------------------------------------------------

def preparation_circuit(g: GraphSpec) -> list[tuple]:
    """Canonical gate list preparing |g> from |0..0>: H on every vertex,
    then one CZ per edge in sorted order (the CZs all commute)."""
    gates: list[tuple] = [("H", v) for v in range(1, g.n_vertices + 1)]
    gates.extend(("CZ", u, v) for u, v in g.sorted_edges())
    return gates


def prepare_state(g: GraphSpec) -> StabilizerTableau:
    state = StabilizerTableau.zero_state(g.n_vertices)
    for gate in preparation_circuit(g):
        if gate[0] == "H":
            state.apply_h(gate[1])
        else:
            state.apply_cz(gate[1], gate[2])
    return state


# -- descriptors ----------------------------------------------------------

def cut_rank(g: GraphSpec, x: int) -> int:
    """F2 rank of the adjacency block between vertices 1..x and x+1..n.

    Independent oracle for the cut entropy of the graph state.
    """
    a = g.adjacency()
    return rank_binary_matrix(a[:x, x:])


def height_function(g: GraphSpec, check_disconnected: bool = True) -> list[int]:
    """Cut entropies h(x), x = 1..n-1, of the block's graph state in bits.

    Prepared on a tableau and measured with the stabilizer entropy; must
    equal ``cut_rank`` at every cut (asserted by the test suite).
    """
    if check_disconnected and not g.is_connected():
        import warnings
        warnings.warn(f"height profile of disconnected graph {g.name or g.edge_key()}")
    state = prepare_state(g)
    return [state.entropy_bits(1, x) for x in range(1, g.n_vertices)]


def average_height(g: GraphSpec) -> Fraction:
    """Mean cut entropy gamma, exact rational."""
    h = height_function(g)
    return Fraction(sum(h), g.n_vertices - 1)


def connectivity_wp(g: GraphSpec) -> int:
    """Ordered connectivity: edges crossing each internal cut, summed.

    Cross-checked against the closed form sum of edge spans (v - u).
    """
    per_cut = [sum(1 for u, v in g.edges if u <= a < v)
               for a in range(1, g.n_vertices)]
    total = sum(per_cut)
    spans = sum(v - u for u, v in g.edges)
    if total != spans:
        raise AssertionError(f"cut-count {total} != edge-span form {spans}")
    return total


def cut_edge_counts(g: GraphSpec) -> list[int]:
    return [sum(1 for u, v in g.edges if u <= a < v) for a in range(1, g.n_vertices)]


def is_ame_candidate(g: GraphSpec) -> bool:
    """True iff every contiguous cut entropy is maximal, h(x) = min(x, n-x)."""
    n = g.n_vertices
    return all(h == min(x, n - x)
               for x, h in enumerate(height_function(g), start=1))


def is_ame_exhaustive(g: GraphSpec) -> bool:
    """Full check over all vertex subsets of size <= n//2 (n <= 7 intended).

    A graph state is absolutely maximally entangled iff the adjacency
    block between every such subset and its complement has full rank.
    """
    n = g.n_vertices
    a = g.adjacency()
    idx = np.arange(n)
    for k in range(1, n // 2 + 1):
        for sub in combinations(range(n), k):
            rest = np.setdiff1d(idx, sub)
            if rank_binary_matrix(a[np.array(sub)][:, rest]) != k:
                return False
    return True


@dataclass(frozen=True)
class BlockDescriptors:
    height: tuple[int, ...]
    gamma: Fraction
    wp: int
    is_ame_candidate: bool

    @classmethod
    def of(cls, g: GraphSpec) -> "BlockDescriptors":
        h = tuple(height_function(g))
        n = g.n_vertices
        return cls(
            height=h,
            gamma=Fraction(sum(h), n - 1),
            wp=connectivity_wp(g),
            is_ame_candidate=all(v == min(x, n - x) for x, v in enumerate(h, start=1)),
        )


# -- local complementation and orbits -------------------------------------

def local_complement(g: GraphSpec, v: int) -> GraphSpec:
    """Toggle every edge between pairs of neighbors of v."""
    if not 1 <= v <= g.n_vertices:
        raise ValueError(f"vertex {v} out of range 1..{g.n_vertices}")
    nbrs = sorted(g.neighbors(v))
    edges = set(g.edges)
    for a, b in combinations(nbrs, 2):
        e = (a, b)
        if e in edges:
            edges.remove(e)
        else:
            edges.add(e)
    return GraphSpec.from_edges(g.n_vertices, edges, name=g.name)


class OrbitOverflowError(RuntimeError):
    """Labeled LC orbit exceeded the caller's size bound."""


def lc_orbit(g: GraphSpec, max_size: int = 100_000) -> set[tuple[Edge, ...]]:
    """Labeled LC orbit of g: closure of local complementation over all
    vertices, deduplicated by exact edge set. Returns edge-set keys."""
    if g.n_vertices > 12:
        raise ValueError("orbit enumeration supported for n <= 12")
    seen = {g.edge_key()}
    queue = deque([g])
    while queue:
        cur = queue.popleft()
        for v in range(1, cur.n_vertices + 1):
            nxt = local_complement(cur, v)
            key = nxt.edge_key()
            if key not in seen:
                if len(seen) >= max_size:
                    raise OrbitOverflowError(
                        f"orbit exceeds max_size={max_size}; raise the bound")
                seen.add(key)
                queue.append(nxt)
    return seen


def lc_equivalent(g1: GraphSpec, g2: GraphSpec, labeled: bool = False,
                  max_size: int = 1_000_000) -> bool:
    """LC equivalence of two blocks on the same vertex count.

    ``labeled=True`` asks for exact orbit membership of g2's edge set;
    the default compares up to vertex permutation (the classification
    notion used for the catalog).
    """
    if g1.n_vertices != g2.n_vertices:
        raise ValueError("blocks must have the same number of vertices")
    orbit = lc_orbit(g1, max_size=max_size)
    if labeled:
        return g2.edge_key() in orbit
    from .catalog import canonical_mask, mask_of_edges  # local import, numpy tables
    n = g1.n_vertices
    targets = {canonical_mask(mask_of_edges(n, edges), n) for edges in orbit}
    return canonical_mask(mask_of_edges(n, g2.edge_key()), n) in targets
