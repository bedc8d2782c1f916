"""Connected stable decorated graphs indexing the genus expansion.

A graph carries a genus g_v >= 0 and a canonical index i_v on every vertex,
plus an unordered edge multiset that may include loops and parallel edges.
Stability is the single rule 2 g_v - 2 + valence(v) > 0 (loops count twice),
which forces genus-0 vertices to have valence >= 3 and genus-1 vertices
valence >= 1.  The total genus is sum(g_v) + b1.

Summing 2 g_v - 2 + valence(v) > 0 over vertices gives 2g - 2, so a genus-g
graph has at most 2g - 2 vertices and the enumeration space is tiny; graphs
are deduplicated by a minimum-over-permutations canonical key and |Aut| is
counted directly:

    |Aut| = (decoration- and adjacency-preserving vertex permutations)
            * prod_v 2^{loops_v} loops_v!  * prod_{v<w} m_vw!

matching the 1/2, 1/m! weights of the Wick expansion the graphs index.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from math import factorial
from typing import Iterator, List, Tuple

Vertex = Tuple[int, int]  # (genus, canonical index)


@dataclass(frozen=True)
class StableGraph:
    genus: int
    vertices: Tuple[Vertex, ...]
    adjacency: Tuple[Tuple[int, ...], ...]  # symmetric multiplicity matrix
    aut: int
    b1: int

    def num_vertices(self) -> int:
        return len(self.vertices)

    def num_edges(self) -> int:
        n = len(self.vertices)
        return sum(self.adjacency[v][w] for v in range(n) for w in range(v, n))

    def valence(self, v: int) -> int:
        row = self.adjacency[v]
        return sum(row) + row[v]

    def edge_list(self) -> List[Tuple[int, int, int]]:
        """(v, w, multiplicity) with v <= w and multiplicity >= 1."""
        n = len(self.vertices)
        return [
            (v, w, self.adjacency[v][w])
            for v in range(n)
            for w in range(v, n)
            if self.adjacency[v][w]
        ]

    def psi_cap(self, v: int) -> int:
        """Largest total psi-power the vertex correlator can absorb."""
        g_v = self.vertices[v][0]
        return 3 * g_v - 3 + self.valence(v)

    def describe(self) -> str:
        verts = " ".join(f"g{g}@{i}" for g, i in self.vertices)
        edges = " ".join(
            (f"{v}-{w}" if v != w else f"loop{v}") + (f"x{m}" if m > 1 else "")
            for v, w, m in self.edge_list()
        )
        return f"[{verts}] {edges or 'no edges'} |Aut|={self.aut}"


def _compositions(total: int, slots: int) -> Iterator[Tuple[int, ...]]:
    if slots == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, slots - 1):
            yield (first,) + rest


def _connected(adj, n: int) -> bool:
    if n == 1:
        return True
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for v in range(n):
        for w in range(v + 1, n):
            if adj[v][w]:
                parent[find(v)] = find(w)
    root = find(0)
    return all(find(v) == root for v in range(n))


def _canonical_key(verts, adj, n: int):
    best = None
    for perm in permutations(range(n)):
        v_key = tuple(verts[p] for p in perm)
        a_key = tuple(adj[perm[a]][perm[b]] for a in range(n) for b in range(n))
        key = (v_key, a_key)
        if best is None or key < best:
            best = key
    return best


def _vertex_aut(verts, adj, n: int) -> int:
    count = 0
    for perm in permutations(range(n)):
        if any(verts[perm[a]] != verts[a] for a in range(n)):
            continue
        if all(adj[perm[a]][perm[b]] == adj[a][b] for a in range(n) for b in range(n)):
            count += 1
    return count


def enumerate_graphs(g: int, n_indices: int) -> List[StableGraph]:
    """All isomorphism classes of connected stable graphs of total genus g
    with canonical indices drawn from {0..n_indices-1}, in a deterministic
    order."""
    if g < 2:
        raise ValueError("the graph expansion starts at genus 2")
    if n_indices < 1:
        raise ValueError("need at least one canonical index")

    found = {}
    for nv in range(1, 2 * g - 1):
        slots = [(v, w) for v in range(nv) for w in range(v, nv)]
        for decorations in _nondecreasing_tuples(nv, g, n_indices):
            gs = [d[0] for d in decorations]
            edges = g - sum(gs) + nv - 1
            if edges < 0 or (nv > 1 and edges < nv - 1):
                continue
            # quick valence feasibility: every vertex needs 2g_v-2+val >= 1
            if sum(max(0, 3 - 2 * gv) for gv in gs) > 2 * edges:
                continue
            for comp in _compositions(edges, len(slots)):
                adj = [[0] * nv for _ in range(nv)]
                for (v, w), m in zip(slots, comp):
                    adj[v][w] += m
                    if v != w:
                        adj[w][v] += m
                if not _connected(adj, nv):
                    continue
                ok = True
                for v in range(nv):
                    val = sum(adj[v]) + adj[v][v]
                    if 2 * gs[v] - 2 + val <= 0:
                        ok = False
                        break
                if not ok:
                    continue
                key = _canonical_key(decorations, adj, nv)
                if key in found:
                    continue
                aut = _vertex_aut(decorations, adj, nv)
                for v in range(nv):
                    loops = adj[v][v]
                    aut *= 2 ** loops * factorial(loops)
                for v in range(nv):
                    for w in range(v + 1, nv):
                        aut *= factorial(adj[v][w])
                found[key] = StableGraph(
                    genus=g,
                    vertices=tuple(decorations),
                    adjacency=tuple(tuple(row) for row in adj),
                    aut=aut,
                    b1=edges - nv + 1,
                )
    return [found[k] for k in sorted(found.keys(), key=_sort_key)]


def _sort_key(key):
    verts, adj = key
    return (len(verts), verts, adj)


def _nondecreasing_tuples(nv: int, g: int, n_indices: int) -> Iterator[Tuple[Vertex, ...]]:
    symbols = [(gv, i) for gv in range(g + 1) for i in range(n_indices)]

    def rec(prefix, start, budget):
        if len(prefix) == nv:
            yield tuple(prefix)
            return
        for s in range(start, len(symbols)):
            gv = symbols[s][0]
            if gv > budget:
                continue
            yield from rec(prefix + [symbols[s]], s, budget - gv)

    yield from rec([], 0, g)
