"""Value-semantic graphs over integer vertex labels.

Graphs are immutable: an explicit sorted vertex tuple plus a sorted tuple of
undirected edges. Pattern graphs may live on a sparse subset of labels; big
host graphs use the dense universe {0..n-1}. Equality is label-sensitive;
isomorphism is a separate query (`canonical_form`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

__all__ = [
    "Graph",
    "Permutation",
    "excess",
    "leaves",
    "isolated",
    "edge_intersection",
    "edge_union",
    "intersection",
    "edge_difference",
    "vertex_induced",
    "edge_deleted",
    "is_subgraph",
    "is_subgraph_covering_isolates",
    "cycles_up_to",
    "count_cycles",
    "independent_cycles",
    "two_core",
    "connected_components",
    "is_connected",
    "is_forest",
    "canonical_form",
    "automorphism_count",
    "apply_permutation",
]

MAX_CANONICAL_VERTICES = 16


def _normalize_edge(u: int, v: int) -> tuple[int, int]:
    u, v = int(u), int(v)
    if u == v:
        raise ValueError(f"self-loop at vertex {u}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph with an explicit vertex set.

    `vertices` is a sorted tuple of distinct integer labels; `edges` is a
    sorted tuple of (u, v) pairs with u < v and both endpoints in the vertex
    set. Two graphs are equal iff both tuples match exactly.
    """

    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        vset = set(self.vertices)
        if len(vset) != len(self.vertices):
            raise ValueError("duplicate vertex labels")
        if any(v < 0 for v in self.vertices):
            raise ValueError("vertex labels must be nonnegative")
        eset = set(self.edges)
        if len(eset) != len(self.edges):
            raise ValueError("duplicate edges")
        for u, v in self.edges:
            if u >= v:
                raise ValueError(f"edge ({u},{v}) not normalized")
            if u not in vset or v not in vset:
                raise ValueError(f"edge ({u},{v}) endpoint outside vertex set")

    # -- constructors -------------------------------------------------------

    @staticmethod
    def build(edges: Iterable[Sequence[int]], vertices: Iterable[int] | None = None,
              n: int | None = None) -> "Graph":
        """Build from any edge iterable; vertices default to the endpoints.

        Pass `n` for the dense universe {0..n-1}, or `vertices` for an
        explicit label subset (isolated vertices allowed in both).
        """
        norm = sorted({_normalize_edge(u, v) for u, v in edges})
        if n is not None:
            vts = tuple(range(n))
        elif vertices is not None:
            vts = tuple(sorted(set(vertices)))
        else:
            vts = tuple(sorted({w for e in norm for w in e}))
        return Graph(vts, tuple(norm))

    @staticmethod
    def empty(n: int) -> "Graph":
        return Graph(tuple(range(n)), ())

    @staticmethod
    def complete(n: int) -> "Graph":
        return Graph(tuple(range(n)), tuple(combinations(range(n), 2)))

    @staticmethod
    def cycle(length: int, offset: int = 0) -> "Graph":
        if length < 3:
            raise ValueError("cycle length must be >= 3")
        edges = [(offset + i, offset + (i + 1) % length) for i in range(length)]
        return Graph.build(edges)

    @staticmethod
    def path(n_vertices: int, offset: int = 0) -> "Graph":
        edges = [(offset + i, offset + i + 1) for i in range(n_vertices - 1)]
        return Graph.build(edges, vertices=range(offset, offset + n_vertices))

    # -- basic views --------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def vertex_set(self) -> frozenset[int]:
        return frozenset(self.vertices)

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in self.vertices}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {v: tuple(sorted(ns)) for v, ns in adj.items()}

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, u: int, v: int) -> bool:
        return _normalize_edge(u, v) in self.edge_set

    def without_isolated(self) -> "Graph":
        """Drop isolated vertices (edge-induced view of the same edges)."""
        keep = sorted({w for e in self.edges for w in e})
        return Graph(tuple(keep), self.edges)

    # -- serialization ------------------------------------------------------

    def to_text(self) -> str:
        """One-line edge list: ``n=<int>; <u>-<v>,<u>-<v>,...``.

        Dense-universe graphs round-trip exactly; an explicit non-dense
        vertex subset is carried in an extra ``v=`` field.
        """
        dense = self.vertices == tuple(range(self.n_vertices))
        parts = [f"n={self.n_vertices}"]
        if not dense:
            parts.append("v=" + ",".join(str(v) for v in self.vertices))
        parts.append(",".join(f"{u}-{v}" for u, v in self.edges))
        return "; ".join(parts)

    @staticmethod
    def from_text(line: str) -> "Graph":
        fields = [f.strip() for f in line.strip().split(";")]
        if not fields or not fields[0].startswith("n="):
            raise ValueError(f"malformed graph line: {line!r}")
        n = int(fields[0][2:])
        vertices: Iterable[int] | None = None
        edge_field = fields[1] if len(fields) > 1 else ""
        if len(fields) > 1 and fields[1].startswith("v="):
            vertices = [int(x) for x in fields[1][2:].split(",") if x]
            edge_field = fields[2] if len(fields) > 2 else ""
        edges = []
        if edge_field:
            for tok in edge_field.split(","):
                u, v = tok.split("-")
                edges.append((int(u), int(v)))
        if vertices is None:
            return Graph.build(edges, n=n)
        return Graph.build(edges, vertices=vertices)

    def to_json(self) -> str:
        obj: dict = {"n": self.n_vertices, "edges": [list(e) for e in self.edges]}
        if self.vertices != tuple(range(self.n_vertices)):
            obj["vertices"] = list(self.vertices)
        return json.dumps(obj, separators=(",", ":"))

    @staticmethod
    def from_json(payload: str) -> "Graph":
        obj = json.loads(payload)
        if "vertices" in obj:
            return Graph.build(obj["edges"], vertices=obj["vertices"])
        return Graph.build(obj["edges"], n=obj["n"])


@dataclass(frozen=True)
class Permutation:
    """Bijection on {0..n-1} stored as an image array: i -> image[i]."""

    image: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.image)
        if sorted(self.image) != list(range(n)):
            raise ValueError("image is not a permutation of 0..n-1")

    @staticmethod
    def identity(n: int) -> "Permutation":
        return Permutation(tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i]

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.image):
            inv[j] = i
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """Return self∘other (apply `other` first)."""
        if self.n != other.n:
            raise ValueError("size mismatch")
        return Permutation(tuple(self.image[other.image[i]] for i in range(self.n)))


# ---------------------------------------------------------------------------
# Structural queries
# ---------------------------------------------------------------------------

def excess(g: Graph) -> int:
    """|E| - |V| over the declared vertex set (isolated vertices count)."""
    return g.n_edges - g.n_vertices


def leaves(g: Graph) -> frozenset[int]:
    return frozenset(v for v in g.vertices if g.degree(v) == 1)


def isolated(g: Graph) -> frozenset[int]:
    return frozenset(v for v in g.vertices if g.degree(v) == 0)


def edge_intersection(s: Graph, h: Graph) -> Graph:
    """Graph induced by E(s) ∩ E(h); no isolated vertices in the output."""
    edges = sorted(s.edge_set & h.edge_set)
    return Graph.build(edges)


def edge_union(s: Graph, h: Graph) -> Graph:
    """Union graph on V(s) ∪ V(h) with E(s) ∪ E(h)."""
    return Graph.build(sorted(s.edge_set | h.edge_set),
                       vertices=s.vertex_set | h.vertex_set)


def intersection(s: Graph, h: Graph) -> Graph:
    """Vertex-and-edge intersection: (V(s) ∩ V(h), E(s) ∩ E(h))."""
    return Graph.build(sorted(s.edge_set & h.edge_set),
                       vertices=s.vertex_set & h.vertex_set)


def edge_difference(s: Graph, h: Graph) -> Graph:
    """Graph induced by E(s) \\ E(h); no isolated vertices in the output."""
    return Graph.build(sorted(s.edge_set - h.edge_set))


def vertex_induced(g: Graph, subset: Iterable[int]) -> Graph:
    sub = set(subset)
    if not sub <= g.vertex_set:
        raise ValueError("subset not contained in the vertex set")
    edges = [e for e in g.edges if e[0] in sub and e[1] in sub]
    return Graph.build(edges, vertices=sub)


def edge_deleted(g: Graph, subset: Iterable[int]) -> Graph:
    """Delete all edges with both endpoints in `subset`; keep every vertex."""
    sub = set(subset)
    edges = [e for e in g.edges if not (e[0] in sub and e[1] in sub)]
    return Graph.build(edges, vertices=g.vertices)


def is_subgraph(h: Graph, g: Graph) -> bool:
    return h.vertex_set <= g.vertex_set and h.edge_set <= g.edge_set


def is_subgraph_covering_isolates(h: Graph, g: Graph) -> bool:
    """h ⊆ g and every isolated vertex of g is isolated in h.

    Both graphs must share the same vertex universe; differing universes are
    rejected rather than coerced.
    """
    if h.vertices != g.vertices:
        raise ValueError("predicate requires identical vertex universes")
    return h.edge_set <= g.edge_set and isolated(g) <= isolated(h)


# ---------------------------------------------------------------------------
# Cycles
# ---------------------------------------------------------------------------

def cycles_up_to(g: Graph, max_len: int) -> list[Graph]:
    """All distinct cycle subgraphs with 3 <= length <= max_len.

    Each cycle is reported once: the DFS starts at the cycle's lowest-labeled
    vertex and walks in the direction of its smaller neighbor.
    """
    if max_len < 3:
        raise ValueError("max_len must be >= 3")
    core = two_core(g)
    adj = core.adjacency
    found: list[Graph] = []

    # Each cycle is listed from its minimum vertex with second < last vertex,
    # so every cycle subgraph appears exactly once.
    def extend(path: list[int], start: int) -> None:
        last = path[-1]
        for nxt in adj[last]:
            if nxt == start and len(path) >= 3:
                if path[1] < path[-1]:
                    found.append(Graph.build(
                        [(path[i], path[(i + 1) % len(path)]) for i in range(len(path))]))
            elif nxt > start and nxt not in path and len(path) < max_len:
                path.append(nxt)
                extend(path, start)
                path.pop()

    for start in core.vertices:
        extend([start], start)
    found.sort(key=lambda c: (c.n_vertices, c.vertices))
    return found


def count_cycles(g: Graph, length: int) -> int:
    """Number of cycle subgraphs of exactly the given length."""
    return sum(1 for c in cycles_up_to(g, length) if c.n_vertices == length)


def independent_cycles(g: Graph, m: int) -> list[Graph]:
    """m-cycles of g with no external edge incident to their vertices."""
    if m < 3:
        raise ValueError("m must be >= 3")
    out = []
    for c in cycles_up_to(g, m):
        if c.n_vertices != m:
            continue
        if all(g.degree(v) == 2 for v in c.vertices):
            out.append(c)
    return out


def two_core(g: Graph) -> Graph:
    """Iteratively strip degree-<=1 vertices until min degree >= 2 (or empty)."""
    deg = {v: g.degree(v) for v in g.vertices}
    adj = {v: set(ns) for v, ns in g.adjacency.items()}
    queue = [v for v in g.vertices if deg[v] <= 1]
    removed: set[int] = set()
    while queue:
        v = queue.pop()
        if v in removed:
            continue
        removed.add(v)
        for u in adj[v]:
            if u not in removed:
                deg[u] -= 1
                if deg[u] <= 1:
                    queue.append(u)
    keep = [v for v in g.vertices if v not in removed]
    edges = [e for e in g.edges if e[0] not in removed and e[1] not in removed]
    return Graph.build(edges, vertices=keep)


def connected_components(g: Graph) -> list[Graph]:
    """Components as graphs (isolated vertices are singleton components)."""
    seen: set[int] = set()
    comps = []
    for start in g.vertices:
        if start in seen:
            continue
        stack = [start]
        comp = {start}
        seen.add(start)
        while stack:
            v = stack.pop()
            for u in g.adjacency[v]:
                if u not in comp:
                    comp.add(u)
                    seen.add(u)
                    stack.append(u)
        edges = [e for e in g.edges if e[0] in comp]
        comps.append(Graph.build(edges, vertices=comp))
    return comps


def is_connected(g: Graph) -> bool:
    return len(connected_components(g)) <= 1


def is_forest(g: Graph) -> bool:
    return all(excess(c) == -1 for c in connected_components(g))


# ---------------------------------------------------------------------------
# Isomorphism machinery (pattern graphs, <= 16 vertices)
# ---------------------------------------------------------------------------

def _tree_rooted_code(adj: dict[int, tuple[int, ...]], root: int, parent: int) -> tuple:
    return tuple(sorted(_tree_rooted_code(adj, c, root) for c in adj[root] if c != parent))


def _tree_centers(adj: dict[int, tuple[int, ...]], verts: list[int]) -> list[int]:
    if len(verts) == 1:
        return list(verts)
    deg = {v: len(adj[v]) for v in verts}
    layer = [v for v in verts if deg[v] <= 1]
    remaining = len(verts)
    alive = set(verts)
    while remaining > 2:
        nxt = []
        for v in layer:
            alive.discard(v)
        remaining -= len(layer)
        for v in layer:
            for u in adj[v]:
                if u in alive:
                    deg[u] -= 1
                    if deg[u] == 1:
                        nxt.append(u)
        layer = nxt
    return sorted(alive)


def _tree_canonical_code(component: Graph) -> tuple:
    adj = component.adjacency
    verts = list(component.vertices)
    centers = _tree_centers(adj, verts)
    if len(centers) == 1:
        return ("T1", _tree_rooted_code(adj, centers[0], -1))
    a, b = centers
    ca = _tree_rooted_code(adj, a, b)
    cb = _tree_rooted_code(adj, b, a)
    return ("T2",) + tuple(sorted([ca, cb]))


def _refined_classes(g: Graph) -> list[int]:
    """Iterated degree refinement; returns a color per vertex (index order)."""
    idx = {v: i for i, v in enumerate(g.vertices)}
    colors = [g.degree(v) for v in g.vertices]
    for _ in range(g.n_vertices):
        sigs = []
        for v in g.vertices:
            neigh = tuple(sorted(colors[idx[u]] for u in g.adjacency[v]))
            sigs.append((colors[idx[v]], neigh))
        ranks = {s: r for r, s in enumerate(sorted(set(sigs)))}
        new = [ranks[s] for s in sigs]
        if new == colors:
            break
        colors = new
    return colors


def _general_canonical_code(g: Graph) -> tuple:
    """Canonical code by backtracking over color-respecting orderings."""
    n = g.n_vertices
    idx = {v: i for i, v in enumerate(g.vertices)}
    colors = _refined_classes(g)
    adj_bits = [0] * n
    for u, v in g.edges:
        adj_bits[idx[u]] |= 1 << idx[v]
        adj_bits[idx[v]] |= 1 << idx[u]

    best: list[tuple[int, ...] | None] = [None]

    def search(order: list[int], rows: list[int], remaining: list[int]) -> None:
        if best[0] is not None and tuple(rows) > best[0][: len(rows)]:
            return
        if not remaining:
            code = tuple(rows)
            if best[0] is None or code < best[0]:
                best[0] = code
            return
        # candidates: lowest color class first, break ties by adjacency to placed
        cands = sorted(remaining, key=lambda w: colors[w])
        lead_color = colors[cands[0]]
        for w in cands:
            if colors[w] != lead_color:
                break
            row = 0
            for pos, placed in enumerate(order):
                if adj_bits[w] >> placed & 1:
                    row |= 1 << pos
            order.append(w)
            rows.append(row)
            rest = [x for x in remaining if x != w]
            search(order, rows, rest)
            order.pop()
            rows.pop()

    search([], [], list(range(n)))
    assert best[0] is not None
    return ("G", n, tuple(sorted(colors))) + best[0]


def canonical_form(g: Graph) -> tuple:
    """Isomorphism-invariant code: equal codes iff isomorphic graphs.

    Forest components get a fast center-rooted code; anything with a cycle
    goes through refined backtracking (graphs up to 16 non-isolated vertices).
    """
    comps = [c for c in connected_components(g) if c.n_edges > 0]
    n_iso = g.n_vertices - sum(c.n_vertices for c in comps)
    codes = []
    for c in comps:
        if excess(c) == -1:
            codes.append(_tree_canonical_code(c))
        else:
            if c.n_vertices > MAX_CANONICAL_VERTICES:
                raise ValueError(
                    f"canonical_form supports components up to {MAX_CANONICAL_VERTICES} "
                    f"vertices, got {c.n_vertices}")
            codes.append(_general_canonical_code(c))
    return ("C", n_iso, tuple(sorted(codes)))


def automorphism_count(g: Graph) -> int:
    """Exact |Aut(g)| by color-refined backtracking (<= 16 vertices/component).

    Isolated vertices contribute a factor (#isolated)!; identical components
    contribute multiset permutation factors.
    """
    import math

    comps = [c for c in connected_components(g) if c.n_edges > 0]
    n_iso = g.n_vertices - sum(c.n_vertices for c in comps)
    total = math.factorial(n_iso)
    by_code: dict[tuple, list[Graph]] = {}
    for c in comps:
        if c.n_vertices > MAX_CANONICAL_VERTICES:
            raise ValueError("automorphism_count supports components up to "
                             f"{MAX_CANONICAL_VERTICES} vertices")
        by_code.setdefault(canonical_form(c), []).append(c)
    for code, group in by_code.items():
        total *= math.factorial(len(group))
        total *= _component_automorphisms(group[0]) ** len(group)
    return total


def _component_automorphisms(g: Graph) -> int:
    n = g.n_vertices
    idx = {v: i for i, v in enumerate(g.vertices)}
    colors = _refined_classes(g)
    adj_sets = [frozenset(idx[u] for u in g.adjacency[v]) for v in g.vertices]
    count = [0]

    def extend(mapping: list[int], used: set[int]) -> None:
        i = len(mapping)
        if i == n:
            count[0] += 1
            return
        for j in range(n):
            if j in used or colors[j] != colors[i]:
                continue
            ok = True
            for k in range(i):
                if (k in adj_sets[i]) != (mapping[k] in adj_sets[j]):
                    ok = False
                    break
            if ok:
                mapping.append(j)
                used.add(j)
                extend(mapping, used)
                mapping.pop()
                used.discard(j)

    extend([], set())
    return count[0]


def apply_permutation(g: Graph, p: Permutation) -> Graph:
    """Relabeled graph; satisfies (p∘q)(g) = p(q(g))."""
    if any(v >= p.n for v in g.vertices):
        raise ValueError("permutation does not cover the graph's labels")
    return Graph.build([(p(u), p(v)) for u, v in g.edges],
                       vertices=[p(v) for v in g.vertices])
