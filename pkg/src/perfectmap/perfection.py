"""Simple undirected graphs and desk-scale perfection (Berge) testing.

Adjacency is stored as one Python-int bitmask per vertex, which keeps the
chordless-path search and clique enumeration cheap at the sizes this
package targets (tens of vertices).
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from perfectmap.errors import FormatError, InvariantViolation, ModelError, check_guard

DEFAULT_HOLE_LIMIT = 25

FAMILIES = (
    "bipartite",
    "complement_bipartite",
    "line_of_bipartite",
    "complement_line_of_bipartite",
    "random",
)
BERGE_FAMILIES = FAMILIES[:4]


def iter_bits(mask: int):
    """Yield set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class UndirectedGraph:
    n: int
    masks: tuple[int, ...]

    def __post_init__(self):
        if len(self.masks) != self.n:
            raise ValueError("need one adjacency mask per vertex")
        for u, m in enumerate(self.masks):
            if m >> u & 1:
                raise ValueError(f"self-loop at vertex {u}")
            if m >> self.n:
                raise ValueError(f"vertex {u} has a neighbour out of range")
            for v in iter_bits(m):
                if not self.masks[v] >> u & 1:
                    raise ValueError(f"asymmetric adjacency between {u} and {v}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> UndirectedGraph:
        masks = [0] * n
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for {n} vertices")
            masks[u] |= 1 << v
            masks[v] |= 1 << u
        return cls(n, tuple(masks))

    @classmethod
    def from_matrix(cls, matrix) -> UndirectedGraph:
        a = np.asarray(matrix, dtype=bool)
        n = a.shape[0]
        return cls.from_edges(n, ((int(u), int(v)) for u, v in zip(*np.nonzero(np.triu(a, 1)))))

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.masks[u] >> v & 1)

    def neighbors(self, v: int) -> list[int]:
        return list(iter_bits(self.masks[v]))

    def degree(self, v: int) -> int:
        return self.masks[v].bit_count()

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in iter_bits(self.masks[u] >> (u + 1) << (u + 1))]

    @property
    def n_edges(self) -> int:
        return sum(m.bit_count() for m in self.masks) // 2

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        for u, v in self.edges():
            a[u, v] = a[v, u] = True
        return a

    def induced(self, vertices: Sequence[int]) -> UndirectedGraph:
        index = {v: i for i, v in enumerate(vertices)}
        return UndirectedGraph.from_edges(
            len(vertices),
            ((index[u], index[v]) for u, v in self.edges() if u in index and v in index),
        )

    def is_stable(self, vertices: Iterable[int]) -> bool:
        chosen = 0
        for v in vertices:
            chosen |= 1 << int(v)
        return all(not (self.masks[v] & chosen) for v in iter_bits(chosen))


def empty_graph(n: int) -> UndirectedGraph:
    return UndirectedGraph(n, (0,) * n)


def complete_graph(n: int) -> UndirectedGraph:
    full = (1 << n) - 1
    return UndirectedGraph(n, tuple(full ^ (1 << v) for v in range(n)))


def cycle_graph(n: int) -> UndirectedGraph:
    return UndirectedGraph.from_edges(n, ((i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> UndirectedGraph:
    return UndirectedGraph.from_edges(n, ((i, i + 1) for i in range(n - 1)))


def complete_bipartite(n1: int, n2: int) -> UndirectedGraph:
    return UndirectedGraph.from_edges(n1 + n2, ((i, n1 + j) for i in range(n1) for j in range(n2)))


def complement(g: UndirectedGraph) -> UndirectedGraph:
    full = (1 << g.n) - 1
    return UndirectedGraph(g.n, tuple(full ^ m ^ (1 << v) for v, m in enumerate(g.masks)))


def line_graph(g: UndirectedGraph) -> tuple[UndirectedGraph, list[tuple[int, int]]]:
    """Line graph of ``g`` and the list mapping each line-graph vertex to its edge."""
    edges = g.edges()
    incident: list[list[int]] = [[] for _ in range(g.n)]
    for i, (u, v) in enumerate(edges):
        incident[u].append(i)
        incident[v].append(i)
    pairs = set()
    for group in incident:
        for a in range(len(group)):
            for b in range(a + 1, len(group)):
                pairs.add((group[a], group[b]))
    return UndirectedGraph.from_edges(len(edges), sorted(pairs)), edges


def replicate_vertex(g: UndirectedGraph, v: int) -> UndirectedGraph:
    """Add a vertex joined to ``v`` and to every neighbour of ``v``."""
    if not 0 <= v < g.n:
        raise ModelError(f"vertex {v} out of range for {g.n} vertices")
    new = g.n
    new_mask = g.masks[v] | (1 << v)
    masks = [m | (1 << new) if new_mask >> u & 1 else m for u, m in enumerate(g.masks)]
    masks.append(new_mask)
    return UndirectedGraph(g.n + 1, tuple(masks))


# --- hole search ------------------------------------------------------------


def is_hole(g: UndirectedGraph, cycle: Sequence[int]) -> bool:
    """True iff ``cycle`` lists >= 5 distinct vertices inducing a chordless cycle."""
    k = len(cycle)
    if k < 5 or len(set(cycle)) != k:
        return False
    for i in range(k):
        for j in range(i + 1, k):
            consecutive = j == i + 1 or (i == 0 and j == k - 1)
            if g.has_edge(cycle[i], cycle[j]) != consecutive:
                return False
    return True


def find_odd_hole(g: UndirectedGraph, limit: int | None = DEFAULT_HOLE_LIMIT) -> list[int] | None:
    """Return an odd hole of ``g`` as a vertex cycle, or None if there is none.

    Exhaustive depth-first extension of chordless paths. Each cycle is rooted
    at its smallest vertex and closed only when the closing vertex exceeds the
    root's first successor, so every hole is reached in exactly one direction.
    """
    check_guard(g.n, limit, "odd-hole search graph")
    adj = g.masks
    full = (1 << g.n) - 1

    for s in range(g.n):
        allowed = full & ~((1 << (s + 1)) - 1)
        s_adj = adj[s]
        for v1 in iter_bits(s_adj & allowed):
            # path[1:-1] closed neighbourhoods are excluded from extensions
            path = [s, v1]
            stack = [(v1, allowed & ~(1 << v1), iter_bits(adj[v1] & allowed & ~(1 << v1)))]
            while stack:
                u, free, cands = stack[-1]
                w = next(cands, None)
                if w is None:
                    stack.pop()
                    path.pop()
                    continue
                if s_adj >> w & 1:
                    length = len(path) + 1
                    if length >= 5 and length % 2 == 1 and w > v1:
                        cycle = path + [w]
                        if not is_hole(g, cycle):
                            raise InvariantViolation(f"invalid hole witness {cycle}")
                        return cycle
                    continue
                # w extends the path; u becomes interior, so its neighbours are blocked
                next_free = free & ~adj[u] & ~(1 << u) & ~(1 << w)
                path.append(w)
                stack.append((w, next_free, iter_bits(adj[w] & next_free)))
    return None


@dataclass(frozen=True)
class BergeResult:
    berge: bool
    side: str | None = None
    witness: tuple[int, ...] | None = None

    def __bool__(self):
        return self.berge


def is_berge(g: UndirectedGraph, limit: int | None = DEFAULT_HOLE_LIMIT) -> BergeResult:
    """Check for odd holes in ``g`` and in its complement."""
    check_guard(g.n, limit, "Berge test graph")
    hole = find_odd_hole(g, limit=None)
    if hole is not None:
        return BergeResult(False, "graph", tuple(hole))
    hole = find_odd_hole(complement(g), limit=None)
    if hole is not None:
        return BergeResult(False, "complement", tuple(hole))
    return BergeResult(True)


# --- generators ---------------------------------------------------------------


def random_graph(n: int, p: float, seed=None) -> UndirectedGraph:
    """G(n, p): one coin flip per vertex pair, pairs in (u, v) lexicographic order."""
    rng = np.random.default_rng(seed)
    flips = rng.random(n * (n - 1) // 2) < p
    pairs = ((u, v) for u in range(n) for v in range(u + 1, n))
    return UndirectedGraph.from_edges(n, (e for e, keep in zip(pairs, flips) if keep))


def random_bipartite(n1: int, n2: int, p: float, seed=None) -> UndirectedGraph:
    """Parts {0..n1-1} and {n1..n1+n2-1}; one coin flip per cross pair, row-major."""
    rng = np.random.default_rng(seed)
    flips = rng.random((n1, n2)) < p
    return UndirectedGraph.from_edges(
        n1 + n2, ((i, n1 + j) for i in range(n1) for j in range(n2) if flips[i, j])
    )


def _parts(size) -> tuple[int, int]:
    if isinstance(size, (tuple, list)):
        n1, n2 = (int(s) for s in size)
    else:
        size = int(size)
        n1, n2 = size // 2, size - size // 2
    if n1 < 1 or n2 < 1:
        raise ModelError(f"bipartite parts must be positive, got ({n1}, {n2})")
    return n1, n2


def gen_family(family: str, size, p: float = 0.5, seed=None) -> UndirectedGraph:
    """Seeded random graph from one of :data:`FAMILIES`.

    ``size`` is the vertex count for ``bipartite``, ``complement_bipartite``
    and ``random``. For the two line-graph families it is the vertex count
    of the underlying bipartite graph. Bipartite sizes may also be given as
    an explicit ``(n1, n2)`` pair. ``seed`` may be an int or a numpy Generator.
    """
    if family not in FAMILIES:
        raise ModelError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    if not 0.0 <= p <= 1.0:
        raise ModelError(f"edge probability must lie in [0, 1], got {p}")
    if family == "random":
        n = int(size)
        if n < 1:
            raise ModelError(f"size must be positive, got {n}")
        return random_graph(n, p, seed)
    base = random_bipartite(*_parts(size), p, seed)
    if family == "bipartite":
        return base
    if family == "complement_bipartite":
        return complement(base)
    lg, _ = line_graph(base)
    if family == "line_of_bipartite":
        return lg
    return complement(lg)


# --- UG text format -------------------------------------------------------------


def parse_ug(text: str) -> tuple[UndirectedGraph, np.ndarray | None]:
    """Parse UG text; returns the graph and the weight vector (or None)."""
    lines = [
        (i, ln.split())
        for i, ln in enumerate(text.splitlines(), start=1)
        if ln.strip() and not ln.strip().startswith("#")
    ]
    it = iter(lines)

    def take(keyword):
        try:
            lineno, toks = next(it)
        except StopIteration:
            raise FormatError(f"unexpected end of input, expected '{keyword}'") from None
        if toks[0] != keyword:
            raise FormatError(f"malformed header: expected '{keyword}', got '{toks[0]}'", lineno)
        return lineno, toks[1:]

    lineno, rest = take("UG")
    if rest != ["1"]:
        raise FormatError("unsupported UG version", lineno)
    lineno, rest = take("nodes")
    try:
        (n,) = (int(t) for t in rest)
    except ValueError:
        raise FormatError("expected 'nodes <n>'", lineno) from None
    if n < 0:
        raise FormatError("node count must be non-negative", lineno)
    weights = None
    try:
        lineno, toks = next(it)
    except StopIteration:
        raise FormatError("unexpected end of input, expected 'edges'") from None
    if toks[0] == "weights":
        try:
            weights = np.array([float(t) for t in toks[1:]], dtype=np.float64)
        except ValueError:
            raise FormatError("bad weight literal", lineno) from None
        if weights.size != n:
            raise FormatError(f"expected {n} weights, got {weights.size}", lineno)
        lineno, toks = take("edges")
        toks = ["edges"] + toks
    if toks[0] != "edges" or len(toks) != 2:
        raise FormatError(f"malformed header: expected 'edges <m>', got '{' '.join(toks)}'", lineno)
    try:
        m = int(toks[1])
    except ValueError:
        raise FormatError("expected integer edge count", lineno) from None
    edges = []
    for _ in range(m):
        try:
            lineno, toks = next(it)
        except StopIteration:
            raise FormatError(f"expected {m} edges, got {len(edges)}") from None
        try:
            u, v = (int(t) for t in toks)
        except ValueError:
            raise FormatError(f"expected edge 'u v', got '{' '.join(toks)}'", lineno) from None
        if not 0 <= u < v < n:
            raise FormatError(f"edge ({u}, {v}) violates 0 <= u < v < {n}", lineno)
        edges.append((u, v))
    extra = next(it, None)
    if extra is not None:
        raise FormatError("unexpected trailing content", extra[0])
    return UndirectedGraph.from_edges(n, edges), weights


def serialize_ug(
    g: UndirectedGraph,
    weights: Sequence[float] | None = None,
    node_comments: Sequence[str] | None = None,
) -> str:
    lines = ["UG 1", f"nodes {g.n}"]
    if node_comments:
        lines[1:1] = [f"# {c}" for c in node_comments]
    if weights is not None:
        lines.append("weights " + " ".join(repr(float(w)) for w in weights))
    edges = g.edges()
    lines.append(f"edges {len(edges)}")
    lines.extend(f"{u} {v}" for u, v in edges)
    return "\n".join(lines) + "\n"


def load_ug(path) -> tuple[UndirectedGraph, np.ndarray | None]:
    with open(path, encoding="utf-8") as fh:
        return parse_ug(fh.read())
