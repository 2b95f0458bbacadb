"""Exact desk-scale solvers used as ground truth."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from perfectmap.errors import InvariantViolation, check_guard
from perfectmap.model import GraphicalModel, model_log_score
from perfectmap.perfection import UndirectedGraph, iter_bits, line_graph

MAP_STATE_LIMIT = 1 << 24
MWSS_LIMIT = 30
MATCHING_EDGE_LIMIT = 30


@dataclass(frozen=True)
class OracleResult:
    argmax: Any
    value: float
    explored: int


def exhaustive_map(m: GraphicalModel, limit: int | None = MAP_STATE_LIMIT) -> OracleResult:
    """Maximize the model log-score over every joint assignment.

    Assignments are enumerated in ``itertools.product`` order (last variable
    fastest); the first maximizer in that order wins ties.
    """
    size = m.state_space_size
    check_guard(size, limit, "joint state space")
    cards = m.cardinalities
    n = m.n_vars
    total = np.zeros(cards, dtype=np.float64)
    for f in m.factors:
        local = np.log(f.shaped(cards))
        shape = [cards[v] if v in f.scope else 1 for v in range(n)]
        total = total + local.reshape(shape)
    flat = int(np.argmax(total))
    argmax = tuple(int(x) for x in np.unravel_index(flat, cards))
    value = model_log_score(m, argmax)
    if not math.isclose(value, float(total.flat[flat]), rel_tol=0, abs_tol=1e-9):
        raise InvariantViolation("exhaustive MAP value does not re-derive from its argmax")
    return OracleResult(argmax, value, size)


def exhaustive_mwss(
    g: UndirectedGraph, weights: Sequence[float], limit: int | None = MWSS_LIMIT
) -> OracleResult:
    """Maximum-weight stable set by branch and bound.

    Vertices are branched in index order, include-branch first, and the
    incumbent only changes on a strict improvement. The winner among tied
    optima is therefore the one whose sorted vertex list is lexicographically
    smallest (the lexicographically largest bit vector). The bound at each
    node is the sum, over a greedy clique cover of the remaining candidates,
    of the heaviest weight in each clique.

    Weights must be non-negative. ``argmax`` is an int8 bit vector.
    """
    n = g.n
    check_guard(n, limit, "stable-set graph")
    w = [float(x) for x in weights]
    if len(w) != n:
        raise ValueError(f"expected {n} weights, got {len(w)}")
    if any(x < 0 for x in w):
        raise ValueError("weights must be non-negative")
    adj = g.masks

    best_value = -1.0
    best_mask = 0
    explored = 0

    def bound(cand: int) -> float:
        total = 0.0
        while cand:
            v = (cand & -cand).bit_length() - 1
            clique = 1 << v
            heaviest = w[v]
            common = adj[v] & cand
            while common:
                u = (common & -common).bit_length() - 1
                clique |= 1 << u
                heaviest = max(heaviest, w[u])
                common &= adj[u]
            cand &= ~clique
            total += heaviest
        return total

    def search(cand: int, chosen: int, value: float) -> None:
        nonlocal best_value, best_mask, explored
        explored += 1
        if not cand:
            if value > best_value:
                best_value, best_mask = value, chosen
            return
        if value + bound(cand) <= best_value:
            return
        v = (cand & -cand).bit_length() - 1
        rest = cand & ~(1 << v)
        search(rest & ~adj[v], chosen | (1 << v), value + w[v])
        search(rest, chosen, value)

    search((1 << n) - 1, 0, 0.0)
    bits = np.zeros(n, dtype=np.int8)
    for v in iter_bits(best_mask):
        bits[v] = 1
    recomputed = math.fsum(w[v] for v in iter_bits(best_mask))
    if not g.is_stable(iter_bits(best_mask)) or abs(recomputed - best_value) > 1e-9:
        raise InvariantViolation("stable-set oracle returned an inconsistent result")
    return OracleResult(bits, best_value, explored)


def exhaustive_matching(
    g: UndirectedGraph, edge_weights: Sequence[float], limit: int | None = MATCHING_EDGE_LIMIT
) -> OracleResult:
    """Maximum-weight matching as a stable set on the line graph.

    ``edge_weights`` follow the order of ``g.edges()``; ``argmax`` is the
    list of matched edges.
    """
    check_guard(g.n_edges, limit, "matching edge set")
    lg, edges = line_graph(g)
    if len(edge_weights) != len(edges):
        raise ValueError(f"expected {len(edges)} edge weights, got {len(edge_weights)}")
    res = exhaustive_mwss(lg, edge_weights, limit=None)
    matched = [edges[i] for i in np.flatnonzero(res.argmax)]
    return OracleResult(matched, res.value, res.explored)
