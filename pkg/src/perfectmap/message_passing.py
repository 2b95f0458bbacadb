"""Convergent message passing for MAP on a binary nand MRF.

Vertex weights are spread evenly over the factors containing each vertex,
and every factor forbids asserting two of its vertices at once. Messages
flow from each factor to each of its member vertices and are updated one
factor at a time, all messages of that factor together, from the values
current at that moment. A sweep visits factors in sorted order.

Two factor sets are supported:

``"edges"``
    One factor per edge, with the 2x2 potential table
    theta(0,0)=0, theta(0,1)=f_j/deg(j), theta(1,0)=f_i/deg(i),
    theta(1,1)=neg_large. Fixed points solve the LP with one constraint
    x_i + x_j <= 1 per edge, which is fractional on graphs with triangles.
``"cliques"`` (default)
    One factor per maximal clique of size >= 2, with vertex shares
    f_i / (number of maximal cliques containing i). The per-member update
    lambda <- -(1 - 1/|c|) * rest + (1/|c|) * max(...) is the edge update
    above when |c| = 2, so both sets coincide on triangle-free graphs.
    Fixed points target the clique-constrained packing LP.

Vertices without edges never exchange messages and are asserted directly.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from perfectmap.errors import SolverError
from perfectmap.nmrf import stable_set_objective
from perfectmap.perfection import UndirectedGraph
from perfectmap.relaxation import maximal_cliques

DEFAULT_TOL = 1e-8
FACTOR_SETS = ("cliques", "edges")


def default_neg_large(weights: Sequence[float]) -> float:
    return -(1e6 * (1.0 + float(max(weights, default=0.0))))


@dataclass(frozen=True, eq=False)
class PairwisePotential:
    graph: UndirectedGraph
    weights: np.ndarray
    edges: tuple[tuple[int, int], ...]
    theta: np.ndarray  # (n_edges, 2, 2), indexed [edge, x_i, x_j] with i < j
    neg_large: float

    @property
    def factors(self) -> tuple[tuple[int, ...], ...]:
        return self.edges


@dataclass(frozen=True, eq=False)
class CliquePotential:
    graph: UndirectedGraph
    weights: np.ndarray
    cliques: tuple[tuple[int, ...], ...]
    shares: np.ndarray  # per vertex: weight / number of cliques containing it

    @property
    def factors(self) -> tuple[tuple[int, ...], ...]:
        return self.cliques


@dataclass(frozen=True, eq=False)
class MpState:
    """Messages in factor order: one row per (factor, member) slot.

    For the edge factor e = (i, j), row 2e holds lambda_{j->i}(x_i) and row
    2e + 1 holds lambda_{i->j}(x_j), each as (value at 0, value at 1).
    """

    messages: np.ndarray
    iteration: int = 0
    residual: float = math.inf


def build_potentials(
    graph: UndirectedGraph, weights: Sequence[float], neg_large: float | None = None
) -> PairwisePotential:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (graph.n,):
        raise ValueError(f"expected {graph.n} weights, got shape {w.shape}")
    if neg_large is None:
        neg_large = default_neg_large(w)
    edges = tuple(graph.edges())
    theta = np.zeros((len(edges), 2, 2))
    for e, (i, j) in enumerate(edges):
        theta[e, 0, 1] = w[j] / graph.degree(j)
        theta[e, 1, 0] = w[i] / graph.degree(i)
        theta[e, 1, 1] = neg_large
    return PairwisePotential(graph, w, edges, theta, float(neg_large))


def build_clique_potentials(graph: UndirectedGraph, weights: Sequence[float]) -> CliquePotential:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (graph.n,):
        raise ValueError(f"expected {graph.n} weights, got shape {w.shape}")
    cliques = tuple(c for c in maximal_cliques(graph, limit=None) if len(c) > 1)
    counts = np.zeros(graph.n)
    for c in cliques:
        counts[list(c)] += 1
    shares = np.divide(w, counts, out=np.zeros_like(w), where=counts > 0)
    return CliquePotential(graph, w, cliques, shares)


def initial_state(potentials: PairwisePotential | CliquePotential) -> MpState:
    return MpState(np.zeros((sum(len(f) for f in potentials.factors), 2)))


def _sweep_edges(msgs, incoming, edges, theta) -> float:
    """One in-place pass with the edge table. Returns the largest message change."""
    residual = 0.0
    for e, (i, j) in enumerate(edges):
        mi, mj = msgs[2 * e], msgs[2 * e + 1]
        si, sj = incoming[i], incoming[j]
        t = theta[e]
        ai0, ai1 = si[0] - mi[0], si[1] - mi[1]
        aj0, aj1 = sj[0] - mj[0], sj[1] - mj[1]
        ni0 = 0.5 * (max(aj0 + t[0][0], aj1 + t[0][1]) - ai0)
        ni1 = 0.5 * (max(aj0 + t[1][0], aj1 + t[1][1]) - ai1)
        nj0 = 0.5 * (max(ai0 + t[0][0], ai1 + t[1][0]) - aj0)
        nj1 = 0.5 * (max(ai0 + t[0][1], ai1 + t[1][1]) - aj1)
        residual = max(residual, abs(ni0 - mi[0]), abs(ni1 - mi[1]),
                       abs(nj0 - mj[0]), abs(nj1 - mj[1]))
        si[0], si[1] = ai0 + ni0, ai1 + ni1
        sj[0], sj[1] = aj0 + nj0, aj1 + nj1
        mi[0], mi[1], mj[0], mj[1] = ni0, ni1, nj0, nj1
    return residual


def _sweep_cliques(msgs, incoming, cliques, shares) -> float:
    """One in-place pass over clique factors. Returns the largest message change.

    With a_k the incoming total at member k excluding this factor, the best
    feasible completion for member i is: all others at 0 when x_i = 1, and
    when x_i = 0 either all at 0 or exactly one other member k at 1, which
    gains shares[k] + a_k(1) - a_k(0). The top two gains cover every i.
    """
    residual = 0.0
    slot = 0
    for clique in cliques:
        size = len(clique)
        keep = 1.0 - 1.0 / size
        rest = []
        zero_total = 0.0
        best = second = -math.inf
        best_at = -1
        for pos, v in enumerate(clique):
            m = msgs[slot + pos]
            s = incoming[v]
            a0, a1 = s[0] - m[0], s[1] - m[1]
            rest.append((a0, a1))
            zero_total += a0
            gain = shares[v] + a1 - a0
            if gain > best:
                best, second, best_at = gain, best, pos
            elif gain > second:
                second = gain
        for pos, v in enumerate(clique):
            a0, a1 = rest[pos]
            others = zero_total - a0
            gain = second if pos == best_at else best
            n0 = (others + max(0.0, gain)) / size - keep * a0
            n1 = (others + shares[v]) / size - keep * a1
            m = msgs[slot + pos]
            residual = max(residual, abs(n0 - m[0]), abs(n1 - m[1]))
            s = incoming[v]
            s[0], s[1] = a0 + n0, a1 + n1
            m[0], m[1] = n0, n1
        slot += size
    return residual


def _incoming(n, factors, msgs):
    incoming = [[0.0, 0.0] for _ in range(n)]
    slot = 0
    for f in factors:
        for v in f:
            incoming[v][0] += msgs[slot][0]
            incoming[v][1] += msgs[slot][1]
            slot += 1
    return incoming


def _sweep(potentials, msgs, incoming) -> float:
    if isinstance(potentials, PairwisePotential):
        return _sweep_edges(msgs, incoming, potentials.edges, potentials.theta.tolist())
    return _sweep_cliques(msgs, incoming, potentials.cliques, potentials.shares.tolist())


def mp_iterate(state: MpState, potentials: PairwisePotential | CliquePotential) -> MpState:
    """One full sweep over the factors; returns a new state."""
    n_slots = sum(len(f) for f in potentials.factors)
    if state.messages.shape != (n_slots, 2):
        raise ValueError("message array does not match the factors")
    msgs = state.messages.tolist()
    residual = _sweep(potentials, msgs, _incoming(potentials.graph.n, potentials.factors, msgs))
    out = np.array(msgs, dtype=np.float64).reshape(n_slots, 2)
    if not np.all(np.isfinite(out)):
        raise SolverError("non-finite message; neg_large is too large in magnitude")
    return replace(state, messages=out, iteration=state.iteration + 1, residual=residual)


def mp_beliefs(state: MpState, potentials: PairwisePotential | CliquePotential) -> np.ndarray:
    """Per-vertex (b(0), b(1)): summed incoming messages; isolated vertices get (0, f)."""
    g = potentials.graph
    b = np.array(_incoming(g.n, potentials.factors, state.messages.tolist()),
                 dtype=np.float64).reshape(g.n, 2)
    for v in range(g.n):
        if g.degree(v) == 0:
            b[v] = (0.0, potentials.weights[v])
    return b


def decode_beliefs(beliefs: np.ndarray) -> np.ndarray:
    """Assert a vertex only if b(1) strictly exceeds b(0)."""
    return (beliefs[:, 1] > beliefs[:, 0]).astype(np.int8)


@dataclass(frozen=True, eq=False)
class MpResult:
    bits: np.ndarray
    objective: float
    iterations: int
    converged: bool
    residual: float
    beliefs: np.ndarray


def mp_solve(
    graph: UndirectedGraph,
    weights: Sequence[float],
    tol: float = DEFAULT_TOL,
    max_iters: int | None = None,
    neg_large: float | None = None,
    factors: str = "cliques",
) -> MpResult:
    """Sweep from all-zero messages until the largest message change is below ``tol``.

    ``max_iters`` defaults to 10 * |V| * |E| sweeps. ``objective`` is the
    stable-set weight of the decoded bits, or ``-inf`` when they violate an
    edge. ``neg_large`` only affects the ``"edges"`` factor set; clique
    factors exclude infeasible configurations exactly.
    """
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    if factors == "edges":
        pot = build_potentials(graph, w, neg_large)
    elif factors == "cliques":
        pot = build_clique_potentials(graph, w)
    else:
        raise ValueError(f"unknown factor set {factors!r}; choose from {FACTOR_SETS}")
    if max_iters is None:
        max_iters = max(1, 10 * graph.n * graph.n_edges)
    state = initial_state(pot)
    msgs = state.messages.tolist()
    incoming = [[0.0, 0.0] for _ in range(graph.n)]
    residual = math.inf if pot.factors else 0.0
    iterations = 0
    while residual >= tol and iterations < max_iters:
        residual = _sweep(pot, msgs, incoming)
        iterations += 1
        if not math.isfinite(residual):
            raise SolverError("non-finite message; neg_large is too large in magnitude")
    state = MpState(np.array(msgs, dtype=np.float64).reshape(-1, 2), iterations, residual)
    beliefs = mp_beliefs(state, pot)
    bits = decode_beliefs(beliefs)
    return MpResult(
        bits,
        stable_set_objective(graph, w, bits),
        iterations,
        residual < tol,
        residual,
        beliefs,
    )
