"""Set-packing LP relaxation of maximum-weight stable set.

The LP maximizes f.x subject to x >= 0 and one row sum(x over Q) <= 1 for
every maximal clique Q of the graph. It is solved with a dense tableau
simplex using Bland's rule; the right-hand side is all ones, so the slack
basis is feasible and no phase one is needed.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from perfectmap.errors import InvariantViolation, SolverError, check_guard
from perfectmap.nmrf import Nmrf, decode_assignment, nmrf_objective
from perfectmap.perfection import UndirectedGraph, iter_bits
from perfectmap.pruning import PrunedNmrf, postprocess_assignment

CLIQUE_LIMIT = 64
INTEGRALITY_TOL = 1e-6
FEASIBILITY_TOL = 1e-9
_PIVOT_TOL = 1e-11


def maximal_cliques(g: UndirectedGraph, limit: int | None = CLIQUE_LIMIT) -> list[tuple[int, ...]]:
    """All inclusion-maximal cliques, each sorted, in lexicographic order.

    Bron-Kerbosch with Tomita pivoting over bitmask candidate sets.
    """
    check_guard(g.n, limit, "clique enumeration graph")
    adj = g.masks
    found: list[tuple[int, ...]] = []

    def expand(r: list[int], p: int, x: int) -> None:
        if not p and not x:
            found.append(tuple(sorted(r)))
            return
        pivot = max(iter_bits(p | x), key=lambda u: (adj[u] & p).bit_count())
        for v in iter_bits(p & ~adj[pivot]):
            r.append(v)
            expand(r, p & adj[v], x & adj[v])
            r.pop()
            p &= ~(1 << v)
            x |= 1 << v

    expand([], (1 << g.n) - 1, 0)
    found.sort()
    return found


@dataclass(frozen=True, eq=False)
class PackingLp:
    weights: np.ndarray
    rows: tuple[tuple[int, ...], ...]

    @property
    def n_vars(self) -> int:
        return self.weights.size

    def matrix(self) -> np.ndarray:
        a = np.zeros((len(self.rows), self.n_vars))
        for r, row in enumerate(self.rows):
            a[r, list(row)] = 1.0
        return a


@dataclass(frozen=True, eq=False)
class LpSolution:
    x: np.ndarray
    objective: float
    integral: bool
    duals: np.ndarray
    pivots: int

    def fractional_coordinates(self, tol: float = INTEGRALITY_TOL) -> list[int]:
        return [j for j, v in enumerate(self.x) if abs(v - round(v)) > tol]


def build_lp(g: UndirectedGraph, weights: Sequence[float], cliques=None) -> PackingLp:
    """Packing LP whose rows are the maximal cliques of ``g``.

    ``cliques`` may carry a precomputed :func:`maximal_cliques` result.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (g.n,):
        raise ValueError(f"expected {g.n} weights, got shape {w.shape}")
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("weights must be finite and positive")
    rows = maximal_cliques(g) if cliques is None else cliques
    return PackingLp(w, tuple(tuple(r) for r in rows))


def solve_lp(
    lp: PackingLp,
    integrality_tol: float = INTEGRALITY_TOL,
    feasibility_tol: float = FEASIBILITY_TOL,
    max_pivots: int | None = None,
) -> LpSolution:
    """Optimal vertex of the packing LP by Bland's-rule simplex.

    The tableau keeps reduced costs in its last row; at termination the
    reduced costs of the slack columns are an optimal dual vector.
    """
    n, m = lp.n_vars, len(lp.rows)
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = lp.matrix()
    tab[:m, n : n + m] = np.eye(m)
    tab[:m, -1] = 1.0
    tab[m, :n] = -lp.weights
    basis = list(range(n, n + m))
    if max_pivots is None:
        max_pivots = 100 * (n + m) + 1000

    pivots = 0
    while True:
        improving = np.flatnonzero(tab[m, :-1] < -_PIVOT_TOL)
        if improving.size == 0:
            break
        if pivots >= max_pivots:
            raise SolverError(f"simplex exceeded {max_pivots} pivots")
        j = int(improving[0])
        col = tab[:m, j]
        rows = np.flatnonzero(col > _PIVOT_TOL)
        if rows.size == 0:
            raise SolverError("packing LP reported unbounded; some vertex is in no row")
        ratios = tab[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12]
        r = int(min(ties, key=lambda i: basis[i]))
        tab[r] /= tab[r, j]
        factors = tab[:, j].copy()
        factors[r] = 0.0
        tab -= np.outer(factors, tab[r])
        basis[r] = j
        pivots += 1

    x = np.zeros(n)
    for i, var in enumerate(basis):
        if var < n:
            x[var] = tab[i, -1]
    x = np.clip(x, 0.0, None)
    a = lp.matrix()
    if np.any(a @ x > 1.0 + feasibility_tol):
        raise SolverError("simplex returned a primal-infeasible point")
    objective = float(lp.weights @ x)
    integral = bool(np.all(np.abs(x - np.round(x)) <= integrality_tol))
    return LpSolution(x, objective, integral, tab[m, n : n + m].copy(), pivots)


@dataclass(frozen=True, eq=False)
class NmrfLpResult:
    lp: LpSolution
    bits: np.ndarray | None
    assignment: tuple[int, ...] | None
    score: float | None

    @property
    def integral(self) -> bool:
        return self.lp.integral


def solve_nmrf_lp(
    instance: Nmrf | PrunedNmrf,
    integrality_tol: float = INTEGRALITY_TOL,
    feasibility_tol: float = FEASIBILITY_TOL,
) -> NmrfLpResult:
    """Solve the packing LP of an NMRF (optionally pruned) and decode it if integral.

    A fractional optimum is returned as is, with ``bits`` and ``assignment``
    left as None; no rounding is attempted.
    """
    pruned = instance if isinstance(instance, PrunedNmrf) else None
    nmrf = pruned.base if pruned else instance
    graph = pruned.graph if pruned else nmrf.graph
    weights = pruned.weights if pruned else nmrf.weights
    sol = solve_lp(build_lp(graph, weights), integrality_tol, feasibility_tol)
    if not sol.integral:
        return NmrfLpResult(sol, None, None, None)
    bits = np.round(sol.x).astype(np.int8)
    if pruned:
        bits = postprocess_assignment(pruned, bits)
    assignment = decode_assignment(nmrf, bits)
    score = nmrf_objective(nmrf, bits)
    # Post-processing may only discard redundantly asserted minimal configurations.
    slack = integrality_tol * (1 + nmrf.n_nodes) * max(1.0, float(np.max(weights)))
    if pruned:
        dropped = sum(nmrf.nodes[i].weight for i in range(nmrf.n_nodes)
                      if pruned.minimal_flags[i])
        slack += dropped
    if not math.isfinite(score) or abs(score - sol.objective) > slack:
        raise InvariantViolation(
            f"decoded score {score} disagrees with LP objective {sol.objective}"
        )
    return NmrfLpResult(sol, bits, assignment, score)
