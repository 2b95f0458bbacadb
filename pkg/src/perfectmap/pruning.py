"""DISCONNECT and MERGE simplifications of an NMRF, plus solution recovery.

DISCONNECT strips the intra-clique edges of minimal configurations (nodes
whose weight is log(1 + epsilon)), which may then be asserted redundantly.
MERGE fuses non-adjacent nodes with identical neighbourhoods into one node
carrying their summed weight. :func:`postprocess_assignment` maps a setting
of the simplified graph back to a feasible setting of the original NMRF.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from perfectmap.errors import InvariantViolation, ModelError
from perfectmap.nmrf import Nmrf
from perfectmap.perfection import UndirectedGraph, iter_bits

MINIMAL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PrunedNmrf:
    """A simplified NMRF.

    ``graph`` and ``weights`` are indexed compactly over ``representatives``
    (original node ids, ascending). ``merge_map[i]`` is the original id of
    the representative that absorbed original node ``i``.
    """

    base: Nmrf
    graph: UndirectedGraph
    representatives: tuple[int, ...]
    merge_map: tuple[int, ...]
    weights: np.ndarray
    minimal_flags: tuple[bool, ...]

    @property
    def n_nodes(self) -> int:
        return self.graph.n

    def compact_index(self, original: int) -> int:
        return self.representatives.index(self.merge_map[original])

    def members(self, representative: int) -> list[int]:
        return [i for i, r in enumerate(self.merge_map) if r == representative]


def _identity(nmrf: Nmrf) -> PrunedNmrf:
    n = nmrf.n_nodes
    return PrunedNmrf(
        nmrf, nmrf.graph, tuple(range(n)), tuple(range(n)), nmrf.weights, (False,) * n
    )


def minimal_configurations(nmrf: Nmrf, epsilon: float | None = None, tol: float = MINIMAL_TOL) -> list[bool]:
    """Flag nodes whose weight equals log(1 + epsilon) within ``tol``."""
    eps = nmrf.epsilon if epsilon is None else epsilon
    if eps is None:
        raise ModelError("model epsilon unknown; rescale the model or pass epsilon explicitly")
    target = math.log(1.0 + eps)
    return [abs(nd.weight - target) <= tol for nd in nmrf.nodes]


def disconnect(nmrf: Nmrf, epsilon: float | None = None, tol: float = MINIMAL_TOL) -> PrunedNmrf:
    """Remove every edge between a minimal configuration and the rest of its clique."""
    flags = minimal_configurations(nmrf, epsilon, tol)
    masks = list(nmrf.graph.masks)
    for c in range(nmrf.n_cliques):
        block = 0
        for i in nmrf.clique_nodes(c):
            block |= 1 << i
        for i in nmrf.clique_nodes(c):
            if not flags[i]:
                continue
            for j in iter_bits(masks[i] & block):
                masks[j] &= ~(1 << i)
            masks[i] &= ~block
    n = nmrf.n_nodes
    return PrunedNmrf(
        nmrf,
        UndirectedGraph(n, tuple(masks)),
        tuple(range(n)),
        tuple(range(n)),
        nmrf.weights,
        tuple(flags),
    )


def merge_twins(graph: UndirectedGraph, weights: Sequence[float]):
    """Fuse non-adjacent twins of a weighted graph until none remain.

    Returns ``(graph, weights, groups)`` where ``groups[i]`` lists the input
    vertices fused into output vertex ``i`` (ascending; the first one is the
    representative). Output vertices follow their representatives' order.

    Nodes with equal open neighbourhoods are necessarily non-adjacent, and
    fusing one twin class never creates a new one, so grouping by
    neighbourhood reaches the same fixpoint as repeated pairwise merging.
    The loop re-checks until a pass changes nothing.
    """
    groups = [[v] for v in range(graph.n)]
    weights = [float(x) for x in weights]
    while True:
        classes: dict[int, list[int]] = {}
        for v, mask in enumerate(graph.masks):
            classes.setdefault(mask, []).append(v)
        if len(classes) == graph.n:
            return graph, np.array(weights, dtype=np.float64), groups
        keep = sorted(members[0] for members in classes.values())
        by_head = {members[0]: members for members in classes.values()}
        groups = [sorted(v for m in by_head[h] for v in groups[m]) for h in keep]
        weights = [math.fsum(weights[m] for m in by_head[h]) for h in keep]
        graph = graph.induced(keep)


def merge(instance: Nmrf | PrunedNmrf) -> PrunedNmrf:
    """Fuse non-adjacent twins until none remain; the lower index represents."""
    pruned = instance if isinstance(instance, PrunedNmrf) else _identity(instance)
    graph, weights, groups = merge_twins(pruned.graph, pruned.weights)
    reps = pruned.representatives
    absorbed_by = {reps[v]: reps[members[0]] for members in groups for v in members}
    merge_map = tuple(absorbed_by[r] for r in pruned.merge_map)
    new_reps = tuple(reps[members[0]] for members in groups)
    return PrunedNmrf(pruned.base, graph, new_reps, merge_map, weights, pruned.minimal_flags)


def prune(nmrf: Nmrf, epsilon: float | None = None) -> PrunedNmrf:
    """MERGE(DISCONNECT(nmrf))."""
    return merge(disconnect(nmrf, epsilon))


def expand(pruned: PrunedNmrf, bits: Sequence[int]) -> np.ndarray:
    """Copy each representative's bit to all nodes it absorbed."""
    index = {r: i for i, r in enumerate(pruned.representatives)}
    return np.array([bits[index[r]] for r in pruned.merge_map], dtype=np.int8)


def postprocess_assignment(pruned: PrunedNmrf, bits: Sequence[int]) -> np.ndarray:
    """Map a feasible setting of the pruned graph to a feasible NMRF setting.

    Merged nodes copy their representative. Then, in each clique with more
    than one asserted node, only the heaviest stays asserted (lowest index on
    ties); the others can only be minimal configurations. Finally, a clique
    left with no asserted node (possible when the dropped node was the only
    one it had in agreement) asserts its heaviest node that conflicts with
    nothing already asserted, so the result always decodes.
    """
    bits = np.asarray(bits)
    if bits.shape != (pruned.n_nodes,):
        raise ValueError(f"expected {pruned.n_nodes} bits, got shape {bits.shape}")
    if not pruned.graph.is_stable(np.flatnonzero(bits)):
        raise ValueError("bits are not feasible on the pruned graph")
    full = expand(pruned, bits)
    base = pruned.base
    for c in range(base.n_cliques):
        on = [i for i in base.clique_nodes(c) if full[i]]
        if len(on) > 1:
            keep = max(on, key=lambda i: (base.nodes[i].weight, -i))
            for i in on:
                if i != keep:
                    full[i] = 0
    asserted = 0
    for i in np.flatnonzero(full):
        asserted |= 1 << int(i)
    for c in range(base.n_cliques):
        block = base.clique_nodes(c)
        if any(full[i] for i in block):
            continue
        free = [i for i in block if not base.graph.masks[i] & asserted]
        if not free:
            raise InvariantViolation(f"clique {c} has no configuration consistent with the setting")
        pick = max(free, key=lambda i: (base.nodes[i].weight, -i))
        full[pick] = 1
        asserted |= 1 << pick
    if not base.graph.is_stable(np.flatnonzero(full)):
        raise InvariantViolation("post-processed setting violates a nand edge of the original NMRF")
    return full
