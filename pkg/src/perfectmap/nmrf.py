"""Conversion of a graphical model into a nand Markov random field (NMRF).

Every (clique, configuration) pair becomes a binary node weighted by the
log-potential of that configuration. Two nodes are joined by a nand edge
exactly when their configurations disagree on a shared variable, so MAP
inference becomes a maximum-weight stable set problem on the node graph.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from perfectmap.errors import DecodeError, ModelError
from perfectmap.model import GraphicalModel, validate_assignment
from perfectmap.perfection import UndirectedGraph, serialize_ug


def config_index(scope: Sequence[int], cards: Sequence[int], values: Sequence[int]) -> int:
    """1-based mixed-radix index of a scope setting, lowest-index variable fastest.

    ``cards`` is indexed by variable id (the model's cardinality list);
    ``values`` holds one setting per scope variable, in scope order.
    """
    if len(values) != len(scope):
        raise ModelError(f"{len(values)} settings for a scope of size {len(scope)}")
    k, stride = 1, 1
    for var, x in zip(scope, values):
        if not 0 <= x < cards[var]:
            raise ModelError(f"setting {x} of variable {var} outside [0, {cards[var]})")
        k += x * stride
        stride *= cards[var]
    return k


def decode_config(scope: Sequence[int], cards: Sequence[int], k: int) -> tuple[int, ...]:
    """Inverse of :func:`config_index`."""
    size = math.prod(cards[v] for v in scope)
    if not 1 <= k <= size:
        raise ModelError(f"configuration index {k} outside [1, {size}]")
    rest = k - 1
    out = []
    for var in scope:
        rest, x = divmod(rest, cards[var])
        out.append(x)
    return tuple(out)


def disagreement(
    c_scope: Sequence[int], c_k: int, d_scope: Sequence[int], d_l: int, cards: Sequence[int]
) -> int:
    """1 if configurations (c, k) and (d, l) set some shared variable differently."""
    cx = dict(zip(c_scope, decode_config(c_scope, cards, c_k)))
    dx = dict(zip(d_scope, decode_config(d_scope, cards, d_l)))
    return int(any(cx[v] != dx[v] for v in cx.keys() & dx.keys()))


@dataclass(frozen=True)
class NmrfNode:
    clique: int
    config: int
    weight: float


@dataclass(frozen=True, eq=False)
class Nmrf:
    model: GraphicalModel
    nodes: tuple[NmrfNode, ...]
    graph: UndirectedGraph
    clique_offsets: tuple[int, ...]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_cliques(self) -> int:
        return len(self.clique_offsets) - 1

    @property
    def weights(self) -> np.ndarray:
        return np.array([node.weight for node in self.nodes])

    @property
    def epsilon(self) -> float | None:
        return self.model.epsilon

    def clique_nodes(self, c: int) -> range:
        return range(self.clique_offsets[c], self.clique_offsets[c + 1])

    def node_index(self, clique: int, config: int) -> int:
        return self.clique_offsets[clique] + config - 1


def build_nmrf(m: GraphicalModel) -> Nmrf:
    """Build the NMRF of a rescaled model (all potentials > 1)."""
    cards = m.cardinalities
    nodes: list[NmrfNode] = []
    offsets = [0]
    settings: list[dict[int, int]] = []
    for c, f in enumerate(m.factors):
        for k, value in enumerate(f.table, start=1):
            w = math.log(value)
            if not w > 0:
                raise ModelError(
                    f"factor {c} entry {k} has log-weight {w} <= 0; rescale the model first"
                )
            nodes.append(NmrfNode(c, k, w))
            settings.append(dict(zip(f.scope, decode_config(f.scope, cards, k))))
        offsets.append(len(nodes))

    # Per variable and value, the mask of nodes whose configuration fixes that variable
    # to that value; a node conflicts with every other node that fixes one of its
    # variables to a different value.
    n = len(nodes)
    fixes: dict[tuple[int, int], int] = {}
    for i, s in enumerate(settings):
        for var, x in s.items():
            fixes[(var, x)] = fixes.get((var, x), 0) | (1 << i)
    masks = []
    for i, s in enumerate(settings):
        mask = 0
        for var, x in s.items():
            for y in range(cards[var]):
                if y != x:
                    mask |= fixes.get((var, y), 0)
        masks.append(mask)
    graph = UndirectedGraph(n, tuple(masks))
    return Nmrf(m, tuple(nodes), graph, tuple(offsets))


def encode_assignment(nmrf: Nmrf, a: Sequence[int]) -> np.ndarray:
    """Bit vector with one asserted node per clique, at the configuration ``a`` selects."""
    m = nmrf.model
    a = validate_assignment(m, a)
    bits = np.zeros(nmrf.n_nodes, dtype=np.int8)
    for c, f in enumerate(m.factors):
        k = config_index(f.scope, m.cardinalities, [a[v] for v in f.scope])
        bits[nmrf.node_index(c, k)] = 1
    return bits


def decode_assignment(nmrf: Nmrf, bits: Sequence[int]) -> tuple[int, ...]:
    """Assignment encoded by ``bits``; requires exactly one asserted node per clique.

    Variables outside every scope cannot occur (each variable is covered by
    construction in the generators); if one does, it decodes to 0.
    """
    m = nmrf.model
    bits = np.asarray(bits)
    if bits.shape != (nmrf.n_nodes,):
        raise DecodeError(f"expected {nmrf.n_nodes} bits, got shape {bits.shape}")
    values: dict[int, int] = {}
    for c, f in enumerate(m.factors):
        on = [i for i in nmrf.clique_nodes(c) if bits[i]]
        if len(on) != 1:
            kind = "zero" if not on else "multiple"
            raise DecodeError(f"clique with {kind} bits set: clique {c} has {len(on)} asserted nodes")
        k = nmrf.nodes[on[0]].config
        for var, x in zip(f.scope, decode_config(f.scope, m.cardinalities, k)):
            if values.setdefault(var, x) != x:
                raise DecodeError(f"conflicting shared variable {var}: {values[var]} vs {x}")
    return tuple(values.get(v, 0) for v in range(m.n_vars))


def stable_set_objective(graph: UndirectedGraph, weights: Sequence[float], bits: Sequence[int]) -> float:
    """Sum of weights over asserted vertices, or ``-inf`` if an edge has both ends asserted."""
    chosen = [i for i, b in enumerate(bits) if b]
    if not graph.is_stable(chosen):
        return -math.inf
    return float(sum(weights[i] for i in chosen))


def nmrf_objective(nmrf: Nmrf, bits: Sequence[int]) -> float:
    """Log of the NMRF score: the weight of a nand-feasible setting, else ``-inf``."""
    if len(bits) != nmrf.n_nodes:
        raise DecodeError(f"expected {nmrf.n_nodes} bits, got {len(bits)}")
    return stable_set_objective(nmrf.graph, [n.weight for n in nmrf.nodes], bits)


def serialize_nmrf(nmrf: Nmrf) -> str:
    """UG text of the NMRF graph with weights and a comment per node."""
    comments = [f"node {i} clique {nd.clique} k {nd.config}" for i, nd in enumerate(nmrf.nodes)]
    return serialize_ug(nmrf.graph, [nd.weight for nd in nmrf.nodes], comments)
