import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perfectmap.errors import FormatError, GuardError, ModelError
from perfectmap.perfection import (
    BERGE_FAMILIES,
    UndirectedGraph,
    complement,
    complete_bipartite,
    complete_graph,
    cycle_graph,
    empty_graph,
    find_odd_hole,
    gen_family,
    is_berge,
    is_hole,
    line_graph,
    parse_ug,
    path_graph,
    random_graph,
    replicate_vertex,
    serialize_ug,
)


def has_odd_hole_brute(g: UndirectedGraph) -> bool:
    """Odd hole by subset enumeration: an odd set of >= 5 vertices inducing a cycle."""
    for size in range(5, g.n + 1, 2):
        for vs in itertools.combinations(range(g.n), size):
            sub = g.induced(vs)
            if all(sub.degree(v) == 2 for v in range(size)):
                # 2-regular; a cycle iff connected
                seen, stack = {0}, [0]
                while stack:
                    for u in sub.neighbors(stack.pop()):
                        if u not in seen:
                            seen.add(u)
                            stack.append(u)
                if len(seen) == size:
                    return True
    return False


def to_nx(g: UndirectedGraph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    return h


graphs = st.integers(1, 9).flatmap(
    lambda n: st.lists(st.booleans(), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2).map(
        lambda flips: UndirectedGraph.from_edges(
            n, [e for e, f in zip(itertools.combinations(range(n), 2), flips) if f]
        )
    )
)


class TestGraphBasics:
    def test_rejects_self_loop_and_asymmetry(self):
        with pytest.raises(ValueError):
            UndirectedGraph.from_edges(2, [(1, 1)])
        with pytest.raises(ValueError):
            UndirectedGraph(2, (0b10, 0))

    def test_numpy_indices_accepted(self):
        g = path_graph(3)
        assert g.is_stable(np.array([0, 2]))
        assert not g.is_stable(np.array([0, 1]))

    def test_matrix_round_trip(self):
        g = random_graph(7, 0.4, seed=2)
        assert UndirectedGraph.from_matrix(g.adjacency_matrix()) == g


class TestComplement:
    @settings(max_examples=80, deadline=None)
    @given(g=graphs)
    def test_involution(self, g):
        assert complement(complement(g)) == g

    def test_c5_is_self_complementary(self):
        c = complement(cycle_graph(5))
        assert all(c.degree(v) == 2 for v in range(5))
        hole = find_odd_hole(c)
        assert hole is not None and len(hole) == 5

    def test_k4(self):
        assert complement(complete_graph(4)) == empty_graph(4)


class TestLineGraph:
    def test_path(self):
        lg, edges = line_graph(path_graph(3))
        assert lg.n == 2 and lg.edges() == [(0, 1)]
        assert edges == [(0, 1), (1, 2)]

    def test_triangle(self):
        lg, _ = line_graph(complete_graph(3))
        assert lg == complete_graph(3)

    def test_k23_counts(self):
        g = complete_bipartite(2, 3)
        lg, edges = line_graph(g)
        # two line-graph vertices meet once per shared endpoint: sum of C(deg, 2)
        expected = sum(g.degree(v) * (g.degree(v) - 1) // 2 for v in range(g.n))
        assert (lg.n, lg.n_edges) == (6, 9) == (len(edges), expected)

    @settings(max_examples=50, deadline=None)
    @given(g=graphs)
    def test_against_networkx(self, g):
        lg, edges = line_graph(g)
        ref = nx.line_graph(to_nx(g))
        mapped = {frozenset((edges[u], edges[v])) for u, v in lg.edges()}
        assert mapped == {frozenset((tuple(sorted(a)), tuple(sorted(b)))) for a, b in ref.edges()}


class TestOddHole:
    def test_c5(self):
        assert find_odd_hole(cycle_graph(5)) == [0, 1, 2, 3, 4]

    def test_c6(self):
        assert find_odd_hole(cycle_graph(6)) is None

    def test_c7_with_short_chord(self):
        # the chord 0-2 leaves the triangle 0,1,2 and the chordless 6-cycle 0,2,3,4,5,6
        g = UndirectedGraph.from_edges(7, [(i, (i + 1) % 7) for i in range(7)] + [(0, 2)])
        assert g.n_edges == 8
        assert find_odd_hole(g) is None
        assert not has_odd_hole_brute(g)
        assert is_hole(g, [0, 2, 3, 4, 5, 6])

    def test_c7_and_its_complement(self):
        assert find_odd_hole(cycle_graph(7)) is not None
        # the complement of C7 has no odd hole; its complement (C7) does
        res = is_berge(complement(cycle_graph(7)))
        assert not res and res.side == "complement"
        assert is_hole(cycle_graph(7), res.witness)

    def test_is_hole_rejects_bad_witnesses(self):
        g = cycle_graph(5)
        assert not is_hole(g, [0, 1, 2, 3])
        assert not is_hole(g, [0, 2, 4, 1, 3])
        assert not is_hole(g, [0, 1, 2, 3, 3])

    @settings(max_examples=150, deadline=None)
    @given(g=graphs)
    def test_matches_subset_enumeration(self, g):
        hole = find_odd_hole(g)
        assert (hole is not None) == has_odd_hole_brute(g)
        if hole is not None:
            assert is_hole(g, hole) and len(hole) % 2 == 1

    def test_guard(self):
        with pytest.raises(GuardError):
            find_odd_hole(empty_graph(30))
        assert find_odd_hole(empty_graph(30), limit=None) is None

    def test_guard_override(self, monkeypatch):
        monkeypatch.setenv("PERFECTMAP_GUARD_OVERRIDE", "1")
        assert find_odd_hole(empty_graph(30)) is None


class TestBerge:
    def test_c5(self):
        res = is_berge(cycle_graph(5))
        assert not res
        assert res.side == "graph" and res.witness == (0, 1, 2, 3, 4)

    @pytest.mark.parametrize("seed", range(20))
    def test_bipartite_graphs(self, seed):
        assert is_berge(gen_family("bipartite", 12, 0.5, seed))

    @settings(max_examples=100, deadline=None)
    @given(g=graphs)
    def test_symmetric_under_complement(self, g):
        assert bool(is_berge(g)) == bool(is_berge(complement(g)))

    @settings(max_examples=60, deadline=None)
    @given(g=graphs)
    def test_agrees_with_networkx_chordless_cycles(self, g):
        def odd_hole(h):
            return any(len(c) >= 5 and len(c) % 2 for c in nx.chordless_cycles(to_nx(h)))

        assert bool(is_berge(g)) == (not odd_hole(g) and not odd_hole(complement(g)))


class TestReplication:
    def test_small_cases(self):
        assert replicate_vertex(UndirectedGraph(1, (0,)), 0) == complete_graph(2)
        for v in range(3):
            assert replicate_vertex(complete_graph(3), v) == complete_graph(4)

    def test_neighbourhood(self):
        g = random_graph(8, 0.5, seed=4)
        h = replicate_vertex(g, 3)
        assert h.n == 9
        assert set(h.neighbors(8)) == set(g.neighbors(3)) | {3}
        assert h.induced(range(8)) == g

    def test_out_of_range(self):
        with pytest.raises(ModelError):
            replicate_vertex(complete_graph(3), 3)


class TestFamilies:
    def test_complete_bipartite_2_2(self):
        g = gen_family("bipartite", (2, 2), p=1.0, seed=123)
        assert g == complete_bipartite(2, 2)
        assert sorted(g.degree(v) for v in range(4)) == [2, 2, 2, 2]

    @pytest.mark.parametrize("family", BERGE_FAMILIES)
    def test_berge_families(self, family):
        size = 8 if "line" in family else 14
        for seed in range(50):
            g = gen_family(family, size, 0.5, seed)
            assert g.n <= 16
            assert is_berge(g), (family, seed)

    def test_random_family_hits_non_berge(self):
        assert any(not is_berge(gen_family("random", 10, 0.5, s)) for s in range(100))

    def test_deterministic(self):
        for fam in BERGE_FAMILIES + ("random",):
            assert gen_family(fam, 8, 0.4, 9) == gen_family(fam, 8, 0.4, 9)

    @pytest.mark.parametrize("args", [("nope", 5), ("random", 0), ("bipartite", 1)])
    def test_invalid_parameters(self, args):
        with pytest.raises(ModelError):
            gen_family(*args)

    def test_invalid_probability(self):
        with pytest.raises(ModelError):
            gen_family("random", 5, p=1.5)


class TestUgFormat:
    def test_round_trip_weighted(self):
        g = random_graph(6, 0.5, seed=1)
        w = np.random.default_rng(1).random(6)
        g2, w2 = parse_ug(serialize_ug(g, w))
        assert g2 == g
        np.testing.assert_array_equal(w2, w)

    def test_unweighted(self):
        g, w = parse_ug("UG 1\nnodes 3\nedges 1\n0 2\n")
        assert w is None and g.edges() == [(0, 2)]

    @pytest.mark.parametrize(
        "text, line",
        [
            ("UG 1\nnodes 3\nedges 1\n2 0\n", 4),
            ("UG 1\nnodes 3\nedges 1\n0 3\n", 4),
            ("UG 1\nnodes 3\nweights 1 2\nedges 0\n", 3),
            ("UX 1\nnodes 3\nedges 0\n", 1),
        ],
    )
    def test_errors(self, text, line):
        with pytest.raises(FormatError) as err:
            parse_ug(text)
        assert err.value.line == line
