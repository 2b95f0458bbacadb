import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perfectmap.errors import DecodeError, ModelError
from perfectmap.model import Factor, GraphicalModel, model_log_score, random_model, rescale_potentials
from perfectmap.nmrf import (
    build_nmrf,
    config_index,
    decode_assignment,
    decode_config,
    disagreement,
    encode_assignment,
    nmrf_objective,
    serialize_nmrf,
)
from perfectmap.perfection import parse_ug

from conftest import EPS, fig1_model, z_formula


@pytest.fixture
def fig1_nmrf():
    return build_nmrf(rescale_potentials(fig1_model(), EPS))


def _all_assignments(m):
    return itertools.product(*(range(c) for c in m.cardinalities))


class TestConfigIndex:
    @pytest.mark.parametrize("values, k", [((0, 0), 1), ((1, 0), 2), ((0, 1), 3), ((1, 1), 4)])
    def test_binary_pair(self, values, k):
        assert config_index((0, 1), (2, 2), values) == k
        assert decode_config((0, 1), (2, 2), k) == values

    def test_mixed_cardinalities(self):
        cards = (5, 3, 4, 2)
        assert config_index((1, 3), cards, (2, 1)) == 6
        assert decode_config((1, 3), cards, 6) == (2, 1)

    def test_out_of_range(self):
        with pytest.raises(ModelError):
            config_index((0,), (2,), (2,))
        with pytest.raises(ModelError):
            decode_config((0, 1), (2, 2), 5)
        with pytest.raises(ModelError):
            decode_config((0, 1), (2, 2), 0)

    @settings(max_examples=100, deadline=None)
    @given(cards=st.lists(st.integers(1, 4), min_size=1, max_size=5), data=st.data())
    def test_round_trip_is_a_bijection(self, cards, data):
        n = len(cards)
        scope = sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=1)))
        size = math.prod(cards[v] for v in scope)
        seen = set()
        for k in range(1, size + 1):
            vals = decode_config(scope, cards, k)
            assert config_index(scope, cards, vals) == k
            seen.add(vals)
        assert len(seen) == size


class TestDisagreement:
    def test_examples(self):
        cards = (2, 2, 2)
        assert disagreement((0, 1), 1, (1, 2), 1, cards) == 0
        assert disagreement((0, 1), 3, (1, 2), 1, cards) == 1
        for k in (1, 2):
            for l in (1, 2):
                assert disagreement((0,), k, (1,), l, cards) == 0

    @settings(max_examples=60, deadline=None)
    @given(cards=st.lists(st.integers(1, 3), min_size=1, max_size=4), data=st.data())
    def test_matches_literal_mod_floor_formula(self, cards, data):
        n = len(cards)
        c = sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=1)))
        d = sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=1)))
        kc = math.prod(cards[v] for v in c)
        kd = math.prod(cards[v] for v in d)
        for k in range(1, kc + 1):
            for l in range(1, kd + 1):
                z = disagreement(c, k, d, l, cards)
                assert z == z_formula(c, k, d, l, cards)
                assert z == disagreement(d, l, c, k, cards)
                if c == d:
                    assert z == int(k != l)


class TestBuild:
    def test_fig1_counts(self, fig1_nmrf):
        assert fig1_nmrf.n_nodes == 8
        assert fig1_nmrf.graph.n_edges == 20
        intra = sum(
            1 for u, v in fig1_nmrf.graph.edges()
            if fig1_nmrf.nodes[u].clique == fig1_nmrf.nodes[v].clique
        )
        assert intra == 12

    def test_fig1_edges_by_enumeration(self, fig1_nmrf):
        m = fig1_nmrf.model
        expected = set()
        for u, v in itertools.combinations(range(8), 2):
            a, b = fig1_nmrf.nodes[u], fig1_nmrf.nodes[v]
            if z_formula(m.factors[a.clique].scope, a.config, m.factors[b.clique].scope, b.config,
                         m.cardinalities):
                expected.add((u, v))
        assert set(fig1_nmrf.graph.edges()) == expected

    def test_single_clique_triangle(self):
        m = rescale_potentials(GraphicalModel((3,), (Factor((0,), [1, 2, 3]),)))
        nm = build_nmrf(m)
        assert nm.n_nodes == 3
        assert nm.graph.edges() == [(0, 1), (0, 2), (1, 2)]

    def test_unrescaled_model_rejected(self):
        with pytest.raises(ModelError, match="rescale"):
            build_nmrf(fig1_model())

    def test_weights_are_log_table_entries(self, fig1_nmrf):
        m = fig1_nmrf.model
        for node in fig1_nmrf.nodes:
            assert node.weight == math.log(m.factors[node.clique].table[node.config - 1])
            assert node.weight > 0

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
    def test_structure_on_random_models(self, seed, n):
        m = rescale_potentials(random_model(np.random.default_rng(seed), n, max_card=3, max_scope=2))
        nm = build_nmrf(m)
        assert nm.n_nodes == sum(math.prod(m.cardinalities[v] for v in f.scope) for f in m.factors)
        for c in range(nm.n_cliques):
            block = list(nm.clique_nodes(c))
            for u, v in itertools.combinations(block, 2):
                assert nm.graph.has_edge(u, v)
        for u, v in itertools.combinations(range(nm.n_nodes), 2):
            a, b = nm.nodes[u], nm.nodes[v]
            z = z_formula(m.factors[a.clique].scope, a.config, m.factors[b.clique].scope, b.config,
                          m.cardinalities)
            assert nm.graph.has_edge(u, v) == bool(z)

    def test_serialization_has_node_comments(self, fig1_nmrf):
        text = serialize_nmrf(fig1_nmrf)
        assert "# node 5 clique 1 k 2" in text
        g, w = parse_ug(text)
        assert g == fig1_nmrf.graph
        np.testing.assert_array_equal(w, fig1_nmrf.weights)


class TestEncodeDecode:
    def test_all_zero_assignment(self, fig1_nmrf):
        bits = encode_assignment(fig1_nmrf, (0, 0, 0))
        assert list(np.flatnonzero(bits)) == [fig1_nmrf.node_index(0, 1), fig1_nmrf.node_index(1, 1)]

    def test_mixed_assignment(self, fig1_nmrf):
        bits = encode_assignment(fig1_nmrf, (1, 0, 1))
        assert list(np.flatnonzero(bits)) == [fig1_nmrf.node_index(0, 2), fig1_nmrf.node_index(1, 3)]
        assert decode_assignment(fig1_nmrf, bits) == (1, 0, 1)

    def test_conflicting_shared_variable(self, fig1_nmrf):
        bits = np.zeros(8, dtype=np.int8)
        bits[fig1_nmrf.node_index(0, 2)] = 1
        bits[fig1_nmrf.node_index(1, 2)] = 1
        with pytest.raises(DecodeError, match="conflicting shared variable"):
            decode_assignment(fig1_nmrf, bits)

    def test_zero_bits(self, fig1_nmrf):
        with pytest.raises(DecodeError, match="clique with zero bits set"):
            decode_assignment(fig1_nmrf, np.zeros(8, dtype=np.int8))

    def test_multiple_bits(self, fig1_nmrf):
        bits = encode_assignment(fig1_nmrf, (0, 0, 0))
        bits[fig1_nmrf.node_index(0, 2)] = 1
        with pytest.raises(DecodeError, match="clique with multiple bits set"):
            decode_assignment(fig1_nmrf, bits)

    def test_invalid_assignment(self, fig1_nmrf):
        with pytest.raises(ModelError):
            encode_assignment(fig1_nmrf, (0, 2, 0))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
    def test_round_trip_feasibility_and_score(self, seed, n):
        m = rescale_potentials(random_model(np.random.default_rng(seed), n, max_card=3))
        nm = build_nmrf(m)
        for a in _all_assignments(m):
            bits = encode_assignment(nm, a)
            assert nm.graph.is_stable(np.flatnonzero(bits))
            for c in range(nm.n_cliques):
                assert sum(bits[i] for i in nm.clique_nodes(c)) == 1
            assert decode_assignment(nm, bits) == a
            assert nmrf_objective(nm, bits) == pytest.approx(model_log_score(m, a), abs=1e-9)


class TestObjective:
    def test_all_zero(self, fig1_nmrf):
        assert nmrf_objective(fig1_nmrf, np.zeros(8)) == 0.0

    def test_adjacent_pair_is_minus_infinity(self, fig1_nmrf):
        bits = np.zeros(8)
        bits[[0, 1]] = 1
        assert nmrf_objective(fig1_nmrf, bits) == -math.inf

    def test_length_mismatch(self, fig1_nmrf):
        with pytest.raises(DecodeError):
            nmrf_objective(fig1_nmrf, np.zeros(7))

    def test_maximizer_asserts_one_node_per_clique(self):
        # every one of the 2^N settings is scored; N <= 20
        rng = np.random.default_rng(8)
        checked = 0
        while checked < 15:
            m = rescale_potentials(random_model(rng, 3, max_card=2))
            nm = build_nmrf(m)
            if nm.n_nodes > 14:
                continue
            checked += 1
            n = nm.n_nodes
            subsets = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(np.int8)
            scores = np.array([nmrf_objective(nm, s) for s in subsets])
            best = subsets[int(np.argmax(scores))]
            for c in range(nm.n_cliques):
                assert sum(best[i] for i in nm.clique_nodes(c)) == 1
            a = decode_assignment(nm, best)
            assert scores.max() == pytest.approx(max(model_log_score(m, x) for x in _all_assignments(m)),
                                                 abs=1e-9)
            assert model_log_score(m, a) == pytest.approx(scores.max(), abs=1e-9)
