import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lengthclust import (
    ALL_ESTIMATORS,
    ExtendedHierarchy,
    HeightFunction,
    Hierarchy,
    enumerate_hierarchies,
    extended_length_cost,
    gamma_cost,
    hierarchy_from_ultrametric,
    length_cost,
    optimal_hierarchy_bruteforce,
    random_hierarchy,
    random_ultrametric,
    total_length,
    unit_dissimilarity,
)
from lengthclust.core import enumerate_shapes
from lengthclust.errors import LeafMismatchError, MTooSmallError, UnknownKindError
from lengthclust.objectives import GammaWeight, _ShapeCoster, cost
from conftest import random_matrix
from oracles import all_trees, as_dict, gamma_tree_cost, tree_cost

KINDS = ["mean", "min", "max", "median", "wpgma"]


class TestLengthCost:
    @pytest.mark.parametrize("kind", KINDS)
    def test_u4_associated_tree(self, u4, balanced, kind):
        assert length_cost(balanced, u4, kind).total == 7.0

    def test_u4_crossed_mean(self, u4, crossed):
        report = length_cost(crossed, u4, "mean")
        assert report.total == 10.75
        assert sorted(t.value for t in report.terms) == [2.75, 4.0, 4.0]

    def test_report_shape(self, u4, balanced):
        d = length_cost(balanced, u4, "mean").to_dict()
        assert d["total"] == 7.0
        root = [p for p in d["per_vertex"] if len(p["leaves_left"]) == 2]
        assert root == [{"leaves_left": ["1", "2"], "leaves_right": ["3", "4"], "value": 4.0}]

    def test_postorder_terms(self, u4, balanced):
        report = length_cost(balanced, u4, "min")
        assert report.terms[-1].vertex == balanced.root

    def test_leaf_mismatch(self, u4):
        with pytest.raises(LeafMismatchError):
            length_cost(Hierarchy.from_nested(("1", "2")), u4, "mean")

    def test_unknown_estimator(self, u4, balanced):
        with pytest.raises(UnknownKindError):
            length_cost(balanced, u4, "ward")

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_unit_dissimilarity_is_neutral(self, kind, n):
        D = unit_dissimilarity(n)
        totals = {length_cost(T, D, kind).total for T in enumerate_hierarchies(D.labels)}
        assert totals == {float(n - 1)}

    @given(st.integers(2, 9), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_matches_oracle(self, n, seed):
        rng = np.random.default_rng(seed)
        D = random_matrix(n, rng)
        T = random_hierarchy(D.labels, rng)
        d = as_dict(D)
        for kind in KINDS:
            assert length_cost(T, D, kind).total == pytest.approx(tree_cost(kind, T.to_nested(), d), rel=1e-12)

    @pytest.mark.parametrize("kind", KINDS)
    def test_every_tree_on_five_matches_oracle(self, kind):
        D = random_matrix(5, np.random.default_rng(11))
        d = as_dict(D)
        for t in all_trees(D.labels):
            T = Hierarchy.from_nested(t, labels=D.labels)
            assert length_cost(T, D, kind).total == pytest.approx(tree_cost(kind, t, d), rel=1e-12)


class TestGamma:
    def test_dasgupta_u4(self, u4, balanced):
        assert gamma_cost(balanced, u4, "dasgupta").total == -70.0

    def test_weights(self):
        assert GammaWeight.parse("dasgupta")(2, 3) == -5.0
        assert GammaWeight.parse("inverse_product")(2, 4) == 0.125

    @given(st.integers(2, 9), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_inverse_product_is_mean_length(self, n, seed):
        rng = np.random.default_rng(seed)
        D = random_matrix(n, rng)
        T = random_hierarchy(D.labels, rng)
        assert gamma_cost(T, D, "inverse_product").total == pytest.approx(length_cost(T, D, "mean").total, rel=1e-12)

    @given(st.integers(2, 9), st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_matches_oracle(self, n, seed):
        rng = np.random.default_rng(seed)
        D = random_matrix(n, rng)
        T = random_hierarchy(D.labels, rng)
        for g in ("dasgupta", "inverse_product"):
            assert gamma_cost(T, D, g).total == pytest.approx(gamma_tree_cost(g, T.to_nested(), as_dict(D)), rel=1e-12)

    def test_dispatch(self, u4, balanced):
        assert cost(balanced, u4, "dasgupta").total == -70.0
        assert cost(balanced, u4, "median").total == 7.0


class TestTotalLength:
    def test_u4(self, u4):
        T, h = hierarchy_from_ultrametric(u4)
        assert total_length(T, h, 5.0) == 12.0

    def test_m_must_exceed_root(self, u4):
        T, h = hierarchy_from_ultrametric(u4)
        with pytest.raises(MTooSmallError):
            total_length(T, h, 4.0)

    @given(st.integers(2, 20), st.integers(0, 2**32 - 1), st.floats(0.5, 100.0))
    @settings(max_examples=60, deadline=None)
    def test_is_m_plus_mean_length(self, n, seed, extra):
        D = random_ultrametric(n, seed)
        T, h = hierarchy_from_ultrametric(D)
        M = h.max() + extra
        assert total_length(T, h, M) == pytest.approx(M + length_cost(T, D, "mean").total, rel=1e-9)
        assert total_length(T, h, M) == pytest.approx(M + math.fsum(h.heights.values()), rel=1e-12)


class TestExtendedCost:
    def test_muted_vertices_are_free(self, u4):
        # ((1 muted), (2)) under 8; 3 and 4 joined at 9; root 10
        E = ExtendedHierarchy(
            10,
            {10: (8, 9), 8: (6, 7), 6: (0,), 7: (1,), 9: (2, 3)},
            {0: "1", 1: "2", 2: "3", 3: "4"},
        )
        report = extended_length_cost(E, u4, "mean")
        assert report.total == 7.0
        assert set(report.per_vertex) == {8, 9, 10}

    def test_plain_hierarchy_agrees(self, u4, crossed):
        for e in ALL_ESTIMATORS:
            assert extended_length_cost(crossed.as_extended(), u4, e).total == length_cost(crossed, u4, e).total

    def test_subset_of_leaves(self, u4):
        E = ExtendedHierarchy(5, {5: (4, 2), 4: (0,)}, {0: "1", 2: "3"})
        assert extended_length_cost(E, u4, "max").total == 4.0


class TestBruteForce:
    @pytest.mark.parametrize("kind", KINDS)
    def test_u4(self, u4, kind):
        res = optimal_hierarchy_bruteforce(u4, kind)
        assert res.report.total == 7.0 and res.evaluated == 15
        if kind == "min":
            # single-linkage heights coincide with the ultrametric on most shapes
            assert res.ties > 1
        else:
            assert res.hierarchy.same_topology(Hierarchy.from_nested((("1", "2"), ("3", "4"))))
            assert res.ties == 1

    def test_unit_all_tie(self, unit4):
        res = optimal_hierarchy_bruteforce(unit4, "mean")
        assert (res.report.total, res.ties, res.index) == (3.0, 15, 0)

    @pytest.mark.parametrize("kind", KINDS + ["dasgupta", "inverse_product"])
    @pytest.mark.parametrize("seed", range(4))
    def test_matches_oracle(self, kind, seed):
        D = random_matrix(6, np.random.default_rng(seed))
        d = as_dict(D)
        if kind in ("dasgupta", "inverse_product"):
            best = min(gamma_tree_cost(kind, t, d) for t in all_trees(D.labels))
        else:
            best = min(tree_cost(kind, t, d) for t in all_trees(D.labels))
        res = optimal_hierarchy_bruteforce(D, kind)
        assert res.report.total == pytest.approx(best, rel=1e-12)

    @pytest.mark.parametrize("kind", KINDS)
    def test_memoized_costs_match_direct(self, kind):
        D = random_matrix(6, np.random.default_rng(3))
        coster = _ShapeCoster(D, cost.__globals__["_parse_objective"](kind))
        for shape, T in zip(enumerate_shapes(6), enumerate_hierarchies(D.labels)):
            assert coster(shape) == pytest.approx(length_cost(T, D, kind).total, rel=1e-12)

    def test_returned_tree_is_first_minimizer(self):
        D = random_matrix(5, np.random.default_rng(9))
        res = optimal_hierarchy_bruteforce(D, "min")
        totals = [length_cost(T, D, "min").total for T in enumerate_hierarchies(D.labels)]
        first = next(k for k, t in enumerate(totals) if t <= min(totals) + 1e-9)
        assert res.index == first
