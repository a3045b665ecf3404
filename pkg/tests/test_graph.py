import itertools

import numpy as np
import pytest

from mlggm import (
    ChainGraphSpec,
    DIRECTED,
    UNDIRECTED,
    candidate_edges,
    cumulative,
    implied_independencies,
    validate,
    vertex_context,
)
from mlggm.errors import (
    BackwardDirectedEdgeError,
    CrossLayerUndirectedEdgeError,
    IndexOutOfRangeError,
    LabelOrderViolationError,
    LayerCoverageError,
    LayerOverlapError,
)


def two_layer_toy() -> ChainGraphSpec:
    # layers {1,2} and {3,4}; 1->3, 2->4, 3-4
    return ChainGraphSpec(
        p=4,
        layers=((1, 2), (3, 4)),
        directed_edges=frozenset({(1, 3), (2, 4)}),
        undirected_edges=frozenset({(3, 4)}),
    )


class TestValidate:
    def test_valid_toy(self):
        spec = two_layer_toy()
        assert validate(spec) is spec

    def test_backward_directed_edge(self):
        spec = ChainGraphSpec(p=4, layers=((1, 2), (3, 4)), directed_edges={(3, 1)})
        with pytest.raises(BackwardDirectedEdgeError):
            validate(spec)

    def test_within_layer_directed_edge_rejected(self):
        spec = ChainGraphSpec(p=4, layers=((1, 2), (3, 4)), directed_edges={(1, 2)})
        with pytest.raises(BackwardDirectedEdgeError):
            validate(spec)

    def test_cross_layer_undirected_edge(self):
        spec = ChainGraphSpec(p=4, layers=((1, 2), (3, 4)), undirected_edges={(1, 3)})
        with pytest.raises(CrossLayerUndirectedEdgeError):
            validate(spec)

    def test_layer_overlap(self):
        spec = ChainGraphSpec(p=4, layers=((1, 2), (2, 3, 4)))
        with pytest.raises(LayerOverlapError):
            validate(spec)

    def test_layer_coverage(self):
        spec = ChainGraphSpec(p=5, layers=((1, 2), (3, 4)))
        with pytest.raises(LayerCoverageError):
            validate(spec)

    def test_label_order_violation(self):
        spec = ChainGraphSpec(p=4, layers=((1, 3), (2, 4)))
        with pytest.raises(LabelOrderViolationError):
            validate(spec)

    def test_non_consecutive_directed_edges_accepted(self):
        # the model searches all preceding layers, not only the previous one
        spec = ChainGraphSpec(
            p=6, layers=((1, 2), (3, 4), (5, 6)), directed_edges={(1, 5)}
        )
        validate(spec)

    def test_undirected_pairs_normalized(self):
        spec = ChainGraphSpec(p=4, layers=((1, 2), (3, 4)), undirected_edges={(4, 3)})
        assert spec.undirected_edges == frozenset({(3, 4)})


class TestCumulative:
    def test_first_layer(self):
        assert cumulative(two_layer_toy(), 1) == frozenset({1, 2})

    def test_all_layers(self):
        assert cumulative(two_layer_toy(), 2) == frozenset({1, 2, 3, 4})

    def test_zero_is_empty(self):
        assert cumulative(two_layer_toy(), 0) == frozenset()

    def test_out_of_range(self):
        with pytest.raises(IndexOutOfRangeError):
            cumulative(two_layer_toy(), 3)

    def test_strictly_increasing(self):
        spec = ChainGraphSpec(p=6, layers=((1, 2), (3,), (4, 5, 6)))
        for l in range(spec.q):
            assert cumulative(spec, l) < cumulative(spec, l + 1)


class TestVertexContext:
    def test_partition_of_cumulative(self):
        spec = validate(ChainGraphSpec(p=6, layers=((1, 2), (3, 4), (5, 6))))
        for v in range(1, 7):
            ctx = vertex_context(spec, v)
            parents = set(ctx.parents_candidates)
            neighbors = set(ctx.neighbors_candidates)
            assert parents & neighbors == set()
            k = spec.layer_of(v)
            assert parents | neighbors | {v} == set(cumulative(spec, k))


class TestImpliedIndependencies:
    def test_toy_missing_directed(self):
        stmts = {(s.u, s.v): s.given for s in implied_independencies(two_layer_toy())}
        # missing 2->3 is conditioned on the remaining earlier-layer variable
        assert stmts[(2, 3)] == frozenset({1})
        assert stmts[(1, 4)] == frozenset({2})
        # missing within-layer pair 1-2 conditions on the rest of its cumulative
        assert stmts[(1, 2)] == frozenset()
        assert len(stmts) == 3

    def test_complete_graph_empty(self):
        spec = ChainGraphSpec(
            p=4,
            layers=((1, 2), (3, 4)),
            directed_edges={(1, 3), (1, 4), (2, 3), (2, 4)},
            undirected_edges={(1, 2), (3, 4)},
        )
        assert implied_independencies(validate(spec)) == []

    def test_single_layer_empty_graph(self):
        spec = validate(ChainGraphSpec(p=3, layers=((1, 2, 3),)))
        stmts = implied_independencies(spec)
        assert len(stmts) == 3
        for s in stmts:
            assert s.given == frozenset({1, 2, 3}) - {s.u, s.v}

    def test_count_formula_on_random_specs(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            q = rng.integers(1, 4)
            sizes = rng.integers(1, 4, size=q)
            p = int(sizes.sum())
            layers, start = [], 1
            for s in sizes:
                layers.append(tuple(range(start, start + int(s))))
                start += int(s)
            universe = candidate_edges(layers)
            keep = [e for e in universe if rng.random() < 0.5]
            spec = validate(
                ChainGraphSpec(
                    p=p,
                    layers=tuple(layers),
                    directed_edges={(e.src, e.dst) for e in keep if e.kind == DIRECTED},
                    undirected_edges={(e.src, e.dst) for e in keep if e.kind == UNDIRECTED},
                )
            )
            assert len(implied_independencies(spec)) == len(universe) - len(keep)


class TestCandidateEdges:
    def test_universe_composition(self):
        layers = ((1, 2), (3,), (4, 5))
        edges = candidate_edges(layers)
        undir = [e for e in edges if e.kind == UNDIRECTED]
        direc = [e for e in edges if e.kind == DIRECTED]
        assert {(e.src, e.dst) for e in undir} == {(1, 2), (4, 5)}
        # all earlier->later ordered pairs, including the non-consecutive ones
        assert len(direc) == 2 * 1 + 2 * 2 + 1 * 2
        assert all(e.src < e.dst for e in edges)

    def test_no_duplicates(self):
        layers = ((1, 2, 3), (4, 5), (6,))
        edges = candidate_edges(layers)
        assert len(edges) == len(set(edges))
