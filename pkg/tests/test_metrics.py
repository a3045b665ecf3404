import numpy as np
import pytest

from mlggm import (
    ChainGraphSpec,
    Confusion,
    DIRECTED,
    UNDIRECTED,
    Edge,
    candidate_edges,
    confusion,
    mcc,
    mcc_curve,
    roc,
    validate,
)
from mlggm.errors import DegenerateTruthError, EdgeOutsideUniverseError


@pytest.fixture
def spec():
    return validate(
        ChainGraphSpec(
            p=5,
            layers=((1, 2), (3, 4, 5)),
            directed_edges={(1, 3), (2, 5)},
            undirected_edges={(3, 4)},
        )
    )


def truth(spec):
    return set(spec.edges())


class TestConfusion:
    def test_perfect(self, spec):
        c = confusion(truth(spec), truth(spec), spec)
        assert c.fp == 0 and c.fn == 0
        assert c.tp == 3
        assert c.tp + c.tn + c.fp + c.fn == len(candidate_edges(spec.layers))

    def test_empty_estimate(self, spec):
        c = confusion([], truth(spec), spec)
        assert c.tp == 0 and c.fp == 0
        assert c.fn == len(truth(spec))

    def test_kind_must_match(self, spec):
        # a within-layer pair selected as directed must not match the
        # undirected truth edge; it lands outside the universe and counts as
        # an extra false positive
        c = confusion([Edge(3, 4, DIRECTED)], truth(spec), spec)
        assert c.tp == 0
        assert c.fp == 1
        assert c.fn == len(truth(spec))

    def test_reversed_orientation_counts_fp_plus_fn(self):
        # exhaustive check on a three-vertex, two-layer instance
        s = validate(ChainGraphSpec(p=3, layers=((1,), (2, 3)), directed_edges={(1, 2)}))
        c = confusion([Edge(2, 1, DIRECTED)], truth(s), s)
        assert (c.tp, c.fp, c.fn) == (0, 1, 1)
        # universe: 1->2, 1->3, 2-3; the reversed estimate adds one extra slot
        assert c.tp + c.tn + c.fp + c.fn == 3 + 1

    def test_truth_outside_universe_rejected(self, spec):
        with pytest.raises(EdgeOutsideUniverseError):
            confusion([], {Edge(3, 1, DIRECTED)}, spec)

    def test_unknown_vertex_rejected(self, spec):
        with pytest.raises(EdgeOutsideUniverseError):
            confusion([Edge(1, 9, DIRECTED)], truth(spec), spec)


class TestMcc:
    def test_perfect_classification(self, spec):
        c = confusion(truth(spec), truth(spec), spec)
        assert mcc(c) == 1.0

    def test_all_ones_is_zero(self):
        assert mcc(Confusion(tp=1, tn=1, fp=1, fn=1)) == 0.0

    def test_zero_denominator_convention(self):
        assert mcc(Confusion(tp=0, tn=5, fp=0, fn=3)) == 0.0

    def test_range(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            tp, tn, fp, fn = rng.integers(0, 20, size=4)
            val = mcc(Confusion(tp=int(tp), tn=int(tn), fp=int(fp), fn=int(fn)))
            assert -1.0 <= val <= 1.0


def random_scores(spec, seed, ties=False):
    rng = np.random.default_rng(seed)
    universe = candidate_edges(spec.layers)
    if ties:
        vals = rng.integers(0, 4, size=len(universe)) / 3.0
    else:
        vals = rng.random(len(universe))
    scores = dict(zip(universe, vals))
    truth_edges = {e for e in universe if rng.random() < 0.4}
    if not truth_edges or len(truth_edges) == len(universe):
        return random_scores(spec, seed + 1, ties)
    return scores, truth_edges


def mann_whitney_auc(scores, truth_edges, spec):
    universe = candidate_edges(spec.layers)
    pos = [scores[e] for e in universe if e in truth_edges]
    neg = [scores[e] for e in universe if e not in truth_edges]
    total = 0.0
    for a in pos:
        for b in neg:
            total += 1.0 if a > b else (0.5 if a == b else 0.0)
    return total / (len(pos) * len(neg))


class TestRoc:
    def test_perfect_separation(self, spec):
        t = truth(spec)
        scores = {e: (1.0 if e in t else 0.0) for e in candidate_edges(spec.layers)}
        r = roc(scores, t, spec)
        assert r.auc == 1.0 and r.pauc == 1.0

    def test_constant_scores_give_half(self, spec):
        scores = {e: 0.7 for e in candidate_edges(spec.layers)}
        r = roc(scores, truth(spec), spec)
        assert r.auc == pytest.approx(0.5)

    def test_matches_mann_whitney(self, spec):
        for seed in range(100):
            scores, t = random_scores(spec, seed, ties=(seed % 3 == 0))
            r = roc(scores, t, spec)
            assert abs(r.auc - mann_whitney_auc(scores, t, spec)) < 1e-9

    def test_invariant_under_monotone_transform(self, spec):
        scores, t = random_scores(spec, 11)
        r1 = roc(scores, t, spec)
        r2 = roc({e: np.exp(3.0 * v) for e, v in scores.items()}, t, spec)
        assert r1.auc == pytest.approx(r2.auc, abs=1e-12)
        assert r1.pauc == pytest.approx(r2.pauc, abs=1e-12)

    def test_pauc_bounds_and_perfect_scaling(self, spec):
        for seed in range(20):
            scores, t = random_scores(spec, 300 + seed)
            r = roc(scores, t, spec)
            assert 0.0 <= r.pauc <= 1.0
            assert r.pauc <= 1.0 and r.auc <= 1.0

    def test_degenerate_truth_rejected(self, spec):
        scores = {e: 0.5 for e in candidate_edges(spec.layers)}
        with pytest.raises(DegenerateTruthError):
            roc(scores, set(candidate_edges(spec.layers)), spec)
        with pytest.raises(DegenerateTruthError):
            roc(scores, set(), spec)


class TestMccCurve:
    def test_endpoints(self, spec):
        scores, t = random_scores(spec, 21)
        curve = mcc_curve(scores, t, spec)
        assert curve[0] == (0, 0.0)
        assert curve[-1][0] == len(candidate_edges(spec.layers))

    def test_matches_direct_recomputation(self, spec):
        for seed in range(20):
            scores, t = random_scores(spec, 50 + seed, ties=(seed % 2 == 0))
            for ndisc, val in mcc_curve(scores, t, spec):
                if ndisc == 0:
                    assert val == 0.0
                    continue
                ranked = sorted(scores.items(), key=lambda kv: -kv[1])
                selected = [e for e, _ in ranked[:ndisc]]
                c = confusion(selected, t, spec)
                assert val == pytest.approx(mcc(c), abs=1e-12)
