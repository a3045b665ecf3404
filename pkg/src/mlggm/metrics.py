"""Structure-recovery evaluation against a known truth graph.

The candidate universe is every within-layer unordered pair plus every
ordered pair from an earlier layer to a later one (the full search space of
the model, not just the consecutive-layer pairs the generator populates).

Estimated edges outside that universe (a reversed directed edge or a
cross-layer undirected edge, as external methods can produce) are counted as
one false positive each, on top of the false negative for whichever true
edge was missed; with such edges present TP+TN+FP+FN exceeds the universe
size by their count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import DegenerateTruthError, EdgeOutsideUniverseError
from .graph import DIRECTED, UNDIRECTED, ChainGraphSpec, Edge, candidate_edges, normalize_pair


@dataclass(frozen=True)
class Confusion:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def sensitivity(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def specificity(self) -> float:
        return self.tn / (self.tn + self.fp) if self.tn + self.fp else 0.0


def _canonical(edge) -> Edge:
    e = Edge(*edge)
    if e.kind == UNDIRECTED:
        u, v = normalize_pair(e.src, e.dst)
        return Edge(u, v, UNDIRECTED)
    if e.kind == DIRECTED:
        return e
    raise EdgeOutsideUniverseError(f"unknown edge kind {e.kind!r}")


def _check_vertices(edge: Edge, p: int) -> None:
    if not (1 <= edge.src <= p and 1 <= edge.dst <= p) or edge.src == edge.dst:
        raise EdgeOutsideUniverseError(f"edge {edge} has endpoints outside 1..{p}")


def confusion(
    estimated: Iterable[Edge], truth: Iterable[Edge], spec: ChainGraphSpec
) -> Confusion:
    """Confusion counts over the candidate universe.

    An edge matches only if kind and, for directed edges, orientation agree.
    The truth set must lie inside the universe; estimated out-of-universe
    edges are tolerated and counted as extra false positives.
    """
    universe = set(candidate_edges(spec.layers))
    truth_set = set()
    for e in truth:
        e = _canonical(e)
        _check_vertices(e, spec.p)
        if e not in universe:
            raise EdgeOutsideUniverseError(f"truth edge {e} outside the candidate universe")
        truth_set.add(e)
    est_in = set()
    extra_fp = 0
    for e in estimated:
        e = _canonical(e)
        _check_vertices(e, spec.p)
        if e in universe:
            est_in.add(e)
        else:
            extra_fp += 1
    tp = len(est_in & truth_set)
    fp = len(est_in - truth_set) + extra_fp
    fn = len(truth_set - est_in)
    tn = len(universe) - tp - (fp - extra_fp) - fn
    return Confusion(tp=tp, tn=tn, fp=fp, fn=fn)


def mcc(c: Confusion) -> float:
    """Matthews correlation coefficient; 0 when any marginal count is zero."""
    for s in (c.tp + c.fp, c.tp + c.fn, c.tn + c.fp, c.tn + c.fn):
        if s == 0:
            return 0.0
    num = c.tp * c.tn - c.fp * c.fn
    den = np.sqrt(float(c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn))
    return float(num / den)


@dataclass(frozen=True)
class RocResult:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float
    pauc: float


def _score_arrays(scores: Mapping[Edge, float], truth: Iterable[Edge], spec: ChainGraphSpec):
    universe = candidate_edges(spec.layers)
    truth_set = {_canonical(e) for e in truth}
    y = np.array([e in truth_set for e in universe], dtype=bool)
    s = np.array([float(scores.get(e, 0.0)) for e in universe])
    if y.all() or not y.any():
        raise DegenerateTruthError("truth is all-positive or all-negative over the universe")
    return y, s


def roc(
    scores: Mapping[Edge, float],
    truth: Iterable[Edge],
    spec: ChainGraphSpec,
    spec_min: float = 0.8,
) -> RocResult:
    """ROC curve over the candidate universe, sweeping the distinct scores.

    Tied scores are grouped into a single segment. auc is the trapezoidal
    area; pauc integrates sensitivity over 1 - specificity in
    [0, 1 - spec_min] and is rescaled to [0, 1].
    """
    y, s = _score_arrays(scores, truth, spec)
    order = np.argsort(-s, kind="stable")
    y = y[order]
    s = s[order]
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    # cumulative counts at each distinct-score boundary
    boundaries = np.nonzero(np.diff(s))[0]
    cut = np.concatenate([boundaries, [y.size - 1]])
    tp = np.cumsum(y)[cut]
    fp = (cut + 1) - tp
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    auc = float(np.trapezoid(tpr, fpr))
    pauc = _partial_auc(fpr, tpr, 1.0 - spec_min)
    return RocResult(fpr=fpr, tpr=tpr, auc=auc, pauc=pauc)


def _partial_auc(fpr: np.ndarray, tpr: np.ndarray, fpr_max: float) -> float:
    if fpr_max <= 0.0:
        return 0.0
    area = 0.0
    for i in range(1, fpr.size):
        x0, x1 = fpr[i - 1], fpr[i]
        y0, y1 = tpr[i - 1], tpr[i]
        if x0 >= fpr_max:
            break
        if x1 > fpr_max:
            # cut the segment at the boundary
            frac = (fpr_max - x0) / (x1 - x0)
            x1 = fpr_max
            y1 = y0 + frac * (y1 - y0)
        area += 0.5 * (y0 + y1) * (x1 - x0)
    return float(area / fpr_max)


def mcc_curve(
    scores: Mapping[Edge, float], truth: Iterable[Edge], spec: ChainGraphSpec
) -> list[tuple[int, float]]:
    """(number of discoveries, MCC) at every threshold the scores induce,
    starting from the empty selection."""
    y, s = _score_arrays(scores, truth, spec)
    order = np.argsort(-s, kind="stable")
    y = y[order]
    s = s[order]
    total_pos = int(y.sum())
    universe = y.size
    out = [(0, 0.0)]
    tp = 0
    for i in range(universe):
        tp += int(y[i])
        if i + 1 < universe and s[i + 1] == s[i]:
            continue
        ndisc = i + 1
        fp = ndisc - tp
        fn = total_pos - tp
        tn = universe - ndisc - fn
        out.append((ndisc, mcc(Confusion(tp=tp, tn=tn, fp=fp, fn=fn))))
    return out
