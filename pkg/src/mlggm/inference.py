"""Posterior summarization: inclusion probabilities, FDR-based selection,
sign calls, and network summaries (connectivity, weighted degree,
cross-run edge intersections)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ConfigInvalidError, EmptySelectionError, EmptyTraceError
from .graph import DIRECTED, UNDIRECTED, Edge, candidate_edges, normalize_layers, normalize_pair
from .sampler import ChainTrace


def ppi(trace: ChainTrace) -> np.ndarray:
    """Posterior inclusion frequencies as a p x p matrix (same indexing as
    the trace's inclusion counts)."""
    if trace.n_stored <= 0:
        raise EmptyTraceError("trace holds no retained iterations")
    return trace.inclusion_sum / trace.n_stored


def candidate_ppis(trace: ChainTrace, symmetrize: str | None = None) -> dict[Edge, float]:
    """Per-candidate-edge inclusion probabilities.

    For within-layer pairs the coupled sampler's matrix is symmetric already;
    for the uncoupled sampler the two directions are combined by min ("and")
    or max ("or"), defaulting to the choice recorded in the trace.
    """
    g = ppi(trace)
    if symmetrize is None:
        symmetrize = trace.symmetrize
    return ppis_from_matrix(g, trace.layers, symmetrize)


def ppis_from_matrix(
    g: np.ndarray, layers, symmetrize: str | None = None
) -> dict[Edge, float]:
    layers = normalize_layers(layers)
    out: dict[Edge, float] = {}
    for e in candidate_edges(layers):
        if e.kind == UNDIRECTED:
            a = g[e.src - 1, e.dst - 1]
            b = g[e.dst - 1, e.src - 1]
            if symmetrize == "and":
                val = min(a, b)
            elif symmetrize == "or":
                val = max(a, b)
            elif symmetrize is None:
                val = a
            else:
                raise ConfigInvalidError(f"unknown symmetrize rule {symmetrize!r}")
        else:
            val = g[e.dst - 1, e.src - 1]
        out[e] = float(val)
    return out


class FdrSelection(NamedTuple):
    threshold: float
    selected: tuple[Edge, ...]
    prefix_size: int


def _sorted_candidates(g: Mapping[Edge, float]) -> list[tuple[Edge, float]]:
    return sorted(g.items(), key=lambda kv: (-kv[1], kv[0].src, kv[0].dst, kv[0].kind))


def fdr_select(g: Mapping[Edge, float], alpha: float) -> FdrSelection:
    """Threshold inclusion probabilities so the averaged local false discovery
    rate of the kept prefix stays below alpha.

    Sorting descending (ties broken by vertex labels), the prefix size is the
    largest k whose mean of (1 - g) is below alpha; the threshold is the k-th
    probability and every edge with g >= threshold is selected, so ties at
    the threshold all enter. With no feasible k the selection is empty and
    the threshold reported as 1.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigInvalidError("alpha must lie in (0, 1)")
    ranked = _sorted_candidates(g)
    if not ranked:
        return FdrSelection(1.0, (), 0)
    probs = np.array([val for _, val in ranked])
    cum_mean = np.cumsum(1.0 - probs) / np.arange(1, probs.size + 1)
    feasible = np.nonzero(cum_mean < alpha)[0]
    if feasible.size == 0:
        return FdrSelection(1.0, (), 0)
    prefix = int(feasible[-1]) + 1
    threshold = float(probs[prefix - 1])
    selected = tuple(e for e, val in ranked if val >= threshold)
    return FdrSelection(threshold, selected, prefix)


def median_model_select(g: Mapping[Edge, float]) -> FdrSelection:
    """The median probability model: keep edges with inclusion above 0.5."""
    selected = tuple(e for e, val in _sorted_candidates(g) if val > 0.5)
    return FdrSelection(0.5, selected, len(selected))


def expected_fdr(g: Mapping[Edge, float], phi: float) -> float:
    """Mean of (1 - g) over edges with g strictly above phi."""
    kept = [val for val in g.values() if val > phi]
    if not kept:
        raise EmptySelectionError(f"no edge has inclusion probability above {phi}")
    return float(np.mean([1.0 - val for val in kept]))


def call_signs(sign_prob: Mapping[Edge, float], cutoff: float = 0.5) -> dict[Edge, str]:
    """Label each edge "+" when its positive-sign probability strictly
    exceeds the cutoff and "-" otherwise."""
    if not 0.0 < cutoff < 1.0:
        raise ConfigInvalidError("cutoff must lie in (0, 1)")
    return {e: ("+" if prob > cutoff else "-") for e, prob in sign_prob.items()}


def weighted_degree(
    g: Mapping[Edge, float], p: int, selected: Iterable[Edge] | None = None
) -> np.ndarray:
    """Sum of inclusion probabilities over each vertex's incident edges.

    By default only edges in `selected` contribute; pass selected=None
    explicitly with the full candidate map to weight over all candidates.
    """
    keep = set(selected) if selected is not None else None
    out = np.zeros(p)
    for e, val in g.items():
        if keep is not None and e not in keep:
            continue
        out[e.src - 1] += val
        out[e.dst - 1] += val
    return out


def connected_component(edges: Iterable[Edge], vertex: int) -> set[int]:
    """Vertices reachable from `vertex` through edges of either kind."""
    adj: dict[int, set[int]] = {}
    for e in edges:
        adj.setdefault(e.src, set()).add(e.dst)
        adj.setdefault(e.dst, set()).add(e.src)
    seen = {vertex}
    frontier = [vertex]
    while frontier:
        nxt = frontier.pop()
        for other in adj.get(nxt, ()):
            if other not in seen:
                seen.add(other)
                frontier.append(other)
    return seen


def connectivity_score(
    selected: Iterable[Edge], layers, block: int | tuple[int, int]
) -> float:
    """Observed over possible edges for a within-layer block (block = k) or
    an ordered between-layer block (block = (a, b), a < b). Zero possible
    edges give 0."""
    layers = normalize_layers(layers)
    selected = {Edge(*e) for e in selected}
    if isinstance(block, tuple):
        a, b = block
        src = set(layers[a - 1])
        dst = set(layers[b - 1])
        possible = len(src) * len(dst)
        count = sum(
            1 for e in selected if e.kind == DIRECTED and e.src in src and e.dst in dst
        )
    else:
        members = set(layers[block - 1])
        s = len(members)
        possible = s * (s - 1) // 2
        count = sum(
            1
            for e in selected
            if e.kind == UNDIRECTED and e.src in members and e.dst in members
        )
    return count / possible if possible else 0.0


def connectivity_blocks(layers) -> list[int | tuple[int, int]]:
    layers = normalize_layers(layers)
    q = len(layers)
    blocks: list[int | tuple[int, int]] = list(range(1, q + 1))
    blocks += [(a, b) for a in range(1, q + 1) for b in range(a + 1, q + 1)]
    return blocks


def cs_table(
    runs: Mapping[str, Iterable[Edge]], layers
) -> list[tuple[str, dict[str, float], float, float]]:
    """Connectivity score per block and run, with across-run mean and
    standard deviation (sample s.d. when more than one run)."""
    layers = normalize_layers(layers)
    rows = []
    run_edges = {name: {Edge(*e) for e in edges} for name, edges in runs.items()}
    for block in connectivity_blocks(layers):
        label = f"within_{block}" if isinstance(block, int) else f"between_{block[0]}_{block[1]}"
        per_run = {
            name: connectivity_score(edges, layers, block)
            for name, edges in run_edges.items()
        }
        vals = np.array(list(per_run.values()))
        sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        rows.append((label, per_run, float(vals.mean()), sd))
    return rows


def intersection_counts(
    runs: Mapping[str, Iterable[Edge]]
) -> list[tuple[tuple[str, ...], int]]:
    """Exclusive intersection sizes for every nonempty subset of runs: the
    count of edges present in exactly that subset. Rows sum to the size of
    the union."""
    names = list(runs.keys())
    sets = {name: {Edge(*e) for e in runs[name]} for name in names}
    membership: dict[Edge, frozenset[str]] = {}
    for name in names:
        for e in sets[name]:
            membership[e] = membership.get(e, frozenset()) | {name}
    rows = []
    for r in range(1, len(names) + 1):
        for combo in itertools.combinations(names, r):
            key = frozenset(combo)
            count = sum(1 for owner in membership.values() if owner == key)
            rows.append((combo, count))
    return rows


@dataclass(frozen=True)
class PosteriorSummary:
    """Selection result: per-candidate inclusion probabilities, the threshold
    and selected edges, and optional per-edge sign calls."""

    inclusion: dict[Edge, float]
    threshold: float
    prefix_size: int
    selected: tuple[Edge, ...]
    sign_prob: dict[Edge, float]
    sign_cutoff: float

    def signs(self) -> dict[Edge, str]:
        return call_signs(self.sign_prob, self.sign_cutoff)


def summarize(
    g: Mapping[Edge, float],
    alpha: float = 0.1,
    sign_prob: Mapping[Edge, float] | None = None,
    sign_cutoff: float = 0.5,
    rule: str = "fdr",
) -> PosteriorSummary:
    if rule == "fdr":
        sel = fdr_select(g, alpha)
    elif rule == "median":
        sel = median_model_select(g)
    else:
        raise ConfigInvalidError(f"unknown selection rule {rule!r}")
    sign_prob = dict(sign_prob or {})
    return PosteriorSummary(
        inclusion=dict(g),
        threshold=sel.threshold,
        prefix_size=sel.prefix_size,
        selected=sel.selected,
        sign_prob={e: sign_prob[e] for e in sel.selected if e in sign_prob},
        sign_cutoff=sign_cutoff,
    )
