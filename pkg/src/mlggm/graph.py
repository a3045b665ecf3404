"""Chain-graph data model: ordered layers, mixed edge sets, validity checks.

Vertices are 1-based indices 1..p. Layers form an ordered partition of the
vertex set; edges between layers are directed from the earlier layer to the
later one, and edges within a layer are undirected. Undirected edges are
normalized to (u, v) with u < v everywhere so each pair is stored once.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .errors import (
    BackwardDirectedEdgeError,
    CrossLayerUndirectedEdgeError,
    IndexOutOfRangeError,
    LabelOrderViolationError,
    LayerCoverageError,
    LayerOverlapError,
)

DIRECTED = "dir"
UNDIRECTED = "undir"


class Edge(NamedTuple):
    """A candidate or realized edge. For kind == "dir", src -> dst."""

    src: int
    dst: int
    kind: str


class CIStatement(NamedTuple):
    """Y_u independent of Y_v given the variables in `given`."""

    u: int
    v: int
    given: frozenset[int]


def normalize_layers(layers: Iterable[Iterable[int]]) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(sorted(set(layer))) for layer in layers)


def normalize_pair(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class ChainGraphSpec:
    """Vertex count, ordered layer partition, and mixed edge sets.

    directed_edges holds ordered pairs (u, v) meaning u -> v; undirected_edges
    holds unordered pairs stored as (min, max). Construction normalizes the
    representation but performs no validity checking; call validate().
    """

    p: int
    layers: tuple[tuple[int, ...], ...]
    directed_edges: frozenset[tuple[int, int]] = frozenset()
    undirected_edges: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "layers", normalize_layers(self.layers))
        object.__setattr__(
            self, "directed_edges", frozenset(tuple(e) for e in self.directed_edges)
        )
        object.__setattr__(
            self,
            "undirected_edges",
            frozenset(normalize_pair(u, v) for u, v in self.undirected_edges),
        )

    @property
    def q(self) -> int:
        return len(self.layers)

    def layer_of(self, v: int) -> int:
        """1-based layer index t(v)."""
        for k, layer in enumerate(self.layers, start=1):
            if v in layer:
                return k
        raise IndexOutOfRangeError(f"vertex {v} not in any layer")

    def layer_index_array(self):
        """t(v) for v = 1..p as a list indexed by v-1."""
        out = [0] * self.p
        for k, layer in enumerate(self.layers, start=1):
            for v in layer:
                out[v - 1] = k
        return out

    def edges(self) -> list[Edge]:
        out = [Edge(u, v, DIRECTED) for u, v in sorted(self.directed_edges)]
        out += [Edge(u, v, UNDIRECTED) for u, v in sorted(self.undirected_edges)]
        return out


@dataclass(frozen=True)
class VertexContext:
    """Candidate parents (all earlier-layer vertices) and same-layer neighbors of v."""

    v: int
    parents_candidates: tuple[int, ...]
    neighbors_candidates: tuple[int, ...]


def validate(spec: ChainGraphSpec) -> ChainGraphSpec:
    """Check all structural invariants; return the spec unchanged if valid.

    Vertex labels are never rewritten: a spec whose labels do not respect the
    layer order is rejected, not relabeled.
    """
    seen: set[int] = set()
    for k, layer in enumerate(spec.layers, start=1):
        overlap = seen & set(layer)
        if overlap:
            raise LayerOverlapError(f"vertices {sorted(overlap)} appear in more than one layer")
        seen.update(layer)
    if seen != set(range(1, spec.p + 1)):
        missing = sorted(set(range(1, spec.p + 1)) - seen)
        extra = sorted(seen - set(range(1, spec.p + 1)))
        raise LayerCoverageError(f"layers must partition 1..{spec.p}; missing={missing} extra={extra}")

    # label order: every vertex of layer k is smaller than every vertex of layer k+1
    for k in range(len(spec.layers) - 1):
        if spec.layers[k] and spec.layers[k + 1]:
            if max(spec.layers[k]) > min(spec.layers[k + 1]):
                raise LabelOrderViolationError(
                    f"labels in layer {k + 1} are not all below labels in layer {k + 2}"
                )

    t = spec.layer_index_array()
    for u, v in spec.directed_edges:
        if t[u - 1] >= t[v - 1]:
            raise BackwardDirectedEdgeError(
                f"directed edge {u}->{v} runs from layer {t[u - 1]} to layer {t[v - 1]}"
            )
    for u, v in spec.undirected_edges:
        if u == v:
            raise CrossLayerUndirectedEdgeError(f"self loop {u}-{v}")
        if t[u - 1] != t[v - 1]:
            raise CrossLayerUndirectedEdgeError(
                f"undirected edge {u}-{v} spans layers {t[u - 1]} and {t[v - 1]}"
            )
    return spec


def cumulative(spec: ChainGraphSpec, l: int) -> frozenset[int]:
    """Union of the first l layers; l = 0 gives the empty set."""
    if l < 0 or l > spec.q:
        raise IndexOutOfRangeError(f"layer index {l} outside 0..{spec.q}")
    out: set[int] = set()
    for layer in spec.layers[:l]:
        out.update(layer)
    return frozenset(out)


def vertex_context(spec: ChainGraphSpec, v: int) -> VertexContext:
    k = spec.layer_of(v)
    parents = tuple(sorted(cumulative(spec, k - 1)))
    neighbors = tuple(w for w in spec.layers[k - 1] if w != v)
    return VertexContext(v=v, parents_candidates=parents, neighbors_candidates=neighbors)


def implied_independencies(spec: ChainGraphSpec) -> list[CIStatement]:
    """Conditional independencies implied by the missing edges of a valid spec.

    A missing within-layer edge u-v yields (u, v | C_{t(v)} \\ {u, v}); a
    missing between-layer pair u->v with t(u) < t(v) yields
    (u, v | C_{t(v)-1} \\ {u}).
    """
    t = spec.layer_index_array()
    out: list[CIStatement] = []
    for edge in candidate_edges(spec.layers):
        u, v, kind = edge
        if kind == UNDIRECTED:
            if (u, v) in spec.undirected_edges:
                continue
            given = cumulative(spec, t[v - 1]) - {u, v}
        else:
            if (u, v) in spec.directed_edges:
                continue
            given = cumulative(spec, t[v - 1] - 1) - {u}
        out.append(CIStatement(u, v, frozenset(given)))
    return out


def candidate_edges(layers: Iterable[Iterable[int]]) -> list[Edge]:
    """The edge universe: within-layer unordered pairs plus every ordered
    pair from an earlier layer to a later one (not only consecutive layers)."""
    layers = normalize_layers(layers)
    out: list[Edge] = []
    for k, layer in enumerate(layers):
        for u, v in itertools.combinations(layer, 2):
            out.append(Edge(u, v, UNDIRECTED))
        for later in layers[k + 1:]:
            for u in layer:
                for v in later:
                    out.append(Edge(u, v, DIRECTED))
    return out
