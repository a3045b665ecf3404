"""Random chain-graph generation and exact sampling from the implied Gaussian.

The generator assigns vertices to layers of near-equal size, draws undirected
edges within layers and directed edges between consecutive layers from
independent Bernoulli trials, fills coefficient magnitudes uniformly from a
symmetric two-interval range, and makes the residual precision positive
definite by diagonal dominance. Data are drawn by ancestral sampling through
the layers, which is distributionally identical to sampling from the joint
zero-mean Gaussian with precision (I - B)' K (I - B).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .data import Dataset
from .errors import ConfigInvalidError, FactorizationFailureError
from .graph import ChainGraphSpec, validate


@dataclass(frozen=True)
class GenConfig:
    p: int
    n: int
    q: int
    p_e: float
    magnitude_low: float = 0.5
    magnitude_high: float = 1.5
    diag_pad: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.p < 1 or self.n < 1:
            raise ConfigInvalidError("p and n must be positive")
        if not 1 <= self.q <= self.p:
            raise ConfigInvalidError("q must satisfy 1 <= q <= p")
        if not 0.0 <= self.p_e <= 1.0:
            raise ConfigInvalidError("p_e must lie in [0, 1]")
        if not 0 < self.magnitude_low < self.magnitude_high:
            raise ConfigInvalidError("magnitude bounds must satisfy 0 < low < high")
        if self.diag_pad <= 0:
            raise ConfigInvalidError("diag_pad must be positive")


@dataclass(frozen=True)
class MlggmParameters:
    """Coefficient matrix B and residual precision K, both p x p.

    B[v-1, u-1] is the coefficient of parent u in the equation of v and is
    zero unless t(u) < t(v). K is symmetric, block-diagonal by layer, with
    positive diagonal.
    """

    B: np.ndarray
    K: np.ndarray
    layers: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "B", np.asarray(self.B, dtype=np.float64))
        object.__setattr__(self, "K", np.asarray(self.K, dtype=np.float64))

    @property
    def p(self) -> int:
        return self.B.shape[0]


def validate_parameters(params: MlggmParameters) -> MlggmParameters:
    p = params.p
    if params.B.shape != (p, p) or params.K.shape != (p, p):
        raise ConfigInvalidError("B and K must be square with matching shape")
    t = np.zeros(p, dtype=int)
    for k, layer in enumerate(params.layers, start=1):
        for v in layer:
            t[v - 1] = k
    same_layer = t[:, None] == t[None, :]
    earlier = t[None, :] < t[:, None]  # earlier[v, u]: t(u) < t(v)
    if np.any(params.B[~earlier] != 0.0):
        raise ConfigInvalidError("B has a nonzero entry outside the earlier-layer block")
    if np.any(params.K[~same_layer] != 0.0):
        raise ConfigInvalidError("K has a nonzero entry outside the layer blocks")
    if not np.allclose(params.K, params.K.T):
        raise ConfigInvalidError("K must be symmetric")
    try:
        # K is block diagonal, so factoring the full matrix factors every block.
        np.linalg.cholesky(params.K)
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailureError("K is not positive definite") from exc
    return params


def layer_sizes(p: int, q: int) -> list[int]:
    """Near-equal sizes: the first p % q layers get one extra vertex."""
    base, rem = divmod(p, q)
    return [base + 1 if k < rem else base for k in range(q)]


def random_chain_graph(cfg: GenConfig, rng: np.random.Generator) -> ChainGraphSpec:
    """Draw a random layered graph.

    Within-layer pairs become undirected edges with probability p_e; ordered
    pairs between consecutive layers become directed edges with probability
    p_e / 2. Non-consecutive layers get no edges from this generator even
    though the model class allows them.
    """
    sizes = layer_sizes(cfg.p, cfg.q)
    layers = []
    start = 1
    for s in sizes:
        layers.append(tuple(range(start, start + s)))
        start += s

    undirected = set()
    for layer in layers:
        for u, v in itertools.combinations(layer, 2):
            if rng.random() < cfg.p_e:
                undirected.add((u, v))
    directed = set()
    for k in range(1, cfg.q):
        for u in layers[k - 1]:
            for v in layers[k]:
                if rng.random() < cfg.p_e / 2.0:
                    directed.add((u, v))
    return validate(
        ChainGraphSpec(
            p=cfg.p,
            layers=tuple(layers),
            directed_edges=frozenset(directed),
            undirected_edges=frozenset(undirected),
        )
    )


def sample_parameters(
    spec: ChainGraphSpec, cfg: GenConfig, rng: np.random.Generator
) -> MlggmParameters:
    """Fill nonzero entries of B and K for the given support.

    Magnitudes are uniform on (magnitude_low, magnitude_high) with equiprobable
    sign. The K diagonal is the per-column sum of absolute off-diagonal
    entries plus diag_pad, which guarantees positive definiteness.
    """
    p = spec.p
    B = np.zeros((p, p))
    K = np.zeros((p, p))
    for u, v in sorted(spec.directed_edges):
        B[v - 1, u - 1] = _signed_magnitude(cfg, rng)
    for u, v in sorted(spec.undirected_edges):
        val = _signed_magnitude(cfg, rng)
        K[u - 1, v - 1] = val
        K[v - 1, u - 1] = val
    for v in range(p):
        K[v, v] = np.abs(K[:, v]).sum() + cfg.diag_pad
    return MlggmParameters(B=B, K=K, layers=spec.layers)


def _signed_magnitude(cfg: GenConfig, rng: np.random.Generator) -> float:
    mag = rng.uniform(cfg.magnitude_low, cfg.magnitude_high)
    return -mag if rng.random() < 0.5 else mag


def precision_from_parameters(params: MlggmParameters) -> np.ndarray:
    """Joint precision (I - B)' K (I - B); positive definite whenever K is."""
    I = np.eye(params.p)
    return (I - params.B).T @ params.K @ (I - params.B)


def sample_data(params: MlggmParameters, n: int, rng: np.random.Generator) -> Dataset:
    """Ancestral sampling through the layers.

    Each layer's residual block is drawn from N(0, K_layer^{-1}) via a
    Cholesky solve, then shifted by the regression on all preceding columns.
    """
    if n < 1:
        raise ConfigInvalidError("n must be positive")
    p = params.p
    Y = np.zeros((n, p))
    parents: list[int] = []
    for layer in params.layers:
        idx = [v - 1 for v in layer]
        block = params.K[np.ix_(idx, idx)]
        try:
            L = np.linalg.cholesky(block)
        except np.linalg.LinAlgError as exc:
            raise FactorizationFailureError(
                f"layer block for vertices {layer} is not positive definite"
            ) from exc
        z = rng.standard_normal((n, len(idx)))
        eps = solve_triangular(L, z.T, lower=True, trans="T").T
        if parents:
            Y[:, idx] = Y[:, parents] @ params.B[np.ix_(idx, parents)].T + eps
        else:
            Y[:, idx] = eps
        parents.extend(idx)
    names = tuple(f"V{i}" for i in range(1, p + 1))
    return Dataset(values=Y, names=names, layers=params.layers)


def expected_edge_count(cfg: GenConfig) -> float:
    """Analytic expectation of the generator's realized edge count."""
    sizes = layer_sizes(cfg.p, cfg.q)
    within = sum(s * (s - 1) / 2 for s in sizes) * cfg.p_e
    between = sum(sizes[k - 1] * sizes[k] for k in range(1, cfg.q)) * cfg.p_e / 2.0
    return within + between
