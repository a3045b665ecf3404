"""Node-wise spike-and-slab Gibbs sampler for layered Gaussian graphical models.

Two sampling modes are provided. run_bans couples the two coefficients of
each within-layer pair through one shared inclusion indicator, resampled from
the product of the two affected node conditionals; vertices within a layer
are therefore swept sequentially, while layers are independent sub-problems.
run_bans_parallel drops the symmetric constraint: every vertex runs a fully
self-contained chain (with private copies of the neighbor-parent adjustment
coefficients), so vertices can be processed concurrently, and the two
directions of a within-layer pair are reconciled only afterwards by taking
the min (and) or max (or) of the two inclusion frequencies.

Random streams: one root seed per run; layer streams are spawned from it by
index, and in parallel mode per-vertex streams are spawned from the layer
stream (a single-vertex layer reuses the layer stream unchanged, which makes
the two modes coincide when no within-layer pairs exist).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

from . import _kernels
from .data import Dataset
from .datagen import MlggmParameters
from .errors import (
    ConfigInvalidError,
    DegenerateColumnError,
    DimensionMismatchError,
    EmptyTraceError,
    NumericalUnderflowError,
    StructureInconsistentError,
    MlggmError,
)
from .graph import (
    DIRECTED,
    UNDIRECTED,
    ChainGraphSpec,
    Edge,
    normalize_layers,
    normalize_pair,
    validate,
)

_STATUS_MESSAGES = {
    _kernels.STATUS_ETA_ASYMMETRIC: "eta lost its symmetry",
    _kernels.STATUS_SUPPORT_ALPHA: "alpha nonzero for an excluded pair",
    _kernels.STATUS_SUPPORT_B: "b nonzero for an excluded directed edge",
    _kernels.STATUS_KAPPA_NONPOSITIVE: "kappa left the positive half-line",
    _kernels.STATUS_NONFINITE: "non-finite value in sampler state",
}


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters of the selection prior.

    lambda_tau and delta_tau may be scalars or one value per layer. The slab
    variance scale for directed coefficients defaults to 1 / lambda_tau.
    Edge-specific inclusion probabilities override the global p_dir / q_undir
    and are keyed by 1-based vertex pairs: (u, v) meaning u -> v for directed
    overrides, unordered for undirected ones.
    """

    lambda_tau: float | tuple[float, ...] = 2.0
    delta_tau: float | tuple[float, ...] = 2.0
    c2: float | None = None
    p_dir: float = 0.1
    q_undir: float = 0.1
    directed_overrides: Mapping[tuple[int, int], float] = field(default_factory=dict)
    undirected_overrides: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def lam(self, k: int) -> float:
        return _per_layer(self.lambda_tau, k)

    def delta(self, k: int) -> float:
        return _per_layer(self.delta_tau, k)

    def c2_value(self, k: int) -> float:
        return self.c2 if self.c2 is not None else 1.0 / self.lam(k)

    def check(self, q: int) -> None:
        for k in range(q):
            if self.lam(k) <= 0 or self.delta(k) <= 0:
                raise ConfigInvalidError("lambda_tau and delta_tau must be positive")
            if self.c2_value(k) <= 0:
                raise ConfigInvalidError("c2 must be positive")
        for prob in (self.p_dir, self.q_undir, *self.directed_overrides.values(),
                     *self.undirected_overrides.values()):
            if not 0.0 <= prob <= 1.0:
                raise ConfigInvalidError("inclusion probabilities must lie in [0, 1]")


def _per_layer(value, k: int) -> float:
    if isinstance(value, (tuple, list)):
        return float(value[k])
    return float(value)


def _logit(p: float) -> float:
    if p <= 0.0:
        return -np.inf
    if p >= 1.0:
        return np.inf
    return math.log(p) - math.log1p(-p)


@dataclass
class SamplerState:
    """Full-model sampler state in global 1-based vertex indexing.

    gamma[v-1, u-1] / b[v-1, u-1] refer to the directed edge u -> v;
    eta[u-1, v-1] / alpha[u-1, v-1] refer to u's coefficient on same-layer
    neighbor v. Excluded coefficients are held at exactly zero.
    """

    layers: tuple[tuple[int, ...], ...]
    gamma: np.ndarray
    eta: np.ndarray
    b: np.ndarray
    alpha: np.ndarray
    kappa: np.ndarray

    def copy(self) -> "SamplerState":
        return SamplerState(
            self.layers, self.gamma.copy(), self.eta.copy(),
            self.b.copy(), self.alpha.copy(), self.kappa.copy(),
        )


def initial_state(data: Dataset) -> SamplerState:
    p = data.p
    var = data.values.var(axis=0)
    if np.any(var <= 0):
        raise DegenerateColumnError("zero-variance column in data")
    return SamplerState(
        layers=data.layers,
        gamma=np.zeros((p, p), dtype=np.bool_),
        eta=np.zeros((p, p), dtype=np.bool_),
        b=np.zeros((p, p)),
        alpha=np.zeros((p, p)),
        kappa=1.0 / var,
    )


def state_from_parameters(params: MlggmParameters) -> SamplerState:
    """The state implied by generating parameters: b from B, alpha from the
    scaled precision rows, kappa from the K diagonal."""
    p = params.p
    B = params.B
    K = params.K
    alpha = np.zeros((p, p))
    eta = np.zeros((p, p), dtype=np.bool_)
    for layer in params.layers:
        for v in layer:
            for j in layer:
                if j != v and K[v - 1, j - 1] != 0.0:
                    alpha[v - 1, j - 1] = -K[v - 1, j - 1] / K[v - 1, v - 1]
                    eta[v - 1, j - 1] = True
    return SamplerState(
        layers=params.layers,
        gamma=B != 0.0,
        eta=eta,
        b=B.copy(),
        alpha=alpha,
        kappa=np.diag(K).copy(),
    )


@dataclass
class ChainTrace:
    """Accumulated inclusion, sign, and coefficient statistics of one run.

    inclusion_sum[i, j] counts retained iterations where the within-layer
    coefficient of vertex i+1 on j+1 (same layer) or the directed edge
    j+1 -> i+1 (earlier layer) was active. Divide by n_stored for posterior
    inclusion probabilities.
    """

    layers: tuple[tuple[int, ...], ...]
    n: int
    n_iter: int
    burn_in: int
    thin: int
    n_stored: int
    mode: str
    seed: int
    inclusion_sum: np.ndarray
    sign_pos_sum: np.ndarray
    coef_sum: np.ndarray
    kappa_sum: np.ndarray
    edge_count_trace: np.ndarray
    loglik_trace: np.ndarray
    symmetrize: str | None = None

    @property
    def p(self) -> int:
        return self.inclusion_sum.shape[0]


class _LayerProblem:
    """Gram statistics and prior arrays for one layer's sub-problem."""

    def __init__(self, Y: np.ndarray, layers, k: int, prior: PriorConfig):
        self.k = k
        self.verts = [v - 1 for v in layers[k]]
        self.parents = [v - 1 for layer in layers[:k] for v in layer]
        self.m = len(self.verts)
        self.P = len(self.parents)
        self.n = Y.shape[0]
        Yt = np.ascontiguousarray(Y[:, self.verts])
        Yp = np.ascontiguousarray(Y[:, self.parents])
        self.Gtt = np.ascontiguousarray(Yt.T @ Yt)
        self.Gpt = np.ascontiguousarray(Yp.T @ Yt)
        self.Gpp = np.ascontiguousarray(Yp.T @ Yp)
        self.lam = prior.lam(k)
        self.a0 = 0.5 * (prior.delta(k) + self.m - 1)
        self.b0 = 0.5 * self.lam
        c2v = prior.c2_value(k)
        self.c2 = np.full((self.m, self.P), c2v)
        self.logit_p = np.full((self.m, self.P), _logit(prior.p_dir))
        for (u, v), prob in prior.directed_overrides.items():
            if (v - 1) in self.verts and (u - 1) in self.parents:
                self.logit_p[self.verts.index(v - 1), self.parents.index(u - 1)] = _logit(prob)
        self.logit_q = np.full((self.m, self.m), _logit(prior.q_undir))
        for (u, v), prob in prior.undirected_overrides.items():
            u, v = normalize_pair(u, v)
            if (u - 1) in self.verts and (v - 1) in self.verts:
                iu = self.verts.index(u - 1)
                iv = self.verts.index(v - 1)
                self.logit_q[iu, iv] = _logit(prob)
                self.logit_q[iv, iu] = _logit(prob)

    def local_state(self, state: SamplerState):
        gl = self.verts
        par = self.parents
        return (
            np.ascontiguousarray(state.eta[np.ix_(gl, gl)]),
            np.ascontiguousarray(state.alpha[np.ix_(gl, gl)]),
            np.ascontiguousarray(state.gamma[np.ix_(gl, par)]),
            np.ascontiguousarray(state.b[np.ix_(gl, par)]),
            np.ascontiguousarray(state.kappa[gl]),
        )

    def write_back(self, state: SamplerState, eta, alpha, gamma, b, kappa) -> None:
        gl = self.verts
        par = self.parents
        state.eta[np.ix_(gl, gl)] = eta
        state.alpha[np.ix_(gl, gl)] = alpha
        state.gamma[np.ix_(gl, par)] = gamma
        state.b[np.ix_(gl, par)] = b
        state.kappa[gl] = kappa


def _prepare(data: Dataset, prior: PriorConfig, n_iter: int, burn_in: int, thin: int):
    if data.n < 2:
        raise ConfigInvalidError("need at least two observations")
    data.check_numeric()
    sd = data.values.std(axis=0)
    if np.any(sd == 0.0):
        bad = [data.names[j] for j in np.where(sd == 0.0)[0]]
        raise DegenerateColumnError(f"zero-variance columns: {bad}")
    validate(ChainGraphSpec(p=data.p, layers=data.layers))
    if thin < 1:
        raise ConfigInvalidError("thin must be >= 1")
    if burn_in < 0 or n_iter < burn_in:
        raise ConfigInvalidError("need 0 <= burn_in <= n_iter")
    n_stored = max(0, -(-(n_iter - burn_in) // thin))
    if n_stored == 0:
        raise EmptyTraceError("no retained iterations: n_iter must exceed burn_in")
    prior.check(len(data.layers))
    Y = data.values - data.values.mean(axis=0)
    return Y, n_stored


def _empty_trace_arrays(p: int, n_stored: int):
    return (
        np.zeros((p, p)),
        np.zeros((p, p)),
        np.zeros((p, p)),
        np.zeros(p),
        np.zeros(n_stored),
        np.zeros(n_stored),
    )


def run_bans(
    data: Dataset,
    prior: PriorConfig | None = None,
    n_iter: int = 30_000,
    burn_in: int = 10_000,
    thin: int = 1,
    seed: int = 0,
    jobs: int = 1,
    initial: SamplerState | None = None,
) -> ChainTrace:
    """Coupled sampler: per iteration and layer, one sweep over all unordered
    within-layer pairs (shared indicator, slab coefficients integrated out),
    a per-vertex refresh of neighbor coefficients and precision, then the
    directed-edge step for each vertex in label order. Deterministic given
    the seed. Layers run concurrently when jobs > 1."""
    prior = prior or PriorConfig()
    Y, n_stored = _prepare(data, prior, n_iter, burn_in, thin)
    state = (initial or initial_state(data)).copy()
    problems = [_LayerProblem(Y, data.layers, k, prior) for k in range(len(data.layers))]
    seeds = np.random.SeedSequence(seed).spawn(len(problems))
    incl, sign, coef, ksum, etrace, ltrace = _empty_trace_arrays(data.p, n_stored)

    def run_layer(k: int):
        prob = problems[k]
        rng = np.random.default_rng(seeds[k])
        eta, alpha, gamma, b, kappa = prob.local_state(state)
        li, ld = np.zeros((prob.m, prob.m)), np.zeros((prob.m, prob.P))
        si, sd_ = np.zeros((prob.m, prob.m)), np.zeros((prob.m, prob.P))
        ci, cd = np.zeros((prob.m, prob.m)), np.zeros((prob.m, prob.P))
        ks = np.zeros(prob.m)
        et = np.zeros(n_stored)
        lt = np.zeros(n_stored)
        status = _kernels.bans_layer_chain(
            rng, prob.Gpp, prob.Gpt, prob.Gtt, prob.n,
            prob.lam, prob.a0, prob.b0, prob.c2, prob.logit_p, prob.logit_q,
            eta, alpha, gamma, b, kappa,
            n_iter, burn_in, thin, False, True, True, -1,
            li, ld, si, sd_, ci, cd, ks, et, lt,
        )
        if status != _kernels.STATUS_OK:
            raise _status_error(status)
        return k, (eta, alpha, gamma, b, kappa), (li, ld, si, sd_, ci, cd, ks, et, lt)

    results = _map_jobs(run_layer, range(len(problems)), jobs)
    for k, final, rec in results:
        prob = problems[k]
        prob.write_back(state, *final)
        _merge_layer_records(prob, rec, incl, sign, coef, ksum, etrace, ltrace)

    return ChainTrace(
        layers=data.layers, n=data.n, n_iter=n_iter, burn_in=burn_in, thin=thin,
        n_stored=n_stored, mode="bans", seed=seed,
        inclusion_sum=incl, sign_pos_sum=sign, coef_sum=coef, kappa_sum=ksum,
        edge_count_trace=etrace, loglik_trace=ltrace,
    )


def run_bans_parallel(
    data: Dataset,
    prior: PriorConfig | None = None,
    n_iter: int = 30_000,
    burn_in: int = 10_000,
    thin: int = 1,
    seed: int = 0,
    jobs: int = 1,
    symmetrize: str = "and",
) -> ChainTrace:
    """Uncoupled sampler: every vertex runs an independent chain over its own
    regression (neighbor indicators unconstrained, private copies of the
    neighbor-parent adjustment rows). The returned trace holds the raw
    per-direction inclusion counts; apply min/max symmetrization when reading
    probabilities for within-layer pairs."""
    if symmetrize not in ("and", "or"):
        raise ConfigInvalidError("symmetrize must be 'and' or 'or'")
    prior = prior or PriorConfig()
    Y, n_stored = _prepare(data, prior, n_iter, burn_in, thin)
    state = initial_state(data)
    problems = [_LayerProblem(Y, data.layers, k, prior) for k in range(len(data.layers))]
    layer_seeds = np.random.SeedSequence(seed).spawn(len(problems))
    incl, sign, coef, ksum, etrace, ltrace = _empty_trace_arrays(data.p, n_stored)

    tasks = []
    for k, prob in enumerate(problems):
        vseeds = layer_seeds[k].spawn(prob.m) if prob.m > 1 else [layer_seeds[k]]
        for i in range(prob.m):
            tasks.append((k, i, vseeds[i]))

    def run_vertex(task):
        k, i, vseed = task
        prob = problems[k]
        rng = np.random.default_rng(vseed)
        eta_v = np.zeros(prob.m, dtype=np.bool_)
        alpha_v = np.zeros(prob.m)
        gamma_pr = np.zeros((prob.m, prob.P), dtype=np.bool_)
        b_pr = np.zeros((prob.m, prob.P))
        kappa_box = np.array([state.kappa[prob.verts[i]]])
        iu, idr = np.zeros(prob.m), np.zeros(prob.P)
        su, sdr = np.zeros(prob.m), np.zeros(prob.P)
        cu, cdr = np.zeros(prob.m), np.zeros(prob.P)
        ka = np.zeros(1)
        et = np.zeros(n_stored)
        lt = np.zeros(n_stored)
        status = _kernels.node_chain(
            rng, i, prob.Gpp, prob.Gpt, prob.Gtt, prob.n,
            prob.lam, prob.a0, prob.b0, prob.c2, prob.logit_p, prob.logit_q,
            eta_v, alpha_v, gamma_pr, b_pr, kappa_box,
            n_iter, burn_in, thin,
            iu, idr, su, sdr, cu, cdr, ka, et, lt,
        )
        if status != _kernels.STATUS_OK:
            raise _status_error(status)
        return k, i, (iu, idr, su, sdr, cu, cdr, ka, et, lt)

    results = _map_jobs(run_vertex, tasks, jobs)
    for k, i, (iu, idr, su, sdr, cu, cdr, ka, et, lt) in results:
        prob = problems[k]
        g = prob.verts[i]
        incl[g, prob.verts] += iu
        incl[g, prob.parents] += idr
        sign[g, prob.verts] += su
        sign[g, prob.parents] += sdr
        coef[g, prob.verts] += cu
        coef[g, prob.parents] += cdr
        ksum[g] += ka[0]
        etrace += et
        ltrace += lt

    return ChainTrace(
        layers=data.layers, n=data.n, n_iter=n_iter, burn_in=burn_in, thin=thin,
        n_stored=n_stored, mode="bans-parallel", seed=seed,
        inclusion_sum=incl, sign_pos_sum=sign, coef_sum=coef, kappa_sum=ksum,
        edge_count_trace=etrace, loglik_trace=ltrace, symmetrize=symmetrize,
    )


def structured_sign_run(
    data: Dataset,
    edges: Iterable[Edge],
    prior: PriorConfig | None = None,
    n_iter: int = 12_000,
    burn_in: int = 4_000,
    thin: int = 1,
    seed: int = 0,
    jobs: int = 1,
) -> dict[Edge, float]:
    """Coefficient and precision updates with the structure held fixed.

    Returns, for each edge of the given structure, the posterior probability
    that its coefficient is positive (the coefficient of the lower-labeled
    vertex on the higher one, for undirected edges).
    """
    prior = prior or PriorConfig()
    Y, n_stored = _prepare(data, prior, n_iter, burn_in, thin)
    spec = validate(ChainGraphSpec(p=data.p, layers=data.layers))
    t = spec.layer_index_array()
    state = initial_state(data)
    edges = [Edge(*e) for e in edges]
    for e in edges:
        if e.kind == UNDIRECTED:
            u, v = normalize_pair(e.src, e.dst)
            if t[u - 1] != t[v - 1]:
                raise StructureInconsistentError(f"undirected edge {u}-{v} spans layers")
            state.eta[u - 1, v - 1] = True
            state.eta[v - 1, u - 1] = True
        elif e.kind == DIRECTED:
            if t[e.src - 1] >= t[e.dst - 1]:
                raise StructureInconsistentError(
                    f"directed edge {e.src}->{e.dst} does not run to a later layer"
                )
            state.gamma[e.dst - 1, e.src - 1] = True
        else:
            raise StructureInconsistentError(f"unknown edge kind {e.kind!r}")

    problems = [_LayerProblem(Y, data.layers, k, prior) for k in range(len(data.layers))]
    seeds = np.random.SeedSequence(seed).spawn(len(problems))
    incl, sign, coef, ksum, etrace, ltrace = _empty_trace_arrays(data.p, n_stored)

    def run_layer(k: int):
        prob = problems[k]
        rng = np.random.default_rng(seeds[k])
        eta, alpha, gamma, b, kappa = prob.local_state(state)
        li, ld = np.zeros((prob.m, prob.m)), np.zeros((prob.m, prob.P))
        si, sd_ = np.zeros((prob.m, prob.m)), np.zeros((prob.m, prob.P))
        ci, cd = np.zeros((prob.m, prob.m)), np.zeros((prob.m, prob.P))
        ks = np.zeros(prob.m)
        et = np.zeros(n_stored)
        lt = np.zeros(n_stored)
        status = _kernels.bans_layer_chain(
            rng, prob.Gpp, prob.Gpt, prob.Gtt, prob.n,
            prob.lam, prob.a0, prob.b0, prob.c2, prob.logit_p, prob.logit_q,
            eta, alpha, gamma, b, kappa,
            n_iter, burn_in, thin, True, True, True, -1,
            li, ld, si, sd_, ci, cd, ks, et, lt,
        )
        if status != _kernels.STATUS_OK:
            raise _status_error(status)
        return k, (li, ld, si, sd_, ci, cd, ks, et, lt)

    for k, rec in _map_jobs(run_layer, range(len(problems)), jobs):
        _merge_layer_records(problems[k], rec, incl, sign, coef, ksum, etrace, ltrace)

    probs: dict[Edge, float] = {}
    for e in edges:
        if e.kind == UNDIRECTED:
            u, v = normalize_pair(e.src, e.dst)
            probs[Edge(u, v, UNDIRECTED)] = sign[u - 1, v - 1] / n_stored
        else:
            probs[Edge(e.src, e.dst, DIRECTED)] = sign[e.dst - 1, e.src - 1] / n_stored
    return probs


def _merge_layer_records(prob: _LayerProblem, rec, incl, sign, coef, ksum, etrace, ltrace):
    li, ld, si, sd_, ci, cd, ks, et, lt = rec
    gl, par = prob.verts, prob.parents
    incl[np.ix_(gl, gl)] += li
    sign[np.ix_(gl, gl)] += si
    coef[np.ix_(gl, gl)] += ci
    if prob.P:
        incl[np.ix_(gl, par)] += ld
        sign[np.ix_(gl, par)] += sd_
        coef[np.ix_(gl, par)] += cd
    ksum[gl] += ks
    etrace += et
    ltrace += lt


def _map_jobs(fn, items, jobs: int):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _status_error(status: int) -> MlggmError:
    msg = _STATUS_MESSAGES.get(status, f"kernel status {status}")
    if status == _kernels.STATUS_NONFINITE:
        return NumericalUnderflowError(msg)
    return MlggmError(f"sampler invariant violated: {msg}")


# single-update operations (used by tests and by custom drivers such as the
# joint-distribution sampler check); these call the same compiled kernels as
# the chain runners and mutate the state in place

def update_undirected_layer(
    layer: int, state: SamplerState, data: Dataset,
    prior: PriorConfig, rng: np.random.Generator,
) -> SamplerState:
    """One undirected sweep of layer `layer` (1-based): all pairs, then the
    per-vertex coefficient and precision refresh."""
    prob = _layer_problem_for(state, data, prior, layer - 1)
    return _single_kernel_call(prob, state, rng, do_und=True, do_dir=False, vertex=-1)


def update_directed(
    v: int, state: SamplerState, data: Dataset,
    prior: PriorConfig, rng: np.random.Generator,
) -> SamplerState:
    """One directed-edge step for vertex v (no-op for first-layer vertices)."""
    spec = ChainGraphSpec(p=data.p, layers=data.layers)
    k = spec.layer_of(v) - 1
    prob = _layer_problem_for(state, data, prior, k)
    local = prob.verts.index(v - 1)
    return _single_kernel_call(prob, state, rng, do_und=False, do_dir=True, vertex=local)


def _layer_problem_for(state, data, prior, k):
    if state.kappa.shape[0] != data.p:
        raise DimensionMismatchError("state and data disagree on the number of vertices")
    Y = data.values - data.values.mean(axis=0)
    return _LayerProblem(Y, data.layers, k, prior)


def _single_kernel_call(prob, state, rng, do_und: bool, do_dir: bool, vertex: int):
    eta, alpha, gamma, b, kappa = prob.local_state(state)
    empty = np.zeros(0)
    status = _kernels.bans_layer_chain(
        rng, prob.Gpp, prob.Gpt, prob.Gtt, prob.n,
        prob.lam, prob.a0, prob.b0, prob.c2, prob.logit_p, prob.logit_q,
        eta, alpha, gamma, b, kappa,
        1, 1, 1, False, do_und, do_dir, vertex,
        np.zeros((prob.m, prob.m)), np.zeros((prob.m, prob.P)),
        np.zeros((prob.m, prob.m)), np.zeros((prob.m, prob.P)),
        np.zeros((prob.m, prob.m)), np.zeros((prob.m, prob.P)),
        np.zeros(prob.m), empty, empty,
    )
    if status != _kernels.STATUS_OK:
        raise _status_error(status)
    prob.write_back(state, eta, alpha, gamma, b, kappa)
    return state


# explicit design builders; these spell out the regressions the kernels solve
# in sufficient-statistic space and are the reference for tests

def build_undirected_design(v: int, state: SamplerState, data: Dataset):
    """Adjusted response and design for v's neighbor regression.

    Returns (y_tilde, X, columns): y_tilde = y_v - Y_P b_v and one column per
    same-layer neighbor j, equal to y_j - Y_P b_j.
    """
    spec = ChainGraphSpec(p=data.p, layers=data.layers)
    k = spec.layer_of(v)
    P = [u - 1 for layer in data.layers[: k - 1] for u in layer]
    C = [u for u in data.layers[k - 1] if u != v]
    Y = data.values - data.values.mean(axis=0)
    if state.b.shape[0] != data.p:
        raise DimensionMismatchError("state and data disagree on the number of vertices")
    Yp = Y[:, P]
    y_tilde = Y[:, v - 1] - Yp @ state.b[v - 1, P]
    X = np.column_stack([Y[:, j - 1] - Yp @ state.b[j - 1, P] for j in C]) if C else np.zeros((data.n, 0))
    return y_tilde, X, tuple(C)


def build_directed_design(v: int, state: SamplerState, data: Dataset):
    """Adjusted response and stacked design for v's parent regression.

    Returns (y_tilde, X, stack): y_tilde = y_v - Y_C alpha_v; X holds the
    parent block Y_P followed by one block -alpha_vj * Y_P per current
    neighbor j (ascending label order); stack lists the (row vertex, parent
    vertex) identity of each column's coefficient.
    """
    spec = ChainGraphSpec(p=data.p, layers=data.layers)
    k = spec.layer_of(v)
    P = [u for layer in data.layers[: k - 1] for u in layer]
    C = [u for u in data.layers[k - 1] if u != v]
    Y = data.values - data.values.mean(axis=0)
    if state.b.shape[0] != data.p:
        raise DimensionMismatchError("state and data disagree on the number of vertices")
    Pidx = [u - 1 for u in P]
    Yp = Y[:, Pidx]
    y_tilde = Y[:, v - 1].copy()
    for j in C:
        y_tilde -= state.alpha[v - 1, j - 1] * Y[:, j - 1]
    neighbors = [j for j in C if state.eta[v - 1, j - 1]]
    blocks = [Yp]
    stack: list[tuple[int, int]] = [(v, u) for u in P]
    for j in neighbors:
        blocks.append(-state.alpha[v - 1, j - 1] * Yp)
        stack.extend((j, u) for u in P)
    X = np.hstack(blocks) if Pidx else np.zeros((data.n, 0))
    return y_tilde, X, tuple(stack)
