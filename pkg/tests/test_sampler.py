import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gammaln

from mlggm import (
    ChainGraphSpec,
    DIRECTED,
    Dataset,
    Edge,
    GenConfig,
    MlggmParameters,
    PriorConfig,
    UNDIRECTED,
    build_directed_design,
    build_undirected_design,
    candidate_ppis,
    initial_state,
    ppi,
    random_chain_graph,
    run_bans,
    run_bans_parallel,
    sample_data,
    sample_parameters,
    state_from_parameters,
    structured_sign_run,
    update_directed,
    update_undirected_layer,
    validate,
)
from mlggm.errors import (
    ConfigInvalidError,
    DegenerateColumnError,
    EmptyTraceError,
    StructureInconsistentError,
)


def toy_params(b42=0.8, k34=0.6):
    # two layers {1,2} and {3,4}; 1->3, 2->4, 3-4
    B = np.zeros((4, 4))
    B[2, 0] = 1.1
    B[3, 1] = b42
    K = np.eye(4)
    K[2, 3] = K[3, 2] = k34
    K[2, 2] = K[3, 3] = abs(k34) + 1.0
    return MlggmParameters(B=B, K=K, layers=((1, 2), (3, 4)))


def dataset_from(params, n, seed):
    ds = sample_data(params, n, np.random.default_rng(seed))
    return Dataset(ds.values - ds.values.mean(axis=0), ds.names, ds.layers)


class TestUndirectedDesign:
    def test_toy_neighbor_column(self):
        params = toy_params()
        ds = dataset_from(params, 50, 0)
        state = state_from_parameters(params)
        y_tilde, X, cols = build_undirected_design(3, state, ds)
        assert cols == (4,)
        Y = ds.values
        expected = Y[:, 3] - params.B[3, 1] * Y[:, 1]
        assert np.allclose(X[:, 0], expected, atol=1e-12)
        assert np.allclose(y_tilde, Y[:, 2] - params.B[2, 0] * Y[:, 0], atol=1e-12)

    def test_zero_b_gives_raw_columns(self):
        params = toy_params()
        ds = dataset_from(params, 30, 1)
        state = initial_state(ds)
        _, X, cols = build_undirected_design(3, state, ds)
        assert np.array_equal(X[:, 0], ds.values[:, 3])

    def test_reconstructs_generating_residual(self):
        # with the state at the generating parameters, y_tilde - X alpha_v is
        # the innovation of the node-wise representation
        params = toy_params()
        ds = dataset_from(params, 200, 2)
        state = state_from_parameters(params)
        Y = ds.values
        for v in (3, 4):
            y_tilde, X, cols = build_undirected_design(v, state, ds)
            alpha = np.array([state.alpha[v - 1, j - 1] for j in cols])
            resid = y_tilde - X @ alpha
            eps = Y - Y @ params.B.T  # column v is the structural residual
            alpha_full = state.alpha[v - 1]
            expected = eps[:, v - 1] - eps @ alpha_full
            assert np.allclose(resid, expected, atol=1e-10)


class TestDirectedDesign:
    def test_no_neighbors_reduces_to_parent_block(self):
        params = toy_params(k34=0.0)
        params.K[2, 3] = params.K[3, 2] = 0.0
        ds = dataset_from(params, 40, 3)
        state = state_from_parameters(params)
        y_tilde, X, stack = build_directed_design(3, state, ds)
        assert stack == ((3, 1), (3, 2))
        assert np.array_equal(X, ds.values[:, :2])

    def test_toy_neighbor_blocks(self):
        params = toy_params()
        ds = dataset_from(params, 40, 4)
        state = state_from_parameters(params)
        y_tilde, X, stack = build_directed_design(3, state, ds)
        assert stack == ((3, 1), (3, 2), (4, 1), (4, 2))
        a34 = state.alpha[2, 3]
        assert np.allclose(X[:, 2], -a34 * ds.values[:, 0], atol=1e-12)
        assert np.allclose(X[:, 3], -a34 * ds.values[:, 1], atol=1e-12)

    def test_truth_state_residual_variance(self):
        params = toy_params()
        ds = dataset_from(params, 100_000, 5)
        state = state_from_parameters(params)
        for v in (3, 4):
            y_tilde, X, stack = build_directed_design(v, state, ds)
            coef = np.array([state.b[r - 1, w - 1] for r, w in stack])
            resid = y_tilde - X @ coef
            target = 1.0 / params.K[v - 1, v - 1]
            se = resid.var() * math.sqrt(2.0 / resid.size)
            assert abs(resid.var() - target) < 4 * se + 1e-3


def single_layer_dataset(m, n, seed, rho=0.0):
    K = np.eye(m)
    if rho:
        K[0, 1] = K[1, 0] = rho
        K[0, 0] = K[1, 1] = 1.0 + abs(rho)
    params = MlggmParameters(B=np.zeros((m, m)), K=K, layers=(tuple(range(1, m + 1)),))
    return dataset_from(params, n, seed)


def node_log_marginal(y, X, d, a0, b0):
    """Closed-form log marginal of one node conditional with the slab
    coefficients and the precision integrated out analytically."""
    n = y.size
    k = X.shape[1] if X.ndim == 2 else 0
    if k:
        M = X.T @ X + d * np.eye(k)
        sign, logdet = np.linalg.slogdet(M)
        quad = y @ y - y @ X @ np.linalg.solve(M, X.T @ y)
        extra = 0.5 * k * math.log(d) - 0.5 * logdet
    else:
        quad = y @ y
        extra = 0.0
    return (
        -0.5 * n * math.log(2 * math.pi)
        + extra
        + a0 * math.log(b0)
        - gammaln(a0)
        + gammaln(a0 + 0.5 * n)
        - (a0 + 0.5 * n) * math.log(b0 + 0.5 * quad)
    )


class TestNodeMarginalAgainstQuadrature:
    def test_one_column_case(self):
        rng = np.random.default_rng(0)
        n = 8
        x = rng.standard_normal(n)
        y = 0.6 * x + rng.standard_normal(n)
        d, a0, b0 = 2.0, 1.5, 1.0

        def integrand(alpha, kappa):
            resid = y - alpha * x
            like = (kappa / (2 * math.pi)) ** (n / 2) * math.exp(-0.5 * kappa * resid @ resid)
            prior_a = math.sqrt(d * kappa / (2 * math.pi)) * math.exp(-0.5 * d * kappa * alpha**2)
            prior_k = b0**a0 / math.gamma(a0) * kappa ** (a0 - 1) * math.exp(-b0 * kappa)
            return like * prior_a * prior_k

        val, err = integrate.dblquad(integrand, 0, 60, -8, 8, epsabs=1e-12, epsrel=1e-10)
        closed = node_log_marginal(y, x[:, None], d, a0, b0)
        assert math.log(val) == pytest.approx(closed, abs=1e-6)


def undirected_config_posterior(Y, lam, delta, q):
    """Exact pseudo-posterior over the pair-indicator configurations of one
    layer with no parents, by enumeration."""
    m = Y.shape[1]
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    a0 = 0.5 * (delta + m - 1)
    b0 = 0.5 * lam
    log_probs = {}
    for bits in range(2 ** len(pairs)):
        eta = np.zeros((m, m), dtype=bool)
        for idx, (i, j) in enumerate(pairs):
            if bits >> idx & 1:
                eta[i, j] = eta[j, i] = True
        total = 0.0
        for idx, (i, j) in enumerate(pairs):
            on = bits >> idx & 1
            total += math.log(q) if on else math.log(1 - q)
        for v in range(m):
            act = [j for j in range(m) if eta[v, j]]
            X = Y[:, act] if act else np.zeros((Y.shape[0], 0))
            total += node_log_marginal(Y[:, v], X, lam, a0, b0)
        log_probs[bits] = total
    arr = np.array([log_probs[b] for b in sorted(log_probs)])
    arr = np.exp(arr - arr.max())
    return arr / arr.sum()


class TestUndirectedEnumerationOracle:
    def test_pair_marginals_match_enumeration(self):
        ds = single_layer_dataset(3, 40, seed=11, rho=0.45)
        Y = ds.values
        prior = PriorConfig(lambda_tau=2.0, delta_tau=2.0, q_undir=0.2)
        exact = undirected_config_posterior(Y, 2.0, 2.0, 0.2)
        pairs = [(0, 1), (0, 2), (1, 2)]
        exact_marg = np.zeros(3)
        for bits, prob in enumerate(exact):
            for idx in range(3):
                if bits >> idx & 1:
                    exact_marg[idx] += prob
        trace = run_bans(ds, prior, n_iter=60_000, burn_in=5_000, seed=21)
        g = ppi(trace)
        sampled = np.array([g[i, j] for i, j in pairs])
        assert np.all(np.abs(sampled - exact_marg) < 0.02), (sampled, exact_marg)

    def test_config_frequencies_match_enumeration(self):
        ds = single_layer_dataset(3, 30, seed=12, rho=0.4)
        Y = ds.values
        prior = PriorConfig(lambda_tau=2.0, delta_tau=2.0, q_undir=0.3)
        exact = undirected_config_posterior(Y, 2.0, 2.0, 0.3)
        state = initial_state(ds)
        rng = np.random.default_rng(5)
        pairs = [(0, 1), (0, 2), (1, 2)]
        counts = np.zeros(8)
        sweeps = 6_000
        for s in range(sweeps):
            update_undirected_layer(1, state, ds, prior, rng)
            if s >= 500:
                bits = sum(
                    1 << idx for idx, (i, j) in enumerate(pairs) if state.eta[i, j]
                )
                counts[bits] += 1
        freq = counts / counts.sum()
        assert np.all(np.abs(freq - exact) < 0.05), (freq, exact)


def directed_config_posterior(Y, c2, lam, delta, p_dir):
    """Exact posterior over the parent indicators of a single last-layer
    vertex (columns 0..P-1 parents, column P the response)."""
    P = Y.shape[1] - 1
    y = Y[:, P]
    a0 = 0.5 * delta  # layer of size 1
    b0 = 0.5 * lam
    d = 1.0 / c2
    log_probs = []
    for bits in range(2**P):
        act = [w for w in range(P) if bits >> w & 1]
        X = Y[:, act] if act else np.zeros((Y.shape[0], 0))
        total = node_log_marginal(y, X, d, a0, b0)
        total += sum(
            math.log(p_dir) if bits >> w & 1 else math.log(1 - p_dir) for w in range(P)
        )
        log_probs.append(total)
    arr = np.exp(np.array(log_probs) - max(log_probs))
    return arr / arr.sum()


class TestDirectedEnumerationOracle:
    def test_parent_marginals_match_enumeration(self):
        B = np.zeros((3, 3))
        B[2, 0] = 0.35
        params = MlggmParameters(B=B, K=np.eye(3), layers=((1, 2), (3,)))
        ds = dataset_from(params, 30, seed=13)
        prior = PriorConfig(lambda_tau=2.0, delta_tau=2.0, p_dir=0.25, q_undir=0.2)
        exact = directed_config_posterior(ds.values, prior.c2_value(1), 2.0, 2.0, 0.25)
        exact_marg = np.zeros(2)
        for bits, prob in enumerate(exact):
            for w in range(2):
                if bits >> w & 1:
                    exact_marg[w] += prob
        trace = run_bans(ds, prior, n_iter=60_000, burn_in=5_000, seed=31)
        g = ppi(trace)
        sampled = np.array([g[2, 0], g[2, 1]])
        assert np.all(np.abs(sampled - exact_marg) < 0.02), (sampled, exact_marg)


class TestUpdateOperations:
    def test_orthogonal_column_disfavors_inclusion(self):
        # two orthogonal columns in one layer: the Bayes factor penalizes the
        # slab, so inclusion stays below the 0.5 prior
        n = 200
        y1 = np.concatenate([np.ones(n // 2), -np.ones(n // 2)])
        y2 = np.concatenate([np.ones(n // 4), -np.ones(n // 2), np.ones(n // 4)])
        Y = np.column_stack([y1, y2]) + 0.0
        ds = Dataset(Y - Y.mean(axis=0), ("V1", "V2"), ((1, 2),))
        prior = PriorConfig(q_undir=0.5)
        rng = np.random.default_rng(3)
        hits = 0
        trials = 400
        for _ in range(trials):
            state = initial_state(ds)
            update_undirected_layer(1, state, ds, prior, rng)
            hits += bool(state.eta[0, 1])
        assert hits / trials < 0.3

    def test_eta_stays_symmetric(self):
        ds = single_layer_dataset(4, 60, seed=14, rho=0.5)
        state = initial_state(ds)
        rng = np.random.default_rng(8)
        prior = PriorConfig()
        for _ in range(50):
            update_undirected_layer(1, state, ds, prior, rng)
            assert np.array_equal(state.eta, state.eta.T)
            assert np.all(state.alpha[~state.eta] == 0.0)

    def test_true_edge_recovered_on_small_instance(self):
        # one layer, three vertices, strong partial correlation on one pair
        prior = PriorConfig()
        ppis = []
        for seed in range(20):
            K = np.eye(3)
            K[0, 1] = K[1, 0] = -0.5  # partial correlation 0.5 after scaling
            K[0, 0] = K[1, 1] = 1.0
            params = MlggmParameters(B=np.zeros((3, 3)), K=K, layers=((1, 2, 3),))
            ds = dataset_from(params, 200, seed=100 + seed)
            trace = run_bans(ds, prior, n_iter=3_000, burn_in=1_000, seed=seed)
            ppis.append(ppi(trace)[0, 1])
        assert np.mean(ppis) > 0.9

    def test_first_layer_directed_update_is_noop(self):
        ds = single_layer_dataset(3, 50, seed=15)
        state = initial_state(ds)
        before = state.copy()
        update_directed(2, state, ds, PriorConfig(), np.random.default_rng(0))
        assert np.array_equal(state.gamma, before.gamma)
        assert np.array_equal(state.b, before.b)
        assert np.array_equal(state.kappa, before.kappa)

    def test_tiny_prior_probability_forces_exclusion(self):
        B = np.zeros((4, 4))
        B[2, 0] = 0.05  # weak signal
        params = MlggmParameters(B=B, K=np.eye(4), layers=((1, 2), (3, 4)))
        ds = dataset_from(params, 60, seed=16)
        prior = PriorConfig(p_dir=1e-12, q_undir=1e-12)
        trace = run_bans(ds, prior, n_iter=2_000, burn_in=500, seed=7)
        assert trace.inclusion_sum.sum() == 0.0

    def test_posterior_mean_matches_conjugate_regression(self):
        # single parent, strong coefficient: posterior mean of the directed
        # coefficient agrees with the exact conjugate regression oracle
        errs = []
        for seed in range(20):
            B = np.zeros((2, 2))
            B[1, 0] = 1.0
            params = MlggmParameters(B=B, K=np.eye(2), layers=((1,), (2,)))
            ds = dataset_from(params, 200, seed=300 + seed)
            prior = PriorConfig()
            trace = run_bans(ds, prior, n_iter=4_000, burn_in=1_000, seed=seed)
            mean_b = trace.coef_sum[1, 0] / max(trace.inclusion_sum[1, 0], 1.0)
            errs.append(mean_b - 1.0)
            y = ds.values[:, 1]
            x = ds.values[:, 0]
            d = 1.0 / prior.c2_value(1)
            oracle = x @ y / (x @ x + d)
            assert abs(mean_b - oracle) < 0.05
        assert np.all(np.abs(errs) < 0.15)


class TestRunBans:
    def test_empty_trace_rejected(self):
        ds = single_layer_dataset(3, 50, seed=17)
        with pytest.raises(EmptyTraceError):
            run_bans(ds, PriorConfig(), n_iter=100, burn_in=100, seed=0)

    def test_degenerate_column_rejected(self):
        Y = np.ones((30, 2))
        Y[:, 0] = np.random.default_rng(0).standard_normal(30)
        ds = Dataset(Y, ("V1", "V2"), ((1, 2),))
        with pytest.raises(DegenerateColumnError):
            run_bans(ds, PriorConfig(), n_iter=100, burn_in=10, seed=0)

    def test_too_few_observations_rejected(self):
        ds = Dataset(np.array([[1.0, 2.0]]), ("V1", "V2"), ((1, 2),))
        with pytest.raises(ConfigInvalidError):
            run_bans(ds, PriorConfig(), n_iter=100, burn_in=10, seed=0)

    def test_determinism(self):
        params = toy_params()
        ds = dataset_from(params, 80, seed=18)
        a = run_bans(ds, PriorConfig(), n_iter=500, burn_in=100, seed=5, jobs=2)
        b = run_bans(ds, PriorConfig(), n_iter=500, burn_in=100, seed=5)
        assert np.array_equal(a.inclusion_sum, b.inclusion_sum)
        assert np.array_equal(a.edge_count_trace, b.edge_count_trace)
        assert np.array_equal(a.loglik_trace, b.loglik_trace)

    def test_ppi_matrix_symmetric_within_layers(self):
        params = toy_params()
        ds = dataset_from(params, 100, seed=19)
        trace = run_bans(ds, PriorConfig(), n_iter=1_000, burn_in=200, seed=2)
        g = ppi(trace)
        assert g[2, 3] == g[3, 2]

    def test_thinning_stored_count(self):
        ds = single_layer_dataset(3, 40, seed=20)
        trace = run_bans(ds, PriorConfig(), n_iter=1_000, burn_in=500, thin=5, seed=1)
        assert trace.n_stored == 100
        assert trace.edge_count_trace.size == 100

    def test_label_equivariance_within_layer(self):
        # permuting labels inside a layer (and the matching data columns)
        # permutes the posterior inclusion probabilities up to seed noise
        cfg = GenConfig(p=6, n=150, q=2, p_e=0.5, seed=0)
        rng = np.random.default_rng(0)
        spec = random_chain_graph(cfg, rng)
        params = sample_parameters(spec, cfg, rng)
        ds = dataset_from(params, 150, seed=21)
        perm = [1, 0, 2, 3, 5, 4]  # swap 1<->2 and 5<->6
        Y2 = ds.values[:, perm]
        ds2 = Dataset(Y2, tuple(ds.names[j] for j in perm), ds.layers)
        g1_runs, g2_runs = [], []
        for seed in range(10):
            g1_runs.append(ppi(run_bans(ds, PriorConfig(), n_iter=2_000, burn_in=500, seed=seed)))
            g2_runs.append(ppi(run_bans(ds2, PriorConfig(), n_iter=2_000, burn_in=500, seed=1_000 + seed)))
        g1 = np.stack(g1_runs)
        g2 = np.stack(g2_runs)
        g2_back = g2[:, perm, :][:, :, perm]
        diff = g1.mean(axis=0) - g2_back.mean(axis=0)
        se = np.sqrt(g1.var(axis=0, ddof=1) / 10 + g2_back.var(axis=0, ddof=1) / 10)
        assert np.all(np.abs(diff) <= 3.5 * se + 0.02)


class TestRunBansParallel:
    def test_and_subset_of_or(self):
        params = toy_params()
        ds = dataset_from(params, 100, seed=22)
        trace = run_bans_parallel(ds, PriorConfig(), n_iter=1_500, burn_in=300, seed=3)
        g_and = candidate_ppis(trace, "and")
        g_or = candidate_ppis(trace, "or")
        for e in g_and:
            assert g_and[e] <= g_or[e]

    def test_single_vertex_layers_match_bans(self):
        # with one vertex per layer there is no symmetric coupling, so the
        # two modes consume identical streams and produce identical traces
        B = np.zeros((3, 3))
        B[1, 0] = 0.9
        B[2, 1] = -0.7
        params = MlggmParameters(B=B, K=np.eye(3), layers=((1,), (2,), (3,)))
        ds = dataset_from(params, 120, seed=23)
        a = run_bans(ds, PriorConfig(), n_iter=800, burn_in=200, seed=9)
        b = run_bans_parallel(ds, PriorConfig(), n_iter=800, burn_in=200, seed=9)
        assert np.array_equal(a.inclusion_sum, b.inclusion_sum)
        assert np.array_equal(a.sign_pos_sum, b.sign_pos_sum)
        assert np.array_equal(a.kappa_sum, b.kappa_sum)

    def test_determinism_across_jobs(self):
        params = toy_params()
        ds = dataset_from(params, 80, seed=24)
        a = run_bans_parallel(ds, PriorConfig(), n_iter=600, burn_in=100, seed=4, jobs=1)
        b = run_bans_parallel(ds, PriorConfig(), n_iter=600, burn_in=100, seed=4, jobs=3)
        assert np.array_equal(a.inclusion_sum, b.inclusion_sum)

    def test_recovers_structure(self):
        params = toy_params()
        ds = dataset_from(params, 300, seed=25)
        trace = run_bans_parallel(ds, PriorConfig(), n_iter=3_000, burn_in=1_000, seed=6)
        g = candidate_ppis(trace)
        assert g[Edge(1, 3, DIRECTED)] > 0.9
        assert g[Edge(2, 4, DIRECTED)] > 0.9
        assert g[Edge(3, 4, UNDIRECTED)] > 0.9
        assert g[Edge(1, 4, DIRECTED)] < 0.5


class TestStructuredSignRun:
    def test_strong_positive_coefficient(self):
        B = np.zeros((2, 2))
        B[1, 0] = 1.0
        params = MlggmParameters(B=B, K=np.eye(2), layers=((1,), (2,)))
        ds = dataset_from(params, 200, seed=26)
        probs = structured_sign_run(
            ds, [Edge(1, 2, DIRECTED)], PriorConfig(), n_iter=3_000, burn_in=500, seed=1
        )
        assert probs[Edge(1, 2, DIRECTED)] > 0.99

    def test_negative_partial_correlation_detected(self):
        # positive off-diagonal precision means negative partial correlation
        K = np.array([[1.6, 0.6], [0.6, 1.6]])
        params = MlggmParameters(B=np.zeros((2, 2)), K=K, layers=((1, 2),))
        ds = dataset_from(params, 300, seed=27)
        probs = structured_sign_run(
            ds, [Edge(1, 2, UNDIRECTED)], PriorConfig(), n_iter=3_000, burn_in=500, seed=2
        )
        assert probs[Edge(1, 2, UNDIRECTED)] < 0.01

    def test_null_edge_is_coin_flip(self):
        params = MlggmParameters(B=np.zeros((2, 2)), K=np.eye(2), layers=((1,), (2,)))
        runs = []
        for seed in range(10):
            ds = dataset_from(params, 200, seed=400 + seed)
            probs = structured_sign_run(
                ds, [Edge(1, 2, DIRECTED)], PriorConfig(), n_iter=2_000, burn_in=500, seed=seed
            )
            runs.append(probs[Edge(1, 2, DIRECTED)])
        assert abs(np.mean(runs) - 0.5) < 0.15

    def test_illegal_structure_rejected(self):
        ds = single_layer_dataset(3, 50, seed=28)
        with pytest.raises(StructureInconsistentError):
            structured_sign_run(ds, [Edge(1, 2, DIRECTED)], PriorConfig(), n_iter=100, burn_in=10)


class TestSupportConsistency:
    def test_final_state_invariants_via_updates(self):
        params = toy_params()
        ds = dataset_from(params, 100, seed=29)
        state = initial_state(ds)
        prior = PriorConfig()
        rng = np.random.default_rng(11)
        for _ in range(30):
            for layer in (1, 2):
                update_undirected_layer(layer, state, ds, prior, rng)
            for v in (1, 2, 3, 4):
                update_directed(v, state, ds, prior, rng)
            assert np.array_equal(state.eta, state.eta.T)
            assert np.all(state.alpha[~state.eta] == 0.0)
            assert np.all(state.b[~state.gamma] == 0.0)
            assert np.all(state.kappa > 0.0)
