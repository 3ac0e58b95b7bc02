import numpy as np
import pytest

from kromfac.graph import Graph
from kromfac.kron import (
    EmConfig,
    KroneckerModel,
    NodeMapping,
    ascend_theta,
    kron_entry,
    kron_log_likelihood,
    kron_ll_gradient,
    kronem_fit,
    smallest_power,
)

THETA = np.array([[0.9, 0.5], [0.5, 0.3]])


def materialize(model):
    """Brute-force K-fold Kronecker power (test oracle)."""
    out = model.theta
    for _ in range(model.k - 1):
        out = np.kron(out, model.theta)
    return out


def identity_mapping(n, observed=None):
    return NodeMapping(sigma=np.arange(n), observed_count=n if observed is None else observed)


class TestKronEntry:
    def test_matches_materialized_k2(self):
        model = KroneckerModel(2, THETA, 2)
        full = materialize(model)
        assert kron_entry(model, 0, 0) == pytest.approx(0.81)
        assert kron_entry(model, 3, 3) == pytest.approx(0.09)
        for a in range(4):
            for b in range(4):
                assert kron_entry(model, a, b) == pytest.approx(full[a, b], abs=1e-15)

    def test_uniform_theta_power(self):
        p = 0.42
        model = KroneckerModel(2, np.full((2, 2), p), 5)
        assert kron_entry(model, 13, 27) == pytest.approx(p**5)

    def test_k3_explicit_triple_product(self):
        # 8-index setting used for the 6-observed/2-missing worked example.
        model = KroneckerModel(2, THETA, 3)
        full = np.kron(np.kron(THETA, THETA), THETA)
        for a in range(8):
            for b in range(8):
                assert kron_entry(model, a, b) == pytest.approx(full[a, b], abs=1e-15)

    def test_out_of_range(self):
        model = KroneckerModel(2, THETA, 2)
        with pytest.raises(ValueError):
            kron_entry(model, 4, 0)

    def test_exhaustive_small_powers(self):
        rng = np.random.default_rng(0)
        for k in range(1, 6):
            theta = rng.uniform(0.05, 0.95, (2, 2))
            model = KroneckerModel(2, theta, k)
            full = materialize(model)
            n = 2**k
            got = np.array([[kron_entry(model, a, b) for b in range(n)] for a in range(n)])
            assert np.allclose(got, full, atol=1e-12)


class TestLogLikelihood:
    def test_single_node(self):
        g = Graph(1, [])
        model = KroneckerModel(2, THETA, 1)
        assert kron_log_likelihood(g, identity_mapping(1), model) == 0.0

    def test_two_nodes_one_edge(self):
        g = Graph(2, [(0, 1)])
        model = KroneckerModel(2, THETA, 1)
        ll = kron_log_likelihood(g, identity_mapping(2), model)
        assert ll == pytest.approx(np.log(0.5))

    def test_exact_matches_brute_force(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            n = 12
            model = KroneckerModel(2, rng.uniform(0.2, 0.8, (2, 2)), 4)
            sigma = rng.choice(16, size=n, replace=False)
            mapping = NodeMapping(sigma=sigma, observed_count=n)
            edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.3]
            g = Graph(n, edges)
            full = materialize(model)
            expect = 0.0
            for u in range(n):
                for v in range(u + 1, n):
                    p = full[sigma[u], sigma[v]]
                    expect += np.log(p) if g.has_edge(u, v) else np.log1p(-p)
            got = kron_log_likelihood(g, mapping, model)
            assert got == pytest.approx(expect, rel=1e-10)

    def test_approximation_close_to_exact(self):
        # Force the approximate zero-sum path by lowering the exact limit.
        import kromfac.kron as kron_mod

        rng = np.random.default_rng(2)
        n = 64
        model = KroneckerModel(2, rng.uniform(0.2, 0.7, (2, 2)), 6)
        mapping = identity_mapping(n)
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.05]
        g = Graph(n, edges)
        exact = kron_log_likelihood(g, mapping, model)
        old = kron_mod.EXACT_PAIR_LIMIT
        kron_mod.EXACT_PAIR_LIMIT = 1
        try:
            approx = kron_log_likelihood(g, mapping, model)
        finally:
            kron_mod.EXACT_PAIR_LIMIT = old
        assert approx == pytest.approx(exact, rel=0.01)

    def test_digit_swap_invariance(self):
        # With theta invariant under index swap, relabeling every mapped
        # index by flipping one digit leaves the likelihood unchanged.
        theta = np.array([[0.6, 0.4], [0.4, 0.6]])
        model = KroneckerModel(2, theta, 4)
        rng = np.random.default_rng(3)
        n = 10
        sigma = rng.choice(16, size=n, replace=False)
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.3]
        g = Graph(n, edges)
        ll1 = kron_log_likelihood(g, NodeMapping(sigma, n), model)
        flipped = sigma ^ 0b0010  # flip digit 1 of every index
        ll2 = kron_log_likelihood(g, NodeMapping(flipped, n), model)
        assert ll2 == pytest.approx(ll1, rel=1e-12)


class TestGradient:
    @pytest.mark.parametrize("seed", range(3))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        n = 16
        model = KroneckerModel(2, rng.uniform(0.2, 0.8, (2, 2)), 4)
        mapping = NodeMapping(rng.choice(16, size=n, replace=False), n)
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.25]
        g = Graph(n, edges)
        grad = kron_ll_gradient(g, mapping, model)
        h = 1e-5
        for i in range(2):
            for j in range(2):
                tp = model.theta.copy()
                tp[i, j] += h
                tm = model.theta.copy()
                tm[i, j] -= h
                fd = (
                    kron_log_likelihood(g, mapping, KroneckerModel(2, tp, 4))
                    - kron_log_likelihood(g, mapping, KroneckerModel(2, tm, 4))
                ) / (2 * h)
                assert grad[i, j] == pytest.approx(fd, rel=1e-4)


class TestAscendTheta:
    def test_monotone_likelihood(self):
        rng = np.random.default_rng(4)
        n = 20
        model = KroneckerModel(2, rng.uniform(0.3, 0.7, (2, 2)), 5)
        mapping = NodeMapping(rng.choice(32, size=n, replace=False), n)
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.2]
        g = Graph(n, edges)
        lls = [kron_log_likelihood(g, mapping, model)]
        cur = model
        for _ in range(10):
            cur = ascend_theta(g, mapping, cur, steps=1, learning_rate=1e-4)
            lls.append(kron_log_likelihood(g, mapping, cur))
        for a, b in zip(lls, lls[1:]):
            assert b >= a - 1e-9


class TestKronemFit:
    def test_noop_m_step_keeps_theta(self):
        g = Graph(4, [(0, 1), (2, 3)])
        theta = np.array([[0.7, 0.4], [0.4, 0.2]])
        model, mapping = kronem_fit(
            g, 0, 2, theta, EmConfig(em_iters=1, grad_steps=0, mcmc_samples=1, seed=0)
        )
        assert np.allclose(model.theta, theta)
        assert model.k == smallest_power(2, 4)

    def test_mapping_shape_for_worked_example(self):
        # 6 observed + 2 missing nodes, base dim 2 -> 8 positions, power 3.
        g = Graph(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)])
        model, mapping = kronem_fit(
            g, 2, 2, None, EmConfig(em_iters=2, grad_steps=2, mcmc_samples=20, seed=5)
        )
        assert len(mapping) == 8
        assert model.k == 3
        assert mapping.observed_count == 6

    def test_deterministic(self):
        g = Graph(8, [(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7), (0, 7)])
        cfg = EmConfig(em_iters=3, grad_steps=5, mcmc_samples=40, seed=11)
        m1, s1 = kronem_fit(g, 2, 2, None, cfg)
        m2, s2 = kronem_fit(g, 2, 2, None, cfg)
        assert np.array_equal(m1.theta, m2.theta)
        assert np.array_equal(s1.sigma, s2.sigma)

    def test_recovers_generating_theta(self):
        # Generate-then-recover oracle; alignment over index relabelings of
        # the base matrix (the model is only identifiable up to them).
        theta_true = np.array([[0.9, 0.6], [0.6, 0.2]])
        gen = KroneckerModel(2, theta_true, 8)
        rng = np.random.default_rng(100)
        n = 256
        full = materialize(gen)
        edges = [
            (u, v)
            for u in range(n)
            for v in range(u + 1, n)
            if rng.random() < full[u, v]
        ]
        g = Graph(n, edges)
        model, _ = kronem_fit(
            g, 0, 2, None, EmConfig(em_iters=8, grad_steps=20, mcmc_samples=400, seed=7)
        )
        err = aligned_error(model.theta, theta_true)
        assert err <= 0.15


def aligned_error(theta_hat, theta_true):
    """Mean absolute entry error minimized over base-index relabelings."""
    n0 = theta_true.shape[0]
    import itertools

    best = np.inf
    for perm in itertools.permutations(range(n0)):
        p = np.asarray(perm)
        err = np.abs(theta_hat[np.ix_(p, p)] - theta_true).mean()
        best = min(best, err)
    return best
