"""Kronecker generative graph model and EM fitting.

The model is a small parameter matrix theta (entries in (0,1)) whose
K-fold Kronecker power gives an edge-probability matrix over n0**k
indices. Entries are always evaluated lazily from base-n0 digits; the
power is never materialized except in tests.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

THETA_FLOOR = 1e-4
THETA_CEIL = 1.0 - 1e-4

# Exact all-pairs summation is used when the Kronecker power has at most
# this many indices; above it, the zero-sum falls back to a second-order
# expansion with an explicit sum-over-edges correction.
EXACT_PAIR_LIMIT = 4096


@dataclass(frozen=True)
class KroneckerModel:
    """n0 x n0 parameter matrix plus Kronecker power k."""

    n0: int
    theta: np.ndarray
    k: int

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.shape != (self.n0, self.n0):
            raise ValueError(f"theta must be {self.n0}x{self.n0}")
        if np.any(theta <= 0.0) or np.any(theta >= 1.0):
            raise ValueError("theta entries must lie strictly inside (0,1)")
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        object.__setattr__(self, "theta", theta)

    @property
    def num_indices(self) -> int:
        return self.n0**self.k

    def to_json(self) -> str:
        return json.dumps(
            {"n0": self.n0, "k": self.k, "theta": self.theta.tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "KroneckerModel":
        d = json.loads(text)
        return cls(n0=d["n0"], theta=np.array(d["theta"]), k=d["k"])


@dataclass(frozen=True)
class NodeMapping:
    """Injective placement of N+M node positions into theta^k indices.

    Positions 0..N-1 are observed nodes, the rest are missing nodes.
    """

    sigma: np.ndarray
    observed_count: int

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=np.int64)
        if len(set(sigma.tolist())) != sigma.size:
            raise ValueError("sigma must be injective")
        if not (0 <= self.observed_count <= sigma.size):
            raise ValueError("observed_count out of range")
        object.__setattr__(self, "sigma", sigma)

    def __len__(self) -> int:
        return int(self.sigma.size)

    def to_json(self) -> str:
        return json.dumps(self.sigma.tolist())


@dataclass(frozen=True)
class EmConfig:
    em_iters: int = 30
    mcmc_samples: int | None = None  # None -> 10 * (N + M)
    grad_steps: int = 50
    learning_rate: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if self.em_iters < 1 or self.grad_steps < 0:
            raise ValueError("iteration counts must be nonnegative (em_iters >= 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def smallest_power(n0: int, size: int) -> int:
    """Smallest k with n0**k >= size."""
    k = 1
    while n0**k < size:
        k += 1
    return k


def index_digits(indices: np.ndarray, n0: int, k: int) -> np.ndarray:
    """Base-n0 digits of each index, least significant first; shape (len, k)."""
    idx = np.asarray(indices, dtype=np.int64)
    out = np.empty((idx.size, k), dtype=np.int64)
    rem = idx.copy()
    for d in range(k):
        out[:, d] = rem % n0
        rem //= n0
    return out


def kron_entry(model: KroneckerModel, a: int, b: int) -> float:
    """Entry (a, b) of the K-fold Kronecker power of theta."""
    nk = model.num_indices
    if not (0 <= a < nk and 0 <= b < nk):
        raise ValueError(f"index out of range for n0^k={nk}")
    p = 1.0
    ra, rb = a, b
    for _ in range(model.k):
        p *= model.theta[ra % model.n0, rb % model.n0]
        ra //= model.n0
        rb //= model.n0
    return p


def _entry_matrix(model: KroneckerModel, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Kronecker-power entries for all (rows[i], cols[j]) pairs, vectorized."""
    dr = index_digits(rows, model.n0, model.k)
    dc = index_digits(cols, model.n0, model.k)
    out = np.ones((rows.size, cols.size))
    for d in range(model.k):
        out *= model.theta[dr[:, d][:, None], dc[None, :, d]]
    return out


def _edge_arrays(a_full) -> tuple[np.ndarray, np.ndarray]:
    us, vs = [], []
    for u, v in a_full.edges():
        us.append(u)
        vs.append(v)
    return np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64)


def _pair_count(n: int) -> float:
    return n * (n - 1) / 2.0


def _dense_adjacency(a_full) -> np.ndarray:
    a = np.zeros((a_full.n, a_full.n))
    for u, v in a_full.edges():
        a[u, v] = 1.0
        a[v, u] = 1.0
    return a


def kron_log_likelihood(a_full, mapping: NodeMapping, model: KroneckerModel) -> float:
    """Log-likelihood of the adjacency under the permuted Kronecker model.

    Sums over unordered node pairs u < v:
        a_uv * log p + (1 - a_uv) * log(1 - p),  p = [theta^k]_{sigma(u), sigma(v)}.

    Exact over all pairs when n0**k <= EXACT_PAIR_LIMIT; otherwise the
    zero-sum uses a second-order expansion of log(1-p) with the full-matrix
    moment sums scaled to the mapped pair universe, corrected by an exact
    sum over the edge pairs.
    """
    if len(mapping) != a_full.n:
        raise ValueError("mapping length must equal node count")
    if model.num_indices < a_full.n:
        raise ValueError("model index space too small for graph")
    n = a_full.n
    if n <= 1:
        return 0.0
    sigma = mapping.sigma

    if model.num_indices <= EXACT_PAIR_LIMIT:
        p = _entry_matrix(model, sigma, sigma)
        a = _dense_adjacency(a_full)
        iu = np.triu_indices(n, k=1)
        pu, au = p[iu], a[iu]
        return float(np.sum(au * np.log(pu) + (1.0 - au) * np.log1p(-pu)))

    us, vs = _edge_arrays(a_full)
    if us.size:
        pe = _pair_entries(model, sigma[us], sigma[vs])
        edge_log = float(np.sum(np.log(pe)))
        edge_taylor = float(np.sum(pe + 0.5 * pe**2))
    else:
        edge_log = 0.0
        edge_taylor = 0.0
    s1, s2 = _mapped_moment_sums(model, n)
    zero_sum = -(s1 + 0.5 * s2) + edge_taylor
    return edge_log + zero_sum


def _pair_entries(model: KroneckerModel, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Entries for aligned (rows[i], cols[i]) pairs."""
    dr = index_digits(rows, model.n0, model.k)
    dc = index_digits(cols, model.n0, model.k)
    out = np.ones(rows.size)
    for d in range(model.k):
        out *= model.theta[dr[:, d], dc[:, d]]
    return out


def _mapped_moment_sums(model: KroneckerModel, n: int) -> tuple[float, float]:
    """First and second moment sums of theta^k over the mapped pair universe.

    The full-matrix off-diagonal sums have closed forms; they are scaled
    by the fraction of index pairs actually occupied by mapped nodes.
    """
    nk = model.num_indices
    rho = _pair_count(n) / _pair_count(nk)
    th = model.theta
    s1_full = (th.sum() ** model.k - np.trace(th) ** model.k) / 2.0
    s2_full = ((th**2).sum() ** model.k - np.trace(th**2) ** model.k) / 2.0
    return rho * s1_full, rho * s2_full


def kron_ll_gradient(a_full, mapping: NodeMapping, model: KroneckerModel) -> np.ndarray:
    """Gradient of kron_log_likelihood w.r.t. each theta entry (raw,
    unsymmetrized, matching the u < v pair orientation)."""
    n = a_full.n
    th = model.theta
    n0, k = model.n0, model.k
    grad = np.zeros_like(th)
    if n <= 1:
        return grad
    sigma = mapping.sigma
    dg = index_digits(sigma, n0, k)

    if model.num_indices <= EXACT_PAIR_LIMIT:
        p = _entry_matrix(model, sigma, sigma)
        a = _dense_adjacency(a_full)
        # Per-pair weight on d log(p)/d theta: 1 for edges, -p/(1-p) for non-edges.
        w = np.where(a > 0, 1.0, -p / (1.0 - p))
        w = np.triu(w, k=1)
        for d in range(k):
            onehot = np.eye(n0)[dg[:, d]]  # (n, n0)
            grad += onehot.T @ w @ onehot
        return grad / th

    us, vs = _edge_arrays(a_full)
    if us.size:
        pe = _pair_entries(model, sigma[us], sigma[vs])
        du = index_digits(sigma[us], n0, k)
        dv = index_digits(sigma[vs], n0, k)
        # Edge terms: d/dtheta_ij [log p + p + p^2/2] = (1 + p + p^2) c_ij / theta_ij.
        we = 1.0 + pe + pe**2
        for d in range(k):
            np.add.at(grad, (du[:, d], dv[:, d]), we)
        grad /= th
    # Approximated zero-sum: -(rho * (S1_full + S2_full / 2)).
    nk = model.num_indices
    rho = _pair_count(n) / _pair_count(nk)
    s1_grad = (k * th.sum() ** (k - 1)) * np.ones_like(th)
    s1_grad -= np.diag(np.full(n0, k * np.trace(th) ** (k - 1)))
    s2_grad = (k * (th**2).sum() ** (k - 1)) * 2.0 * th
    s2_grad -= np.diag(np.diag(2.0 * th) * (k * np.trace(th**2) ** (k - 1)))
    grad -= rho * (s1_grad + 0.5 * s2_grad) / 2.0
    return grad


def _clamp(theta: np.ndarray) -> np.ndarray:
    return np.clip(theta, THETA_FLOOR, THETA_CEIL)


def _symmetrize(theta: np.ndarray) -> np.ndarray:
    return (theta + theta.T) / 2.0


def ascend_theta(
    a_full,
    mapping: NodeMapping,
    model: KroneckerModel,
    steps: int,
    learning_rate: float,
    monotone_tol: float = 1e-9,
) -> KroneckerModel:
    """Projected gradient ascent on the log-likelihood with backtracking.

    The gradient is projected onto symmetric matrices so theta stays
    symmetric throughout; each accepted step never decreases the
    likelihood by more than `monotone_tol`.
    """
    theta = model.theta.copy()
    cur = kron_log_likelihood(a_full, mapping, model)
    for _ in range(steps):
        g = kron_ll_gradient(a_full, mapping, replace(model, theta=theta))
        g = _symmetrize(g)
        step = learning_rate
        accepted = False
        for _ in range(20):
            cand = _clamp(theta + step * g)
            cand_ll = kron_log_likelihood(
                a_full, mapping, replace(model, theta=cand)
            )
            if cand_ll >= cur - monotone_tol:
                theta, cur, accepted = cand, cand_ll, True
                break
            step /= 2.0
        if not accepted:
            break
    return replace(model, theta=_symmetrize(theta))


class _SampledState:
    """Mutable EM state: current sigma placement and missing-block edges."""

    def __init__(self, g_obs, m: int, nk: int, rng: np.random.Generator):
        self.n_obs = g_obs.n
        self.n = g_obs.n + m
        self.nk = nk
        self.sigma = np.arange(self.n, dtype=np.int64)
        self.obs_neighbors = [set(a) for a in g_obs.adjacency]
        # Missing-block adjacency: neighbor sets for every node, edges with
        # at least one endpoint >= n_obs.
        self.missing_neighbors: list[set[int]] = [set() for _ in range(self.n)]

    def neighbors(self, u: int) -> set[int]:
        if u < self.n_obs:
            return self.obs_neighbors[u] | self.missing_neighbors[u]
        return self.missing_neighbors[u]

    def adjacency_row(self, u: int) -> np.ndarray:
        row = np.zeros(self.n)
        for v in self.neighbors(u):
            row[v] = 1.0
        return row

    def as_graph(self):
        from .graph import Graph

        edges = []
        for u in range(self.n):
            for v in self.neighbors(u):
                if u < v:
                    edges.append((u, v))
        return Graph(self.n, edges)


def _resample_missing(state: _SampledState, model: KroneckerModel, rng: np.random.Generator) -> None:
    """Gibbs resample of the missing-block edge states given theta and sigma."""
    n, n_obs = state.n, state.n_obs
    for nb in state.missing_neighbors:
        nb.clear()
    for u in range(n):
        lo = max(u + 1, n_obs)
        if lo >= n:
            continue
        cols = np.arange(lo, n)
        p = _pair_entries(
            model, np.full(cols.size, state.sigma[u]), state.sigma[cols]
        )
        hits = cols[rng.random(cols.size) < p]
        for v in hits:
            state.missing_neighbors[u].add(int(v))
            state.missing_neighbors[int(v)].add(u)


def _row_loglik(state: _SampledState, model: KroneckerModel, u: int, sigma_u: int) -> float:
    """Likelihood contribution of all pairs containing position u, with u
    placed at index sigma_u (other positions at state.sigma)."""
    others = np.concatenate([np.arange(u), np.arange(u + 1, state.n)])
    p = _pair_entries(
        model, np.full(others.size, sigma_u), state.sigma[others]
    )
    row = state.adjacency_row(u)[others]
    return float(np.sum(row * np.log(p) + (1.0 - row) * np.log1p(-p)))


def _mcmc_sigma(
    state: _SampledState,
    model: KroneckerModel,
    proposals: int,
    rng: np.random.Generator,
) -> None:
    """Metropolis-Hastings over the placement sigma.

    Proposals are uniform transpositions: a random position is paired with
    a random target index in the full theta^k space; if the target is held
    by another position the two swap, otherwise the position moves to the
    unused index.
    """
    n, nk = state.n, state.nk
    holder = {int(s): i for i, s in enumerate(state.sigma)}
    for _ in range(proposals):
        x = int(rng.integers(n))
        t = int(rng.integers(nk))
        sx = int(state.sigma[x])
        if t == sx:
            continue
        y = holder.get(t)
        if y is None:
            delta = _row_loglik(state, model, x, t) - _row_loglik(state, model, x, sx)
            if delta >= 0 or rng.random() < math.exp(delta):
                state.sigma[x] = t
                del holder[sx]
                holder[t] = x
        else:
            old = _row_loglik(state, model, x, sx) + _row_loglik(state, model, y, t)
            state.sigma[x], state.sigma[y] = t, sx
            new = _row_loglik(state, model, x, t) + _row_loglik(state, model, y, sx)
            # The (x, y) pair is counted in both rows on each side; the
            # double-count cancels in the difference only if corrected.
            pxy_old = kron_entry(model, sx, t)
            pxy_new = kron_entry(model, t, sx)
            axy = 1.0 if y in state.neighbors(x) else 0.0

            def pair_term(p):
                return axy * math.log(p) + (1.0 - axy) * math.log1p(-p)

            delta = (new - pair_term(pxy_new)) - (old - pair_term(pxy_old))
            if delta >= 0 or rng.random() < math.exp(delta):
                holder[t], holder[sx] = x, y
            else:
                state.sigma[x], state.sigma[y] = sx, t


def random_theta_init(n0: int, rng: np.random.Generator) -> np.ndarray:
    """Default random initialization: entries uniform on [0.25, 0.75]."""
    return _symmetrize(rng.uniform(0.25, 0.75, size=(n0, n0)))


def kronem_fit(
    g_obs,
    m_missing: int,
    n0: int = 2,
    theta_init: np.ndarray | None = None,
    cfg: EmConfig = EmConfig(),
) -> tuple[KroneckerModel, NodeMapping]:
    """Fit theta and the node placement by EM on the observed graph.

    E-step: Gibbs resample of the missing adjacency blocks plus MH over
    sigma (hard EM: the last sample is retained). M-step: projected
    gradient ascent on the sampled-graph log-likelihood. Deterministic
    per cfg.seed.
    """
    if m_missing < 0:
        raise ValueError("m_missing must be nonnegative")
    n = g_obs.n + m_missing
    if n < 1:
        raise ValueError("empty model: need at least one node")
    rng = np.random.default_rng(cfg.seed)
    k = smallest_power(n0, n)
    if theta_init is None:
        theta_init = random_theta_init(n0, rng)
    model = KroneckerModel(n0=n0, theta=_clamp(np.asarray(theta_init, dtype=float)), k=k)

    state = _SampledState(g_obs, m_missing, model.num_indices, rng)
    proposals = cfg.mcmc_samples if cfg.mcmc_samples is not None else 10 * n
    for _ in range(cfg.em_iters):
        if m_missing > 0:
            _resample_missing(state, model, rng)
        _mcmc_sigma(state, model, proposals, rng)
        a_full = state.as_graph()
        mapping = NodeMapping(sigma=state.sigma.copy(), observed_count=g_obs.n)
        model = ascend_theta(a_full, mapping, model, cfg.grad_steps, cfg.learning_rate)
    mapping = NodeMapping(sigma=state.sigma.copy(), observed_count=g_obs.n)
    return model, mapping
