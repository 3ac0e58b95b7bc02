"""Affiliation-model likelihood and NMF community detection.

Edge probability between nodes u, v with nonnegative membership rows
F_u, F_v is 1 - exp(-<F_u, F_v>). Detection maximizes the graph
log-likelihood over F by block coordinate gradient ascent, one row at a
time, with projection onto the nonnegative orthant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .graph import Graph

# Inner products are floored inside log(1 - exp(-.)) so degenerate
# memberships cannot produce -inf.
DOT_FLOOR = 1e-10
DELTA_FLOOR = 1e-6


@dataclass(frozen=True)
class DetectConfig:
    eta_detect: float | None = None  # None -> 1e-4 * (1 + |loss|) per pass
    max_iters: int = 200
    step_init: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.eta_detect is not None and self.eta_detect <= 0:
            raise ValueError("eta_detect must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class Cover:
    """Possibly overlapping communities over a node universe [0, universe)."""

    communities: tuple[frozenset, ...]
    universe: int

    def __post_init__(self):
        for com in self.communities:
            for u in com:
                if not (0 <= u < self.universe):
                    raise ValueError(f"member {u} outside universe {self.universe}")

    def restrict(self, limit: int) -> "Cover":
        """Drop members with id >= limit (and shrink the universe)."""
        return Cover(
            tuple(frozenset(u for u in com if u < limit) for com in self.communities),
            min(self.universe, limit),
        )

    def write(self, sink: TextIO, id_map=None) -> None:
        for com in self.communities:
            ids = sorted(com)
            if id_map is not None:
                ids = [id_map.external(u) for u in ids]
            sink.write(" ".join(str(u) for u in ids) + "\n")

    @classmethod
    def read(cls, source: Iterable[str], id_map=None, universe: int | None = None) -> "Cover":
        communities = []
        seen = set()
        for raw in source:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            members = line.split()
            if id_map is not None:
                ids = frozenset(id_map.internal(tok) for tok in members)
            else:
                ids = frozenset(int(tok) for tok in members)
            communities.append(ids)
            seen |= ids
        if universe is None:
            universe = max(seen) + 1 if seen else 0
        return cls(tuple(communities), universe)


@dataclass(frozen=True)
class DetectResult:
    loss: float
    f: np.ndarray
    converged: bool
    passes: int


def agm_edge_prob(fu: np.ndarray, fv: np.ndarray) -> float:
    """1 - exp(-<fu, fv>) for nonnegative membership rows."""
    fu = np.asarray(fu, dtype=float)
    fv = np.asarray(fv, dtype=float)
    if np.any(fu < 0) or np.any(fv < 0):
        raise ValueError("membership rows must be nonnegative")
    return float(-np.expm1(-float(fu @ fv)))


def _log1mexp(s: np.ndarray) -> np.ndarray:
    """log(1 - exp(-s)) with the documented floor on s."""
    return np.log(-np.expm1(-np.maximum(s, DOT_FLOOR)))


def agm_log_likelihood(g: Graph, f: np.ndarray) -> float:
    """Graph log-likelihood under the affiliation model.

    Sum over unordered edge pairs of log(1 - exp(-<F_u, F_v>)) minus the
    sum over unordered non-edge pairs of <F_u, F_v>. The non-edge sum is
    evaluated through the aggregate identity
        sum_{non-edge u<v} <F_u,F_v>
          = (|sum_u F_u|^2 - sum_u |F_u|^2) / 2 - sum_{edge u<v} <F_u,F_v>
    so the cost stays O(|E| + n C^2).
    """
    f = np.asarray(f, dtype=float)
    if f.shape[0] != g.n:
        raise ValueError("F row count must match node count")
    total = np.sum(f, axis=0)
    edge_dots = np.array([float(f[u] @ f[v]) for u, v in g.edges()])
    edge_term = float(np.sum(_log1mexp(edge_dots))) if edge_dots.size else 0.0
    all_pairs = (float(total @ total) - float(np.sum(f * f))) / 2.0
    nonedge_sum = all_pairs - float(np.sum(edge_dots))
    return edge_term - nonedge_sum


def loss(g: Graph, f: np.ndarray) -> float:
    """Negative log-likelihood of the graph given F."""
    return -agm_log_likelihood(g, f)


def row_gradient(f: np.ndarray, u: int, neighbors: Iterable[int], total: np.ndarray) -> np.ndarray:
    """Gradient of the log-likelihood w.r.t. row F_u.

    `total` is the current column-sum aggregate of F.
    """
    nbr = list(neighbors)
    fu = f[u]
    grad = -(total - fu)
    for v in nbr:
        s = max(float(fu @ f[v]), DOT_FLOOR)
        e = math.exp(-s)
        grad += f[v] * (e / (1.0 - e) + 1.0)
    return grad


def _row_objective(f: np.ndarray, fu: np.ndarray, nbr_rows: np.ndarray, total_other: np.ndarray) -> float:
    """Log-likelihood terms involving row u only (up to a constant)."""
    if nbr_rows.size:
        s = nbr_rows @ fu
        edge = float(np.sum(_log1mexp(s))) + float(np.sum(s))
    else:
        edge = 0.0
    return edge - float(fu @ total_other)


def default_delta(g: Graph) -> float:
    """Membership threshold matched to the background edge density.

    A shared membership of strength delta yields edge probability equal
    to the graph's density 2|E| / (n(n-1)).
    """
    if g.n < 2:
        raise ValueError("need at least two nodes")
    p_bg = 2.0 * g.edge_count / (g.n * (g.n - 1))
    p_bg = min(p_bg, 1.0 - 1e-9)
    return max(math.sqrt(-math.log1p(-p_bg)), DELTA_FLOOR)


def init_affiliations(g: Graph, c: int, seed: int) -> np.ndarray:
    """Random nonnegative initialization scaled to the detection threshold."""
    rng = np.random.default_rng(seed)
    try:
        hi = math.sqrt(default_delta(g)) / c
    except ValueError:
        hi = 0.1 / c
    return rng.uniform(0.0, hi, size=(g.n, c))


def commun_det(g: Graph, c: int, cfg: DetectConfig = DetectConfig()) -> DetectResult:
    """Block coordinate gradient ascent on the affiliation likelihood.

    Rows update in ascending node order; each row step uses backtracking
    line search on its local objective and projects onto F >= 0. Stops
    when the loss improvement over a full pass falls below eta_detect.
    """
    if c < 1 or g.n < 1:
        raise ValueError("need c >= 1 and a nonempty graph")
    f = init_affiliations(g, c, cfg.seed)
    total = np.sum(f, axis=0)
    prev_loss = loss(g, f)
    converged = False
    passes = 0
    for passes in range(1, cfg.max_iters + 1):
        for u in range(g.n):
            nbr = g.adjacency[u]
            nbr_rows = f[nbr] if nbr else np.empty((0, c))
            total_other = total - f[u]
            grad = row_gradient(f, u, nbr, total)
            base = _row_objective(f, f[u], nbr_rows, total_other)
            step = cfg.step_init
            for _ in range(10):
                cand = np.maximum(f[u] + step * grad, 0.0)
                if _row_objective(f, cand, nbr_rows, total_other) >= base:
                    total += cand - f[u]
                    f[u] = cand
                    break
                step /= 2.0
        cur_loss = loss(g, f)
        eta = cfg.eta_detect
        if eta is None:
            eta = 1e-4 * (1.0 + abs(cur_loss))
        if prev_loss - cur_loss < eta:
            prev_loss = min(prev_loss, cur_loss)
            converged = True
            break
        prev_loss = cur_loss
    return DetectResult(loss=prev_loss, f=f, converged=converged, passes=passes)


def hard_decision(f: np.ndarray, delta: float) -> Cover:
    """Threshold the affiliation matrix into a cover: u joins community c
    iff F[u, c] >= delta."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    f = np.asarray(f, dtype=float)
    communities = tuple(
        frozenset(np.flatnonzero(f[:, c] >= delta).tolist())
        for c in range(f.shape[1])
    )
    return Cover(communities, universe=f.shape[0])
