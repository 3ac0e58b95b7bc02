"""KroMFac driver: completion, ranking, regularized search over the
number of inserted nodes, and the two baselines."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .community import Cover, DetectConfig, DetectResult, commun_det, default_delta, hard_decision
from .completion import RecoveredGraph, as_graph, realize_missing
from .graph import Graph
from .kron import EmConfig, kronem_fit, random_theta_init
from .ranking import Ranking, default_epsilon, select_influential

AUTO = "auto"

# Labels for sub-seed derivation from the master seed.
_SEED_EM = 1
_SEED_REALIZE = 2
_SEED_THETA_INIT = 3
_SEED_DETECT_BASE = 100


def subseed(master: int, label: int) -> int:
    """Deterministic sub-seed stream keyed by a fixed integer label."""
    return int(np.random.SeedSequence(entropy=master, spawn_key=(label,)).generate_state(1)[0])


def detect_seed(master: int, i: int) -> int:
    """Seed used for the detection run at candidate i."""
    return subseed(master, _SEED_DETECT_BASE + i)


@dataclass(frozen=True)
class KromfacConfig:
    m: int
    c: int
    n0: int = 2
    lambda_coef: float = 10.0
    lambda_abs: float | None = None  # overrides lambda_coef * N when set
    epsilon: float | str = AUTO
    delta: float | str = AUTO
    em: EmConfig = field(default_factory=EmConfig)
    detect: DetectConfig = field(default_factory=DetectConfig)
    include_i0: bool = True
    threads: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.m < 0 or self.c < 1:
            raise ValueError("need m >= 0 and c >= 1")
        if self.lambda_coef <= 0:
            raise ValueError("lambda_coef must be positive")

    def resolve_lambda(self, n_observed: int) -> float:
        if self.lambda_abs is not None:
            return self.lambda_abs
        return self.lambda_coef * n_observed


@dataclass(frozen=True)
class TraceEntry:
    i: int
    loss: float
    reg_loss: float
    converged: bool


@dataclass(frozen=True)
class SearchTrace:
    lambda_value: float
    h: int
    entries: tuple[TraceEntry, ...]
    i_hat: int
    degenerate: bool = False  # true when H=0 forced the i=0 fallback

    def to_json(self) -> str:
        return json.dumps(
            {
                "lambda": self.lambda_value,
                "h": self.h,
                "trace": [
                    {
                        "i": e.i,
                        "loss": e.loss,
                        "reg_loss": e.reg_loss,
                        "converged": e.converged,
                    }
                    for e in self.entries
                ],
                "i_hat": self.i_hat,
            }
        )


def regularized_loss(d: float, i: int, lam: float) -> float:
    """Detection loss minus the node-count reward: d - lam * log(i + 1)."""
    if i < 0 or lam <= 0:
        raise ValueError("need i >= 0 and lam > 0")
    return d - lam * math.log(i + 1)


def kromfac(g_obs: Graph, cfg: KromfacConfig) -> tuple[Cover, SearchTrace]:
    """Run the full pipeline: fit the Kronecker model, realize the missing
    part, rank influential nodes, search i by regularized loss, and
    hard-decide the cover from the best affiliation matrix."""
    n = g_obs.n
    lam = cfg.resolve_lambda(n)

    rg, ranking = _recover_and_rank(g_obs, cfg)
    candidates = ([0] if cfg.include_i0 else []) + list(range(1, ranking.h + 1))
    degenerate = False
    if not candidates:
        raise ValueError(
            "no candidates to search: H=0 and i=0 excluded (set include_i0)"
        )
    if ranking.h == 0:
        degenerate = True

    def run_candidate(i: int) -> tuple[int, Graph, DetectResult]:
        gi = as_graph(rg, i, ranking.order)
        det = replace(cfg.detect, seed=detect_seed(cfg.seed, i))
        return i, gi, commun_det(gi, cfg.c, det)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(run_candidate, candidates))
    else:
        results = [run_candidate(i) for i in candidates]
    results.sort(key=lambda r: r[0])

    entries = []
    best = None
    for i, gi, res in results:
        reg = regularized_loss(res.loss, i, lam)
        entries.append(TraceEntry(i=i, loss=res.loss, reg_loss=reg, converged=res.converged))
        if best is None or reg < best[0]:
            best = (reg, i, gi, res)

    _, i_hat, g_hat, res_hat = best
    delta = cfg.delta
    if delta == AUTO:
        delta = default_delta(g_hat) if g_hat.n >= 2 else 1.0
    cover = hard_decision(res_hat.f, delta)
    trace = SearchTrace(
        lambda_value=lam,
        h=ranking.h,
        entries=tuple(entries),
        i_hat=i_hat,
        degenerate=degenerate,
    )
    return cover, trace


def _recover_and_rank(g_obs: Graph, cfg: KromfacConfig) -> tuple[RecoveredGraph, Ranking]:
    theta_init = random_theta_init(
        cfg.n0, np.random.default_rng(subseed(cfg.seed, _SEED_THETA_INIT))
    )
    em = replace(cfg.em, seed=subseed(cfg.seed, _SEED_EM))
    model, mapping = kronem_fit(g_obs, cfg.m, cfg.n0, theta_init, em)
    rg = realize_missing(g_obs, model, mapping, cfg.m, subseed(cfg.seed, _SEED_REALIZE))
    eps = cfg.epsilon
    if eps == AUTO:
        eps = default_epsilon(rg) if rg.base.n + rg.m > 0 else 0.0
    if eps <= 0:
        # Edgeless recovered graph: no node can qualify.
        ranking = Ranking(h=0, order=(), centrality={u: 0 for u in rg.recovered_ids}, epsilon=eps)
    else:
        ranking = select_influential(rg, eps)
    return rg, ranking


def baseline1(
    g_obs: Graph,
    c: int,
    delta: float | str = AUTO,
    detect: DetectConfig = DetectConfig(),
) -> Cover:
    """Detection on the observed graph only: no completion, no search."""
    res = commun_det(g_obs, c, detect)
    if delta == AUTO:
        delta = default_delta(g_obs) if g_obs.n >= 2 else 1.0
    return hard_decision(res.f, delta)


def baseline2(g_obs: Graph, cfg: KromfacConfig) -> Cover:
    """Detection on the fully completed graph (i = M, no selection)."""
    theta_init = random_theta_init(
        cfg.n0, np.random.default_rng(subseed(cfg.seed, _SEED_THETA_INIT))
    )
    em = replace(cfg.em, seed=subseed(cfg.seed, _SEED_EM))
    model, mapping = kronem_fit(g_obs, cfg.m, cfg.n0, theta_init, em)
    rg = realize_missing(g_obs, model, mapping, cfg.m, subseed(cfg.seed, _SEED_REALIZE))
    g_full = as_graph(rg, cfg.m)
    det = replace(cfg.detect, seed=detect_seed(cfg.seed, cfg.m))
    res = commun_det(g_full, cfg.c, det)
    delta = cfg.delta
    if delta == AUTO:
        delta = default_delta(g_full) if g_full.n >= 2 else 1.0
    return hard_decision(res.f, delta)
