"""Cover scoring, graph sampling, synthetic generation, and the
experiment harness."""
from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .community import Cover, agm_edge_prob, hard_decision
from .graph import Graph, NodeIdMap, induced_subgraph
from .pipeline import AUTO, KromfacConfig, SearchTrace, baseline1, baseline2, detect_seed, kromfac

PLANTED_DELTA = 0.5


@dataclass(frozen=True)
class SampleSpec:
    strategy: str  # "rn" or "ff"
    fraction: float = 0.7
    p_forward: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in ("rn", "ff"):
            raise ValueError("strategy must be 'rn' or 'ff'")
        if not (0.0 < self.fraction <= 1.0):
            raise ValueError("fraction must be in (0, 1]")
        if not (0.0 < self.p_forward < 1.0):
            raise ValueError("p_forward must be in (0, 1)")


def _entropy_terms(*probs: float) -> float:
    return -sum(p * math.log(p) for p in probs if p > 0.0)


def _membership_counts(x: frozenset, y: frozenset, n: int) -> tuple[int, int, int, int]:
    both = len(x & y)
    only_x = len(x) - both
    only_y = len(y) - both
    neither = n - both - only_x - only_y
    return neither, only_y, only_x, both


def _cond_entropy(x: frozenset, y: frozenset, n: int) -> float | None:
    """H(X_k | Y_l) for binary membership variables; None if the pairing
    fails the non-informative-match admissibility rule."""
    a, b, c, d = (cnt / n for cnt in _membership_counts(x, y, n))
    if _entropy_terms(a) + _entropy_terms(d) < _entropy_terms(b) + _entropy_terms(c):
        return None
    joint = _entropy_terms(a, b, c, d)
    h_y = _entropy_terms(a + c, b + d)
    return joint - h_y


def _side_score(x_cover: Cover, y_cover: Cover) -> float:
    """Mean over X's communities of H(X_k|Y) / H(X_k)."""
    n = x_cover.universe
    if not x_cover.communities:
        return 0.0 if not y_cover.communities else 1.0
    ratios = []
    for xk in x_cover.communities:
        p = len(xk) / n if n else 0.0
        h_x = _entropy_terms(p, 1.0 - p)
        if h_x == 0.0:
            # Zero-entropy community: exact match in Y scores 0, else 1.
            ratios.append(0.0 if xk in y_cover.communities else 1.0)
            continue
        best = h_x
        for yl in y_cover.communities:
            ce = _cond_entropy(xk, yl, n)
            if ce is not None and ce < best:
                best = ce
        ratios.append(min(best / h_x, 1.0))
    return float(np.mean(ratios))


def nmi(x: Cover, y: Cover) -> float:
    """Overlapping-cover normalized mutual information in [0, 1].

    Each community is treated as a binary node-membership variable;
    conditional entropies take the best admissible match on the other
    side, with non-informative matches replaced by the marginal entropy.
    """
    if x.universe != y.universe:
        raise ValueError("covers must share the same node universe")
    score = 1.0 - 0.5 * (_side_score(x, y) + _side_score(y, x))
    return min(max(score, 0.0), 1.0)


def rn_sample(g: Graph, spec: SampleSpec) -> tuple[Graph, set[int]]:
    """Keep ceil(fraction * n) nodes chosen uniformly without replacement."""
    if spec.strategy != "rn":
        raise ValueError("spec.strategy must be 'rn'")
    rng = np.random.default_rng(spec.seed)
    target = math.ceil(spec.fraction * g.n)
    kept = set(rng.choice(g.n, size=target, replace=False).tolist())
    sub, _ = induced_subgraph(g, kept)
    return sub, kept


def ff_sample(g: Graph, spec: SampleSpec) -> tuple[Graph, set[int]]:
    """Forest-fire sampling: burn from random seeds until the target count
    is reached, trimming overshoot in reverse burn order.

    Each frontier node burns a geometric number of its unburned neighbors
    (mean 1 / (1 - p_forward)), chosen uniformly.
    """
    if spec.strategy != "ff":
        raise ValueError("spec.strategy must be 'ff'")
    rng = np.random.default_rng(spec.seed)
    target = math.ceil(spec.fraction * g.n)
    burned: list[int] = []
    burned_set: set[int] = set()
    while len(burned) < target:
        unburned = [u for u in range(g.n) if u not in burned_set]
        seed_node = int(rng.choice(unburned))
        frontier = [seed_node]
        burned.append(seed_node)
        burned_set.add(seed_node)
        while frontier and len(burned) < target:
            u = frontier.pop(0)
            fresh = [v for v in g.adjacency[u] if v not in burned_set]
            if not fresh:
                continue
            count = min(int(rng.geometric(1.0 - spec.p_forward)), len(fresh))
            picks = rng.choice(len(fresh), size=count, replace=False)
            for j in sorted(picks.tolist()):
                v = fresh[j]
                if v in burned_set:
                    continue
                burned.append(v)
                burned_set.add(v)
                frontier.append(v)
                if len(burned) >= target:
                    break
    kept = set(burned[:target])
    sub, _ = induced_subgraph(g, kept)
    return sub, kept


def agm_generate(f_true: np.ndarray, seed: int) -> tuple[Graph, Cover]:
    """Sample a graph from the affiliation model and return it with the
    planted ground-truth cover (threshold 0.5)."""
    f_true = np.asarray(f_true, dtype=float)
    if np.any(f_true < 0):
        raise ValueError("membership matrix must be nonnegative")
    rng = np.random.default_rng(seed)
    n = f_true.shape[0]
    edges = []
    for u in range(n - 1):
        for v in range(u + 1, n):
            if rng.random() < agm_edge_prob(f_true[u], f_true[v]):
                edges.append((u, v))
    return Graph(n, edges), hard_decision(f_true, PLANTED_DELTA)


@dataclass(frozen=True)
class ExperimentReport:
    scores: dict[str, float]
    trace: SearchTrace
    timing: dict[str, float]
    config: dict
    fingerprint: dict
    notes: tuple[str, ...] = ()
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        # Timing is deliberately left out so the artifact is byte-stable
        # across reruns with the same seed.
        return json.dumps(
            {
                "scores": self.scores,
                "trace": json.loads(self.trace.to_json()),
                "config": self.config,
                "fingerprint": self.fingerprint,
                "notes": list(self.notes),
                "metadata": self.metadata,
            },
            indent=2,
            sort_keys=True,
        )


def graph_fingerprint(g: Graph) -> dict:
    digest = hashlib.sha256()
    for u, v in g.edges():
        digest.update(f"{u},{v};".encode())
    return {"nodes": g.n, "edges": g.edge_count, "sha256": digest.hexdigest()}


def restrict_truth(truth: Cover, kept: set[int]) -> tuple[Cover, list[str]]:
    """Reindex the ground truth onto the kept nodes, dropping communities
    emptied by the deletion."""
    kept_sorted = sorted(kept)
    remap = {old: new for new, old in enumerate(kept_sorted)}
    notes = []
    communities = []
    for idx, com in enumerate(truth.communities):
        surviving = frozenset(remap[u] for u in com if u in remap)
        if com and not surviving:
            notes.append(f"community {idx} emptied by sampling; dropped from truth")
            continue
        communities.append(surviving)
    return Cover(tuple(communities), len(kept_sorted)), notes


def run_experiment(
    g_true: Graph,
    truth: Cover,
    spec: SampleSpec,
    cfg: KromfacConfig,
) -> ExperimentReport:
    """Sample the observable graph, run KroMFac and both baselines, and
    score each against the (restricted) ground truth over observed nodes."""
    if truth.universe != g_true.n:
        raise ValueError("ground-truth cover must be defined on the dataset's nodes")
    sampler = rn_sample if spec.strategy == "rn" else ff_sample
    g_obs, kept = sampler(g_true, spec)
    m = g_true.n - len(kept)
    truth_obs, notes = restrict_truth(truth, kept)
    cfg = replace(cfg, m=m)

    timing = {}
    t0 = time.perf_counter()
    cover_k, trace = kromfac(g_obs, cfg)
    timing["kromfac"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    det1 = replace(cfg.detect, seed=detect_seed(cfg.seed, 0))
    cover_b1 = baseline1(g_obs, cfg.c, cfg.delta, det1)
    timing["baseline1"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cover_b2 = baseline2(g_obs, cfg)
    timing["baseline2"] = time.perf_counter() - t0

    n_obs = g_obs.n
    scores = {
        "kromfac": nmi(truth_obs, cover_k.restrict(n_obs)),
        "baseline1": nmi(truth_obs, cover_b1.restrict(n_obs)),
        "baseline2": nmi(truth_obs, cover_b2.restrict(n_obs)),
    }
    config_echo = {
        "m": cfg.m,
        "c": cfg.c,
        "n0": cfg.n0,
        "lambda_coef": cfg.lambda_coef,
        "lambda_abs": cfg.lambda_abs,
        "epsilon": cfg.epsilon,
        "delta": cfg.delta,
        "include_i0": cfg.include_i0,
        "seed": cfg.seed,
        "sample": {
            "strategy": spec.strategy,
            "fraction": spec.fraction,
            "p_forward": spec.p_forward,
            "seed": spec.seed,
        },
    }
    return ExperimentReport(
        scores=scores,
        trace=trace,
        timing=timing,
        config=config_echo,
        fingerprint=graph_fingerprint(g_true),
        notes=tuple(notes),
    )
