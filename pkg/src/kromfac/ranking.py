"""Degree-centrality ranking of recovered nodes."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

from .completion import RecoveredGraph, as_graph
from .graph import Graph


@dataclass(frozen=True)
class Ranking:
    h: int
    order: tuple[int, ...]  # recovered-node ids, descending centrality
    centrality: dict[int, int]
    epsilon: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "epsilon": self.epsilon,
                "h": self.h,
                "order": list(self.order),
                "centrality": {str(k): v for k, v in sorted(self.centrality.items())},
            }
        )


def degree_centrality(g: Graph, u: int) -> int:
    """Number of incident edges of node u."""
    if not (0 <= u < g.n):
        raise ValueError(f"node {u} out of range for n={g.n}")
    return g.degree(u)


def select_influential(
    rg: RecoveredGraph,
    epsilon: float,
    centrality: Callable[[Graph, int], float] = degree_centrality,
) -> Ranking:
    """Rank the recovered nodes by centrality in the fully recovered graph
    and keep those meeting the threshold.

    Ties break by ascending node id so the ranking is deterministic.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    full = as_graph(rg, rg.m)
    cen = {u: centrality(full, u) for u in rg.recovered_ids}
    kept = sorted(
        (u for u, c in cen.items() if c >= epsilon),
        key=lambda u: (-cen[u], u),
    )
    return Ranking(h=len(kept), order=tuple(kept), centrality=cen, epsilon=epsilon)


def default_epsilon(rg: RecoveredGraph) -> float:
    """Half the maximum degree over the fully recovered graph."""
    full = as_graph(rg, rg.m)
    if full.n == 0:
        raise ValueError("recovered graph is empty")
    return max(full.degrees()) / 2.0
