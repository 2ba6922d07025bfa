"""Probability weighting, edge compromise probabilities, and the true and
perceived total-loss functions with their subgradients.

The perceived loss of a defender passes every edge probability through the
inverse-S weighting w(p) = exp(-(-ln p)^alpha) before taking path products and
the max over attack paths; alpha = 1 recovers the true loss exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .graph import AttackGraph, EdgeKey, GraphError

_Z_CAP = 690.0  # exp(-690) ~ 1e-300: probability floor before logs

DEFAULT_GRADIENT_CAP = 1e6  # marginal cap at x = 0 with alpha < 1


class ModelError(ValueError):
    pass


def prelec_weight(p: float, alpha: float) -> float:
    """Perceived probability exp(-(-ln p)^alpha); w(0)=0 and w(1)=1 by
    continuous extension. Strictly increasing on (0,1), fixed point at 1/e."""
    if not (0.0 <= p <= 1.0):
        raise ModelError(f"probability {p} outside [0,1]")
    if not (0.0 < alpha <= 1.0):
        raise ModelError(f"alpha {alpha} outside (0,1]")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    return math.exp(-((-math.log(p)) ** alpha))


def edge_attack_prob(p0: float, s: float, total_x: float) -> float:
    """Compromise probability p0 * exp(-s * total_x) of a single edge."""
    if not (0.0 < p0 <= 1.0):
        raise ModelError(f"baseline probability {p0} outside (0,1]")
    if s < 1.0:
        raise ModelError(f"sensitivity {s} below 1")
    if total_x < 0.0:
        raise ModelError(f"negative investment {total_x}")
    return p0 * math.exp(-s * total_x)


@dataclass(frozen=True)
class Defender:
    """One decision maker: her investable edges E_k, budget, behavioral level
    alpha, spreading floor eta, and the critical nodes she suffers losses on."""

    id: str
    edges: frozenset[EdgeKey]
    budget: float
    alpha: float = 1.0
    eta: float = 0.0
    critical: frozenset[str] = frozenset()

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ModelError(f"defender {self.id}: alpha {self.alpha} outside (0,1]")
        if self.budget < 0.0 or self.eta < 0.0:
            raise ModelError(f"defender {self.id}: negative budget or eta")
        if self.budget + 1e-12 < self.eta * len(self.edges):
            raise ModelError(
                f"defender {self.id}: budget {self.budget} cannot cover "
                f"eta={self.eta} on {len(self.edges)} edges"
            )

    def sorted_edges(self) -> list[EdgeKey]:
        return sorted(self.edges)

    def validate_against(self, graph: AttackGraph) -> list[str]:
        problems = []
        for key in self.edges:
            if key not in graph.edge_map:
                problems.append(f"defender {self.id}: unknown edge {key}")
        for node in self.critical:
            if node not in graph.node_map:
                problems.append(f"defender {self.id}: unknown critical node {node}")
        return problems


def defenders_by_id(defenders: Iterable[Defender]) -> dict[str, Defender]:
    out = {}
    for d in defenders:
        if d.id in out:
            raise ModelError(f"duplicate defender id {d.id}")
        out[d.id] = d
    return out


class InvestmentProfile:
    """Per-defender, per-edge nonnegative investments. Entries are only valid
    on edges the defender controls; per-defender totals must stay within
    budget (up to tolerance)."""

    def __init__(self, entries: Optional[Mapping[tuple[str, EdgeKey], float]] = None):
        self.entries: dict[tuple[str, EdgeKey], float] = dict(entries or {})

    @classmethod
    def zeros(cls, defenders: Iterable[Defender]) -> "InvestmentProfile":
        entries = {}
        for d in defenders:
            for key in d.edges:
                entries[(d.id, key)] = 0.0
        return cls(entries)

    def copy(self) -> "InvestmentProfile":
        return InvestmentProfile(self.entries)

    def get(self, defender_id: str, key: EdgeKey) -> float:
        return self.entries.get((defender_id, key), 0.0)

    def set_vector(self, defender: Defender, x: Sequence[float]) -> None:
        for key, value in zip(defender.sorted_edges(), x):
            self.entries[(defender.id, key)] = float(value)

    def vector(self, defender: Defender) -> np.ndarray:
        return np.array([self.get(defender.id, k) for k in defender.sorted_edges()])

    def total_on(self, key: EdgeKey, exclude: Optional[str] = None) -> float:
        return sum(
            v for (did, ekey), v in self.entries.items()
            if ekey == key and did != exclude
        )

    def edge_totals(self, exclude: Optional[str] = None) -> dict[EdgeKey, float]:
        totals: dict[EdgeKey, float] = {}
        for (did, key), v in self.entries.items():
            if did == exclude:
                continue
            totals[key] = totals.get(key, 0.0) + v
        return totals

    def spent(self, defender_id: str) -> float:
        return sum(v for (did, _), v in self.entries.items() if did == defender_id)

    def check_feasible(self, defenders: Iterable[Defender], tol: float = 1e-9) -> list[str]:
        problems = []
        dmap = defenders_by_id(defenders)
        for (did, key), v in self.entries.items():
            if v < -tol:
                problems.append(f"negative investment {v} by {did} on {key}")
            d = dmap.get(did)
            if d is None:
                problems.append(f"unknown defender {did}")
            elif key not in d.edges:
                problems.append(f"defender {did} invests on uncontrolled edge {key}")
        for did, d in dmap.items():
            if self.spent(did) > d.budget + tol:
                problems.append(f"defender {did} over budget")
        return problems

    def to_dict(self) -> dict:
        out: dict[str, dict[str, float]] = {}
        for (did, key), v in sorted(self.entries.items()):
            out.setdefault(did, {})[f"{key[0]}->{key[1]}"] = v
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "InvestmentProfile":
        entries = {}
        for did, per_edge in data.items():
            for name, v in per_edge.items():
                src, dst = name.split("->")
                entries[(did, (src, dst))] = float(v)
        return cls(entries)


# ---------------------------------------------------------------------------
# compiled loss evaluation
# ---------------------------------------------------------------------------

class CompiledGraph:
    """Index-based form of an attack graph for fast repeated loss evaluation."""

    def __init__(self, graph: AttackGraph):
        self.graph = graph
        order = graph.topo_order()
        self.node_index = {nid: i for i, nid in enumerate(order)}
        self.order = order
        self.edge_keys = [e.key for e in graph.edges]
        self.edge_index = {k: i for i, k in enumerate(self.edge_keys)}
        self.a0 = np.array([-math.log(e.p0) for e in graph.edges])
        self.s = np.array([e.s for e in graph.edges])
        self.in_edges: list[list[int]] = [[] for _ in order]
        for i, e in enumerate(graph.edges):
            self.in_edges[self.node_index[e.dst]].append(i)
        self.edge_src = [self.node_index[e.src] for e in graph.edges]
        self.source_idx = [self.node_index[s] for s in graph.sources]

    def totals_vector(self, totals: Mapping[EdgeKey, float]) -> np.ndarray:
        x = np.zeros(len(self.edge_keys))
        for key, v in totals.items():
            idx = self.edge_index.get(key)
            if idx is None:
                raise GraphError(f"investment on unknown edge {key}")
            x[idx] = v
        return x

    def weights(self, x_total: np.ndarray, alpha: float) -> np.ndarray:
        """Per-edge perceived -log probability: (a0 + s*x)^alpha, capped."""
        z = np.minimum(self.a0 + self.s * np.maximum(x_total, 0.0), _Z_CAP)
        if alpha == 1.0:
            return z
        return z ** alpha

    def min_dist(self, y: np.ndarray) -> np.ndarray:
        """Forward DP: minimal summed weight from any source to each node."""
        dist = np.full(len(self.order), np.inf)
        dist[self.source_idx] = 0.0
        for vi in range(len(self.order)):
            for ei in self.in_edges[vi]:
                cand = dist[self.edge_src[ei]] + y[ei]
                if cand < dist[vi]:
                    dist[vi] = cand
        return dist

    def loss(self, x_total: np.ndarray, alpha: float, targets: Sequence[tuple[str, float]]) -> float:
        dist = self.min_dist(self.weights(x_total, alpha))
        total = 0.0
        for node, weight in targets:
            d = dist[self.node_index[node]]
            if d < np.inf:
                total += weight * math.exp(-d)
        return total

    def argmin_path(self, y: np.ndarray, target: str) -> list[int]:
        """Edge indices of the minimal-weight source->target path; ties broken
        by the lexicographically smallest node-id sequence. Empty when
        unreachable."""
        tgt = self.node_index[target]
        n = len(self.order)
        best = np.full(n, np.inf)  # best[v] = min weight v -> target
        best[tgt] = 0.0
        out_by_node: list[list[int]] = [[] for _ in range(n)]
        for ei, key in enumerate(self.edge_keys):
            out_by_node[self.node_index[key[0]]].append(ei)
        for vi in range(n - 1, -1, -1):
            for ei in out_by_node[vi]:
                w = self.node_index[self.edge_keys[ei][1]]
                cand = y[ei] + best[w]
                if cand < best[vi]:
                    best[vi] = cand
        start = None
        for si in sorted(self.source_idx, key=lambda i: self.order[i]):
            if best[si] < np.inf and (start is None or best[si] < best[start]):
                start = si
        if start is None:
            return []
        path: list[int] = []
        v = start
        while v != tgt:
            chosen = None
            for ei in sorted(out_by_node[v], key=lambda i: self.edge_keys[i][1]):
                w = self.node_index[self.edge_keys[ei][1]]
                if best[w] < np.inf and y[ei] + best[w] == best[v]:
                    chosen = ei
                    break
            if chosen is None:
                chosen = min(
                    (ei for ei in out_by_node[v]
                     if best[self.node_index[self.edge_keys[ei][1]]] < np.inf),
                    key=lambda ei: y[ei] + best[self.node_index[self.edge_keys[ei][1]]],
                )
            path.append(chosen)
            v = self.node_index[self.edge_keys[chosen][1]]
        return path


_COMPILED_ATTR = "_secgame_compiled"


def compile_graph(graph: AttackGraph) -> CompiledGraph:
    cached = getattr(graph, _COMPILED_ATTR, None)
    if cached is None:
        cached = CompiledGraph(graph)
        setattr(graph, _COMPILED_ATTR, cached)
    return cached


def _targets_for(graph: AttackGraph, defender: Defender) -> list[tuple[str, float]]:
    loss_by_node = {c.node: c.loss for c in graph.critical_assets}
    nodes = defender.critical or frozenset(
        c.node for c in graph.critical_assets if defender.id in c.owners
    )
    missing = [n for n in nodes if n not in loss_by_node]
    if missing:
        raise ModelError(f"defender {defender.id}: no loss recorded for {missing}")
    return [(n, loss_by_node[n]) for n in sorted(nodes)]


def _lookup(defenders: Iterable[Defender], k: str) -> Defender:
    for d in defenders:
        if d.id == k:
            return d
    raise ModelError(f"unknown defender {k!r}")


def true_total_loss(graph: AttackGraph, defenders: Iterable[Defender],
                    profile: InvestmentProfile, k: str) -> float:
    """Expected loss of defender k under correct probabilities: sum over her
    critical assets of L_m times the most vulnerable path probability."""
    defender = _lookup(defenders, k)
    compiled = compile_graph(graph)
    x = compiled.totals_vector(profile.edge_totals())
    return compiled.loss(x, 1.0, _targets_for(graph, defender))


def perceived_total_loss(graph: AttackGraph, defenders: Iterable[Defender],
                         profile: InvestmentProfile, k: str) -> float:
    """As true_total_loss but with every edge probability Prelec-weighted by
    defender k's alpha before products and max."""
    defender = _lookup(defenders, k)
    compiled = compile_graph(graph)
    x = compiled.totals_vector(profile.edge_totals())
    return compiled.loss(x, defender.alpha, _targets_for(graph, defender))


def perceived_loss_subgradient(
    graph: AttackGraph,
    defenders: Iterable[Defender],
    profile: InvestmentProfile,
    k: str,
    cap: float = DEFAULT_GRADIENT_CAP,
) -> dict[EdgeKey, float]:
    """Subgradient of defender k's perceived loss with respect to her own
    investments. The derivative flows through one argmax (most vulnerable
    perceived) path per critical asset, ties lexicographic; edges off all
    argmax paths get 0. At x = 0 with alpha < 1 the marginal is unbounded and
    is capped at ``cap``."""
    defender = _lookup(defenders, k)
    compiled = compile_graph(graph)
    x = compiled.totals_vector(profile.edge_totals())
    alpha = defender.alpha
    y = compiled.weights(x, alpha)
    z = compiled.a0 + compiled.s * np.maximum(x, 0.0)
    grad = {key: 0.0 for key in defender.sorted_edges()}
    for node, weight in _targets_for(graph, defender):
        path = compiled.argmin_path(y, node)
        if not path:
            continue
        value = weight * math.exp(-min(sum(y[e] for e in path), _Z_CAP))
        for ei in path:
            key = compiled.edge_keys[ei]
            if key not in grad:
                continue
            if alpha == 1.0:
                slope = compiled.s[ei]
            elif z[ei] > 0.0:
                slope = min(alpha * z[ei] ** (alpha - 1.0) * compiled.s[ei], cap)
            else:
                slope = cap
            grad[key] -= value * slope
    return grad
