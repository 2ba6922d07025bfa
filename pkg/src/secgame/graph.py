"""Attack-graph data model, validation, path machinery, min-cut enumeration,
and the k-hop dependence transform.

Graphs are directed and (for every operation beyond validation) acyclic.
Nodes are assets; an edge (u, v) means that compromising u enables an attack
on v, succeeding with baseline probability ``p0`` when undefended and decaying
exponentially with total investment at rate ``s``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import networkx as nx

EdgeKey = tuple[str, str]


class GraphError(ValueError):
    """Raised when an operation's preconditions on the graph are violated."""


@dataclass(frozen=True)
class Node:
    id: str
    label: str = ""
    kind: str = "intermediate"  # intermediate | source | critical


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    p0: float
    s: float = 1.0
    note: str = ""  # provenance annotation for bundled scenarios

    @property
    def key(self) -> EdgeKey:
        return (self.src, self.dst)


@dataclass(frozen=True)
class CriticalAsset:
    node: str
    loss: float
    owners: frozenset[str]


class AttackGraph:
    """Immutable-by-convention attack graph. Construction never raises on
    semantic problems (cycles, dangling endpoints): those are reported by
    :func:`validate_graph` so that bad input files can be diagnosed. Operations
    that need a valid DAG raise :class:`GraphError` instead."""

    def __init__(
        self,
        nodes: Iterable[Node],
        edges: Iterable[Edge],
        sources: Iterable[str],
        critical_assets: Iterable[CriticalAsset] = (),
    ):
        self.nodes: tuple[Node, ...] = tuple(nodes)
        self.edges: tuple[Edge, ...] = tuple(edges)
        self.sources: tuple[str, ...] = tuple(sources)
        self.critical_assets: tuple[CriticalAsset, ...] = tuple(critical_assets)
        self.node_map: dict[str, Node] = {n.id: n for n in self.nodes}
        self.edge_map: dict[EdgeKey, Edge] = {e.key: e for e in self.edges}
        self._out: dict[str, list[Edge]] = {n.id: [] for n in self.nodes}
        self._in: dict[str, list[Edge]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            if e.src in self._out:
                self._out[e.src].append(e)
            if e.dst in self._in:
                self._in[e.dst].append(e)
        for adj in (self._out, self._in):
            for lst in adj.values():
                lst.sort(key=lambda e: e.key)
        self._topo: Optional[tuple[str, ...]] = None

    # -- basic accessors -------------------------------------------------
    def out_edges(self, node: str) -> list[Edge]:
        return self._out[node]

    def in_edges(self, node: str) -> list[Edge]:
        return self._in[node]

    def has_node(self, node: str) -> bool:
        return node in self.node_map

    @property
    def critical_nodes(self) -> frozenset[str]:
        return frozenset(c.node for c in self.critical_assets)

    def topo_order(self) -> tuple[str, ...]:
        """Topological order of node ids. Raises GraphError on a cycle."""
        if self._topo is None:
            indeg = {n.id: 0 for n in self.nodes}
            for e in self.edges:
                if e.dst in indeg and e.src in indeg:
                    indeg[e.dst] += 1
            frontier = sorted(n for n, d in indeg.items() if d == 0)
            order: list[str] = []
            while frontier:
                v = frontier.pop(0)
                order.append(v)
                changed = False
                for e in self._out.get(v, ()):
                    if e.dst in indeg:
                        indeg[e.dst] -= 1
                        if indeg[e.dst] == 0:
                            frontier.append(e.dst)
                            changed = True
                if changed:
                    frontier.sort()
            if len(order) != len(self.nodes):
                raise GraphError("graph contains a cycle; no topological order")
            self._topo = tuple(order)
        return self._topo

    def is_acyclic(self) -> bool:
        try:
            self.topo_order()
            return True
        except GraphError:
            return False

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"id": n.id, "label": n.label, "kind": n.kind} for n in self.nodes
            ],
            "edges": [
                {
                    "from": e.src,
                    "to": e.dst,
                    "p0": e.p0,
                    "s": e.s,
                    **({"note": e.note} if e.note else {}),
                }
                for e in self.edges
            ],
            "sources": list(self.sources),
            "critical_assets": [
                {"node": c.node, "loss": c.loss, "owners": sorted(c.owners)}
                for c in self.critical_assets
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AttackGraph":
        nodes = [
            Node(d["id"], d.get("label", ""), d.get("kind", "intermediate"))
            for d in data["nodes"]
        ]
        edges = [
            Edge(d["from"], d["to"], float(d["p0"]), float(d.get("s", 1.0)), d.get("note", ""))
            for d in data["edges"]
        ]
        crit = [
            CriticalAsset(d["node"], float(d["loss"]), frozenset(d["owners"]))
            for d in data.get("critical_assets", [])
        ]
        return cls(nodes, edges, data.get("sources", []), crit)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "AttackGraph":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate_graph(graph: AttackGraph) -> list[str]:
    """Return all invariant violations; an empty list means the graph is ok."""
    violations: list[str] = []
    seen: set[str] = set()
    for n in graph.nodes:
        if n.id in seen:
            violations.append(f"duplicate node id {n.id!r}")
        seen.add(n.id)
    for e in graph.edges:
        if e.src not in graph.node_map:
            violations.append(f"edge ({e.src},{e.dst}) references unknown node {e.src!r}")
        if e.dst not in graph.node_map:
            violations.append(f"edge ({e.src},{e.dst}) references unknown node {e.dst!r}")
        if e.src == e.dst:
            violations.append(f"self-loop on node {e.src!r}")
        if not (0.0 < e.p0 <= 1.0):
            violations.append(f"edge ({e.src},{e.dst}) baseline p0={e.p0} outside (0,1]")
        if e.s < 1.0 or not math.isfinite(e.s):
            violations.append(f"edge ({e.src},{e.dst}) sensitivity s={e.s} below 1")
    edge_keys = [e.key for e in graph.edges]
    if len(set(edge_keys)) != len(edge_keys):
        violations.append("duplicate edges present")
    for src in graph.sources:
        if src not in graph.node_map:
            violations.append(f"unknown source node {src!r}")
    for c in graph.critical_assets:
        if c.node not in graph.node_map:
            violations.append(f"critical asset references unknown node {c.node!r}")
        if not (math.isfinite(c.loss) and c.loss >= 0.0):
            violations.append(f"critical asset {c.node!r} loss {c.loss} not finite and nonnegative")
        if not c.owners:
            violations.append(f"critical asset {c.node!r} has no owners")
    if not graph.is_acyclic():
        violations.append("cycle detected")
    else:
        reachable = _reachable_from(graph, graph.sources)
        for c in graph.critical_assets:
            if c.node in graph.node_map and c.node not in reachable:
                violations.append(f"unreachable critical asset {c.node!r}")
    return violations


def _reachable_from(graph: AttackGraph, starts: Sequence[str]) -> set[str]:
    seen = set(s for s in starts if s in graph.node_map)
    stack = list(seen)
    while stack:
        v = stack.pop()
        for e in graph.out_edges(v):
            if e.dst not in seen and e.dst in graph.node_map:
                seen.add(e.dst)
                stack.append(e.dst)
    return seen


def _require_valid(graph: AttackGraph) -> None:
    violations = validate_graph(graph)
    if violations:
        raise GraphError("invalid graph: " + "; ".join(violations))


# ---------------------------------------------------------------------------
# path machinery
# ---------------------------------------------------------------------------

def enumerate_paths(graph: AttackGraph, source: str, target: str) -> list[list[EdgeKey]]:
    """All simple directed paths source -> target as edge-key lists, ordered
    lexicographically by their node-id sequence. Empty when none (including
    source == target: a zero-length sequence is not an attack path)."""
    for node in (source, target):
        if not graph.has_node(node):
            raise GraphError(f"unknown node id {node!r}")
    paths: list[list[EdgeKey]] = []
    if source == target:
        return paths
    stack: list[EdgeKey] = []
    visited = {source}

    def dfs(v: str) -> None:
        for e in graph.out_edges(v):  # out_edges pre-sorted: lexicographic order
            if e.dst in visited:
                continue
            stack.append(e.key)
            if e.dst == target:
                paths.append(list(stack))
            else:
                visited.add(e.dst)
                dfs(e.dst)
                visited.remove(e.dst)
            stack.pop()

    dfs(source)
    return paths


def most_vulnerable_path(
    graph: AttackGraph,
    edge_probs: Mapping[EdgeKey, float],
    target: str,
    sources: Optional[Sequence[str]] = None,
) -> tuple[list[EdgeKey], float]:
    """Path from any source to ``target`` maximizing the product of edge
    probabilities. Dynamic programming over a topological order on
    log-probabilities; ties broken by the lexicographically smallest node-id
    sequence. Returns ([], 0.0) when the target is unreachable."""
    if not graph.has_node(target):
        raise GraphError(f"unknown node id {target!r}")
    srcs = list(sources) if sources is not None else list(graph.sources)
    for s in srcs:
        if not graph.has_node(s):
            raise GraphError(f"unknown node id {s!r}")
    for e in graph.edges:
        if e.key not in edge_probs:
            raise GraphError(f"missing edge probability for {e.key}")
    order = graph.topo_order()
    # backward DP: best log-prob from node to target
    best: dict[str, float] = {nid: -math.inf for nid in graph.node_map}
    best[target] = 0.0
    for v in reversed(order):
        if v == target:
            continue
        for e in graph.out_edges(v):
            p = edge_probs[e.key]
            tail = best[e.dst]
            if p <= 0.0 or tail == -math.inf:
                continue
            cand = math.log(p) + tail
            if cand > best[v]:
                best[v] = cand
    start = None
    for s in sorted(srcs):
        if best[s] > -math.inf and (start is None or best[s] > best[start]):
            start = s
        elif start is not None and best[s] == best[start] and s < start:
            start = s
    if start is None:
        return [], 0.0
    # forward reconstruction, smallest next node among optimal continuations
    path: list[EdgeKey] = []
    v = start
    while v != target:
        nxt = None
        for e in graph.out_edges(v):
            p = edge_probs[e.key]
            if p <= 0.0 or best[e.dst] == -math.inf:
                continue
            if math.log(p) + best[e.dst] == best[v]:
                nxt = e
                break  # out_edges sorted: first match is lexicographically smallest
        if nxt is None:  # numerical guard: fall back to best continuation
            nxt = max(
                (e for e in graph.out_edges(v) if edge_probs[e.key] > 0.0),
                key=lambda e: math.log(edge_probs[e.key]) + best[e.dst],
            )
        path.append(nxt.key)
        v = nxt.dst
    prob = 1.0
    for key in path:
        prob *= edge_probs[key]
    return path, prob


# ---------------------------------------------------------------------------
# min-cut machinery
# ---------------------------------------------------------------------------

_ENUM_GUARD = 250_000  # max subsets examined when enumerating cuts exhaustively


def _disconnects(graph: AttackGraph, removed: frozenset[EdgeKey], sources: Sequence[str], target: str) -> bool:
    seen = set(s for s in sources if s in graph.node_map)
    stack = list(seen)
    while stack:
        v = stack.pop()
        if v == target:
            return False
        for e in graph.out_edges(v):
            if e.key in removed or e.dst in seen:
                continue
            seen.add(e.dst)
            stack.append(e.dst)
    return target not in seen


def min_cut_size(graph: AttackGraph, sources: Sequence[str], target: str,
                 candidate_edges: Optional[set[EdgeKey]] = None) -> Optional[int]:
    """Cardinality of the smallest cut within ``candidate_edges`` (all edges
    when None) separating the sources from target, or None when no such cut
    exists. Unit capacities on candidates, effectively infinite elsewhere."""
    big = len(graph.edges) + 1
    g = nx.DiGraph()
    g.add_node("__super__")
    for n in graph.nodes:
        g.add_node(n.id)
    for s in sources:
        g.add_edge("__super__", s, capacity=big)
    for e in graph.edges:
        cap = 1 if candidate_edges is None or e.key in candidate_edges else big
        g.add_edge(e.src, e.dst, capacity=cap)
    if target not in g or not any(nx.has_path(g, s, target) for s in sources if s in g):
        raise GraphError(f"target {target!r} unreachable from sources")
    value = nx.maximum_flow_value(g, "__super__", target)
    if value >= big:
        return None
    return int(value)


def min_edge_cut(
    graph: AttackGraph,
    source: str,
    target: str,
    limit: int = 16,
    candidate_edges: Optional[set[EdgeKey]] = None,
) -> list[list[EdgeKey]]:
    """All edge cuts of minimum cardinality separating source from target,
    enumerated in lexicographic order and capped at ``limit`` cuts. Falls back
    to the single max-flow cut when exhaustive enumeration would be too large."""
    _require_valid(graph)
    for node in (source, target):
        if not graph.has_node(node):
            raise GraphError(f"unknown node id {node!r}")
    k = min_cut_size(graph, [source], target, candidate_edges)
    if k is None:
        raise GraphError("no cut exists within the candidate edge set")
    pool = sorted(candidate_edges) if candidate_edges is not None else sorted(graph.edge_map)
    n_combos = math.comb(len(pool), k)
    if n_combos > _ENUM_GUARD:
        cutset = nx.minimum_edge_cut(_as_nx(graph), source, target)
        return [sorted(cutset)]
    cuts: list[list[EdgeKey]] = []
    for combo in itertools.combinations(pool, k):
        if _disconnects(graph, frozenset(combo), [source], target):
            cuts.append(list(combo))
            if len(cuts) >= limit:
                break
    return cuts


def _as_nx(graph: AttackGraph) -> nx.DiGraph:
    g = nx.DiGraph()
    for n in graph.nodes:
        g.add_node(n.id)
    for e in graph.edges:
        g.add_edge(e.src, e.dst)
    return g


# ---------------------------------------------------------------------------
# k-hop dependence transform
# ---------------------------------------------------------------------------

@dataclass
class KHopSpec:
    """Per-node dependence depth (k >= 1, default 1 everywhere) and optional
    probability overrides for derived edges keyed by the derived edge's key."""

    depths: dict[str, int] = field(default_factory=dict)
    overrides: dict[EdgeKey, float] = field(default_factory=dict)

    def depth(self, node: str) -> int:
        return self.depths.get(node, 1)


EdgeMirrorMap = dict  # EdgeKey -> frozenset[EdgeKey]


def khop_transform(graph: AttackGraph, spec: KHopSpec) -> tuple[AttackGraph, EdgeMirrorMap]:
    """Rewrite predecessor structure so that each node with depth k > 1 has one
    incident edge per length-k path ending at it, splitting interior
    predecessors into per-path virtual nodes. Investments made on an original
    edge must be mirrored on every derived edge recorded in the mirror map.

    With k = 1 everywhere the input graph is returned unchanged together with
    an identity mirror map."""
    _require_valid(graph)
    for node, k in spec.depths.items():
        if node not in graph.node_map:
            raise GraphError(f"k-hop spec references unknown node {node!r}")
        if k < 1:
            raise GraphError(f"k-hop depth for {node!r} must be >= 1")
    targets = sorted(n for n, k in spec.depths.items() if k > 1)
    if not targets:
        return graph, {e.key: frozenset({e.key}) for e in graph.edges}

    nodes: dict[str, Node] = {n.id: n for n in graph.nodes}
    edges: dict[EdgeKey, Edge] = {e.key: e for e in graph.edges}
    mirror: dict[EdgeKey, set[EdgeKey]] = {e.key: set() for e in graph.edges}
    untouched: set[EdgeKey] = set(edges)
    split_counter: dict[str, int] = {}
    used_overrides: set[EdgeKey] = set()

    def in_edges_of(node: str) -> list[EdgeKey]:
        return sorted(k for k in edges if k[1] == node)

    def paths_ending_at(node: str, length: int) -> list[list[str]]:
        # node sequences of exactly `length` edges ending at node, plus shorter
        # ones that cannot be extended (they start at a source)
        results: list[list[str]] = []

        def walk(seq: list[str], remaining: int) -> None:
            head = seq[0]
            preds = sorted(k[0] for k in edges if k[1] == head)
            if remaining == 0 or (not preds and head in graph.sources):
                results.append(list(seq))
                return
            if not preds:
                results.append(list(seq))
                return
            for p in preds:
                if p in seq:
                    continue
                walk([p] + seq, remaining - 1)

        walk([node], length)
        return sorted(results)

    def fresh_id(orig: str) -> str:
        idx = split_counter.get(orig, 0)
        split_counter[orig] = idx + 1
        label = chr(ord("a") + idx) if idx < 26 else str(idx)
        nid = f"{orig}#{label}"
        while nid in nodes:
            idx += 1
            split_counter[orig] = idx + 1
            nid = f"{orig}#{idx}"
        return nid

    # process targets in topological order so chained splits compose
    order_index = {nid: i for i, nid in enumerate(graph.topo_order())}
    for tgt in sorted(targets, key=lambda t: order_index[t]):
        k = spec.depth(tgt)
        paths = paths_ending_at(tgt, k)
        if not paths:
            continue
        for key in in_edges_of(tgt):
            del edges[key]
        for seq in paths:
            # seq = [u0, u1, ..., tgt]; interior nodes get per-path copies
            chain = [seq[0]]
            for interior in seq[1:-1]:
                copy_id = fresh_id(interior)
                base = nodes[interior]
                nodes[copy_id] = Node(copy_id, base.label, base.kind)
                chain.append(copy_id)
            chain.append(tgt)
            for i in range(len(chain) - 1):
                parent_key: EdgeKey = (seq[i], seq[i + 1])
                parent = graph.edge_map.get(parent_key)
                if parent is None:
                    # parent edge may itself be derived from an earlier split
                    parent = edges.get(parent_key)
                new_key: EdgeKey = (chain[i], chain[i + 1])
                p0 = spec.overrides.get(new_key, parent.p0 if parent else 0.9)
                if new_key in spec.overrides:
                    used_overrides.add(new_key)
                    if not (0.0 < p0 <= 1.0):
                        raise GraphError(f"override for {new_key} outside (0,1]")
                if new_key not in edges:
                    edges[new_key] = Edge(new_key[0], new_key[1], p0,
                                          parent.s if parent else 1.0)
                if parent is not None and new_key != parent_key:
                    mirror.setdefault(parent_key, set()).add(new_key)
                    untouched.discard(parent_key)

    stale = set(spec.overrides) - used_overrides - set(edges)
    if stale:
        raise GraphError(f"overrides reference nonexistent derived edges: {sorted(stale)}")

    # prune intermediates that lost all outgoing edges (dead ends contribute
    # no attack path), cascading upward
    critical = {c.node for c in graph.critical_assets}
    while True:
        out_deg: dict[str, int] = {nid: 0 for nid in nodes}
        for (u, _v) in edges:
            out_deg[u] += 1
        dead = [
            nid for nid, d in out_deg.items()
            if d == 0 and nid not in critical and nid not in graph.sources
        ]
        if not dead:
            break
        for nid in dead:
            del nodes[nid]
        edges = {k: e for k, e in edges.items() if k[0] in nodes and k[1] in nodes}

    mirror_out: EdgeMirrorMap = {}
    for key in graph.edge_map:
        derived = {k for k in mirror.get(key, set()) if k in edges}
        if key in edges:
            derived.add(key)
        mirror_out[key] = frozenset(derived)
    new_graph = AttackGraph(
        sorted(nodes.values(), key=lambda n: n.id),
        [edges[k] for k in sorted(edges)],
        graph.sources,
        graph.critical_assets,
    )
    return new_graph, mirror_out


def mirror_investments(profile_entries: Mapping[EdgeKey, float], mirror: EdgeMirrorMap) -> dict[EdgeKey, float]:
    """Copy an original-edge investment onto every derived edge of that edge."""
    out: dict[EdgeKey, float] = {}
    for key, amount in profile_entries.items():
        for derived in mirror.get(key, frozenset({key})):
            out[derived] = out.get(derived, 0.0) + amount
    return out
