"""Bundled scenarios (the DER and SCADA case studies plus the small teaching
networks), scenario-file IO, the min-cut baseline comparator, replication, and
baseline-probability perturbation.

Baseline probabilities for the named edges derive from CVSS-style scores of
the real CVE vulnerabilities each edge represents; every other edge carries
the documented default of 0.9. Per-asset losses default to 1 and are
overridable, so absolute loss figures are scenario choices, not calibrated
values.
"""

from __future__ import annotations

import itertools
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .behavior import Defender, InvestmentProfile
from .graph import (
    AttackGraph,
    CriticalAsset,
    Edge,
    EdgeKey,
    GraphError,
    Node,
    min_cut_size,
    _disconnects,
    _ENUM_GUARD,
)

FIGURE_READ = "architecture-diagram default"
TABLE_NOTE = "CVE score table"

DER1_TOTAL_BUDGET = 20.0  # paper's DER budget scale
SCADA_BUDGET_LEVELS = (10.0, 20.0, 30.0)


def _split_budget(total: float, n: int, split: Optional[Sequence[float]]) -> list[float]:
    if split is None:
        return [total / n] * n
    if len(split) != n or abs(sum(split) - 1.0) > 1e-9:
        raise GraphError("budget split must be one fraction per defender summing to 1")
    return [total * f for f in split]


# ---------------------------------------------------------------------------
# DER distributed-energy scenario (two HMI-gated equipment chains, shared goal)
# ---------------------------------------------------------------------------

def _der_subnet_names(i: int) -> dict[str, str]:
    # subnet i occupies w{9i-8}..w{9i}; entries at the top of each block
    base = 9 * i
    return {
        "entry": f"w{base}",
        "hi": f"w{base - 2}",
        "lo": f"w{base - 1}",
        "mid": f"w{base - 3}",
        "dev": f"w{base - 4}",
        "c4": f"w{base - 5}",
        "c3": f"w{base - 6}",
        "c2": f"w{base - 7}",
        "c1": f"w{base - 8}",
        "goal": f"G{i - 1}",
    }


def der1_cross_edges() -> list[tuple[EdgeKey, str]]:
    """The twelve criss-cross edges of the two-defender DER graph, ordered by
    the chain level they connect (device level first, goals last), together
    with the owning (target-side) defender id."""
    a, b = _der_subnet_names(1), _der_subnet_names(2)
    ladder = [
        ((a["mid"], b["dev"]), "d2"), ((b["mid"], a["dev"]), "d1"),
        ((a["dev"], b["c4"]), "d2"), ((b["dev"], a["c4"]), "d1"),
        ((a["c4"], b["c3"]), "d2"), ((b["c4"], a["c3"]), "d1"),
        ((a["c3"], b["c2"]), "d2"), ((b["c3"], a["c2"]), "d1"),
        ((a["c2"], b["c1"]), "d2"), ((b["c2"], a["c1"]), "d1"),
        ((a["hi"], b["mid"]), "d2"), ((b["hi"], a["mid"]), "d1"),
    ]
    return ladder


def build_der1(
    interdependency_links: int = 2,
    n_defenders: int = 2,
    sensitivity_overrides: Optional[Mapping[EdgeKey, float]] = None,
    loss_overrides: Optional[Mapping[str, float]] = None,
    budget_total: float = DER1_TOTAL_BUDGET,
    budget_split: Optional[Sequence[float]] = None,
    alpha: float = 1.0,
    eta: float = 0.0,
) -> tuple[AttackGraph, list[Defender]]:
    """DER failure-scenario graph: per defender a stepping-stone chain from
    the attacker's entry through physical/network access, software access, and
    command injection down to the equipment goal, all goals feeding a shared
    goal node G. With two defenders, ``interdependency_links`` prefixes the
    criss-cross ladder (2 = the HMIs exchange commands, 12 = communicating at
    all levels); with any other defender count every pair of subnets is linked
    at the command level, which coincides with the default two links for the
    base pair."""
    if n_defenders < 1:
        raise GraphError("need at least one defender")
    if n_defenders == 2 and not (0 <= interdependency_links <= 12):
        raise GraphError("interdependency_links must lie in 0..12")
    losses = dict(loss_overrides or {})
    sens = dict(sensitivity_overrides or {})

    nodes: list[Node] = [Node("S", "attacker entry", "source")]
    edges: list[Edge] = []
    criticals: list[CriticalAsset] = []
    owners: dict[EdgeKey, set[str]] = {}

    def add_edge(src: str, dst: str, p0: float, owner: str, note: str) -> None:
        key = (src, dst)
        edges.append(Edge(src, dst, p0, sens.get(key, 1.0), note))
        owners.setdefault(key, set()).add(owner)

    for i in range(1, n_defenders + 1):
        names = _der_subnet_names(i)
        d = f"d{i}"
        for role in ("entry", "hi", "lo", "mid", "dev", "c4", "c3", "c2", "c1"):
            nodes.append(Node(names[role], f"{d} asset", "intermediate"))
        nodes.append(Node(names["goal"], f"{d} equipment failure", "critical"))
        add_edge("S", names["entry"], 0.9, d, FIGURE_READ)
        add_edge(names["entry"], names["hi"], 0.71, d, f"{TABLE_NOTE}: physical access")
        add_edge(names["entry"], names["lo"], 0.61, d, f"{TABLE_NOTE}: network access")
        add_edge(names["hi"], names["mid"], 0.82, d, f"{TABLE_NOTE}: software access")
        add_edge(names["lo"], names["mid"], 0.82, d, f"{TABLE_NOTE}: software access")
        add_edge(names["mid"], names["dev"], 0.88, d, f"{TABLE_NOTE}: sending cmd")
        for a, b in (("dev", "c4"), ("c4", "c3"), ("c3", "c2"), ("c2", "c1")):
            add_edge(names[a], names[b], 0.9, d, FIGURE_READ)
        add_edge(names["c1"], names["goal"], 0.9, d, FIGURE_READ)
        add_edge(names["goal"], "G", 0.9, d, FIGURE_READ)
        criticals.append(CriticalAsset(names["goal"], losses.get(names["goal"], 1.0),
                                       frozenset({d})))
    nodes.append(Node("G", "shared failure goal", "critical"))
    all_ids = frozenset(f"d{i}" for i in range(1, n_defenders + 1))
    criticals.append(CriticalAsset("G", losses.get("G", 1.0), all_ids))

    if n_defenders == 2:
        for (src, dst), owner in der1_cross_edges()[:interdependency_links]:
            add_edge(src, dst, 0.9, owner, FIGURE_READ + " (interdependency)")
    else:
        # replicated installations: consecutive pairs exchange commands at the
        # HMI level exactly like the base pair, and equipment controllers of
        # distinct installations can disturb each other's goals through the
        # shared plant, so each goal's attack surface grows with the replica
        # count
        for j in range(2, n_defenders + 1, 2):
            a, b = _der_subnet_names(j - 1), _der_subnet_names(j)
            add_edge(a["mid"], b["dev"], 0.9, f"d{j}", FIGURE_READ + " (interdependency)")
            add_edge(b["mid"], a["dev"], 0.9, f"d{j - 1}", FIGURE_READ + " (interdependency)")
        for i, j in itertools.permutations(range(1, n_defenders + 1), 2):
            if (i - 1) // 2 == (j - 1) // 2:
                continue
            src = _der_subnet_names(i)["c1"]
            dst = _der_subnet_names(j)["goal"]
            add_edge(src, dst, 0.9, f"d{j}", "shared-plant goal coupling")

    graph = AttackGraph(nodes, edges, ["S"], criticals)
    budgets = _split_budget(budget_total, n_defenders, budget_split)
    defenders = []
    for i in range(1, n_defenders + 1):
        d = f"d{i}"
        own = frozenset(k for k, who in owners.items() if d in who)
        crit = frozenset({_der_subnet_names(i)["goal"], "G"})
        defenders.append(Defender(d, own, budgets[i - 1], alpha, eta, crit))
    return graph, defenders


# ---------------------------------------------------------------------------
# SCADA control-system scenario
# ---------------------------------------------------------------------------

def scada_cross_edges(rtus_per_control: int = 3) -> list[tuple[EdgeKey, float, str]]:
    """Interdependency ladder for the two control subnetworks: DMZ-level
    communication lets an attacker inside one DMZ reach the other side's
    control unit, and each control unit can inject commands into the other
    side's RTUs. Same-level links in both directions would create cycles, so
    every cross edge skips one level down and is defended by the defender
    whose asset it threatens; probabilities mirror the vulnerability class of
    the edge's target."""
    out: list[tuple[EdgeKey, float, str]] = [
        (("DMZ1", "Control2"), 0.78, "d2"), (("DMZ2", "Control1"), 0.78, "d1"),
    ]
    for j in range(1, rtus_per_control + 1):
        out.append((("Control1", f"RTU2_{j}"), 1.0, "d2"))
    for j in range(1, rtus_per_control + 1):
        out.append((("Control2", f"RTU1_{j}"), 1.0, "d1"))
    return out


def build_scada(
    rtus_per_control: int = 3,
    interdependency_links: int = 0,
    loss_overrides: Optional[Mapping[str, float]] = None,
    sensitivity_overrides: Optional[Mapping[EdgeKey, float]] = None,
    budget_total: float = 20.0,
    budget_split: Optional[Sequence[float]] = None,
    alpha: float = 1.0,
    eta: float = 0.0,
) -> tuple[AttackGraph, list[Defender]]:
    """Two control subnetworks behind a shared corporate network and a common
    equipment vendor. Every asset inside a subnetwork (DMZ, control unit, and
    each RTU) is a critical asset of its defender; the vendor and corporate
    jump points are shared and both defenders may invest on the entry edges."""
    if rtus_per_control < 1:
        raise GraphError("need at least one RTU per control unit")
    max_links = 2 + 2 * rtus_per_control
    if not (0 <= interdependency_links <= max_links):
        raise GraphError(f"interdependency_links must lie in 0..{max_links}")
    losses = dict(loss_overrides or {})
    sens = dict(sensitivity_overrides or {})

    nodes = [
        Node("S", "attacker", "source"),
        Node("Vendor", "shared vendor network"),
        Node("Corp", "shared corporate network"),
    ]
    edges: list[Edge] = []
    owners: dict[EdgeKey, set[str]] = {}
    criticals: list[CriticalAsset] = []

    def add_edge(src, dst, p0, owner_ids, note):
        key = (src, dst)
        edges.append(Edge(src, dst, p0, sens.get(key, 1.0), note))
        owners.setdefault(key, set()).update(owner_ids)

    # entry edges into the shared vendor/corporate networks are outside both
    # defenders' control: nobody invests on them, which is what lets central
    # and decentralized outcomes coincide under symmetric budgets
    add_edge("S", "Vendor", 0.9, set(), f"{TABLE_NOTE}: remote authentication")
    add_edge("S", "Corp", 0.9, set(), FIGURE_READ)
    for i in (1, 2):
        d = f"d{i}"
        dmz, ctrl = f"DMZ{i}", f"Control{i}"
        nodes.append(Node(dmz, f"{d} demilitarized zone", "critical"))
        nodes.append(Node(ctrl, f"{d} control unit", "critical"))
        add_edge("Corp", dmz, 0.75, {d}, f"{TABLE_NOTE}: authentication bypassing")
        add_edge("Vendor", ctrl, 0.78, {d}, f"{TABLE_NOTE}: control unit")
        add_edge(dmz, ctrl, 0.9, {d}, FIGURE_READ + " (inner firewall)")
        criticals.append(CriticalAsset(dmz, losses.get(dmz, 1.0), frozenset({d})))
        criticals.append(CriticalAsset(ctrl, losses.get(ctrl, 1.0), frozenset({d})))
        for j in range(1, rtus_per_control + 1):
            rtu = f"RTU{i}_{j}"
            nodes.append(Node(rtu, f"{d} remote terminal unit", "critical"))
            add_edge(ctrl, rtu, 1.0, {d}, f"{TABLE_NOTE}: remote cmd injection")
            criticals.append(CriticalAsset(rtu, losses.get(rtu, 1.0), frozenset({d})))

    for (src, dst), p0, owner in scada_cross_edges(rtus_per_control)[:interdependency_links]:
        add_edge(src, dst, p0, {owner} if owner else set(), "interdependency")

    graph = AttackGraph(nodes, edges, ["S"], criticals)
    budgets = _split_budget(budget_total, 2, budget_split)
    defenders = []
    for i in (1, 2):
        d = f"d{i}"
        own = frozenset(k for k, who in owners.items() if d in who)
        crit = frozenset({f"DMZ{i}", f"Control{i}"}
                         | {f"RTU{i}_{j}" for j in range(1, rtus_per_control + 1)})
        defenders.append(Defender(d, own, budgets[i - 1], alpha, eta, crit))
    return graph, defenders


# ---------------------------------------------------------------------------
# small teaching networks
# ---------------------------------------------------------------------------

def build_fig4a(budget: float = 10.0, alpha: float = 1.0, eta: float = 0.0,
                sensitivity_overrides: Optional[Mapping[EdgeKey, float]] = None,
                ) -> tuple[AttackGraph, list[Defender]]:
    """Two-path diamond with a size-1 min cut at each end (p0 = 1)."""
    sens = dict(sensitivity_overrides or {})
    keys = [("vs", "v1"), ("v1", "v2"), ("v1", "v3"),
            ("v2", "v4"), ("v3", "v4"), ("v4", "v5")]
    nodes = [Node("vs", kind="source")] + [Node(f"v{i}") for i in range(1, 5)] \
        + [Node("v5", kind="critical")]
    edges = [Edge(a, b, 1.0, sens.get((a, b), 1.0)) for a, b in keys]
    graph = AttackGraph(nodes, edges, ["vs"],
                        [CriticalAsset("v5", 1.0, frozenset({"d1"}))])
    defender = Defender("d1", frozenset(keys), budget, alpha, eta, frozenset({"v5"}))
    return graph, [defender]


def build_network_a(unit_budget: float = 24.0, alpha: float = 1.0,
                    eta: float = 0.0) -> tuple[AttackGraph, list[Defender]]:
    """Session network A: the diamond with a single critical edge (v4,v5)."""
    keys = [("v1", "v2"), ("v1", "v3"), ("v2", "v4"), ("v3", "v4"), ("v4", "v5")]
    nodes = [Node("v1", kind="source"), Node("v2"), Node("v3"), Node("v4"),
             Node("v5", kind="critical")]
    edges = [Edge(a, b, 1.0) for a, b in keys]
    graph = AttackGraph(nodes, edges, ["v1"],
                        [CriticalAsset("v5", 1.0, frozenset({"subject"}))])
    defender = Defender("subject", frozenset(keys), unit_budget, alpha, eta,
                        frozenset({"v5"}))
    return graph, [defender]


def build_network_b(unit_budget: float = 24.0, alpha: float = 1.0,
                    eta: float = 0.0) -> tuple[AttackGraph, list[Defender]]:
    """Session network B: the cross-over graph; the optimal allocation puts
    nothing on the cross-over edge (v2,v3) for every alpha at eta = 0."""
    keys = [("v1", "v2"), ("v1", "v3"), ("v2", "v3"), ("v2", "v4"), ("v3", "v4")]
    nodes = [Node("v1", kind="source"), Node("v2"), Node("v3"),
             Node("v4", kind="critical")]
    edges = [Edge(a, b, 1.0) for a, b in keys]
    graph = AttackGraph(nodes, edges, ["v1"],
                        [CriticalAsset("v4", 1.0, frozenset({"subject"}))])
    defender = Defender("subject", frozenset(keys), unit_budget, alpha, eta,
                        frozenset({"v4"}))
    return graph, [defender]


NETWORK_A_CRITICAL_EDGE: EdgeKey = ("v4", "v5")
NETWORK_B_CROSSOVER_EDGE: EdgeKey = ("v2", "v3")

BUNDLED = {
    "der1": build_der1,
    "scada": build_scada,
    "fig4a": build_fig4a,
    "network_a": build_network_a,
    "network_b": build_network_b,
}


def build_scenario(name: str, **options) -> tuple[AttackGraph, list[Defender]]:
    try:
        builder = BUNDLED[name.lower()]
    except KeyError:
        raise GraphError(f"unknown bundled scenario {name!r}") from None
    return builder(**options)


def replicate_scenario(graph: AttackGraph, n: int, mode: str) -> AttackGraph:
    """Scale a bundled scenario: mode="defenders" rebuilds the DER graph with n
    per-defender subnetworks sharing S and G; mode="rtus" rebuilds the SCADA
    graph with n RTUs per control unit. The input must be the bundled default
    shape (replication re-derives it rather than mutating arbitrary graphs)."""
    if n < 1:
        raise GraphError("replica count must be >= 1")
    ids = set(graph.node_map)
    if mode == "defenders":
        if "G" not in ids or "w9" not in ids:
            raise GraphError("defender replication needs the bundled DER shape")
        return build_der1(n_defenders=n)[0]
    if mode == "rtus":
        if "Vendor" not in ids or "Corp" not in ids:
            raise GraphError("RTU replication needs the bundled SCADA shape")
        return build_scada(rtus_per_control=n)[0]
    raise GraphError(f"unknown replication mode {mode!r}")


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------

def scenario_to_dict(graph: AttackGraph, defenders: Sequence[Defender]) -> dict:
    data = graph.to_dict()
    data["defenders"] = [
        {
            "id": d.id,
            "budget": d.budget,
            "alpha": d.alpha,
            "eta": d.eta,
            "edges": [list(k) for k in d.sorted_edges()],
            "critical": sorted(d.critical),
        }
        for d in defenders
    ]
    return data


def scenario_from_dict(data: Mapping) -> tuple[AttackGraph, list[Defender]]:
    graph = AttackGraph.from_dict(data)
    defenders = [
        Defender(
            d["id"],
            frozenset((e[0], e[1]) for e in d["edges"]),
            float(d["budget"]),
            float(d.get("alpha", 1.0)),
            float(d.get("eta", 0.0)),
            frozenset(d.get("critical", [])),
        )
        for d in data.get("defenders", [])
    ]
    return graph, defenders


def save_scenario(path, graph: AttackGraph, defenders: Sequence[Defender]) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(graph, defenders), indent=2))


def load_scenario(path) -> tuple[AttackGraph, list[Defender]]:
    return scenario_from_dict(json.loads(Path(path).read_text()))


def bundled_scenario_path(name: str) -> Path:
    return Path(__file__).parent / "data" / f"{name}.json"


def resolve_scenario(name_or_path: str, **options) -> tuple[AttackGraph, list[Defender]]:
    """Bundled name or path to a scenario file."""
    if name_or_path.lower() in BUNDLED:
        return build_scenario(name_or_path, **options)
    path = Path(name_or_path)
    if not path.exists():
        raise GraphError(
            f"{name_or_path!r} is neither a bundled scenario ({sorted(BUNDLED)}) "
            "nor an existing file")
    return load_scenario(path)


# ---------------------------------------------------------------------------
# min-cut baseline comparator
# ---------------------------------------------------------------------------

def defender_cut_edges(graph: AttackGraph, defender: Defender,
                       cut_limit: int = 16) -> tuple[list[EdgeKey], bool]:
    """Union of the defender's enumerable minimum cuts, one target at a time,
    restricted to her controllable edges. Targets she cannot sever with her
    own edges (shared assets reachable through other subnetworks) are skipped;
    when nothing is cuttable at all, fall back to every controllable edge on
    some source->target path (flagged False)."""
    own = set(defender.edges)
    union: list[EdgeKey] = []
    for target in sorted(defender.critical):
        try:
            k = min_cut_size(graph, graph.sources, target, candidate_edges=own)
        except GraphError:
            continue
        if k is None:
            continue
        pool = sorted(own)
        if math.comb(len(pool), k) > _ENUM_GUARD:
            continue
        found = 0
        for combo in itertools.combinations(pool, k):
            if _disconnects(graph, frozenset(combo), graph.sources, target):
                for key in combo:
                    if key not in union:
                        union.append(key)
                found += 1
                if found >= cut_limit:
                    break
    if union:
        return sorted(union), True
    on_path = _edges_on_paths(graph, defender)
    return sorted(on_path), False


def _edges_on_paths(graph: AttackGraph, defender: Defender) -> list[EdgeKey]:
    fwd = set(graph.sources)
    stack = list(fwd)
    while stack:
        v = stack.pop()
        for e in graph.out_edges(v):
            if e.dst not in fwd:
                fwd.add(e.dst)
                stack.append(e.dst)
    bwd = set(defender.critical)
    stack = list(bwd)
    while stack:
        v = stack.pop()
        for e in graph.in_edges(v):
            if e.src not in bwd:
                bwd.add(e.src)
                stack.append(e.src)
    return [k for k in defender.sorted_edges() if k[0] in fwd and k[1] in bwd]


def mincut_baseline_allocation(
    graph: AttackGraph, defenders: Sequence[Defender]
) -> tuple[InvestmentProfile, dict[str, bool]]:
    """The comparator defense: each defender splits her budget equally across
    the union of her minimum cuts. Returns the profile and a per-defender flag
    (False when the all-path-edges fallback had to be used)."""
    profile = InvestmentProfile()
    flags: dict[str, bool] = {}
    for d in defenders:
        cut, ok = defender_cut_edges(graph, d)
        flags[d.id] = ok
        if not cut:
            continue
        share = d.budget / len(cut)
        for key in cut:
            profile.entries[(d.id, key)] = share
    return profile, flags


# ---------------------------------------------------------------------------
# uncertainty perturbation
# ---------------------------------------------------------------------------

def perturb_baselines(graph: AttackGraph, sigma: float, seed: int = 0) -> AttackGraph:
    """Replace each edge's baseline with a draw from N(p0, sigma) restricted to
    (0, 1]: rejection-resample up to 100 times, then clamp. Deterministic given
    the seed; sigma = 0 returns the graph unchanged."""
    if sigma < 0:
        raise GraphError("sigma must be nonnegative")
    if sigma == 0.0:
        return graph
    rng = np.random.default_rng(seed)
    new_edges = []
    for e in sorted(graph.edges, key=lambda e: e.key):
        q = rng.normal(e.p0, sigma)
        tries = 0
        while not (0.0 < q <= 1.0) and tries < 100:
            q = rng.normal(e.p0, sigma)
            tries += 1
        if not (0.0 < q <= 1.0):
            q = min(max(q, 1e-12), 1.0)
        new_edges.append(Edge(e.src, e.dst, float(q), e.s, e.note))
    return AttackGraph(graph.nodes, new_edges, graph.sources, graph.critical_assets)
