import numpy as np
import pytest

from secgame.behavior import Defender, InvestmentProfile
from secgame.graph import AttackGraph, CriticalAsset, Edge, Node
from secgame.scenarios import build_fig4a, build_network_a, build_network_b
from secgame.solver import SolverConfig


@pytest.fixture(scope="session")
def fig4a():
    return build_fig4a(budget=10.0)


@pytest.fixture(scope="session")
def network_a():
    return build_network_a()


@pytest.fixture(scope="session")
def network_b():
    return build_network_b()


@pytest.fixture(scope="session")
def fast_solver():
    return SolverConfig(restarts=0)


@pytest.fixture
def chain_graph():
    """s -> a -> t with p0 = 0.5 on both edges, L = 1."""
    nodes = [Node("s", kind="source"), Node("a"), Node("t", kind="critical")]
    edges = [Edge("s", "a", 0.5), Edge("a", "t", 0.5)]
    graph = AttackGraph(nodes, edges, ["s"], [CriticalAsset("t", 1.0, frozenset({"d"}))])
    defender = Defender("d", frozenset({("s", "a"), ("a", "t")}), 4.0,
                        critical=frozenset({"t"}))
    return graph, [defender]


def random_feasible_profile(defenders, rng) -> InvestmentProfile:
    profile = InvestmentProfile()
    for d in defenders:
        keys = d.sorted_edges()
        if not keys:
            continue
        x = rng.dirichlet(np.ones(len(keys))) * d.budget * rng.uniform(0.2, 1.0)
        x = np.maximum(x, d.eta)
        if x.sum() > d.budget:
            x *= d.budget / x.sum()
        for k, v in zip(keys, x):
            profile.entries[(d.id, k)] = float(v)
    return profile
