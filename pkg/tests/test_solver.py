import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_feasible_profile
from secgame.behavior import Defender, InvestmentProfile, perceived_total_loss
from secgame.graph import AttackGraph, CriticalAsset, Edge, Node
from secgame.scenarios import build_fig4a
from secgame.solver import (
    FIG4A_EDGES,
    SolverConfig,
    SolverError,
    best_response,
    closed_form_two_path,
    project_feasible,
    two_path_perceived_loss,
)


# -- projection --------------------------------------------------------------

def test_projection_identity_when_feasible():
    x = np.array([0.5, 1.0, 0.2])
    out = project_feasible(x, budget=2.0, eta=0.1)
    assert np.allclose(out, x)


def test_projection_symmetric_example():
    out = project_feasible(np.array([3.0, 3.0]), budget=2.0, eta=0.0)
    assert np.allclose(out, [1.0, 1.0])


def test_projection_unique_feasible_point():
    for start in ([0.0, 0.0], [5.0, 0.0], [0.3, 0.9]):
        out = project_feasible(np.array(start), budget=1.0, eta=0.5)
        assert np.allclose(out, [0.5, 0.5])


def test_projection_idempotent_random():
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.normal(size=6) * 3
        once = project_feasible(x, budget=4.0, eta=0.2)
        twice = project_feasible(once, budget=4.0, eta=0.2)
        assert np.allclose(once, twice, atol=1e-12)
        assert once.min() >= 0.2 - 1e-12
        assert once.sum() <= 4.0 + 1e-9


def test_projection_infeasible_raises():
    with pytest.raises(SolverError):
        project_feasible(np.zeros(3), budget=1.0, eta=0.5)


@given(st.lists(st.floats(min_value=-5, max_value=5), min_size=2, max_size=8),
       st.floats(min_value=0.5, max_value=10.0))
@settings(max_examples=100, deadline=None)
def test_projection_is_closest_point(raw, budget):
    x = np.array(raw)
    proj = project_feasible(x, budget, 0.0)
    rng = np.random.default_rng(42)
    d_proj = np.sum((x - proj) ** 2)
    for _ in range(20):
        q = rng.dirichlet(np.ones(len(x))) * budget * rng.uniform(0, 1)
        assert d_proj <= np.sum((x - q) ** 2) + 1e-9


# -- closed form ---------------------------------------------------------------

def test_closed_form_rational():
    x = closed_form_two_path(1.0, 8.0)
    assert x[("vs", "v1")] == pytest.approx(4.0)
    assert x[("v4", "v5")] == pytest.approx(4.0)
    assert sum(v for k, v in x.items() if k not in (("vs", "v1"), ("v4", "v5"))) == 0.0
    assert two_path_perceived_loss(x, 1.0) == pytest.approx(math.exp(-8.0), rel=1e-12)


def test_closed_form_alpha_half():
    x = closed_form_two_path(0.5, 1.0)
    assert x[("vs", "v1")] == pytest.approx(1 / 3, abs=1e-12)
    assert x[("v4", "v5")] == pytest.approx(1 / 3, abs=1e-12)
    for key in (("v1", "v2"), ("v2", "v4"), ("v1", "v3"), ("v3", "v4")):
        assert x[key] == pytest.approx(1 / 12, abs=1e-12)


def test_closed_form_sensitivity_ratio_identity():
    s = {key: 1.0 for key in FIG4A_EDGES}
    s[("v4", "v5")] = 3.0
    alpha = 0.5
    x = closed_form_two_path(alpha, 5.0, s)
    expected_ratio = (1.0 / 3.0) ** (alpha / (1 - alpha))
    assert x[("vs", "v1")] / x[("v4", "v5")] == pytest.approx(expected_ratio, rel=1e-10)


def test_closed_form_unsupported_topology():
    with pytest.raises(SolverError):
        closed_form_two_path(0.5, 1.0, {("a", "b"): 1.0})


# -- best response ----------------------------------------------------------------

def single_edge_game(budget=3.0, alpha=0.7):
    nodes = [Node("s"), Node("m"), Node("t")]
    edges = [Edge("s", "m", 0.9), Edge("m", "t", 0.8)]
    graph = AttackGraph(nodes, edges, ["s"], [CriticalAsset("t", 1.0, frozenset({"d"}))])
    defender = Defender("d", frozenset({("m", "t")}), budget, alpha,
                        critical=frozenset({"t"}))
    return graph, [defender]


def test_single_edge_all_budget():
    graph, defenders = single_edge_game()
    r = best_response(graph, defenders, InvestmentProfile(), "d")
    assert r.as_dict()[("m", "t")] == pytest.approx(3.0, abs=1e-9)


def test_fig4a_rational_min_cut():
    graph, defenders = build_fig4a(budget=10.0, alpha=1.0)
    r = best_response(graph, defenders, InvestmentProfile(), "d1")
    x = r.as_dict()
    cut_mass = x[("vs", "v1")] + x[("v4", "v5")]
    assert cut_mass >= 0.999 * 10.0
    assert abs(r.perceived_loss - math.exp(-10.0)) <= 1e-6


def test_fig4a_behavioral_closed_form_investments():
    graph, defenders = build_fig4a(budget=1.0, alpha=0.5)
    r = best_response(graph, defenders, InvestmentProfile(), "d1")
    x = r.as_dict()
    assert x[("vs", "v1")] == pytest.approx(1 / 3, abs=1e-4)
    assert x[("v4", "v5")] == pytest.approx(1 / 3, abs=1e-4)
    for key in (("v1", "v2"), ("v2", "v4"), ("v1", "v3"), ("v3", "v4")):
        assert x[key] == pytest.approx(1 / 12, abs=1e-4)


@pytest.mark.parametrize("alpha", [0.5, 0.6, 0.8, 1.0])
@pytest.mark.parametrize("budget", [1.0, 5.0, 10.0])
def test_oracle_equivalence_uniform(alpha, budget):
    graph, defenders = build_fig4a(budget=budget, alpha=alpha)
    r = best_response(graph, defenders, InvestmentProfile(), "d1")
    oracle = two_path_perceived_loss(closed_form_two_path(alpha, budget), alpha)
    assert abs(r.perceived_loss - oracle) <= 1e-4


def test_feasibility_of_output():
    graph, defenders = build_fig4a(budget=5.0, alpha=0.6, eta=0.3)
    r = best_response(graph, defenders, InvestmentProfile(), "d1")
    assert r.x.min() >= 0.3 - 1e-9
    assert r.x.sum() <= 5.0 + 1e-9


def test_solution_beats_random_points():
    graph, defenders = build_fig4a(budget=4.0, alpha=0.6)
    d = defenders[0]
    r = best_response(graph, defenders, InvestmentProfile(), "d1")
    rng = np.random.default_rng(11)
    for _ in range(100):
        profile = random_feasible_profile(defenders, rng)
        value = perceived_total_loss(graph, defenders, profile, "d1")
        assert r.perceived_loss <= value + 1e-9


def test_same_sensitivity_permutation_invariance():
    """At alpha=1 on one path, only the investment sum matters."""
    nodes = [Node("s"), Node("a"), Node("b"), Node("t")]
    keys = [("s", "a"), ("a", "b"), ("b", "t")]
    edges = [Edge(*k, 0.9) for k in keys]
    graph = AttackGraph(nodes, edges, ["s"], [CriticalAsset("t", 1.0, frozenset({"d"}))])
    d = Defender("d", frozenset(keys), 6.0, 1.0, critical=frozenset({"t"}))
    rng = np.random.default_rng(1)
    x = rng.dirichlet(np.ones(3)) * 6.0
    values = []
    for perm in ([0, 1, 2], [2, 0, 1], [1, 2, 0]):
        profile = InvestmentProfile({("d", k): float(x[p]) for k, p in zip(keys, perm)})
        values.append(perceived_total_loss(graph, [d], profile, "d"))
    assert max(values) - min(values) <= 1e-9


def test_determinism():
    graph, defenders = build_fig4a(budget=5.0, alpha=0.6)
    r1 = best_response(graph, defenders, InvestmentProfile(), "d1")
    r2 = best_response(graph, defenders, InvestmentProfile(), "d1")
    assert np.array_equal(r1.x, r2.x)
    assert r1.perceived_loss == r2.perceived_loss


def test_eta_binding_unique_point():
    graph, defenders = build_fig4a(budget=10.0, alpha=0.6)
    import dataclasses
    d = dataclasses.replace(defenders[0], eta=10.0 / 6.0)
    r = best_response(graph, [d], InvestmentProfile(), "d1")
    assert np.allclose(r.x, 10.0 / 6.0, atol=1e-9)


def test_subgradient_method_contract():
    """The fallback solver stays feasible and lands near the oracle."""
    config = SolverConfig(method="subgradient", max_iters=20000, restarts=1)
    graph, defenders = build_fig4a(budget=5.0, alpha=0.6)
    r = best_response(graph, defenders, InvestmentProfile(), "d1", config)
    assert r.x.min() >= -1e-9 and r.x.sum() <= 5.0 + 1e-9
    oracle = two_path_perceived_loss(closed_form_two_path(0.6, 5.0), 0.6)
    assert r.perceived_loss <= oracle + 5e-3
    zero = perceived_total_loss(graph, defenders, InvestmentProfile(), "d1")
    assert r.perceived_loss < zero


def test_warm_start_incumbent_kept():
    graph, defenders = build_fig4a(budget=5.0, alpha=0.6)
    r = best_response(graph, defenders, InvestmentProfile(), "d1")
    again = best_response(graph, defenders, InvestmentProfile(), "d1",
                          warm_start=r.x)
    assert np.array_equal(again.x, r.x)


def test_unknown_defender_and_method():
    graph, defenders = build_fig4a()
    from secgame.behavior import ModelError
    with pytest.raises(ModelError):
        best_response(graph, defenders, InvestmentProfile(), "nope")
    with pytest.raises(SolverError):
        best_response(graph, defenders, InvestmentProfile(), "d1",
                      SolverConfig(method="magic"))


def test_solver_config_validation():
    with pytest.raises(SolverError):
        SolverConfig(max_iters=0)
