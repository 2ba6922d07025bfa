import dataclasses
import math

import numpy as np
import pytest

from secgame.behavior import Defender, InvestmentProfile, perceived_total_loss
from secgame.equilibrium import (
    GameConfig,
    best_response_dynamics,
    central_vs_decentralized_ratio,
    evaluate_profile,
    is_pne,
    social_optimum,
)
from secgame.graph import AttackGraph, CriticalAsset, Edge, Node
from secgame.scenarios import build_der1, build_fig4a, build_scada
from secgame.solver import SolverConfig, best_response


def decoupled_two_defender_game():
    """Two copies of a chain, no shared anything."""
    nodes, edges, crits = [], [], []
    for i in (1, 2):
        nodes += [Node(f"s{i}", kind="source"), Node(f"m{i}"), Node(f"t{i}", kind="critical")]
        edges += [Edge(f"s{i}", f"m{i}", 0.8), Edge(f"m{i}", f"t{i}", 0.9)]
        crits.append(CriticalAsset(f"t{i}", 1.0, frozenset({f"d{i}"})))
    graph = AttackGraph(nodes, edges, ["s1", "s2"], crits)
    defenders = [
        Defender(f"d{i}", frozenset({(f"s{i}", f"m{i}"), (f"m{i}", f"t{i}")}),
                 3.0, 0.7, critical=frozenset({f"t{i}"}))
        for i in (1, 2)
    ]
    return graph, defenders


def test_single_defender_equals_best_response(fast_solver):
    graph, defenders = build_fig4a(budget=5.0, alpha=0.6)
    result = best_response_dynamics(graph, defenders, GameConfig(), fast_solver)
    direct = best_response(graph, defenders, InvestmentProfile(), "d1", fast_solver)
    assert result.converged
    assert result.perceived_loss["d1"] == pytest.approx(direct.perceived_loss, abs=1e-12)


def test_decoupled_game_converges_immediately(fast_solver):
    graph, defenders = decoupled_two_defender_game()
    result = best_response_dynamics(graph, defenders, GameConfig(), fast_solver)
    assert result.converged and result.rounds <= 2
    for d in defenders:
        direct = best_response(graph, defenders, InvestmentProfile(), d.id, fast_solver)
        assert result.perceived_loss[d.id] == pytest.approx(direct.perceived_loss,
                                                            abs=1e-10)


def test_der1_symmetric_losses_equal(fast_solver):
    graph, defenders = build_der1(alpha=0.6, budget_total=10.0)
    config = GameConfig(brd_tolerance=1e-8)
    result = best_response_dynamics(graph, defenders, config, fast_solver)
    assert result.converged
    assert abs(result.true_loss["d1"] - result.true_loss["d2"]) <= 1e-6


def test_is_pne_of_converged_result(fast_solver):
    graph, defenders = build_der1(alpha=0.6, budget_total=10.0)
    result = best_response_dynamics(graph, defenders, GameConfig(), fast_solver)
    ok, improvement = is_pne(graph, defenders, result.profile, 1e-5, fast_solver)
    assert ok
    assert improvement <= 1e-5


def test_all_zero_profile_is_not_pne(fast_solver):
    graph, defenders = build_der1(alpha=0.6, budget_total=10.0)
    ok, improvement = is_pne(graph, defenders, InvestmentProfile.zeros(defenders),
                             1e-5, fast_solver)
    assert not ok
    assert improvement > 0.01


def test_moving_off_min_cut_is_not_pne(fast_solver):
    graph, defenders = build_fig4a(budget=10.0, alpha=1.0)
    d = defenders[0]
    off_cut = InvestmentProfile({(d.id, ("v1", "v2")): 10.0})
    ok, improvement = is_pne(graph, [d], off_cut, 1e-5, fast_solver)
    assert not ok
    before = perceived_total_loss(graph, [d], off_cut, d.id)
    assert improvement == pytest.approx(before - math.exp(-10.0), rel=1e-4)


def test_brd_descends_per_defender(fast_solver):
    graph, defenders = build_der1(alpha=0.6, budget_total=10.0)
    result = best_response_dynamics(graph, defenders, GameConfig(), fast_solver)
    zeros = InvestmentProfile.zeros(defenders)
    for d in defenders:
        at_zero = perceived_total_loss(graph, defenders, zeros, d.id)
        assert result.perceived_loss[d.id] <= at_zero + 1e-9


def test_order_independence_symmetric(fast_solver):
    graph, defenders = build_der1(alpha=0.6, budget_total=10.0)
    config_a = GameConfig(order=("d1", "d2"), brd_tolerance=1e-8)
    config_b = GameConfig(order=("d2", "d1"), brd_tolerance=1e-8)
    ra = best_response_dynamics(graph, defenders, config_a, fast_solver)
    rb = best_response_dynamics(graph, defenders, config_b, fast_solver)
    keys = sorted({k for (_, k) in ra.profile.entries})
    for d in defenders:
        xa = np.array([ra.profile.get(d.id, k) for k in keys])
        xb = np.array([rb.profile.get(d.id, k) for k in keys])
        assert np.max(np.abs(xa - xb)) <= 1e-4


def test_bad_order_rejected(fast_solver):
    graph, defenders = build_der1()
    from secgame.behavior import ModelError
    with pytest.raises(ModelError):
        best_response_dynamics(graph, defenders, GameConfig(order=("d1",)), fast_solver)


def test_joint_not_worse_than_individual(fast_solver):
    graph, defenders = build_scada(alpha=0.6, budget_total=20.0,
                                   budget_split=(0.3, 0.7))
    ind = best_response_dynamics(graph, defenders, GameConfig(), fast_solver)
    joint = best_response_dynamics(graph, defenders,
                                   GameConfig(defense_mode="joint"), fast_solver)
    assert joint.total_true_loss <= ind.total_true_loss + 1e-6


def test_social_optimum_single_defender(fast_solver):
    graph, defenders = build_fig4a(budget=5.0, alpha=0.6)
    profile = social_optimum(graph, defenders, None, fast_solver)
    direct = best_response(graph, defenders, InvestmentProfile(), "d1", fast_solver)
    central = evaluate_profile(graph, defenders, profile)
    assert central.total_true_loss == pytest.approx(
        evaluate_profile(graph, defenders, _as_profile(direct)).total_true_loss,
        abs=1e-9)


def _as_profile(result):
    profile = InvestmentProfile()
    for key, v in result.as_dict().items():
        profile.entries[(result.defender_id, key)] = v
    return profile


def test_central_symmetric_coincides(fast_solver):
    graph, defenders = build_scada(alpha=0.6, budget_total=10.0)
    dec = best_response_dynamics(graph, defenders, GameConfig(), fast_solver)
    profile = social_optimum(graph, defenders, None, fast_solver)
    central = evaluate_profile(graph, defenders, profile)
    assert abs(central.total_true_loss - dec.total_true_loss) <= 1e-4


def test_central_beats_asymmetric(fast_solver):
    graph, defenders = build_scada(alpha=0.6, budget_total=10.0,
                                   budget_split=(0.2, 0.8))
    ratio = central_vs_decentralized_ratio(graph, defenders, GameConfig(), fast_solver)
    assert ratio > 1.0


def test_ratio_one_when_decoupled(fast_solver):
    graph, defenders = decoupled_two_defender_game()
    ratio = central_vs_decentralized_ratio(graph, defenders, GameConfig(), fast_solver)
    assert ratio == pytest.approx(1.0, abs=1e-6)


def test_ratio_increases_with_asymmetry(fast_solver):
    ratios = []
    for frac in (0.5, 0.35, 0.2):
        graph, defenders = build_scada(alpha=0.6, budget_total=10.0,
                                       budget_split=(frac, 1 - frac))
        ratios.append(central_vs_decentralized_ratio(graph, defenders,
                                                     GameConfig(), fast_solver))
    assert ratios[0] <= ratios[1] <= ratios[2]
    assert ratios[2] > 1.0


def test_nonconvergence_reported():
    graph, defenders = build_der1(alpha=0.6, budget_total=10.0)
    config = GameConfig(brd_max_rounds=1, brd_tolerance=1e-12)
    result = best_response_dynamics(graph, defenders, config, SolverConfig(restarts=0))
    assert not result.converged
    assert result.rounds == 1


def test_planner_alpha_defaults():
    from secgame.equilibrium import planner_defender
    graph, defenders = build_der1(alpha=0.6)
    planner, targets = planner_defender(graph, defenders)
    assert planner.alpha == 0.6
    mixed = [dataclasses.replace(defenders[0], alpha=0.4), defenders[1]]
    planner, _ = planner_defender(graph, mixed)
    assert planner.alpha == 1.0
    # shared asset G counts once per owner
    weights = dict(targets)
    assert weights["G"] == pytest.approx(2.0)


def test_equilibrium_result_serializes(fast_solver):
    graph, defenders = build_fig4a(budget=2.0, alpha=0.8)
    result = best_response_dynamics(graph, defenders, GameConfig(), fast_solver)
    payload = result.to_dict()
    assert payload["converged"] is True
    assert "profile" in payload and "total_true_loss" in payload
