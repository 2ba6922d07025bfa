"""Best-response dynamics to a pure Nash equilibrium, equilibrium
verification, and joint-defense / central-planner variants."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .behavior import (
    Defender,
    InvestmentProfile,
    ModelError,
    perceived_total_loss,
    true_total_loss,
    _targets_for,
)
from .graph import AttackGraph
from .solver import BestResponseResult, SolverConfig, best_response

LOSS_FLOOR = 1e-12  # guard for loss ratios


@dataclass(frozen=True)
class GameConfig:
    defense_mode: str = "individual"  # individual | joint | central
    planner_alpha: Optional[float] = None  # central mode; None: common alpha, else 1
    brd_tolerance: float = 1e-6  # sup-norm change over one full sweep
    brd_max_rounds: int = 500
    order: Optional[tuple[str, ...]] = None  # defaults to id-sorted

    def __post_init__(self):
        if self.defense_mode not in ("individual", "joint", "central"):
            raise ModelError(f"unknown defense mode {self.defense_mode!r}")
        if self.brd_tolerance <= 0 or self.brd_max_rounds <= 0:
            raise ModelError("brd tolerance and round cap must be positive")


@dataclass
class EquilibriumResult:
    profile: InvestmentProfile
    perceived_loss: dict[str, float]
    true_loss: dict[str, float]
    total_true_loss: float
    rounds: int
    converged: bool
    mode: str = "individual"

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "converged": self.converged,
            "rounds": self.rounds,
            "total_true_loss": self.total_true_loss,
            "true_loss": self.true_loss,
            "perceived_loss": self.perceived_loss,
            "profile": self.profile.to_dict(),
        }


def _joint_view(graph: AttackGraph, defenders: Sequence[Defender]) -> list[Defender]:
    """Joint defense opens every investable edge (the union of the defenders'
    edge sets) to every defender; edges nobody controls stay uninvestable."""
    investable: set = set()
    for d in defenders:
        investable |= d.edges
    return [dataclasses.replace(d, edges=frozenset(investable)) for d in defenders]


def evaluate_profile(graph: AttackGraph, defenders: Sequence[Defender],
                     profile: InvestmentProfile, mode: str = "individual",
                     rounds: int = 0, converged: bool = True) -> EquilibriumResult:
    """Per-defender true and perceived losses of a fixed profile."""
    true = {d.id: true_total_loss(graph, defenders, profile, d.id) for d in defenders}
    perceived = {d.id: perceived_total_loss(graph, defenders, profile, d.id) for d in defenders}
    return EquilibriumResult(profile, perceived, true, sum(true.values()),
                             rounds, converged, mode)


def best_response_dynamics(
    graph: AttackGraph,
    defenders: Sequence[Defender],
    config: Optional[GameConfig] = None,
    solver_config: Optional[SolverConfig] = None,
    initial_profile: Optional[InvestmentProfile] = None,
) -> EquilibriumResult:
    """Gauss-Seidel best-response sweeps in the configured defender order until
    no defender moves any coordinate by more than brd_tolerance (sup-norm) or
    the round cap is hit (converged=False then, best profile still returned).

    Perceived losses are reported under each defender's own alpha, true losses
    under the unweighted probabilities.

    Joint (cooperative) mode lets every defender invest on any edge and counts
    the whole system's losses in her objective, so the sweeps become block
    descent on a common convex function; they start from the individual-mode
    equilibrium, the status quo the cooperation refines."""
    config = config or GameConfig()
    solver_config = solver_config or SolverConfig()
    defenders = list(defenders)
    if config.defense_mode == "central":
        profile = social_optimum(graph, defenders, config.planner_alpha, solver_config)
        result = evaluate_profile(graph, defenders, profile, "central", 1, True)
        return result
    social_targets = None
    if config.defense_mode == "joint":
        players = _joint_view(graph, defenders)
        planner, social_targets = planner_defender(graph, defenders, config.planner_alpha)
        if initial_profile is None:
            # budgets are additive on every edge, so the pooled social optimum
            # is always realizable under the individual budget partition: seed
            # the cooperative sweeps with the central profile split
            # proportionally to budgets
            central = social_optimum(graph, defenders, config.planner_alpha,
                                     solver_config)
            total_budget = sum(d.budget for d in defenders) or 1.0
            initial_profile = InvestmentProfile()
            for (_, key), v in central.entries.items():
                for d in defenders:
                    initial_profile.entries[(d.id, key)] = v * d.budget / total_budget
    else:
        players = defenders
    by_id = {d.id: d for d in players}
    order = list(config.order) if config.order else sorted(by_id)
    if sorted(order) != sorted(by_id):
        raise ModelError("defender order must be a permutation of the defenders")
    profile = InvestmentProfile.zeros(players)
    if initial_profile is not None:
        for (did, key), v in initial_profile.entries.items():
            if did in by_id and key in by_id[did].edges:
                profile.entries[(did, key)] = v
    converged = False
    rounds = 0
    path_cache: dict = {}
    for rounds in range(1, config.brd_max_rounds + 1):
        max_change = 0.0
        for k in order:
            d = by_id[k]
            old = profile.vector(d)
            result = best_response(graph, players, profile, k, solver_config,
                                   warm_start=old, targets=social_targets,
                                   path_cache=path_cache)
            profile.set_vector(d, result.x)
            if result.x.size:
                max_change = max(max_change, float(np.max(np.abs(result.x - old))))
        if max_change <= config.brd_tolerance:
            converged = True
            break
    out = evaluate_profile(graph, players, profile, config.defense_mode,
                           rounds, converged)
    return out


def is_pne(
    graph: AttackGraph,
    defenders: Sequence[Defender],
    profile: InvestmentProfile,
    tol: float = 1e-5,
    solver_config: Optional[SolverConfig] = None,
) -> tuple[bool, float]:
    """Recompute each defender's best response holding the others fixed; the
    profile is a PNE when nobody can reduce her perceived loss by more than
    tol. Returns (is_pne, max improvement found)."""
    solver_config = solver_config or SolverConfig()
    max_improvement = 0.0
    for d in defenders:
        current = perceived_total_loss(graph, defenders, profile, d.id)
        # no warm start: measure the improvement against a fresh solve
        br = best_response(graph, defenders, profile, d.id, solver_config)
        max_improvement = max(max_improvement, current - br.perceived_loss)
    return max_improvement <= tol, max_improvement


def planner_defender(graph: AttackGraph, defenders: Sequence[Defender],
                     planner_alpha: Optional[float] = None) -> tuple[Defender, list[tuple[str, float]]]:
    """Single pseudo-defender with the pooled budget over the union of the
    defenders' investable edges, plus the aggregated loss weights (assets
    shared by several defenders count once per owner, mirroring the sum of
    per-defender losses)."""
    alphas = {d.alpha for d in defenders}
    if planner_alpha is None:
        planner_alpha = alphas.pop() if len(alphas) == 1 else 1.0
    weights: dict[str, float] = {}
    for d in defenders:
        for node, w in _targets_for(graph, d):
            weights[node] = weights.get(node, 0.0) + w
    investable: set = set()
    for d in defenders:
        investable |= d.edges
    planner = Defender(
        id="__planner__",
        edges=frozenset(investable),
        budget=sum(d.budget for d in defenders),
        alpha=planner_alpha,
        eta=0.0,
        critical=frozenset(weights),
    )
    return planner, sorted(weights.items())


def social_optimum(
    graph: AttackGraph,
    defenders: Sequence[Defender],
    planner_alpha: Optional[float] = None,
    solver_config: Optional[SolverConfig] = None,
) -> InvestmentProfile:
    """Central planner: minimize the sum of all defenders' perceived losses
    with the pooled budget over all edges; investments attributed to the
    planner."""
    solver_config = solver_config or SolverConfig()
    planner, targets = planner_defender(graph, defenders, planner_alpha)
    result = best_response(graph, [planner], InvestmentProfile(), planner.id,
                           solver_config, targets=targets)
    profile = InvestmentProfile()
    profile.set_vector(planner, result.x)
    return profile


def central_vs_decentralized_ratio(
    graph: AttackGraph,
    defenders: Sequence[Defender],
    config: Optional[GameConfig] = None,
    solver_config: Optional[SolverConfig] = None,
) -> float:
    """Decentralized BRD total true loss over the central planner's total true
    loss; 1 means central planning brings no benefit."""
    config = config or GameConfig()
    decentral = best_response_dynamics(graph, defenders, config, solver_config)
    central_profile = social_optimum(graph, defenders, config.planner_alpha, solver_config)
    central = evaluate_profile(graph, defenders, central_profile, "central")
    return decentral.total_true_loss / max(central.total_true_loss, LOSS_FLOOR)
