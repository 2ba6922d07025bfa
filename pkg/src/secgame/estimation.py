"""Attack-outcome simulation for allocation sessions and inverse fitting of
the behavioral level and spreading floor from observed allocations.

The fit is a grid search: for each candidate (alpha, eta) the solver's optimal
continuous allocation at the unit budget is compared to the observed discrete
allocations in mean squared distance; the best cell wins, ties resolved toward
larger alpha then smaller eta (the least-behavioral explanation)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .behavior import Defender, InvestmentProfile, ModelError, compile_graph
from .graph import AttackGraph, EdgeKey
from .solver import SolverConfig, best_response

ALPHA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 21))  # 0.05 .. 1.00
TREND_SLOPE = 0.05  # units per round; see FitResult.trend
OUTCOME_COMPROMISED = "compromised"
OUTCOME_DEFENDED = "defended"


def eta_grid(budget_units: float, n_edges: int) -> tuple[float, ...]:
    """0, 0.1, ... up to floor(budget / edge count)."""
    top = math.floor(budget_units / n_edges)
    return tuple(round(0.1 * i, 10) for i in range(int(top * 10) + 1))


@dataclass
class RoundRecord:
    index: int  # 1-based
    allocation: dict[EdgeKey, int]
    outcome: Optional[str] = None
    path: Optional[list[EdgeKey]] = None

    def validate(self, budget_units: float, edges: Iterable[EdgeKey],
                 integer_units: bool = True) -> None:
        """Sessions require whole units; the fitting machinery also accepts
        continuous allocations (noiseless solver output)."""
        keys = set(edges)
        for key, units in self.allocation.items():
            if key not in keys:
                raise ModelError(f"allocation on unknown edge {key}")
            if integer_units and (isinstance(units, bool)
                                  or not isinstance(units, (int, np.integer))):
                raise ModelError(f"fractional or non-integer units on {key}")
            if units < 0:
                raise ModelError(f"negative units on {key}")
        total = sum(self.allocation.values())
        if integer_units:
            if total != budget_units:
                raise ModelError(
                    f"allocation sums to {total}, budget is {budget_units} units")
        elif abs(total - budget_units) > 1e-6:
            raise ModelError(
                f"allocation sums to {total}, budget is {budget_units}")


@dataclass
class FitResult:
    alpha_hat: float
    eta_hat: float
    residual: float
    per_round_alpha: list[float]
    trend: str  # improving | static | worsening

    def to_dict(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "eta_hat": self.eta_hat,
            "residual": self.residual,
            "per_round_alpha": self.per_round_alpha,
            "trend": self.trend,
        }


def simulate_attack_outcome(
    graph: AttackGraph,
    profile: InvestmentProfile,
    seed,
) -> tuple[str, list[EdgeKey]]:
    """Sample the attack: the attacker takes the most vulnerable true path to
    the most exposed critical asset and succeeds with that path's probability.
    Deterministic given the seed."""
    compiled = compile_graph(graph)
    x = compiled.totals_vector(profile.edge_totals())
    y = compiled.weights(x, 1.0)
    dist = compiled.min_dist(y)
    best_node, best_d = None, np.inf
    for c in graph.critical_assets:
        d = dist[compiled.node_index[c.node]]
        if d < best_d:
            best_node, best_d = c.node, d
    if best_node is None or not np.isfinite(best_d):
        return OUTCOME_DEFENDED, []
    p_star = math.exp(-best_d)
    path_idx = compiled.argmin_path(y, best_node)
    path = [compiled.edge_keys[i] for i in path_idx]
    rng = np.random.default_rng(seed)
    outcome = OUTCOME_COMPROMISED if rng.random() < p_star else OUTCOME_DEFENDED
    return outcome, path


def most_vulnerable_probability(graph: AttackGraph, profile: InvestmentProfile) -> float:
    """True compromise probability of the most exposed critical asset."""
    compiled = compile_graph(graph)
    x = compiled.totals_vector(profile.edge_totals())
    dist = compiled.min_dist(compiled.weights(x, 1.0))
    best = np.inf
    for c in graph.critical_assets:
        best = min(best, dist[compiled.node_index[c.node]])
    return math.exp(-best) if np.isfinite(best) else 0.0


class AllocationPredictor:
    """Caches the solver's optimal continuous allocations per (alpha, eta) for
    one graph/defender, in the defender's sorted-edge order."""

    def __init__(self, graph: AttackGraph, defender: Defender,
                 budget_units: float, solver_config: Optional[SolverConfig] = None):
        self.graph = graph
        self.defender = defender
        self.budget = float(budget_units)
        self.edges = defender.sorted_edges()
        self.solver_config = solver_config or SolverConfig(restarts=1)
        self._cache: dict[tuple[float, float], np.ndarray] = {}

    def predict(self, alpha: float, eta: float) -> np.ndarray:
        key = (alpha, eta)
        if key not in self._cache:
            import dataclasses
            d = dataclasses.replace(self.defender, alpha=alpha, eta=eta,
                                    budget=self.budget)
            result = best_response(self.graph, [d], InvestmentProfile(), d.id,
                                   self.solver_config)
            self._cache[key] = result.x
        return self._cache[key]


_PREDICTORS: dict[tuple, AllocationPredictor] = {}


def allocation_predictor(graph: AttackGraph, defender: Defender,
                         budget_units: float) -> AllocationPredictor:
    key = (id(graph), defender.id, float(budget_units))
    if key not in _PREDICTORS:
        _PREDICTORS[key] = AllocationPredictor(graph, defender, budget_units)
    return _PREDICTORS[key]


def rational_concentration_edge(graph: AttackGraph, defender: Defender,
                                budget_units: float) -> EdgeKey:
    """The edge a rational defender concentrates on (argmax of the alpha=1,
    eta=0 prediction; ties to the lexicographically smallest edge)."""
    predictor = allocation_predictor(graph, defender, budget_units)
    x = predictor.predict(1.0, 0.0)
    best = max(range(len(x)), key=lambda i: (x[i], ), default=0)
    top = max(x)
    for i, key in enumerate(predictor.edges):
        if x[i] == top:
            return key
    return predictor.edges[best]


def fit_alpha_eta(
    graph: AttackGraph,
    budget_units: int,
    rounds: Sequence[RoundRecord],
    defender: Optional[Defender] = None,
) -> FitResult:
    """Grid search over (alpha, eta) minimizing the mean squared distance
    between predicted and observed allocations; exact inverse on noiseless
    solver-generated data up to identifiability of the grid cell."""
    if not rounds:
        raise ModelError("need at least one round to fit")
    if defender is None:
        from .behavior import defenders_by_id
        owners = {o for c in graph.critical_assets for o in c.owners}
        defender = Defender(sorted(owners)[0] if owners else "subject",
                           frozenset(graph.edge_map), float(budget_units),
                           critical=frozenset(c.node for c in graph.critical_assets))
    predictor = allocation_predictor(graph, defender, budget_units)
    edges = predictor.edges
    for r in rounds:
        r.validate(budget_units, graph.edge_map, integer_units=False)
    obs = np.array([[float(r.allocation.get(k, 0)) for k in edges] for r in rounds])
    etas = eta_grid(budget_units, len(edges))

    def grid_fit(observations: np.ndarray) -> tuple[float, float, float]:
        best = (1.0, 0.0, math.inf)
        for alpha in sorted(ALPHA_GRID, reverse=True):  # ties: larger alpha wins
            for eta in etas:  # then smaller eta
                pred = predictor.predict(alpha, eta)
                residual = float(np.mean(np.sum((observations - pred) ** 2, axis=1)))
                if residual < best[2]:
                    best = (alpha, eta, residual)
        return best

    alpha_hat, eta_hat, residual = grid_fit(obs)
    per_round = [grid_fit(obs[i:i + 1])[0] for i in range(len(rounds))]
    trend = classify_trend(graph, defender, budget_units, rounds)
    return FitResult(alpha_hat, eta_hat, residual, per_round, trend)


def classify_trend(graph: AttackGraph, defender: Defender, budget_units: int,
                   rounds: Sequence[RoundRecord]) -> str:
    """Least-squares slope of the per-round allocation on the rational
    concentration edge: above +0.05 units/round is improving, below -0.05
    worsening, else static."""
    crit = rational_concentration_edge(graph, defender, budget_units)
    series = np.array([float(r.allocation.get(crit, 0)) for r in rounds])
    if len(series) < 2:
        return "static"
    t = np.arange(len(series), dtype=float)
    slope = float(np.polyfit(t, series, 1)[0])
    if slope > TREND_SLOPE:
        return "improving"
    if slope < -TREND_SLOPE:
        return "worsening"
    return "static"
