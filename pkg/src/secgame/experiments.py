"""Sweep harness reproducing the case-study experiments as tables: budget,
behavioral level, budget split, interdependency, replication, sensitivity
ratio, and baseline-uncertainty sweeps across defense modes."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .behavior import Defender, InvestmentProfile
from .equilibrium import (
    EquilibriumResult,
    GameConfig,
    best_response_dynamics,
    evaluate_profile,
    social_optimum,
)
from .graph import AttackGraph, GraphError
from .scenarios import (
    build_der1,
    build_scada,
    defender_cut_edges,
    mincut_baseline_allocation,
    perturb_baselines,
    resolve_scenario,
)
from .solver import SolverConfig

SWEEP_VARIABLES = (
    "budget", "alpha", "budget_split", "interdependency_links",
    "n_defenders", "n_rtus", "sensitivity_ratio", "sigma", "eta",
)
MODES = ("individual", "joint", "central", "mincut_baseline")

CSV_COLUMNS = ("sweep_var", "sweep_value", "mode", "alpha", "eta",
               "defender_id", "true_loss", "perceived_loss", "converged", "seed")


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: str = "der1"  # bundled name or scenario file path
    sweep_var: str = "budget"
    sweep_values: tuple = (1.0, 5.0, 10.0, 20.0)
    fixed: Mapping = field(default_factory=dict)  # alpha, budget, eta, links, ...
    modes: tuple = ("individual",)
    seed: int = 0
    replications: int = 1

    def __post_init__(self):
        if self.sweep_var not in SWEEP_VARIABLES:
            raise GraphError(f"unknown sweep variable {self.sweep_var!r}")
        if not self.sweep_values:
            raise GraphError("sweep values must be nonempty")
        unknown = set(self.modes) - set(MODES)
        if unknown:
            raise GraphError(f"unknown modes {sorted(unknown)}")
        if self.replications < 1:
            raise GraphError("replications must be >= 1")

    @classmethod
    def from_file(cls, path) -> "ExperimentSpec":
        data = json.loads(Path(path).read_text())
        return cls(
            scenario=data.get("scenario", "der1"),
            sweep_var=data.get("sweep_var", "budget"),
            sweep_values=tuple(data.get("sweep_values", ())),
            fixed=data.get("fixed", {}),
            modes=tuple(data.get("modes", ("individual",))),
            seed=int(data.get("seed", 0)),
            replications=int(data.get("replications", 1)),
        )


@dataclass
class ExperimentRow:
    sweep_var: str
    sweep_value: float
    mode: str
    alpha: float
    eta: float
    defender_id: str  # defender id or TOTAL
    true_loss: float
    perceived_loss: float
    converged: bool
    seed: int
    extra: dict = field(default_factory=dict)  # not serialized to CSV

    def as_csv(self) -> list:
        return [self.sweep_var, self.sweep_value, self.mode, self.alpha,
                self.eta, self.defender_id, self.true_loss,
                self.perceived_loss, self.converged, self.seed]


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list[ExperimentRow]

    def totals(self, mode: str, alpha: Optional[float] = None) -> dict[float, float]:
        out = {}
        for r in self.rows:
            if r.mode == mode and r.defender_id == "TOTAL" and \
                    (alpha is None or r.alpha == alpha):
                out[r.sweep_value] = r.true_loss
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in self.rows:
                writer.writerow(row.as_csv())

    @staticmethod
    def read_csv(path) -> list[dict]:
        with open(path, newline="") as fh:
            return list(csv.DictReader(fh))


def _build_point(spec: ExperimentSpec, value) -> tuple[AttackGraph, list[Defender], dict]:
    """Materialize the scenario at one sweep point. Returns extra info used by
    sweep-specific metrics."""
    fixed = dict(spec.fixed)
    alpha = float(fixed.get("alpha", 1.0))
    eta = float(fixed.get("eta", 0.0))
    budget = float(fixed.get("budget", 20.0))
    split_frac = fixed.get("budget_split")
    links = int(fixed.get("interdependency_links", 2))
    rtus = int(fixed.get("n_rtus", 3))
    info: dict = {}

    var = spec.sweep_var
    if var == "budget":
        budget = float(value)
    elif var == "alpha":
        alpha = float(value)
    elif var == "eta":
        eta = float(value)
    elif var == "budget_split":
        split_frac = float(value)
    elif var == "interdependency_links":
        links = int(value)
    elif var == "n_rtus":
        rtus = int(value)

    split = (split_frac, 1.0 - split_frac) if split_frac is not None else None
    name = spec.scenario.lower()
    if var == "n_defenders":
        if name != "der1":
            raise GraphError("n_defenders sweeps require the der1 scenario")
        n = int(value)
        per = float(dict(spec.fixed).get("budget_per_defender", 10.0))
        graph, defenders = build_der1(n_defenders=n, budget_total=per * n,
                                      alpha=alpha, eta=eta)
        return graph, defenders, info

    kwargs: dict = {"alpha": alpha, "eta": eta, "budget_total": budget,
                    "budget_split": split}
    if name == "der1":
        kwargs["interdependency_links"] = links
        builder = build_der1
    elif name == "scada":
        kwargs["rtus_per_control"] = rtus
        if "interdependency_links" in spec.fixed or var == "interdependency_links":
            kwargs["interdependency_links"] = links
        builder = build_scada
    else:
        graph, defenders = resolve_scenario(spec.scenario)
        defenders = [dataclasses.replace(d, alpha=alpha, eta=eta) for d in defenders]
        return graph, defenders, info

    if var == "sensitivity_ratio":
        graph, defenders = builder(**kwargs)
        overrides = _sensitivity_ratio_overrides(graph, defenders, float(value))
        kwargs["sensitivity_overrides"] = overrides
        info["critical_edges"] = {d.id: cut for d, (cut, _) in
                                  zip(defenders, [defender_cut_edges(graph, d) for d in defenders])}
    graph, defenders = builder(**kwargs)
    return graph, defenders, info


def _sensitivity_ratio_overrides(graph, defenders, ratio) -> dict:
    """Raise the sensitivity of every non-critical (off-min-cut, on-path)
    edge to `ratio`, keeping min-cut edges at 1."""
    critical: set = set()
    for d in defenders:
        cut, _ = defender_cut_edges(graph, d)
        critical.update(cut)
    overrides = {}
    for e in graph.edges:
        if e.key not in critical:
            overrides[e.key] = max(ratio, 1.0)
    return overrides


def _point_rows(spec: ExperimentSpec, value, mode: str, rep: int,
                solver_config: SolverConfig, game_config: GameConfig) -> list[ExperimentRow]:
    graph, defenders, info = _build_point(spec, value)
    seed = spec.seed + rep
    sigma = float(value) if spec.sweep_var == "sigma" else 0.0
    if sigma > 0.0:
        graph = perturb_baselines(graph, sigma, seed)
    alpha = defenders[0].alpha if defenders else 1.0
    eta = defenders[0].eta if defenders else 0.0

    if mode == "mincut_baseline":
        profile, flags = mincut_baseline_allocation(graph, defenders)
        result = evaluate_profile(graph, defenders, profile, mode)
        result.converged = all(flags.values())
    else:
        cfg = dataclasses.replace(game_config, defense_mode=mode)
        result = best_response_dynamics(graph, defenders, cfg, solver_config)

    extra = dict(info)
    if spec.sweep_var == "sensitivity_ratio":
        extra["noncritical_fraction"] = _noncritical_fraction(graph, defenders, result.profile)
    rows = []
    for d in defenders:
        rows.append(ExperimentRow(spec.sweep_var, value, mode, d.alpha, d.eta,
                                  d.id, result.true_loss[d.id],
                                  result.perceived_loss[d.id], result.converged,
                                  seed, {}))
    rows.append(ExperimentRow(spec.sweep_var, value, mode, alpha, eta, "TOTAL",
                              result.total_true_loss,
                              sum(result.perceived_loss.values()),
                              result.converged, seed, extra))
    return rows


def _noncritical_fraction(graph, defenders, profile) -> float:
    critical: set = set()
    for d in defenders:
        cut, _ = defender_cut_edges(graph, d)
        critical.update(cut)
    total = spent_nc = 0.0
    for (did, key), v in profile.entries.items():
        total += v
        if key not in critical:
            spent_nc += v
    return spent_nc / total if total > 0 else 0.0


def run_experiment(
    spec: ExperimentSpec,
    solver_config: Optional[SolverConfig] = None,
    game_config: Optional[GameConfig] = None,
) -> ExperimentResult:
    """One row block per (sweep value x mode x replication); failures flag the
    row (converged=False, NaN losses) and the sweep continues. Sigma sweeps
    additionally record each row's relative total-loss difference against the
    unperturbed equilibrium in the TOTAL row's extra dict."""
    solver_config = solver_config or SolverConfig(restarts=0)
    game_config = game_config or GameConfig()
    rows: list[ExperimentRow] = []
    unperturbed: dict[str, float] = {}
    if spec.sweep_var == "sigma":
        for mode in spec.modes:
            base_spec = dataclasses.replace(spec, sweep_values=(0.0,))
            base_rows = _point_rows(base_spec, 0.0, mode, 0, solver_config, game_config)
            unperturbed[mode] = next(r.true_loss for r in base_rows
                                     if r.defender_id == "TOTAL")
    for value in spec.sweep_values:
        for mode in spec.modes:
            reps = spec.replications if spec.sweep_var == "sigma" else 1
            for rep in range(reps):
                try:
                    block = _point_rows(spec, value, mode, rep, solver_config,
                                        game_config)
                except Exception as exc:  # flagged row, sweep continues
                    rows.append(ExperimentRow(
                        spec.sweep_var, value, mode, float("nan"), float("nan"),
                        "TOTAL", float("nan"), float("nan"), False,
                        spec.seed + rep, {"error": str(exc)}))
                    continue
                if spec.sweep_var == "sigma" and unperturbed.get(mode, 0.0) > 0:
                    base = unperturbed[mode]
                    for r in block:
                        if r.defender_id == "TOTAL":
                            r.extra["relative_diff"] = abs(r.true_loss - base) / base
                rows.extend(block)
    return ExperimentResult(spec, rows)
