"""Behavioral interdependent security games on attack graphs."""

from .behavior import (
    Defender,
    InvestmentProfile,
    ModelError,
    edge_attack_prob,
    perceived_loss_subgradient,
    perceived_total_loss,
    prelec_weight,
    true_total_loss,
)
from .equilibrium import (
    EquilibriumResult,
    GameConfig,
    best_response_dynamics,
    central_vs_decentralized_ratio,
    evaluate_profile,
    is_pne,
    social_optimum,
)
from .estimation import (
    FitResult,
    RoundRecord,
    fit_alpha_eta,
    simulate_attack_outcome,
)
from .experiments import ExperimentResult, ExperimentSpec, run_experiment
from .graph import (
    AttackGraph,
    CriticalAsset,
    Edge,
    GraphError,
    KHopSpec,
    Node,
    enumerate_paths,
    khop_transform,
    min_edge_cut,
    mirror_investments,
    most_vulnerable_path,
    validate_graph,
)
from .scenarios import (
    build_der1,
    build_fig4a,
    build_network_a,
    build_network_b,
    build_scada,
    load_scenario,
    mincut_baseline_allocation,
    perturb_baselines,
    replicate_scenario,
    resolve_scenario,
    save_scenario,
)
from .solver import (
    BestResponseResult,
    SolverConfig,
    SolverError,
    best_response,
    closed_form_two_path,
    project_feasible,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
