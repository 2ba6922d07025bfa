"""Command-line entry point: validate scenarios, solve best responses, find
equilibria, run experiment sweeps, transform graphs, fit behavioral
parameters, serve sessions, and compare against the min-cut baseline.

Exit codes: 0 success (including flagged sweep rows), 2 usage error, 3 data
error, 4 solver non-convergence on a single-solve command."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .behavior import Defender, InvestmentProfile, ModelError
from .equilibrium import (
    GameConfig,
    best_response_dynamics,
    evaluate_profile,
    is_pne,
)
from .estimation import RoundRecord, fit_alpha_eta
from .experiments import ExperimentSpec, run_experiment
from .graph import GraphError, KHopSpec, khop_transform, validate_graph
from .scenarios import (
    BUNDLED,
    mincut_baseline_allocation,
    resolve_scenario,
    scenario_to_dict,
)
from .solver import SolverConfig, best_response

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NONCONVERGENCE = 4


class DataError(ValueError):
    pass


def _emit(payload, out: str | None) -> None:
    text = json.dumps(payload, indent=2, default=str)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _load(args) -> tuple:
    options = {}
    if args.scenario.lower() in BUNDLED:
        for name in ("alpha", "eta"):
            value = getattr(args, name, None)
            if value is not None:
                options[name] = value
        if getattr(args, "budget", None) is not None:
            if args.scenario.lower() in ("der1", "scada"):
                options["budget_total"] = args.budget
            else:
                options["budget"] = args.budget
        if getattr(args, "budget_split", None) is not None:
            options["budget_split"] = (args.budget_split, 1.0 - args.budget_split)
        if getattr(args, "links", None) is not None:
            options["interdependency_links"] = args.links
    try:
        graph, defenders = resolve_scenario(args.scenario, **options)
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from None
    if not graph.edge_map:
        raise DataError("scenario has no edges")
    if args.scenario.lower() not in BUNDLED:
        overrides = {}
        for name in ("alpha", "eta"):
            if getattr(args, name, None) is not None:
                overrides[name] = getattr(args, name)
        if overrides:
            defenders = [dataclasses.replace(d, **overrides) for d in defenders]
    return graph, defenders


def _solver_config(args) -> SolverConfig:
    return SolverConfig(seed=getattr(args, "seed", 0) or 0,
                        restarts=getattr(args, "restarts", 1))


def cmd_validate(args) -> int:
    graph, defenders = _load(args)
    violations = validate_graph(graph)
    for d in defenders:
        violations.extend(d.validate_against(graph))
    _emit({"ok": not violations, "violations": violations}, args.out)
    return EXIT_OK if not violations else EXIT_DATA


def cmd_solve(args) -> int:
    graph, defenders = _load(args)
    ids = [d.id for d in defenders]
    target = args.defender or ids[0]
    if target not in ids:
        raise DataError(f"unknown defender {target!r}; have {ids}")
    result = best_response(graph, defenders, InvestmentProfile(), target,
                           _solver_config(args))
    _emit({
        "defender": target,
        "investments": {f"{k[0]}->{k[1]}": v for k, v in result.as_dict().items()},
        "perceived_loss": result.perceived_loss,
        "converged": result.converged,
    }, args.out)
    return EXIT_OK if result.converged else EXIT_NONCONVERGENCE


def cmd_nash(args) -> int:
    graph, defenders = _load(args)
    config = GameConfig(defense_mode=args.mode)
    result = best_response_dynamics(graph, defenders, config, _solver_config(args))
    _emit(result.to_dict(), args.out)
    return EXIT_OK if result.converged else EXIT_NONCONVERGENCE


def cmd_experiment(args) -> int:
    try:
        spec = ExperimentSpec.from_file(args.spec)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise DataError(f"cannot read experiment spec: {exc}") from None
    result = run_experiment(spec, _solver_config(args))
    out = args.out or "experiment.csv"
    result.write_csv(out)
    flagged = sum(1 for r in result.rows if not r.converged)
    print(f"wrote {len(result.rows)} rows to {out} ({flagged} flagged)")
    return EXIT_OK


def cmd_transform(args) -> int:
    graph, defenders = _load(args)
    depths = {}
    for item in args.khop or []:
        node, _, depth = item.partition("=")
        if not depth:
            raise DataError(f"malformed --khop entry {item!r}; expected node=k")
        depths[node] = int(depth)
    try:
        new_graph, mirror = khop_transform(graph, KHopSpec(depths=depths))
    except GraphError as exc:
        raise DataError(str(exc)) from None
    payload = scenario_to_dict(new_graph, defenders)
    payload["mirror_map"] = {
        f"{k[0]}->{k[1]}": sorted(f"{d[0]}->{d[1]}" for d in derived)
        for k, derived in mirror.items()
    }
    _emit(payload, args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    try:
        data = json.loads(Path(args.rounds).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read rounds file: {exc}") from None
    network = data.get("network", "A")
    budget = int(data.get("unit_budget", 24))
    graph, defenders = resolve_scenario(
        {"A": "network_a", "B": "network_b"}.get(network, network))
    rounds = []
    for i, r in enumerate(data.get("rounds", []), start=1):
        alloc = {}
        for name, units in r["allocation"].items():
            src, _, dst = name.partition("->")
            alloc[(src, dst)] = int(units)
        rounds.append(RoundRecord(index=r.get("index", i), allocation=alloc))
    try:
        fit = fit_alpha_eta(graph, budget, rounds, defenders[0])
    except ModelError as exc:
        raise DataError(str(exc)) from None
    _emit(fit.to_dict(), args.out)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import SessionStore, create_app
    store = SessionStore(args.log)
    app = create_app(store, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_compare_baseline(args) -> int:
    alphas = _parse_alphas(args.alphas)
    rows = []
    solver_config = _solver_config(args)
    for alpha in alphas:
        ns = argparse.Namespace(**{**vars(args), "alpha": alpha})
        graph, defenders = _load(ns)
        eq = best_response_dynamics(graph, defenders, GameConfig(), solver_config)
        profile, flags = mincut_baseline_allocation(graph, defenders)
        base = evaluate_profile(graph, defenders, profile)
        ratio = eq.total_true_loss / max(base.total_true_loss, 1e-12)
        rows.append({
            "alpha": alpha,
            "equilibrium_loss": eq.total_true_loss,
            "baseline_loss": base.total_true_loss,
            "ratio": ratio,
            "baseline_flags": flags,
        })
    _emit({"scenario": args.scenario, "rows": rows}, args.out)
    return EXIT_OK


def _parse_alphas(text: str) -> list[float]:
    if ".." in text:
        lo, hi = text.split("..")
        lo, hi = float(lo), float(hi)
        step = 0.1
        values = []
        a = lo
        while a <= hi + 1e-9:
            values.append(round(a, 10))
            a += step
        return values
    return [float(a) for a in text.split(",") if a]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secgame",
        description="behavioral security games on attack graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", default="der1",
                           help="bundled name (der1, scada, fig4a, network_a, network_b) or scenario file path")
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--eta", type=float, default=None)
        p.add_argument("--budget", type=float, default=None)
        p.add_argument("--budget-split", dest="budget_split", type=float, default=None,
                       help="defender 1's fraction of the total budget")
        p.add_argument("--links", type=int, default=None,
                       help="interdependency link count for bundled scenarios")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--restarts", type=int, default=1)
        p.add_argument("--out", default=None, help="write JSON/CSV here instead of stdout")

    common(sub.add_parser("validate", help="report invariant violations"))
    p = sub.add_parser("solve", help="one defender's best response")
    common(p)
    p.add_argument("--defender", default=None)
    p = sub.add_parser("nash", help="best-response dynamics to an equilibrium")
    common(p)
    p.add_argument("--mode", choices=["individual", "joint", "central"],
                   default="individual")
    p = sub.add_parser("experiment", help="run a sweep from a spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--out", default=None)
    p = sub.add_parser("transform", help="k-hop dependence transform")
    common(p)
    p.add_argument("--khop", action="append", metavar="NODE=K")
    p = sub.add_parser("fit", help="fit (alpha, eta) from a rounds file")
    p.add_argument("--rounds", required=True)
    p.add_argument("--out", default=None)
    p = sub.add_parser("serve", help="run the session service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--log", default=None, help="JSONL event log path")
    p.add_argument("--static", default=None, help="serve a built UI from this directory")
    p = sub.add_parser("compare-baseline",
                       help="equilibrium-to-min-cut-baseline loss ratios across alpha")
    common(p)
    p.add_argument("--alphas", default="0.4..1.0",
                   help="comma list or lo..hi range (step 0.1)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "validate": cmd_validate,
        "solve": cmd_solve,
        "nash": cmd_nash,
        "experiment": cmd_experiment,
        "transform": cmd_transform,
        "fit": cmd_fit,
        "serve": cmd_serve,
        "compare-baseline": cmd_compare_baseline,
    }
    try:
        return handlers[args.command](args)
    except DataError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_DATA
    except (GraphError, ModelError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
