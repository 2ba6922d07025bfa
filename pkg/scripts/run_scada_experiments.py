#!/usr/bin/env python3
"""Reproduce the SCADA case-study sweeps: budget levels, RTU replication,
defense mechanisms, central-vs-decentralized planning, and interdependency."""

import argparse
from pathlib import Path

from secgame.experiments import ExperimentSpec, run_experiment
from secgame.solver import SolverConfig

SOLVER = SolverConfig(restarts=0)


def sweep(outdir: Path, name: str, spec: ExperimentSpec) -> None:
    result = run_experiment(spec, SOLVER)
    path = outdir / f"{name}.csv"
    result.write_csv(path)
    print(f"{name}: {len(result.rows)} rows -> {path}")


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    for alpha in (0.4, 0.6, 1.0):
        sweep(outdir, f"scada_budget_a{alpha}", ExperimentSpec(
            scenario="scada", sweep_var="budget", sweep_values=(10.0, 20.0, 30.0),
            fixed={"alpha": alpha}, modes=("individual",)))
    sweep(outdir, "scada_rtus", ExperimentSpec(
        scenario="scada", sweep_var="n_rtus", sweep_values=(3, 6, 12, 18),
        fixed={"alpha": 0.6, "budget": 25.0}, modes=("individual",)))
    sweep(outdir, "scada_split_modes", ExperimentSpec(
        scenario="scada", sweep_var="budget_split", sweep_values=(0.2, 0.35, 0.5),
        fixed={"alpha": 0.6, "budget": 10.0},
        modes=("individual", "joint", "central")))
    sweep(outdir, "scada_links", ExperimentSpec(
        scenario="scada", sweep_var="interdependency_links",
        sweep_values=(0, 2, 4, 6, 8), fixed={"alpha": 1.0, "budget": 25.0},
        modes=("individual",)))


if __name__ == "__main__":
    main()
