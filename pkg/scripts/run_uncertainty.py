#!/usr/bin/env python3
"""Baseline-probability uncertainty sweep: perturb every edge's p0 with
N(p0, sigma) draws restricted to (0,1], re-solve the equilibrium, and report
the mean relative total-loss difference per behavioral level."""

import argparse
import json
from pathlib import Path

import numpy as np

from secgame.experiments import ExperimentSpec, run_experiment
from secgame.solver import SolverConfig


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="results")
    parser.add_argument("--replications", type=int, default=50)
    parser.add_argument("--sigmas", default="0.1,0.2,0.3")
    args = parser.parse_args()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    sigmas = tuple(float(s) for s in args.sigmas.split(","))

    summary = {}
    for alpha in (0.4, 0.5, 0.6, 1.0):
        spec = ExperimentSpec(
            scenario="der1", sweep_var="sigma", sweep_values=sigmas,
            fixed={"alpha": alpha, "budget": 10.0}, modes=("individual",),
            replications=args.replications)
        result = run_experiment(spec, SolverConfig(restarts=0))
        result.write_csv(outdir / f"der_sigma_a{alpha}.csv")
        per_sigma = {}
        for sigma in sigmas:
            diffs = [r.extra["relative_diff"] for r in result.rows
                     if r.defender_id == "TOTAL" and r.sweep_value == sigma
                     and "relative_diff" in r.extra]
            per_sigma[sigma] = float(np.mean(diffs))
        summary[alpha] = per_sigma
        print(f"alpha={alpha}: mean relative loss difference {per_sigma}")
    (outdir / "der_sigma_summary.json").write_text(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
