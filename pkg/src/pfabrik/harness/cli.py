"""Command-line entry point: ``pfabrik {efficacy,efficiency,robustness}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..model import InvalidConfigError, SolverConfig
from .config import ConfigError, load_mechanism, load_trajectory
from .experiments import (WorkspaceSamplingError, WorkspaceViolationError, run_efficacy,
                          run_efficiency, run_robustness)
from .report import write_report

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pfabrik", description="FABRIK inverse kinematics experiments for parallel mechanisms.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("efficacy", "track an in-workspace circle and verify every solution by Newton FK"),
                        ("efficiency", "time P-FABRIK against the closed-form IK on random targets"),
                        ("robustness", "track a circle that leaves the workspace")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--mechanism", required=True, help="mechanism YAML path or built-in name (five_bar, stewart, nrpm)")
        if name != "efficiency":
            s.add_argument("--trajectory", help="trajectory YAML path or built-in name (default: <kind>_" + name + ")")
        else:
            s.add_argument("--targets", type=int, default=1000, help="number of random targets (default 1000)")
            s.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
        s.add_argument("--out", help="report path; efficiency also writes <stem>.geometric<suffix>")
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        s.add_argument("--tolerance", type=float, default=SolverConfig.tolerance, help="leaf tolerance E in mm")
        s.add_argument("--max-iter", type=int, default=SolverConfig.max_iter, help="iteration budget K per round")
        s.add_argument("--max-atp-rounds", type=int, default=SolverConfig.max_atp_rounds,
                       help="target projection rounds allowed after the budget runs out")
    return p


def _summary(report) -> str:
    a = report.aggregate()
    return (f"{report.experiment} {report.mechanism} [{report.solver}] samples={a['sample_count']} "
            f"pos_rmse={a['position_rmse_mm']:.6g}mm ori_rmse={a['orientation_rmse_deg']:.6g}deg "
            f"mean_iter={a['mean_iterations']:.4g} mean_time={a['mean_time_ms']:.4g}ms "
            f"converged={a['converged_fraction']:.4g} atp={a['atp_count']}")


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "efficiency" and args.seed < 0:
            raise ValueError("--seed must be non-negative")
        config = SolverConfig(args.tolerance, args.max_iter, args.max_atp_rounds)
        mech = load_mechanism(args.mechanism)
        if args.command == "efficiency":
            reports = list(run_efficiency(mech, args.targets, args.seed, config))
        else:
            traj = load_trajectory(args.trajectory or f"{mech.kind}_{args.command}")
            run = run_efficacy if args.command == "efficacy" else run_robustness
            reports = [run(mech, traj, config)]
    except (ConfigError, InvalidConfigError, WorkspaceViolationError, WorkspaceSamplingError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO

    for r in reports:
        print(_summary(r))
    if args.out:
        out = Path(args.out)
        paths = [out] + [out.with_name(f"{out.stem}.{r.solver}{out.suffix}") for r in reports[1:]]
        try:
            for r, path in zip(reports, paths):
                write_report(r, args.format, path)
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
