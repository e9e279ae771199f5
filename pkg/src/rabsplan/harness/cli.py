"""Command line entry point: ``rabsplan {generate,solve,sweep,compare}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..exact import MAX_EXHAUSTIVE_EPOCHS, exact_report
from ..instance import Instance, StructuralInfeasibilityError
from ..lagrangian import SolverConfig, solve
from .config import ExperimentConfig, load_config, parse_policy
from .experiments import (
    POLICY_NOTE,
    compare,
    generate_instances,
    read_csv,
    run_sweep,
    write_compare,
    write_sweep,
)

log = logging.getLogger("rabsplan")

EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
SOLVERS = ("lagrangian", "exhaustive", "labels")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return cfg.with_overrides(seed=args.seed, policy=args.policy, out=args.out)


def cmd_generate(args) -> int:
    cfg = _config(args)
    paths = generate_instances(cfg, Path(cfg.output_dir) / "instances")
    print(f"wrote {len(paths)} instance file(s) under {Path(cfg.output_dir) / 'instances'}")
    return 0


def cmd_solve(args) -> int:
    inst = Instance.load(args.instance)
    if args.policy is not None:
        inst = inst.with_energy(inst.energy.with_policy(parse_policy(args.policy)))
    if args.solver == "exhaustive" and inst.n_epochs > MAX_EXHAUSTIVE_EPOCHS:
        print(
            f"error: exhaustive solver supports N <= {MAX_EXHAUSTIVE_EPOCHS}, instance has N = {inst.n_epochs}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    try:
        if args.solver == "lagrangian":
            solver_cfg = load_config(args.config).solver if args.config else SolverConfig()
            report = solve(inst, solver_cfg)
        else:
            report = exact_report(inst, args.solver)
    except StructuralInfeasibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    out = Path(args.out or ".")
    stem = f"{Path(args.instance).stem}.{args.solver}"
    report_path, trace_path = report.write(out, stem)
    print(POLICY_NOTE.format(policy=inst.policy.name))
    print(
        f"{args.solver}: objective {report.objective:.6g}, dual bound {report.dual_bound:.6g}, "
        f"active epochs {list(report.plan.active_epochs)}"
    )
    print(f"report: {report_path}\ntrace: {trace_path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    result = run_sweep(cfg, jobs=args.jobs)
    paths = write_sweep(result, cfg.output_dir)
    print(paths["text"].read_text(), end="")
    for name, path in paths.items():
        log.info("%s -> %s", name, path)
    return 0


def cmd_compare(args) -> int:
    src = Path(args.sweep)
    summary_path = src / "summary.csv" if src.is_dir() else src
    if not summary_path.exists():
        print(f"error: no sweep summary at {summary_path}", file=sys.stderr)
        return EXIT_USAGE
    per_seed_path = summary_path.with_name("per_seed.csv")
    per_seed = read_csv(per_seed_path) if per_seed_path.exists() else None
    result = compare(read_csv(summary_path), per_seed)
    policy = args.policy or _sweep_policy(summary_path.with_name("summary.txt"))
    paths = write_compare(result, args.out or summary_path.parent, policy=policy)
    print(paths["text"].read_text(), end="")
    return 0


def _sweep_policy(text_path: Path) -> str:
    marker = "Policy in effect: "
    if text_path.exists():
        text = text_path.read_text()
        if marker in text:
            return text.split(marker, 1)[1].split(".", 1)[0]
    return "unknown"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rabsplan", description="Plan active/sleep epochs and perching locations for a battery-limited aerial small cell."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_config=True):
        if with_config:
            p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--seed", type=int, help="override the base seed")
        p.add_argument("--policy", choices=("paper_literal", "calibrated"), help="energy accounting preset")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("generate", help="write serialized instances for every (sigma, N, seed)")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("instance", help="instance JSON file")
    p.add_argument("--solver", choices=SOLVERS, default="lagrangian")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="multi-seed sweep over sigma and N")
    common(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="crossover intervals and gain ratios from a sweep")
    p.add_argument("sweep", help="sweep output directory or summary.csv")
    common(p, with_config=False)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
