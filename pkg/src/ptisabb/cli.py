"""Command line: ``ptisabb generate | solve | experiment``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .baselines import OracleCapExceeded
from .experiment import (
    ALGORITHMS,
    CSV_FIELDS,
    ExperimentSpec,
    format_k,
    make_instance,
    parse_k,
    rows_to_csv,
    run_algorithm,
    run_experiment,
    write_results,
)
from .inference import VARIANTS
from .model import InstanceError, read_instance, write_instance
from .sim import SimulationTimeout


def _k_arg(text):
    try:
        return parse_k(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptisabb", description="Hybrid inference + search solver for asymmetric DCOPs")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a random instance as JSON")
    gen.add_argument("--family", choices=["random", "random_adcop", "maxdcsp", "max_dcsp"], default="random")
    gen.add_argument("--agents", type=int, default=8)
    gen.add_argument("--density", type=float, default=0.25)
    gen.add_argument("--domain", type=int, default=3)
    gen.add_argument("--tightness", type=float, default=0.5)
    gen.add_argument("--max-cost", type=int, default=100)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    solve = sub.add_parser("solve", help="solve one instance file")
    solve.add_argument("instance", nargs="?")
    solve.add_argument("--instance", dest="instance_flag")
    solve.add_argument("--algo", choices=sorted(ALGORITHMS), default="pt-isabb")
    solve.add_argument("--k", type=_k_arg, default=None, help="dimension limit (integer >= 1 or 'inf')")
    solve.add_argument("--variant", choices=VARIANTS, default=None)
    solve.add_argument("--timeout-s", type=float, default=None)
    solve.add_argument("--out", help="append a CSV row here")

    exp = sub.add_parser("experiment", help="run a JSON sweep spec")
    exp.add_argument("--spec", required=True)
    exp.add_argument("--out", help="override the spec's output path")
    exp.add_argument("--jobs", type=int, default=None)
    exp.add_argument("--timeout-s", type=float, default=None)
    return parser


def cmd_generate(args) -> int:
    params = {
        "agents": args.agents,
        "density": args.density,
        "domain": args.domain,
        "tightness": args.tightness,
        "max_cost": args.max_cost,
    }
    instance = make_instance(args.family, params, args.seed)
    write_instance(instance, args.out)
    print(f"wrote {args.out}: n={instance.agent_count} constraints={len(instance.constraints)} domain={args.domain}")
    return 0


def cmd_solve(args) -> int:
    path = args.instance_flag or args.instance
    if not path:
        print("solve: an instance path is required", file=sys.stderr)
        return 2
    instance = read_instance(path)
    cost, assignment, metrics = run_algorithm(instance, args.algo, args.k, args.variant, args.timeout_s)
    m = metrics.as_dict()
    print(f"algorithm: {args.algo}")
    print(f"cost: {cost:g}")
    print("assignment: " + " ".join(f"x{a}={v}" for a, v in sorted(assignment.items())))
    for key in ("nclo", "msgs_total", "msgs_util", "msgs_cpa", "msgs_cost", "msgs_backtrack", "traffic", "privacy_loss"):
        print(f"{key}: {m[key]}")
    if args.out:
        variant = args.variant or ALGORITHMS[args.algo] or ""
        row = {
            "algorithm": args.algo,
            "variant": variant,
            "k": format_k(args.k) if args.algo.startswith("pt-isabb") else "",
            "n": instance.agent_count,
            "density": "",
            "domain": max(instance.domains),
            "tightness": "",
            "seed": "",
            **m,
            "status": "ok",
        }
        out = Path(args.out)
        text = rows_to_csv([row], CSV_FIELDS)
        if out.exists() and out.stat().st_size:
            text = text.split("\n", 1)[1]
        with out.open("a") as fh:
            fh.write(text)
    return 0


def cmd_experiment(args) -> int:
    spec = ExperimentSpec.load(args.spec)
    if args.jobs is not None:
        spec.jobs = args.jobs
    if args.timeout_s is not None:
        spec.timeout_s = args.timeout_s
    rows = run_experiment(spec)
    out, mean = write_results(spec, rows, args.out)
    bad = sum(r["status"] != "ok" for r in rows)
    print(f"{len(rows)} runs ({bad} not ok) -> {out}, means -> {mean}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"generate": cmd_generate, "solve": cmd_solve, "experiment": cmd_experiment}[args.command]
    try:
        return handler(args)
    except (InstanceError, OracleCapExceeded, ValueError, SimulationTimeout, FileNotFoundError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
