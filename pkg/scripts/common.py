"""Shared driver for the benchmark scripts."""

import argparse
import json
import time
from pathlib import Path

from ptisabb.experiment import ExperimentSpec, run_experiment, write_results

ALGORITHMS = [
    {"algo": "pt-isabb", "k": 1},
    {"algo": "pt-isabb", "k": 2},
    {"algo": "pt-isabb", "k": 3},
    {"algo": "pt-isabb", "k": "inf"},
    {"algo": "pt-isabb-local", "k": "inf"},
    {"algo": "pt-sabb"},
    {"algo": "sabb"},
]


def run(name: str, spec: dict) -> None:
    parser = argparse.ArgumentParser(description=f"benchmark sweep: {name}")
    parser.add_argument("--instances", type=int, default=spec["instances"])
    parser.add_argument("--values", type=float, nargs="+", help="override the sweep values")
    parser.add_argument("--out", default=f"results/{name}.csv")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--timeout-s", type=float, default=spec["timeout_s"])
    parser.add_argument("--dump-spec", action="store_true", help="print the spec JSON and exit")
    args = parser.parse_args()

    spec = dict(spec, instances=args.instances, output=args.out, jobs=args.jobs, timeout_s=args.timeout_s)
    if args.values:
        cast = int if spec["sweep"]["param"] in ("agents", "domain") else float
        spec["sweep"] = {**spec["sweep"], "values": [cast(v) for v in args.values]}
    if args.dump_spec:
        print(json.dumps(spec, indent=2))
        return
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    start = time.monotonic()
    rows = run_experiment(ExperimentSpec.from_dict(spec))
    out, mean = write_results(ExperimentSpec.from_dict(spec), rows)
    bad = sum(r["status"] != "ok" for r in rows)
    print(f"{name}: {len(rows)} runs, {bad} not ok, {time.monotonic() - start:.1f}s -> {out}, {mean}")
