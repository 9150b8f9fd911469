"""Benchmark sweeps: generate instances, run every algorithm, emit per-run and mean CSVs."""

from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .baselines import brute_force_solve, solve_sabb
from .inference import LOCAL, NO_INFERENCE, NON_LOCAL, check_k
from .model import AdcopInstance, generate_max_dcsp, generate_random_adcop
from .search import solve_pt_isabb
from .sim import Metrics, SimulationTimeout

FAMILIES = {"random_adcop": "random_adcop", "random": "random_adcop", "max_dcsp": "max_dcsp", "maxdcsp": "max_dcsp"}

# algorithm name -> default variant
ALGORITHMS = {
    "pt-isabb": NON_LOCAL,
    "pt-isabb-local": LOCAL,
    "pt-sabb": NO_INFERENCE,
    "sabb": None,
    "brute": None,
}

CSV_FIELDS = [
    "algorithm", "variant", "k", "n", "density", "domain", "tightness", "seed",
    "cost", "nclo", "msgs_total", "msgs_util", "msgs_cpa", "msgs_cost", "msgs_backtrack",
    "traffic", "privacy_loss", "status",
]
MEAN_FIELDS = ["cost", "nclo", "msgs_total", "msgs_util", "msgs_cpa", "msgs_cost", "msgs_backtrack", "traffic", "privacy_loss"]
SWEEPABLE = ("agents", "density", "domain", "tightness", "max_cost")


def format_k(k: Optional[int]) -> str:
    return "inf" if k is None else str(k)


def parse_k(text) -> Optional[int]:
    if text is None or str(text).lower() in ("inf", "none", "infinity", "∞"):
        return None
    try:
        value = int(text)
    except ValueError:
        raise ValueError(f"k must be a positive integer or 'inf', got {text!r}") from None
    return check_k(value)


def make_instance(family: str, params: Dict, seed: int) -> AdcopInstance:
    family = FAMILIES[family]
    if family == "random_adcop":
        return generate_random_adcop(
            params["agents"], params["density"], params["domain"], params.get("max_cost", 100), seed
        )
    return generate_max_dcsp(params["agents"], params["density"], params["domain"], params["tightness"], seed)


def run_algorithm(instance: AdcopInstance, algo: str, k: Optional[int] = None, variant: Optional[str] = None,
                  timeout_s: Optional[float] = None):
    """Dispatch to a solver; returns ``(cost, assignment, metrics)``."""
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}; expected one of {sorted(ALGORITHMS)}")
    if algo == "brute":
        cost, assignment = brute_force_solve(instance)
        return cost, assignment, Metrics(solution_cost=cost)
    if algo == "sabb":
        return solve_sabb(instance, timeout_s=timeout_s)
    variant = variant or ALGORITHMS[algo]
    return solve_pt_isabb(instance, k=k, variant=variant, timeout_s=timeout_s)


@dataclass(frozen=True)
class AlgoSpec:
    algo: str
    k: Optional[int] = None
    variant: Optional[str] = None

    @property
    def resolved_variant(self) -> str:
        return self.variant or ALGORITHMS[self.algo] or ""

    @classmethod
    def from_dict(cls, d: Dict) -> "AlgoSpec":
        algo = d["algo"]
        if algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algo!r}")
        return cls(algo, parse_k(d.get("k")), d.get("variant"))


@dataclass
class ExperimentSpec:
    family: str
    params: Dict
    sweep_param: str
    sweep_values: List
    algorithms: List[AlgoSpec]
    instances: int = 50
    seed_base: int = 0
    output: str = "results.csv"
    timeout_s: float = 120.0
    jobs: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.sweep_param not in SWEEPABLE:
            raise ValueError(f"cannot sweep {self.sweep_param!r}; choose from {SWEEPABLE}")
        if not self.sweep_values:
            raise ValueError("sweep needs at least one value")
        if self.instances < 1:
            raise ValueError("instances must be >= 1")
        if not self.algorithms:
            raise ValueError("no algorithms listed")

    @classmethod
    def from_dict(cls, d: Dict) -> "ExperimentSpec":
        sweep = d["sweep"]
        return cls(
            family=d["family"],
            params=dict(d.get("params", {})),
            sweep_param=sweep["param"],
            sweep_values=list(sweep["values"]),
            algorithms=[AlgoSpec.from_dict(a) for a in d["algorithms"]],
            instances=int(d.get("instances", 50)),
            seed_base=int(d.get("seed_base", 0)),
            output=d.get("output", "results.csv"),
            timeout_s=float(d.get("timeout_s", 120.0)),
            jobs=int(d.get("jobs", 1)),
        )

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def points(self) -> List[Dict]:
        return [{**self.params, self.sweep_param: v} for v in self.sweep_values]


def _num(x):
    if x is None:
        return ""
    if isinstance(x, float) and x.is_integer():
        return int(x)
    return x


def run_one(family: str, params: Dict, seed: int, spec: AlgoSpec, timeout_s: Optional[float]) -> Dict:
    row = {
        "algorithm": spec.algo,
        "variant": spec.resolved_variant,
        "k": format_k(spec.k) if spec.algo.startswith("pt-isabb") else "",
        "n": params["agents"],
        "density": params["density"],
        "domain": params["domain"],
        "tightness": params.get("tightness", "") if FAMILIES[family] == "max_dcsp" else "",
        "seed": seed,
    }
    try:
        instance = make_instance(family, params, seed)
        _, _, metrics = run_algorithm(instance, spec.algo, spec.k, spec.variant, timeout_s)
    except SimulationTimeout:
        row.update({f: "" for f in MEAN_FIELDS}, status="timeout")
        return row
    except Exception as exc:  # recorded, sweep continues
        row.update({f: "" for f in MEAN_FIELDS}, status=f"error: {type(exc).__name__}: {exc}")
        return row
    row.update({f: _num(v) for f, v in metrics.as_dict().items()}, status="ok")
    return row


def _task(args):
    return run_one(*args)


def run_experiment(spec: ExperimentSpec) -> List[Dict]:
    tasks = [
        (spec.family, point, spec.seed_base + i, algo, spec.timeout_s)
        for point in spec.points()
        for i in range(spec.instances)
        for algo in spec.algorithms
    ]
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            return list(pool.map(_task, tasks, chunksize=4))
    return [_task(t) for t in tasks]


def aggregate(rows: Sequence[Dict]) -> List[Dict]:
    """Arithmetic means per (point, algorithm) over rows with status ``ok``."""
    keyed: Dict[tuple, List[Dict]] = {}
    for r in rows:
        key = tuple(r[f] for f in ("algorithm", "variant", "k", "n", "density", "domain", "tightness"))
        keyed.setdefault(key, []).append(r)
    out = []
    for key, group in keyed.items():
        ok = [r for r in group if r["status"] == "ok"]
        entry = dict(zip(("algorithm", "variant", "k", "n", "density", "domain", "tightness"), key))
        entry["runs"] = len(group)
        entry["solved"] = len(ok)
        for f in MEAN_FIELDS:
            entry[f"mean_{f}"] = statistics.fmean(float(r[f]) for r in ok) if ok else ""
        out.append(entry)
    return out


def rows_to_csv(rows: Sequence[Dict], fields: Optional[Sequence[str]] = None) -> str:
    buf = io.StringIO()
    fields = list(fields or (rows[0].keys() if rows else CSV_FIELDS))
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def mean_path(output) -> Path:
    p = Path(output)
    return p.with_name(p.stem + "_mean" + (p.suffix or ".csv"))


def write_results(spec: ExperimentSpec, rows: Sequence[Dict], output=None) -> tuple:
    out = Path(output or spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(rows_to_csv(rows, CSV_FIELDS))
    agg = aggregate(rows)
    mp = mean_path(out)
    mp.write_text(rows_to_csv(agg))
    return out, mp
