"""Asymmetric DCOP instances, random benchmark generators and JSON I/O.

Agents are indexed ``0..n-1`` and each controls one variable whose values are
the indices ``0..|D_i|-1``.  Every constraint between agents ``i < j`` stores
two private tables: ``fij`` (shape ``|D_i| x |D_j|``, the cost charged to
``i``) and ``fji`` (shape ``|D_j| x |D_i|``, the cost charged to ``j``).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Tuple

import numpy as np

Assignment = Dict[int, int]
Pair = Tuple[int, int]

DEFAULT_MAX_COST = 100


class InstanceError(ValueError):
    """Raised for malformed or inconsistent instances."""


@dataclass(frozen=True, eq=False)
class AdcopInstance:
    domains: Tuple[int, ...]
    # (i, j) with i < j  ->  (fij, fji)
    constraints: Mapping[Pair, Tuple[np.ndarray, np.ndarray]]
    _neighbors: Dict[int, Tuple[int, ...]] = field(init=False, repr=False)

    def __post_init__(self):
        domains = tuple(int(d) for d in self.domains)
        object.__setattr__(self, "domains", domains)
        n = len(domains)
        if n < 1:
            raise InstanceError("instance needs at least one agent")
        if any(d < 1 for d in domains):
            raise InstanceError("domain sizes must be positive")
        tables = {}
        nbrs: Dict[int, List[int]] = {i: [] for i in range(n)}
        for (i, j), (fij, fji) in self.constraints.items():
            i, j = int(i), int(j)
            if i == j:
                raise InstanceError(f"self-constraint on agent {i}")
            if i > j:
                i, j, fij, fji = j, i, fji, fij
            if (i, j) in tables:
                raise InstanceError(f"duplicate constraint {{{i}, {j}}}")
            if not (0 <= i < n and 0 <= j < n):
                raise InstanceError(f"constraint {{{i}, {j}}} references unknown agent")
            fij = np.array(fij, dtype=np.float64)
            fji = np.array(fji, dtype=np.float64)
            if fij.shape != (domains[i], domains[j]) or fji.shape != (domains[j], domains[i]):
                raise InstanceError(f"table shape mismatch on constraint {{{i}, {j}}}")
            if (fij < 0).any() or (fji < 0).any() or not (np.isfinite(fij).all() and np.isfinite(fji).all()):
                raise InstanceError(f"costs on {{{i}, {j}}} must be finite and non-negative")
            fij.setflags(write=False)
            fji.setflags(write=False)
            tables[(i, j)] = (fij, fji)
            nbrs[i].append(j)
            nbrs[j].append(i)
        object.__setattr__(self, "constraints", dict(sorted(tables.items())))
        object.__setattr__(self, "_neighbors", {i: tuple(sorted(v)) for i, v in nbrs.items()})

    @property
    def agent_count(self) -> int:
        return len(self.domains)

    @property
    def agents(self) -> range:
        return range(len(self.domains))

    def neighbors(self, i: int) -> Tuple[int, ...]:
        return self._neighbors[i]

    def degree(self, i: int) -> int:
        return len(self._neighbors[i])

    def pairs(self) -> Iterator[Pair]:
        return iter(self.constraints)

    def table(self, i: int, j: int) -> np.ndarray:
        """Private cost table of ``i`` towards ``j``, indexed ``[d_i, d_j]``."""
        if i < j:
            return self.constraints[(i, j)][0]
        return self.constraints[(j, i)][1]

    def has_constraint(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.constraints

    def directed_sides(self) -> Iterator[Pair]:
        """All ``(owner, other)`` private sides, two per constraint."""
        for i, j in self.constraints:
            yield (i, j)
            yield (j, i)

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for u in self._neighbors[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == self.agent_count

    def __eq__(self, other):
        if not isinstance(other, AdcopInstance):
            return NotImplemented
        if self.domains != other.domains or self.constraints.keys() != other.constraints.keys():
            return False
        return all(
            np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
            for a, b in zip(self.constraints.values(), other.constraints.values())
        )

    __hash__ = None


def evaluate(instance: AdcopInstance, assignment: Mapping[int, int]) -> float:
    """Total cost of a complete assignment, both private sides of every constraint."""
    for i, size in enumerate(instance.domains):
        if i not in assignment:
            raise InstanceError(f"agent {i} is unassigned")
        if not 0 <= assignment[i] < size:
            raise InstanceError(f"value {assignment[i]} out of domain for agent {i}")
    total = 0.0
    for (i, j), (fij, fji) in instance.constraints.items():
        di, dj = assignment[i], assignment[j]
        total += fij[di, dj] + fji[dj, di]
    return float(total)


# -- generators -------------------------------------------------------------

def edge_count(n: int, density: float) -> int:
    # half-up rounding; Python's round() is banker's rounding
    return int(math.floor(density * n * (n - 1) / 2 + 0.5))


def _random_graph(n: int, density: float, rng: np.random.Generator) -> List[Pair]:
    if n < 1:
        raise InstanceError("need at least one agent")
    if not 0 < density <= 1:
        raise InstanceError("density must lie in (0, 1]")
    m = edge_count(n, density)
    if n == 1:
        return []
    if m < n - 1:
        raise InstanceError(
            f"density {density} gives {m} constraints, fewer than the {n - 1} needed to connect {n} agents"
        )
    edges = set(_prufer_tree(n, rng))
    rest = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in edges]
    extra = m - len(edges)
    if extra:
        picks = rng.choice(len(rest), size=extra, replace=False)
        edges.update(rest[int(p)] for p in picks)
    return sorted(edges)


def _prufer_tree(n: int, rng: np.random.Generator) -> List[Pair]:
    """Uniform random labelled spanning tree of K_n via a Pruefer sequence."""
    if n == 2:
        return [(0, 1)]
    seq = [int(x) for x in rng.integers(0, n, size=n - 2)]
    degree = [1] * n
    for v in seq:
        degree[v] += 1
    edges = []
    for v in seq:
        leaf = min(u for u in range(n) if degree[u] == 1)
        edges.append((min(leaf, v), max(leaf, v)))
        degree[leaf] -= 1
        degree[v] -= 1
    u, w = [x for x in range(n) if degree[x] == 1]
    edges.append((u, w))
    return edges


def generate_random_adcop(
    n: int,
    density: float,
    domain_size: int,
    max_cost: int = DEFAULT_MAX_COST,
    seed: int | None = None,
) -> AdcopInstance:
    """Random ADCOP with uniform integer costs in ``[0, max_cost]`` on each side."""
    if domain_size < 1 or max_cost < 1:
        raise InstanceError("domain_size and max_cost must be positive")
    rng = np.random.default_rng(seed)
    d = domain_size
    constraints = {}
    for i, j in _random_graph(n, density, rng):
        fij = rng.integers(0, max_cost + 1, size=(d, d))
        fji = rng.integers(0, max_cost + 1, size=(d, d))
        constraints[(i, j)] = (fij, fji)
    return AdcopInstance((d,) * n, constraints)


def generate_max_dcsp(
    n: int,
    density: float,
    domain_size: int,
    tightness: float,
    seed: int | None = None,
) -> AdcopInstance:
    """Asymmetric MaxDCSP: each side independently prohibits a pair with probability ``tightness``."""
    if not 0 <= tightness <= 1:
        raise InstanceError("tightness must lie in [0, 1]")
    if domain_size < 1:
        raise InstanceError("domain_size must be positive")
    rng = np.random.default_rng(seed)
    d = domain_size
    constraints = {}
    for i, j in _random_graph(n, density, rng):
        fij = (rng.random((d, d)) < tightness).astype(np.float64)
        fji = (rng.random((d, d)) < tightness).astype(np.float64)
        constraints[(i, j)] = (fij, fji)
    return AdcopInstance((d,) * n, constraints)


# -- JSON I/O ---------------------------------------------------------------

def _plain(table: np.ndarray) -> list:
    return [[int(x) if float(x).is_integer() else float(x) for x in row] for row in table]


def instance_to_dict(instance: AdcopInstance) -> dict:
    return {
        "agents": instance.agent_count,
        "domains": list(instance.domains),
        "constraints": [
            {"i": i, "j": j, "fij": _plain(fij), "fji": _plain(fji)}
            for (i, j), (fij, fji) in instance.constraints.items()
        ],
    }


def instance_from_dict(data: dict) -> AdcopInstance:
    try:
        n = int(data["agents"])
        domains = [int(d) for d in data["domains"]]
        raw = data["constraints"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"malformed instance: {exc}") from exc
    if len(domains) != n:
        raise InstanceError(f"{n} agents but {len(domains)} domains")
    constraints = {}
    for entry in raw:
        try:
            i, j = int(entry["i"]), int(entry["j"])
            fij, fji = entry["fij"], entry["fji"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InstanceError(f"malformed constraint entry: {exc}") from exc
        key = (min(i, j), max(i, j))
        if key in constraints:
            raise InstanceError(f"duplicate constraint {{{i}, {j}}}")
        try:
            tables = (np.array(fij, dtype=np.float64), np.array(fji, dtype=np.float64))
        except ValueError as exc:
            raise InstanceError(f"ragged table on {{{i}, {j}}}") from exc
        constraints[key] = tables if i < j else tables[::-1]
    return AdcopInstance(tuple(domains), constraints)


def write_instance(instance: AdcopInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance)) + "\n")


def read_instance(path) -> AdcopInstance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(data)


def iter_assignments(instance: AdcopInstance) -> Iterable[Assignment]:
    """Every complete assignment, lexicographic in agent order."""
    for values in itertools.product(*(range(d) for d in instance.domains)):
        yield dict(enumerate(values))
