"""Reference solvers: exhaustive enumeration and synchronous branch and bound on a chain."""

from __future__ import annotations

import math
import time
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .model import AdcopInstance, Assignment
from .pseudo_tree import build_pseudo_tree
from .search import Solution
from .sim import (
    BACKTRACK,
    COST,
    COST_REQ,
    CPA,
    SOLUTION,
    TERMINATE,
    CostReveal,
    IncumbentBroadcast,
    Message,
    Metrics,
    RevealLedger,
    SimAgent,
    Simulator,
    privacy_loss,
)

INF = math.inf
BRUTE_FORCE_CAP = 10**7


class OracleCapExceeded(ValueError):
    pass


def brute_force_solve(instance: AdcopInstance, cap: int = BRUTE_FORCE_CAP) -> Tuple[float, Assignment]:
    """Exact optimum by materialising the full joint cost array."""
    space = math.prod(instance.domains)
    if space > cap:
        raise OracleCapExceeded(f"search space {space} exceeds cap {cap}")
    n = instance.agent_count
    total = np.zeros(instance.domains)
    for (i, j), (fij, fji) in instance.constraints.items():
        shape = [1] * n
        shape[i], shape[j] = instance.domains[i], instance.domains[j]
        total += (fij + fji.T).reshape(shape)
    flat = int(np.argmin(total))
    values = np.unravel_index(flat, total.shape)
    return float(total.flat[flat]), {a: int(v) for a, v in enumerate(values)}


def chain_order(instance: AdcopInstance) -> List[int]:
    """Pseudo-tree DFS visit order, so chain and tree solvers see the same ordering."""
    return list(build_pseudo_tree(instance).order)


class SabbAgent(SimAgent):
    """One position of the chain.

    CPA payload is ``(cpa, accumulated_cost, ub, best)``; BACKTRACK carries
    ``(ub, best)``.  The last agent broadcasts each new incumbent to everyone.
    """

    def __init__(self, agent_id: int, instance: AdcopInstance, order: Sequence[int]):
        super().__init__(agent_id)
        self.n = instance.agent_count
        self.order = list(order)
        self.pos = self.order.index(agent_id)
        self.prev = self.order[self.pos - 1] if self.pos > 0 else None
        self.next = self.order[self.pos + 1] if self.pos + 1 < self.n else None
        earlier = set(self.order[: self.pos])
        self.earlier = [j for j in instance.neighbors(agent_id) if j in earlier]
        self.dsize = instance.domains[agent_id]
        self.own = {j: instance.table(agent_id, j) for j in instance.neighbors(agent_id)}
        self.result = None
        self.incumbent: Optional[Dict[int, int]] = None
        self._out: List[Message] = []

    def _send(self, kind, to, payload, size, reveal=None):
        self._out.append(self.message(kind, to, payload, size, reveal))

    def _flush(self):
        out, self._out = self._out, []
        return out

    def start(self) -> List[Message]:
        self._begin({}, 0.0, INF, None)
        return self._flush()

    def handle(self, msg: Message) -> List[Message]:
        if msg.kind == CPA:
            self._begin(*msg.payload)
        elif msg.kind == COST_REQ:
            d_req, d_own = msg.payload
            self.nclo += 1
            cost = float(self.own[msg.sender][d_own, d_req])
            self._send(COST, msg.sender, (d_req, cost), 2, reveal=CostReveal(self.id, msg.sender, d_own, d_req))
        elif msg.kind == COST:
            d, cost = msg.payload
            if d != self.value:
                raise RuntimeError(f"agent {self.id}: COST for {d} while trying {self.value}")
            self.other += cost
            self.waiting -= 1
            if not self.waiting:
                self._checked()
        elif msg.kind == BACKTRACK:
            self.ub, self.best = msg.payload
            self._try(self.value + 1)
        elif msg.kind == SOLUTION:
            self.incumbent = dict(msg.payload[0])
        elif msg.kind == TERMINATE:
            self.terminated = True
        else:
            raise RuntimeError(f"unexpected message kind {msg.kind}")
        return self._flush()

    def _begin(self, cpa, acc, ub, best):
        self.cpa, self.acc, self.ub, self.best = dict(cpa), acc, ub, best
        self._try(0)

    def _try(self, d: int) -> None:
        while d < self.dsize:
            own = 0.0
            for j in self.earlier:
                own += self.own[j][d, self.cpa[j]]
            self.nclo += len(self.earlier) + 1
            if self.acc + own < self.ub:
                self.value, self.own_cost, self.other = d, own, 0.0
                if not self.earlier:
                    self._checked()
                    return
                self.waiting = len(self.earlier)
                for j in self.earlier:
                    self._send(COST_REQ, j, (d, self.cpa[j]), 2)
                return
            d += 1
        self._exhausted()

    def _checked(self) -> None:
        d = self.value
        total = self.acc + self.own_cost + self.other
        self.nclo += 1
        if total >= self.ub:
            self._try(d + 1)
            return
        cpa = dict(self.cpa)
        cpa[self.id] = d
        if self.next is None:
            self.ub, self.best = total, cpa
            for a in self.order:
                if a != self.id:
                    self._send(SOLUTION, a, (cpa, total), self.n + 1, reveal=IncumbentBroadcast(cpa))
            self._try(d + 1)
        else:
            self._send(CPA, self.next, (cpa, total, self.ub, self.best), self.n + 2)

    def _exhausted(self) -> None:
        if self.prev is None:
            self.result = (self.ub, self.best)
            self.terminated = True
            for a in self.order[1:]:
                self._send(TERMINATE, a, None, 1)
        else:
            size = 1 + (len(self.best) if self.best else 0)
            self._send(BACKTRACK, self.prev, (self.ub, self.best), size)


def solve_sabb(
    instance: AdcopInstance,
    order: Optional[Sequence[int]] = None,
    timeout_s: Optional[float] = None,
    reverse_ties: bool = False,
) -> Solution:
    order = list(order) if order is not None else chain_order(instance)
    if sorted(order) != list(instance.agents):
        raise ValueError("order must be a permutation of the agents")
    agents = {a: SabbAgent(a, instance, order) for a in instance.agents}
    ledger = RevealLedger(instance)
    deadline = None if timeout_s is None else time.monotonic() + timeout_s
    sim = Simulator(agents, ledger=ledger, reverse_ties=reverse_ties, deadline=deadline)
    first = agents[order[0]]
    metrics = sim.run(first.start())
    cost, best = first.result
    metrics.solution_cost = cost
    metrics.privacy_loss = privacy_loss(ledger, instance)
    return Solution(cost, best, metrics)
