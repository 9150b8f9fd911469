"""Asynchronous branch and bound over the pseudo tree, seeded with inference bounds.

Message payloads:

* ``CPA``        ``(cpa, ub, sender_generation)``
* ``COST_REQ``   ``(requester_value, responder_value, requester_generation)``
* ``COST``       ``(requester_value, cost, requester_generation)``
* ``BACKTRACK``  ``(parent_value, best_cost, spa, feasible, parent_generation)``
* ``TERMINATE``  ``None``

A generation number is bumped every time an agent accepts a new CPA; replies
tagged with an older generation are discarded.
"""

from __future__ import annotations

import math
import time
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .inference import LOCAL, NO_INFERENCE, NON_LOCAL, VARIANTS, check_k, run_inference, run_inference_local
from .model import AdcopInstance, Assignment
from .pseudo_tree import PseudoTree, build_pseudo_tree
from .sim import (
    BACKTRACK,
    COST,
    COST_REQ,
    CPA,
    TERMINATE,
    CostReveal,
    Message,
    Metrics,
    RevealLedger,
    SimAgent,
    Simulator,
    privacy_loss,
)
from .utility import OpCounter, UtilityTable, slice_table

INF = math.inf

_UNASKED, _PENDING, _KNOWN = 0, 1, 2


class SearchError(RuntimeError):
    pass


class Solution(NamedTuple):
    cost: float
    assignment: Assignment
    metrics: Metrics


def child_upper_bound(ub: float, high_cost: float, other_child_lbs: Sequence[float]) -> float:
    """Upper bound handed to a child: what is left of ``ub`` after this value's own cost and siblings' bounds."""
    if ub == INF:
        return INF
    return ub - high_cost - sum(other_child_lbs)


class PtIsabbAgent(SimAgent):
    def __init__(
        self,
        agent_id: int,
        instance: AdcopInstance,
        tree: PseudoTree,
        child_util: Optional[Mapping[int, UtilityTable]] = None,
        nclo: int = 0,
    ):
        super().__init__(agent_id)
        self.nclo = nclo
        self.n = instance.agent_count
        self.tree = tree
        self.parent = tree.parent[agent_id]
        self.parents = tree.all_parents(agent_id)
        self.children = tree.children[agent_id]
        self.leaf = not self.children
        self.dsize = instance.domains[agent_id]
        self.own = {j: instance.table(agent_id, j) for j in instance.neighbors(agent_id)}
        self.child_util = child_util
        self.gen = 0
        self.result = None
        self.received_cpas: List[Dict[int, int]] = []
        self.initial_lb: Dict[int, List[float]] = {}
        self._out: List[Message] = []

    # -- bookkeeping ---------------------------------------------------

    def _reset(self, cpa: Dict[int, int], ub: float, parent_gen: int) -> None:
        missing = [a for a in self.tree.sep[self.id] if a not in cpa]
        if missing:
            raise SearchError(f"agent {self.id}: CPA lacks separator agents {missing}")
        self.gen += 1
        self.cpa = cpa
        self.ub = ub
        self.ub_in = ub
        self.parent_gen = parent_gen
        D = self.dsize

        high = np.zeros(D)
        for j in self.parents:
            high += self.own[j][:, cpa[j]]
            self.nclo += D
        self.high = [float(x) for x in high]
        self.costs = [_KNOWN if self.parent is None else _UNASKED] * D
        self.pending = [0] * D

        self.lb_child: Dict[int, List[float]] = {}
        for c in self.children:
            if self.child_util is None:
                self.lb_child[c] = [0.0] * D
                continue
            ops = OpCounter(self.nclo)
            t = slice_table(self.child_util[c], {a: v for a, v in cpa.items() if a != self.id}, ops)
            self.nclo = ops.count
            if t.dims:
                self.lb_child[c] = [float(x) for x in t.values]
            else:
                self.lb_child[c] = [float(t.values)] * D
        self.initial_lb = {c: list(v) for c, v in self.lb_child.items()}

        self.reported = {c: [False] * D for c in self.children}
        self.cmplt = set(range(D)) if self.leaf else set()
        self.spa: List[Dict[int, int]] = [{self.id: d} for d in range(D)]
        self.srch: Dict[int, Optional[int]] = {c: None for c in self.children}
        self.active = {c: False for c in self.children}
        self.cursor: Optional[int] = None

    def lb(self, d: int) -> float:
        return self.high[d] + sum(self.lb_child[c][d] for c in self.children)

    def first_feasible(self, start: int) -> Optional[int]:
        for d in range(start, self.dsize):
            self.nclo += 1
            if self.lb(d) < self.ub:
                return d
        return None

    def _send(self, kind, to, payload, size, reveal=None):
        self._out.append(self.message(kind, to, payload, size, reveal))

    def _flush(self) -> List[Message]:
        out, self._out = self._out, []
        return out

    # -- protocol ------------------------------------------------------

    def start(self) -> List[Message]:
        """Root entry point: explore the first feasible value in every child subtree."""
        if self.parent is not None:
            raise SearchError("only the root starts the search")
        if self.dsize < 1:
            raise SearchError("empty root domain")
        self._reset({}, INF, 0)
        if self.leaf:
            self._finish()
            return self._flush()
        d = self.first_feasible(0)
        if d is None:
            raise SearchError("root has no value with a finite lower bound")
        for c in self.children:
            self.srch[c] = d
            self._send_cpa(c, d)
        return self._flush()

    def handle(self, msg: Message) -> List[Message]:
        kind = msg.kind
        if kind == CPA:
            self._on_cpa(msg)
        elif kind == COST_REQ:
            self._on_cost_req(msg)
        elif kind == COST:
            self._on_cost(msg)
        elif kind == BACKTRACK:
            self._on_backtrack(msg)
        elif kind == TERMINATE:
            self.terminated = True
            for c in self.children:
                self._send(TERMINATE, c, None, 1)
        else:
            raise SearchError(f"unexpected message kind {kind}")
        return self._flush()

    def _on_cpa(self, msg: Message) -> None:
        cpa, ub, parent_gen = msg.payload
        self.received_cpas.append(dict(cpa))
        self._reset(dict(cpa), ub, parent_gen)
        if self.leaf:
            self._leaf_advance(0)
            return
        d = self.first_feasible(0)
        if d is None:
            self._finish()
            return
        for c in self.children:
            self.srch[c] = d
        self._request(d)

    def _request(self, d: int) -> None:
        if self.costs[d] != _UNASKED:
            return
        self.costs[d] = _PENDING
        self.pending[d] = len(self.parents)
        for j in self.parents:
            self._send(COST_REQ, j, (d, self.cpa[j], self.gen), 3)

    def _on_cost_req(self, msg: Message) -> None:
        d_req, d_own, gen = msg.payload
        req = msg.sender
        if req not in self.own or not 0 <= d_own < self.dsize:
            raise SearchError(f"agent {self.id}: bad COST_REQ {msg.payload} from {req}")
        self.nclo += 1
        cost = float(self.own[req][d_own, d_req])
        self._send(COST, req, (d_req, cost, gen), 3, reveal=CostReveal(self.id, req, d_own, d_req))

    def _on_cost(self, msg: Message) -> None:
        d, cost, gen = msg.payload
        if gen != self.gen:
            return
        if self.costs[d] != _PENDING:
            raise SearchError(f"agent {self.id}: COST for value {d} that was not requested")
        self.high[d] += cost
        self.pending[d] -= 1
        if self.pending[d]:
            return
        self.costs[d] = _KNOWN
        self.nclo += 1
        feasible = self.lb(d) < self.ub
        if self.leaf:
            if feasible:
                self.ub = self.lb(d)
            self._leaf_advance(d + 1)
            return
        waiting = [c for c in self.children if self.srch[c] == d and not self.active[c]]
        if feasible:
            for c in waiting:
                self._send_cpa(c, d)
        else:
            for c in waiting:
                self._advance(c, d + 1)
            self._maybe_finish()

    def _leaf_advance(self, start: int) -> None:
        d = self.first_feasible(start)
        if d is None:
            self._finish()
        else:
            self.cursor = d
            self._request(d)

    def _advance(self, c: int, start: int) -> None:
        self.active[c] = False
        d = self.first_feasible(start)
        self.srch[c] = d
        if d is None:
            return
        if self.costs[d] == _KNOWN:
            self._send_cpa(c, d)
        else:
            self._request(d)

    def _send_cpa(self, c: int, d: int) -> None:
        others = [self.lb_child[o][d] for o in self.children if o != c]
        ub_c = child_upper_bound(self.ub, self.high[d], others)
        cpa = dict(self.cpa)
        cpa[self.id] = d
        self.active[c] = True
        self._send(CPA, c, (cpa, ub_c, self.gen), self.n + 1)

    def _on_backtrack(self, msg: Message) -> None:
        d, cost, spa, feasible, gen = msg.payload
        c = msg.sender
        if gen != self.gen:
            return
        if self.srch.get(c) != d or not self.active.get(c):
            raise SearchError(f"agent {self.id}: BACKTRACK from {c} for value {d} it was not exploring")
        self.lb_child[c][d] = cost if feasible else INF
        if feasible:
            self.spa[d].update(spa)
        self.reported[c][d] = True
        if all(self.reported[o][d] for o in self.children):
            self.cmplt.add(d)
            self.nclo += 1
            self.ub = min(self.ub, self.lb(d))
        self._advance(c, d + 1)
        self._maybe_finish()

    def _maybe_finish(self) -> None:
        if all(v is None for v in self.srch.values()):
            self._finish()

    def best(self):
        best_d, best = None, INF
        for d in sorted(self.cmplt):
            self.nclo += 1
            v = self.lb(d)
            if v < best:
                best_d, best = d, v
        return best_d, best

    def _finish(self) -> None:
        d, cost = self.best()
        if self.parent is None:
            if d is None:
                raise SearchError("search ended without a complete root value")
            self.result = (cost, dict(self.spa[d]))
            self.terminated = True
            for c in self.children:
                self._send(TERMINATE, c, None, 1)
            return
        feasible = d is not None and cost < self.ub_in
        spa = dict(self.spa[d]) if feasible else {}
        payload = (self.cpa[self.parent], cost if feasible else INF, spa, feasible, self.parent_gen)
        self._send(BACKTRACK, self.parent, payload, 3 + len(spa))


def make_agents(instance, tree, child_util=None, nclo=None) -> Dict[int, PtIsabbAgent]:
    nclo = nclo or {}
    return {
        a: PtIsabbAgent(a, instance, tree, None if child_util is None else child_util[a], nclo.get(a, 0))
        for a in instance.agents
    }


def solve_pt_isabb(
    instance: AdcopInstance,
    tree: Optional[PseudoTree] = None,
    k: Optional[int] = None,
    variant: str = NON_LOCAL,
    timeout_s: Optional[float] = None,
    reverse_ties: bool = False,
    trace: Optional[list] = None,
    agents_out: Optional[dict] = None,
) -> Solution:
    """Run inference (unless ``variant='no_inference'``) then the tree search.

    ``k=None`` is an unlimited dimension budget.  ``variant='no_inference'``
    starts every child bound at zero, which is plain branch and bound on the
    pseudo tree.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    k = check_k(k)
    tree = tree or build_pseudo_tree(instance)
    ledger = RevealLedger(instance)
    deadline = None if timeout_s is None else time.monotonic() + timeout_s
    if variant == NO_INFERENCE:
        agents = make_agents(instance, tree)
        metrics = Metrics()
    else:
        infer = run_inference_local if variant == LOCAL else run_inference
        result = infer(instance, tree, k, ledger=ledger)
        if trace is not None:
            trace.extend(result.messages)
        agents = make_agents(instance, tree, result.child_util, result.nclo)
        metrics = result.metrics
    if agents_out is not None:
        agents_out.update(agents)
    sim = Simulator(agents, metrics=metrics, ledger=ledger, reverse_ties=reverse_ties, deadline=deadline, trace=trace)
    root = agents[tree.root]
    metrics = sim.run(root.start())
    cost, assignment = root.result
    metrics.solution_cost = cost
    metrics.privacy_loss = privacy_loss(ledger, instance)
    return Solution(cost, assignment, metrics)
