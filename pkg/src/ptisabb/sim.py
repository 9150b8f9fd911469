"""Deterministic message-passing simulator with NCLO, traffic and privacy accounting.

Messages travel over per-(sender, receiver) FIFO channels.  The scheduler always
delivers the globally oldest message, where age is the sender's NCLO stamp,
ties broken by ``(sender, receiver)`` and then by send order.  Because an
agent's NCLO never decreases, stamps on a single channel are non-decreasing,
so one global heap keyed this way preserves per-channel FIFO order.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from .model import AdcopInstance

UTIL = "UTIL"
CPA = "CPA"
COST_REQ = "COST_REQ"
COST = "COST"
BACKTRACK = "BACKTRACK"
TERMINATE = "TERMINATE"
SOLUTION = "SOLUTION"
KINDS = (UTIL, CPA, COST_REQ, COST, BACKTRACK, TERMINATE, SOLUTION)


class SimulationError(RuntimeError):
    pass


class SimulationTimeout(SimulationError):
    pass


# -- privacy events ---------------------------------------------------------

@dataclass(frozen=True)
class CostReveal:
    """``owner`` disclosed the exact entry ``f_owner,other(owner_value, other_value)``."""

    owner: int
    other: int
    owner_value: int
    other_value: int


@dataclass(frozen=True)
class TreeEdgeShipment:
    """A child shipped an un-eliminated utility to its tree parent."""

    child: int
    parent: int
    table: Any  # UtilityTable


@dataclass(frozen=True)
class IncumbentBroadcast:
    assignment: Mapping[int, int]


NONE, FEASIBILITY, EXACT = 0, 1, 2
LEVEL_WEIGHT = {NONE: 0.0, FEASIBILITY: 0.5, EXACT: 1.0}
_WEIGHTS = np.array([LEVEL_WEIGHT[NONE], LEVEL_WEIGHT[FEASIBILITY], LEVEL_WEIGHT[EXACT]])


class RevealLedger:
    """Revelation level of every entry of every directed constraint side."""

    def __init__(self, instance: AdcopInstance):
        self.levels: Dict[Tuple[int, int], np.ndarray] = {
            (i, j): np.zeros(instance.table(i, j).shape, dtype=np.int8)
            for i, j in instance.directed_sides()
        }

    def escalate(self, side: Tuple[int, int], index, level: int) -> None:
        cur = self.levels[side]
        cur[index] = np.maximum(cur[index], level)

    def side_loss(self, side: Tuple[int, int]) -> float:
        lv = self.levels[side]
        return float(_WEIGHTS[lv].mean()) if lv.size else 0.0

    def snapshot(self) -> Dict[Tuple[int, int], np.ndarray]:
        return {k: v.copy() for k, v in self.levels.items()}


def record_privacy(ledger: RevealLedger, event) -> RevealLedger:
    if isinstance(event, CostReveal):
        ledger.escalate((event.owner, event.other), (event.owner_value, event.other_value), EXACT)
    elif isinstance(event, TreeEdgeShipment):
        table = event.table
        c, p = event.child, event.parent
        if c in table.dims and p in table.dims:
            # a zero entry forces every non-negative summand, including f_cp, to zero
            rest = tuple(a for a, d in enumerate(table.dims) if d not in (c, p))
            zero = (table.values == 0).any(axis=rest) if rest else table.values == 0
            remaining = [d for d in table.dims if d in (c, p)]
            if remaining != [c, p]:
                zero = zero.T
            ledger.escalate((c, p), zero, FEASIBILITY)
    elif isinstance(event, IncumbentBroadcast) or event is None:
        pass
    else:
        raise TypeError(f"unknown privacy event {event!r}")
    return ledger


def privacy_loss(ledger: RevealLedger, instance: AdcopInstance) -> float:
    total = 0
    weighted = 0.0
    for side in instance.directed_sides():
        lv = ledger.levels[side]
        total += lv.size
        weighted += float(_WEIGHTS[lv].sum())
    return weighted / total if total else 0.0


# -- messages and metrics ---------------------------------------------------

@dataclass
class Message:
    kind: str
    sender: int
    receiver: int
    payload: Any = None
    stamp: int = 0
    size: int = 1
    reveal: Any = None


@dataclass
class Metrics:
    nclo: int = 0
    msg_count: Dict[str, int] = field(default_factory=lambda: {k: 0 for k in KINDS})
    traffic: int = 0
    privacy_loss: float = 0.0
    solution_cost: Optional[float] = None

    @property
    def msgs_total(self) -> int:
        return sum(self.msg_count.values())

    @property
    def search_msgs(self) -> int:
        return self.msgs_total - self.msg_count[UTIL]

    def as_dict(self) -> dict:
        return {
            "cost": self.solution_cost,
            "nclo": self.nclo,
            "msgs_total": self.msgs_total,
            "msgs_util": self.msg_count[UTIL],
            "msgs_cpa": self.msg_count[CPA],
            "msgs_cost": self.msg_count[COST_REQ] + self.msg_count[COST],
            "msgs_backtrack": self.msg_count[BACKTRACK],
            "traffic": self.traffic,
            "privacy_loss": self.privacy_loss,
        }


class SimAgent:
    """Base for protocol agents: an id, an NCLO clock and a send helper."""

    def __init__(self, agent_id: int):
        self.id = agent_id
        self.nclo = 0
        self.terminated = False

    def message(self, kind, to, payload=None, size=1, reveal=None) -> Message:
        return Message(kind, self.id, to, payload, self.nclo, size, reveal)

    def handle(self, msg: Message) -> List[Message]:
        raise NotImplementedError


class Simulator:
    def __init__(
        self,
        agents: Mapping[int, SimAgent],
        metrics: Optional[Metrics] = None,
        ledger: Optional[RevealLedger] = None,
        reverse_ties: bool = False,
        deadline: Optional[float] = None,
        trace: Optional[list] = None,
    ):
        self.agents = dict(agents)
        self.metrics = metrics if metrics is not None else Metrics()
        self.ledger = ledger
        self.reverse_ties = reverse_ties
        self.deadline = deadline
        self.trace = trace
        self._heap: list = []
        self._seq = itertools.count()

    def post(self, msgs: Iterable[Message]) -> None:
        for m in msgs:
            if m.receiver not in self.agents:
                raise SimulationError(f"message to unknown agent {m.receiver}: {m.kind}")
            s, r = (m.sender, m.receiver)
            tie = (-s, -r) if self.reverse_ties else (s, r)
            heapq.heappush(self._heap, (m.stamp, tie, next(self._seq), m))

    def _deliver(self, msg: Message) -> None:
        mt = self.metrics
        mt.msg_count[msg.kind] = mt.msg_count.get(msg.kind, 0) + 1
        mt.traffic += msg.size
        if self.ledger is not None and msg.reveal is not None:
            record_privacy(self.ledger, msg.reveal)
        if self.trace is not None:
            self.trace.append(msg)
        agent = self.agents[msg.receiver]
        agent.nclo = max(agent.nclo, msg.stamp)
        self.post(agent.handle(msg))

    def run(self, initial: Iterable[Message] = (), require_termination: bool = True) -> Metrics:
        self.post(initial)
        steps = 0
        while self._heap:
            _, _, _, msg = heapq.heappop(self._heap)
            self._deliver(msg)
            steps += 1
            if self.deadline is not None and steps % 256 == 0 and time.monotonic() > self.deadline:
                raise SimulationTimeout(f"deadline passed after {steps} deliveries")
        if require_termination:
            waiting = [a for a, ag in self.agents.items() if not ag.terminated]
            if waiting:
                raise SimulationError(f"deadlock: queues drained but agents {waiting} never terminated")
        self.metrics.nclo = max([self.metrics.nclo] + [ag.nclo for ag in self.agents.values()])
        return self.metrics


def run_simulation(agents: Mapping[int, SimAgent], initial_messages: Iterable[Message], **kwargs) -> Metrics:
    return Simulator(agents, **kwargs).run(initial_messages)
