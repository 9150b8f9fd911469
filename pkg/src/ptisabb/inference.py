"""Bottom-up utility propagation that builds the per-child lower-bound tables.

Each non-root agent ships one UTIL message to its tree parent.  With non-local
elimination the child keeps its own dimension in the message and the parent
eliminates it after adding its private side of the tree edge; with local
elimination the child eliminates its own variable before sending.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional

from .model import AdcopInstance
from .pseudo_tree import PseudoTree
from .sim import UTIL, Message, Metrics, RevealLedger, SimAgent, Simulator, TreeEdgeShipment
from .utility import OpCounter, UtilityTable, drop_to_limit, join, min_project, slice_table

NON_LOCAL = "non_local"
LOCAL = "local"
NO_INFERENCE = "no_inference"
VARIANTS = (NON_LOCAL, LOCAL, NO_INFERENCE)


def check_k(k: Optional[int]) -> Optional[int]:
    if k is None:
        return None
    if int(k) != k or k < 1:
        raise ValueError(f"dimension limit k must be an integer >= 1 or None, got {k!r}")
    return int(k)


def private_table(instance: AdcopInstance, tree: PseudoTree, owner: int, other: int) -> UtilityTable:
    """``f_owner,other`` as a table over ``(owner, other)`` in canonical order."""
    return UtilityTable((owner, other), instance.table(owner, other)).reorder(tree.order_key)


def local_util(
    instance: AdcopInstance,
    tree: PseudoTree,
    agent: int,
    ops: Optional[OpCounter] = None,
) -> UtilityTable:
    """Join of the agent's own-side tables towards its parent and pseudo parents."""
    parents = tree.all_parents(agent)
    if not parents:
        raise ValueError(f"agent {agent} is the root and has no local utility")
    table = private_table(instance, tree, agent, parents[0])
    for j in parents[1:]:
        table = join(table, private_table(instance, tree, agent, j), tree.order_key, ops)
    return table


@dataclass
class InferenceResult:
    child_util: Dict[int, Dict[int, UtilityTable]]
    messages: List[Message]
    nclo: Dict[int, int]
    metrics: Metrics
    k: Optional[int]
    variant: str

    @property
    def util_msg_count(self) -> int:
        return len(self.messages)

    @property
    def util_msg_entries(self) -> int:
        return sum(m.size for m in self.messages)


class InferenceAgent(SimAgent):
    def __init__(self, agent_id, instance, tree, k, local):
        super().__init__(agent_id)
        self.instance = instance
        self.tree = tree
        self.k = k
        self.local = local
        self.child_util: Dict[int, UtilityTable] = {}

    def _ops(self) -> OpCounter:
        return OpCounter(self.nclo)

    def start(self) -> List[Message]:
        if self.tree.is_leaf(self.id):
            return self._finish()
        return []

    def handle(self, msg: Message) -> List[Message]:
        assert msg.kind == UTIL, msg.kind
        c = msg.sender
        ops = self._ops()
        if self.local:
            self.child_util[c] = msg.payload
        else:
            own = private_table(self.instance, self.tree, self.id, c)
            self.child_util[c] = min_project(join(own, msg.payload, self.tree.order_key, ops), c, ops)
        self.nclo = ops.count
        if len(self.child_util) == len(self.tree.children[self.id]):
            return self._finish()
        return []

    def _finish(self) -> List[Message]:
        self.terminated = True
        parent = self.tree.parent[self.id]
        if parent is None:
            return []
        ops = self._ops()
        key = self.tree.order_key
        table = local_util(self.instance, self.tree, self.id, ops)
        for c in self.tree.children[self.id]:
            table = join(table, self.child_util[c], key, ops)
        if self.local:
            table = min_project(table, self.id, ops)
            reveal = None
        table = drop_to_limit(table, self.k, key, ops)
        if not self.local:
            reveal = TreeEdgeShipment(self.id, parent, table)
        self.nclo = ops.count
        return [self.message(UTIL, parent, table, size=table.size, reveal=reveal)]


def _run(instance, tree, k, local, ledger=None) -> InferenceResult:
    k = check_k(k)
    agents = {a: InferenceAgent(a, instance, tree, k, local) for a in instance.agents}
    trace: list = []
    sim = Simulator(agents, ledger=ledger, trace=trace)
    initial = [m for a in tree.post_order() for m in agents[a].start()]
    metrics = sim.run(initial)
    return InferenceResult(
        child_util={a: dict(ag.child_util) for a, ag in agents.items()},
        messages=trace,
        nclo={a: ag.nclo for a, ag in agents.items()},
        metrics=metrics,
        k=k,
        variant=LOCAL if local else NON_LOCAL,
    )


def run_inference(
    instance: AdcopInstance,
    tree: PseudoTree,
    k: Optional[int] = None,
    ledger: Optional[RevealLedger] = None,
) -> InferenceResult:
    """Utility propagation with elimination deferred to the parent."""
    return _run(instance, tree, k, local=False, ledger=ledger)


def run_inference_local(
    instance: AdcopInstance,
    tree: PseudoTree,
    k: Optional[int] = None,
    ledger: Optional[RevealLedger] = None,
) -> InferenceResult:
    """Utility propagation where each child eliminates its own variable before sending."""
    return _run(instance, tree, k, local=True, ledger=ledger)


def child_lower_bound(table: UtilityTable, context: Mapping[int, int], ops=None) -> float:
    """Initial bound for a child: its table sliced at the context (which must cover its dims)."""
    sliced = slice_table(table, context, ops)
    if sliced.dims:
        raise ValueError(f"context leaves dims {sliced.dims} unassigned")
    return float(sliced.values)


def subtree_lb(
    instance: AdcopInstance,
    tree: PseudoTree,
    agent: int,
    child: int,
    cpa: Mapping[int, int],
    value: int,
) -> float:
    """Sum of best single-side local costs in the child's subtree under the context.

    Each descendant contributes the min over its own values of its costs towards
    pseudo parents lying in the child's separator; the child contributes the
    min of its costs towards all of its parents.  Used only as a reference bound.
    """
    if tree.parent[child] != agent:
        raise ValueError(f"{child} is not a child of {agent}")
    ctx = dict(cpa)
    ctx[agent] = value
    sep = tree.sep[child]
    missing = [v for v in sep if v not in ctx]
    if missing:
        raise ValueError(f"context misses separator agents {missing}")
    sep_set = set(sep)

    def best_single_side(j, towards):
        total = None
        for l in towards:
            col = instance.table(j, l)[:, ctx[l]]
            total = col if total is None else total + col
        return 0.0 if total is None else float(total.min())

    out = 0.0
    for j in tree.descendants(child):
        out += best_single_side(j, sorted(sep_set & tree.pseudo_parents[j]))
    out += best_single_side(child, tree.all_parents(child))
    return out
