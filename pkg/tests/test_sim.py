import statistics

import numpy as np
import pytest

from ptisabb.baselines import solve_sabb
from ptisabb.inference import run_inference, run_inference_local
from ptisabb.model import AdcopInstance, generate_max_dcsp, generate_random_adcop
from ptisabb.pseudo_tree import build_pseudo_tree
from ptisabb.search import solve_pt_isabb
from ptisabb.sim import (
    COST,
    CPA,
    EXACT,
    UTIL,
    CostReveal,
    IncumbentBroadcast,
    Message,
    Metrics,
    RevealLedger,
    SimAgent,
    SimulationError,
    SimulationTimeout,
    Simulator,
    TreeEdgeShipment,
    privacy_loss,
    record_privacy,
)
from ptisabb.utility import UtilityTable


class Echo(SimAgent):
    """Bounces a counter back and forth until it reaches zero."""

    def __init__(self, agent_id, peer, work=1):
        super().__init__(agent_id)
        self.peer, self.work, self.seen = peer, work, []

    def handle(self, msg):
        self.seen.append(msg.payload)
        self.nclo += self.work
        if msg.payload <= 0:
            self.terminated = True
            return []
        return [self.message(CPA, self.peer, msg.payload - 1)]


def test_nclo_is_max_of_stamps():
    a, b = Echo(0, 1, work=3), Echo(1, 0, work=5)
    m = Simulator({0: a, 1: b}).run([Message(CPA, 0, 1, 3)], require_termination=False)
    # payloads 3, 2, 1, 0 delivered to b, a, b, a; each hop adds the receiver's work
    assert m.msg_count[CPA] == 4
    assert [b.seen, a.seen] == [[3, 1], [2, 0]]
    assert m.nclo == max(a.nclo, b.nclo) == 5 + 3 + 5 + 3


def test_fifo_per_channel():
    class Sink(SimAgent):
        def __init__(self):
            super().__init__(1)
            self.got = []

        def handle(self, msg):
            self.got.append(msg.payload)
            self.terminated = True
            return []

    sink = Sink()
    src = SimAgent(0)
    src.terminated = True
    msgs = [Message(CPA, 0, 1, i, stamp=0) for i in range(5)]
    Simulator({0: src, 1: sink}).run(msgs)
    assert sink.got == list(range(5))


def test_unknown_receiver():
    with pytest.raises(SimulationError):
        Simulator({0: SimAgent(0)}).post([Message(CPA, 0, 9)])


def test_deadlock_detected():
    class Mute(SimAgent):
        def handle(self, msg):
            return []

    with pytest.raises(SimulationError, match="deadlock"):
        Simulator({0: Mute(0), 1: Mute(1)}).run([Message(CPA, 0, 1)])


def test_deadline():
    class Ping(SimAgent):
        def handle(self, msg):
            return [self.message(CPA, 1 - self.id)]

    with pytest.raises(SimulationTimeout):
        Simulator({0: Ping(0), 1: Ping(1)}, deadline=0.0).run([Message(CPA, 0, 1)])


def test_metrics_dict_keys():
    m = Metrics()
    m.msg_count[COST] = 2
    d = m.as_dict()
    assert d["msgs_cost"] == 2 and d["msgs_total"] == 2 and m.search_msgs == 2


# -- inference message accounting -------------------------------------------

@pytest.mark.parametrize("seed", range(8))
def test_inference_ships_one_util_per_tree_edge(seed):
    inst = generate_random_adcop(9, 0.35, 3, seed=seed)
    tree = build_pseudo_tree(inst)
    for k in (1, 2, None):
        res = run_inference(inst, tree, k)
        assert res.metrics.msg_count[UTIL] == 8
        assert res.metrics.msgs_total == 8
        assert res.metrics.traffic == sum(t.size for t in (m.payload for m in res.messages))


def test_single_agent_has_no_messages():
    inst = AdcopInstance((3,), {})
    res = run_inference(inst, build_pseudo_tree(inst))
    assert res.messages == [] and res.metrics.msgs_total == 0


@pytest.mark.parametrize("seed", range(5))
def test_run_nclo_not_below_inference(seed):
    inst = generate_random_adcop(8, 0.4, 3, seed=seed)
    tree = build_pseudo_tree(inst)
    inf = run_inference(inst, tree)
    sol = solve_pt_isabb(inst, tree)
    assert sol.metrics.nclo >= inf.metrics.nclo
    assert sol.metrics.msg_count[UTIL] == 7


def test_util_traffic_bounded_by_dims():
    inst = generate_random_adcop(10, 0.5, 3, seed=1)
    tree = build_pseudo_tree(inst)
    for k in (1, 2, 3):
        res = run_inference(inst, tree, k)
        assert all(m.size <= 3**k for m in res.messages)


@pytest.mark.parametrize("seed", range(4))
def test_repeat_runs_identical(seed):
    inst = generate_max_dcsp(8, 0.4, 4, 0.4, seed=seed)
    a, b = solve_pt_isabb(inst, k=2), solve_pt_isabb(inst, k=2)
    assert a.metrics == b.metrics and a.assignment == b.assignment
    assert solve_sabb(inst).metrics == solve_sabb(inst).metrics


# -- privacy ledger -----------------------------------------------------------

def _pair():
    return AdcopInstance((2, 3), {(0, 1): (np.arange(6).reshape(2, 3), np.ones((3, 2)))})


def test_cost_reveal_marks_one_entry():
    inst = _pair()
    ledger = record_privacy(RevealLedger(inst), CostReveal(1, 0, 2, 1))
    assert ledger.levels[(1, 0)].sum() == EXACT
    assert ledger.levels[(1, 0)][2, 1] == EXACT
    assert not ledger.levels[(0, 1)].any()
    assert privacy_loss(ledger, inst) == pytest.approx(1 / 12)


def test_repeated_reveal_counts_once():
    inst = _pair()
    ledger = RevealLedger(inst)
    for _ in range(3):
        record_privacy(ledger, CostReveal(0, 1, 0, 0))
    assert privacy_loss(ledger, inst) == pytest.approx(1 / 12)


def test_empty_and_full_loss():
    inst = _pair()
    ledger = RevealLedger(inst)
    assert privacy_loss(ledger, inst) == 0.0
    for side, lv in ledger.levels.items():
        lv[...] = EXACT
    assert privacy_loss(ledger, inst) == 1.0


def test_incumbent_broadcast_is_free():
    inst = _pair()
    ledger = record_privacy(RevealLedger(inst), IncumbentBroadcast({0: 0, 1: 1}))
    assert privacy_loss(ledger, inst) == 0.0
    with pytest.raises(TypeError):
        record_privacy(ledger, "nonsense")


def test_zero_shipment_gives_half_on_child_side():
    inst = _pair()
    table = UtilityTable((0, 1), np.zeros((2, 3)))
    ledger = record_privacy(RevealLedger(inst), TreeEdgeShipment(1, 0, table))
    assert ledger.side_loss((1, 0)) == 0.5
    assert ledger.side_loss((0, 1)) == 0.0
    assert privacy_loss(ledger, inst) == pytest.approx(0.25)


def test_partial_zero_shipment_with_extra_dim():
    inst = AdcopInstance((2, 2, 2), {(0, 1): (np.ones((2, 2)), np.ones((2, 2))), (1, 2): (np.ones((2, 2)), np.ones((2, 2)))})
    # dims (x0, x1, x2): child 2 ships to parent 1; zero only at x1=0, x2=1 for some x0
    vals = np.ones((2, 2, 2))
    vals[1, 0, 1] = 0
    ledger = record_privacy(RevealLedger(inst), TreeEdgeShipment(2, 1, UtilityTable((0, 1, 2), vals)))
    lv = ledger.levels[(2, 1)]  # indexed [x2, x1]
    assert lv.tolist() == [[0, 0], [1, 0]]


def test_shipment_without_parent_dim_reveals_nothing():
    inst = _pair()
    table = UtilityTable((1,), np.zeros(3))
    ledger = record_privacy(RevealLedger(inst), TreeEdgeShipment(1, 0, table))
    assert privacy_loss(ledger, inst) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_local_inference_reveals_nothing(seed):
    inst = generate_max_dcsp(8, 0.5, 3, 0.1, seed=seed)
    tree = build_pseudo_tree(inst)
    ledger = RevealLedger(inst)
    run_inference_local(inst, tree, ledger=ledger)
    assert privacy_loss(ledger, inst) == 0.0


def _mean_loss(algo, tightness, seeds, **kw):
    out = []
    for s in seeds:
        inst = generate_max_dcsp(8, 0.4, 5, tightness, seed=s)
        sol = solve_sabb(inst) if algo == "sabb" else solve_pt_isabb(inst, **kw)
        out.append(sol.metrics.privacy_loss)
    return statistics.fmean(out)


@pytest.mark.slow
def test_non_local_leaks_more_at_low_tightness_only():
    """Zero utilities are common when tightness is low, so non-local shipments leak;
    at high tightness the better bounds prune enough COST traffic to come out ahead."""
    seeds = range(20)
    low = {
        "kinf": _mean_loss("pt", 0.1, seeds),
        "local": _mean_loss("pt", 0.1, seeds, variant="local"),
        "sabb": _mean_loss("sabb", 0.1, seeds),
    }
    assert low["kinf"] > low["local"] and low["kinf"] > low["sabb"]
    high = {
        "kinf": _mean_loss("pt", 0.7, seeds),
        "local": _mean_loss("pt", 0.7, seeds, variant="local"),
        "ptsabb": _mean_loss("pt", 0.7, seeds, variant="no_inference"),
        "sabb": _mean_loss("sabb", 0.7, seeds),
    }
    assert high["kinf"] < min(high["local"], high["ptsabb"], high["sabb"])


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="under the revealed-entry metric, loss grows with tightness "
                   "because search sends more COST replies; the decrease does not hold in absolute terms")
def test_loss_decreases_with_tightness_absolute():
    seeds = range(50)
    losses = {}
    for t in (0.1, 0.7):
        losses[t] = statistics.fmean(
            solve_pt_isabb(generate_max_dcsp(10, 0.4, 10, t, seed=s)).metrics.privacy_loss for s in seeds
        )
    assert losses[0.7] < losses[0.1]
