import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ptisabb.inference import run_inference
from ptisabb.model import AdcopInstance, evaluate, generate_max_dcsp, generate_random_adcop
from ptisabb.pseudo_tree import build_pseudo_tree
from ptisabb.search import PtIsabbAgent, SearchError, child_upper_bound, solve_pt_isabb
from ptisabb.sim import BACKTRACK, COST, COST_REQ, CPA, TERMINATE, Message
from oracles import contexts, min_subtree_cost, naive_optimum

VARIANTS = [(k, "non_local") for k in (1, 2, 3, None)] + [(None, "local"), (None, "no_inference")]


def test_single_agent():
    inst = AdcopInstance((3,), {})
    sol = solve_pt_isabb(inst)
    assert sol.cost == 0 and sol.assignment == {0: 0}
    assert sol.metrics.msgs_total == 0


def test_four_agents_root_sends_to_only_child(four_agents):
    inst, tree = four_agents
    res = run_inference(inst, tree)
    root = PtIsabbAgent(0, inst, tree, res.child_util[0])
    out = root.start()
    assert [(m.kind, m.receiver) for m in out] == [(CPA, 1)]
    cpa, ub, _ = out[0].payload
    assert cpa == {0: 0} and ub == math.inf


def test_four_agents_optimum(four_agents):
    inst, tree = four_agents
    want = naive_optimum(inst)
    for k, variant in VARIANTS:
        sol = solve_pt_isabb(inst, tree, k=k, variant=variant)
        assert sol.cost == want
        assert evaluate(inst, sol.assignment) == want


def test_first_feasible_scan():
    inst = AdcopInstance((3, 3), {(0, 1): (np.zeros((3, 3)), np.zeros((3, 3)))})
    tree = build_pseudo_tree(inst, root=0)
    agent = PtIsabbAgent(1, inst, tree)
    agent._reset({0: 0}, 4.0, 1)
    agent.high = [5.0, 3.0, 9.0]
    assert agent.first_feasible(0) == 1
    agent.ub = math.inf
    assert agent.first_feasible(0) == 0
    agent.ub = 2.0
    assert agent.first_feasible(0) is None


def test_leaf_high_cost_from_own_side(four_agents):
    inst, tree = four_agents
    agent = PtIsabbAgent(3, inst, tree)
    out = agent.handle(Message(CPA, 1, 3, ({0: 0, 1: 2}, math.inf, 1)))
    assert agent.high == [float(x) for x in inst.table(3, 1)[:, 2]]
    assert [agent.lb(d) for d in range(3)] == agent.high
    assert [(m.kind, m.receiver) for m in out] == [(COST_REQ, 1)]


def test_zero_tables_request_first_value():
    inst = generate_max_dcsp(4, 1.0, 2, 0.0, seed=0)
    tree = build_pseudo_tree(inst)
    v = tree.order[1]
    agent = PtIsabbAgent(v, inst, tree)
    cpa = {a: 0 for a in tree.ancestors(v)}
    out = agent.handle(Message(CPA, tree.parent[v], v, (cpa, math.inf, 1)))
    assert out and all(m.kind == COST_REQ and m.payload[0] == 0 for m in out)


def test_zero_ub_backtracks_infeasible():
    inst = AdcopInstance((2, 2), {(0, 1): (np.ones((2, 2)), np.ones((2, 2)))})
    tree = build_pseudo_tree(inst, root=0)
    agent = PtIsabbAgent(1, inst, tree)
    out = agent.handle(Message(CPA, 0, 1, ({0: 0}, 0.0, 7)))
    assert len(out) == 1 and out[0].kind == BACKTRACK
    value, cost, spa, feasible, gen = out[0].payload
    assert (value, cost, spa, feasible, gen) == (0, math.inf, {}, False, 7)


def test_cost_reply_is_table_lookup():
    f01 = np.zeros((2, 2))
    f01[0, 1] = 7
    inst = AdcopInstance((2, 2), {(0, 1): (f01, np.zeros((2, 2)))})
    tree = build_pseudo_tree(inst, root=0)
    agent = PtIsabbAgent(0, inst, tree)
    before = agent.nclo
    out = agent.handle(Message(COST_REQ, 1, 0, (1, 0, 3)))
    assert out[0].kind == COST and out[0].payload == (1, 7.0, 3)
    assert agent.nclo == before + 1
    out = agent.handle(Message(COST_REQ, 1, 0, (0, 0, 3)))
    assert out[0].payload == (0, 0.0, 3)


def test_leaf_two_value_walkthrough():
    # leaf 1 under root 0 (value 0): own side [3, 6], other side [1, 0] -> lb(0)=4, lb(1)=6
    f01 = np.array([[1.0, 0.0]])
    f10 = np.array([[3.0], [6.0]])
    inst = AdcopInstance((1, 2), {(0, 1): (f01, f10)})
    tree = build_pseudo_tree(inst, root=0)
    leaf = PtIsabbAgent(1, inst, tree)
    out = leaf.handle(Message(CPA, 0, 1, ({0: 0}, math.inf, 1)))
    assert out[0].payload[0] == 0
    out = leaf.handle(Message(COST, 0, 1, (0, 1.0, leaf.gen)))
    assert leaf.ub == 4.0
    # lb(1) = 6 >= ub, so the leaf reports straight away
    assert len(out) == 1 and out[0].kind == BACKTRACK
    assert out[0].payload[:4] == (0, 4.0, {1: 0}, True)


def test_unexpected_cost_rejected():
    inst = AdcopInstance((2, 2), {(0, 1): (np.zeros((2, 2)), np.zeros((2, 2)))})
    tree = build_pseudo_tree(inst, root=0)
    agent = PtIsabbAgent(1, inst, tree)
    agent.handle(Message(CPA, 0, 1, ({0: 0}, math.inf, 1)))
    with pytest.raises(SearchError):
        agent.handle(Message(COST, 0, 1, (1, 0.0, agent.gen)))


def test_stale_cost_dropped():
    inst = AdcopInstance((2, 2), {(0, 1): (np.zeros((2, 2)), np.zeros((2, 2)))})
    tree = build_pseudo_tree(inst, root=0)
    agent = PtIsabbAgent(1, inst, tree)
    agent.handle(Message(CPA, 0, 1, ({0: 0}, math.inf, 1)))
    assert agent.handle(Message(COST, 0, 1, (0, 0.0, agent.gen - 1))) == []


def test_malformed_cpa_rejected(four_agents):
    inst, tree = four_agents
    agent = PtIsabbAgent(2, inst, tree)
    with pytest.raises(SearchError):
        agent.handle(Message(CPA, 1, 2, ({1: 0}, math.inf, 1)))


def test_backtrack_for_unexplored_value_rejected(four_agents):
    inst, tree = four_agents
    agent = PtIsabbAgent(1, inst, tree)
    agent.handle(Message(CPA, 0, 1, ({0: 0}, math.inf, 1)))
    with pytest.raises(SearchError):
        agent.handle(Message(BACKTRACK, 3, 1, (2, 1.0, {3: 0}, True, agent.gen)))


def test_child_upper_bound():
    assert child_upper_bound(10.0, 2.0, []) == 8.0
    assert child_upper_bound(10.0, 2.0, [1.0, 3.0]) == 4.0
    assert child_upper_bound(math.inf, 2.0, [1.0]) == math.inf


@given(st.floats(0, 1e6), st.floats(0, 1e3), st.lists(st.floats(0, 1e3), max_size=4))
def test_child_upper_bound_identity(ub, high, others):
    ub_c = child_upper_bound(ub, high, others)
    assert ub_c + high + sum(others) == pytest.approx(ub)


def test_two_agent_chain_terminates():
    inst = generate_random_adcop(2, 1.0, 3, seed=4)
    sol = solve_pt_isabb(inst)
    f = inst.table(0, 1) + inst.table(1, 0).T
    assert sol.cost == f.min()
    assert sol.metrics.msg_count[TERMINATE] == 1


def test_maxdcsp_zero_tightness():
    inst = generate_max_dcsp(7, 0.5, 3, 0.0, seed=1)
    for k, variant in VARIANTS:
        assert solve_pt_isabb(inst, k=k, variant=variant).cost == 0


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(50))
def test_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    d = int(rng.integers(2, 4))
    if seed % 2:
        inst = generate_random_adcop(n, 1.0 if n < 5 else 0.5, d, seed=seed)
    else:
        inst = generate_max_dcsp(n, 1.0 if n < 5 else 0.5, d, 0.5, seed=seed)
    want = naive_optimum(inst)
    for k, variant in VARIANTS:
        sol = solve_pt_isabb(inst, k=k, variant=variant)
        assert sol.cost == want == evaluate(inst, sol.assignment)


def _search_trace(inst, k=None, variant="non_local"):
    trace, agents = [], {}
    sol = solve_pt_isabb(inst, k=k, variant=variant, trace=trace, agents_out=agents)
    return sol, trace, agents


@pytest.mark.parametrize("seed", range(12))
def test_no_repeated_cpa(seed):
    inst = generate_random_adcop(7, 0.5, 3, seed=seed)
    for variant in ("non_local", "no_inference"):
        _, _, agents = _search_trace(inst, variant=variant)
        for agent in agents.values():
            seen = [tuple(sorted(c.items())) for c in agent.received_cpas]
            assert len(seen) == len(set(seen))


@pytest.mark.parametrize("seed", range(12))
def test_backtrack_reports_exact_subtree_costs(seed):
    inst = generate_random_adcop(6, 0.6, 3, seed=seed, max_cost=20)
    tree = build_pseudo_tree(inst)
    res = run_inference(inst, tree)
    _, trace, _ = _search_trace(inst)
    last_cpa = {}
    for m in trace:
        if m.kind == CPA:
            last_cpa[m.receiver] = m.payload
        elif m.kind == BACKTRACK:
            c, p = m.sender, m.receiver
            cpa, ub, _ = last_cpa[c]
            ctx = {a: cpa[a] for a in tree.sep[c]}
            true = min_subtree_cost(inst, tree, c, ctx)
            _, cost, spa, feasible, _ = m.payload
            if feasible:
                initial = float(res.child_util[p][c].entry(ctx))
                assert cost == true >= initial
                assert set(spa) == set([c] + tree.descendants(c))
            else:
                assert true >= ub


@pytest.mark.parametrize("seed", range(6))
def test_pruned_assignments_are_not_better(seed):
    inst = generate_random_adcop(6, 0.6, 2, seed=seed, max_cost=20)
    sol = solve_pt_isabb(inst)
    from ptisabb.model import iter_assignments

    assert all(evaluate(inst, a) >= sol.cost for a in iter_assignments(inst))


@pytest.mark.parametrize("seed", range(8))
def test_tie_order_does_not_change_cost(seed):
    inst = generate_random_adcop(8, 0.4, 3, seed=seed)
    a = solve_pt_isabb(inst, k=2)
    b = solve_pt_isabb(inst, k=2, reverse_ties=True)
    assert a.cost == b.cost


def test_unknown_variant():
    with pytest.raises(ValueError):
        solve_pt_isabb(generate_random_adcop(3, 1.0, 2, seed=0), variant="bogus")
