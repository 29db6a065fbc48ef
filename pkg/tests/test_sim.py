import itertools
import math
from dataclasses import replace

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evacsim.config import Category, Policy, ScenarioConfig
from evacsim.cpn import CpnParams
from evacsim.goals import GoalKind, turn_angle
from evacsim.hazard import HazardParams
from evacsim.sim import EvacueeState, Simulation, apply_hazard_damage, run_trial

from conftest import make_graph

QUIET_FIRE = HazardParams(spread_rate_a_h=1e-9, growth_rate_b_h=0.0)


def scenario(graph_starts, policy=Policy.DIJKSTRA, **kw):
    kw.setdefault("hazard", QUIET_FIRE)
    kw.setdefault("ignition_time_s", 0.0)
    kw.setdefault("ignition_node", 0)
    return ScenarioConfig(evacuees=len(graph_starts), start_nodes=tuple(graph_starts), policy=policy, **kw)


def test_no_evacuees(default_graph):
    m = run_trial(ScenarioConfig(evacuees=0, policy=Policy.DIJKSTRA), 1, default_graph)
    assert m.survivor_fraction == 1.0
    assert m.congestion == 0 and m.deaths == 0


def test_start_on_exit():
    g = make_graph([(0, 1, 100)], exits={1})
    m = run_trial(scenario([1], ignition_node=0), 3, g)
    assert m.survivor_fraction == 1.0
    assert m.avg_evac_time_s == 0.0


def test_same_seed_same_row(default_graph):
    cfg = ScenarioConfig(evacuees=20, policy=Policy.CPN, ignition_node=0)
    cfg = replace(cfg, cpn=replace(cfg.cpn, sp_budget_per_node=2))
    assert run_trial(cfg, 4, default_graph).csv_row() == run_trial(cfg, 4, default_graph).csv_row()


def test_damage_examples():
    assert apply_hazard_damage(80.0, 0.0, 1.0, 5.0, Category.NORMAL) == 80.0
    assert apply_hazard_damage(10.0, 3.0, 1.0, 5.0, Category.NORMAL) == 0.0
    normal = 100 - apply_hazard_damage(100.0, 2.0, 1.0, 5.0, Category.NORMAL)
    sick = 100 - apply_hazard_damage(100.0, 2.0, 1.0, 5.0, Category.SICK)
    assert sick == pytest.approx(1.5 * normal)
    with pytest.raises(ValueError):
        apply_hazard_damage(100.0, 1.0, -1.0, 5.0, Category.NORMAL)


def _funnel(capacity):
    # three rooms one second away from a hub, the hub leads to the exit
    caps = [capacity, 1, 1, 1, 5]
    return make_graph([(0, 1, 150), (0, 2, 150), (0, 3, 150), (0, 4, 150)], exits={4}, capacity=caps)


def test_two_arrivals_fit():
    m = run_trial(scenario([1, 2], ignition_node=3), 1, _funnel(3))
    assert m.congestion == 0


def test_simultaneous_arrivals_queue_once():
    sim = Simulation(scenario([1, 2, 3], ignition_node=4), _funnel(1), 1)
    m = sim.run()
    assert m.congestion == 2
    assert sorted(e.brakes for e in sim.evacuees) == [0, 1, 1]
    assert m.survivor_fraction == 1.0


def _branch():
    # 0 -> 1 -> 3 is short, 0 -> 2 -> 3 is the detour, 4 feeds 0
    pos = [(0, 0, 0), (100, 0, 0), (0, 150, 0), (100, 150, 0), (-100, 0, 0)]
    return make_graph([(0, 1, 100), (1, 3, 100), (0, 2, 150), (2, 3, 150), (4, 0, 100)], exits={3}, positions=pos)


def _oracle_detour(g, start, burning):
    nxg = nx.Graph()
    nxg.add_weighted_edges_from((e.u, e.v, e.length) for e in g.edges if e.u not in burning and e.v not in burning)
    paths = [p for ex in g.exits for p in nx.all_simple_paths(nxg, start, ex)]
    return min(paths, key=lambda p: (sum(g.length(a, b) for a, b in zip(p, p[1:])), p))


def test_autonomous_matches_dijkstra_without_fire(default_graph):
    cfg = ScenarioConfig(evacuees=15, hazard=QUIET_FIRE, ignition_node=5)
    a = Simulation(replace(cfg, policy=Policy.AUTONOMOUS), default_graph, 2)
    d = Simulation(replace(cfg, policy=Policy.DIJKSTRA), default_graph, 2)
    a.run(), d.run()
    assert [e.trail for e in a.evacuees] == [e.trail for e in d.evacuees]


def test_autonomous_reroutes_around_fire():
    g = _branch()
    fire = HazardParams(spread_rate_a_h=1e-9, growth_rate_b_h=0.1)
    sim = Simulation(scenario([0], Policy.AUTONOMOUS, hazard=fire, ignition_node=1), g, 1)
    sim.run()
    ev = sim.evacuees[0]
    assert tuple(ev.trail) == tuple(_oracle_detour(g, 0, {1}))
    assert ev.state is EvacueeState.EVACUATED


def test_trapped_evacuee_dies():
    g = make_graph([(0, 1, 300), (1, 2, 300)], exits={2})
    fire = HazardParams(spread_rate_a_h=1e-9, growth_rate_b_h=50.0)
    m = run_trial(scenario([0], Policy.AUTONOMOUS, hazard=fire, ignition_node=1), 1, g)
    assert m.deaths == 1


def test_dijkstra_static_route():
    g = _branch()
    sim = Simulation(scenario([4], ignition_node=2), g, 1)
    sim.run()
    assert sim.evacuees[0].trail == [4, 0, 1, 3]


def test_dijkstra_reroutes_on_next_tick():
    g = _branch()
    # fire at the short corridor starts while the evacuee is still on 4 -> 0
    fire = HazardParams(spread_rate_a_h=1e-9, growth_rate_b_h=0.01)
    cfg = scenario([4, 4], hazard=fire, ignition_node=1, ignition_time_s=0.0, speeds={c: 50.0 for c in Category})
    sim = Simulation(cfg, g, 1)
    sim.run()
    assert [e.trail for e in sim.evacuees] == [[4, 0, 2, 3], [4, 0, 2, 3]]


def test_dijkstra_advice_is_centralised(default_graph):
    cfg = ScenarioConfig(evacuees=2, start_nodes=(13, 13), policy=Policy.DIJKSTRA, ignition_node=0)
    sim = Simulation(cfg, default_graph, 1)
    a, b = sim.evacuees
    assert sim.policy_dijkstra(a) == sim.policy_dijkstra(b)


def _cpn_sim(depth):
    g = make_graph([(0, 1, 100), (1, 2, 100), (2, 3, 100), (0, 4, 100), (4, 5, 100), (5, 3, 100), (1, 4, 100)], exits={3})
    cfg = scenario([0], Policy.CPN, ignition_node=0, movement_depth=depth, cpn=CpnParams(sp_budget_per_node=0))
    cfg = cfg.with_goal(GoalKind.DISTANCE)
    return Simulation(cfg, g, 1)


def _offer(sim, node, route, G, now=0.0):
    sim.network.table(node, GoalKind.DISTANCE).insert(route, G, now)


def _walk(sim, ev, v):
    ev.node = v
    ev.route_pos += 1
    ev.hops_since_switch += 1


def test_depth_one_adopts_every_hop():
    sim = _cpn_sim(1)
    ev = sim.evacuees[0]
    _offer(sim, 0, (0, 1, 2, 3), 3.0)
    assert sim.policy_cpn(ev) == 1
    _walk(sim, ev, 1)
    _offer(sim, 1, (1, 4, 5, 3), 1.0)
    assert sim.policy_cpn(ev) == 4
    assert ev.assigned_route == (1, 4, 5, 3)


def test_depth_three_keeps_route():
    sim = _cpn_sim(3)
    ev = sim.evacuees[0]
    _offer(sim, 0, (0, 1, 2, 3), 3.0)
    assert sim.policy_cpn(ev) == 1
    _walk(sim, ev, 1)
    _offer(sim, 1, (1, 4, 5, 3), 1.0)
    assert sim.policy_cpn(ev) == 2
    assert ev.assigned_route == (0, 1, 2, 3)


def test_empty_table_falls_back_to_autonomous():
    sim = _cpn_sim(3)
    ev = sim.evacuees[0]
    assert sim.policy_cpn(ev) == sim.policy_autonomous(ev)
    assert ev.assigned_route is None


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.sampled_from([Policy.AUTONOMOUS, Policy.DIJKSTRA]), st.integers(1, 80))
def test_trial_invariants(default_graph, seed, policy, n):
    mix = {Category.NORMAL: 1, Category.WHEELCHAIR: 1, Category.SICK: 1, Category.CHILD: 1}
    cfg = ScenarioConfig(evacuees=n, policy=policy, ignition_node=seed % 100, mix=mix)
    sim = Simulation(cfg, default_graph, seed)
    while sim.step():
        states = [e.state for e in sim.evacuees]
        assert sum(s is EvacueeState.EVACUATED for s in states) + sum(
            s is EvacueeState.DEAD for s in states
        ) + sum(e.active for e in sim.evacuees) == n
        assert all(0 <= o <= default_graph.nodes[i].capacity for i, o in enumerate(sim.occupancy))
    m = sim.metrics(sim.truncated)
    g = default_graph
    e_params = cfg.energy
    for e in sim.evacuees:
        assert 0 <= e.health <= 100
        assert (e.state is EvacueeState.DEAD) == (e.health == 0)
        assert all(g.has_edge(a, b) for a, b in zip(e.trail, e.trail[1:]))
        if e.state is EvacueeState.EVACUATED:
            assert g.nodes[e.trail[-1]].is_exit
        dist = sum(g.length(a, b) for a, b in zip(e.trail, e.trail[1:]))
        turns = sum(turn_angle(g, a, b, c) for a, b, c in zip(e.trail, e.trail[1:], e.trail[2:]))
        assert e.distance == pytest.approx(dist)
        assert e.turns == pytest.approx(turns)
    assert sum(e.brakes for e in sim.evacuees) == m.congestion
    expected = sum(e_params.c1 * e.brakes + e_params.c2 * e.distance + e_params.c3 * e.turns for e in sim.evacuees)
    assert m.total_energy == pytest.approx(expected)
    assert m.survivor_fraction == pytest.approx(sum(e.state is EvacueeState.EVACUATED for e in sim.evacuees) / n)


def test_fire_alarm_switches_drift(default_graph):
    cfg = ScenarioConfig(evacuees=1, policy=Policy.CPN, ignition_time_s=5.0, cpn=CpnParams(sp_budget_per_node=1))
    sim = Simulation(cfg, default_graph, 1)
    assert sim.network.drift == 0.8
    while sim.now < 5.0 and sim.step():
        pass
    assert sim.alarm and sim.network.drift == 0.55
    assert all(e.state is not EvacueeState.WAITING for e in sim.evacuees)


def test_time_cap_truncates(default_graph):
    cfg = ScenarioConfig(evacuees=10, policy=Policy.DIJKSTRA, time_cap_s=12.0)
    m = run_trial(cfg, 1, default_graph)
    assert m.truncated
