"""Discrete-event evacuation trials under the autonomous, Dijkstra and CPN policies.

Evacuees idle until the fire alarm, then walk node to node. Entering a node
costs one service interval; a full node makes arrivals queue outside it in
FIFO order. Fire damage is charged on every hazard tick.
"""

from __future__ import annotations

import enum
import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .building import BuildingGraph, ExitTree, Path, exit_tree
from .config import DAMAGE_MULTIPLIER, Category, Policy, ScenarioConfig
from .cpn import CpnNetwork, NodeMeasurement
from .goals import GoalKind, GoalSuite, turn_angle
from .hazard import HazardState, ignite
from .queueing import NodeQueueStats, record_arrival, utilization

MAX_HEALTH = 100.0


class EvacueeState(str, enum.Enum):
    WAITING = "waiting"  # before the alarm
    MOVING = "moving"
    QUEUED = "queued"
    EVACUATED = "evacuated"
    DEAD = "dead"


class EventKind(enum.IntEnum):
    # value doubles as the tie-break priority
    FIRE_ALARM = 0
    HAZARD_TICK = 1
    ACK_DELIVERY = 2
    SP_EMISSION = 3
    EDGE_DEPARTURE = 4
    NODE_ARRIVAL = 5


@dataclass(order=True)
class Event:
    time: float
    kind: EventKind
    seq: int
    payload: object = field(compare=False, default=None)


@dataclass
class Evacuee:
    id: int
    category: Category
    speed: float
    goal: GoalKind
    movement_depth: int
    node: int
    health: float = MAX_HEALTH
    energy_used: float = 0.0
    state: EvacueeState = EvacueeState.WAITING
    edge: Optional[tuple[int, int]] = None  # (from, to) while walking or queued
    prev: Optional[int] = None
    assigned_route: Optional[Path] = None
    route_pos: int = 0
    hops_since_switch: int = 0
    evac_time: Optional[float] = None
    left_building: bool = False
    distance: float = 0.0
    turns: float = 0.0
    brakes: int = 0
    trail: list[int] = field(default_factory=list)
    seen_burning: set = field(default_factory=set)
    personal_tree: Optional[ExitTree] = None

    @property
    def active(self) -> bool:
        return self.state in (EvacueeState.WAITING, EvacueeState.MOVING, EvacueeState.QUEUED)


@dataclass(frozen=True)
class NodeReport:
    node: int
    R_c: float
    peak_queue: int
    saturated_arrivals: int


@dataclass(frozen=True)
class TrialMetrics:
    seed: int
    policy: str
    evacuees: int
    survivor_fraction: float
    deaths: int
    congestion: int
    avg_evac_time_s: float
    avg_health: float
    total_energy: float
    truncated: bool = False
    nodes: tuple[NodeReport, ...] = ()

    CSV_HEADER = "seed,policy,evacuees,survivor_fraction,deaths,congestion,avg_evac_time_s,avg_health,total_energy"

    def csv_row(self) -> str:
        return (
            f"{self.seed},{self.policy},{self.evacuees},{self.survivor_fraction:.6f},{self.deaths},"
            f"{self.congestion},{self.avg_evac_time_s:.6f},{self.avg_health:.6f},{self.total_energy:.6f}"
        )


def apply_hazard_damage(health: float, intensity: float, dt: float, k_dmg: float, category: Category) -> float:
    if dt < 0:
        raise ValueError("dt must be >= 0")
    return max(0.0, health - k_dmg * DAMAGE_MULTIPLIER[category] * intensity * dt)


def trial_rng(seed: int, stream: int) -> random.Random:
    """Independent stream ``stream`` of trial ``seed``; placement is stream 0."""
    state = np.random.SeedSequence([seed, stream]).generate_state(2)
    return random.Random(int(state[0]) << 32 | int(state[1]))


class Simulation:
    def __init__(self, config: ScenarioConfig, graph: BuildingGraph, seed: int):
        self.cfg = config
        self.graph = graph
        self.seed = seed
        self.hazard_params = config.hazard
        self.M = config.hazard.multiplier(graph)
        self.hazard: HazardState = ignite(graph, config.ignition_node, config.ignition_time_s, config.hazard)
        self.t_hr = {n: t for n, t in enumerate(self.hazard.arrival_time) if math.isfinite(t)}
        self.now = 0.0
        self.alarm = False
        self._obs_time: Optional[float] = None
        self._obs_cache: dict[int, NodeMeasurement] = {}
        self._events: list[Event] = []
        self._seq = 0
        n = len(graph.nodes)
        self.occupancy = [0] * n
        self.queues: list[list[int]] = [[] for _ in range(n)]
        self.stats = [NodeQueueStats(mu=1.0 / config.service_time_s, a_q=config.rolling_a) for _ in range(n)]
        self.peak_queue = [0] * n
        self.saturated = [0] * n
        self.congestion = 0
        self.burning: frozenset = frozenset()
        self.base_tree = exit_tree(graph)
        self.global_tree = self.base_tree
        self.evacuees = self._place(trial_rng(seed, 0))
        self.active = len(self.evacuees)
        self._started = False
        self.done = False
        self.truncated = False
        self._handlers = {
            EventKind.HAZARD_TICK: lambda p: self.on_hazard_tick(),
            EventKind.SP_EMISSION: lambda p: self.on_sp_emission(),
            EventKind.FIRE_ALARM: lambda p: self.on_fire_alarm(),
            EventKind.ACK_DELIVERY: self.on_ack_delivery,
            EventKind.EDGE_DEPARTURE: lambda p: self.on_edge_departure(self.evacuees[p]),
            EventKind.NODE_ARRIVAL: lambda p: self.on_node_arrival(self.evacuees[p]),
        }
        self.network: Optional[CpnNetwork] = None
        if config.policy is Policy.CPN:
            self._build_network()

    # setup

    def _place(self, rng: random.Random) -> list[Evacuee]:
        cfg = self.cfg
        if cfg.start_nodes is not None:
            starts = list(cfg.start_nodes)
        else:
            slots = [nd.id for nd in self.graph.nodes if not nd.is_exit for _ in range(nd.capacity)]
            if cfg.evacuees > len(slots):
                raise ValueError(f"{cfg.evacuees} evacuees exceed the building's {len(slots)} places")
            starts = rng.sample(slots, cfg.evacuees)
        cats = sorted(cfg.mix, key=lambda c: c.value)
        weights = [cfg.mix[c] for c in cats]
        out = []
        for i, node in enumerate(starts):
            cat = rng.choices(cats, weights)[0]
            ev = Evacuee(i, cat, cfg.speeds[cat], cfg.goals[cat], cfg.movement_depth, node, trail=[node])
            self.occupancy[node] += 1
            out.append(ev)
        return out

    def _build_network(self) -> None:
        cfg = self.cfg
        goals = sorted({cfg.goals[c] for c, w in cfg.mix.items() if w > 0}, key=lambda g: g.value)
        # each goal's packets plan for its slowest walker
        speeds = {g: min(cfg.speeds[c] for c, w in cfg.mix.items() if w > 0 and cfg.goals[c] is g) for g in goals}
        suite = GoalSuite(time=cfg.time_goal, energy=cfg.energy)
        self.network = CpnNetwork(self.graph, cfg.cpn, goals, suite, speeds, self.M)
        self.network.t_hr = self.t_hr
        self.sp_rng = trial_rng(self.seed, 1)
        self.network.warm_up(cfg.cpn.sp_budget_per_node, self.sp_rng, 0.0)

    # event queue

    def _push(self, t: float, kind: EventKind, payload=None) -> None:
        self._seq += 1
        heapq.heappush(self._events, Event(t, kind, self._seq, payload))

    # hazard view

    def intensity(self, n: int, t: float) -> float:
        return self.hazard.intensity_at(n, t, self.hazard_params)

    def is_burning(self, n: int, t: float) -> bool:
        return self.hazard.is_burning(n, t)

    def observe(self, n: int, t: float) -> NodeMeasurement:
        if self._obs_time != t:
            self._obs_time = t
            self._obs_cache = {}
        m = self._obs_cache.get(n)
        if m is None:
            st = self.stats[n]
            m = NodeMeasurement(
                t, self.intensity(n, t), self.is_burning(n, t), len(self.queues[n]), st.R_c, utilization(st)
            )
            self._obs_cache[n] = m
        return m

    # policies

    def _penalised_tree(self, burning) -> ExitTree:
        M = self.M

        def weight(u: int, v: int, length: float) -> float:
            return length * M if u in burning or v in burning else length

        return exit_tree(self.graph, weight)

    def policy_autonomous(self, ev: Evacuee) -> Optional[int]:
        u = ev.node
        if self.is_burning(u, self.now) and u not in ev.seen_burning:
            ev.seen_burning.add(u)
            ev.personal_tree = self._penalised_tree(ev.seen_burning)
        while True:
            tree = ev.personal_tree or self.base_tree
            v = tree.next_hop[u]
            if v is None or v in ev.seen_burning or not self.is_burning(v, self.now):
                return v
            # fire seen ahead: remember it and re-plan
            ev.seen_burning.add(v)
            ev.personal_tree = self._penalised_tree(ev.seen_burning)

    def policy_dijkstra(self, ev: Evacuee) -> Optional[int]:
        return self.global_tree.next_hop[ev.node]

    def policy_cpn(self, ev: Evacuee) -> Optional[int]:
        u = ev.node
        route = ev.assigned_route
        on_route = route is not None and ev.route_pos < len(route) - 1 and route[ev.route_pos] == u
        if on_route and ev.hops_since_switch < ev.movement_depth:
            return route[ev.route_pos + 1]
        best = self.network.best_route(u, ev.goal, self.now)
        if best is not None and len(best) > 1:
            ev.assigned_route = best
            ev.route_pos = 0
            ev.hops_since_switch = 0
            return best[1]
        if on_route:
            return route[ev.route_pos + 1]
        ev.assigned_route = None
        return self.policy_autonomous(ev)

    def next_hop(self, ev: Evacuee) -> Optional[int]:
        policy = self.cfg.policy
        if policy is Policy.DIJKSTRA:
            return self.policy_dijkstra(ev)
        if policy is Policy.AUTONOMOUS:
            return self.policy_autonomous(ev)
        return self.policy_cpn(ev)

    # node occupancy

    def _admit(self, ev: Evacuee, v: int) -> None:
        self.occupancy[v] += 1
        ev.node = v
        ev.edge = None
        ev.state = EvacueeState.MOVING
        if self.graph.nodes[v].is_exit:
            ev.state = EvacueeState.EVACUATED
            ev.evac_time = self.now - self.cfg.ignition_time_s
            self.active -= 1
        self._push(self.now + self.cfg.service_time_s, EventKind.EDGE_DEPARTURE, ev.id)

    def _release(self, node: int) -> None:
        self.occupancy[node] -= 1
        q = self.queues[node]
        while q and self.occupancy[node] < self.graph.nodes[node].capacity:
            self._admit(self.evacuees[q.pop(0)], node)

    def node_occupancy_step(self, ev: Evacuee, v: int) -> bool:
        """Admit ``ev`` into ``v`` or queue it; returns True when admitted."""
        self.stats[v] = _arrive(self.stats[v], self.now)
        if utilization(self.stats[v]) >= 1.0:
            self.saturated[v] += 1
        if self.occupancy[v] < self.graph.nodes[v].capacity and not self.queues[v]:
            self._admit(ev, v)
            return True
        ev.state = EvacueeState.QUEUED
        ev.brakes += 1
        self.congestion += 1
        self.queues[v].append(ev.id)
        self.peak_queue[v] = max(self.peak_queue[v], len(self.queues[v]))
        return False

    # handlers

    def on_fire_alarm(self) -> None:
        self.alarm = True
        if self.network is not None:
            self.network.drift = self.cfg.cpn.drift_fire
            self._push(self.now, EventKind.SP_EMISSION)
        self._push(self.now, EventKind.HAZARD_TICK)
        for ev in self.evacuees:
            if ev.state is EvacueeState.WAITING:
                ev.state = EvacueeState.MOVING
                if self.graph.nodes[ev.node].is_exit:
                    ev.state = EvacueeState.EVACUATED
                    ev.evac_time = 0.0
                    self.active -= 1
                    self._push(self.now + self.cfg.service_time_s, EventKind.EDGE_DEPARTURE, ev.id)
                else:
                    self._push(self.now, EventKind.EDGE_DEPARTURE, ev.id)

    def on_hazard_tick(self) -> None:
        t = self.now
        dt = self.cfg.hazard_tick_s
        burning = frozenset(n for n, th in self.t_hr.items() if th <= t)
        if burning != self.burning:
            self.burning = burning
            if self.cfg.policy is Policy.DIJKSTRA:
                self.global_tree = self._penalised_tree(burning)
        if burning:
            for ev in self.evacuees:
                if ev.state not in (EvacueeState.MOVING, EvacueeState.QUEUED):
                    continue
                if ev.edge is None:
                    exposure = self.intensity(ev.node, t)
                else:
                    exposure = max(self.intensity(ev.edge[0], t), self.intensity(ev.edge[1], t))
                if exposure <= 0:
                    continue
                ev.health = apply_hazard_damage(ev.health, exposure, dt, self.cfg.damage_rate, ev.category)
                if ev.health == 0.0:
                    self._kill(ev)
        self._push(t + dt, EventKind.HAZARD_TICK)

    def _kill(self, ev: Evacuee) -> None:
        was = ev.state
        ev.state = EvacueeState.DEAD
        self.active -= 1
        if was is EvacueeState.QUEUED:
            self.queues[ev.edge[1]].remove(ev.id)
        elif ev.edge is None:
            self._release(ev.node)

    def on_sp_emission(self) -> None:
        net = self.network
        t = self.now
        for origin in range(len(self.graph.nodes)):
            if self.graph.nodes[origin].is_exit:
                continue
            for g in net.goals:
                ack = net.explore(origin, g, self.sp_rng, t, self.observe)
                if ack is not None:
                    delay = net.params.hop_delay_s * 2 * len(ack.route)
                    self._push(t + delay, EventKind.ACK_DELIVERY, ack)
        self._push(t + self.cfg.cpn.sp_period_s, EventKind.SP_EMISSION)

    def on_ack_delivery(self, ack) -> None:
        self.network.deliver(ack, self.now)

    def on_edge_departure(self, ev: Evacuee) -> None:
        if ev.state is EvacueeState.EVACUATED:
            if not ev.left_building:
                ev.left_building = True
                self._release(ev.node)
            return
        if ev.state is not EvacueeState.MOVING:
            return
        u = ev.node
        v = self.next_hop(ev)
        if v is None:
            # trapped: try again after a service interval
            self._push(self.now + self.cfg.service_time_s, EventKind.EDGE_DEPARTURE, ev.id)
            return
        length = self.graph.length(u, v)
        ev.edge = (u, v)
        if ev.assigned_route is not None:
            ev.route_pos += 1
            ev.hops_since_switch += 1
        self._release(u)
        self._push(self.now + length / ev.speed, EventKind.NODE_ARRIVAL, ev.id)

    def on_node_arrival(self, ev: Evacuee) -> None:
        if ev.state is not EvacueeState.MOVING:
            return
        u, v = ev.edge
        # energy is charged per completed edge
        if ev.prev is not None:
            ev.turns += turn_angle(self.graph, ev.prev, u, v)
        ev.distance += self.graph.length(u, v)
        ev.prev = u
        ev.trail.append(v)
        self.node_occupancy_step(ev, v)

    # main loop

    def step(self) -> bool:
        """Process the next event; False once the trial is over."""
        if not self._started:
            self._started = True
            self._push(self.cfg.ignition_time_s, EventKind.FIRE_ALARM)
        if self.done or not self._events or (self.alarm and not self.active):
            self.done = True
            return False
        ev = heapq.heappop(self._events)
        if ev.time > self.cfg.time_cap_s:
            self.truncated = self.active > 0
            self.done = True
            return False
        self.now = ev.time
        self._handlers[ev.kind](ev.payload)
        return True

    def run(self) -> TrialMetrics:
        while self.step():
            pass
        return self.metrics(self.truncated)

    def metrics(self, truncated: bool = False) -> TrialMetrics:
        cfg = self.cfg
        evs = self.evacuees
        n = len(evs)
        survivors = [e for e in evs if e.state is EvacueeState.EVACUATED]
        deaths = sum(e.state is EvacueeState.DEAD for e in evs)
        energy = cfg.energy
        total_energy = sum(energy.c1 * e.brakes + energy.c2 * e.distance + energy.c3 * e.turns for e in evs)
        nodes = tuple(
            NodeReport(i, self.stats[i].R_c, self.peak_queue[i], self.saturated[i]) for i in range(len(self.graph.nodes))
        )
        return TrialMetrics(
            seed=self.seed,
            policy=cfg.policy.value,
            evacuees=n,
            survivor_fraction=len(survivors) / n if n else 1.0,
            deaths=deaths,
            congestion=self.congestion,
            avg_evac_time_s=(sum(e.evac_time for e in survivors) / len(survivors)) if survivors else 0.0,
            avg_health=(sum(e.health for e in evs) / n) if n else MAX_HEALTH,
            total_energy=total_energy,
            truncated=truncated,
            nodes=nodes,
        )


def _arrive(stats: NodeQueueStats, t: float) -> NodeQueueStats:
    # simultaneous arrivals share one inter-arrival sample
    if stats.T_h is not None and t <= stats.T_h:
        return stats
    return record_arrival(stats, t)


def run_trial(config: ScenarioConfig, seed: int, graph: Optional[BuildingGraph] = None) -> TrialMetrics:
    graph = graph if graph is not None else config.load_graph()
    return Simulation(config, graph, seed).run()
