"""Cognitive packet routing: smart packets, acknowledgements and routing tables.

Smart packets walk the building from a source node, either following the
node's most excited neuron or drifting to a random neighbour. On reaching an
exit the walk is loop-stripped and returned as an acknowledgement, which
refreshes the routing table and trains the neural network of every node it
passes on the way back; each node treats its own suffix of the route as the
measured route.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, NamedTuple, Optional, Sequence

from .building import BuildingGraph, BuildingNode, Path
from .goals import GoalContext, GoalKind, GoalSuite, reward
from .rnn import RnnState, ThresholdState, most_excited, reinforce, update_threshold

REACHED_EXIT = "reached_exit"
DROPPED = "dropped"

DEFAULT_HOP_LIMITS = {1: 60, 2: 100, 3: 120}

# goal values are divided by these before taking the reward 1/G, so rewards
# land on the same scale as the unit fire rates of a fresh network
DEFAULT_GOAL_UNITS = {
    GoalKind.DISTANCE: 1000.0,
    GoalKind.TIME: 10.0,
    GoalKind.ENERGY: 1000.0,
    GoalKind.SAFETY: 1000.0,
}


class NodeMeasurement(NamedTuple):
    timestamp: float
    intensity: float = 0.0
    burning: bool = False
    queue: int = 0
    arrival_rate: float = 0.0
    rho: float = 0.0


QUIET = NodeMeasurement(0.0)

Observer = Callable[[int, float], NodeMeasurement]


@dataclass(frozen=True)
class CpnParams:
    drift_prefire: float = 0.8
    drift_fire: float = 0.55
    sp_budget_per_node: int = 10
    sp_period_s: float = 1.0
    hop_limit_by_floor: Mapping[int, int] = field(default_factory=lambda: dict(DEFAULT_HOP_LIMITS))
    table_size: int = 5
    route_timeout: float = 30.0
    threshold_a: float = 0.8
    hop_delay_s: float = 0.005
    goal_units: Mapping[GoalKind, float] = field(default_factory=lambda: dict(DEFAULT_GOAL_UNITS))

    def __post_init__(self):
        for d in (self.drift_prefire, self.drift_fire):
            if not 0.0 <= d <= 1.0:
                raise ValueError(f"drift must lie in [0, 1], got {d}")
        if any(h <= 0 for h in self.hop_limit_by_floor.values()):
            raise ValueError("hop limits must be positive")
        if self.table_size < 1:
            raise ValueError("table size must be >= 1")
        if self.sp_period_s <= 0:
            raise ValueError("smart packet period must be > 0")

    def check_floors(self, graph: BuildingGraph) -> None:
        missing = sorted({n.floor for n in graph.nodes} - set(self.hop_limit_by_floor))
        if missing:
            raise ValueError(f"no hop limit configured for floor(s) {missing}")


def hop_limit_for(node: BuildingNode, params: CpnParams) -> int:
    try:
        return params.hop_limit_by_floor[node.floor]
    except KeyError:
        raise ValueError(f"no hop limit configured for floor {node.floor}") from None


@dataclass
class SmartPacket:
    origin: int
    hop_limit: int
    goal_kind: GoalKind = GoalKind.DISTANCE
    visited: list[int] = field(default_factory=list)
    measurements: dict[int, NodeMeasurement] = field(default_factory=dict)

    def __post_init__(self):
        if not self.visited:
            self.visited = [self.origin]

    @property
    def hop_count(self) -> int:
        return len(self.visited) - 1

    @property
    def at(self) -> int:
        return self.visited[-1]


def step_smart_packet(
    sp: SmartPacket,
    node: int,
    graph: BuildingGraph,
    rnn: Optional[RnnState],
    rng: random.Random,
    drift: float,
):
    """Advance ``sp`` one hop from ``node``.

    Returns the next node id, or ``REACHED_EXIT`` / ``DROPPED``. ``drift`` is
    the probability of following the most excited neuron. A network that has
    never been reinforced holds no advice, so that branch falls back to a
    uniform choice as well.
    """
    if graph.nodes[node].is_exit:
        return REACHED_EXIT
    nbrs = graph.adjacency[node]
    if not nbrs or sp.hop_count >= sp.hop_limit:
        return DROPPED
    if rng.random() < drift and rnn is not None and rnn.updates:
        nxt = nbrs[most_excited(rnn)]
    else:
        nxt = nbrs[rng.randrange(len(nbrs))]
    sp.visited.append(nxt)
    return nxt


def remove_loops(p: Sequence[int]) -> Path:
    """Cut every cycle out of a walk, keeping its first and last node."""
    if len(p) == 0:
        raise ValueError("empty path")
    last = {n: i for i, n in enumerate(p)}
    out = []
    i = 0
    while i < len(p):
        n = p[i]
        out.append(n)
        i = last[n] + 1
    return tuple(out)


@dataclass(frozen=True)
class Ack:
    route: Path
    measurements: Mapping[int, NodeMeasurement]
    goal_kind: GoalKind = GoalKind.DISTANCE
    sent_at: float = 0.0

    @classmethod
    def from_packet(cls, sp: SmartPacket, t: float = 0.0) -> "Ack":
        route = remove_loops(sp.visited)
        meas = {n: sp.measurements[n] for n in route if n in sp.measurements}
        return cls(route, meas, sp.goal_kind, t)


@dataclass
class RouteEntry:
    route: Path
    G: float
    updated_at: float
    seq: int = 0


@dataclass
class RoutingTable:
    node: int
    neighbors: tuple[int, ...] = ()
    max_size: int = 5
    timeout: float = 30.0
    entries: list[RouteEntry] = field(default_factory=list)
    _seq: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def expire(self, now: float) -> None:
        self.entries = [e for e in self.entries if now - e.updated_at <= self.timeout]

    def insert(self, route: Path, G: float, now: float) -> None:
        if G <= 0:
            raise ValueError("route goal value must be > 0")
        for e in self.entries:
            if e.route == route:
                e.G = G
                e.updated_at = now
                break
        else:
            self._seq += 1
            self.entries.append(RouteEntry(route, G, now, self._seq))
        self.entries.sort(key=lambda e: (e.G, e.seq))
        del self.entries[self.max_size:]


def best_route(table: RoutingTable) -> Optional[Path]:
    return table.entries[0].route if table.entries else None


class AckRejected(ValueError):
    pass


GoalEvaluator = Callable[[Path], float]


def process_ack(
    table: RoutingTable,
    rnn: RnnState,
    ts: ThresholdState,
    ack: Ack,
    goal: GoalEvaluator,
    now: float,
    goal_unit: float = 1.0,
    resolve: bool = True,
) -> tuple[RoutingTable, RnnState, ThresholdState]:
    """Store the acknowledged route and train the node's network on it."""
    route = ack.route
    if route[0] != table.node:
        raise AckRejected(f"ack for {route[0]} delivered to {table.node}")
    if len(route) < 2:
        raise AckRejected("ack route has no first hop")
    try:
        winner = table.neighbors.index(route[1])
    except ValueError:
        raise AckRejected(f"first hop {route[1]} is not a neighbour of {table.node}") from None
    G = goal(route)
    table.insert(route, G, now)
    R = reward(G / goal_unit)
    if ts.initialized:
        reinforce(rnn, winner, R, ts.T, resolve=resolve)
    ts = update_threshold(ts, R)
    table.expire(now)
    return table, rnn, ts


def context_from_measurements(
    graph: BuildingGraph,
    meas: Mapping[int, NodeMeasurement],
    now: float,
    speed: float,
    multiplier: float,
    t_hr: Mapping[int, float],
) -> GoalContext:
    burning = frozenset(n for n, m in meas.items() if m.burning)
    rho = {n: m.rho for n, m in meas.items() if m.rho}
    queue = {n: m.queue for n, m in meas.items() if m.queue}
    return GoalContext(graph, now, speed, multiplier, burning, t_hr, rho, queue)


@dataclass
class NodeBrain:
    table: RoutingTable
    rnn: RnnState
    threshold: ThresholdState


class CpnNetwork:
    """Routing tables and networks for every non-exit node, one set per goal."""

    def __init__(
        self,
        graph: BuildingGraph,
        params: CpnParams = CpnParams(),
        goals: Iterable[GoalKind] = (GoalKind.DISTANCE,),
        suite: GoalSuite = GoalSuite(),
        speeds: Optional[Mapping[GoalKind, float]] = None,
        multiplier: float = 1.0,
    ):
        params.check_floors(graph)
        self.graph = graph
        self.params = params
        self.suite = suite
        self.goals = tuple(dict.fromkeys(goals))
        self.speeds = {g: (speeds or {}).get(g, 150.0) for g in self.goals}
        self.multiplier = multiplier
        self.t_hr: Mapping[int, float] = {}
        self.drift = params.drift_prefire
        self.brains: dict[GoalKind, list[Optional[NodeBrain]]] = {}
        for g in self.goals:
            per_node: list[Optional[NodeBrain]] = []
            for nd in graph.nodes:
                if nd.is_exit:
                    per_node.append(None)
                    continue
                nbrs = graph.adjacency[nd.id]
                per_node.append(
                    NodeBrain(
                        RoutingTable(nd.id, nbrs, params.table_size, params.route_timeout),
                        RnnState.uniform(len(nbrs)),
                        ThresholdState(a_smooth=params.threshold_a),
                    )
                )
            self.brains[g] = per_node
        self.sent = 0
        self.dropped = 0

    def brain(self, node: int, goal: GoalKind = GoalKind.DISTANCE) -> Optional[NodeBrain]:
        return self.brains[goal][node]

    def table(self, node: int, goal: GoalKind = GoalKind.DISTANCE) -> Optional[RoutingTable]:
        b = self.brains[goal][node]
        return b.table if b is not None else None

    def explore(
        self, origin: int, goal: GoalKind, rng: random.Random, now: float = 0.0, observe: Optional[Observer] = None
    ) -> Optional[Ack]:
        """Send one smart packet from ``origin``; returns its ack or ``None`` if dropped."""
        graph = self.graph
        sp = SmartPacket(origin, hop_limit_for(graph.nodes[origin], self.params), goal)
        brains = self.brains[goal]
        self.sent += 1
        # inlined step_smart_packet (same draws, same order)
        nodes, adjacency = graph.nodes, graph.adjacency
        visited = sp.visited
        drift, limit = self.drift, sp.hop_limit
        random_, randrange = rng.random, rng.randrange
        node = origin
        while not nodes[node].is_exit:
            nbrs = adjacency[node]
            if not nbrs or len(visited) > limit:
                self.dropped += 1
                return None
            rnn = brains[node].rnn
            if random_() < drift and rnn.updates:
                node = nbrs[most_excited(rnn)]
            else:
                node = nbrs[randrange(len(nbrs))]
            visited.append(node)
        # the walk is instantaneous, so sampling the kept nodes at the end is equivalent
        for n in remove_loops(visited):
            sp.measurements[n] = observe(n, now) if observe is not None else QUIET
        return Ack.from_packet(sp, now)

    def goal_value(self, route: Path, ack: Ack, now: float) -> float:
        g = ack.goal_kind
        ctx = context_from_measurements(self.graph, ack.measurements, now, self.speeds[g], self.multiplier, self.t_hr)
        return self.suite.evaluate(g, route, ctx)

    def deliver(self, ack: Ack, now: float) -> None:
        """Backtrack ``ack``: every node on the route learns its suffix to the exit."""
        brains = self.brains[ack.goal_kind]
        unit = self.params.goal_units[ack.goal_kind]
        route = ack.route
        g = ack.goal_kind
        ctx = context_from_measurements(self.graph, ack.measurements, now, self.speeds[g], self.multiplier, self.t_hr)
        evaluate = lambda p: self.suite.evaluate(g, p, ctx)  # noqa: E731
        for k in range(len(route) - 2, -1, -1):
            brain = brains[route[k]]
            if brain is None:
                continue
            suffix = route[k:]
            sub = Ack(suffix, ack.measurements, ack.goal_kind, ack.sent_at)
            _, _, brain.threshold = process_ack(
                brain.table,
                brain.rnn,
                brain.threshold,
                sub,
                evaluate,
                now,
                unit,
                resolve=False,
            )

    def warm_up(self, sps_per_node: int, rng: random.Random, now: float = 0.0) -> None:
        """Rounds of one smart packet per node, in shuffled order each round."""
        sources = [n.id for n in self.graph.nodes if not n.is_exit]
        for _ in range(sps_per_node):
            order = sources[:]
            rng.shuffle(order)
            for origin in order:
                for g in self.goals:
                    ack = self.explore(origin, g, rng, now)
                    if ack is not None:
                        self.deliver(ack, now)

    def best_route(self, node: int, goal: GoalKind, now: Optional[float] = None) -> Optional[Path]:
        brain = self.brains[goal][node]
        if brain is None:
            return (node,)
        if now is not None:
            brain.table.expire(now)
        return best_route(brain.table)

    def dump_rnn_rows(self, goal: GoalKind = GoalKind.DISTANCE) -> list[tuple]:
        """Rows ``(node, i, j, w_plus, w_minus, q_i)`` for every node's network."""
        rows = []
        for node, brain in enumerate(self.brains[goal]):
            if brain is None:
                continue
            rnn = brain.rnn
            if rnn.dirty:
                most_excited(rnn)
            for i in range(rnn.n):
                for j in range(rnn.n):
                    rows.append((node, i, j, rnn.w_plus[i][j], rnn.w_minus[i][j], rnn.q[i]))
        return rows
