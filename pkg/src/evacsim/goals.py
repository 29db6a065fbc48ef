"""Path goal functions: distance, time, energy and safety.

Every goal maps a path plus a snapshot of the environment to a non-negative
scalar (lower is better). Rewards for the learners are ``1/G``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import AbstractSet, Mapping, Optional, Sequence

from .building import BuildingError, BuildingGraph
from .queueing import CongestionForecast, expected_queue_length, predict_path_congestion

R_MAX = 1e9


class GoalKind(str, enum.Enum):
    DISTANCE = "distance"
    TIME = "time"
    ENERGY = "energy"
    SAFETY = "safety"


@dataclass(frozen=True)
class TimeGoalParams:
    coeff_a: float = 1.0  # s per predicted queued person
    coeff_b: float = 1.0  # s per currently queued person


@dataclass(frozen=True)
class EnergyGoalParams:
    c1: float = 50.0  # per braking event
    c2: float = 1.0  # per cm
    c3: float = 2.0  # per degree of turn

    def __post_init__(self):
        if min(self.c1, self.c2, self.c3) < 0:
            raise ValueError("energy constants must be non-negative")


@dataclass(frozen=True)
class SafetyGoalParams:
    growth_rate_b_h: float = 1.0

    def __post_init__(self):
        if self.growth_rate_b_h < 0:
            raise ValueError("growth rate must be non-negative")


@dataclass(frozen=True)
class GoalContext:
    """Environment snapshot at ``t_current`` as seen by a goal evaluation.

    ``burning`` holds nodes on fire, ``t_hr`` forecast hazard arrival times
    (absent means never), ``rho``/``queue`` per-node utilization and current
    queue length (absent means idle).
    """

    graph: BuildingGraph
    t_current: float = 0.0
    speed: float = 150.0
    multiplier: float = 1.0
    burning: AbstractSet[int] = frozenset()
    t_hr: Mapping[int, float] = field(default_factory=dict)
    rho: Mapping[int, float] = field(default_factory=dict)
    queue: Mapping[int, int] = field(default_factory=dict)

    def edge_effective_length(self, u: int, v: int) -> float:
        length = self.graph.length(u, v)
        if u in self.burning or v in self.burning:
            return length * self.multiplier
        return length

    def forecast(self, p: Sequence[int], coeff_a: float = 1.0, coeff_b: float = 1.0) -> CongestionForecast:
        return predict_path_congestion(p, self.speed, self.rho, self.queue, self.graph, coeff_a, coeff_b)


def _check(p: Sequence[int]) -> None:
    if len(p) == 0:
        raise BuildingError("empty path")


def goal_distance(p: Sequence[int], ctx: GoalContext) -> float:
    _check(p)
    return sum(ctx.edge_effective_length(u, v) for u, v in zip(p, p[1:]))


def goal_time(p: Sequence[int], ctx: GoalContext, params: TimeGoalParams = TimeGoalParams()) -> float:
    """Travel time on effective lengths plus predicted and standing queue waits.

    The standing-queue wait at a node is whatever part of ``coeff_b * queue``
    is still left when the evacuee is due at the following node.
    """
    _check(p)
    total = 0.0
    for u, v in zip(p, p[1:]):
        wait, _ = expected_queue_length(ctx.rho.get(u, 0.0))
        total += ctx.edge_effective_length(u, v) / ctx.speed + params.coeff_a * wait
        n = ctx.queue.get(u, 0)
        if n:
            total += max(params.coeff_b * n - total, 0.0)
    return total


def turn_angle(graph: BuildingGraph, a: int, b: int, c: int) -> float:
    """Heading change in degrees at ``b`` for the walk a -> b -> c.

    Measured on the floor plan; stair edges (different floors) count as straight.
    """
    na, nb, nc = graph.nodes[a], graph.nodes[b], graph.nodes[c]
    if not na.floor == nb.floor == nc.floor:
        return 0.0
    d1 = (nb.position[0] - na.position[0], nb.position[1] - na.position[1])
    d2 = (nc.position[0] - nb.position[0], nc.position[1] - nb.position[1])
    n1 = math.hypot(*d1)
    n2 = math.hypot(*d2)
    if n1 == 0 or n2 == 0:
        raise BuildingError(f"zero-length planar edge at {a}->{b}->{c}")
    cos = (d1[0] * d2[0] + d1[1] * d2[1]) / (n1 * n2)
    return math.degrees(math.acos(max(-1.0, min(1.0, cos))))


def path_turns(graph: BuildingGraph, p: Sequence[int]) -> float:
    return sum(turn_angle(graph, a, b, c) for a, b, c in zip(p, p[1:], p[2:]))


def goal_energy(
    p: Sequence[int], ctx: GoalContext, params: EnergyGoalParams = EnergyGoalParams(), time_params: TimeGoalParams = TimeGoalParams()
) -> float:
    _check(p)
    congestion = ctx.forecast(p, time_params.coeff_a, time_params.coeff_b).C_total if len(p) > 1 else 0.0
    dist = sum(ctx.graph.length(u, v) for u, v in zip(p, p[1:]))
    return params.c1 * congestion + params.c2 * dist + params.c3 * path_turns(ctx.graph, p)


def goal_safety(
    p: Sequence[int], ctx: GoalContext, params: SafetyGoalParams = SafetyGoalParams(), time_params: TimeGoalParams = TimeGoalParams()
) -> float:
    """Effective length plus the fire intensity forecast at each node on arrival."""
    _check(p)
    if len(p) == 1:
        return 0.0
    etas = ctx.forecast(p, time_params.coeff_a, time_params.coeff_b).node_etas
    total = 0.0
    for i, (u, v) in enumerate(zip(p, p[1:])):
        t_hr = ctx.t_hr.get(v, math.inf)
        exposure = etas[i + 1] + ctx.t_current - t_hr
        if exposure >= 0:
            total += params.growth_rate_b_h * exposure
        total += ctx.edge_effective_length(u, v)
    return total


def reward(G: float) -> float:
    if G < 0:
        raise ValueError(f"goal value must be non-negative, got {G}")
    if G == 0:
        return R_MAX
    return min(1.0 / G, R_MAX)


@dataclass(frozen=True)
class GoalSuite:
    """All goal parameters bundled, dispatching on ``GoalKind``."""

    time: TimeGoalParams = TimeGoalParams()
    energy: EnergyGoalParams = EnergyGoalParams()
    safety: SafetyGoalParams = SafetyGoalParams()

    def evaluate(self, kind: GoalKind, p: Sequence[int], ctx: GoalContext) -> float:
        if kind is GoalKind.DISTANCE:
            return goal_distance(p, ctx)
        if kind is GoalKind.TIME:
            return goal_time(p, ctx, self.time)
        if kind is GoalKind.ENERGY:
            return goal_energy(p, ctx, self.energy, self.time)
        if kind is GoalKind.SAFETY:
            return goal_safety(p, ctx, self.safety, self.time)
        raise ValueError(f"unknown goal {kind!r}")
