"""Per-node M/M/1 statistics and path congestion forecasting."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

from .building import BuildingGraph

RHO_CAP = 0.99


class EventOrderError(ValueError):
    pass


@dataclass(frozen=True)
class NodeQueueStats:
    R_c: float = 0.0  # smoothed arrival rate, 1/s
    T_h: Optional[float] = None  # last arrival instant; None before the first arrival
    mu: float = 1.0
    current_queue: int = 0
    a_q: float = 0.4

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("service rate must be > 0")
        if not 0.0 < self.a_q < 1.0:
            raise ValueError("rolling constant must lie in (0, 1)")
        if self.R_c < 0 or self.current_queue < 0:
            raise ValueError("rates and queue lengths must be non-negative")


def record_arrival(stats: NodeQueueStats, T_c: float) -> NodeQueueStats:
    if stats.T_h is None:
        return replace(stats, R_c=0.0, T_h=T_c)
    if T_c <= stats.T_h:
        raise EventOrderError(f"arrival at {T_c} does not follow previous arrival at {stats.T_h}")
    rate = stats.a_q * stats.R_c + (1.0 - stats.a_q) / (T_c - stats.T_h)
    return replace(stats, R_c=rate, T_h=T_c)


def utilization(stats: NodeQueueStats) -> float:
    return stats.R_c / stats.mu


def is_saturated(rho: float) -> bool:
    return rho >= 1.0


def expected_queue_length(rho: float) -> tuple[float, bool]:
    """Steady-state mean queue length rho/(1-rho), capped at ``RHO_CAP``.

    Returns ``(length, saturated)``; ``saturated`` is set whenever the cap applies.
    """
    if rho < 0:
        raise ValueError("utilization must be non-negative")
    if rho >= RHO_CAP:
        return RHO_CAP / (1.0 - RHO_CAP), True
    return rho / (1.0 - rho), False


@dataclass(frozen=True)
class CongestionForecast:
    C_total: float
    t_total: float
    node_etas: tuple[float, ...]
    saturated: bool = False


def predict_path_congestion(
    p: Sequence[int],
    speed: float,
    rho: Mapping[int, float],
    queue: Mapping[int, int],
    graph: BuildingGraph,
    coeff_a: float = 1.0,
    coeff_b: float = 1.0,
) -> CongestionForecast:
    """Expected congestion and traversal time along ``p``.

    ``rho`` and ``queue`` give each node's utilization and current queue
    length (missing nodes count as idle). Per edge, the source node adds its
    utilization to the congestion total and ``coeff_a * rho/(1-rho)`` seconds
    of waiting; a standing queue of ``n`` people adds one congestion and the
    part of ``coeff_b * n`` seconds that has not already elapsed on arrival.
    """
    if speed <= 0:
        raise ValueError("speed must be > 0")
    C_total = 0.0
    t_total = 0.0
    etas = [0.0]
    saturated = False
    for u, v in zip(p, p[1:]):
        t_edge = graph.length(u, v) / speed
        r = rho.get(u, 0.0)
        C_total += r
        wait, sat = expected_queue_length(r)
        saturated = saturated or sat
        t_edge += coeff_a * wait
        n = queue.get(u, 0)
        if n:
            t_queue = coeff_b * n
            if t_queue > t_total:
                C_total += 1
                t_edge += t_queue - t_total
        t_total += t_edge
        etas.append(t_total)
    return CongestionForecast(C_total, t_total, tuple(etas), saturated)
