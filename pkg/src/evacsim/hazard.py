"""Deterministic fire spread along graph distance with linear intensity growth."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .building import BuildingError, BuildingGraph, Edge, distances_to


@dataclass(frozen=True)
class HazardParams:
    spread_rate_a_h: float = 50.0  # cm/s
    growth_rate_b_h: float = 1.0  # intensity per second after arrival
    fire_multiplier_M: Optional[float] = None  # None -> default_fire_multiplier(graph)
    initial_intensity: float = 0.0  # intensity at the arrival instant

    def __post_init__(self):
        if self.spread_rate_a_h <= 0:
            raise ValueError("spread rate must be > 0")
        if self.growth_rate_b_h < 0:
            raise ValueError("growth rate must be >= 0")
        if self.initial_intensity < 0:
            raise ValueError("initial intensity must be >= 0")

    def multiplier(self, graph: BuildingGraph) -> float:
        M = self.fire_multiplier_M if self.fire_multiplier_M is not None else default_fire_multiplier(graph)
        if M <= graph.average_edge_length():
            raise ValueError(f"fire multiplier {M} must exceed the average edge length")
        return M


def default_fire_multiplier(graph: BuildingGraph) -> float:
    return 10.0 * graph.max_edge_length() * len(graph.nodes)


@dataclass(frozen=True)
class HazardState:
    ignition_node: int
    ignition_time: float
    arrival_time: tuple[float, ...]
    intensity: tuple[float, ...]
    time: float
    multiplier: float

    def is_burning(self, n: int, t: float) -> bool:
        # arrival instant counts as burning
        return t >= self.arrival_time[n]

    def intensity_at(self, n: int, t: float, params: HazardParams) -> float:
        return _intensity(self.arrival_time[n], t, params)


def hazard_arrival_times(
    graph: BuildingGraph, ignition: int, params: HazardParams, ignition_time: float = 0.0
) -> tuple[float, ...]:
    if not 0 <= ignition < len(graph.nodes):
        raise BuildingError(f"unknown ignition node {ignition}")
    dist = distances_to(graph, [ignition])
    return tuple(ignition_time + d / params.spread_rate_a_h for d in dist)


def ignite(graph: BuildingGraph, ignition: int, ignition_time: float, params: HazardParams) -> HazardState:
    arrivals = hazard_arrival_times(graph, ignition, params, ignition_time)
    state = HazardState(
        ignition, ignition_time, arrivals, (0.0,) * len(arrivals), -math.inf, params.multiplier(graph)
    )
    return advance_hazard(state, max(0.0, ignition_time), params)


def _intensity(t_hr: float, t: float, params: HazardParams) -> float:
    if math.isinf(t_hr) or t < t_hr:
        return 0.0
    return params.initial_intensity + params.growth_rate_b_h * (t - t_hr)


def advance_hazard(state: HazardState, t: float, params: HazardParams) -> HazardState:
    if t < state.time:
        raise ValueError(f"hazard time cannot go backwards ({t} < {state.time})")
    intensity = tuple(_intensity(t_hr, t, params) for t_hr in state.arrival_time)
    return replace(state, intensity=intensity, time=t)


def edge_fire_factor(state: HazardState, e: Edge | tuple[int, int], t: float, params: HazardParams) -> float:
    u, v = e.endpoints if isinstance(e, Edge) else e
    if state.is_burning(u, t) or state.is_burning(v, t):
        return state.multiplier
    return 1.0


def effective_length(state: Optional[HazardState], graph: BuildingGraph, p: Sequence[int], t: float) -> float:
    """Physical path length with each fire-affected edge scaled by the multiplier."""
    if len(p) == 0:
        raise BuildingError("empty path")
    total = 0.0
    for a, b in zip(p, p[1:]):
        length = graph.length(a, b)
        if state is not None and (state.is_burning(a, t) or state.is_burning(b, t)):
            length *= state.multiplier
        total += length
    return total
