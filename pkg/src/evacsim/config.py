"""Scenario configuration: ``key = value`` files mapped onto dataclasses."""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .building import BuildingGraph, load_building, load_default_building
from .cpn import DEFAULT_HOP_LIMITS, CpnParams
from .goals import EnergyGoalParams, GoalKind, TimeGoalParams
from .hazard import HazardParams


class ConfigError(ValueError):
    pass


class Category(str, enum.Enum):
    NORMAL = "normal"
    WHEELCHAIR = "wheelchair"
    SICK = "sick"
    CHILD = "child"


class Policy(str, enum.Enum):
    AUTONOMOUS = "autonomous"
    DIJKSTRA = "dijkstra"
    CPN = "cpn"


DEFAULT_SPEEDS = {
    Category.NORMAL: 150.0,
    Category.WHEELCHAIR: 90.0,
    Category.SICK: 100.0,
    Category.CHILD: 120.0,
}

DEFAULT_GOALS = {
    Category.NORMAL: GoalKind.TIME,
    Category.WHEELCHAIR: GoalKind.ENERGY,
    Category.SICK: GoalKind.SAFETY,
    Category.CHILD: GoalKind.SAFETY,
}

DAMAGE_MULTIPLIER = {
    Category.NORMAL: 1.0,
    Category.WHEELCHAIR: 1.0,
    Category.SICK: 1.5,
    Category.CHILD: 1.5,
}


@dataclass(frozen=True)
class ScenarioConfig:
    building: str = "default"
    evacuees: int = 30
    mix: dict = field(default_factory=lambda: {Category.NORMAL: 1.0})
    policy: Policy = Policy.CPN
    movement_depth: int = 3
    seeds: tuple[int, ...] = tuple(range(1, 11))
    time_cap_s: float = 600.0
    start_nodes: Optional[tuple[int, ...]] = None

    ignition_node: int = 0
    ignition_time_s: float = 10.0
    hazard: HazardParams = HazardParams()
    hazard_tick_s: float = 1.0
    damage_rate: float = 5.0

    cpn: CpnParams = CpnParams()
    goals: dict = field(default_factory=lambda: dict(DEFAULT_GOALS))
    speeds: dict = field(default_factory=lambda: dict(DEFAULT_SPEEDS))
    energy: EnergyGoalParams = EnergyGoalParams()
    time_goal: TimeGoalParams = TimeGoalParams()
    service_time_s: float = 1.0
    rolling_a: float = 0.4

    def __post_init__(self):
        if self.evacuees < 0:
            raise ConfigError("evacuees must be >= 0")
        if self.movement_depth < 1:
            raise ConfigError("movement_depth must be >= 1")
        if self.time_cap_s <= 0 or self.hazard_tick_s <= 0 or self.service_time_s <= 0:
            raise ConfigError("time cap, hazard tick and service time must be > 0")
        if self.damage_rate < 0:
            raise ConfigError("damage_rate must be >= 0")
        if not self.mix or any(w < 0 for w in self.mix.values()) or sum(self.mix.values()) <= 0:
            raise ConfigError("mix needs positive weights")
        if any(s <= 0 for s in self.speeds.values()):
            raise ConfigError("speeds must be > 0")
        if self.start_nodes is not None and len(self.start_nodes) != self.evacuees:
            raise ConfigError("start_nodes must list one node per evacuee")

    def with_goal(self, goal: GoalKind) -> "ScenarioConfig":
        return replace(self, goals={c: goal for c in Category})

    def load_graph(self, base_dir: Optional[Path] = None) -> BuildingGraph:
        if self.building == "default":
            return load_default_building()
        path = Path(self.building)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return load_building(path.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class SweepAxes:
    policy: tuple[Policy, ...] = ()
    evacuees: tuple[int, ...] = ()
    movement_depth: tuple[int, ...] = ()
    goal: tuple[GoalKind, ...] = ()


def parse_seeds(text: str) -> tuple[int, ...]:
    text = text.strip()
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise ConfigError(f"empty seed list {text!r}")
    return tuple(out)


def _parse_mix(text: str) -> dict:
    mix = {}
    for part in text.split(","):
        name, _, weight = part.partition(":")
        mix[_enum(Category, name.strip())] = float(weight) if weight else 1.0
    return mix


def _enum(cls, value: str):
    try:
        return cls(value.strip().lower())
    except ValueError:
        choices = "|".join(m.value for m in cls)
        raise ConfigError(f"bad value {value!r}, expected {choices}") from None


def _list(text: str, conv) -> tuple:
    return tuple(conv(p.strip()) for p in text.split(",") if p.strip())


_HAZARD_KEYS = {
    "spread_rate_cm_s": "spread_rate_a_h",
    "growth_rate_per_s": "growth_rate_b_h",
    "fire_multiplier": "fire_multiplier_M",
    "initial_intensity": "initial_intensity",
}
_CPN_KEYS = {
    "drift_prefire": ("drift_prefire", float),
    "drift_fire": ("drift_fire", float),
    "sp_warmup": ("sp_budget_per_node", int),
    "sp_period_s": ("sp_period_s", float),
    "table_size": ("table_size", int),
    "route_timeout_s": ("route_timeout", float),
    "threshold_a": ("threshold_a", float),
}
_SCALAR_KEYS = {
    "building": str,
    "evacuees": int,
    "movement_depth": int,
    "time_cap_s": float,
    "ignition_node": int,
    "ignition_time_s": float,
    "hazard_tick_s": float,
    "damage_rate": float,
    "service_time_s": float,
    "rolling_a": float,
}


def parse_config(text: str) -> tuple[ScenarioConfig, SweepAxes]:
    """Parse a scenario file; returns the base config and any sweep axes."""
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        kv[key.strip().lower()] = value.strip()
    try:
        return _build(kv)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def _build(kv: dict[str, str]) -> tuple[ScenarioConfig, SweepAxes]:
    top: dict = {}
    hazard: dict = {}
    cpn: dict = {}
    hop_limits = dict(DEFAULT_HOP_LIMITS)
    goals = dict(DEFAULT_GOALS)
    speeds = dict(DEFAULT_SPEEDS)
    energy: dict = {}
    time_goal: dict = {}
    axes: dict = {}
    global_goal = None
    for key, value in kv.items():
        if key in _SCALAR_KEYS:
            top[key] = _SCALAR_KEYS[key](value)
        elif key == "policy":
            top["policy"] = _enum(Policy, value)
        elif key == "mix":
            top["mix"] = _parse_mix(value)
        elif key == "seeds":
            top["seeds"] = parse_seeds(value)
        elif key == "start_nodes":
            top["start_nodes"] = _list(value, int)
        elif key in _HAZARD_KEYS:
            hazard[_HAZARD_KEYS[key]] = float(value)
        elif key in _CPN_KEYS:
            name, conv = _CPN_KEYS[key]
            cpn[name] = conv(value)
        elif key.startswith("hop_limit."):
            hop_limits[int(key.split(".", 1)[1])] = int(value)
        elif key == "goal":
            global_goal = _enum(GoalKind, value)
        elif key.startswith("goal."):
            goals[_enum(Category, key.split(".", 1)[1])] = _enum(GoalKind, value)
        elif key.startswith("speed."):
            speeds[_enum(Category, key.split(".", 1)[1])] = float(value)
        elif key in ("c1", "c2", "c3"):
            energy[key] = float(value)
        elif key in ("coeff_a", "coeff_b"):
            time_goal[key] = float(value)
        elif key == "sweep.policy":
            axes["policy"] = _list(value, lambda v: _enum(Policy, v))
        elif key == "sweep.evacuees":
            axes["evacuees"] = _list(value, int)
        elif key == "sweep.movement_depth":
            axes["movement_depth"] = _list(value, int)
        elif key == "sweep.goal":
            axes["goal"] = _list(value, lambda v: _enum(GoalKind, v))
        else:
            raise ConfigError(f"unknown key {key!r}")
    if global_goal is not None:
        goals = {c: global_goal for c in Category}
    cfg = ScenarioConfig(
        **top,
        hazard=HazardParams(**hazard),
        cpn=CpnParams(hop_limit_by_floor=hop_limits, **cpn),
        goals=goals,
        speeds=speeds,
        energy=EnergyGoalParams(**energy),
        time_goal=TimeGoalParams(**time_goal),
    )
    return cfg, SweepAxes(**axes)


def load_config(path: str | os.PathLike) -> tuple[ScenarioConfig, SweepAxes]:
    text = Path(path).read_text(encoding="utf-8")
    cfg, axes = parse_config(text)
    if cfg.building != "default" and not Path(cfg.building).is_absolute():
        cfg = replace(cfg, building=str((Path(path).parent / cfg.building).resolve()))
    return cfg, axes


def with_cpn(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    known = {f.name for f in fields(CpnParams)}
    bad = set(changes) - known
    if bad:
        raise ConfigError(f"unknown CPN settings {sorted(bad)}")
    return replace(cfg, cpn=replace(cfg.cpn, **changes))
