from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from evacsim.config import (
    Category,
    ConfigError,
    Policy,
    ScenarioConfig,
    load_config,
    parse_config,
    parse_seeds,
    with_cpn,
)
from evacsim.goals import GoalKind

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def test_defaults():
    cfg, axes = parse_config("")
    assert cfg == ScenarioConfig()
    assert cfg.goals[Category.NORMAL] is GoalKind.TIME
    assert cfg.goals[Category.WHEELCHAIR] is GoalKind.ENERGY
    assert cfg.goals[Category.SICK] is cfg.goals[Category.CHILD] is GoalKind.SAFETY
    assert cfg.speeds == {Category.NORMAL: 150, Category.WHEELCHAIR: 90, Category.SICK: 100, Category.CHILD: 120}
    assert cfg.energy.c1 == 50 and cfg.cpn.drift_prefire == 0.8 and cfg.cpn.drift_fire == 0.55
    assert not axes.policy


def test_full_file():
    text = """
    # comment
    evacuees = 60
    policy = Dijkstra
    mix = normal:2, child:1
    seeds = 1..3, 7
    goal.sick = time
    speed.child = 110
    hop_limit.1 = 70
    c1 = 40
    spread_rate_cm_s = 25   # trailing comment
    sweep.evacuees = 30, 60
    sweep.goal = energy, safety
    """
    cfg, axes = parse_config(text)
    assert cfg.evacuees == 60 and cfg.policy is Policy.DIJKSTRA
    assert cfg.mix == {Category.NORMAL: 2.0, Category.CHILD: 1.0}
    assert cfg.seeds == (1, 2, 3, 7)
    assert cfg.goals[Category.SICK] is GoalKind.TIME
    assert cfg.speeds[Category.CHILD] == 110
    assert cfg.cpn.hop_limit_by_floor[1] == 70
    assert cfg.energy.c1 == 40
    assert cfg.hazard.spread_rate_a_h == 25
    assert axes.evacuees == (30, 60)
    assert axes.goal == (GoalKind.ENERGY, GoalKind.SAFETY)


def test_global_goal_overrides_categories():
    cfg, _ = parse_config("goal = distance")
    assert set(cfg.goals.values()) == {GoalKind.DISTANCE}


@pytest.mark.parametrize(
    "text",
    ["evacuees 3", "colour = red", "policy = teleport", "evacuees = many", "movement_depth = 0", "drift_fire = 2"],
)
def test_bad_config(text):
    with pytest.raises(ConfigError):
        parse_config(text)


@given(st.integers(0, 50), st.integers(0, 50))
def test_seed_ranges(a, b):
    lo, hi = sorted((a, b))
    assert parse_seeds(f"{lo}..{hi}") == tuple(range(lo, hi + 1))


def test_with_cpn():
    cfg = with_cpn(ScenarioConfig(), table_size=3)
    assert cfg.cpn.table_size == 3
    with pytest.raises(ConfigError):
        with_cpn(cfg, nonsense=1)


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.cfg")), ids=lambda p: p.name)
def test_shipped_scenarios_parse(path):
    cfg, _ = load_config(path)
    cfg.cpn.check_floors(cfg.load_graph())
