"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (printed in the terminal summary) and then
asserts, so a failing criterion shows up both ways.
"""

import math
import time
from dataclasses import replace
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from evacsim.building import exit_tree, load_default_building, path_length
from evacsim.config import Policy, ScenarioConfig, load_config
from evacsim.cpn import CpnNetwork
from evacsim.goals import GoalKind
from evacsim.harness import Cell, Sweep, run_sweep
from evacsim.queueing import expected_queue_length, predict_path_congestion
from evacsim.rnn import RnnState, excitation_residual, most_excited, reinforce, solve_excitation
from evacsim.sim import run_trial, trial_rng

from conftest import make_graph
from test_queueing import reference_trace, simulate_mm1
from test_rnn import dense_oracle

RESULTS: dict[int, str] = {}


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def random_state(rng: np.random.Generator, n: int) -> RnnState:
    wp = rng.uniform(0, 1, (n, n))
    wm = rng.uniform(0, 1, (n, n))
    np.fill_diagonal(wp, 0)
    np.fill_diagonal(wm, 0)
    return RnnState(wp.tolist(), wm.tolist(), rng.uniform(0.01, 0.5, n).tolist(), rng.uniform(0, 0.3, n).tolist())


# math core


def test_c1_rnn_fixed_point():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst_res = worst_gap = 0.0
    for _ in range(100):
        s = random_state(rng, int(rng.integers(2, 9)))
        q = solve_excitation(s)
        worst_res = max(worst_res, excitation_residual(s, q))
        worst_gap = max(worst_gap, float(np.max(np.abs(np.array(q) - dense_oracle(s)))))
    elapsed = time.perf_counter() - start
    ok = worst_res < 1e-9 and worst_gap < 1e-8 and elapsed < 5
    report(1, ok, f"max residual {worst_res:.2e}, max oracle gap {worst_gap:.2e}, {elapsed:.2f}s")


def test_c2_fire_rate_conservation():
    rng = np.random.default_rng(202)
    worst = 0.0
    s = None
    for i in range(10_000):
        if i % 50 == 0:
            s = random_state(rng, int(rng.integers(2, 9)))
        before = [sum(a) + sum(b) for a, b in zip(s.w_plus, s.w_minus)]
        R, T = rng.uniform(0, 2, 2)
        reinforce(s, int(rng.integers(s.n)), float(R), float(T), resolve=False)
        after = [sum(a) + sum(b) for a, b in zip(s.w_plus, s.w_minus)]
        worst = max(worst, max(abs(x - y) for x, y in zip(before, after)))
    report(2, worst < 1e-9, f"max row drift {worst:.2e} over 10000 calls")


def test_c3_reward_direction():
    rng = np.random.default_rng(303)
    up = total = rank_worse = 0
    for _ in range(2000):
        s = random_state(rng, int(rng.integers(2, 9)))
        q0 = solve_excitation(s)[:]
        w = int(rng.integers(s.n))
        rank0 = sum(x > q0[w] for x in q0)
        T = float(rng.uniform(0, 1))
        R = T + float(rng.uniform(1e-3, 1))
        reinforce(s, w, R, T)
        if s.clipped:
            continue
        total += 1
        up += s.q[w] > q0[w]
        rank_worse += sum(x > s.q[w] for x in s.q) > rank0
    frac = up / total
    ok = frac >= 0.99 and rank_worse == 0
    report(3, ok, f"winner q up in {frac:.2%} of {total}, rank worsened {rank_worse} times")


def test_c4_mm1_oracle():
    start = time.perf_counter()
    errs = {}
    for rho in (0.3, 0.5, 0.7):
        expected, _ = expected_queue_length(rho)
        errs[rho] = abs(simulate_mm1(rho, 100_000, seed=11) - expected) / expected
    elapsed = time.perf_counter() - start
    ok = max(errs.values()) < 0.10 and elapsed < 30
    detail = ", ".join(f"rho {r}: {e:.1%}" for r, e in errs.items())
    report(4, ok, f"{detail}; {elapsed:.1f}s")


def test_c5_forecast_hand_traces():
    graph = make_graph([(0, 1, 100)], exits={1})
    rho = {0: Fraction(1, 2)}
    checks = []
    for queue, want in (({}, (Fraction(1, 2), Fraction(2))), ({0: 3}, (Fraction(3, 2), Fraction(5)))):
        ref = reference_trace((0, 1), 100, rho, queue, {(0, 1): 100}, 1, 1)
        got = predict_path_congestion((0, 1), 100, rho, queue, graph, Fraction(1), Fraction(1))
        checks.append(ref == want == (got.C_total, got.t_total))
    report(5, all(checks), f"fixtures matched {sum(checks)}/2")


# routing and trends


def test_c6_cpn_discovery():
    graph = load_default_building()
    tree = exit_tree(graph)
    sources = [n.id for n in graph.nodes if not n.is_exit]
    start = time.perf_counter()
    full_tables = good_seeds = 0
    worst_ratio, exact_fracs = 0.0, []
    for seed in range(1, 11):
        net = CpnNetwork(graph)
        rng = trial_rng(seed, 1)
        net.warm_up(5, rng)
        full_tables += all(len(net.table(n)) > 0 for n in sources)
        net.warm_up(5, rng)  # 10 per node in total
        ratios = []
        for n in sources:
            best = net.best_route(n, GoalKind.DISTANCE)
            ratios.append(math.inf if best is None else path_length(graph, best) / tree.dist[n])
        exact = sum(r <= 1 + 1e-9 for r in ratios) / len(ratios)
        worst_ratio = max(worst_ratio, max(ratios))
        exact_fracs.append(exact)
        good_seeds += max(ratios) <= 1.2 and exact >= 0.5
    elapsed = time.perf_counter() - start
    ok = full_tables == 10 and good_seeds >= 8 and elapsed < 60
    detail = (
        f"tables full in {full_tables}/10 seeds, within 1.2x and >=50% exact in {good_seeds}/10 "
        f"(worst ratio {worst_ratio:.2f}, exact {min(exact_fracs):.0%}..{max(exact_fracs):.0%}), {elapsed:.0f}s"
    )
    report(6, ok, detail)


SEEDS10 = tuple(range(1, 11))


SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


@lru_cache(maxsize=None)
def _scenario(name: str) -> ScenarioConfig:
    return load_config(SCENARIOS / name)[0]


@lru_cache(maxsize=None)
def _trial(scenario: str, cell: Cell, seed: int):
    return run_trial(cell.apply(_scenario(scenario)), seed, _graph())


@lru_cache(maxsize=1)
def _graph():
    return load_default_building()


@pytest.mark.slow
def test_c7_movement_depth():
    seeds = range(1, 10)
    m = {d: [_trial("movement_depth.cfg", Cell("cpn", 120, d, "distance"), s) for s in seeds] for d in (1, 3, 5)}
    better = sum(
        a.deaths <= b.deaths and a.avg_evac_time_s < b.avg_evac_time_s for a, b in zip(m[3], m[1])
    )
    gaps = {}
    for metric in ("deaths", "avg_evac_time_s"):
        m3 = np.mean([getattr(r, metric) for r in m[3]])
        m5 = np.mean([getattr(r, metric) for r in m[5]])
        gaps[metric] = abs(m3 - m5) / max(abs(m3), 1e-12)
    ok = better >= 6 and max(gaps.values()) < 0.15
    means = {d: (np.mean([r.deaths for r in m[d]]), np.mean([r.avg_evac_time_s for r in m[d]])) for d in m}
    detail = (
        f"depth 3 beats 1 in {better}/9 seeds; 3 vs 5 gap deaths {gaps['deaths']:.0%}, "
        f"time {gaps['avg_evac_time_s']:.0%}; means (deaths, time) "
        + ", ".join(f"d{d} ({a:.1f}, {b:.1f}s)" for d, (a, b) in means.items())
    )
    report(7, ok, detail)


@pytest.mark.slow
def test_c8_congestion_ordering():
    c = {
        p: [_trial("policy_comparison.cfg", Cell(p, 120, 3, "distance"), s).congestion for s in SEEDS10]
        for p in ("autonomous", "dijkstra", "cpn")
    }
    mean = {p: float(np.mean(v)) for p, v in c.items()}
    between = sum(
        min(a, d) <= x <= max(a, d) for a, d, x in zip(c["autonomous"], c["dijkstra"], c["cpn"])
    )
    ok = mean["dijkstra"] > mean["autonomous"] and between >= 6
    detail = f"means autonomous {mean['autonomous']:.1f}, dijkstra {mean['dijkstra']:.1f}, cpn {mean['cpn']:.1f}; cpn between in {between}/10"
    report(8, ok, detail)


@pytest.mark.slow
def test_c9_goal_functions():
    goals = [g.value for g in GoalKind]

    def per_seed(n, metric):
        cells = {g: Cell("cpn", n, 3, g) for g in goals}
        return {g: [getattr(_trial("goal_functions.cfg", c, s), metric) for s in SEEDS10] for g, c in cells.items()}

    parts, ok = [], True
    for n in (30, 60):
        t = per_seed(n, "avg_evac_time_s")
        wins = sum(a < b for a, b in zip(t["time"], t["distance"]))
        parts.append(f"time<distance n{n} {wins}/10")
        ok &= wins >= 6
        e = per_seed(n, "total_energy")
        wins = sum(e["energy"][i] < min(e[g][i] for g in goals if g != "energy") for i in range(10))
        parts.append(f"energy lowest n{n} {wins}/10")
        ok &= wins >= 6
    for n in (30, 60, 90, 120):
        h = per_seed(n, "avg_health")
        rival = [max(h[g][i] for g in goals if g != "safety") for i in range(10)]
        wins = sum(h["safety"][i] > rival[i] for i in range(10))
        ties = sum(h["safety"][i] == rival[i] for i in range(10))
        parts.append(f"safety healthiest n{n} {wins}/10 (ties {ties})")
        ok &= wins >= 6
    report(9, ok, "; ".join(parts))


def test_c10_determinism():
    graph = _graph()
    same = total = 0
    for policy in Policy:
        cfg = replace(ScenarioConfig(), policy=policy, evacuees=40)
        for seed in (1, 2, 3):
            total += 1
            same += run_trial(cfg, seed, graph).csv_row() == run_trial(cfg, seed, graph).csv_row()
    sweep = Sweep(replace(ScenarioConfig(), evacuees=20, seeds=(5,)))
    rows = [[t.metrics.csv_row() for t in run_sweep(sweep, graph).trials] for _ in range(2)]
    total += 1
    same += rows[0] == rows[1]
    report(10, same == total, f"{same}/{total} repeated runs byte-identical")
