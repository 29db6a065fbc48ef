"""Seeded sweeps over policy, evacuee count, movement depth and goal."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .building import BuildingGraph
from .config import ScenarioConfig, SweepAxes
from .goals import GoalKind
from .sim import TrialMetrics, run_trial

log = logging.getLogger(__name__)

METRICS = ("survivor_fraction", "deaths", "congestion", "avg_evac_time_s", "avg_health", "total_energy")


@dataclass(frozen=True, order=True)
class Cell:
    policy: str
    evacuees: int
    movement_depth: int
    goal: str  # "" when categories keep their own goals

    @property
    def label(self) -> str:
        parts = [self.policy, f"n{self.evacuees}", f"d{self.movement_depth}"]
        if self.goal:
            parts.append(self.goal)
        return "/".join(parts)

    def apply(self, base: ScenarioConfig) -> ScenarioConfig:
        from .config import Policy

        cfg = replace(base, policy=Policy(self.policy), evacuees=self.evacuees, movement_depth=self.movement_depth)
        return cfg.with_goal(GoalKind(self.goal)) if self.goal else cfg


@dataclass(frozen=True)
class Sweep:
    base: ScenarioConfig
    axes: SweepAxes = SweepAxes()
    seeds: Optional[tuple[int, ...]] = None  # None -> base.seeds
    out: Optional[Path] = None

    def cells(self) -> list[Cell]:
        b = self.base
        policies = [p.value for p in self.axes.policy] or [b.policy.value]
        counts = list(self.axes.evacuees) or [b.evacuees]
        depths = list(self.axes.movement_depth) or [b.movement_depth]
        goals = [g.value for g in self.axes.goal] or [""]
        for axis in (policies, counts, depths, goals):
            if not axis:
                raise ValueError("sweep axes must be non-empty")
        return sorted(Cell(*c) for c in itertools.product(policies, counts, depths, goals))

    @property
    def seed_list(self) -> tuple[int, ...]:
        return self.seeds if self.seeds is not None else self.base.seeds


@dataclass(frozen=True)
class TrialResult:
    cell: Cell
    seed: int
    metrics: Optional[TrialMetrics] = None
    error: Optional[str] = None


@dataclass(frozen=True)
class Aggregate:
    cell: Cell
    metric: str
    mean: float
    min: float
    max: float
    count: int


@dataclass
class SweepResult:
    trials: list[TrialResult]
    aggregates: list[Aggregate] = field(default_factory=list)

    @property
    def failed(self) -> list[TrialResult]:
        return [t for t in self.trials if t.error is not None]


def _run_one(args) -> TrialResult:
    cell, seed, base, graph = args
    try:
        return TrialResult(cell, seed, run_trial(cell.apply(base), seed, graph))
    except Exception as exc:  # recorded as an error row, the sweep carries on
        return TrialResult(cell, seed, error=f"{type(exc).__name__}: {exc}")


def aggregate(trials: Iterable[TrialResult]) -> list[Aggregate]:
    by_cell: dict[Cell, list[TrialMetrics]] = {}
    failed: set[Cell] = set()
    for t in trials:
        if t.metrics is None:
            failed.add(t.cell)
        else:
            by_cell.setdefault(t.cell, []).append(t.metrics)
    out = []
    for cell in sorted(by_cell):
        if cell in failed:
            continue  # a failed trial aborts the whole cell
        rows = by_cell[cell]
        for m in METRICS:
            vals = [float(getattr(r, m)) for r in rows]
            out.append(Aggregate(cell, m, statistics.fmean(vals), min(vals), max(vals), len(vals)))
    return out


def run_sweep(sweep: Sweep, graph: Optional[BuildingGraph] = None, workers: int = 1) -> SweepResult:
    graph = graph if graph is not None else sweep.base.load_graph()
    jobs = [(cell, seed, sweep.base, graph) for cell in sweep.cells() for seed in sweep.seed_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(_run_one, jobs))
    else:
        trials = [_run_one(j) for j in jobs]
    result = SweepResult(trials, aggregate(trials))
    if sweep.out is not None:
        write_outputs(result, Path(sweep.out))
    return result


# output

TRIAL_COLUMNS = TrialMetrics.CSV_HEADER + ",movement_depth,goal,truncated"


def trials_csv(trials: Sequence[TrialResult]) -> str:
    lines = [TRIAL_COLUMNS]
    for t in trials:
        if t.metrics is not None:
            lines.append(f"{t.metrics.csv_row()},{t.cell.movement_depth},{t.cell.goal},{int(t.metrics.truncated)}")
    return "\n".join(lines) + "\n"


def errors_csv(trials: Sequence[TrialResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cell", "seed", "error"])
    for t in trials:
        if t.error is not None:
            w.writerow([t.cell.label, t.seed, t.error])
    return buf.getvalue()


def nodes_csv(trials: Sequence[TrialResult]) -> str:
    lines = ["cell,seed,node,R_c,peak_queue,saturated_arrivals"]
    for t in trials:
        if t.metrics is None:
            continue
        for n in t.metrics.nodes:
            lines.append(f"{t.cell.label},{t.seed},{n.node},{n.R_c:.6f},{n.peak_queue},{n.saturated_arrivals}")
    return "\n".join(lines) + "\n"


def aggregates_csv(aggs: Sequence[Aggregate]) -> str:
    lines = ["cell,metric,mean,min,max,count"]
    lines += [f"{a.cell.label},{a.metric},{a.mean!r},{a.min!r},{a.max!r},{a.count}" for a in aggs]
    return "\n".join(lines) + "\n"


def _series(cell: Cell) -> str:
    return f"{cell.policy}/{cell.goal}" if cell.goal else cell.policy


def _group(cell: Cell) -> str:
    return f"n{cell.evacuees}/d{cell.movement_depth}"


def plot_data(aggs: Sequence[Aggregate]) -> dict[str, str]:
    """One ``group,series,mean,min,max`` table per metric."""
    files = {}
    for m in METRICS:
        rows = [a for a in aggs if a.metric == m]
        if not rows:
            log.warning("no data for metric %s", m)
            continue
        lines = ["group,series,mean,min,max"]
        lines += [f"{_group(a.cell)},{_series(a.cell)},{a.mean!r},{a.min!r},{a.max!r}" for a in rows]
        files[f"plot_{m}.csv"] = "\n".join(lines) + "\n"
    return files


def read_plot_data(text: str) -> list[tuple[str, str, float, float, float]]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [(r["group"], r["series"], float(r["mean"]), float(r["min"]), float(r["max"])) for r in rows]


def emit_plot_data(aggs: Sequence[Aggregate], out: Path) -> list[Path]:
    return [_atomic_write(out / name, text) for name, text in plot_data(aggs).items()]


def _atomic_write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
    return path


def write_outputs(result: SweepResult, out: Path) -> None:
    ordered = sorted(result.trials, key=lambda t: (t.cell, t.seed))
    _atomic_write(out / "trials.csv", trials_csv(ordered))
    _atomic_write(out / "nodes.csv", nodes_csv(ordered))
    _atomic_write(out / "aggregates.csv", aggregates_csv(result.aggregates))
    if result.failed:
        _atomic_write(out / "errors.csv", errors_csv(ordered))
    emit_plot_data(result.aggregates, out)


def summary_table(aggs: Sequence[Aggregate], metric: str) -> str:
    """Mean [min, max] of ``metric``, one row per group and one column per series."""
    rows = [a for a in aggs if a.metric == metric]
    groups = list(dict.fromkeys(_group(a.cell) for a in rows))
    series = list(dict.fromkeys(_series(a.cell) for a in rows))
    cell = {(_group(a.cell), _series(a.cell)): f"{a.mean:.2f} [{a.min:.2f}, {a.max:.2f}]" for a in rows}
    width = max([len(s) for s in series] + [len(v) for v in cell.values()] + [8])
    lines = [metric, "group".ljust(10) + "".join(s.rjust(width + 2) for s in series)]
    for g in groups:
        lines.append(g.ljust(10) + "".join(cell.get((g, s), "-").rjust(width + 2) for s in series))
    return "\n".join(lines)
