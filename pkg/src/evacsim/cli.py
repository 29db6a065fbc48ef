"""Command line entry point: ``evacsim run|sweep|validate``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .building import BuildingError, load_building, validate_building
from .config import ConfigError, SweepAxes, load_config, parse_seeds, with_cpn
from .harness import Sweep, run_sweep, trials_csv
from .sim import Simulation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRIAL = 3

_CPN_FLAGS = {
    "drift_prefire": "drift_prefire",
    "drift_fire": "drift_fire",
    "sp_warmup": "sp_budget_per_node",
    "sp_period_s": "sp_period_s",
    "table_size": "table_size",
    "route_timeout_s": "route_timeout",
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evacsim", description="Building evacuation simulator with CPN routing.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    for name, help_ in (("run", "run the base scenario over its seeds"), ("sweep", "run every cell of the sweep axes")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--seeds", type=parse_seeds, help="e.g. 1..10 or 1,4,7")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", type=Path, help="output directory for CSV files")
        sp.add_argument("--drift-prefire", type=float)
        sp.add_argument("--drift-fire", type=float)
        sp.add_argument("--sp-warmup", type=int)
        sp.add_argument("--sp-period-s", type=float)
        sp.add_argument("--table-size", type=int)
        sp.add_argument("--route-timeout-s", type=float)
        if name == "run":
            sp.add_argument("--dump-rnn", action="store_true", help="write final RNN weights per seed (needs --out)")

    v = sub.add_parser("validate", help="check a building file")
    v.add_argument("--building", required=True, type=Path)
    return p


def _validate(path: Path) -> int:
    try:
        graph = load_building(path.read_text(encoding="utf-8"))
        validate_building(graph)
    except (OSError, BuildingError) as exc:
        print(f"invalid building: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{graph.name}: {len(graph.nodes)} nodes, {len(graph.edges)} edges, exits {list(graph.exits)}")
    return EXIT_OK


def _dump_rnn(cfg, graph, seeds, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for seed in seeds:
        sim = Simulation(cfg, graph, seed)
        sim.run()
        if sim.network is None:
            continue
        lines = ["goal,node,i,j,w_plus,w_minus,q_i"]
        for goal in sim.network.goals:
            for row in sim.network.dump_rnn_rows(goal):
                lines.append(f"{goal.value}," + ",".join(repr(x) for x in row))
        (out / f"rnn_seed{seed}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "validate":
        return _validate(args.building)

    try:
        cfg, axes = load_config(args.config)
        overrides = {_CPN_FLAGS[k]: v for k, v in vars(args).items() if k in _CPN_FLAGS and v is not None}
        if overrides:
            cfg = with_cpn(cfg, **overrides)
        graph = cfg.load_graph()
        validate_building(graph)
        cfg.cpn.check_floors(graph)
    except (OSError, ConfigError, BuildingError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "run":
        axes = SweepAxes()
    sweep = Sweep(cfg, axes, args.seeds, args.out)
    result = run_sweep(sweep, graph, workers=max(1, args.workers))
    if args.out is None:
        sys.stdout.write(trials_csv(sorted(result.trials, key=lambda t: (t.cell, t.seed))))
    for t in result.failed:
        print(f"trial failed: {t.cell.label} seed {t.seed}: {t.error}", file=sys.stderr)
    if args.command == "run" and getattr(args, "dump_rnn", False):
        if args.out is None:
            print("--dump-rnn needs --out", file=sys.stderr)
            return EXIT_CONFIG
        _dump_rnn(cfg, graph, sweep.seed_list, args.out)
    return EXIT_TRIAL if result.failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
