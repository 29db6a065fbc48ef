"""Shared argument handling for the experiment scripts."""

import argparse
from pathlib import Path

from evacsim.config import load_config, parse_seeds
from evacsim.harness import Sweep, run_sweep, summary_table

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def run_scenario(name: str, metrics: tuple[str, ...], description: str) -> None:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--config", type=Path, default=SCENARIOS / name)
    p.add_argument("--seeds", type=parse_seeds)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("results") / Path(name).stem)
    args = p.parse_args()

    cfg, axes = load_config(args.config)
    result = run_sweep(Sweep(cfg, axes, args.seeds, args.out), workers=args.workers)
    for t in result.failed:
        print(f"failed: {t.cell.label} seed {t.seed}: {t.error}")
    for m in metrics:
        print(summary_table(result.aggregates, m))
        print()
    print(f"wrote {args.out}/")
