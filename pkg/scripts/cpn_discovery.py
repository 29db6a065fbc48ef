"""Route quality after smart-packet warm-up on the default building.

For each seed and warm-up budget, reports how many routing tables are
non-empty and how the best stored route compares with the shortest path.
"""

import argparse
import math
import statistics

from evacsim.building import exit_tree, load_default_building, path_length
from evacsim.config import parse_seeds
from evacsim.cpn import CpnNetwork, CpnParams
from evacsim.goals import GoalKind
from evacsim.sim import trial_rng


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=parse_seeds, default=tuple(range(1, 11)))
    p.add_argument("--budgets", default="1,2,5,10,20")
    p.add_argument("--drift", type=float, default=CpnParams().drift_prefire)
    args = p.parse_args()

    graph = load_default_building()
    tree = exit_tree(graph)
    sources = [n.id for n in graph.nodes if not n.is_exit]
    budgets = sorted(int(b) for b in args.budgets.split(","))
    print("seed,budget,nonempty,exact_fraction,mean_ratio,max_ratio")
    for seed in args.seeds:
        net = CpnNetwork(graph, CpnParams(drift_prefire=args.drift))
        rng = trial_rng(seed, 1)
        done = 0
        for b in budgets:
            net.warm_up(b - done, rng)
            done = b
            ratios = []
            for n in sources:
                best = net.best_route(n, GoalKind.DISTANCE)
                ratios.append(math.inf if best is None else path_length(graph, best) / tree.dist[n])
            finite = [r for r in ratios if math.isfinite(r)]
            exact = sum(r <= 1 + 1e-9 for r in ratios) / len(ratios)
            print(
                f"{seed},{b},{len(finite)}/{len(sources)},{exact:.3f},"
                f"{statistics.fmean(finite):.3f},{max(ratios):.3f}"
            )


if __name__ == "__main__":
    main()
