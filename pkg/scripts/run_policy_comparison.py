"""Survivors and congestion for autonomous, Dijkstra and CPN routing at four densities."""

from _common import run_scenario

if __name__ == "__main__":
    run_scenario("policy_comparison.cfg", ("survivor_fraction", "congestion"), __doc__)
