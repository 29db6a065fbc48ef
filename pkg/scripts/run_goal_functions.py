"""Evacuation time, energy and health for each CPN goal across densities."""

from _common import run_scenario

if __name__ == "__main__":
    run_scenario("goal_functions.cfg", ("avg_evac_time_s", "total_energy", "avg_health"), __doc__)
