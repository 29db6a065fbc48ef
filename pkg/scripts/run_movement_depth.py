"""CPN deaths and evacuation time against movement depth, 120 evacuees."""

from _common import run_scenario

if __name__ == "__main__":
    run_scenario("movement_depth.cfg", ("deaths", "avg_evac_time_s"), __doc__)
