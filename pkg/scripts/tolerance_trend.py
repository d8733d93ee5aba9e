#!/usr/bin/env python3
"""Carpooling-rate trend across social-distance sensitivity levels.

Runs the sensitivity sweep on seeded scenarios and prints the mean of each
indicator per (objective, s) cell, plus a quick check that the carpooling
rate declines as sensitivity grows.

Usage: python scripts/tolerance_trend.py [--runs N] [--trips N] [--seed S]
"""

import argparse

from ridepool.scenario import DemandConfig, NetworkConfig, ScenarioConfig
from ridepool.shareability import Objective
from ridepool.tolerance import ToleranceProfile, sensitivity_sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--runs", type=int, default=20)
    parser.add_argument("--trips", type=int, default=100)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--tau0", type=float, default=900.0)
    parser.add_argument("--kappa", type=float, default=2.0)
    args = parser.parse_args()

    cfg = ScenarioConfig(
        network=NetworkConfig(rows=8, cols=8, spacing_m=600.0),
        demand=DemandConfig(
            n_trips=args.trips,
            n_users=max(2, args.trips * 3 // 5),
            hotspots=4,
            hotspot_spread_m=700.0,
            departure_window_s=1200.0,
        ),
        tolerance=ToleranceProfile(tau0=args.tau0, kappa=args.kappa),
        train_updates=0,
    )
    s_values = [0.0, 0.25, 0.5, 0.75, 1.0]
    cells = sensitivity_sweep(cfg, s_values, [Objective.DISTANCE], args.runs, seed=args.seed)

    print(f"{'s':>6} {'carpool':>9} {'occupancy':>10} {'delay_min':>10} {'detour_m':>9}")
    for cell in cells:
        print(
            f"{cell.s:6.2f} {cell.stats['carpooling_rate'][0]:9.3f} "
            f"{cell.stats['occupancy_rate'][0]:10.3f} {cell.stats['avg_delay_min'][0]:10.3f} "
            f"{cell.stats['avg_detour_m'][0]:9.1f}"
        )
    rates = [cell.stats["carpooling_rate"][0] for cell in cells]
    print("carpooling rate non-increasing in s:", all(b <= a + 1e-12 for a, b in zip(rates, rates[1:])))


if __name__ == "__main__":
    main()
