"""Rider tolerance to pooling delay under social-distancing sensitivity.

The acceptance probability decays exponentially in delay, amplified by the
sensitivity `s`:

    T(delay) = exp(-(delay / tau0) * (1 + kappa * s))

so T(0) = 1, and raising either delay or s lowers acceptance.  A profile with
tau0 = inf accepts everything and serves as the "tolerance off" baseline.
"""

import math

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class ToleranceProfile:
    tau0: float = 900.0
    kappa: float = 2.0
    s: float = 0.0

    def __post_init__(self):
        if not self.tau0 > 0.0:
            raise ValueError(f"tau0 must be positive, got {self.tau0}")
        if self.kappa < 0.0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if not 0.0 <= self.s <= 1.0:
            raise ValueError(f"s must lie in [0, 1], got {self.s}")

    @classmethod
    def off(cls):
        """Sentinel that accepts every delay with probability 1."""
        return cls(tau0=math.inf, kappa=0.0, s=0.0)

    def with_sensitivity(self, s):
        return replace(self, s=s)


def tolerance(delay, profile: ToleranceProfile) -> float:
    """Probability that a rider accepts `delay` seconds of extra time."""
    if delay < 0.0:
        raise ValueError(f"delay must be >= 0, got {delay}")
    return math.exp(-(delay / profile.tau0) * (1.0 + profile.kappa * profile.s))


def accepts(delay, profile: ToleranceProfile, rng) -> bool:
    """One stochastic accept/reject draw from a seeded generator."""
    return rng.random() < tolerance(delay, profile)


def rejection_cost(delays, profile: ToleranceProfile) -> float:
    """Expected number of rejecting riders: sum of (1 - T(delay_i))."""
    return sum(1.0 - tolerance(d, profile) for d in delays)


def filter_with_draws(solution, graph, profile: ToleranceProfile, draws) -> "MatchingSolution":
    """Dissolve pooled groups whose riders reject their delays.

    `draws` maps trip_id -> a fixed uniform(0,1) value, so acceptance is
    monotone in the acceptance probability: common draws across sensitivity
    levels make the carpooling trend in s noise-free.  A group survives only
    if every rider's draw falls below their tolerance.
    """
    from .baselines import MatchingSolution, matching_value

    groups = []
    routes = {}
    for group in solution.groups:
        route = solution.routes[group] if solution.routes else graph.group_route(group)
        keep = len(group) == 1 or all(
            draws[tid] < tolerance(max(0.0, route.per_rider_delay[tid]), profile) for tid in group
        )
        if keep:
            groups.append(group)
            routes[group] = route
        else:
            for tid in group:
                singleton = (tid,)
                groups.append(singleton)
                routes[singleton] = graph.group_route(singleton)
    groups = tuple(sorted(groups))
    return MatchingSolution(
        groups=groups,
        objective_value=matching_value(graph, groups),
        routes=routes,
    )


def apply_tolerance_filter(solution, graph, profile: ToleranceProfile, rng) -> "MatchingSolution":
    """Sequential-draw variant of filter_with_draws (one draw per trip, sorted order)."""
    trip_ids = sorted(tid for group in solution.groups for tid in group)
    draws = {tid: rng.random() for tid in trip_ids}
    return filter_with_draws(solution, graph, profile, draws)


@dataclass(frozen=True)
class SweepCell:
    """Mean/stddev of every report metric for one (objective, s) setting."""

    objective: "Objective"
    s: float
    stats: dict  # metric name -> (mean, stddev)


def sensitivity_sweep(scenario, s_values, objectives, runs_per_cell, seed) -> list:
    """Matching quality across social-distance sensitivity levels.

    For each run a fresh seeded scenario is generated, matched once per
    objective, then filtered at every s with common per-trip draws; each
    (objective, s) cell reports the mean and stddev of all metrics over runs.
    When the reward's social penalty weight is positive the policy is
    retrained per cell because s then feeds back into training.
    """
    from dataclasses import replace as dc_replace

    from . import metrics as metrics_mod
    from . import pipeline

    s_values = list(s_values)
    objectives = list(objectives)
    if not all(0.0 <= s <= 1.0 for s in s_values):
        raise ValueError("s_values must lie in [0, 1]")
    if runs_per_cell < 1:
        raise ValueError("runs_per_cell must be >= 1")

    samples = {(obj, s): {name: [] for name in metrics_mod.METRIC_NAMES} for obj in objectives for s in s_values}
    for run in range(runs_per_cell):
        run_cfg = dc_replace(scenario, seed=int(np.random.SeedSequence([seed, run]).generate_state(1)[0]))
        net, trips = pipeline.generate_scenario(run_cfg)
        features = pipeline.embed_trips(trips, run_cfg)
        draws = {
            t.trip_id: float(np.random.default_rng([seed, run, t.trip_id]).random()) for t in trips
        }
        for obj_index, obj in enumerate(objectives):
            graph = solution = None
            if scenario.social_penalty_weight <= 0.0:
                graph, solution = pipeline.match_scenario(net, trips, features, run_cfg, objective=obj)
            for s_index, s in enumerate(s_values):
                profile = scenario.tolerance.with_sensitivity(s)
                if scenario.social_penalty_weight > 0.0:
                    cell_seed = int(
                        np.random.SeedSequence([seed, run, obj_index, s_index]).generate_state(1)[0]
                    )
                    cell_cfg = dc_replace(run_cfg, seed=cell_seed)
                    graph, solution = pipeline.match_scenario(
                        net, trips, features, cell_cfg, objective=obj, profile=profile
                    )
                filtered = filter_with_draws(solution, graph, profile, draws)
                report = metrics_mod.compute_report(
                    filtered,
                    metrics_mod.build_outcomes(filtered, graph.trips, scenario.factors),
                    scenario.factors,
                )
                for name in metrics_mod.METRIC_NAMES:
                    samples[(obj, s)][name].append(getattr(report, name))

    cells = []
    for obj in objectives:
        for s in s_values:
            stats = {}
            for name in metrics_mod.METRIC_NAMES:
                values = np.array(samples[(obj, s)][name], dtype=np.float64)
                stats[name] = (float(values.mean()), float(values.std()))
            cells.append(SweepCell(objective=obj, s=s, stats=stats))
    return cells


def write_sweep(cells, path):
    """`S <objective> <s> <metric> <mean> <stddev>` rows, one per metric per cell."""
    with open(path, "w") as fh:
        for cell in cells:
            for name, (mean, std) in cell.stats.items():
                fh.write(f"S {cell.objective.value} {cell.s:g} {name} {mean:.9g} {std:.9g}\n")


def read_sweep(path) -> list:
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if fields[0] != "S" or len(fields) != 6:
                raise ValueError(f"{path}:{lineno}: unrecognized sweep record {line!r}")
            rows.append((fields[1], float(fields[2]), fields[3], float(fields[4]), float(fields[5])))
    return rows
