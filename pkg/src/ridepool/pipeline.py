"""End-to-end pipeline stages behind the CLI.

Each stage reads the flat-file artifacts of earlier stages and writes its
own, so `gen -> graph -> embed -> train -> match -> evaluate` is fully
file-driven; `sweep` runs in memory.  All stages rewrite the run manifest
(config echo + version + seed) and are byte-deterministic for a fixed config.
"""

import os

import numpy as np

from . import __version__
from . import baselines
from . import embedding as embedding_mod
from . import metrics as metrics_mod
from . import policy as policy_mod
from . import tolerance as tolerance_mod
from .geo import read_network, write_network
from .scenario import ScenarioConfig, config_to_ini, generate_scenario, validate_config
from .shareability import (
    Objective,
    build_shareability_graph,
    read_graph,
    read_trips,
    write_graph,
    write_trips,
)

NETWORK_FILE = "network.txt"
TRIPS_FILE = "trips.txt"
GRAPH_FILE = "graph.txt"
FEATURES_FILE = "features.txt"
POLICY_FILE = "policy.txt"
MATCHING_FILE = "matching.txt"
REPORT_CSV_FILE = "metrics.csv"
REPORT_JSON_FILE = "report.json"
SWEEP_FILE = "sweep.txt"
MANIFEST_FILE = "manifest.txt"

STAGES = ("gen", "graph", "embed", "train", "match", "evaluate", "sweep")


def _artifact(out_dir, name, producer):
    path = os.path.join(out_dir, name)
    if not os.path.exists(path):
        raise FileNotFoundError(f"missing artifact {path}; run `ridepool {producer}` first")
    return path


def write_manifest(cfg: ScenarioConfig, out_dir):
    with open(os.path.join(out_dir, MANIFEST_FILE), "w") as fh:
        fh.write(f"# ridepool {__version__} run manifest\n")
        fh.write(f"# seed = {cfg.seed}\n\n")
        fh.write(config_to_ini(cfg))


def embed_trips(trips, cfg: ScenarioConfig):
    """User features over a grid sized to cover every trip endpoint."""
    points = [p for t in trips for p in (t.origin_point, t.dest_point)]
    grid = embedding_mod.grid_covering(points, cfg.grid_cell_deg)
    return embedding_mod.compute_user_features(trips, grid, cfg.embedding)


def reward_spec(cfg: ScenarioConfig, objective=None, profile=None) -> policy_mod.RewardSpec:
    objective = objective or cfg.objective
    if cfg.social_penalty_weight > 0.0:
        return policy_mod.RewardSpec(
            objective=objective,
            social_penalty_weight=cfg.social_penalty_weight,
            profile=profile or cfg.active_tolerance(),
        )
    return policy_mod.RewardSpec(objective=objective)


def train_scenario(graph, features, cfg: ScenarioConfig, objective=None, profile=None):
    spec = reward_spec(cfg, objective=objective, profile=profile)
    params, history = policy_mod.train(
        graph,
        features,
        spec,
        capacity=cfg.capacity,
        cfg=cfg.ppo,
        n_updates=cfg.train_updates,
        hidden=cfg.policy_hidden,
    )
    return params, history


def match_scenario(net, trips, features, cfg: ScenarioConfig, objective=None, profile=None):
    """Build the graph, train per config, and greedy-decode a matching."""
    objective = objective or cfg.objective
    graph = build_shareability_graph(net, trips, objective, cfg.constraints)
    params, _ = train_scenario(graph, features, cfg, objective=objective, profile=profile)
    spec = reward_spec(cfg, objective=objective, profile=profile)
    solution = policy_mod.match_all(graph, features, params, spec, capacity=cfg.capacity)
    return graph, solution


def write_matching(solution, path):
    """`M <group_id> <trip_id,...> <total_distance_m> <total_time_s>`."""
    with open(path, "w") as fh:
        for gid, group in enumerate(solution.groups):
            route = solution.routes[group]
            ids = ",".join(str(t) for t in group)
            fh.write(f"M {gid} {ids} {route.total_distance:.6f} {route.total_time:.6f}\n")


def read_matching(path):
    groups = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if fields[0] != "M" or len(fields) != 5:
                raise ValueError(f"{path}:{lineno}: unrecognized matching record {line!r}")
            groups.append(tuple(int(t) for t in fields[2].split(",")))
    return groups


def stage_gen(cfg: ScenarioConfig, out_dir):
    net, trips = generate_scenario(cfg)
    write_network(net, os.path.join(out_dir, NETWORK_FILE))
    write_trips(trips, os.path.join(out_dir, TRIPS_FILE))


def _load_net_trips(cfg, out_dir):
    net = read_network(_artifact(out_dir, NETWORK_FILE, "gen"))
    trips = read_trips(_artifact(out_dir, TRIPS_FILE, "gen"), net)
    return net, trips


def stage_graph(cfg: ScenarioConfig, out_dir):
    net, trips = _load_net_trips(cfg, out_dir)
    graph = build_shareability_graph(net, trips, cfg.objective, cfg.constraints)
    write_graph(graph, os.path.join(out_dir, GRAPH_FILE))


def stage_embed(cfg: ScenarioConfig, out_dir):
    net, trips = _load_net_trips(cfg, out_dir)
    features = embed_trips(trips, cfg)
    embedding_mod.write_features(features, os.path.join(out_dir, FEATURES_FILE))


def _load_graph_features(cfg, out_dir):
    net, trips = _load_net_trips(cfg, out_dir)
    graph = read_graph(_artifact(out_dir, GRAPH_FILE, "graph"), net, trips, cfg.objective)
    features = embedding_mod.read_features(_artifact(out_dir, FEATURES_FILE, "embed"))
    users = {t.user_id for t in trips}
    missing = sorted(users - set(features))
    if missing:
        raise ValueError(f"features file does not cover users {missing}")
    return net, trips, graph, features


def stage_train(cfg: ScenarioConfig, out_dir):
    _, _, graph, features = _load_graph_features(cfg, out_dir)
    params, _ = train_scenario(graph, features, cfg)
    policy_mod.write_policy(params, os.path.join(out_dir, POLICY_FILE))


def stage_match(cfg: ScenarioConfig, out_dir):
    _, _, graph, features = _load_graph_features(cfg, out_dir)
    params = policy_mod.read_policy(_artifact(out_dir, POLICY_FILE, "train"))
    spec = reward_spec(cfg)
    solution = policy_mod.match_all(graph, features, params, spec, capacity=cfg.capacity)
    if cfg.tolerance_enabled:
        rng = np.random.default_rng([cfg.seed, 7001])  # separate stream from demand/training
        solution = tolerance_mod.apply_tolerance_filter(solution, graph, cfg.active_tolerance(), rng)
    write_matching(solution, os.path.join(out_dir, MATCHING_FILE))


def stage_evaluate(cfg: ScenarioConfig, out_dir):
    net, trips = _load_net_trips(cfg, out_dir)
    groups = read_matching(_artifact(out_dir, MATCHING_FILE, "match"))
    graph = read_graph(_artifact(out_dir, GRAPH_FILE, "graph"), net, trips, cfg.objective)
    groups = baselines.canonical_groups(groups)
    baselines.check_partition(graph, groups, capacity=cfg.capacity)
    routes = {g: graph.group_route(g) for g in groups}
    solution = baselines.MatchingSolution(
        groups=groups,
        objective_value=baselines.matching_value(graph, groups),
        routes=routes,
    )
    outcomes = metrics_mod.build_outcomes(solution, graph.trips, cfg.factors)
    report = metrics_mod.compute_report(solution, outcomes, cfg.factors)
    metrics_mod.write_report_csv(report, os.path.join(out_dir, REPORT_CSV_FILE))
    metrics_mod.write_report_json(report, os.path.join(out_dir, REPORT_JSON_FILE))
    return report


def stage_sweep(cfg: ScenarioConfig, out_dir):
    cells = tolerance_mod.sensitivity_sweep(
        cfg,
        s_values=cfg.sweep_s_values,
        objectives=cfg.sweep_objectives,
        runs_per_cell=cfg.sweep_runs_per_cell,
        seed=cfg.seed,
    )
    tolerance_mod.write_sweep(cells, os.path.join(out_dir, SWEEP_FILE))
    return cells


_STAGE_FUNCS = {
    "gen": stage_gen,
    "graph": stage_graph,
    "embed": stage_embed,
    "train": stage_train,
    "match": stage_match,
    "evaluate": stage_evaluate,
    "sweep": stage_sweep,
}


def run_pipeline(cfg: ScenarioConfig, out_dir, stages):
    """Run the named stages in pipeline order, writing the manifest once."""
    validate_config(cfg)
    os.makedirs(out_dir, exist_ok=True)
    write_manifest(cfg, out_dir)
    order = [s for s in STAGES if s in stages]
    if not order:
        raise ValueError(f"no valid stages in {stages}")
    for name in order:
        _STAGE_FUNCS[name](cfg, out_dir)


def objective_report(cfg: ScenarioConfig, objectives=None):
    """One evaluation per objective on a common scenario, for side-by-side
    comparison of the indicator patterns."""
    objectives = objectives or [Objective.DISTANCE, Objective.TIME, Objective.VEHICLE]
    net, trips = generate_scenario(cfg)
    features = embed_trips(trips, cfg)
    reports = {}
    for objective in objectives:
        graph, solution = match_scenario(net, trips, features, cfg, objective=objective)
        outcomes = metrics_mod.build_outcomes(solution, graph.trips, cfg.factors)
        reports[objective] = metrics_mod.compute_report(solution, outcomes, cfg.factors)
    return reports


def format_objective_report(reports) -> str:
    """Indicator x objective table in plain text."""
    objectives = list(reports)
    header = "indicator".ljust(18) + "".join(o.value.rjust(14) for o in objectives)
    lines = [header]
    for name in metrics_mod.METRIC_NAMES:
        row = name.ljust(18) + "".join(f"{getattr(reports[o], name):14.4f}" for o in objectives)
        lines.append(row)
    return "\n".join(lines)
