"""Seeded synthetic scenarios and the key=value config file behind the CLI.

Demand is a hotspot mixture: a few seeded hotspot nodes attract origins and
destinations with normal jitter around them.  One seed drives the whole run;
the embedding and policy seeds are derived from it so a config file fully
determines every artifact.
"""

import configparser
import io
import math

from dataclasses import dataclass, field, replace

import numpy as np

from .embedding import EmbeddingConfig
from .geo import GeoPoint, METERS_PER_DEGREE, build_grid_network
from .metrics import CostFactors
from .policy import PPOConfig
from .shareability import Objective, PairingConstraints, make_trip
from .tolerance import ToleranceProfile


class ConfigError(ValueError):
    """A scenario config failed validation; the message names the field."""


@dataclass(frozen=True)
class NetworkConfig:
    rows: int = 10
    cols: int = 10
    spacing_m: float = 500.0
    speed_mps: float = 10.0
    anchor_lat: float = 0.0
    anchor_lon: float = 0.0


@dataclass(frozen=True)
class DemandConfig:
    n_trips: int = 50
    n_users: int = 30
    hotspots: int = 4
    hotspot_spread_m: float = 800.0
    departure_window_s: float = 3600.0


@dataclass(frozen=True)
class ScenarioConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    demand: DemandConfig = field(default_factory=DemandConfig)
    constraints: PairingConstraints = field(default_factory=PairingConstraints)
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    ppo: PPOConfig = field(default_factory=PPOConfig)
    tolerance: ToleranceProfile = field(default_factory=ToleranceProfile)
    factors: CostFactors = field(default_factory=CostFactors)
    objective: Objective = Objective.DISTANCE
    capacity: int = 2
    seed: int = 0
    train_updates: int = 50
    policy_hidden: int = 64
    grid_cell_deg: float = 0.02
    tolerance_enabled: bool = False
    social_penalty_weight: float = 0.0
    sweep_s_values: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    sweep_objectives: tuple = (Objective.DISTANCE, Objective.TIME, Objective.VEHICLE)
    sweep_runs_per_cell: int = 3

    def active_tolerance(self) -> ToleranceProfile:
        return self.tolerance if self.tolerance_enabled else ToleranceProfile.off()


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    net, dem = cfg.network, cfg.demand
    if net.rows < 1 or net.cols < 1:
        raise ConfigError(f"network.rows/cols must be >= 1, got {net.rows}x{net.cols}")
    if net.spacing_m <= 0.0:
        raise ConfigError(f"network.spacing_m must be positive, got {net.spacing_m}")
    if net.speed_mps <= 0.0:
        raise ConfigError(f"network.speed_mps must be positive, got {net.speed_mps}")
    if dem.n_trips < 0:
        raise ConfigError(f"demand.n_trips must be >= 0, got {dem.n_trips}")
    if dem.n_trips > 0 and dem.n_users < 1:
        raise ConfigError(f"demand.n_users must be >= 1, got {dem.n_users}")
    if dem.n_trips > 0 and net.rows * net.cols < 2:
        raise ConfigError("demand.n_trips > 0 needs a network with at least 2 nodes")
    if not 1 <= dem.hotspots <= net.rows * net.cols:
        raise ConfigError(f"demand.hotspots must lie in [1, {net.rows * net.cols}], got {dem.hotspots}")
    if dem.hotspot_spread_m < 0.0:
        raise ConfigError(f"demand.hotspot_spread_m must be >= 0, got {dem.hotspot_spread_m}")
    if dem.departure_window_s < 0.0:
        raise ConfigError(f"demand.departure_window_s must be >= 0, got {dem.departure_window_s}")
    if not 2 <= cfg.capacity <= 4:
        raise ConfigError(f"run.capacity must lie in [2, 4], got {cfg.capacity}")
    if cfg.train_updates < 0:
        raise ConfigError(f"run.train_updates must be >= 0, got {cfg.train_updates}")
    if cfg.policy_hidden < 1:
        raise ConfigError(f"ppo.hidden must be >= 1, got {cfg.policy_hidden}")
    if cfg.grid_cell_deg <= 0.0:
        raise ConfigError(f"embedding.cell_size_deg must be positive, got {cfg.grid_cell_deg}")
    if cfg.social_penalty_weight < 0.0:
        raise ConfigError(f"tolerance.social_penalty_weight must be >= 0, got {cfg.social_penalty_weight}")
    if cfg.sweep_runs_per_cell < 1:
        raise ConfigError(f"sweep.runs_per_cell must be >= 1, got {cfg.sweep_runs_per_cell}")
    if any(not 0.0 <= s <= 1.0 for s in cfg.sweep_s_values):
        raise ConfigError(f"sweep.s_values must lie in [0, 1], got {cfg.sweep_s_values}")
    return cfg


def generate_scenario(cfg: ScenarioConfig):
    """Build the grid network and seeded demand.

    Draw order per trip: user id, origin hotspot + jitter, then destination
    hotspot + jitter redrawn until it snaps to a different node (bounded
    retries), then the departure time.
    """
    validate_config(cfg)
    net_cfg = cfg.network
    anchor = GeoPoint(net_cfg.anchor_lat, net_cfg.anchor_lon)
    net = build_grid_network(net_cfg.rows, net_cfg.cols, net_cfg.spacing_m, net_cfg.speed_mps, anchor)
    dem = cfg.demand
    rng = np.random.default_rng(cfg.seed)
    if dem.n_trips == 0:
        return net, []
    node_ids = np.array(sorted(net.nodes))
    hotspot_ids = rng.choice(node_ids, size=dem.hotspots, replace=False)
    lat_per_m = 1.0 / METERS_PER_DEGREE
    lon_per_m = 1.0 / (METERS_PER_DEGREE * math.cos(math.radians(anchor.lat)))

    def draw_point():
        hotspot = net.nodes[int(hotspot_ids[int(rng.integers(dem.hotspots))])]
        jitter_lat, jitter_lon = rng.normal(0.0, dem.hotspot_spread_m, size=2)
        lat = min(max(hotspot.lat + jitter_lat * lat_per_m, -90.0), 90.0)
        lon = min(max(hotspot.lon + jitter_lon * lon_per_m, -180.0), 180.0)
        return GeoPoint(lat, lon)

    trips = []
    for trip_id in range(dem.n_trips):
        user_id = int(rng.integers(dem.n_users))
        origin_point = draw_point()
        origin_node = net.snap_to_node(origin_point)
        dest_point = None
        for _ in range(100):
            candidate = draw_point()
            if net.snap_to_node(candidate) != origin_node:
                dest_point = candidate
                break
        if dest_point is None:
            raise ConfigError(
                "demand generation cannot find a destination distinct from the origin; "
                "add hotspots or spread"
            )
        departure = float(rng.uniform(0.0, dem.departure_window_s))
        trips.append(make_trip(net, trip_id, user_id, origin_point, dest_point, departure))
    return net, trips


_SECTION_FIELDS = {
    "network": ("rows", "cols", "spacing_m", "speed_mps", "anchor_lat", "anchor_lon"),
    "demand": ("n_trips", "n_users", "hotspots", "hotspot_spread_m", "departure_window_s"),
    "constraints": ("radius_m", "max_departure_gap_s"),
    "run": ("objective", "capacity", "seed", "train_updates"),
    "embedding": ("dim", "layers", "activation", "init_scale", "convergence_eps", "cell_size_deg"),
    "ppo": (
        "clip_epsilon",
        "learning_rate",
        "gamma",
        "epochs_per_update",
        "rollouts_per_update",
        "entropy_coeff",
        "hidden",
    ),
    "tolerance": ("enabled", "tau0_s", "kappa", "s", "social_penalty_weight"),
    "factors": ("emission_g_per_km", "fuel_l_per_km", "fare_per_km"),
    "sweep": ("s_values", "objectives", "runs_per_cell"),
}


def _get(parser, section, key, cast, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r}") from exc


def load_config(path=None, text=None) -> ScenarioConfig:
    """Parse the key=value section file; unknown sections or keys are errors."""
    parser = configparser.ConfigParser()
    if text is not None:
        parser.read_string(text)
    else:
        with open(path) as fh:
            parser.read_file(fh)
    for section in parser.sections():
        if section not in _SECTION_FIELDS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser.options(section):
            if key not in _SECTION_FIELDS[section]:
                raise ConfigError(f"unknown config key {section}.{key}")

    network = NetworkConfig(
        rows=_get(parser, "network", "rows", int, 10),
        cols=_get(parser, "network", "cols", int, 10),
        spacing_m=_get(parser, "network", "spacing_m", float, 500.0),
        speed_mps=_get(parser, "network", "speed_mps", float, 10.0),
        anchor_lat=_get(parser, "network", "anchor_lat", float, 0.0),
        anchor_lon=_get(parser, "network", "anchor_lon", float, 0.0),
    )
    demand = DemandConfig(
        n_trips=_get(parser, "demand", "n_trips", int, 50),
        n_users=_get(parser, "demand", "n_users", int, 30),
        hotspots=_get(parser, "demand", "hotspots", int, 4),
        hotspot_spread_m=_get(parser, "demand", "hotspot_spread_m", float, 800.0),
        departure_window_s=_get(parser, "demand", "departure_window_s", float, 3600.0),
    )
    try:
        constraints = PairingConstraints(
            radius_m=_get(parser, "constraints", "radius_m", float, 3000.0),
            max_departure_gap_s=_get(parser, "constraints", "max_departure_gap_s", float, 600.0),
        )
    except ValueError as exc:
        raise ConfigError(f"constraints: {exc}") from exc
    seed = _get(parser, "run", "seed", int, 0)
    try:
        embedding = EmbeddingConfig(
            dim=_get(parser, "embedding", "dim", int, 16),
            layers=_get(parser, "embedding", "layers", int, 3),
            activation=_get(parser, "embedding", "activation", str, "relu"),
            init_seed=seed,
            init_scale=_get(parser, "embedding", "init_scale", float, 0.1),
            convergence_eps=_get(parser, "embedding", "convergence_eps", float, 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"embedding: {exc}") from exc
    try:
        ppo = PPOConfig(
            clip_epsilon=_get(parser, "ppo", "clip_epsilon", float, 0.2),
            learning_rate=_get(parser, "ppo", "learning_rate", float, 3e-3),
            gamma=_get(parser, "ppo", "gamma", float, 1.0),
            epochs_per_update=_get(parser, "ppo", "epochs_per_update", int, 4),
            rollouts_per_update=_get(parser, "ppo", "rollouts_per_update", int, 8),
            entropy_coeff=_get(parser, "ppo", "entropy_coeff", float, 0.01),
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(f"ppo: {exc}") from exc
    try:
        profile = ToleranceProfile(
            tau0=_get(parser, "tolerance", "tau0_s", float, 900.0),
            kappa=_get(parser, "tolerance", "kappa", float, 2.0),
            s=_get(parser, "tolerance", "s", float, 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"tolerance: {exc}") from exc
    try:
        factors = CostFactors(
            emission_g_per_km=_get(parser, "factors", "emission_g_per_km", float, 192.0),
            fuel_l_per_km=_get(parser, "factors", "fuel_l_per_km", float, 0.08),
            fare_per_km=_get(parser, "factors", "fare_per_km", float, 2.5),
        )
    except ValueError as exc:
        raise ConfigError(f"factors: {exc}") from exc

    def parse_s_values(raw):
        return tuple(float(v) for v in raw.replace(",", " ").split())

    def parse_objectives(raw):
        return tuple(Objective.from_string(v) for v in raw.replace(",", " ").split())

    try:
        objective = Objective.from_string(_get(parser, "run", "objective", str, "distance"))
        sweep_objectives = _get(
            parser,
            "sweep",
            "objectives",
            parse_objectives,
            (Objective.DISTANCE, Objective.TIME, Objective.VEHICLE),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    cfg = ScenarioConfig(
        network=network,
        demand=demand,
        constraints=constraints,
        embedding=embedding,
        ppo=ppo,
        tolerance=profile,
        factors=factors,
        objective=objective,
        capacity=_get(parser, "run", "capacity", int, 2),
        seed=seed,
        train_updates=_get(parser, "run", "train_updates", int, 50),
        policy_hidden=_get(parser, "ppo", "hidden", int, 64),
        grid_cell_deg=_get(parser, "embedding", "cell_size_deg", float, 0.02),
        tolerance_enabled=_get(parser, "tolerance", "enabled", bool, False),
        social_penalty_weight=_get(parser, "tolerance", "social_penalty_weight", float, 0.0),
        sweep_s_values=_get(parser, "sweep", "s_values", parse_s_values, (0.0, 0.25, 0.5, 0.75, 1.0)),
        sweep_objectives=sweep_objectives,
        sweep_runs_per_cell=_get(parser, "sweep", "runs_per_cell", int, 3),
    )
    return validate_config(cfg)


def config_to_ini(cfg: ScenarioConfig) -> str:
    """Canonical config echo (all values explicit) for the run manifest."""
    parser = configparser.ConfigParser()
    parser["network"] = {
        "rows": str(cfg.network.rows),
        "cols": str(cfg.network.cols),
        "spacing_m": repr(cfg.network.spacing_m),
        "speed_mps": repr(cfg.network.speed_mps),
        "anchor_lat": repr(cfg.network.anchor_lat),
        "anchor_lon": repr(cfg.network.anchor_lon),
    }
    parser["demand"] = {
        "n_trips": str(cfg.demand.n_trips),
        "n_users": str(cfg.demand.n_users),
        "hotspots": str(cfg.demand.hotspots),
        "hotspot_spread_m": repr(cfg.demand.hotspot_spread_m),
        "departure_window_s": repr(cfg.demand.departure_window_s),
    }
    parser["constraints"] = {
        "radius_m": repr(cfg.constraints.radius_m),
        "max_departure_gap_s": repr(cfg.constraints.max_departure_gap_s),
    }
    parser["run"] = {
        "objective": cfg.objective.value,
        "capacity": str(cfg.capacity),
        "seed": str(cfg.seed),
        "train_updates": str(cfg.train_updates),
    }
    parser["embedding"] = {
        "dim": str(cfg.embedding.dim),
        "layers": str(cfg.embedding.layers),
        "activation": cfg.embedding.activation,
        "init_scale": repr(cfg.embedding.init_scale),
        "convergence_eps": repr(cfg.embedding.convergence_eps),
        "cell_size_deg": repr(cfg.grid_cell_deg),
    }
    parser["ppo"] = {
        "clip_epsilon": repr(cfg.ppo.clip_epsilon),
        "learning_rate": repr(cfg.ppo.learning_rate),
        "gamma": repr(cfg.ppo.gamma),
        "epochs_per_update": str(cfg.ppo.epochs_per_update),
        "rollouts_per_update": str(cfg.ppo.rollouts_per_update),
        "entropy_coeff": repr(cfg.ppo.entropy_coeff),
        "hidden": str(cfg.policy_hidden),
    }
    parser["tolerance"] = {
        "enabled": str(cfg.tolerance_enabled).lower(),
        "tau0_s": repr(cfg.tolerance.tau0),
        "kappa": repr(cfg.tolerance.kappa),
        "s": repr(cfg.tolerance.s),
        "social_penalty_weight": repr(cfg.social_penalty_weight),
    }
    parser["factors"] = {
        "emission_g_per_km": repr(cfg.factors.emission_g_per_km),
        "fuel_l_per_km": repr(cfg.factors.fuel_l_per_km),
        "fare_per_km": repr(cfg.factors.fare_per_km),
    }
    parser["sweep"] = {
        "s_values": ", ".join(f"{s:g}" for s in cfg.sweep_s_values),
        "objectives": ", ".join(o.value for o in cfg.sweep_objectives),
        "runs_per_cell": str(cfg.sweep_runs_per_cell),
    }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def with_overrides(cfg: ScenarioConfig, seed=None, objective=None) -> ScenarioConfig:
    """Apply CLI-level overrides; the run seed also reseeds embedding and PPO."""
    if seed is not None:
        cfg = replace(
            cfg,
            seed=seed,
            embedding=replace(cfg.embedding, init_seed=seed),
            ppo=replace(cfg.ppo, seed=seed),
        )
    if objective is not None:
        cfg = replace(cfg, objective=Objective.from_string(objective))
    return validate_config(cfg)
