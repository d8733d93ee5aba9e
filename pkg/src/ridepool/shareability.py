"""Shareability graph over trip requests.

Trips are nodes.  Two trips are joined when they pass the social proximity
gate (origins and destinations each within a radius of one another) and the
departure-gap gate, and pooling them actually saves something.  Edge weights
depend on the build objective:

* ``vehicle``  - every kept edge weighs 2 (one pooled ride covers two trips);
* ``distance`` - meters saved: solo_a + solo_b - shared;
* ``time``     - seconds saved, same shape.
"""

import itertools
import logging

from dataclasses import dataclass
from enum import Enum

from .geo import GeoPoint, NoRouteError, RoadNetwork, Route, great_circle_distance

log = logging.getLogger(__name__)

DEFAULT_RADIUS_M = 3000.0
DEFAULT_MAX_DEPARTURE_GAP_S = 600.0


class Objective(str, Enum):
    VEHICLE = "vehicle"
    DISTANCE = "distance"
    TIME = "time"

    @classmethod
    def from_string(cls, name):
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown objective {name!r}; expected one of distance, time, vehicle"
            ) from None


@dataclass(frozen=True)
class PairingConstraints:
    radius_m: float = DEFAULT_RADIUS_M
    max_departure_gap_s: float = DEFAULT_MAX_DEPARTURE_GAP_S

    def __post_init__(self):
        if self.radius_m <= 0.0:
            raise ValueError(f"radius_m must be positive, got {self.radius_m}")
        if self.max_departure_gap_s < 0.0:
            raise ValueError(f"max_departure_gap_s must be >= 0, got {self.max_departure_gap_s}")


@dataclass(frozen=True)
class TripRequest:
    """One user's travel demand plus their cached solo route."""

    trip_id: int
    user_id: int
    origin: int
    dest: int
    origin_point: GeoPoint
    dest_point: GeoPoint
    desired_departure: float
    solo_route: Route

    def __post_init__(self):
        if self.origin == self.dest:
            raise ValueError(f"trip {self.trip_id}: origin and destination are the same node")


def make_trip(net: RoadNetwork, trip_id, user_id, origin_point, dest_point, desired_departure):
    """Snap the request endpoints to the network and route the solo trip."""
    origin = net.snap_to_node(origin_point)
    dest = net.snap_to_node(dest_point)
    if origin == dest:
        raise ValueError(f"trip {trip_id}: endpoints snap to the same node {origin}")
    return TripRequest(
        trip_id=trip_id,
        user_id=user_id,
        origin=origin,
        dest=dest,
        origin_point=origin_point,
        dest_point=dest_point,
        desired_departure=float(desired_departure),
        solo_route=net.shortest_path(origin, dest),
    )


@dataclass(frozen=True)
class SharedRoute:
    """A vehicle route serving several riders' pickups and dropoffs.

    ``ordering`` holds ("P"|"D", trip_id) stops.  The vehicle leaves the first
    stop at the latest desired departure among its riders, so the earlier
    riders' wait shows up as delay.  Detour is in-vehicle distance minus the
    rider's solo distance; delay is door-to-door time (from their own desired
    departure) minus their solo time.
    """

    ordering: tuple
    total_distance: float
    total_time: float
    per_rider_delay: dict
    per_rider_detour: dict


@dataclass(frozen=True)
class ShareabilityEdge:
    trip_a: int
    trip_b: int
    weight: float
    shared: SharedRoute


def social_feasible(a: TripRequest, b: TripRequest, radius=DEFAULT_RADIUS_M) -> bool:
    """Both origin-origin and destination-destination within `radius` (inclusive)."""
    return (
        great_circle_distance(a.origin_point, b.origin_point) <= radius
        and great_circle_distance(a.dest_point, b.dest_point) <= radius
    )


def temporal_feasible(a: TripRequest, b: TripRequest, max_departure_gap=DEFAULT_MAX_DEPARTURE_GAP_S) -> bool:
    return abs(a.desired_departure - b.desired_departure) <= max_departure_gap


def _evaluate_order(net: RoadNetwork, trips_by_id, ordering) -> SharedRoute:
    """Route a stop sequence leg by leg and derive per-rider delay/detour."""
    start = max(t.desired_departure for t in trips_by_id.values())
    cum_d = 0.0
    cum_t = 0.0
    at_pickup = {}
    delay = {}
    detour = {}

    def stop_node(stop):
        kind, tid = stop
        trip = trips_by_id[tid]
        return trip.origin if kind == "P" else trip.dest

    prev = ordering[0]
    kind, tid = prev
    at_pickup[tid] = (0.0, 0.0)
    for stop in ordering[1:]:
        d, t = net.distance_time(stop_node(prev), stop_node(stop))
        cum_d += d
        cum_t += t
        kind, tid = stop
        if kind == "P":
            at_pickup[tid] = (cum_d, cum_t)
        else:
            trip = trips_by_id[tid]
            pick_d, _pick_t = at_pickup[tid]
            detour[tid] = (cum_d - pick_d) - trip.solo_route.distance
            delay[tid] = (start + cum_t) - trip.desired_departure - trip.solo_route.time
        prev = stop
    return SharedRoute(
        ordering=tuple(ordering),
        total_distance=cum_d,
        total_time=cum_t,
        per_rider_delay=delay,
        per_rider_detour=detour,
    )


# The four genuinely-shared stop orders for a pair: both riders are on board
# together for some leg (pickups happen before either dropoff).
_PAIR_ORDER_TEMPLATES = (
    (("P", 0), ("P", 1), ("D", 0), ("D", 1)),
    (("P", 0), ("P", 1), ("D", 1), ("D", 0)),
    (("P", 1), ("P", 0), ("D", 1), ("D", 0)),
    (("P", 1), ("P", 0), ("D", 0), ("D", 1)),
)


def best_shared_route(net: RoadNetwork, a: TripRequest, b: TripRequest) -> SharedRoute:
    """Minimum-total-distance shared route over the four pair stop orders."""
    trips = {a.trip_id: a, b.trip_id: b}
    ids = (a.trip_id, b.trip_id)
    best = None
    for template in _PAIR_ORDER_TEMPLATES:
        ordering = tuple((kind, ids[slot]) for kind, slot in template)
        candidate = _evaluate_order(net, trips, ordering)
        if best is None or candidate.total_distance < best.total_distance:
            best = candidate
    return best


def route_for_group(net: RoadNetwork, trips) -> SharedRoute:
    """Best vehicle route for 1..4 riders.

    Pairs use the four shared orders; larger groups enumerate every stop
    order with each pickup before its own dropoff ((2n)!/2^n orders, 2520 at
    n=4).  Singletons reduce to the solo route.
    """
    trips = sorted(trips, key=lambda t: t.trip_id)
    if len(trips) == 1:
        t = trips[0]
        return SharedRoute(
            ordering=(("P", t.trip_id), ("D", t.trip_id)),
            total_distance=t.solo_route.distance,
            total_time=t.solo_route.time,
            per_rider_delay={t.trip_id: 0.0},
            per_rider_detour={t.trip_id: 0.0},
        )
    if len(trips) == 2:
        return best_shared_route(net, trips[0], trips[1])
    if len(trips) > 4:
        raise ValueError(f"group routing supports at most 4 riders, got {len(trips)}")
    by_id = {t.trip_id: t for t in trips}
    stops = [("P", t.trip_id) for t in trips] + [("D", t.trip_id) for t in trips]
    best = None
    for perm in itertools.permutations(stops):
        seen = set()
        valid = True
        for kind, tid in perm:
            if kind == "P":
                seen.add(tid)
            elif tid not in seen:
                valid = False
                break
        if not valid:
            continue
        candidate = _evaluate_order(net, by_id, perm)
        if best is None or candidate.total_distance < best.total_distance:
            best = candidate
    return best


def edge_weight(shared: SharedRoute, a: TripRequest, b: TripRequest, objective: Objective) -> float:
    if objective is Objective.VEHICLE:
        return 2.0
    if objective is Objective.DISTANCE:
        return a.solo_route.distance + b.solo_route.distance - shared.total_distance
    return a.solo_route.time + b.solo_route.time - shared.total_time


def group_savings(net: RoadNetwork, trips, objective: Objective, route: SharedRoute = None) -> float:
    """Objective value of pooling `trips` into one vehicle (0 for singletons)."""
    trips = sorted(trips, key=lambda t: t.trip_id)
    if len(trips) == 1:
        return 0.0
    if objective is Objective.VEHICLE:
        return 2.0 * (len(trips) - 1)
    if route is None:
        route = route_for_group(net, trips)
    if objective is Objective.DISTANCE:
        solo = sum(t.solo_route.distance for t in trips)
        return solo - route.total_distance
    solo = sum(t.solo_route.time for t in trips)
    return solo - route.total_time


class ShareabilityGraph:
    """Trips plus the feasible, beneficial pairings between them."""

    def __init__(self, net: RoadNetwork, trips, edges, objective: Objective):
        self.net = net
        trips = list(trips)
        self.trips = {t.trip_id: t for t in sorted(trips, key=lambda t: t.trip_id)}
        if len(self.trips) != len(trips):
            raise ValueError("duplicate trip_id in graph")
        self.objective = objective
        self.edges = {}
        adjacency = {tid: [] for tid in self.trips}
        for e in edges:
            a, b = min(e.trip_a, e.trip_b), max(e.trip_a, e.trip_b)
            if a == b:
                raise ValueError(f"self edge on trip {a}")
            if a not in self.trips or b not in self.trips:
                raise ValueError(f"edge ({a}, {b}) references an unknown trip")
            self.edges[(a, b)] = e
            adjacency[a].append(b)
            adjacency[b].append(a)
        self._adjacency = {tid: tuple(sorted(n)) for tid, n in adjacency.items()}
        self._group_routes = {}

    def __len__(self):
        return len(self.trips)

    def neighbors(self, trip_id):
        return self._adjacency[trip_id]

    def edge(self, a, b):
        return self.edges.get((min(a, b), max(a, b)))

    def group_route(self, group) -> SharedRoute:
        key = tuple(sorted(group))
        route = self._group_routes.get(key)
        if route is None:
            if len(key) == 2 and key in self.edges:
                route = self.edges[key].shared
            else:
                route = route_for_group(self.net, [self.trips[t] for t in key])
            self._group_routes[key] = route
        return route

    def group_value(self, group) -> float:
        """Savings of pooling `group` under this graph's objective.

        Pairs joined by an edge are worth exactly that edge's weight; larger
        groups are worth their re-routed savings.
        """
        key = tuple(sorted(group))
        if len(key) == 1:
            return 0.0
        if len(key) == 2 and key in self.edges:
            return self.edges[key].weight
        if self.objective is Objective.VEHICLE:
            return 2.0 * (len(key) - 1)
        trips = [self.trips[t] for t in key]
        return group_savings(self.net, trips, self.objective, route=self.group_route(key))


def build_shareability_graph(
    net: RoadNetwork,
    trips,
    objective: Objective = Objective.DISTANCE,
    constraints: PairingConstraints = PairingConstraints(),
) -> ShareabilityGraph:
    """Evaluate every unordered trip pair through the feasibility gates.

    A pair becomes an edge only when it saves distance (vehicle objective) or
    has strictly positive savings weight (distance/time objectives); pairs
    that pool without saving anything are dropped in every objective.
    """
    trips = sorted(trips, key=lambda t: t.trip_id)
    if not trips:
        raise ValueError("cannot build a shareability graph without trips")
    edges = []
    for a, b in itertools.combinations(trips, 2):
        if not social_feasible(a, b, constraints.radius_m):
            continue
        if not temporal_feasible(a, b, constraints.max_departure_gap_s):
            continue
        try:
            shared = best_shared_route(net, a, b)
        except NoRouteError as exc:
            log.warning("skipping pair (%s, %s): %s", a.trip_id, b.trip_id, exc)
            continue
        distance_saved = a.solo_route.distance + b.solo_route.distance - shared.total_distance
        weight = edge_weight(shared, a, b, objective)
        keep = distance_saved > 0.0 if objective is Objective.VEHICLE else weight > 0.0
        if keep:
            edges.append(ShareabilityEdge(a.trip_id, b.trip_id, weight, shared))
    return ShareabilityGraph(net, trips, edges, objective)


def write_trips(trips, path):
    """`T <trip_id> <user_id> <o_lat> <o_lon> <d_lat> <d_lon> <departure_s>`."""
    with open(path, "w") as fh:
        for t in sorted(trips, key=lambda t: t.trip_id):
            fh.write(
                f"T {t.trip_id} {t.user_id} "
                f"{t.origin_point.lat:.10f} {t.origin_point.lon:.10f} "
                f"{t.dest_point.lat:.10f} {t.dest_point.lon:.10f} "
                f"{t.desired_departure:.3f}\n"
            )


def read_trips(path, net: RoadNetwork):
    """Parse trip records and re-snap/re-route them on `net`."""
    trips = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if fields[0] != "T" or len(fields) != 8:
                raise ValueError(f"{path}:{lineno}: unrecognized trip record {line!r}")
            trips.append(
                make_trip(
                    net,
                    trip_id=int(fields[1]),
                    user_id=int(fields[2]),
                    origin_point=GeoPoint(float(fields[3]), float(fields[4])),
                    dest_point=GeoPoint(float(fields[5]), float(fields[6])),
                    desired_departure=float(fields[7]),
                )
            )
    return trips


def write_graph(graph: ShareabilityGraph, path):
    """`G <trip_a> <trip_b> <weight> <shared_distance_m> <shared_time_s>`."""
    with open(path, "w") as fh:
        for (a, b), e in sorted(graph.edges.items()):
            fh.write(
                f"G {a} {b} {e.weight:.6f} {e.shared.total_distance:.6f} {e.shared.total_time:.6f}\n"
            )


def read_graph(path, net: RoadNetwork, trips, objective: Objective) -> ShareabilityGraph:
    """Rebuild a graph from exported edges.

    Shared routes are re-derived on the network (the export keeps only the
    totals); the exported weight is kept as the edge weight.
    """
    by_id = {t.trip_id: t for t in trips}
    edges = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if fields[0] != "G" or len(fields) != 6:
                raise ValueError(f"{path}:{lineno}: unrecognized graph record {line!r}")
            a, b = int(fields[1]), int(fields[2])
            shared = best_shared_route(net, by_id[a], by_id[b])
            edges.append(ShareabilityEdge(a, b, float(fields[3]), shared))
    return ShareabilityGraph(net, trips, edges, objective)
