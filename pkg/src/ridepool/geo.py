"""Synthetic road networks, coordinate snapping, and shortest-path routing.

All distances downstream (solo routes, shared routes, savings weights) come
from this module.  Networks are immutable after construction; shortest-path
queries are memoized per origin, so repeated pair evaluations are cheap.
"""

import heapq
import math

from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_000.0
METERS_PER_DEGREE = EARTH_RADIUS_M * math.pi / 180.0


class NoRouteError(Exception):
    """No path exists between the requested nodes."""


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class Route:
    """A path through the network; distance and time are sums over its edges."""

    nodes: tuple
    distance: float
    time: float


def great_circle_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Haversine distance in meters (Earth radius 6,371,000 m)."""
    phi_a = math.radians(a.lat)
    phi_b = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi_a) * math.cos(phi_b) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


class RoadNetwork:
    """Geographic graph with per-edge length (m) and travel time (s).

    Undirected by default.  Shortest paths minimize distance; travel time is
    accumulated along the distance-optimal path rather than optimized
    separately.
    """

    def __init__(self, nodes, edges, directed=False):
        self.nodes = dict(sorted(nodes.items()))
        self.directed = directed
        self.edges = []
        adjacency = {nid: [] for nid in self.nodes}
        attrs = {}
        for u, v, length, time in edges:
            if u not in self.nodes or v not in self.nodes:
                raise ValueError(f"edge ({u}, {v}) references an unknown node")
            if length <= 0.0:
                raise ValueError(f"edge ({u}, {v}) has non-positive length {length}")
            if time <= 0.0:
                raise ValueError(f"edge ({u}, {v}) has non-positive travel time {time}")
            length, time = float(length), float(time)
            self.edges.append((u, v, length, time))
            adjacency[u].append((v, length, time))
            attrs.setdefault((u, v), (length, time))
            if not directed:
                adjacency[v].append((u, length, time))
                attrs.setdefault((v, u), (length, time))
        self._adjacency = {nid: tuple(sorted(near)) for nid, near in adjacency.items()}
        self._edge_attrs = attrs
        self._sssp = {}

    def __len__(self):
        return len(self.nodes)

    def neighbors(self, node_id):
        return self._adjacency[node_id]

    def edge_between(self, u, v):
        """(length, time) of the edge u->v, or None."""
        return self._edge_attrs.get((u, v))

    def snap_to_node(self, p: GeoPoint) -> int:
        """Nearest node by great-circle distance; ties go to the lowest id."""
        if not self.nodes:
            raise ValueError("cannot snap onto an empty network")
        best_id, best_d = None, math.inf
        for nid, q in self.nodes.items():  # ascending id order
            d = great_circle_distance(p, q)
            if d < best_d:
                best_id, best_d = nid, d
        return best_id

    def _single_source(self, origin):
        cached = self._sssp.get(origin)
        if cached is not None:
            return cached
        if origin not in self.nodes:
            raise KeyError(f"unknown node {origin}")
        dist = {origin: 0.0}
        time = {origin: 0.0}
        pred = {origin: origin}
        done = set()
        heap = [(0.0, origin)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for v, length, t in self._adjacency[u]:
                nd = d + length
                if v not in dist or nd < dist[v]:
                    dist[v] = nd
                    time[v] = time[u] + t
                    pred[v] = u
                    heapq.heappush(heap, (nd, v))
        result = (dist, time, pred)
        self._sssp[origin] = result
        return result

    def distance_time(self, origin, dest):
        """Shortest-path (distance_m, time_s) without path reconstruction."""
        dist, time, _ = self._single_source(origin)
        if dest not in dist:
            raise NoRouteError(f"no route from node {origin} to node {dest}")
        return dist[dest], time[dest]

    def shortest_path(self, origin, dest) -> Route:
        """Minimum-distance route; origin == dest yields a zero-length route."""
        if dest not in self.nodes:
            raise KeyError(f"unknown node {dest}")
        dist, time, pred = self._single_source(origin)
        if dest not in dist:
            raise NoRouteError(f"no route from node {origin} to node {dest}")
        seq = [dest]
        while seq[-1] != origin:
            seq.append(pred[seq[-1]])
        seq.reverse()
        return Route(tuple(seq), dist[dest], time[dest])


def build_grid_network(rows, cols, spacing, speed, anchor=GeoPoint(0.0, 0.0)) -> RoadNetwork:
    """Lattice of rows x cols nodes with 4-neighbor edges.

    Every edge is `spacing` meters long and takes spacing/speed seconds.
    Node id at (row r, col c) is r*cols + c; coordinates step north/east from
    the anchor so great-circle distances approximate the lattice spacing.
    """
    if rows < 1 or cols < 1:
        raise ValueError("grid needs at least one row and one column")
    if spacing <= 0.0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    if speed <= 0.0:
        raise ValueError(f"speed must be positive, got {speed}")
    dlat = spacing / METERS_PER_DEGREE
    dlon = spacing / (METERS_PER_DEGREE * math.cos(math.radians(anchor.lat)))
    nodes = {}
    for r in range(rows):
        for c in range(cols):
            nodes[r * cols + c] = GeoPoint(anchor.lat + r * dlat, anchor.lon + c * dlon)
    edge_time = spacing / speed
    edges = []
    for r in range(rows):
        for c in range(cols):
            nid = r * cols + c
            if c + 1 < cols:
                edges.append((nid, nid + 1, spacing, edge_time))
            if r + 1 < rows:
                edges.append((nid, nid + cols, spacing, edge_time))
    return RoadNetwork(nodes, edges)


def write_network(net: RoadNetwork, path):
    """Line format: `N <id> <lat> <lon>` and `E <from> <to> <length_m> <time_s>`."""
    with open(path, "w") as fh:
        for nid, p in net.nodes.items():
            fh.write(f"N {nid} {p.lat:.10f} {p.lon:.10f}\n")
        for u, v, length, time in net.edges:
            fh.write(f"E {u} {v} {length:.6f} {time:.6f}\n")


def read_network(path, directed=False) -> RoadNetwork:
    nodes = {}
    edges = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if fields[0] == "N" and len(fields) == 4:
                nodes[int(fields[1])] = GeoPoint(float(fields[2]), float(fields[3]))
            elif fields[0] == "E" and len(fields) == 5:
                edges.append((int(fields[1]), int(fields[2]), float(fields[3]), float(fields[4])))
            else:
                raise ValueError(f"{path}:{lineno}: unrecognized network record {line!r}")
    return RoadNetwork(nodes, edges, directed=directed)
