import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ridepool.geo import (
    EARTH_RADIUS_M,
    GeoPoint,
    NoRouteError,
    RoadNetwork,
    build_grid_network,
    great_circle_distance,
    read_network,
    write_network,
)

coords = st.builds(
    GeoPoint,
    lat=st.floats(min_value=-89.0, max_value=89.0),
    lon=st.floats(min_value=-179.0, max_value=179.0),
)


class TestGridConstruction:
    def test_2x2(self):
        net = build_grid_network(2, 2, 1000.0, 10.0)
        assert len(net.nodes) == 4
        assert len(net.edges) == 4
        assert all(length == 1000.0 and time == 100.0 for _, _, length, time in net.edges)

    def test_degenerate_1x1(self):
        net = build_grid_network(1, 1, 1000.0, 10.0)
        assert len(net.nodes) == 1
        assert len(net.edges) == 0

    @pytest.mark.parametrize("rows,cols", [(3, 3), (1, 4), (5, 2), (4, 4)])
    def test_edge_count_matches_enumeration(self, rows, cols):
        # independent count: one edge per adjacent lattice pair
        expected = sum(
            1
            for r in range(rows)
            for c in range(cols)
            for dr, dc in ((0, 1), (1, 0))
            if r + dr < rows and c + dc < cols
        )
        net = build_grid_network(rows, cols, 500.0, 10.0)
        assert len(net.edges) == expected
        assert expected == 2 * rows * cols - rows - cols

    @pytest.mark.parametrize("spacing,speed", [(0.0, 10.0), (-5.0, 10.0), (100.0, 0.0), (100.0, -1.0)])
    def test_bad_config_rejected(self, spacing, speed):
        with pytest.raises(ValueError):
            build_grid_network(2, 2, spacing, speed)

    def test_adjacent_nodes_spacing_matches_haversine(self):
        net = build_grid_network(3, 3, 1000.0, 10.0)
        d_ns = great_circle_distance(net.nodes[0], net.nodes[3])
        d_ew = great_circle_distance(net.nodes[0], net.nodes[1])
        assert d_ns == pytest.approx(1000.0, rel=1e-6)
        assert d_ew == pytest.approx(1000.0, rel=1e-6)


class TestGreatCircle:
    def test_identity(self):
        p = GeoPoint(12.34, 56.78)
        assert great_circle_distance(p, p) == 0.0

    def test_one_degree_on_equator(self):
        # closed form: R * pi / 180 per degree along the equator
        expected = EARTH_RADIUS_M * math.pi / 180.0
        d = great_circle_distance(GeoPoint(0.0, 0.0), GeoPoint(0.0, 1.0))
        assert abs(d - expected) < 0.1
        assert abs(d - 111194.9) < 0.1

    @given(coords, coords)
    def test_symmetric_and_nonnegative(self, a, b):
        d = great_circle_distance(a, b)
        assert d >= 0.0
        assert d == great_circle_distance(b, a)

    def test_invalid_coordinates_rejected(self):
        with pytest.raises(ValueError):
            GeoPoint(91.0, 0.0)
        with pytest.raises(ValueError):
            GeoPoint(0.0, 181.0)


class TestSnap:
    def test_exact_node(self, grid3):
        for nid, p in grid3.nodes.items():
            assert grid3.snap_to_node(p) == nid

    def test_tie_breaks_to_lowest_id(self):
        # nodes 3 and 7 share coordinates: any query ties, 3 must win
        shared = GeoPoint(0.01, 0.01)
        nodes = {3: shared, 7: shared, 1: GeoPoint(0.5, 0.5)}
        net = RoadNetwork(nodes, [])
        assert net.snap_to_node(GeoPoint(0.0, 0.0)) == 3

    def test_outside_bounding_box_snaps_to_corner(self, grid3):
        probe = GeoPoint(-0.05, -0.07)  # far south-west of the lattice
        best = min(
            grid3.nodes, key=lambda nid: (great_circle_distance(probe, grid3.nodes[nid]), nid)
        )
        assert grid3.snap_to_node(probe) == best == 0

    def test_empty_network_rejected(self):
        net = RoadNetwork({}, [])
        with pytest.raises(ValueError):
            net.snap_to_node(GeoPoint(0.0, 0.0))


def enumerate_paths(net, origin, dest, seen=None):
    """All simple paths with their distance (test-only oracle)."""
    seen = seen or (origin,)
    if origin == dest:
        yield seen, 0.0
        return
    for v, length, _ in net.neighbors(origin):
        if v in seen:
            continue
        for path, d in enumerate_paths(net, v, dest, seen + (v,)):
            yield path, d + length


class TestShortestPath:
    def test_identity(self, grid3):
        route = grid3.shortest_path(4, 4)
        assert route.nodes == (4,)
        assert route.distance == 0.0
        assert route.time == 0.0

    def test_corner_to_corner_matches_enumeration(self, grid3):
        route = grid3.shortest_path(0, 8)
        best = min(d for _, d in enumerate_paths(grid3, 0, 8))
        assert route.distance == best == 4000.0
        assert route.time == 400.0

    def test_disconnected_raises(self):
        nodes = {0: GeoPoint(0.0, 0.0), 1: GeoPoint(0.0, 0.01), 2: GeoPoint(0.0, 0.02)}
        net = RoadNetwork(nodes, [(0, 1, 1000.0, 100.0)])
        with pytest.raises(NoRouteError):
            net.shortest_path(0, 2)

    def test_route_distance_is_sum_of_edges(self, grid3):
        for origin, dest in [(0, 8), (2, 6), (1, 7)]:
            route = grid3.shortest_path(origin, dest)
            total = sum(
                grid3.edge_between(u, v)[0] for u, v in zip(route.nodes, route.nodes[1:])
            )
            assert route.distance == total

    def test_undirected_symmetry(self, grid3):
        for a, b in itertools.combinations(range(9), 2):
            assert grid3.shortest_path(a, b).distance == grid3.shortest_path(b, a).distance

    @pytest.mark.parametrize("rows,cols", [(3, 3), (4, 4), (5, 5)])
    def test_triangle_inequality_exhaustive(self, rows, cols):
        net = build_grid_network(rows, cols, 700.0, 10.0)
        n = rows * cols
        dist = {
            (a, b): net.distance_time(a, b)[0] for a in range(n) for b in range(n)
        }
        for a, b, c in itertools.product(range(n), repeat=3):
            assert dist[(a, c)] <= dist[(a, b)] + dist[(b, c)] + 1e-9

    def test_time_accumulates_along_distance_optimal_path(self):
        # short-but-slow edge must win on distance, dragging its time along
        nodes = {i: GeoPoint(0.0, 0.001 * i) for i in range(3)}
        edges = [(0, 1, 100.0, 500.0), (0, 2, 500.0, 10.0), (2, 1, 500.0, 10.0)]
        net = RoadNetwork(nodes, edges)
        route = net.shortest_path(0, 1)
        assert route.distance == 100.0
        assert route.time == 500.0


class TestNetworkIO:
    def test_round_trip(self, grid3, tmp_path):
        path = tmp_path / "net.txt"
        write_network(grid3, path)
        loaded = read_network(path)
        assert set(loaded.nodes) == set(grid3.nodes)
        assert len(loaded.edges) == len(grid3.edges)
        for (u, v, length, time), (u2, v2, l2, t2) in zip(grid3.edges, loaded.edges):
            assert (u, v) == (u2, v2)
            assert length == pytest.approx(l2, abs=1e-6)
            assert time == pytest.approx(t2, abs=1e-6)
        assert loaded.shortest_path(0, 8).distance == grid3.shortest_path(0, 8).distance

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "net.txt"
        path.write_text("N 0 0.0 0.0\nX what\n")
        with pytest.raises(ValueError):
            read_network(path)

    def test_bad_edges_rejected(self):
        nodes = {0: GeoPoint(0.0, 0.0), 1: GeoPoint(0.0, 0.01)}
        with pytest.raises(ValueError):
            RoadNetwork(nodes, [(0, 2, 100.0, 10.0)])
        with pytest.raises(ValueError):
            RoadNetwork(nodes, [(0, 1, -5.0, 10.0)])
        with pytest.raises(ValueError):
            RoadNetwork(nodes, [(0, 1, 100.0, 0.0)])
