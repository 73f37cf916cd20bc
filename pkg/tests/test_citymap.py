import math
import random

import pytest

from dtnsec.citymap import (
    CityMap,
    GridOverlay,
    MapFormatError,
    MapValidationError,
    NoPathError,
    generate_grid_city,
    grid_square_to_pois,
    load_map,
    loads_map,
    shortest_path,
)


def random_small_city(rng, n_points=8, extra_edges=4):
    """Random connected single-layer map with distinct integer coordinates."""
    coords = rng.sample([(x, y) for x in range(20) for y in range(20)], n_points)
    city = CityMap("rand", 19.0, 19.0)
    city.add_layer("l", ["pedestrian"])
    for pid, (x, y) in enumerate(coords):
        city.add_point("l", pid, float(x), float(y))
    order = list(range(n_points))
    rng.shuffle(order)
    present = set()
    for i in range(1, n_points):
        a, b = order[i], rng.choice(order[:i])
        city.add_segment("l", a, b)
        present.add((min(a, b), max(a, b)))
    for _ in range(extra_edges):
        a, b = rng.sample(range(n_points), 2)
        if (min(a, b), max(a, b)) not in present:
            city.add_segment("l", a, b)
            present.add((min(a, b), max(a, b)))
    city.validate()
    return city


def enumerate_min_path(city, layer_ids, src, dst):
    """Exhaustive simple-path enumeration; independent of the Dijkstra code."""
    adj = {}
    for lid in layer_ids:
        for seg in city.layers[lid].segments:
            adj.setdefault(seg.a, {})[seg.b] = seg.length
            adj.setdefault(seg.b, {})[seg.a] = seg.length
    best = [math.inf]

    def walk(u, used, total):
        if total >= best[0]:
            return
        if u == dst:
            best[0] = total
            return
        for v, w in adj.get(u, {}).items():
            if v not in used:
                walk(v, used | {v}, total + w)

    walk(src, {src}, 0.0)
    return best[0]


# -- generation -----------------------------------------------------------


def test_grid_city_counts():
    city = generate_grid_city(10, 100.0)
    assert len(city.points) == 100
    assert len(city.layers["streets"].segments) == 2 * 10 * 9
    city2 = generate_grid_city(2, 50.0)
    assert len(city2.points) == 4
    assert len(city2.layers["streets"].segments) == 4
    assert city2.width == 50.0 and city2.height == 50.0


def test_grid_city_two_layers_superset():
    city = generate_grid_city(10, 100.0, layers="two")
    streets = {s.key() for s in city.layers["streets"].segments}
    walkways = {s.key() for s in city.layers["walkways"].segments}
    assert streets < walkways
    assert len(walkways) == len(streets) + 9 * 9
    assert city.layer_set_for_class("car") == {"streets"}
    assert city.layer_set_for_class("pedestrian") == {"streets", "walkways"}


def test_grid_city_is_deterministic():
    a = generate_grid_city(5, 30.0, layers="two").to_text()
    b = generate_grid_city(5, 30.0, layers="two").to_text()
    assert a == b


def test_grid_city_rejects_bad_args():
    with pytest.raises(ValueError):
        generate_grid_city(1, 100.0)
    with pytest.raises(ValueError):
        generate_grid_city(4, 0.0)
    with pytest.raises(ValueError):
        generate_grid_city(4, 10.0, layers="nine")


# -- parsing --------------------------------------------------------------


def test_map_roundtrip():
    city = generate_grid_city(4, 25.0, layers="two")
    reparsed = loads_map(city.to_text())
    assert reparsed.name == city.name
    assert reparsed.width == city.width and reparsed.height == city.height
    assert set(reparsed.points) == set(city.points)
    for pid, p in city.points.items():
        q = reparsed.points[pid]
        assert (q.x, q.y, q.special, q.layer_ids) == (p.x, p.y, p.special, p.layer_ids)
    for lid, layer in city.layers.items():
        assert {s.key() for s in reparsed.layers[lid].segments} == \
            {s.key() for s in layer.segments}
        assert reparsed.layers[lid].accessible_by == layer.accessible_by


def test_map_parse_basic(tmp_path):
    text = (
        "# a comment\n"
        "MAP tiny 100.0 50.0\n"
        "\n"
        "LAYER l pedestrian,car\n"
        "P 0 0.0 0.0\n"
        "P 1 100.0 50.0 SPECIAL\n"
        "S 0 1\n"
    )
    city = loads_map(text)
    assert city.name == "tiny"
    assert city.special_weight == 1.0
    assert city.points[1].special
    assert city.layers["l"].accessible_by == {"pedestrian", "car"}
    path = tmp_path / "tiny.map"
    path.write_text(text)
    assert load_map(path).to_text() == city.to_text()


def test_map_parse_special_weight():
    text = "MAP w 10 10 3.0\nLAYER l pedestrian\nP 0 1 1\n"
    assert loads_map(text).special_weight == 3.0


def test_map_parse_errors():
    with pytest.raises(MapFormatError):
        loads_map("LAYER l pedestrian\n")
    with pytest.raises(MapFormatError):
        loads_map("MAP a 10 10\nMAP b 10 10\n")
    with pytest.raises(MapFormatError):
        loads_map("MAP a 10 10\nBOGUS 1\n")
    with pytest.raises(MapFormatError):
        loads_map("MAP a 10 10\nP 0 1 1\n")
    with pytest.raises(MapFormatError):
        loads_map("MAP a ten 10\n")
    with pytest.raises(MapFormatError):
        loads_map("")


def test_map_validation_errors():
    with pytest.raises(MapValidationError, match="dangling"):
        loads_map("MAP a 10 10\nLAYER l pedestrian\nP 0 1 1\nS 0 7\n")
    with pytest.raises(MapValidationError, match="outside"):
        loads_map("MAP a 10 10\nLAYER l pedestrian\nP 0 11 1\n")
    with pytest.raises(MapValidationError, match="disconnected"):
        loads_map("MAP a 10 10\nLAYER l pedestrian\nP 0 1 1\nP 1 2 2\n")
    with pytest.raises(MapValidationError, match="no points"):
        loads_map("MAP a 10 10\nLAYER l pedestrian\n")
    with pytest.raises(MapValidationError, match="zero length"):
        loads_map("MAP a 10 10\nLAYER l pedestrian\nP 0 1 1\nP 1 1 1\nS 0 1\n")
    with pytest.raises(MapValidationError, match="redeclared"):
        loads_map("MAP a 10 10\nLAYER l pedestrian\nP 0 1 1\nLAYER m car\nP 0 2 2\n")


def test_segment_lengths_are_euclidean():
    city = loads_map("MAP a 10 10\nLAYER l pedestrian\nP 0 0 0\nP 1 3 4\nS 0 1\n")
    assert city.layers["l"].segments[0].length == pytest.approx(5.0, abs=1e-6)


# -- shortest paths -------------------------------------------------------


def test_shortest_path_triangle():
    # Unequal weights: the two-hop route is shorter than the direct segment.
    text = ("MAP t 100 100\nLAYER l pedestrian\n"
            "P 0 0 0\nP 1 30 0\nP 2 30 40\n"
            "S 0 1\nS 1 2\nS 0 2\n")
    city = loads_map(text)
    path, length = shortest_path(city, {"l"}, 0, 2)
    assert path == [0, 2]
    assert length == pytest.approx(50.0)
    path2, length2 = shortest_path(city, {"l"}, 0, 1)
    assert path2 == [0, 1] and length2 == pytest.approx(30.0)


def test_shortest_path_matches_enumeration():
    rng = random.Random(42)
    for _ in range(25):
        city = random_small_city(rng)
        pids = city.layer_points({"l"})
        src, dst = rng.sample(pids, 2)
        path, length = shortest_path(city, {"l"}, src, dst)
        expected = enumerate_min_path(city, {"l"}, src, dst)
        assert length == pytest.approx(expected, rel=1e-9)
        # The reported path must be walkable and sum to the reported length.
        adj = city.adjacency({"l"})
        total = 0.0
        for a, b in zip(path, path[1:]):
            w = dict(adj[a]).get(b)
            assert w is not None
            total += w
        assert total == pytest.approx(length, rel=1e-9)
        assert path[0] == src and path[-1] == dst


def test_shortest_path_symmetric_lengths():
    rng = random.Random(7)
    for _ in range(10):
        city = random_small_city(rng)
        pids = city.layer_points({"l"})
        a, b = rng.sample(pids, 2)
        _, fwd = shortest_path(city, {"l"}, a, b)
        _, rev = shortest_path(city, {"l"}, b, a)
        assert fwd == pytest.approx(rev, rel=1e-12)


def test_shortest_path_tie_break_smallest_next_id():
    city = generate_grid_city(3, 100.0)
    path, length = shortest_path(city, {"streets"}, 0, 8)
    assert length == pytest.approx(400.0)
    assert path == [0, 1, 2, 5, 8]
    assert shortest_path(city, {"streets"}, 0, 8) == (path, length)


def test_shortest_path_same_point():
    city = generate_grid_city(2, 10.0)
    assert shortest_path(city, {"streets"}, 3, 3) == ([3], 0.0)


def test_no_path_across_disjoint_layers():
    text = ("MAP d 100 100\n"
            "LAYER a pedestrian\nP 0 0 0\nP 1 10 0\nS 0 1\n"
            "LAYER b car\nP 2 50 50\nP 3 60 50\nS 2 3\n")
    city = loads_map(text)
    with pytest.raises(NoPathError):
        shortest_path(city, {"a", "b"}, 0, 2)
    with pytest.raises(NoPathError):
        shortest_path(city, {"a"}, 0, 2)


def test_multi_layer_union_path():
    # A car-only shortcut is invisible to the pedestrian layer set.
    text = ("MAP u 100 100\n"
            "LAYER walk pedestrian\nP 0 0 0\nP 1 50 0\nP 2 100 0\nS 0 1\nS 1 2\n"
            "LAYER road car\nP 0 0 0\nP 2 100 0\nS 0 2\n")
    city = loads_map(text)
    _, walk_len = shortest_path(city, {"walk"}, 0, 2)
    _, both_len = shortest_path(city, {"walk", "road"}, 0, 2)
    assert walk_len == pytest.approx(100.0)
    assert both_len == pytest.approx(100.0)
    # Both routes tie at 100; the walk prefers the smallest next id.
    path, _ = shortest_path(city, {"walk", "road"}, 0, 2)
    assert path == [0, 1, 2]


# -- grid overlay ---------------------------------------------------------


def test_cell_of_covers_edges():
    ov = GridOverlay(4, 4)
    assert ov.cell_of(100.0, 100.0, 0.0, 0.0) == (0, 0)
    assert ov.cell_of(100.0, 100.0, 100.0, 100.0) == (3, 3)
    assert ov.cell_of(100.0, 100.0, 25.0, 0.0) == (0, 1)


def test_grid_square_points_inside():
    city = generate_grid_city(3, 100.0)  # points at 0, 100, 200 on both axes
    ov = GridOverlay(2, 2)
    # Brute-force membership oracle by index arithmetic.
    for row in range(2):
        for col in range(2):
            expected = sorted(
                pid for pid, p in city.points.items()
                if ov.cell_of(city.width, city.height, p.x, p.y) == (row, col))
            got = grid_square_to_pois(city, {"streets"}, ov, row, col)
            if expected:
                assert got == expected


def test_grid_square_empty_cell_nearest_tie():
    text = ("MAP e 100 100\nLAYER l pedestrian\n"
            "P 3 20 0\nP 5 80 0\nS 3 5\n")
    city = loads_map(text)
    ov = GridOverlay(1, 5)
    # Cell (0, 2) center is (50, 50): equidistant from 3 and 5, smaller id wins.
    assert grid_square_to_pois(city, {"l"}, ov, 0, 2) == [3]
    # Cell (0, 4) center is (90, 50): closest is 5.
    assert grid_square_to_pois(city, {"l"}, ov, 0, 4) == [5]


def test_grid_square_every_cell_nonempty():
    city = generate_grid_city(4, 100.0)
    ov = GridOverlay(7, 7)
    for row in range(7):
        for col in range(7):
            assert len(grid_square_to_pois(city, {"streets"}, ov, row, col)) >= 1


def test_grid_square_rejects_out_of_range_cell():
    city = generate_grid_city(3, 100.0)
    with pytest.raises(ValueError):
        grid_square_to_pois(city, {"streets"}, GridOverlay(2, 2), 2, 0)
