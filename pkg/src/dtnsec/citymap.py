"""City maps: multi-layer point/segment graphs with a grid overlay.

A map is a set of named layers over a shared point universe. Each layer is an
undirected segment graph accessible to a set of movement classes. Attackers
address locations through a rows x cols grid overlay on the bounding box.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field


class MapFormatError(ValueError):
    """Raised when a map document cannot be parsed."""


class MapValidationError(ValueError):
    """Raised when a parsed map violates a structural constraint."""


class NoPathError(ValueError):
    """Raised when two points are not connected on the requested layers."""


# Relative tolerance for comparing path lengths when walking shortest paths.
_LEN_EPS = 1e-9


@dataclass
class MapPoint:
    point_id: int
    x: float
    y: float
    special: bool = False
    layer_ids: set[str] = field(default_factory=set)


@dataclass(frozen=True)
class Segment:
    a: int
    b: int
    length: float

    def key(self) -> tuple[int, int]:
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)


@dataclass
class MapLayer:
    layer_id: str
    accessible_by: frozenset[str]
    segments: list[Segment] = field(default_factory=list)


@dataclass(frozen=True)
class GridOverlay:
    """Uniform rows x cols grid over a map's bounding box."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("overlay needs rows >= 1 and cols >= 1")

    def cell_of(self, width: float, height: float, x: float, y: float) -> tuple[int, int]:
        """Cell containing (x, y); points on the far edge map to the last cell."""
        col = min(int(x / (width / self.cols)), self.cols - 1)
        row = min(int(y / (height / self.rows)), self.rows - 1)
        return row, col

    def cell_center(self, width: float, height: float, row: int, col: int) -> tuple[float, float]:
        return ((col + 0.5) * width / self.cols, (row + 0.5) * height / self.rows)


class CityMap:
    """Validated multi-layer map with cached per-layer-set graphs."""

    def __init__(self, name: str, width: float, height: float,
                 special_weight: float = 1.0):
        self.name = name
        self.width = float(width)
        self.height = float(height)
        self.special_weight = float(special_weight)
        self.points: dict[int, MapPoint] = {}
        self.layers: dict[str, MapLayer] = {}
        self._adjacency_cache: dict[frozenset, dict] = {}
        self._points_cache: dict[frozenset, list[int]] = {}

    # -- construction -----------------------------------------------------

    def add_layer(self, layer_id: str, accessible_by) -> MapLayer:
        if layer_id in self.layers:
            raise MapValidationError(f"duplicate layer {layer_id!r}")
        layer = MapLayer(layer_id, frozenset(accessible_by))
        self.layers[layer_id] = layer
        return layer

    def add_point(self, layer_id: str, point_id: int, x: float, y: float,
                  special: bool = False) -> MapPoint:
        existing = self.points.get(point_id)
        if existing is not None:
            if existing.x != x or existing.y != y or existing.special != special:
                raise MapValidationError(
                    f"point {point_id} redeclared with different attributes")
            existing.layer_ids.add(layer_id)
            return existing
        point = MapPoint(point_id, float(x), float(y), special, {layer_id})
        self.points[point_id] = point
        return point

    def add_segment(self, layer_id: str, a: int, b: int) -> Segment:
        layer = self.layers[layer_id]
        for pid in (a, b):
            p = self.points.get(pid)
            if p is None or layer_id not in p.layer_ids:
                raise MapValidationError(
                    f"segment {a}-{b} in layer {layer_id!r} has dangling endpoint {pid}")
        if a == b:
            raise MapValidationError(f"segment {a}-{b} is a self loop")
        pa, pb = self.points[a], self.points[b]
        length = math.hypot(pa.x - pb.x, pa.y - pb.y)
        if length <= 0.0:
            raise MapValidationError(f"segment {a}-{b} has zero length")
        seg = Segment(a, b, length)
        layer.segments.append(seg)
        return seg

    def validate(self) -> None:
        if not self.name:
            raise MapValidationError("map name is empty")
        if self.width <= 0 or self.height <= 0:
            raise MapValidationError("map bounding box must have positive size")
        if self.special_weight <= 0:
            raise MapValidationError("special POI weight must be positive")
        if not self.layers:
            raise MapValidationError("map has no layers")
        for p in self.points.values():
            if not (0.0 <= p.x <= self.width and 0.0 <= p.y <= self.height):
                raise MapValidationError(
                    f"point {p.point_id} at ({p.x}, {p.y}) outside bounding box")
        for layer in self.layers.values():
            self._check_connected(layer)

    def _check_connected(self, layer: MapLayer) -> None:
        members = sorted(p.point_id for p in self.points.values()
                         if layer.layer_id in p.layer_ids)
        if not members:
            raise MapValidationError(f"layer {layer.layer_id!r} has no points")
        parent = {pid: pid for pid in members}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for seg in layer.segments:
            ra, rb = find(seg.a), find(seg.b)
            if ra != rb:
                parent[ra] = rb
        roots = {find(pid) for pid in members}
        if len(roots) > 1:
            raise MapValidationError(
                f"layer {layer.layer_id!r} is disconnected ({len(roots)} components)")

    # -- queries ----------------------------------------------------------

    def movement_classes(self) -> frozenset[str]:
        out = set()
        for layer in self.layers.values():
            out |= layer.accessible_by
        return frozenset(out)

    def layer_set_for_class(self, movement_class: str) -> frozenset[str]:
        ids = frozenset(l.layer_id for l in self.layers.values()
                        if movement_class in l.accessible_by)
        if not ids:
            raise MapValidationError(
                f"no layer accessible to movement class {movement_class!r}")
        return ids

    def layer_points(self, layer_ids) -> list[int]:
        """Sorted ids of points declared on any of the given layers."""
        key = frozenset(layer_ids)
        cached = self._points_cache.get(key)
        if cached is None:
            cached = sorted(p.point_id for p in self.points.values()
                            if p.layer_ids & key)
            self._points_cache[key] = cached
        return cached

    def adjacency(self, layer_ids) -> dict[int, tuple]:
        """Union graph of the given layers; neighbor lists sorted by id."""
        key = frozenset(layer_ids)
        cached = self._adjacency_cache.get(key)
        if cached is not None:
            return cached
        for lid in key:
            if lid not in self.layers:
                raise MapValidationError(f"unknown layer {lid!r}")
        edges = {}
        for lid in key:
            for seg in self.layers[lid].segments:
                edges.setdefault(seg.key(), seg.length)
        adj: dict[int, list] = {pid: [] for pid in self.layer_points(key)}
        for (a, b), w in edges.items():
            adj[a].append((b, w))
            adj[b].append((a, w))
        out = {pid: tuple(sorted(nbrs)) for pid, nbrs in adj.items()}
        self._adjacency_cache[key] = out
        return out

    # -- serialization ----------------------------------------------------

    def to_text(self) -> str:
        lines = []
        if self.special_weight != 1.0:
            lines.append(f"MAP {self.name} {self.width!r} {self.height!r} {self.special_weight!r}")
        else:
            lines.append(f"MAP {self.name} {self.width!r} {self.height!r}")
        for layer in self.layers.values():
            lines.append("")
            lines.append(f"LAYER {layer.layer_id} {','.join(sorted(layer.accessible_by))}")
            for pid in sorted(self.points):
                p = self.points[pid]
                if layer.layer_id not in p.layer_ids:
                    continue
                suffix = " SPECIAL" if p.special else ""
                lines.append(f"P {p.point_id} {p.x!r} {p.y!r}{suffix}")
            for seg in sorted(layer.segments, key=lambda s: s.key()):
                a, b = seg.key()
                lines.append(f"S {a} {b}")
        return "\n".join(lines) + "\n"


# -- path and overlay operations ------------------------------------------


def shortest_path(city: CityMap, layer_ids, src: int, dst: int) -> tuple[list[int], float]:
    """Shortest path on the union of the given layers.

    Returns (point id path, length). Among equal-length paths the walk takes
    the smallest next point id at every step, so the result is deterministic.
    """
    adj = city.adjacency(layer_ids)
    if src not in adj:
        raise NoPathError(f"point {src} not on layers {sorted(layer_ids)}")
    if dst not in adj:
        raise NoPathError(f"point {dst} not on layers {sorted(layer_ids)}")
    if src == dst:
        return [src], 0.0

    # Distances to dst, then a greedy walk from src along optimal moves.
    dist = {dst: 0.0}
    heap = [(0.0, dst)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, math.inf):
            continue
        for v, w in adj[u]:
            cand = d + w
            if cand < dist.get(v, math.inf):
                dist[v] = cand
                heapq.heappush(heap, (cand, v))
    if src not in dist:
        raise NoPathError(f"no path {src} -> {dst} on layers {sorted(layer_ids)}")

    path = [src]
    u = src
    while u != dst:
        du = dist[u]
        tol = _LEN_EPS * max(1.0, du)
        nxt = None
        for v, w in adj[u]:
            dv = dist.get(v)
            if dv is not None and abs(dv + w - du) <= tol:
                nxt = v
                break
        if nxt is None:  # defensive; cannot happen with exact relaxation
            raise NoPathError(f"path walk stuck at {u} toward {dst}")
        path.append(nxt)
        u = nxt
    return path, dist[src]


def grid_square_to_pois(city: CityMap, layer_ids, overlay: GridOverlay,
                        row: int, col: int) -> list[int]:
    """Map points addressed by a grid cell, for the given layers.

    All layer points inside the cell, sorted by id; if the cell is empty, the
    single layer point closest to the cell center (ties to the smallest id).
    """
    if not (0 <= row < overlay.rows and 0 <= col < overlay.cols):
        raise ValueError(f"cell ({row}, {col}) outside overlay {overlay.rows}x{overlay.cols}")
    pids = city.layer_points(layer_ids)
    if not pids:
        raise MapValidationError(f"layers {sorted(layer_ids)} have no points")
    inside = [pid for pid in pids
              if overlay.cell_of(city.width, city.height,
                                 city.points[pid].x, city.points[pid].y) == (row, col)]
    if inside:
        return inside
    cx, cy = overlay.cell_center(city.width, city.height, row, col)
    best = min(pids, key=lambda pid: ((city.points[pid].x - cx) ** 2
                                      + (city.points[pid].y - cy) ** 2, pid))
    return [best]


# -- generation and parsing -----------------------------------------------


def generate_grid_city(n: int, spacing: float, layers: str = "single",
                       name: str = "grid") -> CityMap:
    """Synthetic n x n lattice city.

    layers="single": one street layer carrying pedestrians and cars.
    layers="two": the street layer plus a pedestrian walkway layer that is a
    strict superset of the street segments (one diagonal per block).
    """
    if n < 2:
        raise ValueError("grid city needs n >= 2")
    if spacing <= 0:
        raise ValueError("grid city needs positive spacing")
    if layers not in ("single", "two"):
        raise ValueError(f"unknown layer spec {layers!r}")
    side = (n - 1) * spacing
    city = CityMap(name, side, side)

    def pid(i, j):
        return i * n + j

    layer_plans = [("streets", ("pedestrian", "car"), False)]
    if layers == "two":
        layer_plans.append(("walkways", ("pedestrian",), True))
    for layer_id, classes, diagonals in layer_plans:
        city.add_layer(layer_id, classes)
        for i in range(n):
            for j in range(n):
                city.add_point(layer_id, pid(i, j), j * spacing, i * spacing)
        for i in range(n):
            for j in range(n):
                if j + 1 < n:
                    city.add_segment(layer_id, pid(i, j), pid(i, j + 1))
                if i + 1 < n:
                    city.add_segment(layer_id, pid(i, j), pid(i + 1, j))
                if diagonals and i + 1 < n and j + 1 < n:
                    city.add_segment(layer_id, pid(i, j), pid(i + 1, j + 1))
    city.validate()
    return city


def loads_map(text: str) -> CityMap:
    """Parse a map document and validate it."""
    city = None
    current_layer = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        kind = fields[0]
        try:
            if kind == "MAP":
                if city is not None:
                    raise MapFormatError(f"line {lineno}: duplicate MAP header")
                if len(fields) not in (4, 5):
                    raise MapFormatError(f"line {lineno}: MAP needs name, width, height")
                weight = float(fields[4]) if len(fields) == 5 else 1.0
                city = CityMap(fields[1], float(fields[2]), float(fields[3]), weight)
            elif kind == "LAYER":
                if city is None:
                    raise MapFormatError(f"line {lineno}: LAYER before MAP header")
                if len(fields) != 3:
                    raise MapFormatError(f"line {lineno}: LAYER needs id and class list")
                classes = [c for c in fields[2].split(",") if c]
                if not classes:
                    raise MapFormatError(f"line {lineno}: LAYER has no movement classes")
                current_layer = city.add_layer(fields[1], classes).layer_id
            elif kind == "P":
                if current_layer is None:
                    raise MapFormatError(f"line {lineno}: P outside a LAYER section")
                if len(fields) == 5 and fields[4] == "SPECIAL":
                    special = True
                elif len(fields) == 4:
                    special = False
                else:
                    raise MapFormatError(f"line {lineno}: P needs id, x, y [SPECIAL]")
                city.add_point(current_layer, int(fields[1]),
                               float(fields[2]), float(fields[3]), special)
            elif kind == "S":
                if current_layer is None:
                    raise MapFormatError(f"line {lineno}: S outside a LAYER section")
                if len(fields) != 3:
                    raise MapFormatError(f"line {lineno}: S needs two point ids")
                city.add_segment(current_layer, int(fields[1]), int(fields[2]))
            else:
                raise MapFormatError(f"line {lineno}: unknown record {kind!r}")
        except (MapFormatError, MapValidationError):
            raise
        except ValueError as exc:
            raise MapFormatError(f"line {lineno}: {exc}") from exc
    if city is None:
        raise MapFormatError("document has no MAP header")
    city.validate()
    return city


def load_map(path) -> CityMap:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_map(fh.read())
