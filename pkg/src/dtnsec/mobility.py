"""Map-constrained random waypoint mobility.

Nodes walk the segment graph of their movement class: pick a waypoint, travel
there along the shortest path at a per-leg speed, pause, repeat. Honest nodes
draw waypoints over all layer points with special POIs overweighted; attackers
draw grid squares from their genome and visit every mapped point of the square
in ascending id order. Trajectories are built once per run as continuous-time
breakpoint timelines and sampled at tick times.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .citymap import CityMap, GridOverlay, grid_square_to_pois, shortest_path
from .genome import AttackerGenome


@dataclass(frozen=True)
class MovementClass:
    name: str
    min_speed: float
    max_speed: float
    min_pause: float
    max_pause: float

    def __post_init__(self):
        if not (0 < self.min_speed <= self.max_speed):
            raise ValueError(f"{self.name}: speeds must be positive and ordered")
        if not (0 <= self.min_pause <= self.max_pause):
            raise ValueError(f"{self.name}: pauses must be non-negative and ordered")


PEDESTRIAN = MovementClass("pedestrian", 0.5, 1.5, 0.0, 120.0)
CAR = MovementClass("car", 2.7, 13.9, 0.0, 120.0)
BOAT = MovementClass("boat", 1.0, 5.0, 0.0, 120.0)
DEFAULT_CLASSES = {c.name: c for c in (PEDESTRIAN, CAR, BOAT)}


class WaypointSampler:
    """Honest waypoint draws: uniform over layer points, specials overweighted."""

    def __init__(self, city: CityMap, layer_ids):
        self.pids = city.layer_points(layer_ids)
        if not self.pids:
            raise ValueError(f"layers {sorted(layer_ids)} have no points")
        weights = [city.special_weight if city.points[p].special else 1.0
                   for p in self.pids]
        self.cum_weights = list(itertools.accumulate(weights))

    def draw(self, rng) -> int:
        return rng.choices(self.pids, cum_weights=self.cum_weights, k=1)[0]


class AttackerItinerary:
    """Genome-driven waypoint stream.

    A square is drawn uniformly from the genome's POI list (duplicates raise
    a square's odds); its mapped points are then visited exhaustively in
    ascending id order before the next square is drawn.
    """

    def __init__(self, city: CityMap, layer_ids, overlay: GridOverlay,
                 genome: AttackerGenome):
        self.city = city
        self.layer_ids = frozenset(layer_ids)
        self.overlay = overlay
        self.genome = genome
        self._queue = deque()
        self._expansion_cache = {}

    def expand(self, cell) -> list[int]:
        pids = self._expansion_cache.get(cell)
        if pids is None:
            pids = grid_square_to_pois(self.city, self.layer_ids, self.overlay,
                                       cell[0], cell[1])
            self._expansion_cache[cell] = pids
        return pids

    def next_point(self, rng) -> int:
        if not self._queue:
            cell = self.genome.pois[rng.randrange(len(self.genome.pois))]
            self._queue.extend(self.expand(cell))
        return self._queue.popleft()


@dataclass
class Trajectory:
    """Piecewise-linear position timeline; flat pieces are pauses."""

    ts: np.ndarray
    xs: np.ndarray
    ys: np.ndarray

    def positions_at(self, times):
        return (np.interp(times, self.ts, self.xs),
                np.interp(times, self.ts, self.ys))

    def position_at(self, t: float) -> tuple[float, float]:
        x, y = self.positions_at(np.asarray([t], dtype=float))
        return float(x[0]), float(y[0])


def build_timeline(city: CityMap, layer_ids, mclass: MovementClass, rng,
                   horizon: float, pick_next) -> Trajectory:
    """Walk the waypoint process until the horizon is covered.

    Draw order per leg is fixed (waypoint, speed, pause) so streams are
    reproducible. Placement is uniform over the layer points.
    """
    pids = city.layer_points(layer_ids)
    if not pids:
        raise ValueError(f"layers {sorted(layer_ids)} have no points")
    cur = pids[rng.randrange(len(pids))]
    p = city.points[cur]
    ts, xs, ys = [0.0], [p.x], [p.y]
    t = 0.0
    while t <= horizon:
        t_leg_start = t
        target = pick_next(rng)
        path, _ = shortest_path(city, layer_ids, cur, target)
        speed = rng.uniform(mclass.min_speed, mclass.max_speed)
        for nxt in path[1:]:
            a, b = city.points[cur], city.points[nxt]
            t += math.hypot(b.x - a.x, b.y - a.y) / speed
            ts.append(t)
            xs.append(b.x)
            ys.append(b.y)
            cur = nxt
        pause = rng.uniform(mclass.min_pause, mclass.max_pause)
        if pause > 0:
            t += pause
            ts.append(t)
            xs.append(city.points[cur].x)
            ys.append(city.points[cur].y)
        if t == t_leg_start:  # degenerate map and zero pause; force progress
            t += 1.0
            ts.append(t)
            xs.append(city.points[cur].x)
            ys.append(city.points[cur].y)
    return Trajectory(np.asarray(ts), np.asarray(xs), np.asarray(ys))


def honest_trajectory(city: CityMap, layer_ids, mclass: MovementClass, rng,
                      horizon: float) -> Trajectory:
    sampler = WaypointSampler(city, layer_ids)
    return build_timeline(city, layer_ids, mclass, rng, horizon, sampler.draw)


def attacker_trajectory(city: CityMap, layer_ids, mclass: MovementClass,
                        genome: AttackerGenome, overlay: GridOverlay, rng,
                        horizon: float) -> Trajectory:
    itinerary = AttackerItinerary(city, layer_ids, overlay, genome)
    return build_timeline(city, layer_ids, mclass, rng, horizon,
                          itinerary.next_point)
