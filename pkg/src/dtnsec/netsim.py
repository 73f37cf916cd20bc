"""Time-stepped DTN simulator with First Contact routing.

The world is precomputed per run: every node's trajectory is sampled at tick
times and pairwise radio contacts are reduced to [start, end) tick intervals.
The tick loop then only touches live links, queued messages, and in-flight
transfers, which keeps evaluation cheap enough for evolutionary search.

Honest nodes and flooders run First Contact: a queued message goes straight
to its destination when in contact, otherwise to one current contact chosen
uniformly at random. The random choice is a pure hash of (run seed, message,
node, tick), so a decision situation replays identically across counterfactual
worlds; this is what makes black-hole conversion experiments well behaved.

Black holes accept every transfer and destroy it; flooders route honestly but
inject oversized junk traffic on a fast clock.
"""
from __future__ import annotations

import math
from bisect import insort
from dataclasses import dataclass, field

import numpy as np

from .citymap import CityMap, GridOverlay
from .genome import AttackGroup, AttackerGenome, BLACK_HOLE, FLOOD, GenomeSpace
from .mobility import (DEFAULT_CLASSES, MovementClass, attacker_trajectory,
                       honest_trajectory)
from .rngtools import derive_rng, hashed_index

HONEST = "honest"

# Per node and tick, bound on transfer attempts (starts plus rejections) so
# flooded queues cannot stall a tick; generous next to real channel budgets.
MAX_ATTEMPTS_PER_TICK = 32


@dataclass(frozen=True)
class RadioInterface:
    name: str
    range: float       # metres
    bandwidth: float   # bytes per second


BLUETOOTH = RadioInterface("bluetooth", 15.0, 250_000.0)
HIGHSPEED = RadioInterface("highspeed", 100.0, 10_000_000.0)
DEFAULT_INTERFACES = {i.name: i for i in (BLUETOOTH, HIGHSPEED)}
DEFAULT_CLASS_INTERFACES = {
    "pedestrian": ("bluetooth",),
    "car": ("bluetooth", "highspeed"),
    "boat": ("bluetooth", "highspeed"),
}
DEFAULT_CLASS_BUFFERS = {
    "pedestrian": 5_000_000,
    "car": 50_000_000,
    "boat": 50_000_000,
}


@dataclass(frozen=True)
class NodeSpec:
    node_id: int
    movement: str
    role: str                       # honest | black_hole | flood
    buffer_capacity: int
    interfaces: tuple
    genome: AttackerGenome | None = None


@dataclass(frozen=True)
class ContactEvent:
    node_a: int
    node_b: int
    start: float
    end: float
    interface: str


@dataclass(frozen=True)
class MessagePlan:
    """Scripted injection used by oracle tests: tick, endpoints, size."""

    tick: int
    src: int
    dst: int
    size: int
    honest: bool = True


@dataclass(frozen=True)
class SimResult:
    honest_created: int
    honest_delivered: int
    ddr: float
    mean_latency: float
    latencies: tuple
    dropped_blackhole: int
    expired: int
    discarded: int
    flood_created: int
    flood_delivered: int
    contact_trace: tuple
    events: tuple = ()


class ConfigError(ValueError):
    """Raised when a simulation configuration is inconsistent."""


def _ticks_of(seconds: float, tick: float, what: str) -> int:
    n = round(seconds / tick)
    if abs(n * tick - seconds) > 1e-9:
        raise ConfigError(f"{what} ({seconds}) is not a multiple of the tick ({tick})")
    return int(n)


@dataclass
class SimConfig:
    """Scenario description shared by every arm of a campaign."""

    city: CityMap
    overlay: GridOverlay
    honest_census: dict            # movement class -> node count, ordered
    duration: float = 18_000.0
    warmup: float = 1_000.0
    tick: float = 1.0
    ttl: float = 18_000.0
    honest_interval: float = 30.0
    honest_size: int = 10_000
    flood_interval: float = 3.0
    flood_size: int = 100_000
    movement_classes: dict = field(default_factory=lambda: dict(DEFAULT_CLASSES))
    interfaces: dict = field(default_factory=lambda: dict(DEFAULT_INTERFACES))
    class_interfaces: dict = field(default_factory=lambda: dict(DEFAULT_CLASS_INTERFACES))
    class_buffers: dict = field(default_factory=lambda: dict(DEFAULT_CLASS_BUFFERS))
    attacker_classes: tuple | None = None
    max_pois: int = 20
    min_pois: int = 1
    traffic_node_ids: tuple | None = None
    blackhole_node_ids: tuple = ()
    name: str = "scenario"

    def validate(self) -> None:
        if self.tick <= 0:
            raise ConfigError("tick must be positive")
        for what, v in (("duration", self.duration), ("warmup", self.warmup)):
            if v < 0:
                raise ConfigError(f"{what} must be non-negative")
        if self.ttl <= 0:
            raise ConfigError("ttl must be positive")
        _ticks_of(self.duration, self.tick, "duration")
        _ticks_of(self.warmup, self.tick, "warmup")
        for what, v in (("honest_interval", self.honest_interval),
                        ("flood_interval", self.flood_interval)):
            if _ticks_of(v, self.tick, what) < 1:
                raise ConfigError(f"{what} must be at least one tick")
        if not self.honest_census or all(n == 0 for n in self.honest_census.values()):
            raise ConfigError("honest census is empty")
        for cls, count in self.honest_census.items():
            if count < 0:
                raise ConfigError(f"negative count for class {cls!r}")
            self._check_class(cls)
        for cls in self.attacker_classes or ():
            self._check_class(cls)
        min_buffer = min(self.class_buffers[c] for c in self.class_buffers)
        for what, size in (("honest_size", self.honest_size),
                           ("flood_size", self.flood_size)):
            if size <= 0:
                raise ConfigError(f"{what} must be positive")
            if size > min_buffer:
                raise ConfigError(f"{what} exceeds the smallest buffer capacity")
        if self.city is not None:
            for cls in self.all_classes():
                self.city.layer_set_for_class(cls)

    def _check_class(self, cls: str) -> None:
        if cls not in self.movement_classes:
            raise ConfigError(f"unknown movement class {cls!r}")
        if cls not in self.class_interfaces:
            raise ConfigError(f"no radio profile for class {cls!r}")
        if cls not in self.class_buffers:
            raise ConfigError(f"no buffer capacity for class {cls!r}")
        ifaces = self.class_interfaces[cls]
        if not ifaces:
            raise ConfigError(f"class {cls!r} has no interfaces")
        for name in ifaces:
            if name not in self.interfaces:
                raise ConfigError(f"unknown interface {name!r} for class {cls!r}")
        if cls == "pedestrian" and "highspeed" in ifaces:
            raise ConfigError("pedestrians carry bluetooth only")

    def all_classes(self) -> tuple:
        out = list(self.honest_census)
        for cls in self.attacker_classes or ():
            if cls not in out:
                out.append(cls)
        return tuple(out)

    def genome_space(self) -> GenomeSpace:
        classes = self.attacker_classes or tuple(self.honest_census)
        return GenomeSpace(tuple(classes), self.overlay.rows, self.overlay.cols,
                           self.min_pois, self.max_pois)

    def n_ticks(self) -> int:
        return _ticks_of(self.warmup + self.duration, self.tick, "horizon")

    def warmup_ticks(self) -> int:
        return _ticks_of(self.warmup, self.tick, "warmup")

    def fingerprint(self) -> str:
        import hashlib
        parts = [self.city.to_text() if self.city is not None else "-",
                 f"{self.overlay.rows}x{self.overlay.cols}",
                 repr(sorted(self.honest_census.items())),
                 repr((self.duration, self.warmup, self.tick, self.ttl,
                       self.honest_interval, self.honest_size,
                       self.flood_interval, self.flood_size)),
                 repr(sorted((c.name, c.min_speed, c.max_speed, c.min_pause,
                              c.max_pause) for c in self.movement_classes.values())),
                 repr(sorted((i.name, i.range, i.bandwidth)
                             for i in self.interfaces.values())),
                 repr(sorted(self.class_interfaces.items())),
                 repr(sorted(self.class_buffers.items())),
                 repr(self.traffic_node_ids),
                 repr(tuple(sorted(self.blackhole_node_ids)))]
        return hashlib.sha256("|".join(parts).encode()).hexdigest()

    def honest_specs(self) -> list:
        specs = []
        node_id = 0
        blackholes = frozenset(self.blackhole_node_ids)
        for cls, count in self.honest_census.items():
            for _ in range(count):
                role = BLACK_HOLE if node_id in blackholes else HONEST
                specs.append(NodeSpec(node_id, cls, role,
                                      self.class_buffers[cls],
                                      tuple(self.class_interfaces[cls])))
                node_id += 1
        unknown = blackholes - {s.node_id for s in specs}
        if unknown:
            raise ConfigError(f"blackhole_node_ids {sorted(unknown)} not honest nodes")
        return specs


# -- contact precomputation ------------------------------------------------


def _mask_to_intervals(mask: np.ndarray):
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    cuts = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([idx[0]], idx[cuts + 1]))
    ends = np.concatenate((idx[cuts], [idx[-1]])) + 1
    return list(zip(starts.tolist(), ends.tolist()))


def pair_contacts(xs: np.ndarray, ys: np.ndarray, specs, interfaces,
                  pairs) -> dict:
    """[start, end) tick intervals per interface for the given node pairs."""
    out = {name: [] for name in interfaces}
    for i, j in pairs:
        shared = set(specs[i].interfaces) & set(specs[j].interfaces)
        if not shared:
            continue
        d2 = (xs[i] - xs[j]) ** 2 + (ys[i] - ys[j]) ** 2
        for name in sorted(shared):
            iface = interfaces[name]
            for s, e in _mask_to_intervals(d2 <= iface.range * iface.range):
                out[name].append((i, j, s, e))
    return out


@dataclass
class World:
    """Specs, per-tick positions, and contact intervals for one run."""

    specs: list
    xs: np.ndarray
    ys: np.ndarray
    contacts: dict  # iface name -> list of (i, j, start_tick, end_tick)

    def contact_trace(self, tick: float) -> tuple:
        events = []
        for name in sorted(self.contacts):
            for i, j, s, e in self.contacts[name]:
                events.append(ContactEvent(i, j, s * tick, e * tick, name))
        events.sort(key=lambda ev: (ev.start, ev.node_a, ev.node_b, ev.interface))
        return tuple(events)


_HONEST_CACHE: dict = {}
_HONEST_CACHE_LIMIT = 32


def clear_world_cache() -> None:
    _HONEST_CACHE.clear()


def _honest_world(config: SimConfig, seed: int):
    """Honest trajectories and honest-honest contacts, cached per run seed."""
    key = (config.fingerprint(), seed)
    cached = _HONEST_CACHE.get(key)
    if cached is not None:
        return cached
    specs = config.honest_specs()
    n_ticks = config.n_ticks()
    horizon = config.warmup + config.duration
    times = np.arange(n_ticks, dtype=float) * config.tick
    xs = np.empty((len(specs), n_ticks))
    ys = np.empty((len(specs), n_ticks))
    for spec in specs:
        mclass = config.movement_classes[spec.movement]
        layer_ids = config.city.layer_set_for_class(spec.movement)
        rng = derive_rng(seed, "mob", spec.node_id)
        traj = honest_trajectory(config.city, layer_ids, mclass, rng, horizon)
        xs[spec.node_id], ys[spec.node_id] = traj.positions_at(times)
    pairs = [(i, j) for i in range(len(specs)) for j in range(i + 1, len(specs))]
    contacts = pair_contacts(xs, ys, specs, config.interfaces, pairs)
    if len(_HONEST_CACHE) >= _HONEST_CACHE_LIMIT:
        _HONEST_CACHE.pop(next(iter(_HONEST_CACHE)))
    _HONEST_CACHE[key] = (specs, xs, ys, contacts)
    return _HONEST_CACHE[key]


def build_world(config: SimConfig, group: AttackGroup, seed: int) -> World:
    honest_specs, hx, hy, honest_contacts = _honest_world(config, seed)
    members = group.canonical_members() if group is not None else ()
    space = config.genome_space()
    for g in members:
        space.validate_genome(g)
    n_honest = len(honest_specs)
    n_total = n_honest + len(members)
    n_ticks = config.n_ticks()
    specs = list(honest_specs)
    xs = np.empty((n_total, n_ticks))
    ys = np.empty((n_total, n_ticks))
    xs[:n_honest], ys[:n_honest] = hx, hy
    horizon = config.warmup + config.duration
    times = np.arange(n_ticks, dtype=float) * config.tick
    for offset, g in enumerate(members):
        node_id = n_honest + offset
        specs.append(NodeSpec(node_id, g.movement, g.logic,
                              config.class_buffers[g.movement],
                              tuple(config.class_interfaces[g.movement]),
                              genome=g))
        mclass = config.movement_classes[g.movement]
        layer_ids = config.city.layer_set_for_class(g.movement)
        rng = derive_rng(seed, "mob", node_id)
        traj = attacker_trajectory(config.city, layer_ids, mclass, g,
                                   config.overlay, rng, horizon)
        xs[node_id], ys[node_id] = traj.positions_at(times)
    contacts = {name: list(lst) for name, lst in honest_contacts.items()}
    extra_pairs = [(i, j) for i in range(n_honest, n_total)
                   for j in range(n_total) if j < i] + \
                  [(i, j) for i in range(n_honest, n_total)
                   for j in range(i + 1, n_total) if j >= n_honest]
    # normalize pair order (i < j) and drop duplicates
    extra = sorted({(min(i, j), max(i, j)) for i, j in extra_pairs})
    for name, lst in pair_contacts(xs, ys, specs, config.interfaces, extra).items():
        contacts[name].extend(lst)
    return World(specs, xs, ys, contacts)


# -- engine ----------------------------------------------------------------


class _Message:
    __slots__ = ("msg_id", "src", "dst", "size", "created", "honest", "state",
                 "holder", "arrival_tick", "seq", "delivered_at")

    def __init__(self, msg_id, src, dst, size, created, honest):
        self.msg_id = msg_id
        self.src = src
        self.dst = dst
        self.size = size
        self.created = created
        self.honest = honest
        self.state = "buffered"
        self.holder = src
        self.arrival_tick = 0
        self.seq = 0
        self.delivered_at = None

    def sort_key(self):
        return (self.arrival_tick, self.seq)


class _Transfer:
    __slots__ = ("msg", "sender", "receiver", "iface", "start", "end", "reserved")

    def __init__(self, msg, sender, receiver, iface, start, end, reserved):
        self.msg = msg
        self.sender = sender
        self.receiver = receiver
        self.iface = iface
        self.start = start
        self.end = end
        self.reserved = reserved


class _Node:
    __slots__ = ("spec", "queue", "buffer_used", "busy_until", "neighbors")

    def __init__(self, spec):
        self.spec = spec
        self.queue = []
        self.buffer_used = 0
        self.busy_until = {name: 0.0 for name in spec.interfaces}
        self.neighbors = {}

    def free_buffer(self):
        return self.spec.buffer_capacity - self.buffer_used


class SimInvariantError(AssertionError):
    """Raised by the audit hook when an engine invariant breaks."""


def choose_contact(contacts, seed, msg_id, node_id, tick):
    """First Contact relay choice among sorted contacts, as a pure hash."""
    if len(contacts) == 1:
        return contacts[0]
    return contacts[hashed_index(len(contacts), seed, "fwd", msg_id, node_id, tick)]


class Engine:
    def __init__(self, config: SimConfig, world: World, seed: int,
                 plans=None, audit=False, record_events=False,
                 build_trace=True):
        self.config = config
        self.world = world
        self.seed = seed
        self.plans = None
        if plans is not None:
            self.plans = sorted(plans, key=lambda p: (p.tick, p.src, p.dst))
        self.audit = audit
        self.record_events = record_events
        self.build_trace = build_trace
        self.nodes = [_Node(spec) for spec in world.specs]
        self.inflight = []
        self.messages = []
        self.latencies = []
        self.dropped_blackhole = 0
        self.expired = 0
        self.discarded = 0
        self.honest_created = 0
        self.honest_delivered = 0
        self.flood_created = 0
        self.flood_delivered = 0
        self.events = []
        self._seq = 0
        self._queued_nodes = set()

    # -- bookkeeping ------------------------------------------------------

    def _log(self, time, kind, node, peer, msg):
        if self.record_events:
            self.events.append((time, kind, node, peer, msg.msg_id))

    def _enqueue(self, node: _Node, msg: _Message):
        insort(node.queue, msg, key=_Message.sort_key)
        msg.holder = node.spec.node_id
        msg.state = "buffered"
        self._queued_nodes.add(node.spec.node_id)

    def _dequeue(self, node: _Node, msg: _Message):
        node.queue.remove(msg)
        if not node.queue:
            self._queued_nodes.discard(node.spec.node_id)

    def _create(self, t, now, src, dst, size, honest):
        node = self.nodes[src]
        msg = _Message(len(self.messages), src, dst, size, now, honest)
        msg.arrival_tick = t
        msg.seq = self._seq
        self._seq += 1
        self.messages.append(msg)
        if honest:
            self.honest_created += 1
        else:
            self.flood_created += 1
        # Make room by discarding the oldest stored messages; in-flight bytes
        # cannot be reclaimed, so in a pathological squeeze the new message
        # itself is discarded.
        while node.free_buffer() < size and node.queue:
            victim = node.queue[0]
            self._dequeue(node, victim)
            node.buffer_used -= victim.size
            victim.state = "discarded"
            victim.holder = None
            self.discarded += 1
            self._log(now, "discarded", src, -1, victim)
        if node.free_buffer() < size:
            msg.state = "discarded"
            msg.holder = None
            self.discarded += 1
            self._log(now, "discarded", src, -1, msg)
            return
        node.buffer_used += size
        self._enqueue(node, msg)
        self._log(now, "created", src, dst, msg)

    # -- transfer lifecycle ------------------------------------------------

    def _start_transfer(self, sender: _Node, receiver: _Node, msg: _Message,
                        iface_name: str, start: float):
        iface = self.config.interfaces[iface_name]
        end = start + msg.size / iface.bandwidth
        terminal = (receiver.spec.node_id == msg.dst
                    or receiver.spec.role == BLACK_HOLE)
        reserved = 0 if terminal else msg.size
        if reserved:
            receiver.buffer_used += reserved
        self._dequeue(sender, msg)
        msg.state = "in_flight"
        msg.holder = None
        sender.busy_until[iface_name] = end
        self.inflight.append(_Transfer(msg, sender, receiver, iface_name,
                                       start, end, reserved))
        self._log(start, "start", sender.spec.node_id, receiver.spec.node_id, msg)

    def _complete(self, tr: _Transfer):
        msg = tr.msg
        tr.sender.buffer_used -= msg.size
        receiver = tr.receiver
        if receiver.spec.node_id == msg.dst:
            latency = tr.end - msg.created
            if latency > self.config.ttl + 1e-9:
                msg.state = "expired"
                self.expired += 1
                self._log(tr.end, "expired", receiver.spec.node_id, -1, msg)
            else:
                msg.state = "delivered"
                msg.delivered_at = tr.end
                if msg.honest:
                    self.honest_delivered += 1
                    self.latencies.append(latency)
                else:
                    self.flood_delivered += 1
                self._log(tr.end, "delivered", receiver.spec.node_id,
                          tr.sender.spec.node_id, msg)
        elif receiver.spec.role == BLACK_HOLE:
            msg.state = "dropped_blackhole"
            self.dropped_blackhole += 1
            self._log(tr.end, "blackhole", receiver.spec.node_id,
                      tr.sender.spec.node_id, msg)
        else:
            msg.arrival_tick = math.ceil(tr.end / self.config.tick - 1e-9)
            msg.seq = self._seq
            self._seq += 1
            self._enqueue(receiver, msg)
            self._log(tr.end, "complete", receiver.spec.node_id,
                      tr.sender.spec.node_id, msg)

    def _abort(self, tr: _Transfer, now: float):
        msg = tr.msg
        if tr.reserved:
            tr.receiver.buffer_used -= tr.reserved
        self._enqueue(tr.sender, msg)  # original sort key still on the message
        sender = tr.sender
        ends = [t2.end for t2 in self.inflight
                if t2 is not tr and t2.sender is sender and t2.iface == tr.iface]
        sender.busy_until[tr.iface] = max([now] + ends)
        self._log(now, "abort", sender.spec.node_id, tr.receiver.spec.node_id, msg)

    def _link_live(self, a: int, b: int, iface: str) -> bool:
        nbrs = self.nodes[a].neighbors.get(b)
        return nbrs is not None and iface in nbrs

    # -- per-tick phases ---------------------------------------------------

    def _forward_node(self, node: _Node, t: int, now: float):
        nbrs = node.neighbors
        contacts = sorted(nbrs)
        tick_end = now + self.config.tick
        blocked = set()
        attempts = 0
        uid = node.spec.node_id
        for msg in list(node.queue):
            if attempts >= MAX_ATTEMPTS_PER_TICK:
                break
            if msg.arrival_tick > t:
                break
            if msg.dst in nbrs:
                target = msg.dst
            else:
                target = choose_contact(contacts, self.seed, msg.msg_id, uid, t)
            if target in blocked:
                attempts += 1
                continue
            # fastest startable interface to the target within this tick
            chosen = None
            for iface_name in sorted(nbrs[target],
                                     key=lambda nm: (-self.config.interfaces[nm].bandwidth, nm)):
                start = max(now, node.busy_until[iface_name])
                if start < tick_end - 1e-12:
                    chosen = (iface_name, start)
                    break
            if chosen is None:
                attempts += 1
                continue
            receiver = self.nodes[target]
            terminal = target == msg.dst or receiver.spec.role == BLACK_HOLE
            if not terminal and receiver.free_buffer() < msg.size:
                blocked.add(target)
                attempts += 1
                self._log(now, "reject", target, uid, msg)
                continue
            self._start_transfer(node, receiver, msg, chosen[0], chosen[1])
            attempts += 1

    def run(self) -> SimResult:
        config = self.config
        n_ticks = config.n_ticks()
        tick = config.tick
        warmup_ticks = config.warmup_ticks()
        honest_iv = _ticks_of(config.honest_interval, tick, "honest_interval")
        flood_iv = _ticks_of(config.flood_interval, tick, "flood_interval")

        opens: dict[int, list] = {}
        closes: dict[int, list] = {}
        for name, lst in self.world.contacts.items():
            for i, j, s, e in lst:
                if s >= n_ticks:
                    continue
                opens.setdefault(s, []).append((i, j, name))
                closes.setdefault(min(e, n_ticks), []).append((i, j, name))

        if self.plans is None:
            traffic_rng = derive_rng(self.seed, "traffic")
            pool = self._traffic_pool()
            flooders = [n.spec.node_id for n in self.nodes
                        if n.spec.role == FLOOD]
            flood_rngs = {nid: derive_rng(self.seed, "flood", nid)
                          for nid in flooders}
        plan_idx = 0
        ttl_can_expire = config.ttl < config.warmup + config.duration

        for t in range(n_ticks):
            now = t * tick
            for i, j, name in closes.get(t, ()):
                self._close_link(i, j, name)
            for i, j, name in opens.get(t, ()):
                self._open_link(i, j, name)

            if self.inflight:
                still = []
                for tr in self.inflight:
                    if tr.end <= now + 1e-9:
                        self._complete(tr)
                    elif not self._link_live(tr.sender.spec.node_id,
                                             tr.receiver.spec.node_id, tr.iface):
                        self._abort(tr, now)
                    else:
                        still.append(tr)
                self.inflight = still

            if ttl_can_expire:
                self._purge_expired(now)

            if self.plans is not None:
                while (plan_idx < len(self.plans)
                       and self.plans[plan_idx].tick == t):
                    p = self.plans[plan_idx]
                    self._create(t, now, p.src, p.dst, p.size, p.honest)
                    plan_idx += 1
            elif t >= warmup_ticks:
                offset = t - warmup_ticks
                if offset % honest_iv == 0 and len(pool) >= 2:
                    src = pool[traffic_rng.randrange(len(pool))]
                    dst = pool[traffic_rng.randrange(len(pool) - 1)]
                    if dst >= src:
                        dst = pool[(pool.index(dst) + 1) % len(pool)] \
                            if False else dst
                    # exclude src by index shift
                    idx_src = pool.index(src)
                    idx_dst = traffic_rng.randrange(len(pool) - 1)
                    del dst
                    dst = pool[idx_dst if idx_dst < idx_src else idx_dst + 1]
                    self._create(t, now, src, dst, config.honest_size, True)
                if offset % flood_iv == 0:
                    for nid in flooders:
                        if len(pool) == 0:
                            break
                        rng = flood_rngs[nid]
                        dst = pool[rng.randrange(len(pool))]
                        self._create(t, now, nid, dst, config.flood_size, False)

            if self._queued_nodes:
                for uid in sorted(self._queued_nodes):
                    node = self.nodes[uid]
                    if node.neighbors and node.queue:
                        self._forward_node(node, t, now)

            if self.audit:
                self._run_audit(t, now)

        return self._result()

    def _traffic_pool(self):
        if self.config.traffic_node_ids is not None:
            pool = list(self.config.traffic_node_ids)
            for nid in pool:
                if self.nodes[nid].spec.role != HONEST:
                    raise ConfigError(f"traffic node {nid} is not honest")
        else:
            pool = [n.spec.node_id for n in self.nodes if n.spec.role == HONEST]
        return sorted(pool)

    def _open_link(self, i, j, name):
        self.nodes[i].neighbors.setdefault(j, set()).add(name)
        self.nodes[j].neighbors.setdefault(i, set()).add(name)

    def _close_link(self, i, j, name):
        for a, b in ((i, j), (j, i)):
            nbrs = self.nodes[a].neighbors
            s = nbrs.get(b)
            if s is not None:
                s.discard(name)
                if not s:
                    del nbrs[b]

    def _purge_expired(self, now):
        ttl = self.config.ttl
        for uid in sorted(self._queued_nodes):
            node = self.nodes[uid]
            keep = []
            for msg in node.queue:
                if now - msg.created > ttl + 1e-9:
                    node.buffer_used -= msg.size
                    msg.state = "expired"
                    msg.holder = None
                    self.expired += 1
                    self._log(now, "expired", uid, -1, msg)
                else:
                    keep.append(msg)
            if len(keep) != len(node.queue):
                node.queue = keep
                if not keep:
                    self._queued_nodes.discard(uid)

    def _run_audit(self, t, now):
        held = {}
        for node in self.nodes:
            stored = 0
            for msg in node.queue:
                held[msg.msg_id] = held.get(msg.msg_id, 0) + 1
                stored += msg.size
                if msg.state != "buffered":
                    raise SimInvariantError(
                        f"t={t}: queued message {msg.msg_id} in state {msg.state}")
            out_bytes = sum(tr.msg.size for tr in self.inflight if tr.sender is node)
            in_res = sum(tr.reserved for tr in self.inflight if tr.receiver is node)
            expect = stored + out_bytes + in_res
            if node.buffer_used != expect:
                raise SimInvariantError(
                    f"t={t}: node {node.spec.node_id} accounts {node.buffer_used} "
                    f"bytes, audit says {expect}")
            if node.buffer_used > node.spec.buffer_capacity:
                raise SimInvariantError(
                    f"t={t}: node {node.spec.node_id} over capacity")
            if node.spec.role == BLACK_HOLE and node.queue:
                raise SimInvariantError(f"t={t}: black hole stores messages")
        flying = {}
        for tr in self.inflight:
            flying[tr.msg.msg_id] = flying.get(tr.msg.msg_id, 0) + 1
        terminal_states = {"delivered", "dropped_blackhole", "expired", "discarded"}
        for msg in self.messages:
            copies = held.get(msg.msg_id, 0)
            fly = flying.get(msg.msg_id, 0)
            term = 1 if msg.state in terminal_states else 0
            if copies + fly + term != 1:
                raise SimInvariantError(
                    f"t={t}: message {msg.msg_id} has {copies} copies, "
                    f"{fly} in flight, state {msg.state}")
        for lat in self.latencies:
            if not (0.0 < lat <= self.config.ttl + 1e-9):
                raise SimInvariantError(f"latency {lat} outside (0, ttl]")

    def _result(self) -> SimResult:
        created = self.honest_created
        ddr = self.honest_delivered / created if created else 1.0
        mean_lat = (sum(self.latencies) / len(self.latencies)
                    if self.latencies else 0.0)
        trace = self.world.contact_trace(self.config.tick) if self.build_trace else ()
        return SimResult(
            honest_created=created,
            honest_delivered=self.honest_delivered,
            ddr=ddr,
            mean_latency=mean_lat,
            latencies=tuple(self.latencies),
            dropped_blackhole=self.dropped_blackhole,
            expired=self.expired,
            discarded=self.discarded,
            flood_created=self.flood_created,
            flood_delivered=self.flood_delivered,
            contact_trace=trace,
            events=tuple(self.events),
        )


# -- entry points ----------------------------------------------------------

EMPTY_GROUP = AttackGroup(())


def run_simulation(config: SimConfig, group: AttackGroup = EMPTY_GROUP,
                   seed: int = 0, audit: bool = False,
                   record_events: bool = False,
                   build_trace: bool = True) -> SimResult:
    config.validate()
    world = build_world(config, group, seed)
    engine = Engine(config, world, seed, audit=audit,
                    record_events=record_events, build_trace=build_trace)
    return engine.run()


def run_scripted(specs, xs, ys, plans, tick: float = 1.0, ttl: float = 18_000.0,
                 seed: int = 0, interfaces=None, audit: bool = True,
                 record_events: bool = True) -> SimResult:
    """Run the engine over explicit position arrays and a message plan.

    The oracle tests drive this: no mobility model, no traffic process, just
    scripted geometry and injections.
    """
    interfaces = interfaces or dict(DEFAULT_INTERFACES)
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n_ticks = xs.shape[1]
    config = SimConfig(
        city=None, overlay=GridOverlay(1, 1), honest_census={"pedestrian": 1},
        duration=n_ticks * tick, warmup=0.0, tick=tick, ttl=ttl,
        interfaces=interfaces)
    pairs = [(i, j) for i in range(len(specs)) for j in range(i + 1, len(specs))]
    world = World(list(specs), xs, ys,
                  pair_contacts(xs, ys, list(specs), interfaces, pairs))
    engine = Engine(config, world, seed, plans=list(plans), audit=audit,
                    record_events=record_events)
    return engine.run()


def evaluate_fitness(config: SimConfig, group: AttackGroup, seeds):
    """Mean DDR and mean latency over the fixed evaluation seeds.

    Returns (f1, f2, per_run) where per_run is a tuple of
    (ddr, mean_latency, created, delivered) per seed.
    """
    if len(set(seeds)) != len(seeds):
        raise ConfigError("evaluation seeds must be distinct")
    per_run = []
    for seed in seeds:
        res = run_simulation(config, group, seed, build_trace=False)
        per_run.append((res.ddr, res.mean_latency,
                        res.honest_created, res.honest_delivered))
    f1 = sum(r[0] for r in per_run) / len(per_run)
    f2 = sum(r[1] for r in per_run) / len(per_run)
    return f1, f2, tuple(per_run)
