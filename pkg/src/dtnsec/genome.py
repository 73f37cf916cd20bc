"""Attacker genomes and groups, their text format, and genetic operators.

A genome is one attacker: a movement class, an attack logic, and an ordered
list of grid cells the attacker patrols. A group is a multiset of genomes.
Groups are the unit of evaluation; the same text format used on disk:

    Mov=pedestrian
    Attack=black_hole
    94,39
    3,77

Group files separate attacker blocks with blank lines.
"""
from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass

BLACK_HOLE = "black_hole"
FLOOD = "flood"
ATTACK_LOGICS = (BLACK_HOLE, FLOOD)


class GenomeFormatError(ValueError):
    """Raised when an attacker or group document cannot be parsed."""


@dataclass(frozen=True)
class AttackerGenome:
    movement: str
    logic: str
    pois: tuple  # ordered ((row, col), ...) grid cells

    def key(self) -> str:
        cells = ";".join(f"{r},{c}" for r, c in self.pois)
        return f"{self.movement}|{self.logic}|{cells}"


@dataclass(frozen=True)
class AttackGroup:
    members: tuple  # (AttackerGenome, ...)

    def size(self) -> int:
        return len(self.members)

    def canonical_members(self) -> tuple:
        return tuple(sorted(self.members, key=lambda g: g.key()))


@dataclass(frozen=True)
class GenomeSpace:
    """Sampling and mutation domain for genomes in one scenario."""

    movement_classes: tuple
    rows: int
    cols: int
    min_pois: int = 1
    max_pois: int = 20
    logics: tuple = ATTACK_LOGICS

    def __post_init__(self):
        if not self.movement_classes:
            raise ValueError("genome space needs at least one movement class")
        if self.rows < 1 or self.cols < 1:
            raise ValueError("genome space needs a non-empty grid")
        if not (1 <= self.min_pois <= self.max_pois):
            raise ValueError("genome space needs 1 <= min_pois <= max_pois")

    def random_cell(self, rng):
        return (rng.randrange(self.rows), rng.randrange(self.cols))

    def validate_genome(self, g: AttackerGenome) -> None:
        if g.movement not in self.movement_classes:
            raise ValueError(f"movement class {g.movement!r} not in scenario")
        if g.logic not in self.logics:
            raise ValueError(f"unknown attack logic {g.logic!r}")
        if not (self.min_pois <= len(g.pois) <= self.max_pois):
            raise ValueError(f"POI count {len(g.pois)} outside "
                             f"[{self.min_pois}, {self.max_pois}]")
        for r, c in g.pois:
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise ValueError(f"cell ({r}, {c}) outside {self.rows}x{self.cols} grid")


# -- hashing ---------------------------------------------------------------


def canonical_hash(group: AttackGroup) -> str:
    """Order-independent group digest; POI order inside a genome matters."""
    text = "\n".join(g.key() for g in group.canonical_members())
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# -- serialization ---------------------------------------------------------


def genome_to_text(g: AttackerGenome) -> str:
    lines = [f"Mov={g.movement}", f"Attack={g.logic}"]
    lines += [f"{r},{c}" for r, c in g.pois]
    return "\n".join(lines)


def group_to_text(group: AttackGroup) -> str:
    return "\n\n".join(genome_to_text(g) for g in group.members) + "\n"


def genome_from_text(text: str) -> AttackerGenome:
    lines = [ln.strip() for ln in text.strip().splitlines()]
    if len(lines) < 2:
        raise GenomeFormatError("attacker block needs Mov= and Attack= lines")
    if not lines[0].startswith("Mov="):
        raise GenomeFormatError(f"expected Mov= line, got {lines[0]!r}")
    if not lines[1].startswith("Attack="):
        raise GenomeFormatError(f"expected Attack= line, got {lines[1]!r}")
    movement = lines[0][len("Mov="):]
    logic = lines[1][len("Attack="):]
    if not movement:
        raise GenomeFormatError("empty movement class")
    if logic not in ATTACK_LOGICS:
        raise GenomeFormatError(f"unknown attack logic {logic!r}")
    pois = []
    for ln in lines[2:]:
        parts = ln.split(",")
        if len(parts) != 2:
            raise GenomeFormatError(f"bad POI line {ln!r}")
        try:
            pois.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise GenomeFormatError(f"bad POI line {ln!r}") from exc
    if not pois:
        raise GenomeFormatError("attacker block has no POI cells")
    return AttackerGenome(movement, logic, tuple(pois))


def group_from_text(text: str) -> AttackGroup:
    blocks = [b for b in text.split("\n\n") if b.strip()]
    if not blocks:
        raise GenomeFormatError("group document has no attacker blocks")
    return AttackGroup(tuple(genome_from_text(b) for b in blocks))


# -- random sampling -------------------------------------------------------


def random_genome(rng, space: GenomeSpace) -> AttackerGenome:
    n = rng.randint(space.min_pois, space.max_pois)
    return AttackerGenome(
        rng.choice(space.movement_classes),
        rng.choice(space.logics),
        tuple(space.random_cell(rng) for _ in range(n)),
    )


def random_group(rng, space: GenomeSpace, k_min: int, k_max: int) -> AttackGroup:
    k = rng.randint(k_min, k_max)
    return AttackGroup(tuple(random_genome(rng, space) for _ in range(k)))


# -- individual-level operators -------------------------------------------


def _clamp_pois(pois, parents_pool, rng, space: GenomeSpace):
    """Repair a crossover child's POI list to the legal length band.

    Overlong lists are truncated; an empty list is padded with one cell drawn
    from the parents' combined POIs, so no cell is invented.
    """
    pois = list(pois)
    if len(pois) > space.max_pois:
        pois = pois[:space.max_pois]
    while len(pois) < space.min_pois:
        pois.append(parents_pool[rng.randrange(len(parents_pool))])
    return tuple(pois)


def one_point_crossover(a: AttackerGenome, b: AttackerGenome, rng,
                        space: GenomeSpace):
    """Imprecise one-point crossover: independent cut points per parent."""
    cut_a = rng.randint(0, len(a.pois))
    cut_b = rng.randint(0, len(b.pois))
    pool = a.pois + b.pois
    child1 = AttackerGenome(a.movement, a.logic,
                            _clamp_pois(a.pois[:cut_a] + b.pois[cut_b:], pool, rng, space))
    child2 = AttackerGenome(b.movement, b.logic,
                            _clamp_pois(b.pois[:cut_b] + a.pois[cut_a:], pool, rng, space))
    return child1, child2


def two_point_crossover(a: AttackerGenome, b: AttackerGenome, rng,
                        space: GenomeSpace):
    """Imprecise two-point crossover: independent cut pairs per parent."""
    ia, ja = sorted((rng.randint(0, len(a.pois)), rng.randint(0, len(a.pois))))
    ib, jb = sorted((rng.randint(0, len(b.pois)), rng.randint(0, len(b.pois))))
    pool = a.pois + b.pois
    child1 = AttackerGenome(a.movement, a.logic,
                            _clamp_pois(a.pois[:ia] + b.pois[ib:jb] + a.pois[ja:],
                                        pool, rng, space))
    child2 = AttackerGenome(b.movement, b.logic,
                            _clamp_pois(b.pois[:ib] + a.pois[ia:ja] + b.pois[jb:],
                                        pool, rng, space))
    return child1, child2


def _repeat(rng, sigma: float, step):
    """Apply step once, then again while U(0,1) < sigma."""
    out = step()
    while rng.random() < sigma:
        out = step()
    return out


def alteration_mutation(g: AttackerGenome, rng, sigma: float,
                        space: GenomeSpace) -> AttackerGenome:
    """Redraw one uniformly chosen parameter from its domain."""
    state = {"movement": g.movement, "logic": g.logic, "pois": list(g.pois)}

    def step():
        slots = 2 + 2 * len(state["pois"])
        pick = rng.randrange(slots)
        if pick == 0:
            state["movement"] = rng.choice(space.movement_classes)
        elif pick == 1:
            state["logic"] = rng.choice(space.logics)
        else:
            idx, which = divmod(pick - 2, 2)
            r, c = state["pois"][idx]
            if which == 0:
                state["pois"][idx] = (rng.randrange(space.rows), c)
            else:
                state["pois"][idx] = (r, rng.randrange(space.cols))

    _repeat(rng, sigma, step)
    return AttackerGenome(state["movement"], state["logic"], tuple(state["pois"]))


def insertion_mutation(g: AttackerGenome, rng, sigma: float,
                       space: GenomeSpace) -> AttackerGenome:
    pois = list(g.pois)

    def step():
        if len(pois) < space.max_pois:
            pois.insert(rng.randint(0, len(pois)), space.random_cell(rng))

    _repeat(rng, sigma, step)
    return AttackerGenome(g.movement, g.logic, tuple(pois))


def removal_mutation(g: AttackerGenome, rng, sigma: float,
                     space: GenomeSpace) -> AttackerGenome:
    pois = list(g.pois)

    def step():
        if len(pois) > space.min_pois:
            pois.pop(rng.randrange(len(pois)))

    _repeat(rng, sigma, step)
    return AttackerGenome(g.movement, g.logic, tuple(pois))


def replacement_mutation(g: AttackerGenome, rng, sigma: float,
                         space: GenomeSpace) -> AttackerGenome:
    pois = list(g.pois)

    def step():
        pois[rng.randrange(len(pois))] = space.random_cell(rng)

    _repeat(rng, sigma, step)
    return AttackerGenome(g.movement, g.logic, tuple(pois))


# -- group-level operators -------------------------------------------------


def group_insertion(group: AttackGroup, individuals, rng,
                    k_min: int, k_max: int) -> AttackGroup:
    """Add one individual drawn uniformly from the population; no-op at k_max."""
    if group.size() >= k_max or not individuals:
        return group
    newcomer = individuals[rng.randrange(len(individuals))]
    return AttackGroup(group.members + (newcomer,))


def group_removal(group: AttackGroup, rng, k_min: int, k_max: int) -> AttackGroup:
    """Drop one uniformly chosen member; no-op at k_min."""
    if group.size() <= k_min:
        return group
    idx = rng.randrange(group.size())
    return AttackGroup(group.members[:idx] + group.members[idx + 1:])


def balanced_crossover(g1: AttackGroup, g2: AttackGroup, rng,
                       k_min: int, k_max: int):
    """Swap an equal number of members; sizes are preserved."""
    n = rng.randint(0, min(g1.size(), g2.size()))
    idx1 = sorted(rng.sample(range(g1.size()), n))
    idx2 = sorted(rng.sample(range(g2.size()), n))
    m1, m2 = list(g1.members), list(g2.members)
    for i, j in zip(idx1, idx2):
        m1[i], m2[j] = m2[j], m1[i]
    return AttackGroup(tuple(m1)), AttackGroup(tuple(m2))


def unbalanced_crossover(g1: AttackGroup, g2: AttackGroup, rng,
                         k_min: int, k_max: int, max_attempts: int = 100):
    """Move independently drawn member counts each way.

    Size-violating draws are rejected and redrawn; after max_attempts the
    operator degrades to a no-op returning the parents.
    """
    for _ in range(max_attempts):
        n1 = rng.randint(0, g1.size())
        n2 = rng.randint(0, g2.size())
        if not (k_min <= g1.size() - n1 + n2 <= k_max):
            continue
        if not (k_min <= g2.size() - n2 + n1 <= k_max):
            continue
        idx1 = set(rng.sample(range(g1.size()), n1))
        idx2 = set(rng.sample(range(g2.size()), n2))
        take1 = [m for i, m in enumerate(g1.members) if i in idx1]
        keep1 = [m for i, m in enumerate(g1.members) if i not in idx1]
        take2 = [m for i, m in enumerate(g2.members) if i in idx2]
        keep2 = [m for i, m in enumerate(g2.members) if i not in idx2]
        return AttackGroup(tuple(keep1 + take2)), AttackGroup(tuple(keep2 + take1))
    return g1, g2


def union_intersection(g1: AttackGroup, g2: AttackGroup, rng,
                       k_min: int, k_max: int):
    """Multiset union and intersection children, repaired to the size band."""
    c1, c2 = Counter(g1.members), Counter(g2.members)
    union = sorted((c1 | c2).elements(), key=lambda g: g.key())
    inter = sorted((c1 & c2).elements(), key=lambda g: g.key())
    while len(union) > k_max:
        union.pop(rng.randrange(len(union)))
    pool = sorted((c1 + c2).elements(), key=lambda g: g.key())
    while len(inter) < k_min:
        inter.append(pool[rng.randrange(len(pool))])
    while len(inter) > k_max:  # possible only if k_max < both parents' overlap
        inter.pop(rng.randrange(len(inter)))
    return AttackGroup(tuple(union)), AttackGroup(tuple(inter))


def dream_team(ranked_individuals, rng, k_min: int, k_max: int) -> AttackGroup:
    """Draw a group from the top quartile of individuals.

    ranked_individuals must be sorted best-first by individual fitness.
    Sampling is without replacement while the quartile lasts.
    """
    if not ranked_individuals:
        raise ValueError("dream team needs a non-empty individual population")
    quartile = list(ranked_individuals[:max(1, math.ceil(len(ranked_individuals) / 4))])
    size = rng.randint(k_min, k_max)
    members = []
    if size <= len(quartile):
        members = rng.sample(quartile, size)
    else:
        members = list(quartile)
        while len(members) < size:
            members.append(quartile[rng.randrange(len(quartile))])
    return AttackGroup(tuple(members))
