"""Hexagonal tessellation of a macrocell, K-reuse slot plan and link SINR."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SQRT3 = math.sqrt(3.0)

# axial neighbour offsets, counterclockwise starting at +x
HEX_DIRECTIONS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class RadioParams:
    """Radio constants shared by every relay in the tessellation.

    ``sensitivity`` defaults to the value at which ``transmit_power`` is exactly
    the minimum power needed to cover one relaying distance.
    """

    transmit_power: float
    path_loss_exponent: float
    noise_power: float
    subcell_radius: float
    sensitivity: float | None = None

    def __post_init__(self):
        for name in ("transmit_power", "noise_power", "subcell_radius"):
            if not getattr(self, name) > 0:
                raise GridError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.path_loss_exponent < 2:
            raise GridError("path_loss_exponent must be >= 2")
        if self.sensitivity is not None:
            if self.sensitivity <= 0:
                raise GridError("sensitivity must be > 0")
            if self.transmit_power < self.min_power * (1 - 1e-12):
                raise GridError(
                    f"transmit_power {self.transmit_power} below minimum {self.min_power}"
                )

    @property
    def relay_distance(self) -> float:
        return SQRT3 * self.subcell_radius

    @property
    def min_power(self) -> float:
        eps = self.sensitivity
        if eps is None:
            return self.transmit_power
        return eps * self.relay_distance ** self.path_loss_exponent

    @classmethod
    def from_relay_distance(cls, relay_distance: float, **kw) -> "RadioParams":
        return cls(subcell_radius=relay_distance / SQRT3, **kw)


def subcell_count(rings: int) -> int:
    return 1 + 3 * rings * (rings + 1)


def hex_distance(a: tuple[int, int], b: tuple[int, int]) -> int:
    dq, dr = a[0] - b[0], a[1] - b[1]
    return max(abs(dq), abs(dr), abs(dq + dr))


def _norm2(dq: int, dr: int) -> int:
    # squared centre distance in units of d_r^2 (exact integer)
    return dq * dq + dq * dr + dr * dr


def reuse_shift(K: int) -> tuple[int, int]:
    """Cluster shift (i, j) with i^2 + ij + j^2 = K, preferring the largest i."""
    for i in range(K, 0, -1):
        for j in range(0, i + 1):
            if i * i + i * j + j * j == K:
                return i, j
    raise GridError(f"K={K} is not a valid hexagonal cluster size (i^2+ij+j^2)")


def _slot_table(K: int):
    i, j = reuse_shift(K)
    u = (i, j)
    v = (-j, i + j)  # u rotated by 60 degrees

    def residue(q, r):
        a = ((i + j) * q + j * r) // K
        b = (i * r - j * q) // K
        return (q - a * u[0] - b * v[0], r - a * u[1] - b * v[1])

    reps = sorted({residue(q, r) for q in range(-2 * K, 2 * K) for r in range(-2 * K, 2 * K)})
    if len(reps) != K:
        raise GridError(f"slot tiling for K={K} produced {len(reps)} classes")
    # put the class of the origin first so the centre subcell gets slot 1
    origin = residue(0, 0)
    reps.remove(origin)
    reps.insert(0, origin)
    index = {rep: k + 1 for k, rep in enumerate(reps)}
    return lambda q, r: index[residue(q, r)]


@dataclass
class HexGrid:
    ring_count: int
    relay_distance: float
    reuse_factor: int
    coords: list[tuple[int, int]]
    slot_of: list[int]
    destination: int = 0
    index: dict[tuple[int, int], int] = field(repr=False, default_factory=dict)
    neighbors: list[tuple[int, ...]] = field(repr=False, default_factory=list)

    def __post_init__(self):
        if not self.index:
            self.index = {c: k for k, c in enumerate(self.coords)}
        if not self.neighbors:
            self.neighbors = [
                tuple(
                    self.index[(q + dq, r + dr)]
                    for dq, dr in HEX_DIRECTIONS
                    if (q + dq, r + dr) in self.index
                )
                for q, r in self.coords
            ]
        if not 0 <= self.destination < len(self.coords):
            raise GridError(f"destination {self.destination} out of range")

    def __len__(self):
        return len(self.coords)

    @property
    def centers(self) -> np.ndarray:
        q = np.array([c[0] for c in self.coords], dtype=float)
        r = np.array([c[1] for c in self.coords], dtype=float)
        return np.column_stack([self.relay_distance * (q + r / 2), self.relay_distance * SQRT3 / 2 * r])

    def ring(self, cell: int) -> int:
        return hex_distance(self.coords[cell], (0, 0))

    def ring_members(self, ring: int) -> list[int]:
        return [k for k in range(len(self)) if self.ring(k) == ring]

    def distance(self, a: int, b: int) -> float:
        qa, ra = self.coords[a]
        qb, rb = self.coords[b]
        return self.relay_distance * math.sqrt(_norm2(qa - qb, ra - rb))

    def with_destination(self, destination: int) -> "HexGrid":
        return HexGrid(
            self.ring_count, self.relay_distance, self.reuse_factor,
            self.coords, self.slot_of, destination, self.index, self.neighbors,
        )

    def co_slot_min_distance(self) -> float:
        best = math.inf
        by_slot: dict[int, list[int]] = {}
        for k, s in enumerate(self.slot_of):
            by_slot.setdefault(s, []).append(k)
        for members in by_slot.values():
            for x in range(len(members)):
                for y in range(x + 1, len(members)):
                    best = min(best, self.distance(members[x], members[y]))
        return best

    def rows(self):
        """CSV dump: id, q, r, x, y, slot, is_destination."""
        xy = self.centers
        for k, (q, r) in enumerate(self.coords):
            yield (k, q, r, float(xy[k, 0]), float(xy[k, 1]), self.slot_of[k], int(k == self.destination))

    CSV_HEADER = ("id", "q", "r", "x", "y", "slot", "is_destination")


def build_grid(rings: int, relay_distance: float, K: int = 7, destination: int = 0) -> HexGrid:
    """Tessellate a macrocell into ``rings`` hexagonal rings around the BS subcell.

    Subcell ids are ordered by ring, then counterclockwise from the +x axis, so id 0
    is the central (BS) subcell.
    """
    if int(rings) != rings or rings < 1:
        raise GridError(f"ring count must be an integer >= 1, got {rings!r}")
    if K < 7:
        raise GridError(f"reuse factor K={K} < 7 cannot guarantee collision-free slots")
    if relay_distance <= 0:
        raise GridError("relay_distance must be > 0")
    slot = _slot_table(K)
    cells = [
        (q, r)
        for q in range(-rings, rings + 1)
        for r in range(-rings, rings + 1)
        if hex_distance((q, r), (0, 0)) <= rings
    ]

    def order(c):
        q, r = c
        ang = math.atan2(SQRT3 / 2 * r, q + r / 2) % (2 * math.pi)
        return (hex_distance(c, (0, 0)), round(ang, 12))

    cells.sort(key=order)
    grid = HexGrid(rings, float(relay_distance), K, cells, [slot(q, r) for q, r in cells], destination)
    if grid.co_slot_min_distance() <= 2 * relay_distance:
        raise GridError(f"K={K} slot plan violates the 2*d_r co-slot separation")
    return grid


def neighbor_priority(grid: HexGrid, source: int, destination: int | None = None) -> list[int]:
    """Neighbours of ``source`` in relay priority order (position m = index + 1).

    Sorted by centre distance to the destination; ties go to the smaller
    counterclockwise angle measured from the source->destination ray.
    """
    if destination is None:
        destination = grid.destination
    if source == destination:
        raise GridError("source and destination coincide")
    n = len(grid)
    if not (0 <= source < n and 0 <= destination < n):
        raise GridError("subcell id out of range")
    sq, sr = grid.coords[source]
    dq, dr = grid.coords[destination]
    xy = grid.centers
    ray = math.atan2(*(xy[destination] - xy[source])[::-1])

    def key(j):
        q, r = grid.coords[j]
        dx, dy = xy[j] - xy[source]
        ang = (math.atan2(dy, dx) - ray) % (2 * math.pi)
        if ang > 2 * math.pi - 1e-9:
            ang = 0.0
        return (_norm2(q - dq, r - dr), round(ang, 9))

    return sorted(grid.neighbors[source], key=key)


def interference_sum(K: int, alpha: float, interferers: int = 6, angle_offset: float = 0.0) -> float:
    """Sum of normalised first-tier co-channel gains, each at distance sqrt(K)*d_r."""
    if not 0 <= interferers <= 6:
        raise GridError("interferer count must be in 0..6")
    total = 0.0
    for i in range(interferers):
        theta = 2 * math.pi * i / 6 + angle_offset
        total += (1 + K - 2 * math.sqrt(K) * math.cos(theta)) ** (-alpha / 2)
    return total


def sinr(radio: RadioParams, K: int = 7, interferers: int = 6, angle_offset: float = 0.0) -> float:
    noise = radio.noise_power * radio.relay_distance ** radio.path_loss_exponent / radio.transmit_power
    return 1.0 / (noise + interference_sum(K, radio.path_loss_exponent, interferers, angle_offset))


def route_capacity(link_sinr: float | Sequence[float], channels: int) -> float:
    """Per-channel route capacity in bit/s/Hz: min link Shannon capacity over w_R."""
    if channels < 1:
        raise GridError("channel count must be >= 1")
    values = [link_sinr] if np.isscalar(link_sinr) else list(link_sinr)
    if not values:
        raise GridError("empty route")
    return min(math.log2(1 + s) for s in values) / channels
