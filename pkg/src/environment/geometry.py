"""Scenario geometry: points, room box, AP nodes and the environment container"""

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from src.utils.errors import ConfigurationError, GeometryError


@dataclass(frozen=True)
class Point3:
    """Position in meters; z is height above the floor"""
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise GeometryError(f"Non-finite coordinate in {self}")
        if self.z < 0:
            raise GeometryError(f"Negative height in {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def translated(self, dx: float, dy: float, dz: float) -> "Point3":
        return Point3(self.x + dx, self.y + dy, self.z + dz)

    def distance_to(self, other: "Point3") -> float:
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))


@dataclass(frozen=True)
class Room:
    """Axis-aligned box with one corner at the origin"""
    width: float = 12.0
    depth: float = 6.0
    height: float = 3.0

    @property
    def area(self) -> float:
        return self.width * self.depth

    def contains(self, p: Point3, strict: bool = False) -> bool:
        if strict:
            return 0 < p.x < self.width and 0 < p.y < self.depth and 0 < p.z < self.height
        return 0 <= p.x <= self.width and 0 <= p.y <= self.depth and 0 <= p.z <= self.height


@dataclass(frozen=True)
class ApNode:
    """Dual-band AP: sectored 60 GHz front end plus an omni 5 GHz radio"""
    id: int
    position: Point3
    boresights: Tuple[Tuple[float, float, float], ...]
    tx_power_mmw_dbm: float = 10.0
    tx_power_wifi_dbm: float = 20.0

    def __post_init__(self):
        if len(self.boresights) < 1:
            raise ConfigurationError(f"AP {self.id} needs at least one sector", key="num_sectors")
        for vec in self.boresights:
            norm = math.sqrt(sum(c * c for c in vec))
            if abs(norm - 1.0) > 1e-9:
                raise ConfigurationError(
                    f"AP {self.id} boresight {vec} is not unit length", key="num_sectors"
                )

    @property
    def num_sectors(self) -> int:
        return len(self.boresights)

    @property
    def sector_ids(self) -> range:
        return range(1, self.num_sectors + 1)

    def boresight(self, sector_id: int) -> Tuple[float, float, float]:
        if not 1 <= sector_id <= self.num_sectors:
            raise GeometryError(f"AP {self.id} has no sector {sector_id} (1..{self.num_sectors})")
        return self.boresights[sector_id - 1]


@dataclass(frozen=True)
class Environment:
    """Room, APs, learning points and UE placements of one scenario"""
    room: Room
    aps: Tuple[ApNode, ...]
    learning_points: Tuple[Point3, ...]
    ues: Tuple[Point3, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.aps) < 1:
            raise ConfigurationError("At least one AP is required", key="num_aps")
        if len(self.learning_points) < 1:
            raise ConfigurationError("At least one learning point is required", key="num_lps")
        if [ap.id for ap in self.aps] != list(range(len(self.aps))):
            raise ConfigurationError("AP ids must be unique and contiguous from 0", key="aps")
        for ap in self.aps:
            if not self.room.contains(ap.position):
                raise GeometryError(f"AP {ap.id} at {ap.position} is outside the room")
        for p in (*self.learning_points, *self.ues):
            if not self.room.contains(p):
                raise GeometryError(f"Position {p} is outside the room")

    @property
    def num_aps(self) -> int:
        return len(self.aps)

    @property
    def num_lps(self) -> int:
        return len(self.learning_points)

    @property
    def num_ues(self) -> int:
        return len(self.ues)

    def with_ues(self, ues: Sequence[Point3]) -> "Environment":
        return Environment(room=self.room, aps=self.aps, learning_points=self.learning_points, ues=tuple(ues))


def angle_offset(ap: ApNode, sector_id: int, target: Point3) -> float:
    """
    Angle between a sector boresight and the AP->target direction.

    Args:
        ap: Transmitting AP
        sector_id: Sector (1..D_n)
        target: Receiver position

    Returns:
        Offset in radians, within [0, pi]
    """
    bx, by, bz = ap.boresight(sector_id)
    dx = target.x - ap.position.x
    dy = target.y - ap.position.y
    dz = target.z - ap.position.z
    norm = math.sqrt(dx * dx + dy * dy + dz * dz)
    if norm == 0.0:
        raise GeometryError(f"Target {target} coincides with AP {ap.id}")
    cos_angle = (bx * dx + by * dy + bz * dz) / norm
    return math.acos(max(-1.0, min(1.0, cos_angle)))


def points_from_rows(rows: Sequence[Sequence[float]]) -> List[Point3]:
    """Convert [[x, y, z], ...] config rows into points"""
    return [Point3(float(r[0]), float(r[1]), float(r[2])) for r in rows]
