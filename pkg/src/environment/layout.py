"""Deterministic layouts: learning-point grid, sector boresights, AP grid, UE placement"""

import math
from dataclasses import dataclass
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.environment.geometry import ApNode, Environment, Point3, Room, points_from_rows
from src.utils.errors import ConfigurationError
from src.utils.helpers import named_rng
from src.utils.logger import get_logger

logger = get_logger()

# Downward tilts (degrees below horizontal) per number of elevation rows
ELEVATION_TILTS_DEG = {
    1: (45.0,),
    2: (30.0, 60.0),
    3: (20.0, 45.0, 70.0),
}
MAX_SINGLE_RING = 12

UE_PLACEMENTS = ("random", "lps")


@dataclass(frozen=True)
class EnvironmentConfig:
    """Scenario geometry settings"""
    width_m: float = 12.0
    depth_m: float = 6.0
    height_m: float = 3.0
    num_aps: int = 8
    ap_positions: Optional[Tuple[Tuple[float, float, float], ...]] = None
    num_ues: int = 24
    ue_positions: Optional[Tuple[Tuple[float, float, float], ...]] = None
    ue_placement: str = "random"
    ue_height_m: float = 1.0
    num_lps: int = 90
    lp_height_m: float = 1.0
    num_sectors: int = 36

    def validate(self) -> None:
        for key in ("width_m", "depth_m", "height_m"):
            if getattr(self, key) <= 0:
                raise ConfigurationError("must be positive", key=key)
        if self.num_aps < 1:
            raise ConfigurationError("must be >= 1", key="num_aps")
        if self.num_ues < 0:
            raise ConfigurationError("must be >= 0", key="num_ues")
        if self.num_lps < 1:
            raise ConfigurationError("must be >= 1", key="num_lps")
        if self.ue_placement not in UE_PLACEMENTS:
            raise ConfigurationError(f"must be one of {UE_PLACEMENTS}", key="ue_placement")
        if not 0 < self.lp_height_m < self.height_m:
            raise ConfigurationError("must lie strictly between floor and ceiling", key="lp_height_m")
        if not 0 <= self.ue_height_m <= self.height_m:
            raise ConfigurationError("must lie between floor and ceiling", key="ue_height_m")
        if self.ap_positions is not None and len(self.ap_positions) != self.num_aps:
            raise ConfigurationError("length must equal num_aps", key="ap_positions")
        if self.ue_positions is not None and len(self.ue_positions) != self.num_ues:
            raise ConfigurationError("length must equal num_ues", key="ue_positions")
        default_sector_layout(self.num_sectors)

    @property
    def room(self) -> Room:
        return Room(self.width_m, self.depth_m, self.height_m)


def generate_lp_grid(room: Room, count: int, height: float = 1.0) -> List[Point3]:
    """
    Place learning points on a near-square, cell-centred grid.

    n_x = round(sqrt(count * width / depth)), n_y = ceil(count / n_x); cells
    are filled row by row (y outer, x inner) and truncated to ``count``.

    Args:
        room: Room box
        count: Number of learning points
        height: LP height in meters

    Returns:
        List of ``count`` points
    """
    if count < 1:
        raise ConfigurationError("LP count must be >= 1", key="num_lps")
    if room.width <= 0 or room.depth <= 0:
        raise ConfigurationError("Room must have a positive floor area", key="room")

    n_x = max(1, int(math.floor(math.sqrt(count * room.width / room.depth) + 0.5)))
    n_y = math.ceil(count / n_x)
    dx = room.width / n_x
    dy = room.depth / n_y

    points = []
    for j in range(n_y):
        for i in range(n_x):
            if len(points) == count:
                return points
            points.append(Point3((i + 0.5) * dx, (j + 0.5) * dy, height))
    return points


def _layout_shape(num_sectors: int) -> Tuple[int, int]:
    if num_sectors < 1:
        raise ConfigurationError("Sector count must be >= 1", key="num_sectors")
    if num_sectors == 1:
        return 1, 0
    if num_sectors % 3 == 0 and num_sectors // 3 >= 4:
        return num_sectors // 3, 3
    if num_sectors % 2 == 0 and num_sectors // 2 >= 4:
        return num_sectors // 2, 2
    if num_sectors <= MAX_SINGLE_RING:
        return num_sectors, 1
    raise ConfigurationError(
        f"{num_sectors} sectors cannot be tiled as azimuth x elevation rows", key="num_sectors"
    )


def default_sector_layout(num_sectors: int) -> List[Tuple[float, float, float]]:
    """
    Boresights for a ceiling-mounted AP, azimuth-major.

    Sector ID k+1 is the k-th vector: azimuth steps uniformly over 360 degrees,
    and within each azimuth the elevation rows go from shallow to steep tilt.
    A single sector points straight down.

    Args:
        num_sectors: Sector count D

    Returns:
        D unit vectors
    """
    n_az, n_el = _layout_shape(num_sectors)
    if n_el == 0:
        return [(0.0, 0.0, -1.0)]

    tilts = ELEVATION_TILTS_DEG[n_el]
    vectors = []
    for a in range(n_az):
        az = 2.0 * math.pi * a / n_az
        for tilt in tilts:
            el = math.radians(tilt)
            vec = (math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), -math.sin(el))
            norm = math.sqrt(sum(c * c for c in vec))
            vectors.append(tuple(c / norm for c in vec))
    return vectors


def _grid_positions(room: Room, n_x: int, count: int, height: float) -> List[Point3]:
    n_y = math.ceil(count / n_x)
    dx = room.width / n_x
    dy = room.depth / n_y
    cells = [Point3((i + 0.5) * dx, (j + 0.5) * dy, height) for j in range(n_y) for i in range(n_x)]
    return cells[:count]


def _min_pairwise(points: Sequence[Point3]) -> float:
    if len(points) < 2:
        return math.inf
    return min(a.distance_to(b) for a, b in combinations(points, 2))


def auto_ap_layout(room: Room, count: int) -> List[Point3]:
    """
    Ceiling grid maximizing the minimum pairwise AP distance.

    Every column count 1..count is tried; the layout with the largest minimum
    pairwise distance wins, ties going to the fewest columns.
    """
    if count < 1:
        raise ConfigurationError("AP count must be >= 1", key="num_aps")

    best, best_gap = None, -1.0
    for n_x in range(1, count + 1):
        candidate = _grid_positions(room, n_x, count, room.height)
        gap = _min_pairwise(candidate)
        if gap > best_gap + 1e-12:
            best, best_gap = candidate, gap
    return best


def place_ues(
    room: Room,
    count: int,
    mode: str,
    rng: np.random.Generator,
    height: float = 1.0,
    learning_points: Sequence[Point3] = (),
) -> List[Point3]:
    """
    Place static UEs.

    Args:
        room: Room box
        count: Number of UEs
        mode: 'random' (uniform over the floor plan at ``height``) or 'lps'
            (co-located with a seeded selection of learning points)
        rng: Placement generator
        height: UE height for random placement
        learning_points: Candidate LPs for 'lps' mode

    Returns:
        UE positions
    """
    if mode == "random":
        xs = rng.uniform(0.0, room.width, size=count)
        ys = rng.uniform(0.0, room.depth, size=count)
        return [Point3(float(x), float(y), height) for x, y in zip(xs, ys)]
    if mode == "lps":
        if not learning_points:
            raise ConfigurationError("'lps' placement needs learning points", key="ue_placement")
        replace = count > len(learning_points)
        picks = rng.choice(len(learning_points), size=count, replace=replace)
        return [learning_points[int(i)] for i in picks]
    raise ConfigurationError(f"Unknown placement '{mode}'", key="ue_placement")


def build_environment(
    config: EnvironmentConfig,
    seed: int = 0,
    tx_power_mmw_dbm: float = 10.0,
    tx_power_wifi_dbm: float = 20.0,
) -> Environment:
    """
    Assemble the scenario described by ``config``.

    Args:
        config: Environment section
        seed: Master seed (drives UE placement only)
        tx_power_mmw_dbm: AP 60 GHz transmit power
        tx_power_wifi_dbm: AP 5 GHz transmit power

    Returns:
        Environment
    """
    config.validate()
    room = config.room
    lps = generate_lp_grid(room, config.num_lps, config.lp_height_m)

    if config.ap_positions is not None:
        ap_points = points_from_rows(config.ap_positions)
    else:
        ap_points = auto_ap_layout(room, config.num_aps)

    boresights = tuple(default_sector_layout(config.num_sectors))
    aps = tuple(
        ApNode(
            id=i,
            position=p,
            boresights=boresights,
            tx_power_mmw_dbm=tx_power_mmw_dbm,
            tx_power_wifi_dbm=tx_power_wifi_dbm,
        )
        for i, p in enumerate(ap_points)
    )

    if config.ue_positions is not None:
        ues = points_from_rows(config.ue_positions)
    else:
        ues = place_ues(
            room,
            config.num_ues,
            config.ue_placement,
            named_rng(seed, "placement"),
            height=config.ue_height_m,
            learning_points=lps,
        )

    env = Environment(room=room, aps=aps, learning_points=tuple(lps), ues=tuple(ues))
    logger.debug(f"Environment built: {env.num_aps} APs, {env.num_lps} LPs, {env.num_ues} UEs")
    return env
