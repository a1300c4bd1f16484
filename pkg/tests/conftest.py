"""Shared fixtures: small scenarios built by hand"""

from typing import Sequence, Tuple

import pytest

from src.environment.geometry import ApNode, Environment, Point3, Room
from src.environment.layout import default_sector_layout, generate_lp_grid

Coords = Tuple[float, float, float]


def make_env(
    ap_positions: Sequence[Coords],
    ue_positions: Sequence[Coords] = (),
    num_sectors: int = 12,
    room: Room = Room(12.0, 6.0, 3.0),
    num_lps: int = 20,
) -> Environment:
    """Environment with explicit AP and UE coordinates"""
    boresights = tuple(default_sector_layout(num_sectors))
    aps = tuple(ApNode(id=i, position=Point3(*p), boresights=boresights) for i, p in enumerate(ap_positions))
    lps = tuple(generate_lp_grid(room, num_lps, 1.0))
    return Environment(room=room, aps=aps, learning_points=lps, ues=tuple(Point3(*u) for u in ue_positions))


@pytest.fixture
def room():
    """Default 12 x 6 x 3 m room"""
    return Room(12.0, 6.0, 3.0)


@pytest.fixture
def two_ap_env():
    """Two ceiling APs and three UEs"""
    return make_env(
        ap_positions=[(3.0, 3.0, 3.0), (9.0, 3.0, 3.0)],
        ue_positions=[(2.0, 2.0, 1.0), (6.0, 4.0, 1.0), (10.0, 2.0, 1.0)],
    )
