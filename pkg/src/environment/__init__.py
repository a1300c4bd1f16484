"""Physical scenario: room, APs, learning points, UEs and geometric queries"""

from src.environment.geometry import ApNode, Environment, Point3, Room, angle_offset
from src.environment.layout import (
    EnvironmentConfig,
    auto_ap_layout,
    build_environment,
    default_sector_layout,
    generate_lp_grid,
    place_ues,
)

__all__ = [
    'ApNode',
    'Environment',
    'EnvironmentConfig',
    'Point3',
    'Room',
    'angle_offset',
    'auto_ap_layout',
    'build_environment',
    'default_sector_layout',
    'generate_lp_grid',
    'place_ues',
]
