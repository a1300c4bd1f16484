"""Discrete-event MAC simulator for the 60 GHz / 5 GHz WLAN"""

from src.macsim.engine import EventKind, EventLoop, SimEvent
from src.macsim.frames import CONTROLLER, Band, FrameKind, MacFrame, Outcome, Packet
from src.macsim.metrics import MetricsRecord, analytic_rn, compute_metrics
from src.macsim.scenario import MacConfig, Scenario, SimSettings

__all__ = [
    'EventKind',
    'EventLoop',
    'SimEvent',
    'CONTROLLER',
    'Band',
    'FrameKind',
    'MacFrame',
    'Outcome',
    'Packet',
    'MetricsRecord',
    'analytic_rn',
    'compute_metrics',
    'MacConfig',
    'Scenario',
    'SimSettings',
]
