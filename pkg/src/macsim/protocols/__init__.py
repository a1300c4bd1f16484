"""MAC protocols and the single-run entry point"""

from pathlib import Path
from typing import Dict, Optional, Sequence, Type, Union

from src.environment.geometry import Environment
from src.macsim.metrics import MetricsRecord
from src.macsim.protocols.base import MacProtocol
from src.macsim.protocols.baseline import BaselineProtocol
from src.macsim.protocols.centralized import CentralizedProtocol
from src.macsim.protocols.dualband import DualBandProtocol, LearnedState
from src.macsim.scenario import Scenario, SimSettings
from src.utils.errors import ConfigurationError

PROTOCOLS: Dict[str, Type[MacProtocol]] = {
    "baseline": BaselineProtocol,
    "centralized": CentralizedProtocol,
    "dualband": DualBandProtocol,
}


def make_protocol(
    name: str,
    scenario: Scenario,
    databases: Optional[LearnedState] = None,
    phases: Optional[Sequence[float]] = None,
) -> MacProtocol:
    """Instantiate a protocol by its config name"""
    if name not in PROTOCOLS:
        raise ConfigurationError(f"Unknown protocol '{name}', expected one of {sorted(PROTOCOLS)}", key="protocols")
    if name == "dualband":
        return DualBandProtocol(scenario, databases=databases)
    if name == "baseline":
        return BaselineProtocol(scenario, phases=phases)
    return CentralizedProtocol(scenario)


def run_protocol(
    name: str,
    env: Environment,
    settings: SimSettings,
    seed: int,
    horizon_s: float,
    trace_path: Optional[Union[str, Path]] = None,
    databases: Optional[LearnedState] = None,
    phases: Optional[Sequence[float]] = None,
) -> MetricsRecord:
    """
    Run one protocol over one scenario.

    Args:
        name: baseline, centralized or dualband
        env: Scenario geometry
        settings: Radio, MAC, traffic and learning settings
        seed: Master seed
        horizon_s: Simulated seconds
        trace_path: Per-frame CSV trace, or None
        databases: Prebuilt (databases, exemplars) for dualband
        phases: Beacon phases for baseline (random when None)

    Returns:
        MetricsRecord with conservation checked
    """
    scenario = Scenario(env, settings, seed, horizon_s, protocol=name, trace_path=trace_path)
    return make_protocol(name, scenario, databases=databases, phases=phases).run()


__all__ = [
    'PROTOCOLS',
    'MacProtocol',
    'BaselineProtocol',
    'CentralizedProtocol',
    'DualBandProtocol',
    'make_protocol',
    'run_protocol',
]
