"""Exception types shared by the simulator packages"""

from typing import Optional


class SimulatorError(Exception):
    """Base class for all simulator errors"""


class ConfigurationError(SimulatorError, ValueError):
    """Invalid configuration value, section or key"""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.message = message
        self.key = key
        self.line = line
        where = ""
        if key is not None:
            where = f"[{key}"
            if line is not None:
                where += f" @ line {line}"
            where += "] "
        super().__init__(f"{where}{message}")


class GeometryError(SimulatorError, ValueError):
    """Degenerate geometric query (coincident points, position outside the room)"""


class CoverageError(SimulatorError):
    """An AP has no learned coverage for the requested operation"""


class ProtocolError(SimulatorError):
    """A MAC protocol message referenced state that does not exist"""


class DomainError(SimulatorError, ValueError):
    """Argument outside the mathematical domain of a formula"""


class ConsistencyError(SimulatorError):
    """Internal consistency fault; the run cannot continue"""
