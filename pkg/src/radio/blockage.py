"""Human blockage: per AP-UE link on/off renewal process"""

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from src.utils.errors import ConfigurationError
from src.utils.helpers import named_rng


@dataclass(frozen=True)
class BlockageConfig:
    """Blockage section (off by default)"""
    enabled: bool = False
    mean_blocked_s: float = 0.2
    mean_unblocked_s: float = 2.0
    loss_db: float = 30.0

    def validate(self) -> None:
        for key in ("mean_blocked_s", "mean_unblocked_s"):
            if getattr(self, key) <= 0:
                raise ConfigurationError("must be positive", key=key)
        if self.loss_db < 0:
            raise ConfigurationError("must be >= 0", key="loss_db")


class BlockageProcess:
    """
    Alternating exponential unblocked/blocked durations for every AP-UE link.

    Every link starts unblocked at t = 0 and owns its own generator, so the
    toggle times of one link do not depend on how many others exist.
    """

    def __init__(self, config: BlockageConfig, num_aps: int, num_ues: int, seed: int):
        self.config = config
        self.num_aps = num_aps
        self.num_ues = num_ues
        self._blocked: Dict[Tuple[int, int], bool] = {}
        self._rngs: Dict[Tuple[int, int], np.random.Generator] = {}
        if config.enabled:
            for ap in range(num_aps):
                for ue in range(num_ues):
                    self._blocked[(ap, ue)] = False
                    self._rngs[(ap, ue)] = named_rng(seed, "blockage", ap, ue)

    @property
    def enabled(self) -> bool:
        return self.config.enabled

    @property
    def loss_db(self) -> float:
        return self.config.loss_db

    def _draw(self, link: Tuple[int, int], blocked: bool) -> float:
        mean = self.config.mean_blocked_s if blocked else self.config.mean_unblocked_s
        return float(self._rngs[link].exponential(mean))

    def first_toggles(self) -> List[Tuple[float, int, int]]:
        """(time, ap, ue) of every link's first blocking onset"""
        return [(self._draw(link, False), link[0], link[1]) for link in sorted(self._rngs)]

    def toggle(self, ap: int, ue: int, now: float) -> Tuple[bool, float]:
        """
        Flip a link's state.

        Returns:
            (new blocked state, time of the next toggle)
        """
        link = (ap, ue)
        state = not self._blocked[link]
        self._blocked[link] = state
        return state, now + self._draw(link, state)

    def is_blocked(self, ap: int, ue: int) -> bool:
        return self._blocked.get((ap, ue), False)
