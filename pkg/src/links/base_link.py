"""Base class for the deterministic and Gaussian links."""
import logging
from abc import ABC, abstractmethod

import numpy as np

from ..allocation import RateAllocation
from ..channel import ChannelLevels
from ..constants import MAX_RECORDED_FAILURES
from ..errors import PreconditionError
from ..stats import OutageEstimate, child_rng

logger = logging.getLogger(__name__)


class BaseLink(ABC):
    def __init__(self, levels: ChannelLevels, allocation: RateAllocation):
        levels.require_strong_direct()
        self.levels = levels
        self.allocation = allocation

    @abstractmethod
    def run_trial(self, rng: np.random.Generator) -> bool:
        """Run one random trial; True when every message is recovered."""
        pass

    def params(self) -> dict:
        return {"levels": self.levels.as_dict(), "allocation": self.allocation.as_dict()}

    def simulate(self, trials: int, seed: int) -> OutageEstimate:
        """Count failed trials, each drawn from its own stream under ``seed``."""
        if trials < 1:
            raise PreconditionError("trials must be >= 1")
        failed = []
        for index in range(trials):
            if not self.run_trial(child_rng(seed, index)):
                failed.append(index)
        logger.info("%s: %d of %d trials failed", type(self).__name__, len(failed), trials)
        return OutageEstimate(
            samples=trials,
            failures=len(failed),
            seed=seed,
            failed_indices=tuple(failed[:MAX_RECORDED_FAILURES]),
            params=self.params(),
        )
