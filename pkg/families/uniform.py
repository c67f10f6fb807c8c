import numpy as np

from families.base_distribution import BaseDistribution, Interval


class UniformDistribution(BaseDistribution):
    FAMILY = "uniform"

    def __init__(self, support: Interval, params=None):
        super().__init__(support, params)
        self._density = 1.0 / support.width

    def _pdf(self, x: np.ndarray) -> np.ndarray:
        return np.full(np.shape(x), self._density)

    def _cdf(self, x: np.ndarray) -> np.ndarray:
        return (x - self.support.lo) / (self.support.hi - self.support.lo)
