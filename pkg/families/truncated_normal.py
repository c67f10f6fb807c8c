import math

import numpy as np
from scipy.special import ndtr

from families.base_distribution import BaseDistribution, Interval
from medmech.errors import ConfigError

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class TruncatedNormalDistribution(BaseDistribution):
    """Normal(mu, sigma) conditioned on the support."""

    FAMILY = "truncated-normal"

    def __init__(self, support: Interval, params=None):
        super().__init__(support, params)
        try:
            self.mu = float(self.params["mu"])
            self.sigma = float(self.params["sigma"])
        except KeyError as e:
            raise ConfigError(f"truncated-normal requires params mu and sigma, missing {e}")
        if not self.sigma > 0:
            raise ConfigError(f"truncated-normal sigma must be positive, got {self.sigma}")
        self._cdf_lo = float(ndtr((support.lo - self.mu) / self.sigma))
        self._mass = float(ndtr((support.hi - self.mu) / self.sigma)) - self._cdf_lo
        if not self._mass > 1e-300:
            raise ConfigError("truncated-normal support carries no probability mass")

    def _pdf(self, x: np.ndarray) -> np.ndarray:
        z = (x - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) * _INV_SQRT_2PI / (self.sigma * self._mass)

    def _cdf(self, x: np.ndarray) -> np.ndarray:
        return (ndtr((x - self.mu) / self.sigma) - self._cdf_lo) / self._mass
