import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import betainc

from families.base_distribution import BaseDistribution, Interval
from medmech.errors import ConfigError


class BetaRescaledDistribution(BaseDistribution):
    """
    Beta(a, b) restricted to a window [u_lo, u_hi] of (0, 1) and mapped affinely
    onto the support. The default window is the whole unit interval; with a > 1
    or b > 1 that puts zero density on an endpoint, which validate_instance
    reports.
    """

    FAMILY = "beta-rescaled"

    def __init__(self, support: Interval, params=None):
        super().__init__(support, params)
        try:
            self.a = float(self.params["a"])
            self.b = float(self.params["b"])
        except KeyError as e:
            raise ConfigError(f"beta-rescaled requires params a and b, missing {e}")
        if not (self.a > 0 and self.b > 0):
            raise ConfigError(f"beta-rescaled shape parameters must be positive, got a={self.a}, b={self.b}")
        u_lo, u_hi = self.params.get("window", [0.0, 1.0])
        self.u_lo, self.u_hi = float(u_lo), float(u_hi)
        if not 0.0 <= self.u_lo < self.u_hi <= 1.0:
            raise ConfigError(f"beta-rescaled window must satisfy 0 <= u_lo < u_hi <= 1, got {[u_lo, u_hi]}")
        self._inc_lo = float(betainc(self.a, self.b, self.u_lo))
        self._mass = float(betainc(self.a, self.b, self.u_hi)) - self._inc_lo
        if not self._mass > 0:
            raise ConfigError("beta-rescaled window carries no probability mass")
        self._jacobian = (self.u_hi - self.u_lo) / support.width
        self._norm = beta_fn(self.a, self.b) * self._mass

    def _to_unit(self, x: np.ndarray) -> np.ndarray:
        return self.u_lo + (x - self.support.lo) * self._jacobian

    def _pdf(self, x: np.ndarray) -> np.ndarray:
        u = self._to_unit(x)
        with np.errstate(divide="ignore"):
            return np.power(u, self.a - 1.0) * np.power(1.0 - u, self.b - 1.0) / self._norm * self._jacobian

    def _cdf(self, x: np.ndarray) -> np.ndarray:
        return (betainc(self.a, self.b, self._to_unit(x)) - self._inc_lo) / self._mass
