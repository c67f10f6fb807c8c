"""
Base Distribution
=================
공통 pdf/cdf/quantile 로직을 제공하는 추상 베이스 클래스.

사용법:
    class MyDistribution(BaseDistribution):
        FAMILY = "my-family"

        def _pdf(self, x: np.ndarray) -> np.ndarray:
            ...

        def _cdf(self, x: np.ndarray) -> np.ndarray:
            ...

Subclasses only see in-support numpy arrays; argument checking, clamping and
the bisection quantile live here. Instances are immutable after __init__.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from medmech.errors import ConfigError, DomainError


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ConfigError(f"support bounds must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise ConfigError(f"degenerate support [{self.lo}, {self.hi}]: need lo < hi")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def grid(self, n: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, int(n))

    def contains(self, x, slack: float = 1e-12) -> bool:
        eps = slack * self.width
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.lo - eps) & (x <= self.hi + eps)))

    def as_list(self):
        return [self.lo, self.hi]


class BaseDistribution(ABC):
    """
    Continuous law with strictly positive density on a closed interval.

    서브클래스에서 구현해야 하는 메서드:
    - _pdf(x): density on in-support points
    - _cdf(x): distribution function on in-support points
    """

    # 서브클래스에서 override
    FAMILY: str = ""
    QUANTILE_MAX_ITER: int = 200
    QUANTILE_TOL: float = 1e-10

    def __init__(self, support: Interval, params: Optional[Dict[str, Any]] = None):
        self.support = support
        self.params: Dict[str, Any] = dict(params or {})
        # tabulated families rescale their input; everything else is already normalized
        self.normalization: float = 1.0

    @abstractmethod
    def _pdf(self, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _cdf(self, x: np.ndarray) -> np.ndarray:
        pass

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.params}, support={self.support.as_list()})"

    def describe(self) -> Dict[str, Any]:
        return {"family": self.FAMILY, "params": self.params, "support": self.support.as_list()}

    def pdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        if not self.support.contains(x_arr):
            raise DomainError(f"pdf argument outside support {self.support.as_list()}")
        x_arr = np.clip(x_arr, self.support.lo, self.support.hi)
        out = np.asarray(self._pdf(x_arr), dtype=float)
        return float(out) if out.ndim == 0 else out

    def cdf(self, x):
        # clamps instead of raising, cdf is total on the real line
        x_arr = np.asarray(x, dtype=float)
        inner = np.clip(x_arr, self.support.lo, self.support.hi)
        out = np.asarray(self._cdf(inner), dtype=float)
        out = np.where(x_arr <= self.support.lo, 0.0, np.where(x_arr >= self.support.hi, 1.0, out))
        out = np.clip(out, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def raw_cdf(self, x):
        """Family cdf without the clamping to 0 and 1 at the support ends."""
        x_arr = np.asarray(x, dtype=float)
        if not self.support.contains(x_arr):
            raise DomainError(f"cdf argument outside support {self.support.as_list()}")
        out = np.asarray(self._cdf(np.clip(x_arr, self.support.lo, self.support.hi)), dtype=float)
        return float(out) if out.ndim == 0 else out

    def quantile(self, p):
        p_arr = np.asarray(p, dtype=float)
        if np.any((p_arr < 0.0) | (p_arr > 1.0)) or np.any(np.isnan(p_arr)):
            raise DomainError("quantile probability must lie in [0, 1]")
        lo = np.full(p_arr.shape, self.support.lo)
        hi = np.full(p_arr.shape, self.support.hi)
        x_tol = 1e-15 * max(1.0, abs(self.support.lo), abs(self.support.hi))
        for _ in range(self.QUANTILE_MAX_ITER):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < p_arr
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= x_tol):
                break
        out = 0.5 * (lo + hi)
        out = np.where(p_arr <= 0.0, self.support.lo, np.where(p_arr >= 1.0, self.support.hi, out))
        return float(out) if out.ndim == 0 else out
