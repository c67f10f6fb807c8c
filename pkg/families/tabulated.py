import numpy as np

from families.base_distribution import BaseDistribution, Interval
from medmech.errors import ConfigError


class TabulatedDistribution(BaseDistribution):
    """
    Piecewise-linear density through user points [[x0, y0], ..., [xn, yn]].
    The table is renormalized to integrate to one; the factor applied is kept
    in ``normalization``.
    """

    FAMILY = "tabulated"

    def __init__(self, support: Interval, params=None):
        super().__init__(support, params)
        points = np.asarray(self.params.get("points", []), dtype=float)
        if points.ndim != 2 or points.shape[1] != 2 or len(points) < 2:
            raise ConfigError("tabulated pdf needs params.points as a list of at least two [x, y] pairs")
        xs, ys = points[:, 0], points[:, 1]
        if np.any(np.diff(xs) <= 0):
            raise ConfigError("tabulated pdf abscissae must be strictly increasing")
        if not (np.isclose(xs[0], support.lo) and np.isclose(xs[-1], support.hi)):
            raise ConfigError(f"tabulated pdf spans [{xs[0]}, {xs[-1]}] but support is {support.as_list()}")
        if np.any(ys < 0):
            raise ConfigError("tabulated pdf values must be non-negative")
        area = float(np.sum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)))
        if not area > 0:
            raise ConfigError("tabulated pdf integrates to zero")
        self.normalization = 1.0 / area
        self._xs = xs
        self._ys = ys * self.normalization
        self._slopes = np.diff(self._ys) / np.diff(xs)
        self._cum = np.concatenate([[0.0], np.cumsum(0.5 * (self._ys[1:] + self._ys[:-1]) * np.diff(xs))])

    def _pdf(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self._xs, self._ys)

    def _cdf(self, x: np.ndarray) -> np.ndarray:
        idx = np.clip(np.searchsorted(self._xs, x, side="right") - 1, 0, len(self._xs) - 2)
        d = x - self._xs[idx]
        return self._cum[idx] + self._ys[idx] * d + 0.5 * self._slopes[idx] * d * d
