"""
Composite Simpson helpers on top of scipy.integrate.simpson.

Everything here is vectorized; integrands are callables taking and returning
numpy arrays.
"""
from typing import Callable, Iterable

import numpy as np
from scipy.integrate import simpson

Integrand = Callable[[np.ndarray], np.ndarray]


def odd_nodes(n: int) -> int:
    """Composite Simpson wants an even number of panels."""
    n = max(int(n), 3)
    return n if n % 2 == 1 else n + 1


def panel_sums(values: np.ndarray, step: float) -> np.ndarray:
    """Three-point Simpson value of every panel [x_2i, x_2i+2]."""
    triples = np.stack([values[0:-1:2], values[1::2], values[2::2]], axis=-1)
    return simpson(triples, dx=step, axis=-1)


class CumulativeIntegral:
    """
    x -> int_a^x func(s) ds.

    Panel-wise Simpson sums on a uniform grid plus a three-point Simpson rule
    for the remainder between the last panel edge and x, so a non-negative
    integrand always gives a non-negative, panel-monotone result.

    ``breakpoints`` split [a, b] into independent segments; func is sampled
    just inside each segment so jumps located there are integrated exactly.
    """

    NUDGE = 1e-10

    def __init__(self, func: Integrand, a: float, b: float, n: int = 2001, breakpoints: Iterable[float] = ()):
        self.func = func
        self.a, self.b = float(a), float(b)
        inner = sorted({float(p) for p in breakpoints if self.a < p < self.b})
        self.cuts = np.array([self.a, *inner, self.b])
        width = self.b - self.a
        delta = self.NUDGE * width

        self._grids, self._values, self._tables, self._steps = [], [], [], []
        offset = 0.0
        for lo, hi in zip(self.cuts[:-1], self.cuts[1:]):
            m = odd_nodes(int(np.ceil(n * (hi - lo) / width)))
            grid = np.linspace(lo, hi, m)
            sample = grid.copy()
            if lo > self.a:
                sample[0] += delta
            if hi < self.b:
                sample[-1] -= delta
            values = np.broadcast_to(np.asarray(func(sample), dtype=float), sample.shape).copy()
            step = grid[1] - grid[0]
            self._grids.append(grid)
            self._values.append(values)
            self._tables.append(offset + np.concatenate([[0.0], np.cumsum(panel_sums(values, step))]))
            self._steps.append(step)
            offset = self._tables[-1][-1]
        self._total = offset

    @property
    def total(self) -> float:
        return float(self._total)

    def __call__(self, x):
        shape = np.shape(x)
        x_arr = np.clip(np.asarray(x, dtype=float).ravel(), self.a, self.b)
        seg = np.clip(np.searchsorted(self.cuts, x_arr, side="right") - 1, 0, len(self._grids) - 1)
        out = np.zeros(x_arr.shape)
        for s in np.unique(seg):
            mask = seg == s
            xs = x_arr[mask]
            grid, values, table, step = self._grids[s], self._values[s], self._tables[s], self._steps[s]
            panel = np.clip(np.floor((xs - grid[0]) / (2.0 * step)).astype(int), 0, len(table) - 2)
            left = grid[2 * panel]
            d = xs - left
            f_left = values[2 * panel]
            rest = np.zeros_like(xs)
            live = d > 0
            if np.any(live):
                dl, ll = d[live], left[live]
                f_mid = np.broadcast_to(self.func(ll + 0.5 * dl), dl.shape)
                f_x = np.broadcast_to(self.func(xs[live]), dl.shape)
                triples = np.stack([f_left[live], f_mid, f_x], axis=-1)
                rest[live] = 0.5 * dl * simpson(triples, dx=1.0, axis=-1)
            out[mask] = table[panel] + rest
        return float(out[0]) if len(shape) == 0 else out.reshape(shape)


class MassIntegral:
    """
    x -> int_lo^x weight(s) dDist(s), integrated in probability coordinates
    u = cdf(s) so unbounded endpoint densities stay harmless.
    """

    def __init__(self, weight: Integrand, dist, n: int = 2001, breakpoints: Iterable[float] = ()):
        self.dist = dist
        cuts = [float(dist.cdf(p)) for p in breakpoints]
        self._cum = CumulativeIntegral(lambda u: weight(dist.quantile(u)), 0.0, 1.0, n, cuts)

    @property
    def total(self) -> float:
        return self._cum.total

    def __call__(self, x):
        return self._cum(self.dist.cdf(x))
