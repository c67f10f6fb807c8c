"""
Ironing
=======
A non-monotone threshold ingredient is replaced by the slope of the lower
convex envelope of its running integral, taken in a reparameterized
coordinate w:

    buyer : w = F(t),                 h(w) = psi(F^-1(w)),   w in [0, 1]
    seller: w = int_q1^q alpha1 dG,   h(w) = varphi(q(w)),   w in [0, w_max]

H is the trapezoid running integral of h on the w grid, L its lower convex
envelope and l the per-cell slope of L. Evaluation is piecewise constant
per cell and left-continuous.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from medmech.errors import DomainError, EnvelopeError
from medmech.model import ProblemInstance
from medmech.virtual import VirtualProfile, psi, varphi

logger = logging.getLogger(__name__)

Span = Tuple[float, float]

IRONED_REL_TOL = 1e-9


def lower_convex_envelope(w, H) -> Tuple[np.ndarray, np.ndarray]:
    """
    Greatest convex minorant of the samples (w_i, H_i) by a single monotone
    chain pass. Returns L on the same abscissae and the per-cell slopes l.
    """
    w = np.asarray(w, dtype=float)
    H = np.asarray(H, dtype=float)
    if w.ndim != 1 or w.shape != H.shape:
        raise EnvelopeError("envelope input must be two 1-D arrays of equal length")
    if len(w) < 2:
        raise EnvelopeError("envelope needs at least 2 points")
    if np.any(np.diff(w) <= 0):
        raise EnvelopeError("envelope abscissae must be strictly increasing")
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(H))):
        raise EnvelopeError("envelope input must be finite")

    hull: List[int] = []
    for i in range(len(w)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (w[a] - w[o]) * (H[i] - H[o]) - (H[a] - H[o]) * (w[i] - w[o])
            if cross > 0:
                break
            hull.pop()
        hull.append(i)

    L = np.interp(w, w[hull], H[hull])
    L[hull] = H[hull]
    slopes = np.diff(L) / np.diff(w)
    # rounding in interp can leave 1-ulp backsliding between hull segments
    slopes = np.maximum.accumulate(slopes)
    return L, slopes


@dataclass(frozen=True, eq=False)
class IronedFunction:
    side: str
    w_grid: np.ndarray
    x_grid: np.ndarray
    h: np.ndarray
    H: np.ndarray
    L: np.ndarray
    l: np.ndarray
    w_max: float
    ironed_intervals: List[Span] = field(default_factory=list)
    support: Optional[Tuple[float, float]] = None
    w_map: Optional[Callable] = None

    @property
    def w_mid(self) -> np.ndarray:
        return 0.5 * (self.w_grid[:-1] + self.w_grid[1:])

    def type_intervals(self) -> List[Span]:
        """ironed_intervals mapped back to t (buyer) or q (seller)."""
        return [(float(np.interp(a, self.w_grid, self.x_grid)), float(np.interp(b, self.w_grid, self.x_grid)))
                for a, b in self.ironed_intervals]

    def slope_at_w(self, w):
        idx = np.clip(np.searchsorted(self.w_grid, np.asarray(w, dtype=float), side="left") - 1, 0, len(self.l) - 1)
        out = self.l[idx]
        return float(out) if np.ndim(w) == 0 else out

    def smooth_at_w(self, w):
        """Linear interpolation of l through cell midpoints; constant on ironed intervals."""
        out = np.interp(np.asarray(w, dtype=float), self.w_mid, self.l)
        return float(out) if np.ndim(w) == 0 else out

    def to_w(self, x):
        if self.w_map is not None:
            return self.w_map(x)
        out = np.interp(np.asarray(x, dtype=float), self.x_grid, self.w_grid)
        return float(out) if np.ndim(x) == 0 else out


def _ironed_spans(w: np.ndarray, H: np.ndarray, L: np.ndarray) -> List[Span]:
    gap = H - L > IRONED_REL_TOL * np.maximum(1.0, np.abs(H))
    spans: List[Span] = []
    i, n = 0, len(gap)
    while i < n:
        if not gap[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and gap[j + 1]:
            j += 1
        # the envelope touches H on the grid points just outside the run
        spans.append((float(w[max(i - 1, 0)]), float(w[min(j + 1, n - 1)])))
        i = j + 1
    return spans


def _iron(side: str, w: np.ndarray, x: np.ndarray, h: np.ndarray, support: Span, w_map: Callable = None) -> IronedFunction:
    H = cumulative_trapezoid(h, w, initial=0.0)
    L, l = lower_convex_envelope(w, H)
    spans = _ironed_spans(w, H, L)
    if spans:
        logger.info(f"{side} ironing: {len(spans)} interval(s) {spans}")
    return IronedFunction(side=side, w_grid=w, x_grid=x, h=h, H=H, L=L, l=l,
                          w_max=float(w[-1]), ironed_intervals=spans, support=support, w_map=w_map)


def iron_buyer(inst: ProblemInstance, profile: VirtualProfile = None) -> IronedFunction:
    n = inst.numerics.iron_n
    w = np.linspace(0.0, 1.0, n)
    t = np.asarray(inst.buyer_dist.quantile(w))
    t[0], t[-1] = inst.T.lo, inst.T.hi
    h = profile.psi_at(t) if profile is not None else psi(inst, t)
    return _iron("buyer", w, t, np.asarray(h), (inst.T.lo, inst.T.hi), inst.buyer_dist.cdf)


def seller_weight_grid(inst: ProblemInstance, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """q grid and w(q) = int alpha1 dG, accumulated as midpoint alpha1 times exact cell mass."""
    q = inst.Q.grid(n)
    mass = np.diff(np.asarray(inst.seller_dist.cdf(q)))
    a1_mid = np.asarray(inst.alpha1(0.5 * (q[:-1] + q[1:])))
    w = np.concatenate([[0.0], np.cumsum(a1_mid * mass)])
    return q, w


def iron_seller(inst: ProblemInstance, profile: VirtualProfile = None) -> IronedFunction:
    q, w = seller_weight_grid(inst, inst.numerics.iron_n)
    if np.any(np.diff(w) <= 0):
        raise EnvelopeError("seller weight w(q) is not strictly increasing; alpha1 * g must be positive")
    h = profile.varphi_at(q) if profile is not None else varphi(inst, q)
    return _iron("seller", w, q, np.asarray(h), (inst.Q.lo, inst.Q.hi))


def eval_ironed(fn: IronedFunction, x):
    """l(F(x)) for the buyer, l(w(x)) for the seller; left-continuous per cell."""
    lo, hi = fn.support
    x_arr = np.asarray(x, dtype=float)
    eps = 1e-12 * (hi - lo)
    if np.any((x_arr < lo - eps) | (x_arr > hi + eps)):
        raise DomainError(f"{fn.side} ironed function evaluated outside [{lo}, {hi}]")
    return fn.slope_at_w(fn.to_w(x))
