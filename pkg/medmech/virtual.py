"""
Virtual value / virtual cost and the threshold ingredients

    psi(t)    = t - (1 - F(t)) / f(t)
    varphi(q) = (k * (q + G(q) / g(q)) - alpha2(q)) / alpha1(q)

plus the regularity test (both non-decreasing).
"""
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from families.base_distribution import BaseDistribution
from medmech.model import ProblemInstance

logger = logging.getLogger(__name__)

Span = Tuple[float, float]


def virtual_value(dist: BaseDistribution, t):
    """phi^-(t) = t - (1 - F(t)) / f(t); raises DomainError outside the support."""
    dens = dist.pdf(t)
    t_arr = np.clip(np.asarray(t, dtype=float), dist.support.lo, dist.support.hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = t_arr - (1.0 - np.asarray(dist.cdf(t_arr))) / np.asarray(dens)
    return float(out) if out.ndim == 0 else out


def virtual_cost(dist: BaseDistribution, q):
    """phi^+(q) = q + G(q) / g(q)."""
    dens = dist.pdf(q)
    q_arr = np.clip(np.asarray(q, dtype=float), dist.support.lo, dist.support.hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = q_arr + np.asarray(dist.cdf(q_arr)) / np.asarray(dens)
    return float(out) if out.ndim == 0 else out


def psi(inst: ProblemInstance, t):
    return virtual_value(inst.buyer_dist, t)


def varphi(inst: ProblemInstance, q):
    out = (inst.k * np.asarray(virtual_cost(inst.seller_dist, q)) - np.asarray(inst.alpha2(q))) / np.asarray(inst.alpha1(q))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class VirtualProfile:
    instance: ProblemInstance
    t_grid: np.ndarray
    psi: np.ndarray
    q_grid: np.ndarray
    varphi: np.ndarray
    grid_n: int

    def psi_at(self, t):
        return psi(self.instance, t)

    def varphi_at(self, q):
        return varphi(self.instance, q)


def compute_profile(inst: ProblemInstance) -> VirtualProfile:
    n = inst.numerics.grid_n
    t_grid = inst.T.grid(n)
    q_grid = inst.Q.grid(n)
    return VirtualProfile(
        instance=inst,
        t_grid=t_grid,
        psi=np.asarray(psi(inst, t_grid)),
        q_grid=q_grid,
        varphi=np.asarray(varphi(inst, q_grid)),
        grid_n=n,
    )


@dataclass(frozen=True)
class RegularityReport:
    buyer_regular: bool
    seller_regular: bool
    buyer_violations: List[Span] = field(default_factory=list)
    seller_violations: List[Span] = field(default_factory=list)

    @property
    def regular(self) -> bool:
        return self.buyer_regular and self.seller_regular

    @property
    def violations(self) -> List[Tuple[str, Span]]:
        return [("buyer", s) for s in self.buyer_violations] + [("seller", s) for s in self.seller_violations]


def decreasing_spans(x: np.ndarray, y: np.ndarray, tol: float = 1e-9) -> List[Span]:
    """Maximal grid intervals over which y steps down by more than tol per cell."""
    drops = np.diff(y) < -tol
    spans: List[Span] = []
    i, n = 0, len(drops)
    while i < n:
        if not drops[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and drops[j + 1]:
            j += 1
        spans.append((float(x[i]), float(x[j + 1])))
        i = j + 1
    return spans


def regularity_check(profile: VirtualProfile, tol: float = None) -> RegularityReport:
    tol = profile.instance.numerics.tol if tol is None else tol
    b = decreasing_spans(profile.t_grid, profile.psi, tol)
    s = decreasing_spans(profile.q_grid, profile.varphi, tol)
    if b or s:
        logger.info(f"irregular instance: {len(b)} buyer / {len(s)} seller decreasing spans")
    return RegularityReport(not b, not s, b, s)
