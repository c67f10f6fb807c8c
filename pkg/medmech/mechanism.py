"""
Threshold mechanisms
====================
Trade is recommended to (t, q) iff lambda(t) >= eta(q) with lambda, eta
non-decreasing; ties trade. For a buyer report t the trade set is the prefix
[q1, q'(t)] and for a seller report q it is the suffix [t'(q), t2], both
located by bisection on the monotone thresholds.

Payments follow the envelope conditions with U_b(t1) = 0 and SU(q2) = 0:

    P_b(t) gb(t) = t rb(t) + b2(t) - int_t1^t rb
    P_s(q) rs(q) = r(q) rs(q) + k int_q^q2 rs

A report that trades on a null set pays the one-sided limit (v(t, q1) for
the buyer, r(q) for the seller); a report that never trades pays 0.
"""
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from mediator_mechanism import MediatorMechanism, MediatorMechanismMixin
from medmech.errors import DomainError, ValidationError
from medmech.ironing import IronedFunction, iron_buyer, iron_seller
from medmech.model import Interval, ProblemInstance, validate_instance
from medmech.utils.quadrature import CumulativeIntegral, MassIntegral
from medmech.virtual import RegularityReport, VirtualProfile, compute_profile, regularity_check

logger = logging.getLogger(__name__)

BISECT_ITER = 200


def _check_in(support: Interval, x, what: str):
    if not support.contains(x):
        raise DomainError(f"{what} outside support {support.as_list()}")


def _out(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


@dataclass(frozen=True, eq=False)
class ThresholdCurve:
    """A non-decreasing threshold function on one type support."""

    side: str
    support: Interval
    func: Callable
    ironing: Optional[IronedFunction] = None
    grid_n: int = 2001

    def __call__(self, x):
        return self.func(x)

    @property
    def ironed(self) -> bool:
        return self.ironing is not None and bool(self.ironing.ironed_intervals)

    def table(self) -> Tuple[np.ndarray, np.ndarray]:
        x = self.support.grid(self.grid_n)
        return x, np.asarray(self.func(x), dtype=float)

    def flat_intervals(self) -> List[Tuple[float, float]]:
        return self.ironing.type_intervals() if self.ironing is not None else []

    @classmethod
    def exact(cls, side: str, support: Interval, func: Callable, grid_n: int = 2001) -> "ThresholdCurve":
        return cls(side, support, func, None, grid_n)

    @classmethod
    def from_ironing(cls, side: str, support: Interval, fn: IronedFunction, grid_n: int = 2001) -> "ThresholdCurve":
        # linear through the cell midpoints in w: continuous, monotone, flat on ironed intervals
        return cls(side, support, lambda x: fn.smooth_at_w(fn.to_w(x)), fn, grid_n)


class ThresholdMechanism(MediatorMechanismMixin, MediatorMechanism):
    def __init__(self, instance: ProblemInstance, lam: ThresholdCurve, eta: ThresholdCurve,
                 profile: VirtualProfile = None, regularity: RegularityReport = None,
                 buyer_rebate: float = 0.0):
        super().__init__(instance)
        self.lam = lam
        self.eta = eta
        self.profile = profile
        self.regularity = regularity
        # lump-sum transfer returned to every buyer report
        self.buyer_rebate = float(buyer_rebate)

        num = instance.numerics
        T, Q = instance.T, instance.Q
        self._zero = num.zero_mass
        self._lam_t1, self._lam_t2 = float(lam(T.lo)), float(lam(T.hi))
        self._eta_q1, self._eta_q2 = float(eta(Q.lo)), float(eta(Q.hi))

        self._W = MassIntegral(lambda q: instance.alpha1(q), instance.seller_dist, num.quad_nodes)
        self._B = MassIntegral(lambda q: instance.alpha2(q), instance.seller_dist, num.quad_nodes)
        self._rb_int = CumulativeIntegral(self.rb, T.lo, T.hi, num.quad_nodes, self.buyer_breakpoints())
        self._rs_int = CumulativeIntegral(self.rs, Q.lo, Q.hi, num.quad_nodes, self.seller_breakpoints())

    @classmethod
    def from_thresholds(cls, instance: ProblemInstance, lam: Callable, eta: Callable) -> "ThresholdMechanism":
        """Any pair of non-decreasing, continuous thresholds with envelope payments."""
        n = instance.numerics.grid_n
        return cls(instance,
                   ThresholdCurve.exact("buyer", instance.T, lam, n),
                   ThresholdCurve.exact("seller", instance.Q, eta, n))

    def with_buyer_rebate(self, amount: float) -> "ThresholdMechanism":
        """Same allocation, every buyer report is handed back `amount`."""
        return ThresholdMechanism(self.instance, self.lam, self.eta, self.profile, self.regularity,
                                  self.buyer_rebate + amount)

    @property
    def ironed(self) -> bool:
        return self.lam.ironed or self.eta.ironed

    # ---------------------------
    # trade boundaries
    # ---------------------------
    def _q_prime(self, t) -> Tuple[np.ndarray, np.ndarray]:
        """(sup{q: eta(q) <= lambda(t)}, trades) with trades = the set is non-empty."""
        Q = self.instance.Q
        lam = np.asarray(self.lam(t), dtype=float)
        trades = self._eta_q1 <= lam
        lo = np.full(lam.shape, Q.lo)
        hi = np.full(lam.shape, Q.hi)
        tol = 1e-15 * max(1.0, abs(Q.lo), abs(Q.hi))
        for _ in range(BISECT_ITER):
            if np.all(hi - lo <= tol):
                break
            mid = 0.5 * (lo + hi)
            ok = np.asarray(self.eta(mid)) <= lam
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        q = np.where(self._eta_q2 <= lam, Q.hi, lo)
        return q, trades

    def _t_prime(self, q) -> Tuple[np.ndarray, np.ndarray]:
        """(inf{t: lambda(t) >= eta(q)}, trades)."""
        T = self.instance.T
        eta = np.asarray(self.eta(q), dtype=float)
        trades = self._lam_t2 >= eta
        lo = np.full(eta.shape, T.lo)
        hi = np.full(eta.shape, T.hi)
        tol = 1e-15 * max(1.0, abs(T.lo), abs(T.hi))
        for _ in range(BISECT_ITER):
            if np.all(hi - lo <= tol):
                break
            mid = 0.5 * (lo + hi)
            ok = np.asarray(self.lam(mid)) >= eta
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
        t = np.where(self._lam_t1 >= eta, T.lo, np.where(trades, hi, T.hi))
        return t, trades

    def q_prime(self, t):
        """Largest quality trading with buyer t; nan if t never trades."""
        _check_in(self.instance.T, t, "buyer type")
        q, trades = self._q_prime(t)
        return _out(np.where(trades, q, np.nan))

    def t_prime(self, q):
        """Smallest buyer type trading with seller q; nan if q never trades."""
        _check_in(self.instance.Q, q, "seller type")
        t, trades = self._t_prime(q)
        return _out(np.where(trades, t, np.nan))

    def buyer_breakpoints(self):
        # rb jumps where lambda crosses a flat level of eta
        pts = []
        for a, b in self.eta.flat_intervals():
            level = float(self.eta(0.5 * (a + b)))
            if self._lam_t1 < level <= self._lam_t2:
                pts.append(float(self._t_prime(0.5 * (a + b))[0]))
        return tuple(pts)

    def seller_breakpoints(self):
        pts = []
        for a, b in self.lam.flat_intervals():
            level = float(self.lam(0.5 * (a + b)))
            if self._eta_q1 <= level < self._eta_q2:
                pts.append(float(self._q_prime(0.5 * (a + b))[0]))
        return tuple(pts)

    # ---------------------------
    # allocation and interim rates
    # ---------------------------
    def allocation(self, t, q):
        _check_in(self.instance.T, t, "buyer type")
        _check_in(self.instance.Q, q, "seller type")
        return _out((np.asarray(self.lam(t)) >= np.asarray(self.eta(q))).astype(int))

    def interim_buyer(self, t):
        q, trades = self._q_prime(t)
        gb = np.where(trades, self.instance.seller_dist.cdf(q), 0.0)
        rb = np.where(trades, self._W(q), 0.0)
        b2 = np.where(trades, self._B(q), 0.0)
        return _out(gb), _out(rb), _out(b2)

    def rs(self, q):
        t, trades = self._t_prime(q)
        return _out(np.where(trades, 1.0 - np.asarray(self.instance.buyer_dist.cdf(t)), 0.0))

    # ---------------------------
    # payments
    # ---------------------------
    def buyer_transfer(self, t):
        gb, rb, b2 = (np.asarray(v) for v in self.interim_buyer(t))
        t_arr = np.asarray(t, dtype=float)
        envelope = t_arr * rb + b2 - np.asarray(self._rb_int(t_arr))
        return _out(np.where(gb > self._zero, envelope, 0.0) - self.buyer_rebate)

    def seller_transfer(self, q):
        rs = np.asarray(self.rs(q))
        q_arr = np.asarray(q, dtype=float)
        tail = np.maximum(self._rs_int.total - np.asarray(self._rs_int(q_arr)), 0.0)
        value = np.asarray(self.instance.reserve(q_arr)) * rs + self.instance.k * tail
        return _out(np.where(rs > self._zero, value, 0.0))

    def buyer_payment(self, t):
        _check_in(self.instance.T, t, "buyer type")
        inst = self.instance
        gb = np.asarray(self.interim_buyer(t)[0])
        _, trades = self._q_prime(t)
        transfer = np.asarray(self.buyer_transfer(t))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(gb > self._zero, transfer / gb, 0.0)
        limit = np.asarray(inst.value(np.asarray(t, dtype=float), inst.Q.lo))
        return _out(np.where(gb > self._zero, ratio, np.where(trades, limit, 0.0)))

    def seller_payment(self, q):
        _check_in(self.instance.Q, q, "seller type")
        rs = np.asarray(self.rs(q))
        _, trades = self._t_prime(q)
        transfer = np.asarray(self.seller_transfer(q))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(rs > self._zero, transfer / rs, 0.0)
        limit = np.asarray(self.instance.reserve(np.asarray(q, dtype=float)))
        return _out(np.where(rs > self._zero, ratio, np.where(trades, limit, 0.0)))

    # ---------------------------
    # revenue
    # ---------------------------
    def revenue_virtual(self):
        """
        E[pi (alpha1 phi_b^- + alpha2 - k phi_s^+)] - U_b(t1) - SU(q2), with the
        inner integrals done analytically:
            int_{t'}^{t2} phi_b^- f dt = t' (1 - F(t'))
            k phi_s^+ g = k (q g + G)
        """
        inst = self.instance
        n = inst.numerics.quad_nodes
        cuts = self.seller_breakpoints()

        def surplus(q):
            t_low, trades = self._t_prime(q)
            rs = np.where(trades, 1.0 - np.asarray(inst.buyer_dist.cdf(t_low)), 0.0)
            return rs * (np.asarray(inst.alpha1(q)) * t_low + np.asarray(inst.alpha2(q)) - inst.k * q)

        part = MassIntegral(surplus, inst.seller_dist, n, cuts).total
        cost = inst.k * CumulativeIntegral(lambda q: np.asarray(inst.seller_dist.cdf(q)) * np.asarray(self.rs(q)),
                                           inst.Q.lo, inst.Q.hi, n, cuts).total
        u_low, su_high = self.pinning()
        return float(part - cost - u_low - su_high)

    # ---------------------------
    # reporting
    # ---------------------------
    def trade_extent(self) -> Dict[str, Any]:
        T, Q = self.instance.T, self.instance.Q
        if self._lam_t2 < self._eta_q1:
            return {"trades": False}
        return {"trades": True,
                "lowest_trading_buyer": float(self._t_prime(Q.lo)[0]),
                "highest_trading_seller": float(self._q_prime(T.hi)[0])}

    def summary(self) -> Dict[str, Any]:
        u_low, su_high = self.pinning()
        out = {
            "instance": self.instance.describe(),
            "revenue_direct": self.revenue_direct(),
            "revenue_virtual": self.revenue_virtual(),
            "ironed": self.ironed,
            "pinning": {"buyer_utility_t1": u_low, "seller_surplus_q2": su_high},
            "trade_region": self.trade_extent(),
        }
        if self.regularity is not None:
            out["regularity"] = {
                "buyer_regular": self.regularity.buyer_regular,
                "seller_regular": self.regularity.seller_regular,
                "buyer_violations": [list(s) for s in self.regularity.buyer_violations],
                "seller_violations": [list(s) for s in self.regularity.seller_violations],
            }
        for side, curve in (("buyer", self.lam), ("seller", self.eta)):
            if curve.ironing is not None:
                out[f"{side}_ironed_intervals"] = {
                    "w": [list(s) for s in curve.ironing.ironed_intervals],
                    "type": [list(s) for s in curve.flat_intervals()],
                }
        return out

    def curve_tables(self, n: int = None) -> Tuple[Dict[str, np.ndarray], Dict[str, np.ndarray]]:
        """Columns (t, lambda, Pb, Rb, Ub) and (q, eta, Ps, Rs, SU)."""
        n = n or self.instance.numerics.grid_n
        t = self.instance.T.grid(n)
        q = self.instance.Q.grid(n)
        buyer = {"t": t, "lambda": np.asarray(self.lam(t)), "Pb": np.asarray(self.buyer_payment(t)),
                 "Rb": np.asarray(self.rb(t)), "Ub": np.asarray(self.buyer_utility(t))}
        seller = {"q": q, "eta": np.asarray(self.eta(q)), "Ps": np.asarray(self.seller_payment(q)),
                  "Rs": np.asarray(self.rs(q)), "SU": np.asarray(self.seller_surplus(q))}
        return buyer, seller


class TabulatedMechanism(MediatorMechanismMixin, MediatorMechanism):
    """
    General direct mechanism, constant on the cells of a t x q partition:
    pi[i, j] on cell i x j, pb[i] for buyer reports in t-cell i, ps[j] for
    seller reports in q-cell j. Interim integrals use the exact cell masses.
    """

    def __init__(self, instance: ProblemInstance, t_edges, q_edges, pi, pb, ps):
        super().__init__(instance)
        self.t_edges = np.asarray(t_edges, dtype=float)
        self.q_edges = np.asarray(q_edges, dtype=float)
        self.pi = np.asarray(pi, dtype=float)
        self.pb = np.asarray(pb, dtype=float)
        self.ps = np.asarray(ps, dtype=float)
        nt, nq = len(self.t_edges) - 1, len(self.q_edges) - 1
        if self.pi.shape != (nt, nq) or self.pb.shape != (nt,) or self.ps.shape != (nq,):
            raise DomainError(f"tabulated mechanism shapes disagree: pi {self.pi.shape}, pb {self.pb.shape}, ps {self.ps.shape}")
        if np.any(self.pi < 0) or np.any(self.pi > 1):
            raise DomainError("trade probabilities must lie in [0, 1]")

        num = instance.numerics
        self.dF = np.diff(np.asarray(instance.buyer_dist.cdf(self.t_edges)))
        self.dG = np.diff(np.asarray(instance.seller_dist.cdf(self.q_edges)))
        W = MassIntegral(lambda q: instance.alpha1(q), instance.seller_dist, num.quad_nodes)
        B = MassIntegral(lambda q: instance.alpha2(q), instance.seller_dist, num.quad_nodes)
        self.A1 = np.diff(np.asarray(W(self.q_edges)))
        self.A2 = np.diff(np.asarray(B(self.q_edges)))

    @property
    def t_grid(self) -> np.ndarray:
        return 0.5 * (self.t_edges[:-1] + self.t_edges[1:])

    @property
    def q_grid(self) -> np.ndarray:
        return 0.5 * (self.q_edges[:-1] + self.q_edges[1:])

    def _t_cell(self, t):
        _check_in(self.instance.T, t, "buyer type")
        return np.clip(np.searchsorted(self.t_edges, np.asarray(t, dtype=float), side="right") - 1, 0, len(self.pb) - 1)

    def _q_cell(self, q):
        _check_in(self.instance.Q, q, "seller type")
        return np.clip(np.searchsorted(self.q_edges, np.asarray(q, dtype=float), side="right") - 1, 0, len(self.ps) - 1)

    def allocation(self, t, q):
        return _out(self.pi[self._t_cell(t), self._q_cell(q)])

    def interim_buyer(self, t):
        rows = self.pi[self._t_cell(t)]
        return _out(rows @ self.dG), _out(rows @ self.A1), _out(rows @ self.A2)

    def rs(self, q):
        return _out(np.tensordot(self.dF, self.pi[:, self._q_cell(q)], axes=(0, 0)))

    def buyer_payment(self, t):
        return _out(self.pb[self._t_cell(t)])

    def seller_payment(self, q):
        return _out(self.ps[self._q_cell(q)])

    def buyer_transfer(self, t):
        return _out(np.asarray(self.buyer_payment(t)) * np.asarray(self.interim_buyer(t)[0]))

    def seller_transfer(self, q):
        return _out(np.asarray(self.seller_payment(q)) * np.asarray(self.rs(q)))

    def revenue_direct(self):
        gb = self.pi @ self.dG
        rs = self.dF @ self.pi
        return float(np.sum(self.dF * self.pb * gb) - np.sum(self.dG * self.ps * rs))

    def revenue_virtual(self):
        inst = self.instance
        t, q = self.t_edges, self.q_edges
        # int phi^- f over a cell = [-t (1 - F)], int phi^+ g over a cell = [q G]
        vf = np.diff(-t * (1.0 - np.asarray(inst.buyer_dist.cdf(t))))
        cg = np.diff(q * np.asarray(inst.seller_dist.cdf(q)))
        cell = np.outer(vf, self.A1) + np.outer(self.dF, self.A2) - inst.k * np.outer(self.dF, cg)
        u_low, su_high = self.pinning()
        return float(np.sum(self.pi * cell) - u_low - su_high)


# ---------------------------
# construction
# ---------------------------
def solve(inst: ProblemInstance, profile: VirtualProfile = None) -> ThresholdMechanism:
    """
    Optimal threshold mechanism. Each side uses its closed-form threshold
    when regular and the ironed one otherwise.
    """
    report = validate_instance(inst)
    if not report.ok:
        raise ValidationError(report)
    profile = profile or compute_profile(inst)
    regularity = regularity_check(profile)
    n = inst.numerics.grid_n

    if regularity.buyer_regular:
        lam = ThresholdCurve.exact("buyer", inst.T, profile.psi_at, n)
    else:
        lam = ThresholdCurve.from_ironing("buyer", inst.T, iron_buyer(inst, profile), n)
    if regularity.seller_regular:
        eta = ThresholdCurve.exact("seller", inst.Q, profile.varphi_at, n)
    else:
        eta = ThresholdCurve.from_ironing("seller", inst.Q, iron_seller(inst, profile), n)

    mech = ThresholdMechanism(inst, lam, eta, profile, regularity)
    logger.info(f"[{inst.name or 'instance'}] solved: regular={regularity.regular}, ironed={mech.ironed}")
    return mech


def tabulate(mech: MediatorMechanism, nt: int, nq: int) -> TabulatedMechanism:
    """Cell-centre sampling of any mechanism onto an nt x nq partition."""
    inst = mech.instance
    t_edges = inst.T.grid(nt + 1)
    q_edges = inst.Q.grid(nq + 1)
    tc = 0.5 * (t_edges[:-1] + t_edges[1:])
    qc = 0.5 * (q_edges[:-1] + q_edges[1:])
    pi = np.asarray(mech.allocation(tc[:, None], qc[None, :]), dtype=float)
    return TabulatedMechanism(inst, t_edges, q_edges, pi,
                              np.asarray(mech.buyer_payment(tc)), np.asarray(mech.seller_payment(qc)))


# ---------------------------
# operation wrappers
# ---------------------------
def allocation(mech: MediatorMechanism, t, q):
    return mech.allocation(t, q)


def buyer_payment(mech: MediatorMechanism, t):
    return mech.buyer_payment(t)


def seller_payment(mech: MediatorMechanism, q):
    return mech.seller_payment(q)


def rb(mech: MediatorMechanism, t):
    return mech.rb(t)


def rs(mech: MediatorMechanism, q):
    return mech.rs(q)


def buyer_utility(mech: MediatorMechanism, t):
    return mech.buyer_utility(t)


def seller_surplus(mech: MediatorMechanism, q):
    return mech.seller_surplus(q)


def seller_utility(mech: MediatorMechanism, q):
    return mech.seller_utility(q)


def misreport_utility_buyer(mech: MediatorMechanism, t, t_report):
    return mech.misreport_utility_buyer(t, t_report)


def misreport_surplus_seller(mech: MediatorMechanism, q, q_report):
    return mech.misreport_surplus_seller(q, q_report)


def q_prime(mech: ThresholdMechanism, t):
    return mech.q_prime(t)


def t_prime(mech: ThresholdMechanism, q):
    return mech.t_prime(q)


def revenue_direct(mech: MediatorMechanism) -> float:
    return mech.revenue_direct()


def revenue_virtual(mech: MediatorMechanism) -> float:
    return mech.revenue_virtual()


def _check_signal(signal):
    if signal not in (0, 1):
        raise DomainError(f"signal must be 0 or 1, got {signal!r}")


def posterior_quality(mech: MediatorMechanism, t, signal: int):
    _check_signal(signal)
    _check_in(mech.instance.T, t, "buyer type")
    return mech.posterior_quality(t, signal)


def posterior_type(mech: MediatorMechanism, q, signal: int):
    _check_signal(signal)
    _check_in(mech.instance.Q, q, "seller type")
    return mech.posterior_type(q, signal)
