from abc import ABC, abstractmethod

import numpy as np

from medmech.errors import UndefinedBeliefError
from medmech.utils.quadrature import MassIntegral


class MediatorMechanism(ABC):
    """
    Direct mechanism (pi, P_b, P_s) run by a mediator that recommends trade or
    no trade. Every method is vectorized over its type arguments.
    """

    def __init__(self, instance):
        self.instance = instance

    @abstractmethod
    def allocation(self, t, q):
        """
        Probability of recommending trade to the pair (t, q).
        Threshold mechanisms return 0/1.
        """
        pass

    @abstractmethod
    def interim_buyer(self, t):
        """
        Interim integrals for a buyer report t:
            gb = int pi(t,q) g(q) dq
            rb = int pi(t,q) alpha1(q) g(q) dq
            b2 = int pi(t,q) alpha2(q) g(q) dq
        Returns the tuple (gb, rb, b2).
        """
        pass

    @abstractmethod
    def rs(self, q):
        """R_s(q) = int pi(t,q) f(t) dt."""
        pass

    @abstractmethod
    def buyer_payment(self, t):
        pass

    @abstractmethod
    def seller_payment(self, q):
        pass

    @abstractmethod
    def buyer_transfer(self, t):
        """Expected payment collected from report t, P_b(t) * gb(t)."""
        pass

    @abstractmethod
    def seller_transfer(self, q):
        """Expected payment made to report q, P_s(q) * R_s(q)."""
        pass

    @abstractmethod
    def revenue_virtual(self):
        """Revenue through the virtual-surplus identity; assumes feasibility."""
        pass


class MediatorMechanismMixin:
    def rb(self, t):
        return self.interim_buyer(t)[1]

    def trade_probability_buyer(self, t):
        return self.interim_buyer(t)[0]

    def buyer_breakpoints(self):
        """Buyer types where rb may jump; integrals over t are split there."""
        return ()

    def seller_breakpoints(self):
        return ()

    # ---------------------------
    # utilities
    # ---------------------------
    def buyer_utility(self, t):
        return self.misreport_utility_buyer(t, t)

    def misreport_utility_buyer(self, t, t_report):
        """U_b(t'; t) = t rb(t') + b2(t') - P_b(t') gb(t')."""
        _, rb, b2 = self.interim_buyer(t_report)
        out = np.asarray(t, dtype=float) * rb + b2 - self.buyer_transfer(t_report)
        return float(out) if np.ndim(out) == 0 else out

    def seller_surplus(self, q):
        return self.misreport_surplus_seller(q, q)

    def misreport_surplus_seller(self, q, q_report):
        """SU(q'; q) = (P_s(q') - r(q)) R_s(q')."""
        out = self.seller_transfer(q_report) - self.instance.reserve(q) * self.rs(q_report)
        return float(out) if np.ndim(out) == 0 else out

    def seller_utility(self, q):
        """U_s(q) = SU(q) + r(q): the item is worth r(q) to a seller who keeps it."""
        return self.misreport_utility_seller(q, q)

    def misreport_utility_seller(self, q, q_report):
        out = self.misreport_surplus_seller(q, q_report) + self.instance.reserve(q)
        return float(out) if np.ndim(out) == 0 else out

    # ---------------------------
    # revenue
    # ---------------------------
    def revenue_direct(self):
        """E[P_b * 1{trade}] - E[P_s * 1{trade}], integrated in probability coordinates."""
        inst = self.instance
        n = inst.numerics.quad_nodes
        collected = MassIntegral(self.buyer_transfer, inst.buyer_dist, n, self.buyer_breakpoints()).total
        paid = MassIntegral(self.seller_transfer, inst.seller_dist, n, self.seller_breakpoints()).total
        return float(collected - paid)

    def pinning(self):
        """(U_b(t1), SU(q2)); both vanish for an optimal mechanism."""
        inst = self.instance
        return float(self.buyer_utility(inst.T.lo)), float(self.seller_surplus(inst.Q.hi))

    # ---------------------------
    # beliefs after the recommendation
    # ---------------------------
    def posterior_quality(self, t, signal: int):
        """Buyer's density over q after hearing `signal` given report t, on the q grid."""
        inst = self.instance
        q = inst.Q.grid(inst.numerics.grid_n)
        pi = np.asarray(self.allocation(np.full_like(q, float(t)), q), dtype=float)
        weight = pi if signal == 1 else 1.0 - pi
        gb = float(self.trade_probability_buyer(float(t)))
        prob = gb if signal == 1 else 1.0 - gb
        if prob <= inst.numerics.zero_mass:
            raise UndefinedBeliefError(f"signal {signal} has zero probability for buyer type t={t}")
        return q, weight * np.asarray(inst.seller_dist.pdf(q)) / prob

    def posterior_type(self, q, signal: int):
        """Seller's density over t after hearing `signal` given report q."""
        inst = self.instance
        t = inst.T.grid(inst.numerics.grid_n)
        pi = np.asarray(self.allocation(t, np.full_like(t, float(q))), dtype=float)
        weight = pi if signal == 1 else 1.0 - pi
        rs = float(self.rs(float(q)))
        prob = rs if signal == 1 else 1.0 - rs
        if prob <= inst.numerics.zero_mass:
            raise UndefinedBeliefError(f"signal {signal} has zero probability for seller type q={q}")
        return t, weight * np.asarray(inst.buyer_dist.pdf(t)) / prob
