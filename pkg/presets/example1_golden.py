"""
Example 1 reference values: buyer and seller uniform on [1, 2],
v(t, q) = q t, r(q) = 1.5 q.

    lambda(t) = 2t - 2,  eta(q) = 3 - 1.5 / q,  trade iff t >= 2.5 - 0.75 / q
    revenue   = 0.5625 ln 1.5 - 0.21875
"""
import math
from dataclasses import dataclass, field
from typing import Tuple

PRESET = "example1.json"


@dataclass(frozen=True)
class Example1Golden:
    # (t, P_b(t))
    buyer_payments: Tuple[Tuple[float, float], ...] = ((2.0, 2.375), (1.875, 2.0), (1.75, 1.75), (1.5, 0.0), (1.0, 0.0))
    # (q, P_s(q)); 1.5 is the zero-mass limit r(1.5)
    seller_payments: Tuple[Tuple[float, float], ...] = ((1.0, 1.8246), (1.2, 9.0 * math.log(1.25)), (1.5, 2.25),
                                                       (1.75, 0.0), (2.0, 0.0))
    revenue: float = field(default_factory=lambda: 0.5625 * math.log(1.5) - 0.21875)
    # on the trade boundary (lambda = eta = 1.75, ties trade); P_b = 2.0 < P_s = 9 ln 1.25
    loss_point: Tuple[float, float] = (1.875, 1.2)
    # centre of the 200 x 200 scan cell with corner loss_point
    loss_cell: Tuple[float, float] = (1.8775, 1.2025)
    profit_point: Tuple[float, float] = (2.0, 1.0)
    no_trade_point: Tuple[float, float] = (1.6, 1.2)
    payment_tol: float = 1e-3
    revenue_tol: float = 1e-4
    threshold_tol: float = 1e-9

    @staticmethod
    def lam(t: float) -> float:
        return 2.0 * t - 2.0

    @staticmethod
    def eta(q: float) -> float:
        return 3.0 - 1.5 / q

    @staticmethod
    def boundary(q: float) -> float:
        return 2.5 - 0.75 / q


EXAMPLE1_GOLDEN = Example1Golden()
