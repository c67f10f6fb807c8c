"""
Independent checks of mechanisms: feasibility and IC audits, the obedience
identity, ironing revenue-neutrality, a discretized LP for the full
revenue-maximization program and the trade / loss region scan.
"""
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np

from mediator_mechanism import MediatorMechanism
from medmech.errors import OracleError
from medmech.mechanism import TabulatedMechanism, ThresholdMechanism, solve
from medmech.model import ProblemInstance
from medmech.utils.quadrature import CumulativeIntegral
from medmech.utils.simplex import maximize

logger = logging.getLogger(__name__)

MONOTONE_TOL = 1e-9
ENVELOPE_TOL = 1e-3
IR_TOL = 1e-9
IDENTITY_TOL = 1e-12
LP_TOL = 1e-7


# ---------------------------
# audit
# ---------------------------
@dataclass
class AuditReport:
    grid_n: int
    monotone_rb_ok: bool
    monotone_rs_ok: bool
    rb_worst_drop: Tuple[float, float]      # (t, rb(t_next) - rb(t))
    rs_worst_rise: Tuple[float, float]      # (q, rs(q_next) - rs(q))
    envelope_buyer_maxerr: float
    envelope_seller_maxerr: float
    ir_buyer_min: float
    ir_seller_min: float
    ic_buyer_worst: Tuple[float, float, float]    # (t, t', gain)
    ic_seller_worst: Tuple[float, float, float]   # (q, q', gain)
    obedience_equals_ir: bool
    pinning: Tuple[float, float] = (0.0, 0.0)

    def violations(self, ic_tol: float = 1e-5, envelope_tol: float = ENVELOPE_TOL) -> List[str]:
        out = []
        if not self.monotone_rb_ok:
            out.append(f"R_b decreases at t={self.rb_worst_drop[0]:.6g} by {-self.rb_worst_drop[1]:.3g}")
        if not self.monotone_rs_ok:
            out.append(f"R_s increases at q={self.rs_worst_rise[0]:.6g} by {self.rs_worst_rise[1]:.3g}")
        if self.envelope_buyer_maxerr > envelope_tol:
            out.append(f"buyer envelope error {self.envelope_buyer_maxerr:.3g}")
        if self.envelope_seller_maxerr > envelope_tol:
            out.append(f"seller envelope error {self.envelope_seller_maxerr:.3g}")
        if self.ir_buyer_min < -IR_TOL:
            out.append(f"buyer IR fails: min U_b = {self.ir_buyer_min:.3g}")
        if self.ir_seller_min < -IR_TOL:
            out.append(f"seller IR fails: min SU = {self.ir_seller_min:.3g}")
        t, tr, gain = self.ic_buyer_worst
        if gain > ic_tol:
            out.append(f"buyer t={t:.6g} gains {gain:.3g} by reporting {tr:.6g}")
        q, qr, gain = self.ic_seller_worst
        if gain > ic_tol:
            out.append(f"seller q={q:.6g} gains {gain:.3g} by reporting {qr:.6g}")
        if not self.obedience_equals_ir:
            out.append("obedience and IR integrals disagree or are negative")
        return out

    def passed(self, ic_tol: float = 1e-5) -> bool:
        return not self.violations(ic_tol)

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def audit(mech: MediatorMechanism, audit_grid_n: int = None) -> AuditReport:
    inst = mech.instance
    n = audit_grid_n or inst.numerics.audit_n
    T, Q = inst.T, inst.Q
    t = T.grid(n)
    q = Q.grid(n)

    rb = np.asarray(mech.rb(t))
    rs = np.asarray(mech.rs(q))
    drb, drs = np.diff(rb), np.diff(rs)
    i_rb, i_rs = int(np.argmin(drb)), int(np.argmax(drs))

    U = np.asarray(mech.buyer_utility(t))
    SU = np.asarray(mech.seller_surplus(q))
    I_b = CumulativeIntegral(mech.rb, T.lo, T.hi, inst.numerics.quad_nodes, mech.buyer_breakpoints())
    I_s = CumulativeIntegral(mech.rs, Q.lo, Q.hi, inst.numerics.quad_nodes, mech.seller_breakpoints())
    env_b = np.max(np.abs(U - U[0] - np.asarray(I_b(t))))
    env_s = np.max(np.abs(SU - SU[-1] - inst.k * (I_s.total - np.asarray(I_s(q)))))

    gain_b = np.asarray(mech.misreport_utility_buyer(t[:, None], t[None, :])) - U[:, None]
    ib, jb = np.unravel_index(int(np.argmax(gain_b)), gain_b.shape)
    gain_s = np.asarray(mech.misreport_surplus_seller(q[:, None], q[None, :])) - SU[:, None]
    is_, js = np.unravel_index(int(np.argmax(gain_s)), gain_s.shape)

    report = AuditReport(
        grid_n=n,
        monotone_rb_ok=bool(drb[i_rb] >= -MONOTONE_TOL),
        monotone_rs_ok=bool(drs[i_rs] <= MONOTONE_TOL),
        rb_worst_drop=(float(t[i_rb]), float(drb[i_rb])),
        rs_worst_rise=(float(q[i_rs]), float(drs[i_rs])),
        envelope_buyer_maxerr=float(env_b),
        envelope_seller_maxerr=float(env_s),
        ir_buyer_min=float(U.min()),
        ir_seller_min=float(SU.min()),
        ic_buyer_worst=(float(t[ib]), float(t[jb]), float(gain_b[ib, jb])),
        ic_seller_worst=(float(q[is_]), float(q[js]), float(gain_s[is_, js])),
        obedience_equals_ir=obedience_check(mech, n),
        pinning=mech.pinning(),
    )
    issues = report.violations(inst.numerics.ic_tol)
    if issues:
        logger.warning(f"[{inst.name or 'instance'}] audit: {'; '.join(issues)}")
    return report


# ---------------------------
# obedience
# ---------------------------
def obedience_terms(mech: MediatorMechanism, n: int = None) -> Dict[str, np.ndarray]:
    """
    IR integrals and obedience integrals on a shared type grid.

    Obedience after a trade recommendation weighs the posterior expected gain
    by the probability of the recommendation; after no-trade recommendation
    the outside option is unchanged, so that branch is empty.
    """
    inst = mech.instance
    n = n or inst.numerics.audit_n
    zero = inst.numerics.zero_mass
    t = inst.T.grid(n)
    q = inst.Q.grid(n)

    gb, rb, b2 = (np.asarray(v) for v in mech.interim_buyer(t))
    pb = np.asarray(mech.buyer_payment(t))
    value = t * rb + b2
    ir_b = value - pb * gb
    with np.errstate(divide="ignore", invalid="ignore"):
        posterior_value = np.where(gb > zero, value / gb, 0.0)
    obey_b = np.where(gb > zero, gb * (posterior_value - pb), 0.0)
    ir_b = np.where(gb > zero, ir_b, 0.0)

    rs = np.asarray(mech.rs(q))
    ps = np.asarray(mech.seller_payment(q))
    r = np.asarray(inst.reserve(q))
    ir_s = np.where(rs > zero, (ps - r) * rs, 0.0)
    # payment expected under the seller posterior over buyer types
    with np.errstate(divide="ignore", invalid="ignore"):
        posterior_payment = np.where(rs > zero, np.asarray(mech.seller_transfer(q)) / rs, 0.0)
    obey_s = np.where(rs > zero, rs * (posterior_payment - r), 0.0)
    return {"t": t, "ir_buyer": ir_b, "obedience_buyer": obey_b,
            "q": q, "ir_seller": ir_s, "obedience_seller": obey_s}


def obedience_check(mech: MediatorMechanism, n: int = None) -> bool:
    terms = obedience_terms(mech, n)
    ok = True
    for side in ("buyer", "seller"):
        ir, obey = terms[f"ir_{side}"], terms[f"obedience_{side}"]
        same = np.all(np.abs(ir - obey) <= IDENTITY_TOL * np.maximum(1.0, np.abs(ir)))
        ok = ok and bool(same) and bool(np.all(ir >= -IR_TOL)) and bool(np.all(obey >= -IR_TOL))
    return ok


# ---------------------------
# ironing
# ---------------------------
def ironing_correction(mech: ThresholdMechanism) -> Tuple[float, float]:
    """
    (int (H_b - L_b) dR_b, int (L_s - H_s) dR_s) on the ironing grids. Both
    vanish when the interim rates are flat wherever the envelope is below H.
    """
    terms = []
    for curve, rate, sign in ((mech.lam, mech.rb, 1.0), (mech.eta, mech.rs, -1.0)):
        fn = curve.ironing
        if fn is None:
            terms.append(0.0)
            continue
        gap = sign * (fn.H - fn.L)
        R = np.asarray(rate(fn.x_grid))
        terms.append(float(np.sum(0.5 * (gap[1:] + gap[:-1]) * np.diff(R))))
    return terms[0], terms[1]


# ---------------------------
# LP oracle
# ---------------------------
@dataclass
class GridMasses:
    t_edges: np.ndarray
    q_edges: np.ndarray
    t: np.ndarray
    q: np.ndarray
    f: np.ndarray
    g: np.ndarray


def midpoint_grid(inst: ProblemInstance, nt: int, nq: int) -> GridMasses:
    t_edges = inst.T.grid(nt + 1)
    q_edges = inst.Q.grid(nq + 1)
    t = 0.5 * (t_edges[:-1] + t_edges[1:])
    q = 0.5 * (q_edges[:-1] + q_edges[1:])
    f = np.asarray(inst.buyer_dist.pdf(t)) * np.diff(t_edges)
    g = np.asarray(inst.seller_dist.pdf(q)) * np.diff(q_edges)
    return GridMasses(t_edges, q_edges, t, q, f / f.sum(), g / g.sum())


@dataclass
class DiscreteProgram:
    pi: np.ndarray
    pb_hat: np.ndarray   # expected buyer transfer per report
    ps_hat: np.ndarray   # expected seller transfer per report

    def revenue(self, grid: GridMasses) -> float:
        return float(grid.f @ self.pb_hat - grid.g @ self.ps_hat)

    def payments(self, grid: GridMasses, zero: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
        gb = self.pi @ grid.g
        S = grid.f @ self.pi
        with np.errstate(divide="ignore", invalid="ignore"):
            pb = np.where(gb > zero, self.pb_hat / gb, 0.0)
            ps = np.where(S > zero, self.ps_hat / S, 0.0)
        return pb, ps


def _threshold_program(mech: ThresholdMechanism, grid: GridMasses) -> DiscreteProgram:
    """Threshold allocation on the grid with discrete envelope payments (lowest buyer and highest seller earn no rent)."""
    inst = mech.instance
    pi = np.asarray(mech.allocation(grid.t[:, None], grid.q[None, :]), dtype=float)
    a1 = np.asarray(inst.alpha1(grid.q))
    a2 = np.asarray(inst.alpha2(grid.q))
    R = pi @ (grid.g * a1)
    B = pi @ (grid.g * a2)
    U = np.concatenate([[0.0], np.cumsum(np.diff(grid.t) * R[:-1])])
    pb_hat = grid.t * R + B - U

    r = np.asarray(inst.reserve(grid.q))
    S = grid.f @ pi
    steps = np.diff(r) * S[1:]
    SU = np.concatenate([np.cumsum(steps[::-1])[::-1], [0.0]])
    ps_hat = SU + r * S
    return DiscreteProgram(pi, pb_hat, ps_hat)


def grid_threshold_mechanism(mech: ThresholdMechanism, nt: int, nq: int) -> TabulatedMechanism:
    grid = midpoint_grid(mech.instance, nt, nq)
    prog = _threshold_program(mech, grid)
    pb, ps = prog.payments(grid, mech.instance.numerics.zero_mass)
    return TabulatedMechanism(mech.instance, grid.t_edges, grid.q_edges, prog.pi, pb, ps)


@dataclass
class OracleResult:
    grid: Tuple[int, int]
    lp_revenue: float
    closed_form_on_grid_revenue: float
    gap: float
    lp_allocation: np.ndarray = field(repr=False)
    lp_payments: Tuple[np.ndarray, np.ndarray] = field(repr=False)
    iterations: int = 0

    def as_dict(self) -> Dict[str, Any]:
        return {"grid": list(self.grid), "lp_revenue": self.lp_revenue,
                "closed_form_on_grid_revenue": self.closed_form_on_grid_revenue,
                "gap": self.gap, "iterations": self.iterations}


def build_program(inst: ProblemInstance, grid: GridMasses):
    """
    (c, A, b) over x = [pi (nt*nq), pb_hat+ (nt), pb_hat- (nt), ps_hat (nq)].
    ps_hat needs no negative part: the seller participation rows force
    ps_hat >= r * S >= 0.
    """
    nt, nq = len(grid.t), len(grid.q)
    n_pi = nt * nq
    ip = lambda i, j: i * nq + j
    bp = lambda i: n_pi + i
    bm = lambda i: n_pi + nt + i
    sp = lambda j: n_pi + 2 * nt + j
    n_var = n_pi + 2 * nt + nq

    v = np.asarray(inst.value(grid.t[:, None], grid.q[None, :]))
    r = np.asarray(inst.reserve(grid.q))
    rows = []

    def row():
        a = np.zeros(n_var)
        rows.append(a)
        return a

    for i in range(nt):
        a = row()
        a[bp(i)], a[bm(i)] = 1.0, -1.0
        a[ip(i, 0):ip(i, 0) + nq] = -v[i] * grid.g
    for j in range(nq):
        a = row()
        a[[ip(i, j) for i in range(nt)]] = r[j] * grid.f
        a[sp(j)] = -1.0
    for i in range(nt):
        for i2 in range(nt):
            if i == i2:
                continue
            a = row()
            a[bp(i)], a[bm(i)] = 1.0, -1.0
            a[bp(i2)], a[bm(i2)] = -1.0, 1.0
            a[ip(i, 0):ip(i, 0) + nq] -= grid.g * v[i]
            a[ip(i2, 0):ip(i2, 0) + nq] += grid.g * v[i]
    for j in range(nq):
        for j2 in range(nq):
            if j == j2:
                continue
            a = row()
            a[sp(j2)], a[sp(j)] = 1.0, -1.0
            a[[ip(i, j) for i in range(nt)]] += r[j] * grid.f
            a[[ip(i, j2) for i in range(nt)]] -= r[j] * grid.f
    n_rows = len(rows)
    A = np.vstack(rows + [np.eye(n_pi, n_var)])
    b = np.concatenate([np.zeros(n_rows), np.ones(n_pi)])

    c = np.zeros(n_var)
    c[n_pi:n_pi + nt] = grid.f
    c[n_pi + nt:n_pi + 2 * nt] = -grid.f
    c[n_pi + 2 * nt:] = -grid.g
    return c, A, b


def lp_oracle(inst: ProblemInstance, nt: int, nq: int, mech: ThresholdMechanism = None) -> OracleResult:
    if nt < 2 or nq < 2:
        raise OracleError(f"LP grid must be at least 2x2, got {nt}x{nq}")
    if nt * nq > inst.numerics.lp_cap:
        raise OracleError(f"LP grid {nt}x{nq} exceeds the cap of {inst.numerics.lp_cap} allocation variables")
    mech = mech or solve(inst)
    grid = midpoint_grid(inst, nt, nq)

    c, A, b = build_program(inst, grid)
    res = maximize(c, A, b)
    n_pi = nt * nq
    x = res.x
    pi = np.clip(x[:n_pi].reshape(nt, nq), 0.0, 1.0)
    pb_hat = x[n_pi:n_pi + nt] - x[n_pi + nt:n_pi + 2 * nt]
    ps_hat = x[n_pi + 2 * nt:]
    lp = DiscreteProgram(pi, pb_hat, ps_hat)

    closed = _threshold_program(mech, grid).revenue(grid)
    result = OracleResult(
        grid=(nt, nq),
        lp_revenue=res.value,
        closed_form_on_grid_revenue=closed,
        gap=res.value - closed,
        lp_allocation=pi,
        lp_payments=lp.payments(grid, inst.numerics.zero_mass),
        iterations=res.iterations,
    )
    logger.info(f"[{inst.name or 'instance'}] LP {nt}x{nq}: revenue {res.value:.6g} "
                f"(threshold on grid {closed:.6g}, {res.iterations} pivots)")
    if result.gap < -LP_TOL:
        logger.warning(f"LP revenue below the grid threshold mechanism by {-result.gap:.3g}")
    return result


# ---------------------------
# region scan
# ---------------------------
NO_TRADE = "no_trade"
TRADE_PROFIT = "trade_profit"
TRADE_LOSS = "trade_loss"


@dataclass(frozen=True)
class RegionCell:
    t: float
    q: float
    status: str


def classify(mech: MediatorMechanism, t, q) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    q = np.asarray(q, dtype=float)
    trade = np.asarray(mech.allocation(t[:, None], q[None, :])) > 0
    loss = np.asarray(mech.seller_payment(q))[None, :] > np.asarray(mech.buyer_payment(t))[:, None]
    return np.where(~trade, NO_TRADE, np.where(loss, TRADE_LOSS, TRADE_PROFIT))


def loss_region(mech: MediatorMechanism, nt: int, nq: int) -> List[RegionCell]:
    inst = mech.instance
    t_edges = inst.T.grid(nt + 1)
    q_edges = inst.Q.grid(nq + 1)
    t = 0.5 * (t_edges[:-1] + t_edges[1:])
    q = 0.5 * (q_edges[:-1] + q_edges[1:])
    status = classify(mech, t, q)
    return [RegionCell(float(t[i]), float(q[j]), str(status[i, j])) for i in range(nt) for j in range(nq)]


def trade_set_is_prefix(cells: List[RegionCell]) -> bool:
    """For every buyer type the trading qualities form an initial segment."""
    by_t = defaultdict(list)
    for c in cells:
        by_t[c.t].append(c)
    for row in by_t.values():
        seen_gap = False
        for c in sorted(row, key=lambda c: c.q):
            if c.status == NO_TRADE:
                seen_gap = True
            elif seen_gap:
                return False
    return True
