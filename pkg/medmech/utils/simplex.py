"""
Dense tableau simplex for

    maximize c.x  subject to  A x <= b,  x >= 0,  with b >= 0

so the slack basis at the origin is feasible and no phase one is needed.
Pricing is Dantzig's largest coefficient. After a run of degenerate pivots
it falls back to Bland's smallest index until the next pivot that moves the
objective, then returns to Dantzig. Every objective-moving pivot visits a new
basis and Bland cannot cycle inside a degenerate run, so the solve terminates.
"""
import logging
from dataclasses import dataclass

import numpy as np

from medmech.errors import OracleError

logger = logging.getLogger(__name__)

# pivot rows sparser than this are applied only on their nonzero columns
SPARSE_ROW_FRACTION = 0.3
# cancellation residue below this is stored as an exact zero
DROP_TOL = 1e-15


@dataclass
class SimplexResult:
    x: np.ndarray
    value: float
    iterations: int
    bland: bool          # whether any degenerate run needed Bland's rule
    bland_pivots: int = 0


def _entering(obj: np.ndarray, bland: bool, tol: float) -> int:
    if bland:
        candidates = np.flatnonzero(obj < -tol)
        return int(candidates[0]) if len(candidates) else -1
    j = int(np.argmin(obj))
    return j if obj[j] < -tol else -1


def _pivot(T: np.ndarray, r: int, j: int) -> None:
    T[r] /= T[r, j]
    pivot_col = T[:, j].copy()
    pivot_col[r] = 0.0
    rows = np.flatnonzero(pivot_col)
    if len(rows) == 0:
        return
    prow = T[r]
    cols = np.flatnonzero(prow)
    if len(cols) < SPARSE_ROW_FRACTION * T.shape[1]:
        block = np.ix_(rows, cols)
        updated = T[block] - np.outer(pivot_col[rows], prow[cols])
        updated[np.abs(updated) < DROP_TOL] = 0.0
        T[block] = updated
    else:
        T[rows] -= np.outer(pivot_col[rows], prow)
    T[rows, j] = 0.0


def maximize(c, A, b, max_iter: int = 500000, degenerate_limit: int = 50, tol: float = 1e-10) -> SimplexResult:
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise OracleError(f"simplex shapes disagree: A {A.shape}, b {b.shape}, c {c.shape}")
    if np.any(b < 0):
        raise OracleError("simplex needs b >= 0 (origin-feasible program)")

    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -c
    basis = np.arange(n, n + m)

    bland = False
    used_bland = False
    bland_pivots = 0
    streak = 0
    for it in range(max_iter):
        j = _entering(T[m, :-1], bland, tol)
        if j < 0:
            break

        col = T[:m, j]
        rows = np.flatnonzero(col > tol)
        if len(rows) == 0:
            raise OracleError(f"LP unbounded along column {j}")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol]
        r = int(ties[np.argmin(basis[ties])])

        _pivot(T, r, j)
        basis[r] = j
        bland_pivots += bland

        if best <= tol:
            streak += 1
            if not bland and streak >= degenerate_limit:
                bland = used_bland = True
                logger.debug(f"simplex: {streak} degenerate pivots in a row at iteration {it}, pricing by Bland's rule")
        else:
            streak = 0
            bland = False
    else:
        raise OracleError(f"simplex did not converge in {max_iter} iterations")

    if bland_pivots:
        logger.info(f"simplex: {it} pivots, {bland_pivots} of them under Bland's rule")
    x = np.zeros(n + m)
    x[basis] = T[:m, -1]
    return SimplexResult(x=x[:n], value=float(T[m, -1]), iterations=it, bland=used_bland, bland_pivots=bland_pivots)
