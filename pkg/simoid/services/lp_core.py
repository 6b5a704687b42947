"""
Small dense linear-programming kernel

Both problem shapes used by the identifiability analysis are rewritten in
standard form (min c'x, Ax = b, x >= 0) and solved with a two-phase tableau
simplex under Bland's rule, so the pivot sequence, and with it any choice
among tied optima, is fully deterministic.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from simoid.errors import LPError, ParameterError, RankError
from simoid.models import ChebyshevSolution, L1RegressionSolution, LPStatus

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-11
FEASIBILITY_TOL = 1e-9
MAX_PIVOTS = 50_000


@dataclass
class _StandardResult:
    x: np.ndarray
    status: LPStatus
    pivots: int


class _Tableau:
    """Rows 0..m-1 hold [A | b], the last row holds reduced costs and -objective"""

    def __init__(self, body: np.ndarray, basis: list):
        self.T = body
        self.basis = basis
        self.pivots = 0

    @property
    def m(self) -> int:
        return self.T.shape[0] - 1

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col
        self.pivots += 1
        if self.pivots > MAX_PIVOTS:
            raise LPError(f"simplex exceeded {MAX_PIVOTS} pivots")

    def run(self, allowed: int) -> LPStatus:
        """Bland's rule over the first ``allowed`` columns until optimal or unbounded"""
        T = self.T
        while True:
            costs = T[-1, :allowed]
            entering = np.flatnonzero(costs < -PIVOT_TOL)
            if entering.size == 0:
                return LPStatus.OPTIMAL
            col = int(entering[0])
            column = T[:-1, col]
            candidates = np.flatnonzero(column > PIVOT_TOL)
            if candidates.size == 0:
                return LPStatus.UNBOUNDED
            ratios = T[candidates, -1] / column[candidates]
            best = ratios.min()
            tied = candidates[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
            # leaving variable: smallest basis index among the tied rows
            row = int(min(tied, key=lambda i: self.basis[i]))
            self.pivot(row, col)


def solve_standard_form(c: np.ndarray, A: np.ndarray, b: np.ndarray) -> _StandardResult:
    """
    Minimize c'x subject to Ax = b, x >= 0

    Phase one drives a full set of artificial variables to zero; artificials
    still basic at level zero are pivoted out, or their rows dropped when
    the row is redundant. The final basis is re-solved directly against the
    original data to remove accumulated pivoting error.
    """
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    A_orig, b_orig = A.copy(), b.copy()

    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    body = np.zeros((m + 1, n + m + 1))
    body[:m, :n] = A
    body[:m, n:n + m] = np.eye(m)
    body[:m, -1] = b
    body[-1, :n] = -A.sum(axis=0)
    body[-1, -1] = -b.sum()
    tableau = _Tableau(body, list(range(n, n + m)))

    tableau.run(allowed=n + m)
    infeasibility = -tableau.T[-1, -1]
    if infeasibility > FEASIBILITY_TOL * max(1.0, np.abs(b).max(initial=0.0)):
        logger.debug(f"Phase one ended with infeasibility {infeasibility:.3e}")
        return _StandardResult(np.zeros(n), LPStatus.INFEASIBLE, tableau.pivots)

    keep = []
    for row in range(m):
        if tableau.basis[row] < n:
            keep.append(row)
            continue
        nonzero = np.flatnonzero(np.abs(tableau.T[row, :n]) > PIVOT_TOL)
        if nonzero.size:
            tableau.pivot(row, int(nonzero[0]))
            keep.append(row)
    T = tableau.T[keep + [m]][:, list(range(n)) + [n + m]]
    basis = [tableau.basis[row] for row in keep]

    # phase two objective row: c_N - c_B' B^-1 N
    T[-1, :] = 0.0
    T[-1, :n] = c
    for row, var in enumerate(basis):
        T[-1] -= c[var] * T[row]
    phase_two = _Tableau(T, basis)
    phase_two.pivots = tableau.pivots
    status = phase_two.run(allowed=n)
    if status is LPStatus.UNBOUNDED:
        return _StandardResult(np.zeros(n), status, phase_two.pivots)

    x = np.zeros(n)
    x[basis] = T[:-1, -1]
    refined, *_ = np.linalg.lstsq(A_orig[:, basis], b_orig, rcond=None)
    if np.all(refined >= -FEASIBILITY_TOL):
        x[basis] = np.maximum(refined, 0.0)
    logger.debug(f"Simplex finished after {phase_two.pivots} pivots ({m} rows, {n} columns)")
    return _StandardResult(x, LPStatus.OPTIMAL, phase_two.pivots)


def solve_chebyshev(Bt: np.ndarray, z: np.ndarray) -> ChebyshevSolution:
    """
    Minimize ||d||_inf subject to Bt d = z

    Args:
        Bt: (delta x m) matrix with full row rank
        z: length-delta right-hand side

    Raises:
        RankError: if Bt is rank deficient
    """
    Bt = np.atleast_2d(np.asarray(Bt, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    delta, m = Bt.shape
    if z.size != delta:
        raise ParameterError(f"z has length {z.size}, expected {delta}")
    if np.linalg.matrix_rank(Bt) < delta:
        raise RankError(f"constraint matrix of shape {Bt.shape} does not have full row rank {delta}")

    # variables [d+ (m), d- (m), t (1), s_upper (m), s_lower (m)]
    I = np.eye(m)
    Zm = np.zeros((m, m))
    ones = np.ones((m, 1))
    A = np.block([
        [Bt, -Bt, np.zeros((delta, 1)), np.zeros((delta, m)), np.zeros((delta, m))],
        [I, -I, -ones, I, Zm],
        [-I, I, -ones, Zm, I],
    ])
    b = np.concatenate([z, np.zeros(2 * m)])
    c = np.zeros(4 * m + 1)
    c[2 * m] = 1.0

    result = solve_standard_form(c, A, b)
    if result.status is not LPStatus.OPTIMAL:
        return ChebyshevSolution(np.zeros(m), float("inf"), result.status, result.pivots)

    d = result.x[:m] - result.x[m:2 * m]
    # minimum-norm correction onto the constraint set
    d = d + np.linalg.lstsq(Bt, z - Bt @ d, rcond=None)[0]
    return ChebyshevSolution(d, float(np.abs(d).max(initial=0.0)), LPStatus.OPTIMAL, result.pivots)


def solve_l1_regression(
    X: np.ndarray,
    y: np.ndarray,
    weights: Optional[np.ndarray] = None
) -> L1RegressionSolution:
    """
    Minimize sum_i w_i |y_i - (Xg)_i| over g

    Args:
        X: (m x delta) design matrix, m >= delta >= 1
        y: length-m target
        weights: optional positive weights (all ones when omitted)
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    m, delta = X.shape
    if delta < 1 or m < delta:
        raise ParameterError(f"design matrix must satisfy m >= delta >= 1, got shape {X.shape}")
    if y.size != m:
        raise ParameterError(f"y has length {y.size}, expected {m}")
    w = np.ones(m) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (m,) or np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ParameterError("weights must be a finite positive vector matching y")

    # variables [g+ (delta), g- (delta), u+ (m), u- (m)] with Xg + u+ - u- = y
    I = np.eye(m)
    A = np.hstack([X, -X, I, -I])
    c = np.concatenate([np.zeros(2 * delta), w, w])

    result = solve_standard_form(c, A, y)
    if result.status is not LPStatus.OPTIMAL:
        return L1RegressionSolution(np.zeros(delta), float("inf"), result.status, result.pivots)

    g = result.x[:delta] - result.x[delta:2 * delta]
    objective = float(np.sum(w * np.abs(y - X @ g)))
    return L1RegressionSolution(g, objective, LPStatus.OPTIMAL, result.pivots)
