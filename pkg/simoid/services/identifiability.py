"""
Channel identifiability conditions for the l1 / lp channel-selection problems

The condition ratio |v'Ag| / ||Bg||_1 is bounded over all offsets g by the
dual norm ||A'v||_B, evaluated exactly as min ||d||_inf s.t. B'd = A'v.
"""
import logging
from typing import List, Tuple, Union

import numpy as np

from simoid.errors import DegenerateError, DomainError, NotFoundError, ParameterError, RankError
from simoid.models import ChannelVector, FilterMatrix, IdentifiabilityReport, LPStatus, Method, Verdict
from simoid.services.channel_model import (
    SeedLike,
    check_delta,
    fixed_offset,
    partition_AB,
    reduced_shift_matrix,
    sign_vector,
)
from simoid.services.lp_core import solve_chebyshev

logger = logging.getLogger(__name__)

VERDICT_TOL = 1e-7
P_GRID = np.round(np.arange(20, 0, -1) * 0.05, 10)
P_RESOLUTION = 1e-3

MatrixLike = Union[np.ndarray, FilterMatrix]


def _dense(matrix: MatrixLike) -> np.ndarray:
    if isinstance(matrix, FilterMatrix):
        return np.asarray(matrix.entries)
    return np.asarray(matrix, dtype=float)


def classify(margin: float, tol: float = VERDICT_TOL) -> Verdict:
    if margin < 1 - tol:
        return Verdict.IDENTIFIABLE
    if margin > 1 + tol:
        return Verdict.NOT_IDENTIFIABLE
    return Verdict.BOUNDARY


def check_condition(h: ChannelVector, Lp: int, p: float = 1.0) -> IdentifiabilityReport:
    """
    Evaluate the identifiability margin ||A'v||_B through its dual LP

    p = 1 gives the necessary and sufficient l1 condition; p < 1 the
    sufficient condition for the zero-padded channel to be a local minimum
    of the lp problem, with v the weighted sign vector.

    Raises:
        ParameterError: delta outside [1, L] or p outside (0, 1]
        DomainError: p < 1 with a zero channel entry
        RankError: B is rank deficient
    """
    delta = check_delta(h, Lp)
    v = sign_vector(h, p).entries
    A, B = partition_AB(h, Lp)
    if np.linalg.matrix_rank(B.entries) < delta:
        raise RankError(f"B has rank below delta={delta} (is h_L zero?)")

    solution = solve_chebyshev(B.entries.T, A.entries.T @ v)
    if solution.status is not LPStatus.OPTIMAL:
        raise RankError(f"dual problem is {solution.status.value}")

    near_boundary = delta == h.L
    if near_boundary:
        logger.warning(f"delta = L = {h.L}: outside the strict hypothesis L > Lp - L of the l1 condition")
    verdict = classify(solution.value)
    logger.debug(f"Margin {solution.value:.6g} (p={p}, delta={delta}) -> {verdict.value}")
    return IdentifiabilityReport(
        margin=solution.value,
        verdict=verdict,
        dual_certificate=solution.d,
        p=p,
        delta=delta,
        method=Method.LP_DUAL,
        near_hypothesis_boundary=near_boundary,
    )


def closed_form_delta1(h: ChannelVector, p: float = 1.0) -> float:
    """
    Margin for delta = 1: |v'A| / ||h_L||_1

    Raises:
        DegenerateError: h_L is zero
    """
    A, B = partition_AB(h, h.L + 1)
    norm_B = float(np.abs(B.entries).sum())
    if norm_B == 0:
        raise DegenerateError("h_L is zero; the delta=1 margin is undefined")
    v = sign_vector(h, p).entries
    return float(abs(v @ A.entries[:, 0]) / norm_B)


def check_condition_delta1(h: ChannelVector, p: float = 1.0) -> IdentifiabilityReport:
    """Closed-form report for Lp = L + 1, with the optimal certificate sign(h_L) z / ||h_L||_1"""
    A, B = partition_AB(h, h.L + 1)
    b = B.entries[:, 0]
    norm_B = float(np.abs(b).sum())
    if norm_B == 0:
        raise DegenerateError("h_L is zero; the delta=1 margin is undefined")
    z = float(sign_vector(h, p).entries @ A.entries[:, 0])
    margin = abs(z) / norm_B
    return IdentifiabilityReport(
        margin=margin,
        verdict=classify(margin),
        dual_certificate=np.sign(b) * z / norm_B,
        p=p,
        delta=1,
        method=Method.CLOSED_FORM,
        near_hypothesis_boundary=h.L == 1,
    )


def sup_ratio_sampling(
    A: MatrixLike,
    B: MatrixLike,
    v: np.ndarray,
    num_dirs: int,
    seed: SeedLike = None
) -> float:
    """
    max over num_dirs random unit directions g of |v'Ag| / ||Bg||_1

    Always a lower bound on the supremum ||A'v||_B.
    """
    if num_dirs < 1:
        raise ParameterError(f"num_dirs must be >= 1, got {num_dirs}")
    A = _dense(A)
    B = _dense(B)
    z = A.T @ np.asarray(v, dtype=float)
    rng = np.random.default_rng(seed)

    best = 0.0
    for start in range(0, num_dirs, 20_000):
        G = rng.normal(size=(min(20_000, num_dirs - start), z.size))
        G /= np.linalg.norm(G, axis=1, keepdims=True)
        numerator = np.abs(G @ z)
        denominator = np.abs(G @ B.T).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(denominator > 0, numerator / denominator, np.inf)
        best = max(best, float(ratios.max()))
    return best


def margin_curve(h: ChannelVector, Lp: int, p_values) -> List[Tuple[float, float]]:
    return [(float(p), check_condition(h, Lp, float(p)).margin) for p in p_values]


def find_feasible_p(h: ChannelVector, Lp: int) -> float:
    """
    Largest p (grid 1, 0.95, ..., 0.05, then bisection to 1e-3) whose
    sufficient condition holds

    The bisection runs only inside the bracket found on the grid; the
    margin is not assumed monotone in p.

    Raises:
        DomainError: a zero entry in h_1..h_L
        NotFoundError: no grid point qualifies; carries the margin at p=0.05
    """
    check_delta(h, Lp)
    if np.any(h.h_tilde == 0):
        raise DomainError("feasible-p search needs every entry of h_1..h_L to be nonzero")

    previous = None
    margin = float("nan")
    for p in P_GRID:
        report = check_condition(h, Lp, float(p))
        margin = report.margin
        if report.verdict is Verdict.IDENTIFIABLE:
            if previous is None:
                return float(p)
            lo, hi = float(p), previous
            while hi - lo > P_RESOLUTION:
                mid = 0.5 * (lo + hi)
                if check_condition(h, Lp, mid).verdict is Verdict.IDENTIFIABLE:
                    lo = mid
                else:
                    hi = mid
            logger.info(f"Feasible p = {lo:.4f} (bracket [{lo:.4f}, {hi:.4f}])")
            return lo
        previous = float(p)

    raise NotFoundError(
        f"no feasible p down to {P_GRID[-1]}: margin there is {margin:.6g}", margin=margin
    )


def ell1_objective(h: ChannelVector, Lp: int, g: np.ndarray) -> float:
    """f(g) = ||h_fixed + H-tilde g||_1"""
    return lp_objective(h, Lp, g, 1.0)


def lp_objective(h: ChannelVector, Lp: int, g: np.ndarray, p: float) -> float:
    """f_p(g) = sum |h_fixed + H-tilde g|^p"""
    residual = fixed_offset(h, Lp) + reduced_shift_matrix(h, Lp) @ np.atleast_1d(g)
    return float(np.sum(np.abs(residual) ** p))


def directional_derivative(
    h: ChannelVector,
    Lp: int,
    g: np.ndarray,
    t: float = None
) -> Tuple[float, float]:
    """
    One-sided difference quotient of f at 0 along g, next to v'Ag + ||Bg||_1

    The default step keeps every entry of h-tilde + tAg on the sign of h-tilde.

    Returns:
        (finite_difference, predicted)
    """
    check_delta(h, Lp)
    if np.any(h.h_tilde == 0):
        raise DomainError("the directional derivative identity needs nonzero entries in h_1..h_L")
    g = np.atleast_1d(np.asarray(g, dtype=float))
    A, B = partition_AB(h, Lp)
    Ag = A.entries @ g
    if t is None:
        norm_Ag = np.linalg.norm(Ag)
        t = 1e-8 * np.linalg.norm(h.h_tilde) / norm_Ag if norm_Ag > 0 else 1e-8

    base = fixed_offset(h, Lp)
    moved = base + t * (reduced_shift_matrix(h, Lp) @ g)
    finite_difference = float(np.sum(np.abs(moved) - np.abs(base)) / t)
    predicted = float(sign_vector(h, 1.0).entries @ Ag + np.abs(B.entries @ g).sum())
    return finite_difference, predicted
