"""
Channel selection among the over-modeled solutions

All solvers parameterize the candidate filter as a fixed vector plus an
offset in a known basis and minimize an l1 (LP) or lp (reweighted l1)
objective over the offset.
"""
import logging
from typing import Optional

import numpy as np
from scipy import linalg

from simoid.errors import DegenerateError, LPError, NormalizationError, NotFoundError, ParameterError
from simoid.models import ChannelVector, KernelBasis, LPStatus, RecoveryResult
from simoid.services.channel_model import (
    SeedLike,
    build_shift_matrix,
    check_delta,
    fixed_offset,
    pad_channel,
    reduced_shift_matrix,
)
from simoid.services.lp_core import solve_l1_regression

logger = logging.getLogger(__name__)

EPS_SMOOTH = 1e-8
MIN_DECREASE = 1e-12
ROW_TOL = 1e-10


def _correlation(f: np.ndarray, reference: np.ndarray) -> float:
    norm = np.linalg.norm(f) * np.linalg.norm(reference)
    if norm == 0:
        raise DegenerateError("correlation against a zero vector is undefined")
    return float(min(1.0, abs(f @ reference) / norm))


def _lp_value(residual: np.ndarray, p: float) -> float:
    return float(np.sum(np.abs(residual) ** p))


def _l1_offset(X: np.ndarray, y: np.ndarray, weights: Optional[np.ndarray] = None):
    solution = solve_l1_regression(X, y, weights)
    if solution.status is not LPStatus.OPTIMAL:
        raise LPError(f"l1 regression ended {solution.status.value}")
    return solution


def _reweighted_descent(base: np.ndarray, D: np.ndarray, p: float, t0: np.ndarray, max_iter: int):
    """
    Iteratively reweighted l1 on sum |base + D t|^p from t0

    A step is accepted only when it lowers the true lp objective by more
    than MIN_DECREASE, so the iterates are monotone and a start that no
    step improves is returned unchanged.
    """
    t = np.array(t0, dtype=float)
    objective = _lp_value(base + D @ t, p)
    accepted = 0
    for iteration in range(max_iter):
        weights = (np.abs(base + D @ t) + EPS_SMOOTH) ** (p - 1)
        weights /= weights.max()
        candidate = _l1_offset(-D, base, weights).g
        value = _lp_value(base + D @ candidate, p)
        if objective - value <= MIN_DECREASE:
            break
        t, objective = candidate, value
        accepted += 1
        logger.debug(f"IRL1 step {iteration}: objective {objective:.12g}")
    return t, objective, accepted


def solve_p1(h: ChannelVector, Lp: int) -> RecoveryResult:
    """Global l1 selection: minimize ||h_fixed + H-tilde g||_1 over g"""
    check_delta(h, Lp)
    H = build_shift_matrix(h, Lp).entries
    H_tilde = reduced_shift_matrix(h, Lp)
    y = fixed_offset(h, Lp)

    solution = _l1_offset(-H_tilde, y)
    g = solution.g
    f_hat = H[:, 0] + H[:, 1:] @ g
    return RecoveryResult(
        f_hat=f_hat,
        g_star=g,
        objective=_lp_value(y + H_tilde @ g, 1.0),
        correlation=_correlation(f_hat, pad_channel(h, Lp)),
        iterations=solution.iterations,
        p=1.0,
    )


def solve_pp_local(
    h: ChannelVector,
    Lp: int,
    p: float,
    g0: Optional[np.ndarray] = None,
    max_iter: int = 100
) -> RecoveryResult:
    """
    Local lp selection by iteratively reweighted l1 from g0

    Returns a stationary point of sum |h_fixed + H-tilde g|^p; global
    optimality is not claimed.
    """
    delta = check_delta(h, Lp)
    if not 0 < p < 1:
        raise ParameterError(f"local lp descent needs 0 < p < 1, got {p}")
    g0 = np.zeros(delta) if g0 is None else np.atleast_1d(np.asarray(g0, dtype=float))
    if g0.size != delta:
        raise ParameterError(f"g0 has length {g0.size}, expected delta={delta}")

    H = build_shift_matrix(h, Lp).entries
    g, objective, accepted = _reweighted_descent(
        fixed_offset(h, Lp), reduced_shift_matrix(h, Lp), p, g0, max_iter
    )
    f_hat = H[:, 0] + H[:, 1:] @ g
    return RecoveryResult(
        f_hat=f_hat,
        g_star=g,
        objective=objective,
        correlation=_correlation(f_hat, pad_channel(h, Lp)),
        iterations=accepted,
        p=p,
    )


def recover_from_kernel(
    K: KernelBasis,
    w: Optional[np.ndarray] = None,
    p: float = 1.0,
    reference: Optional[np.ndarray] = None,
    max_iter: int = 100
) -> RecoveryResult:
    """
    Sparsest unit-normalized vector in span(K)

    Minimizes ||Kc||_1 (then, for p < 1, ||Kc||_p^p by local descent)
    subject to w'Kc = 1. Without an explicit w the coordinate functionals
    e_0, e_1, ... are tried in order until one does not vanish on span(K).

    Args:
        K: Kernel basis from the subspace front end
        w: Optional normalization functional
        p: Sparsity exponent in (0, 1]
        reference: Optional true padded channel used for the correlation score

    Raises:
        NormalizationError: every candidate functional vanishes on span(K)
    """
    if not 0 < p <= 1:
        raise ParameterError(f"exponent p must lie in (0, 1], got {p}")
    basis = np.asarray(K.K)
    dim, k = basis.shape

    if w is not None:
        w = np.asarray(w, dtype=float)
        if w.shape != (dim,):
            raise ParameterError(f"normalization functional must have length {dim}")
        candidates = [(None, w)]
    else:
        candidates = ((j, None) for j in range(dim))

    for index, functional in candidates:
        a = basis[index] if functional is None else basis.T @ functional
        if np.linalg.norm(a) <= ROW_TOL:
            continue
        if index:
            logger.warning(f"Normalizing on coordinate {index}: earlier coordinates vanish on the kernel")

        c0 = a / (a @ a)
        if k == 1:
            t = np.zeros(0)
            f = basis @ c0
            objective = _lp_value(f, p)
            accepted = 0
        else:
            N = linalg.null_space(a[None, :])
            base, D = basis @ c0, basis @ N
            t = _l1_offset(-D, base).g
            accepted = 0
            if p < 1:
                t, _, accepted = _reweighted_descent(base, D, p, t, max_iter)
            f = base + D @ t
            objective = _lp_value(f, p)

        f_hat = f / np.linalg.norm(f)
        correlation = _correlation(f_hat, reference) if reference is not None else None
        return RecoveryResult(
            f_hat=f_hat,
            g_star=t,
            objective=objective,
            correlation=correlation,
            iterations=accepted,
            p=p,
        )

    raise NormalizationError("no normalization functional is feasible on the kernel span")


def recovery_success(f_hat: np.ndarray, h: ChannelVector, Lp: int) -> float:
    """Best normalized correlation of f_hat with any of the Lp-L+1 shifted paddings of h"""
    f_hat = np.asarray(f_hat, dtype=float)
    if f_hat.shape != (h.M * (Lp + 1),):
        raise ParameterError(f"f_hat must have length {h.M * (Lp + 1)}, got {f_hat.shape}")
    if not np.any(f_hat):
        raise DegenerateError("recovered vector is zero")
    return max(_correlation(f_hat, pad_channel(h, Lp, s)) for s in range(Lp - h.L + 1))


def verify_local_minimum(
    h: ChannelVector,
    Lp: int,
    p: float,
    num_samples: int = 10_000,
    seed: SeedLike = None,
    r0: float = 1e-2,
    r_min: float = 1e-10
) -> float:
    """
    Sampled certificate that g = 0 locally minimizes the lp objective

    Halves the radius from r0 until f_p(g) >= f_p(0) on every sampled g in
    the ball, and returns that radius.

    Raises:
        NotFoundError: the property still fails below r_min
    """
    delta = check_delta(h, Lp)
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(num_samples, delta))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    directions *= rng.uniform(size=(num_samples, 1)) ** (1.0 / delta)

    base = fixed_offset(h, Lp)
    H_tilde = reduced_shift_matrix(h, Lp)
    f0 = _lp_value(base, p)
    r = r0
    while r >= r_min:
        residuals = base[None, :] + r * directions @ H_tilde.T
        values = np.sum(np.abs(residuals) ** p, axis=1)
        if np.all(values >= f0):
            logger.debug(f"Local minimum certified on radius {r:.3e}")
            return r
        r /= 2
    raise NotFoundError(f"lp objective decreases near g=0 for every radius down to {r_min}")
