"""
Probability of the l1 identifiability condition

Closed-form lower bound for delta = 1, Monte Carlo estimates of the true
frequency under Gaussian channels, and (M, L) sweeps of both.
"""
import csv
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np
from scipy import optimize, special

from simoid.errors import DomainError, ParameterError
from simoid.models import BoundPoint, Verdict
from simoid.schemas import CSV_FIELDS, BoundRow
from simoid.services.channel_model import gen_channel
from simoid.services.identifiability import check_condition, check_condition_delta1

logger = logging.getLogger(__name__)

WILSON_Z = 1.959963984540054
EPS_GRID = 1001
MIN_TRIALS = 100


def lower_incomplete_gamma_half(x: float) -> float:
    """gamma(1/2, x) = sqrt(pi) erf(sqrt(x))"""
    if x < 0:
        raise DomainError(f"gamma(1/2, x) needs x >= 0, got {x}")
    return float(np.sqrt(np.pi) * special.erf(np.sqrt(x)))


def concentration_factor(eps, M: int):
    """1 - exp(-M eps^2 / pi): probability floor for ||h_L||_1 staying above its threshold"""
    return -np.expm1(-M * np.square(eps) / np.pi)


def gaussian_tail_factor(eps, M: int, L: int):
    """gamma(1/2, M(1-eps)^2/(pi L)) / sqrt(pi): probability that |v'A| stays below the threshold"""
    return special.erf((1 - np.asarray(eps)) * np.sqrt(M / (np.pi * L)))


def phi(eps, M: int, L: int):
    return concentration_factor(eps, M) * gaussian_tail_factor(eps, M, L)


def bound_l1_delta1(M: int, L: int) -> BoundPoint:
    """
    Lower bound on the probability of the l1 condition for delta = 1

    The maximizer over eps in [0, 1] is located on a uniform grid and
    then refined with a bounded scalar search around the best grid cell.
    """
    if M < 2:
        raise ParameterError(f"antenna count M must be >= 2, got {M}")
    if L < 1:
        raise ParameterError(f"channel order L must be >= 1, got {L}")
    grid = np.linspace(0.0, 1.0, EPS_GRID)
    values = phi(grid, M, L)
    best = int(np.argmax(values))
    lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, EPS_GRID - 1)]
    refined = optimize.minimize_scalar(
        lambda e: -phi(e, M, L), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}
    )
    eps_star, bound = float(grid[best]), float(values[best])
    if refined.success and -refined.fun > bound:
        eps_star, bound = float(refined.x), float(-refined.fun)
    return BoundPoint(M=M, L=L, bound=min(max(bound, 0.0), 1.0), eps_star=eps_star)


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> Tuple[float, float]:
    """Wilson score interval (center, halfwidth) for a binomial proportion"""
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    phat = successes / trials
    denominator = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denominator
    halfwidth = z * np.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denominator
    return float(center), float(halfwidth)


def _count_identifiable(M: int, L: int, p: float, delta: int, seed: int, start: int, stop: int) -> int:
    """Trials start..stop-1; trial i draws its channel from default_rng([seed, i])"""
    count = 0
    for trial in range(start, stop):
        h = gen_channel(M, L, np.random.default_rng([seed, trial]))
        if delta == 1:
            report = check_condition_delta1(h, p)
        else:
            report = check_condition(h, L + delta, p)
        count += report.verdict is Verdict.IDENTIFIABLE
    return count


def _resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return int(seed)
    chosen = int(np.random.SeedSequence().entropy % (2 ** 63))
    logger.info(f"No seed given; using seed {chosen}")
    return chosen


def monte_carlo_probability(
    M: int,
    L: int,
    p: float = 1.0,
    trials: int = 10_000,
    seed: Optional[int] = None,
    delta: int = 1,
    workers: int = 1
) -> BoundPoint:
    """
    Frequency of the identifiability verdict over Gaussian channels

    The estimate is identical for every ``workers`` value: trials are
    partitioned into contiguous ranges and each trial seeds its own generator.
    """
    if trials < MIN_TRIALS:
        raise ParameterError(f"trials must be >= {MIN_TRIALS}, got {trials}")
    if not 1 <= delta <= L:
        raise ParameterError(f"delta must lie in [1, L={L}], got {delta}")
    if not 0 < p <= 1:
        raise ParameterError(f"exponent p must lie in (0, 1], got {p}")
    seed = _resolve_seed(seed)

    if workers <= 1:
        successes = _count_identifiable(M, L, p, delta, seed, 0, trials)
    else:
        edges = np.linspace(0, trials, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [
                executor.submit(_count_identifiable, M, L, p, delta, seed, int(a), int(b))
                for a, b in zip(edges[:-1], edges[1:])
            ]
            successes = sum(future.result() for future in futures)

    _, halfwidth = wilson_interval(successes, trials)
    bound = bound_l1_delta1(M, L) if delta == 1 and p == 1 else None
    logger.info(f"Monte Carlo M={M} L={L} delta={delta} p={p}: {successes}/{trials} identifiable")
    return BoundPoint(
        M=M,
        L=L,
        bound=bound.bound if bound else None,
        eps_star=bound.eps_star if bound else None,
        p=p,
        delta=delta,
        mc_estimate=successes / trials,
        mc_halfwidth=halfwidth,
        trials=trials,
        seed=seed,
    )


def _sweep_point(args) -> BoundPoint:
    M, L, p, trials, seed, delta = args
    return monte_carlo_probability(M, L, p, trials, seed, delta)


def sweep(
    M_list: Sequence[int],
    L_list: Sequence[int],
    p: float = 1.0,
    trials: int = 10_000,
    seed: Optional[int] = None,
    delta: int = 1,
    workers: int = 1
) -> List[BoundPoint]:
    """Bound and Monte Carlo estimate on every (M, L) pair, rows in (M, L) order"""
    if not M_list or not L_list:
        raise ParameterError("sweep grids must be nonempty")
    seed = _resolve_seed(seed)
    grid = sorted(set(itertools.product(M_list, L_list)))
    tasks = [(M, L, p, trials, seed, delta) for M, L in grid]

    if workers <= 1:
        points = [_sweep_point(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            # map preserves task order whatever the completion order
            points = list(executor.map(_sweep_point, tasks))
    return points


def concentration_violation_frequency(M: int, L: int, eps: float, draws: int, seed=None) -> float:
    """Empirical P[ sqrt(L+1) ||h_L||_1 <= (1-eps) sqrt(2/pi) M ]"""
    rng = np.random.default_rng(seed)
    h_L = rng.normal(0.0, np.sqrt(1.0 / (L + 1)), size=(draws, M))
    statistic = np.sqrt(L + 1) * np.abs(h_L).sum(axis=1)
    return float(np.mean(statistic <= (1 - eps) * np.sqrt(2 / np.pi) * M))


def delta1_statistics(M: int, L: int, draws: int, seed=None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized (v'A, ||h_L||_1) over draws Gaussian channels with delta = 1

    For delta = 1, A stacks h_0..h_{L-1} and v stacks sign(h_1)..sign(h_L).
    """
    rng = np.random.default_rng(seed)
    taps = rng.normal(0.0, np.sqrt(1.0 / (L + 1)), size=(draws, L + 1, M))
    vA = np.sum(np.sign(taps[:, 1:]) * taps[:, :-1], axis=(1, 2))
    return vA, np.abs(taps[:, L]).sum(axis=1)


def _format(value) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def write_rows(points: Iterable[BoundPoint], handle: TextIO) -> int:
    """Write the header and one validated row per point; returns the row count"""
    rows = [BoundRow(**{name: getattr(point, name) for name in CSV_FIELDS}) for point in points]
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in rows:
        writer.writerow([_format(getattr(row, name)) for name in CSV_FIELDS])
    return len(rows)


def write_csv(points: Iterable[BoundPoint], path: str) -> int:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        count = write_rows(points, handle)
    logger.info(f"Wrote {count} rows to {path}")
    return count


def read_csv(path: str) -> List[BoundRow]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        return [
            BoundRow(**{key: value for key, value in record.items() if value != ""})
            for record in reader
        ]
