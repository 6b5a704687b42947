import numpy as np
import pytest
from scipy import integrate, stats

from simoid.errors import DomainError, ParameterError
from simoid.models import BoundPoint
from simoid.schemas import CSV_FIELDS
from simoid.services.probability import (
    bound_l1_delta1,
    concentration_violation_frequency,
    delta1_statistics,
    gaussian_tail_factor,
    lower_incomplete_gamma_half,
    monte_carlo_probability,
    phi,
    read_csv,
    sweep,
    wilson_interval,
    write_csv,
)


@pytest.mark.parametrize("x", [1e-6, 0.01, 0.1, 0.5, 1.0, 2.5, 5.0, 10.0, 20.0])
def test_incomplete_gamma_matches_quadrature(x):
    """Test gamma(1/2, x) against the integral of 2 exp(-u^2) on [0, sqrt(x)]"""
    reference, _ = integrate.quad(lambda u: 2 * np.exp(-u * u), 0, np.sqrt(x), epsabs=0, epsrel=1e-13)

    assert lower_incomplete_gamma_half(x) == pytest.approx(reference, rel=1e-10)


def test_incomplete_gamma_limits():
    assert lower_incomplete_gamma_half(0.0) == 0.0
    assert lower_incomplete_gamma_half(50.0) == pytest.approx(np.sqrt(np.pi), abs=1e-10)
    with pytest.raises(DomainError):
        lower_incomplete_gamma_half(-1.0)


def test_gaussian_tail_factor_is_a_normal_probability():
    """Test the tail factor equals P(|N(0, sigma^2)| < alpha) for the delta = 1 statistic"""
    for M, L, eps in [(4, 2, 0.3), (16, 5, 0.1), (64, 10, 0.6)]:
        sigma = np.sqrt(L * M / (L + 1))
        alpha = (1 - eps) * np.sqrt(2 / (np.pi * (L + 1))) * M

        assert gaussian_tail_factor(eps, M, L) == pytest.approx(2 * stats.norm.cdf(alpha / sigma) - 1, rel=1e-10)


def test_phi_vanishes_at_both_ends():
    assert phi(0.0, 8, 3) == 0.0
    assert phi(1.0, 8, 3) == 0.0


def test_bound_is_a_probability_with_interior_maximizer():
    point = bound_l1_delta1(8, 3)

    assert 0.0 < point.bound < 1.0
    assert 0.0 < point.eps_star < 1.0
    assert point.delta == 1


def test_bound_approaches_one_for_many_antennas():
    assert bound_l1_delta1(2048, 2).bound >= 0.99


def test_bound_does_not_grow_with_channel_order():
    bounds = [bound_l1_delta1(8, L).bound for L in (2, 5, 10, 20)]

    assert all(later <= earlier + 1e-12 for earlier, later in zip(bounds, bounds[1:]))


@pytest.mark.parametrize("M,L", [(2, 2), (8, 3), (64, 10)])
def test_bound_matches_fine_grid_maximum(M, L):
    grid = np.linspace(0.0, 1.0, 1_000_001)

    assert bound_l1_delta1(M, L).bound == pytest.approx(phi(grid, M, L).max(), abs=1e-8)


def test_bound_rejects_bad_dimensions():
    with pytest.raises(ParameterError):
        bound_l1_delta1(1, 2)
    with pytest.raises(ParameterError):
        bound_l1_delta1(4, 0)


def test_wilson_interval_known_value():
    center, halfwidth = wilson_interval(50, 100)

    assert center == pytest.approx(0.5)
    assert halfwidth == pytest.approx(0.0961685, rel=1e-5)


def test_wilson_interval_stays_inside_unit_interval():
    for successes in (0, 100):
        center, halfwidth = wilson_interval(successes, 100)
        assert center - halfwidth >= -1e-12
        assert center + halfwidth <= 1 + 1e-12


def test_monte_carlo_is_reproducible():
    first = monte_carlo_probability(4, 2, trials=300, seed=17)
    second = monte_carlo_probability(4, 2, trials=300, seed=17)

    assert first == second
    assert first.seed == 17
    assert first.bound == pytest.approx(bound_l1_delta1(4, 2).bound)


def test_monte_carlo_does_not_depend_on_worker_count():
    """Test that per-trial seeding makes the process pool invisible in the result"""
    serial = monte_carlo_probability(4, 2, trials=400, seed=5, workers=1)
    pooled = monte_carlo_probability(4, 2, trials=400, seed=5, workers=3)

    assert serial.mc_estimate == pooled.mc_estimate


def test_monte_carlo_general_delta_has_no_bound():
    point = monte_carlo_probability(3, 3, trials=100, seed=2, delta=2)

    assert point.bound is None
    assert point.eps_star is None
    assert 0.0 <= point.mc_estimate <= 1.0
    assert point.delta == 2


def test_monte_carlo_below_p_one_has_no_bound():
    point = monte_carlo_probability(4, 2, p=0.5, trials=100, seed=1)

    assert point.bound is None
    assert point.eps_star is None
    assert point.delta == 1
    assert point.p == 0.5
    assert 0.0 <= point.mc_estimate <= 1.0


@pytest.mark.parametrize("kwargs", [
    {"trials": 99},
    {"delta": 3},
    {"p": 0.0},
])
def test_monte_carlo_rejects_bad_parameters(kwargs):
    arguments = {"M": 4, "L": 2, "trials": 100, "seed": 1}
    arguments.update(kwargs)
    with pytest.raises(ParameterError):
        monte_carlo_probability(**arguments)


def test_monte_carlo_stays_above_bound_small():
    for M, L in [(4, 2), (8, 5)]:
        point = monte_carlo_probability(M, L, trials=500, seed=23)
        assert point.mc_estimate >= point.bound - 3 * point.mc_halfwidth


@pytest.mark.slow
def test_monte_carlo_stays_above_bound_and_follows_trends():
    """Test the bound against simulation on the full grid, plus the M and L trends"""
    points = {
        (point.M, point.L): point
        for point in sweep([2, 4, 8, 16], [2, 5, 10], trials=10_000, seed=2024)
    }
    for point in points.values():
        assert point.mc_estimate >= point.bound - 3 * point.mc_halfwidth

    for L in (2, 5, 10):
        for M, M_next in [(2, 4), (4, 8), (8, 16)]:
            a, b = points[(M, L)], points[(M_next, L)]
            assert b.mc_estimate >= a.mc_estimate - 2 * max(a.mc_halfwidth, b.mc_halfwidth)
    for M in (2, 4, 8, 16):
        for L, L_next in [(2, 5), (5, 10)]:
            a, b = points[(M, L)], points[(M, L_next)]
            assert b.mc_estimate <= a.mc_estimate + 2 * max(a.mc_halfwidth, b.mc_halfwidth)


def test_sweep_orders_rows_by_grid():
    points = sweep([4, 2], [5, 2], trials=100, seed=3)

    assert [(p.M, p.L) for p in points] == [(2, 2), (2, 5), (4, 2), (4, 5)]
    assert all(p.seed == 3 for p in points)


def test_sweep_rejects_empty_grid():
    with pytest.raises(ParameterError):
        sweep([], [2], trials=100, seed=1)


def test_concentration_violation_stays_below_exponential_tail():
    draws = 100_000
    for M, L, eps in [(4, 2, 0.2), (4, 2, 0.5), (16, 2, 0.2), (16, 2, 0.5), (8, 3, 0.3)]:
        frequency = concentration_violation_frequency(M, L, eps, draws, seed=8)
        halfwidth = 1.96 * np.sqrt(max(frequency * (1 - frequency), 1 / draws) / draws)

        assert frequency <= np.exp(-eps ** 2 * M / np.pi) + 3 * halfwidth


def test_delta1_statistics_events_are_uncorrelated():
    """Test that {|v'A| small} and {||h_L||_1 large} are empirically independent"""
    M, L, eps = 4, 3, 0.5
    draws = 100_000
    vA, norm_L = delta1_statistics(M, L, draws, seed=12)
    threshold = (1 - eps) * np.sqrt(2 / (np.pi * (L + 1))) * M

    small_numerator = (np.abs(vA) < threshold).astype(float)
    large_denominator = (norm_L > threshold).astype(float)
    correlation = np.corrcoef(small_numerator, large_denominator)[0, 1]

    assert abs(correlation) <= 3 / np.sqrt(draws)


def test_delta1_statistics_match_closed_form_moments():
    M, L = 8, 4
    vA, norm_L = delta1_statistics(M, L, 200_000, seed=6)

    assert np.var(vA) == pytest.approx(L * M / (L + 1), rel=2e-2)
    assert np.mean(norm_L) == pytest.approx(M * np.sqrt(2 / (np.pi * (L + 1))), rel=1e-2)


def test_csv_round_trip(tmp_path):
    points = [
        bound_l1_delta1(4, 2),
        BoundPoint(M=8, L=3, bound=None, eps_star=None, delta=2, mc_estimate=0.25,
                   mc_halfwidth=0.01, trials=100, seed=9),
    ]
    path = tmp_path / "curve.csv"

    assert write_csv(points, str(path)) == 2

    raw = path.read_bytes()
    assert b"\r\n" not in raw
    assert raw.decode("utf-8").splitlines()[0] == ",".join(CSV_FIELDS)

    rows = read_csv(str(path))
    assert rows[0].bound == points[0].bound
    assert rows[1].bound is None
    assert rows[1].seed == 9
    assert rows[1].delta == 2
