import numpy as np
import pytest
from scipy import linalg

from simoid.errors import DegenerateSplitError, OvermodelAmbiguityError, ParameterError
from simoid.models import Covariance, FilterKind, FilterMatrix, KernelBasis
from simoid.services.channel_model import build_filter_matrix, build_shift_matrix, gen_channel, pad_channel
from simoid.services.subspace import (
    build_quadratic_form,
    estimate_kernel,
    exact_covariance,
    kernel_basis,
    noise_projector,
    sample_covariance,
    subspace_distance,
)


def filter_block_toeplitz(f: np.ndarray, M: int, n: int) -> np.ndarray:
    """T_n of an arbitrary stacked filter f, built independently of the services"""
    taps = f.reshape(-1, M)
    order = taps.shape[0] - 1
    T = np.zeros((M * (n + 1), order + n + 1))
    for r in range(n + 1):
        for l in range(order + 1):
            T[r * M:(r + 1) * M, r + l] = taps[l]
    return T


def test_exact_covariance_rank(rng):
    h = gen_channel(3, 2, rng)
    cov = exact_covariance(h, 4)

    assert cov.R.shape == (15, 15)
    assert np.linalg.matrix_rank(cov.R) == 2 + 4 + 1
    assert cov.source == "exact"


def test_exact_covariance_noise_shifts_eigenvalues(rng):
    h = gen_channel(3, 2, rng)
    clean = np.linalg.eigvalsh(exact_covariance(h, 3).R)
    noisy = np.linalg.eigvalsh(exact_covariance(h, 3, sigma2=0.25).R)

    assert np.allclose(noisy, clean + 0.25, atol=1e-12)


def test_exact_covariance_rejects_short_stacking(rng):
    h = gen_channel(3, 2, rng)
    with pytest.raises(ParameterError):
        exact_covariance(h, 1)
    with pytest.raises(ParameterError):
        exact_covariance(h, 3, sigma2=-1.0)


def test_sample_covariance_is_deterministic_and_psd(rng):
    h = gen_channel(3, 2, rng)
    first = sample_covariance(h, 3, 0.1, 500, seed=5)
    second = sample_covariance(h, 3, 0.1, 500, seed=5)

    assert np.array_equal(first.R, second.R)
    assert np.allclose(first.R, first.R.T)
    assert np.linalg.eigvalsh(first.R).min() >= -1e-10
    assert first.source == "sampled"
    assert first.num_samples == 500


def test_sample_covariance_single_window_has_rank_one(rng):
    h = gen_channel(3, 2, rng)
    cov = sample_covariance(h, 2, 0.0, 1, seed=1)

    assert np.linalg.matrix_rank(cov.R) <= 1


def test_sample_covariance_error_shrinks_like_inverse_square_root():
    """Test that quadrupling the sample count roughly halves the Frobenius error"""
    h = gen_channel(2, 1, seed=3)
    R = exact_covariance(h, 2, sigma2=0.1).R

    def mean_error(samples):
        return np.mean([
            np.linalg.norm(sample_covariance(h, 2, 0.1, samples, seed=s).R - R)
            for s in range(20)
        ])

    ratio = mean_error(1000) / mean_error(4000)
    assert 1.4 <= ratio <= 2.8


def test_noise_projector_properties(rng):
    h = gen_channel(3, 2, rng)
    n = 3
    proj = noise_projector(exact_covariance(h, n), h.L + n + 1)
    Pi = proj.Pi
    T = build_filter_matrix(h, n).entries

    assert np.allclose(Pi @ Pi, Pi, atol=1e-10)
    assert np.allclose(Pi, Pi.T)
    assert np.trace(Pi) == pytest.approx(3 * (n + 1) - (h.L + n + 1), abs=1e-9)
    assert np.abs(Pi @ T).max() <= 1e-10


def test_noise_projector_without_signal_is_identity():
    cov = Covariance(np.eye(4), n=1, sigma2=1.0)
    proj = noise_projector(cov, 0)

    assert np.allclose(proj.Pi, np.eye(4))


def test_noise_projector_ignores_white_noise_level(rng):
    """Test that white noise lifts every eigenvalue equally and leaves the projector unchanged"""
    h = gen_channel(3, 2, rng)
    clean = noise_projector(exact_covariance(h, 3), 6).Pi
    noisy = noise_projector(exact_covariance(h, 3, sigma2=0.5), 6).Pi

    assert np.allclose(clean, noisy, atol=1e-9)


def test_noise_projector_rejects_flat_spectrum():
    cov = Covariance(np.eye(4), n=1, sigma2=1.0)
    with pytest.raises(DegenerateSplitError):
        noise_projector(cov, 2)


def test_quadratic_form_matches_projected_filter_matrix(rng):
    """Test f'Qf = ||Pi T_n(f)||_F^2 on random filters"""
    h = gen_channel(3, 2, rng)
    Lp, n = 3, 4
    proj = noise_projector(exact_covariance(h, n), h.L + n + 1)
    Q = build_quadratic_form(proj, Lp, h.M)

    for _ in range(100):
        f = rng.normal(size=h.M * (Lp + 1))
        direct = np.linalg.norm(proj.Pi @ filter_block_toeplitz(f, h.M, n)) ** 2
        assert f @ Q @ f == pytest.approx(direct, rel=1e-9, abs=1e-12)


def test_quadratic_form_vanishes_on_the_channel(rng):
    h = gen_channel(3, 2, rng)
    Lp, n = 4, 5
    proj = noise_projector(exact_covariance(h, n), h.L + n + 1)
    Q = build_quadratic_form(proj, Lp, h.M)

    for shift in range(Lp - h.L + 1):
        f = pad_channel(h, Lp, shift)
        assert f @ Q @ f <= 1e-12


def test_quadratic_form_is_positive_off_the_shift_span(rng):
    h = gen_channel(3, 2, rng)
    Lp, n = 4, 5
    proj = noise_projector(exact_covariance(h, n), h.L + n + 1)
    Q = build_quadratic_form(proj, Lp, h.M)
    H = build_shift_matrix(h, Lp).entries
    complement = linalg.null_space(H.T)

    assert np.linalg.eigvalsh(Q).min() >= -1e-10
    for _ in range(20):
        f = complement @ rng.normal(size=complement.shape[1])
        assert f @ Q @ f > 1e-8 * (f @ f)


def test_quadratic_form_needs_deep_stacking(rng):
    h = gen_channel(3, 2, rng)
    proj = noise_projector(exact_covariance(h, 2), h.L + 2 + 1)
    with pytest.raises(ParameterError):
        build_quadratic_form(proj, 3, h.M)


def test_kernel_matches_shift_span():
    """Test that the exact front end recovers range(H) on diverse channels"""
    M, L, Lp, n = 3, 2, 4, 6
    for seed in range(50):
        h = gen_channel(M, L, seed)
        K = estimate_kernel(h, Lp, n)

        assert K.k == Lp - L + 1
        assert subspace_distance(K, build_shift_matrix(h, Lp)) <= 1e-8


def test_kernel_without_overmodeling_is_the_channel(rng):
    h = gen_channel(4, 3, rng)
    K = estimate_kernel(h, 3, 3)

    assert K.k == 1
    assert abs(K.K[:, 0] @ h.vector) / np.linalg.norm(h.vector) >= 1 - 1e-8


def test_sampled_noiseless_front_end_is_exact(rng):
    """Test that without noise a sampled covariance already spans range(T_n(h))"""
    h = gen_channel(3, 2, rng)
    K = estimate_kernel(h, 3, 3, sigma2=0.0, num_samples=2000, seed=9)

    assert subspace_distance(K, build_shift_matrix(h, 3)) <= 1e-6


def test_sampled_noisy_front_end_is_close(rng):
    h = gen_channel(4, 2, rng)
    K = estimate_kernel(h, 3, 3, sigma2=0.01, num_samples=20000, seed=9)

    assert K.k == 2
    assert subspace_distance(K, build_shift_matrix(h, 3)) <= 0.5


def test_kernel_basis_rejects_identity():
    """Test that a kernel-free Q is reported instead of returning a meaningless basis"""
    with pytest.raises(OvermodelAmbiguityError):
        kernel_basis(np.eye(4), 1)


def test_kernel_basis_rejects_larger_kernel():
    with pytest.raises(OvermodelAmbiguityError):
        kernel_basis(np.diag([0.0, 0.0, 1.0]), 1)


def test_kernel_basis_inexact_mode_keeps_smallest_directions():
    K = kernel_basis(np.diag([3.0, 1e-3, 2.0]), 1, exact=False)

    assert K.k == 1
    assert abs(K.K[1, 0]) == pytest.approx(1.0)
    assert K.gap_ratio == pytest.approx(1e-3 / 2.0)


def test_subspace_distance_extremes(rng):
    basis = np.linalg.qr(rng.normal(size=(5, 2)))[0]
    mixed = basis @ rng.normal(size=(2, 2))
    e = np.eye(5)

    assert subspace_distance(KernelBasis(basis), FilterMatrix(FilterKind.SHIFT, mixed)) <= 1e-12
    assert subspace_distance(KernelBasis(e[:, :1]), FilterMatrix(FilterKind.SHIFT, e[:, 1:2])) == pytest.approx(np.pi / 2)


def test_subspace_distance_rejects_row_mismatch():
    with pytest.raises(ParameterError):
        subspace_distance(KernelBasis(np.eye(4)[:, :1]), FilterMatrix(FilterKind.SHIFT, np.eye(3)[:, :1]))
