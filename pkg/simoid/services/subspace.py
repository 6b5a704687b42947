"""
Second-order-statistics front end of the blind subspace method

covariance -> noise projector -> quadratic form Q -> kernel of Q,
whose span must coincide with the range of the shift matrix H.
"""
import logging
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import linalg

from simoid.errors import DegenerateSplitError, OvermodelAmbiguityError, ParameterError
from simoid.models import ChannelVector, Covariance, FilterMatrix, KernelBasis, NoiseProjector
from simoid.services.channel_model import SeedLike, convolution_matrix

logger = logging.getLogger(__name__)

SPLIT_GAP_TOL = 1e-12
KERNEL_TOL = 1e-8


def exact_covariance(h: ChannelVector, n: int, sigma2: float = 0.0) -> Covariance:
    """R = T_n(h) T_n(h)' + sigma2 I"""
    if n < h.L:
        raise ParameterError(f"stacking depth n={n} must be >= channel order L={h.L}")
    if sigma2 < 0:
        raise ParameterError(f"noise variance must be >= 0, got {sigma2}")
    T = convolution_matrix(h.taps, n)
    R = T @ T.T + sigma2 * np.eye(T.shape[0])
    return Covariance(0.5 * (R + R.T), n, float(sigma2), "exact")


def sample_covariance(
    h: ChannelVector,
    n: int,
    sigma2: float,
    num_samples: int,
    seed: SeedLike = None
) -> Covariance:
    """
    Empirical covariance of num_samples stacked observation windows

    Symbols are uniform +-1, noise is white Gaussian with variance sigma2.
    """
    if n < h.L:
        raise ParameterError(f"stacking depth n={n} must be >= channel order L={h.L}")
    if sigma2 < 0:
        raise ParameterError(f"noise variance must be >= 0, got {sigma2}")
    if num_samples < 1:
        raise ParameterError(f"num_samples must be >= 1, got {num_samples}")

    rng = np.random.default_rng(seed)
    M, L = h.M, h.L
    symbols = 2.0 * rng.integers(0, 2, size=num_samples + L + n) - 1.0
    # window k holds [s_k, s_{k-1}, ..., s_{k-L-n}]
    S = sliding_window_view(symbols, L + n + 1)[:, ::-1]
    Y = S @ convolution_matrix(h.taps, n).T

    if sigma2 > 0:
        noise = rng.normal(0.0, np.sqrt(sigma2), size=(num_samples + n, M))
        # window k holds [v_k; v_{k-1}; ...; v_{k-n}]
        V = sliding_window_view(noise, n + 1, axis=0)[:, :, ::-1]
        Y = Y + V.transpose(0, 2, 1).reshape(num_samples, M * (n + 1))

    R = Y.T @ Y / num_samples
    logger.debug(f"Sample covariance from {num_samples} windows, size {R.shape[0]}")
    return Covariance(0.5 * (R + R.T), n, float(sigma2), "sampled", num_samples)


def noise_projector(cov: Covariance, signal_dim: int) -> NoiseProjector:
    """
    Projector onto the eigenvectors of R for its dim - signal_dim smallest eigenvalues

    Raises:
        DegenerateSplitError: no eigenvalue gap at the signal/noise split
    """
    R = np.asarray(cov.R)
    dim = R.shape[0]
    if not 0 <= signal_dim < dim:
        raise ParameterError(f"signal dimension must lie in [0, {dim}), got {signal_dim}")
    w, V = linalg.eigh(R)
    noise_count = dim - signal_dim
    gap = float("inf")
    if signal_dim > 0:
        gap = w[noise_count] - w[noise_count - 1]
        if gap < SPLIT_GAP_TOL * max(1.0, abs(w[-1])):
            raise DegenerateSplitError(
                f"eigenvalue gap {gap:.3e} at the signal/noise split (signal_dim={signal_dim}) is too small"
            )
    N = V[:, :noise_count]
    Pi = N @ N.T
    return NoiseProjector(0.5 * (Pi + Pi.T), signal_dim, gap)


def build_quadratic_form(proj: NoiseProjector, Lp: int, M: int) -> np.ndarray:
    """
    Q with f'Qf = ||Pi T_n(f)||_F^2 for filters f of order Lp

    Column j of T_n(f) carries f_l in block row j - l, so Q accumulates the
    Pi sub-blocks of every valid placement, lifted onto the filter blocks.
    """
    Pi = np.asarray(proj.Pi)
    dim = Pi.shape[0]
    if M < 1 or dim % M:
        raise ParameterError(f"projector size {dim} is not a multiple of M={M}")
    n = dim // M - 1
    if n < Lp:
        raise ParameterError(f"stacking depth n={n} must be >= assumed order Lp={Lp}")

    size = M * (Lp + 1)
    Q = np.zeros((size, size))
    offsets = np.arange(M)
    for j in range(Lp + n + 1):
        taps = np.arange(max(0, j - n), min(Lp, j) + 1)
        f_idx = (taps[:, None] * M + offsets).ravel()
        r_idx = ((j - taps)[:, None] * M + offsets).ravel()
        Q[np.ix_(f_idx, f_idx)] += Pi[np.ix_(r_idx, r_idx)]
    return 0.5 * (Q + Q.T)


def kernel_basis(
    Q: np.ndarray,
    expected_dim: int,
    exact: bool = True,
    tol: float = KERNEL_TOL
) -> KernelBasis:
    """
    Orthonormal eigenvectors of Q for its expected_dim smallest eigenvalues

    Args:
        Q: Symmetric PSD matrix
        expected_dim: Kernel dimension implied by the assumed order
        exact: Also require the kept eigenvalues to vanish (noiseless covariances)
        tol: Relative eigenvalue threshold against ||Q||

    Raises:
        OvermodelAmbiguityError: kernel larger than expected, or (exact mode) smaller
    """
    Q = np.asarray(Q, dtype=float)
    dim = Q.shape[0]
    if not 1 <= expected_dim <= dim:
        raise ParameterError(f"expected kernel dimension must lie in [1, {dim}], got {expected_dim}")
    w, V = linalg.eigh(0.5 * (Q + Q.T))
    scale = max(abs(w[0]), abs(w[-1]))
    threshold = tol * scale

    if expected_dim < dim and w[expected_dim] <= threshold:
        raise OvermodelAmbiguityError(
            f"kernel is larger than {expected_dim}: eigenvalue {expected_dim + 1} is {w[expected_dim]:.3e}"
        )
    if exact and w[expected_dim - 1] > threshold:
        raise OvermodelAmbiguityError(
            f"kernel is smaller than {expected_dim}: eigenvalue {expected_dim} is {w[expected_dim - 1]:.3e}"
        )

    gap_ratio = 0.0
    if expected_dim < dim and w[expected_dim] > 0:
        gap_ratio = float(abs(w[expected_dim - 1]) / w[expected_dim])
    logger.debug(f"Kernel of dimension {expected_dim}, eigen-gap ratio {gap_ratio:.3e}")
    return KernelBasis(V[:, :expected_dim], w[:expected_dim], gap_ratio)


def subspace_distance(K: KernelBasis, H: FilterMatrix) -> float:
    """Largest principal angle (radians) between span(K) and range(H)"""
    basis = np.asarray(K.K)
    other = np.asarray(H.entries)
    if basis.shape[0] != other.shape[0]:
        raise ParameterError(f"row mismatch: kernel has {basis.shape[0]} rows, H has {other.shape[0]}")
    return float(np.max(linalg.subspace_angles(basis, other)))


def estimate_kernel(
    h: ChannelVector,
    Lp: int,
    n: int,
    sigma2: float = 0.0,
    num_samples: Optional[int] = None,
    seed: SeedLike = None
) -> KernelBasis:
    """
    Full front end: covariance, projector, Q and its kernel

    Uses the exact covariance when num_samples is None, otherwise a sampled one.
    """
    if Lp < h.L:
        raise ParameterError(f"assumed order Lp={Lp} is below the channel order L={h.L}")
    if num_samples is None:
        cov = exact_covariance(h, n, sigma2)
    else:
        cov = sample_covariance(h, n, sigma2, num_samples, seed)
    proj = noise_projector(cov, h.L + n + 1)
    Q = build_quadratic_form(proj, Lp, h.M)
    logger.info(f"Subspace front end: M={h.M}, L={h.L}, Lp={Lp}, n={n}, source={cov.source}")
    return kernel_basis(Q, Lp - h.L + 1, exact=num_samples is None)
