"""
Channel representation and the deterministic block-Toeplitz constructions

Block conventions: a channel of order L with M antennas is an (L+1, M) tap
array; stacked vectors list the taps top to bottom, M entries per block.
"""
import json
import logging
from typing import Tuple, Union

import numpy as np

from simoid.errors import DomainError, ParameterError
from simoid.models import ChannelVector, FilterKind, FilterMatrix, SignVector
from simoid.schemas import ChannelDocument

logger = logging.getLogger(__name__)

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


def gen_channel(M: int, L: int, seed: SeedLike = None) -> ChannelVector:
    """
    Draw a channel with i.i.d. N(0, 1/(L+1)) entries

    Args:
        M: Antenna count (>= 2)
        L: Channel order (>= 1)
        seed: Anything accepted by numpy.random.default_rng; a Generator is used as is

    Returns:
        ChannelVector with (L+1)*M Gaussian entries
    """
    if M < 2:
        raise ParameterError(f"antenna count M must be >= 2, got {M}")
    if L < 1:
        raise ParameterError(f"channel order L must be >= 1, got {L}")
    rng = np.random.default_rng(seed)
    taps = rng.normal(0.0, np.sqrt(1.0 / (L + 1)), size=(L + 1, M))
    return ChannelVector(taps)


def convolution_matrix(taps: np.ndarray, n: int) -> np.ndarray:
    """Dense T_n for an arbitrary (order+1, M) tap array"""
    if n < 0:
        raise ParameterError(f"stacking depth n must be >= 0, got {n}")
    taps = np.asarray(taps, dtype=float)
    order = taps.shape[0] - 1
    M = taps.shape[1]
    T = np.zeros((M * (n + 1), order + n + 1))
    # column c of block row r holds tap c - r
    for r in range(n + 1):
        T[r * M:(r + 1) * M, r:r + order + 1] = taps.T
    return T


def build_filter_matrix(h: ChannelVector, n: int) -> FilterMatrix:
    """Block-Toeplitz convolution operator T_n(h) of size M(n+1) x (L+n+1)"""
    return FilterMatrix(FilterKind.CONVOLUTION, convolution_matrix(h.taps, n))


def pad_channel(h: ChannelVector, Lp: int, shift: int = 0) -> np.ndarray:
    """h zero-padded to length M(Lp+1), shifted down by ``shift`` blocks"""
    if Lp < h.L:
        raise ParameterError(f"assumed order Lp={Lp} is below the channel order L={h.L}")
    if not 0 <= shift <= Lp - h.L:
        raise ParameterError(f"shift must lie in [0, {Lp - h.L}], got {shift}")
    out = np.zeros(h.M * (Lp + 1))
    out[shift * h.M:shift * h.M + h.vector.size] = h.vector
    return out


def build_shift_matrix(h: ChannelVector, Lp: int) -> FilterMatrix:
    """
    Matrix H whose Lp-L+1 columns are the shifted zero-paddings of h

    Raises:
        ParameterError: if Lp < L
    """
    if Lp < h.L:
        raise ParameterError(f"assumed order Lp={Lp} is below the channel order L={h.L}")
    H = np.column_stack([pad_channel(h, Lp, j) for j in range(Lp - h.L + 1)])
    return FilterMatrix(FilterKind.SHIFT, H)


def reduced_shift_matrix(h: ChannelVector, Lp: int) -> np.ndarray:
    """H-tilde: H without its first column and its (all-zero) first block row"""
    H = build_shift_matrix(h, Lp).entries
    return H[h.M:, 1:]


def fixed_offset(h: ChannelVector, Lp: int) -> np.ndarray:
    """[h_1; ...; h_L; 0; ...; 0] of length M*Lp, the constant part of the P_p objective"""
    if Lp < h.L:
        raise ParameterError(f"assumed order Lp={Lp} is below the channel order L={h.L}")
    return np.concatenate([h.h_tilde, np.zeros(h.M * (Lp - h.L))])


def check_delta(h: ChannelVector, Lp: int) -> int:
    """Validate 1 <= Lp - L <= L and return the over-modeling delta"""
    delta = Lp - h.L
    if delta < 1:
        raise ParameterError(f"over-modeling delta = Lp - L must be >= 1, got {delta}")
    if delta > h.L:
        raise ParameterError(f"over-modeling delta = {delta} exceeds the channel order L = {h.L}")
    return delta


def partition_AB(h: ChannelVector, Lp: int) -> Tuple[FilterMatrix, FilterMatrix]:
    """
    Split H-tilde into A (first ML rows) and B (last M*delta rows)

    Raises:
        ParameterError: unless 1 <= Lp - L <= L
    """
    check_delta(h, Lp)
    H_tilde = reduced_shift_matrix(h, Lp)
    split = h.M * h.L
    return (
        FilterMatrix(FilterKind.PART_A, H_tilde[:split]),
        FilterMatrix(FilterKind.PART_B, H_tilde[split:]),
    )


def sign_vector(h: ChannelVector, p: float = 1.0) -> SignVector:
    """
    Sign vector of h-tilde; for p < 1 the weighted form p*sign(x)*|x|^(p-1)

    Raises:
        ParameterError: p outside (0, 1]
        DomainError: p < 1 and h-tilde has a zero entry
    """
    if not 0 < p <= 1:
        raise ParameterError(f"exponent p must lie in (0, 1], got {p}")
    h_tilde = h.h_tilde
    if p == 1:
        return SignVector(np.sign(h_tilde), 1.0)
    if np.any(h_tilde == 0):
        raise DomainError(f"weighted sign vector for p={p} is undefined at zero channel entries")
    return SignVector(p * np.sign(h_tilde) * np.abs(h_tilde) ** (p - 1), p)


def check_diversity(h: ChannelVector, tol: float = 1e-10) -> bool:
    """True iff T_L(h) has full column rank relative to tol (subchannels share no zero)"""
    s = np.linalg.svd(convolution_matrix(h.taps, h.L), compute_uv=False)
    return bool(s[-1] > tol * s[0])


def channel_from_document(document: Union[dict, ChannelDocument]) -> ChannelVector:
    if isinstance(document, dict):
        document = ChannelDocument.model_validate(document)
    return ChannelVector(np.array(document.taps, dtype=float))


def channel_to_document(h: ChannelVector) -> ChannelDocument:
    return ChannelDocument(M=h.M, L=h.L, taps=h.taps.tolist())


def load_channel(path: str) -> ChannelVector:
    with open(path, "r", encoding="utf-8") as handle:
        document = json.load(handle)
    logger.debug(f"Loaded channel document from {path}")
    return channel_from_document(document)


def save_channel(h: ChannelVector, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(channel_to_document(h).model_dump_json())
        handle.write("\n")
