from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from simoid.errors import ParameterError


def _frozen(array, dtype=float) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


class FilterKind(str, Enum):
    CONVOLUTION = "convolution"
    SHIFT = "shift"
    PART_A = "partA"
    PART_B = "partB"


class LPStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class Verdict(str, Enum):
    IDENTIFIABLE = "identifiable"
    BOUNDARY = "boundary"
    NOT_IDENTIFIABLE = "not_identifiable"


class Method(str, Enum):
    LP_DUAL = "lp_dual"
    CLOSED_FORM = "closed_form"
    SAMPLING = "sampling"


@dataclass(frozen=True)
class ChannelVector:
    """SIMO impulse response h = [h_0; ...; h_L], stored as an (L+1, M) tap array"""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        if taps.ndim != 2:
            raise ParameterError(f"taps must be a 2-D (L+1, M) array, got shape {taps.shape}")
        if taps.shape[1] < 2:
            raise ParameterError(f"antenna count M must be >= 2, got {taps.shape[1]}")
        if taps.shape[0] < 2:
            raise ParameterError(f"channel order L must be >= 1, got {taps.shape[0] - 1}")
        if not np.all(np.isfinite(taps)):
            raise ParameterError("taps must be finite")
        if not np.any(taps):
            raise ParameterError("channel vector must not be all zero")
        object.__setattr__(self, "taps", _frozen(taps))

    @property
    def M(self) -> int:
        return self.taps.shape[1]

    @property
    def L(self) -> int:
        return self.taps.shape[0] - 1

    @property
    def vector(self) -> np.ndarray:
        """Stacked h of length (L+1)M"""
        return self.taps.reshape(-1)

    @property
    def h_tilde(self) -> np.ndarray:
        """[h_1; ...; h_L], length ML"""
        return self.taps[1:].reshape(-1)

    def scaled(self, c: float) -> "ChannelVector":
        return ChannelVector(self.taps * c)


@dataclass(frozen=True)
class FilterMatrix:
    kind: FilterKind
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class SignVector:
    entries: np.ndarray
    p: float

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))


@dataclass(frozen=True)
class Covariance:
    R: np.ndarray
    n: int
    sigma2: float
    source: str = "exact"  # "exact" or "sampled"
    num_samples: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "R", _frozen(self.R))


@dataclass(frozen=True)
class NoiseProjector:
    Pi: np.ndarray
    signal_dim: int
    eigengap: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "Pi", _frozen(self.Pi))


@dataclass(frozen=True)
class KernelBasis:
    K: np.ndarray
    eigenvalues: np.ndarray = field(default_factory=lambda: np.empty(0))
    # ratio of the largest kernel eigenvalue to the first excluded one
    gap_ratio: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "K", _frozen(self.K))
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))

    @property
    def k(self) -> int:
        return self.K.shape[1]


@dataclass(frozen=True)
class ChebyshevSolution:
    d: np.ndarray
    value: float
    status: LPStatus
    iterations: int = 0


@dataclass(frozen=True)
class L1RegressionSolution:
    g: np.ndarray
    objective: float
    status: LPStatus
    iterations: int = 0


@dataclass(frozen=True)
class IdentifiabilityReport:
    margin: float
    verdict: Verdict
    dual_certificate: Optional[np.ndarray]
    p: float
    delta: int
    method: Method
    near_hypothesis_boundary: bool = False


@dataclass(frozen=True)
class RecoveryResult:
    f_hat: np.ndarray
    g_star: np.ndarray
    objective: float
    correlation: Optional[float]
    iterations: int
    p: float = 1.0


@dataclass(frozen=True)
class BoundPoint:
    M: int
    L: int
    bound: Optional[float]
    eps_star: Optional[float]
    p: float = 1.0
    delta: int = 1
    mc_estimate: Optional[float] = None
    mc_halfwidth: Optional[float] = None
    trials: Optional[int] = None
    seed: Optional[int] = None
