from pydantic import BaseModel, Field, ConfigDict, field_validator, model_validator
from typing import Optional, List

import numpy as np

from simoid.models import Verdict, Method


class ChannelDocument(BaseModel):
    """JSON form of a channel: taps[l][m] is entry m of h_l"""
    M: int = Field(..., ge=2, description="Antenna count")
    L: int = Field(..., ge=1, description="Channel order")
    taps: List[List[float]] = Field(..., description="L+1 taps of M gains each")

    @model_validator(mode="after")
    def check_shape(self):
        if len(self.taps) != self.L + 1:
            raise ValueError(f"taps has {len(self.taps)} rows, expected L+1 = {self.L + 1}")
        for l, tap in enumerate(self.taps):
            if len(tap) != self.M:
                raise ValueError(f"taps[{l}] has {len(tap)} entries, expected M = {self.M}")
        return self


class IdentifiabilityReportDocument(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    margin: float
    verdict: Verdict
    p: float = Field(..., gt=0, le=1)
    delta: int = Field(..., ge=1)
    method: Method
    dual_certificate: Optional[List[float]] = None
    near_hypothesis_boundary: bool = False

    @field_validator("dual_certificate", mode="before")
    @classmethod
    def array_to_list(cls, value):
        return value.tolist() if isinstance(value, np.ndarray) else value


class RecoveryResultDocument(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    f_hat: List[float]
    g_star: List[float]
    objective: float
    correlation: Optional[float] = Field(None, ge=0, le=1)
    iterations: int = Field(..., ge=0)
    p: float = Field(..., gt=0, le=1)
    verdict: Optional[Verdict] = Field(None, description="Condition verdict for the same channel")

    @field_validator("f_hat", "g_star", mode="before")
    @classmethod
    def array_to_list(cls, value):
        return value.tolist() if isinstance(value, np.ndarray) else value


CSV_FIELDS = ["M", "L", "p", "delta", "bound", "eps_star",
              "mc_estimate", "mc_halfwidth", "trials", "seed"]


class BoundRow(BaseModel):
    """One CSV row of a bound / Monte Carlo curve"""
    M: int = Field(..., ge=2)
    L: int = Field(..., ge=1)
    p: float = Field(1.0, gt=0, le=1)
    delta: int = Field(1, ge=1)
    bound: Optional[float] = Field(None, ge=0, le=1)
    eps_star: Optional[float] = Field(None, ge=0, le=1)
    mc_estimate: Optional[float] = Field(None, ge=0, le=1)
    mc_halfwidth: Optional[float] = Field(None, ge=0)
    trials: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = None


class ExperimentConfig(BaseModel):
    """Parameters shared by every subcommand; each may come from a config file or a flag"""
    model_config = ConfigDict(extra="forbid")

    M: Optional[int] = Field(None, ge=2, description="Antenna count")
    L: Optional[int] = Field(None, ge=1, description="Channel order")
    Lp: Optional[int] = Field(None, ge=1, description="Assumed (over-modeled) order L'")
    p: float = Field(1.0, gt=0, le=1, description="Sparsity exponent")
    sigma2: float = Field(0.0, ge=0, description="Noise variance for the pipeline")
    n: Optional[int] = Field(None, ge=0, description="Stacking depth")
    samples: Optional[int] = Field(None, ge=1, description="Sample count; absent means exact covariance")
    trials: int = Field(10000, ge=100, description="Monte Carlo trials per grid point")
    seed: Optional[int] = Field(None, ge=0)
    delta: int = Field(1, ge=1, description="Over-modeling L'-L for Monte Carlo")
    M_list: Optional[List[int]] = None
    L_list: Optional[List[int]] = None
    workers: Optional[int] = Field(None, ge=1)
    out: Optional[str] = None

    @field_validator("M_list", "L_list", mode="before")
    @classmethod
    def split_list(cls, value):
        if isinstance(value, str):
            value = [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("M_list")
    @classmethod
    def check_M_list(cls, value):
        if value is not None:
            if not value:
                raise ValueError("M_list must not be empty")
            if min(value) < 2:
                raise ValueError("every M in M_list must be >= 2")
        return value

    @field_validator("L_list")
    @classmethod
    def check_L_list(cls, value):
        if value is not None:
            if not value:
                raise ValueError("L_list must not be empty")
            if min(value) < 1:
                raise ValueError("every L in L_list must be >= 1")
        return value
