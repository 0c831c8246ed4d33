"""Shared process parameters."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError


@dataclass(frozen=True)
class ProcessParams:
    """Rates of the spread processes.

    lam    -- infection rate per fully-infected neighbor
    gamma  -- maturation rate semi-infected -> fully-infected
    delta  -- excess recovery rate of semi-infected sites (their total
              recovery rate is 1 + delta; fully-infected sites recover at
              rate 1)
    """

    lam: float
    gamma: float
    delta: float

    def __post_init__(self):
        for name, value in (("lam", self.lam), ("gamma", self.gamma), ("delta", self.delta)):
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ParameterError(f"{name} must be a finite number, got {value!r}")
            if value <= 0:
                raise ParameterError(f"{name} must be positive, got {value}")
