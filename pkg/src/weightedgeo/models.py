"""Model-space comparison functions sn_K and m_K.

sn_K solves sn'' + K sn = 0 with sn(0) = 0, sn'(0) = 1.  m_K is the model
mean-curvature quantity (n-1) sn'_K / sn_K; it solves the Riccati equation
m' = -m^2/(n-1) - (n-1) K and blows up like (n-1)/s at s = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["ModelParams", "sn_k", "snprime_k", "m_k", "sn_k_positive_limit"]


@dataclass(frozen=True)
class ModelParams:
    n: int
    K: float

    def __post_init__(self):
        if self.n < 1 or self.n != int(self.n):
            raise ValueError(f"dimension must be a positive integer, got {self.n}")


def sn_k(K: float, s: float) -> float:
    if K > 0:
        rt = math.sqrt(K)
        return math.sin(rt * s) / rt
    if K < 0:
        rt = math.sqrt(-K)
        return math.sinh(rt * s) / rt
    return s


def snprime_k(K: float, s: float) -> float:
    if K > 0:
        return math.cos(math.sqrt(K) * s)
    if K < 0:
        return math.cosh(math.sqrt(-K) * s)
    return 1.0


def sn_k_positive_limit(K: float) -> float:
    """First positive zero of sn_K (pi/sqrt(K) for K>0, else +inf)."""
    return math.pi / math.sqrt(K) if K > 0 else math.inf


def m_k(params: ModelParams, s: float, series_cutoff: float = 1e-4) -> float:
    """(n-1) sn'_K(s)/sn_K(s); Laurent expansion below `series_cutoff`."""
    n, K = params.n, params.K
    if s <= 0:
        raise ValueError(f"m_K requires s > 0, got {s}")
    if K > 0 and s >= sn_k_positive_limit(K):
        raise ValueError(f"m_K undefined at s >= pi/sqrt(K) = {sn_k_positive_limit(K)!r}")
    if s < series_cutoff:
        # sqrt(K) cot(sqrt(K) s) = 1/s - K s/3 - K^2 s^3/45 - ..., valid for all signs of K
        return (n - 1) * (1.0 / s - K * s / 3.0 - K * K * s ** 3 / 45.0)
    return (n - 1) * snprime_k(K, s) / sn_k(K, s)
