"""Outage of the waterfilling CSIT system and its closed-form upper bounds.

Outage happens when even the strongest eigenmode falls below the
waterfilling cutoff, so no mode is given power: ``P_out = F_max(lambda0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .capacity import ChannelConfig, solve_cutoff
from .errors import DomainError
from .spectrum import AntennaPair, lambda_max_cdf
from .special import gamma_lower_regularized

__all__ = [
    "OutageResult",
    "outage_actual",
    "outage_bound_p1",
    "outage_bound_p2",
    "bound_p1",
    "bound_p2",
    "outage_analysis",
]


@dataclass(frozen=True)
class OutageResult:
    snr_db: float
    lambda0: float
    p_actual: float
    p_bound1: float
    p_bound2: float | None  # only defined for square channels


def bound_p1(pair: AntennaPair, lambda0: float) -> float:
    """``[Gamma(n+m-1) - Gamma(n+m-1, l0)] / (Gamma(n) Gamma(m))``, unclamped.

    Evaluated as ``Gamma(s)/(Gamma(n)Gamma(m)) * P(s, l0)`` to avoid the
    cancellation of the difference at small ``l0``.  The value may exceed 1.
    """
    if lambda0 < 0:
        raise DomainError("lambda0 must be nonnegative")
    m, n = pair.m, pair.n
    s = n + m - 1
    scale = math.exp(math.lgamma(s) - math.lgamma(n) - math.lgamma(m))
    return scale * gamma_lower_regularized(s, lambda0)


def bound_p2(pair: AntennaPair, lambda0: float) -> float:
    """``min(p1, 1 - exp(-m l0))``; square channels only."""
    if pair.m != pair.n:
        raise DomainError(f"the min-bound needs m == n, got m={pair.m}, n={pair.n}")
    if lambda0 < 0:
        raise DomainError("lambda0 must be nonnegative")
    return min(bound_p1(pair, lambda0), -math.expm1(-pair.m * lambda0))


def outage_actual(cfg: ChannelConfig) -> float:
    return lambda_max_cdf(cfg.pair, solve_cutoff(cfg).lambda0)


def outage_bound_p1(cfg: ChannelConfig) -> float:
    return bound_p1(cfg.pair, solve_cutoff(cfg).lambda0)


def outage_bound_p2(cfg: ChannelConfig) -> float:
    return bound_p2(cfg.pair, solve_cutoff(cfg).lambda0)


def outage_analysis(cfg: ChannelConfig) -> OutageResult:
    """Actual outage and both bounds at one operating point."""
    lam0 = solve_cutoff(cfg).lambda0
    square = cfg.pair.m == cfg.pair.n
    return OutageResult(
        snr_db=cfg.snr_db,
        lambda0=lam0,
        p_actual=lambda_max_cdf(cfg.pair, lam0),
        p_bound1=bound_p1(cfg.pair, lam0),
        p_bound2=bound_p2(cfg.pair, lam0) if square else None,
    )
