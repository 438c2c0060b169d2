"""Ergodic rates of the coherent IID Rayleigh MIMO channel.

Conventions: noise power ``N0 = 1``; ``snr_db`` is ``P / m`` in dB, so the
total transmit power is ``P = m * 10**(snr_db / 10)``.  Integrals are taken
in nats and reported in bits/s/Hz.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError
from .numerics import QuadSpec, RootSpec, find_root, integrate_semi_infinite
from .spectrum import AntennaPair, EigenDensity, lambda_max_pdf, lambda_max_sf

__all__ = [
    "Scheme",
    "Method",
    "ChannelConfig",
    "WaterfillSolution",
    "RatePoint",
    "SweepError",
    "solve_cutoff",
    "capacity_csit",
    "capacity_no_csit",
    "capacity_high_snr_approx",
    "onoff_rate",
    "onoff_power",
    "sweep",
    "rounded_db_power",
]

LN2 = math.log(2.0)
_CUTOFF_LO = 1e-12


class Scheme(str, enum.Enum):
    CSIT_WATERFILL = "csit_waterfill"
    NO_CSIT = "no_csit"
    ONOFF = "onoff"
    HIGH_SNR_APPROX = "high_snr_approx"


class Method(str, enum.Enum):
    NUMERICAL = "numerical"
    MONTECARLO = "montecarlo"


@dataclass(frozen=True)
class ChannelConfig:
    """Antenna pair plus average transmit power.

    Build with :meth:`from_snr_db` or :meth:`from_power`; both keep ``power``
    and ``snr_db`` consistent.  ``power = 0`` is accepted and yields zero rates.
    """

    pair: AntennaPair
    power: float
    snr_db: float

    def __post_init__(self):
        if not (self.power >= 0 and math.isfinite(self.power)):
            raise DomainError(f"power must be finite and nonnegative, got {self.power!r}")
        expected = self.pair.m * 10.0 ** (self.snr_db / 10.0)
        if not math.isclose(expected, self.power, rel_tol=1e-12, abs_tol=0.0):
            raise DomainError(f"power {self.power!r} inconsistent with snr_db {self.snr_db!r}")

    @classmethod
    def from_snr_db(cls, n_r: int, n_t: int, snr_db: float) -> "ChannelConfig":
        pair = AntennaPair(n_r, n_t)
        return cls(pair, pair.m * 10.0 ** (snr_db / 10.0), float(snr_db))

    @classmethod
    def from_power(cls, n_r: int, n_t: int, power: float) -> "ChannelConfig":
        pair = AntennaPair(n_r, n_t)
        snr_db = 10.0 * math.log10(power / pair.m) if power > 0 else -math.inf
        return cls(pair, float(power), snr_db)

    @property
    def m(self) -> int:
        return self.pair.m

    @property
    def n(self) -> int:
        return self.pair.n

    @property
    def power_per_mode(self) -> float:
        return self.power / self.pair.m


def rounded_db_power(n_r: int, n_t: int, snr_db: float) -> ChannelConfig:
    """Config whose power is ``snr_db + round(10 log10 m)`` dB.

    This is the rounded convention behind the published on-off numerical
    tables (``m = 4`` taken as 6 dB instead of 6.0206 dB).
    """
    m = min(n_r, n_t)
    return ChannelConfig.from_power(n_r, n_t, 10.0 ** ((snr_db + round(10.0 * math.log10(m))) / 10.0))


@dataclass(frozen=True)
class WaterfillSolution:
    lambda0: float
    gamma0: float
    residual: float


@dataclass(frozen=True)
class RatePoint:
    snr_db: float
    value: float
    scheme: Scheme
    method: Method
    std_error: float | None = None


@dataclass(frozen=True)
class SweepError:
    """Placeholder for a sweep entry whose evaluation raised."""

    snr_db: float
    scheme: Scheme
    method: Method
    message: str


@lru_cache(maxsize=64)
def _density(m: int, n: int) -> EigenDensity:
    return EigenDensity(AntennaPair(m, n))


def _eig_integral(pair: AntennaPair, integrand, lower: float, rel_tol: float = 1e-11,
                  abs_tol: float = 1e-300) -> float:
    dens = _density(pair.m, pair.n)
    spec = QuadSpec(abs_tol=abs_tol, rel_tol=rel_tol, max_subdivisions=4000)
    cutoff = pair.tail_cutoff(lower)
    return integrate_semi_infinite(lambda x: integrand(x) * dens.pdf(x), lower, spec, cutoff=cutoff)


def _cutoff_lhs(pair: AntennaPair, lam0: float) -> float:
    # int_{lam0}^inf (1/lam0 - 1/lam) f(lam) dlam
    return _eig_integral(pair, lambda x: 1.0 / lam0 - 1.0 / x, lam0)


@lru_cache(maxsize=4096)
def _solve_cutoff_cached(m: int, n: int, target: float, upper_hint: float | None) -> WaterfillSolution:
    pair = AntennaPair(m, n)
    g = lambda lam0: _cutoff_lhs(pair, lam0) - target  # noqa: E731
    hi = None
    if upper_hint is not None and upper_hint > _CUTOFF_LO and g(upper_hint) < 0:
        hi = upper_hint
    if hi is None:
        # LHS falls strictly from +inf to 0 in lam0, so expansion always finds a sign change
        hi = 1.0
        while g(hi) >= 0:
            hi *= 2.0
            if hi > 1e6:
                raise ConvergenceError(f"no waterfilling cutoff bracket for P/m={target!r}")
    lam0 = find_root(g, RootSpec(_CUTOFF_LO, hi, rel_tol=1e-13, max_iter=300))
    p = float(target)
    return WaterfillSolution(lambda0=lam0, gamma0=p * lam0, residual=g(lam0))


def solve_cutoff(cfg: ChannelConfig, upper_hint: float | None = None) -> WaterfillSolution:
    """Waterfilling threshold ``lambda0`` for the average power constraint.

    Solves ``int_{l0}^inf (1/l0 - 1/l) f(l) dl = P/m`` for ``l0``.
    ``upper_hint`` (e.g. the cutoff at a lower SNR) is used as the upper
    bracket end when it brackets the root.

    Raises:
        DomainError: for zero power, where no finite cutoff exists.
    """
    if cfg.power <= 0:
        raise DomainError("waterfilling cutoff is undefined at zero power")
    return _solve_cutoff_cached(cfg.m, cfg.n, cfg.power_per_mode, upper_hint)


def _rate(cfg: ChannelConfig, value_nats: float, scheme: Scheme) -> RatePoint:
    return RatePoint(cfg.snr_db, max(value_nats / LN2, 0.0), scheme, Method.NUMERICAL)


def capacity_csit(cfg: ChannelConfig, cutoff: WaterfillSolution | None = None) -> RatePoint:
    """Ergodic capacity with transmitter CSI and waterfilling over eigenmodes."""
    if cfg.power <= 0:
        return RatePoint(cfg.snr_db, 0.0, Scheme.CSIT_WATERFILL, Method.NUMERICAL)
    lam0 = (cutoff or solve_cutoff(cfg)).lambda0
    nats = cfg.m * _eig_integral(cfg.pair, lambda x: np.log(x / lam0), lam0)
    return _rate(cfg, nats, Scheme.CSIT_WATERFILL)


def capacity_no_csit(cfg: ChannelConfig) -> RatePoint:
    """Ergodic capacity without transmitter CSI (power split evenly over ``n_t``)."""
    if cfg.power <= 0:
        return RatePoint(cfg.snr_db, 0.0, Scheme.NO_CSIT, Method.NUMERICAL)
    snr = cfg.power / cfg.pair.n_t
    nats = cfg.m * _eig_integral(cfg.pair, lambda x: np.log1p(x * snr), 0.0)
    return _rate(cfg, nats, Scheme.NO_CSIT)


def capacity_high_snr_approx(cfg: ChannelConfig) -> RatePoint:
    """Capacity with the flat ``P/m`` allocation that waterfilling tends to at high SNR."""
    if cfg.power <= 0:
        return RatePoint(cfg.snr_db, 0.0, Scheme.HIGH_SNR_APPROX, Method.NUMERICAL)
    snr = cfg.power_per_mode
    nats = cfg.m * _eig_integral(cfg.pair, lambda x: np.log1p(x * snr), 0.0)
    return _rate(cfg, nats, Scheme.HIGH_SNR_APPROX)


def onoff_power(cfg: ChannelConfig, cutoff: WaterfillSolution | None = None) -> tuple[float, float]:
    """Threshold ``tau`` and boosted power ``P0`` of the on-off scheme.

    ``tau`` is the waterfilling cutoff and ``P0 = P / Pr(lambda_max > tau)``.

    Raises:
        ConvergenceError: if the tail mass above ``tau`` underflows (< 1e-300).
    """
    tau = (cutoff or solve_cutoff(cfg)).lambda0
    tail = lambda_max_sf(cfg.pair, tau)
    if tail < 1e-300:
        raise ConvergenceError(f"lambda_max tail mass above tau={tau!r} is degenerate ({tail!r})")
    return tau, cfg.power / tail


def onoff_rate(cfg: ChannelConfig, cutoff: WaterfillSolution | None = None) -> RatePoint:
    """Rate of on-off signalling on the strongest eigenmode."""
    if cfg.power <= 0:
        return RatePoint(cfg.snr_db, 0.0, Scheme.ONOFF, Method.NUMERICAL)
    tau, p0 = onoff_power(cfg, cutoff)
    spec = QuadSpec(abs_tol=1e-300, rel_tol=1e-11, max_subdivisions=4000)
    pair = cfg.pair
    nats = integrate_semi_infinite(
        lambda x: np.log1p(x * p0) * lambda_max_pdf(pair, x), tau, spec,
        cutoff=pair.tail_cutoff(tau),
    )
    return _rate(cfg, nats, Scheme.ONOFF)


def _warm_cutoffs(cfgs) -> dict:
    # ascending SNR per pair; from 30 dB on, the previous cutoff bounds the next from above
    out = {}
    by_pair: dict = {}
    for c in cfgs:
        if c.power > 0:
            by_pair.setdefault((c.m, c.n), []).append(c)
    for group in by_pair.values():
        hint = None
        for c in sorted(set(group), key=lambda c: c.power):
            try:
                sol = solve_cutoff(c, upper_hint=hint if c.snr_db >= 30 else None)
            except (ArithmeticError, ValueError, ConvergenceError):
                continue  # reported per entry when the point itself is evaluated
            out[c] = sol
            hint = sol.lambda0
    return out


_NUMERICAL = {
    Scheme.CSIT_WATERFILL: capacity_csit,
    Scheme.NO_CSIT: capacity_no_csit,
    Scheme.HIGH_SNR_APPROX: capacity_high_snr_approx,
    Scheme.ONOFF: onoff_rate,
}


def sweep(cfgs, scheme, method=Method.NUMERICAL, mc=None, workers: int = 1) -> list:
    """Evaluate one scheme over a list of configs, preserving order.

    Failures are returned in place as :class:`SweepError` entries instead of
    aborting the sweep.  Monte Carlo sweeps need ``mc`` (a ``McConfig``).
    """
    cfgs = list(cfgs)
    if not cfgs:
        raise ValueError("sweep needs at least one config")
    scheme, method = Scheme(scheme), Method(method)
    if method is Method.MONTECARLO:
        from . import montecarlo

        if mc is None:
            mc = montecarlo.McConfig()
        if scheme is Scheme.HIGH_SNR_APPROX:
            raise ValueError("no Monte Carlo estimator for the high-SNR approximation")
        # one set of draws per antenna pair, shared by every SNR point
        draws = {c.pair: montecarlo.sample_eigenvalues(c.pair, mc) for c in cfgs}

    needs_cutoff = scheme in (Scheme.CSIT_WATERFILL, Scheme.ONOFF)
    cutoffs = _warm_cutoffs(cfgs) if needs_cutoff else {}

    def one(cfg):
        try:
            kw = {"cutoff": cutoffs[cfg]} if cfg in cutoffs else {}
            if method is Method.NUMERICAL:
                return _NUMERICAL[scheme](cfg, **kw)
            est = montecarlo.estimate(cfg, scheme, mc, eigenvalues=draws[cfg.pair], **kw)
            return RatePoint(cfg.snr_db, est.mean, scheme, method, est.std_error)
        except (ArithmeticError, ValueError, ConvergenceError) as exc:
            return SweepError(cfg.snr_db, scheme, method, f"{type(exc).__name__}: {exc}")

    if workers <= 1:
        return [one(c) for c in cfgs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, cfgs))
