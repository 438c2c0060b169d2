"""Seeded Monte Carlo estimates over IID CN(0,1) channel draws.

Draws are generated in fixed-size blocks.  Block ``k`` owns the substream
``SeedSequence(seed, spawn_key=(k,))``, so results depend only on
``(seed, samples, block_size)``: the worker count changes wall time, never
the numbers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .capacity import ChannelConfig, Scheme, WaterfillSolution, onoff_power, solve_cutoff
from .spectrum import AntennaPair

__all__ = [
    "McConfig",
    "McEstimate",
    "sample_channel",
    "sample_eigenvalues",
    "mc_capacity_csit",
    "mc_capacity_no_csit",
    "mc_onoff_rate",
    "mc_outage",
    "estimate",
]

log = logging.getLogger(__name__)

_MAX_RETRIES = 8


@dataclass(frozen=True)
class McConfig:
    samples: int = 1_000_000
    seed: int = 0
    workers: int = 1
    block_size: int = 1 << 16

    def __post_init__(self):
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValueError(f"samples must be a positive integer, got {self.samples!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.workers < 1 or self.block_size < 1:
            raise ValueError("workers and block_size must be positive")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    samples: int
    seed: int

    @classmethod
    def from_draws(cls, draws: np.ndarray, seed: int) -> "McEstimate":
        n = draws.size
        mean = float(draws.mean())
        sd = float(draws.std(ddof=1)) if n > 1 else 0.0
        return cls(mean, sd / math.sqrt(n), n, seed)


def _rng(seed: int, block: int, attempt: int) -> np.random.Generator:
    key = (block,) if attempt == 0 else (block, attempt)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def sample_channel(rng: np.random.Generator, pair: AntennaPair, count: int) -> np.ndarray:
    """``count`` channel matrices with IID CN(0,1) entries (each part N(0, 1/2))."""
    z = rng.standard_normal((count, pair.n_r, pair.n_t, 2))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def _block_eigenvalues(pair: AntennaPair, seed: int, block: int, count: int) -> np.ndarray:
    for attempt in range(_MAX_RETRIES):
        h = sample_channel(_rng(seed, block, attempt), pair, count)
        hh = np.conj(np.swapaxes(h, -1, -2))
        gram = h @ hh if pair.n_r <= pair.n_t else hh @ h
        gram = 0.5 * (gram + np.conj(np.swapaxes(gram, -1, -2)))
        try:
            return np.maximum(np.linalg.eigvalsh(gram), 0.0)
        except np.linalg.LinAlgError:
            log.warning("eigensolver failed on block %d (attempt %d); resampling", block, attempt)
    raise np.linalg.LinAlgError(f"eigensolver failed {_MAX_RETRIES} times on block {block}")


def sample_eigenvalues(pair, mc: McConfig) -> np.ndarray:
    """Nonzero Gram-matrix eigenvalues, one ascending row of ``m`` per draw.

    Returns:
        Array of shape ``(mc.samples, m)``.
    """
    if not isinstance(pair, AntennaPair):
        pair = AntennaPair(*pair)
    n_blocks = -(-mc.samples // mc.block_size)
    sizes = [min(mc.block_size, mc.samples - k * mc.block_size) for k in range(n_blocks)]
    work = lambda k: _block_eigenvalues(pair, mc.seed, k, sizes[k])  # noqa: E731
    if mc.workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=mc.workers) as pool:
            blocks = list(pool.map(work, range(n_blocks)))
    else:
        blocks = [work(k) for k in range(n_blocks)]
    return np.concatenate(blocks, axis=0)


def _eigs(cfg: ChannelConfig, mc: McConfig, eigenvalues) -> np.ndarray:
    if eigenvalues is None:
        return sample_eigenvalues(cfg.pair, mc)
    eigenvalues = np.asarray(eigenvalues)
    if eigenvalues.ndim != 2 or eigenvalues.shape[1] != cfg.m:
        raise ValueError(f"eigenvalues must have shape (samples, {cfg.m})")
    return eigenvalues


def mc_capacity_csit(cfg: ChannelConfig, mc: McConfig, eigenvalues=None,
                     cutoff: WaterfillSolution | None = None) -> McEstimate:
    """Per draw ``sum_{l_i > l0} log2(l_i / l0)`` with the analytic cutoff ``l0``."""
    lam = _eigs(cfg, mc, eigenvalues)
    if cfg.power <= 0:
        return McEstimate.from_draws(np.zeros(len(lam)), mc.seed)
    lam0 = (cutoff or solve_cutoff(cfg)).lambda0
    with np.errstate(divide="ignore"):
        rates = np.where(lam > lam0, np.log2(lam / lam0), 0.0).sum(axis=1)
    return McEstimate.from_draws(rates, mc.seed)


def mc_capacity_no_csit(cfg: ChannelConfig, mc: McConfig, eigenvalues=None) -> McEstimate:
    """Per draw ``sum_i log2(1 + l_i P / n_t)``."""
    lam = _eigs(cfg, mc, eigenvalues)
    rates = np.log1p(lam * (cfg.power / cfg.pair.n_t)).sum(axis=1) / math.log(2.0)
    return McEstimate.from_draws(rates, mc.seed)


def mc_onoff_rate(cfg: ChannelConfig, mc: McConfig, eigenvalues=None,
                  cutoff: WaterfillSolution | None = None) -> McEstimate:
    """Per draw ``log2(1 + l_max P0)`` when ``l_max > tau``, else 0.

    ``tau`` and ``P0`` come from the analytic on-off parameters.
    """
    lam = _eigs(cfg, mc, eigenvalues)
    if cfg.power <= 0:
        return McEstimate.from_draws(np.zeros(len(lam)), mc.seed)
    tau, p0 = onoff_power(cfg, cutoff)
    top = lam.max(axis=1)
    rates = np.where(top > tau, np.log1p(top * p0), 0.0) / math.log(2.0)
    return McEstimate.from_draws(rates, mc.seed)


def mc_outage(cfg: ChannelConfig, mc: McConfig, eigenvalues=None,
              cutoff: WaterfillSolution | None = None) -> McEstimate:
    """Fraction of draws with ``l_max < l0``; binomial standard error."""
    lam = _eigs(cfg, mc, eigenvalues)
    lam0 = (cutoff or solve_cutoff(cfg)).lambda0
    hits = lam.max(axis=1) < lam0
    n = hits.size
    p = float(np.count_nonzero(hits)) / n
    return McEstimate(p, math.sqrt(p * (1.0 - p) / n), n, mc.seed)


_ESTIMATORS = {
    Scheme.CSIT_WATERFILL: mc_capacity_csit,
    Scheme.NO_CSIT: mc_capacity_no_csit,
    Scheme.ONOFF: mc_onoff_rate,
}


def estimate(cfg: ChannelConfig, scheme, mc: McConfig, eigenvalues=None,
             cutoff: WaterfillSolution | None = None) -> McEstimate:
    """Dispatch to the Monte Carlo estimator for ``scheme``."""
    try:
        fn = _ESTIMATORS[Scheme(scheme)]
    except KeyError:
        raise ValueError(f"no Monte Carlo estimator for scheme {scheme!r}") from None
    kw = {} if cutoff is None else {"cutoff": cutoff}
    return fn(cfg, mc, eigenvalues=eigenvalues, **kw)
