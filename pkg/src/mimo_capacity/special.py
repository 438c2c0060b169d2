"""Special functions used by the eigenvalue densities and outage bounds.

All functions accept a scalar or an array for the continuous argument and
return a value of the same shape (a Python float for scalar input).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

__all__ = [
    "laguerre_assoc",
    "laguerre_assoc_all",
    "ln_gamma",
    "gamma_upper",
    "gamma_lower",
    "gamma_lower_regularized",
    "gamma_upper_regularized",
]

_MAX_SERIES_TERMS = 1000
_TINY = 1e-300


def _as_array(x, name: str = "x", allow_zero: bool = True) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError(f"{name} contains NaN")
    bad = arr < 0 if allow_zero else arr <= 0
    if np.any(bad):
        raise DomainError(f"{name} must be {'nonnegative' if allow_zero else 'positive'}")
    return arr, arr.ndim == 0


def _out(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


def _check_order(k: int, a: int) -> None:
    if int(k) != k or k < 0:
        raise DomainError(f"Laguerre order must be a nonnegative integer, got {k!r}")
    if int(a) != a or a < 0:
        raise DomainError(f"Laguerre superscript must be a nonnegative integer, got {a!r}")


def laguerre_assoc_all(kmax: int, a: int, x) -> np.ndarray:
    """Evaluate ``L_k^a(x)`` for every ``k = 0..kmax``.

    Uses the upward three-term recurrence in ``k``, which stays accurate for
    large ``x`` where the explicit power sum cancels catastrophically.

    Returns:
        Array of shape ``(kmax + 1,) + np.shape(x)``.
    """
    _check_order(kmax, a)
    xs, _ = _as_array(x)
    out = np.empty((kmax + 1,) + xs.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = 1.0 + a - xs
    for k in range(1, kmax):
        out[k + 1] = ((2 * k + 1 + a - xs) * out[k] - (k + a) * out[k - 1]) / (k + 1)
    return out


def laguerre_assoc(k: int, a: int, x):
    """Associated Laguerre polynomial ``L_k^a(x)`` for integer ``k, a >= 0``."""
    _check_order(k, a)
    xs, scalar = _as_array(x)
    return _out(laguerre_assoc_all(k, a, xs)[k], scalar)


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def _check_shape(s: float) -> float:
    s = float(s)
    if not s > 0:
        raise DomainError(f"shape parameter must be positive, got {s!r}")
    return s


def _is_small_int(s: float) -> bool:
    return s.is_integer() and s <= 170


def _lower_series(s: float, x: np.ndarray) -> np.ndarray:
    # P(s, x) = x^s e^-x / Gamma(s+1) * sum_k x^k / ((s+1)...(s+k)); use for x < s + 1
    term = np.ones_like(x)
    total = np.ones_like(x)
    for i in range(1, _MAX_SERIES_TERMS):
        term = term * x / (s + i)
        total = total + term
        if np.all(term <= 1e-17 * total):
            break
    with np.errstate(divide="ignore"):
        log_pref = s * np.log(x) - x - math.lgamma(s + 1.0)
    return np.where(x > 0, np.exp(log_pref) * total, 0.0)


def _upper_finite_sum(s: int, x: np.ndarray) -> np.ndarray:
    # Q(s, x) = e^-x sum_{j<s} x^j / j!, exact for integer s
    with np.errstate(divide="ignore"):
        logx = np.log(x)
    j = np.arange(s, dtype=float).reshape((s,) + (1,) * x.ndim)
    lgj = np.array([math.lgamma(v + 1.0) for v in range(s)]).reshape(j.shape)
    with np.errstate(invalid="ignore"):
        logs = np.where(j == 0, 0.0, j * logx) - lgj - x
    peak = logs.max(axis=0)
    return np.exp(peak) * np.exp(logs - peak).sum(axis=0)


def _upper_continued_fraction(s: float, x: np.ndarray) -> np.ndarray:
    # modified Lentz evaluation of the Legendre continued fraction; use for x >= s + 1
    b = x + 1.0 - s
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, _MAX_SERIES_TERMS):
        an = -i * (i - s)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) < 1e-16):
            break
    return np.exp(s * np.log(x) - x - math.lgamma(s)) * h


def _regularized_pair(s: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(P(s, x), Q(s, x))``, each computed on the side where it is accurate."""
    p = np.empty_like(x)
    q = np.empty_like(x)
    lo = x < s + 1.0
    if np.any(lo):
        p[lo] = _lower_series(s, x[lo])
        q[lo] = 1.0 - p[lo]
    hi = ~lo
    if np.any(hi):
        if _is_small_int(s):
            q[hi] = _upper_finite_sum(int(s), x[hi])
        else:
            q[hi] = _upper_continued_fraction(s, x[hi])
        p[hi] = 1.0 - q[hi]
    return np.clip(p, 0.0, 1.0), np.clip(q, 0.0, 1.0)


def gamma_lower_regularized(s: float, x):
    """Regularized lower incomplete gamma ``P(s, x) = gamma(s, x) / Gamma(s)``."""
    s = _check_shape(s)
    xs, scalar = _as_array(x)
    return _out(_regularized_pair(s, np.atleast_1d(xs))[0].reshape(xs.shape), scalar)


def gamma_upper_regularized(s: float, x):
    """Regularized upper incomplete gamma ``Q(s, x) = Gamma(s, x) / Gamma(s)``."""
    s = _check_shape(s)
    xs, scalar = _as_array(x)
    if _is_small_int(s):
        return _out(_upper_finite_sum(int(s), xs), scalar)
    return _out(_regularized_pair(s, np.atleast_1d(xs))[1].reshape(xs.shape), scalar)


def gamma_upper(s: float, x):
    """Upper incomplete gamma ``Gamma(s, x) = int_x^inf t^(s-1) e^-t dt``.

    Integer ``s`` uses the exact finite sum
    ``(s-1)! e^-x sum_{j<s} x^j / j!``.
    """
    s = _check_shape(s)
    q = gamma_upper_regularized(s, x)
    return q * math.exp(math.lgamma(s))


def gamma_lower(s: float, x):
    """Lower incomplete gamma ``gamma(s, x) = int_0^x t^(s-1) e^-t dt``."""
    s = _check_shape(s)
    return gamma_lower_regularized(s, x) * math.exp(math.lgamma(s))
