"""Eigenvalue distributions of the Gram matrix of an IID CN(0,1) channel.

For an ``n_r x n_t`` channel ``H`` let ``m = min(n_r, n_t)`` and
``n = max(n_r, n_t)``.  The ``m`` nonzero eigenvalues of ``H H^dagger``
follow the complex Wishart (Laguerre unitary) ensemble.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError
from .numerics import QuadSpec, integrate_interval
from .special import gamma_lower_regularized, laguerre_assoc_all

__all__ = [
    "AntennaPair",
    "EigenDensity",
    "eigen_pdf",
    "lambda_max_cdf",
    "lambda_max_pdf",
    "lambda_max_pdf_fd",
    "lambda_max_sf",
]


@dataclass(frozen=True)
class AntennaPair:
    """Receive/transmit antenna counts of a MIMO link."""

    n_r: int
    n_t: int

    def __post_init__(self):
        for name in ("n_r", "n_t"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")

    @property
    def m(self) -> int:
        return min(self.n_r, self.n_t)

    @property
    def n(self) -> int:
        return max(self.n_r, self.n_t)

    def swapped(self) -> "AntennaPair":
        return AntennaPair(self.n_t, self.n_r)

    def tail_cutoff(self, lower: float = 0.0) -> float:
        """Abscissa past which the eigenvalue densities are negligible."""
        edge = (math.sqrt(self.m) + math.sqrt(self.n)) ** 2
        return lower + max(60.0, self.n + 20.0 * math.sqrt(self.n), 2.0 * edge + 40.0)


def _coerce_pair(pair) -> AntennaPair:
    if isinstance(pair, AntennaPair):
        return pair
    return AntennaPair(*pair)


def _nonneg(x, strict: bool = False) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr <= 0 if strict else arr < 0):
        raise DomainError(f"argument must be {'positive' if strict else 'nonnegative'}")
    return arr, arr.ndim == 0


class EigenDensity:
    """Density of one unordered eigenvalue of the Wishart Gram matrix.

    ``f(l) = exp(-l) l^(n-m) / m * sum_k k!/(k+n-m)! [L_k^(n-m)(l)]^2``.
    Immutable once built; the per-``k`` log normalisers are precomputed.

    Example:
        >>> d = EigenDensity(AntennaPair(4, 4))
        >>> round(d.pdf(1.0), 6)
        0.155838
    """

    def __init__(self, pair):
        self.pair = _coerce_pair(pair)
        m, n = self.pair.m, self.pair.n
        self._a = n - m
        self._log_norm = np.array(
            [math.lgamma(k + 1) - math.lgamma(k + self._a + 1) for k in range(m)]
        ) - math.log(m)

    def __repr__(self):
        return f"EigenDensity(m={self.pair.m}, n={self.pair.n})"

    def pdf(self, lam):
        lam_arr, scalar = _nonneg(lam)
        flat = lam_arr.ravel()
        lag = laguerre_assoc_all(self.pair.m - 1, self._a, flat)
        with np.errstate(divide="ignore"):
            log_pref = -flat + (self._a * np.log(flat) if self._a else 0.0)
        weights = np.exp(self._log_norm[:, None] + log_pref[None, :])
        out = (weights * lag**2).sum(axis=0)
        if self._a:
            out = np.where(flat > 0, out, 0.0)
        out = out.reshape(lam_arr.shape)
        return float(out) if scalar else out

    __call__ = pdf

    @cached_property
    def upper(self) -> float:
        return self.pair.tail_cutoff()

    def cdf(self, x):
        """``Pr(lambda <= x)`` by adaptive quadrature between sorted grid points."""
        x_arr, scalar = _nonneg(x)
        flat = x_arr.ravel()
        order = np.argsort(flat)
        pts = np.concatenate([[0.0], np.minimum(flat[order], self.upper)])
        spec = QuadSpec(abs_tol=1e-13, rel_tol=1e-12)
        pieces = [integrate_interval(self.pdf, lo, hi, spec)[0] if hi > lo else 0.0
                  for lo, hi in zip(pts[:-1], pts[1:])]
        vals = np.empty_like(flat)
        vals[order] = np.minimum(np.cumsum(pieces), 1.0)
        vals = vals.reshape(x_arr.shape)
        return float(vals) if scalar else vals


def eigen_pdf(d: EigenDensity, lam):
    """Evaluate the unordered eigenvalue density ``d`` at ``lam``."""
    return d.pdf(lam)


class _LambdaMaxKernel:
    """Determinant form of the largest-eigenvalue CDF.

    ``F(x) = det[gamma(n-m+i+j-1, x)]_{i,j=1..m} / prod_k Gamma(n-k+1) Gamma(m-k+1)``.
    Rows and columns are rescaled by ``Gamma(s_ii)^(-1/2)`` so entries stay
    O(1) and the determinant does not overflow for moderate ``m``.
    """

    def __init__(self, pair: AntennaPair):
        m, n = pair.m, pair.n
        a = n - m
        idx = np.arange(1, m + 1)
        self.shape = a + idx[:, None] + idx[None, :] - 1
        diag_lg = np.array([math.lgamma(a + 2 * i - 1) for i in idx])
        self.scale_lg = -(diag_lg[:, None] + diag_lg[None, :]) / 2
        self.entry_lg = np.vectorize(math.lgamma)(self.shape.astype(float)) + self.scale_lg
        norm_lg = sum(math.lgamma(n - k + 1) + math.lgamma(m - k + 1) for k in idx)
        self.log_factor = diag_lg.sum() - norm_lg
        self.m = m
        self.unique_shapes = np.unique(self.shape)

    def _entries(self, x: np.ndarray) -> np.ndarray:
        lower = {s: gamma_lower_regularized(float(s), x) for s in self.unique_shapes}
        mats = np.empty(x.shape + self.shape.shape)
        for i in range(self.m):
            for j in range(self.m):
                mats[..., i, j] = lower[self.shape[i, j]] * math.exp(self.entry_lg[i, j])
        return mats

    def cdf(self, x: np.ndarray) -> np.ndarray:
        det = np.linalg.det(self._entries(x))
        return np.clip(det * math.exp(self.log_factor), 0.0, 1.0)

    def sf(self, x: np.ndarray) -> np.ndarray:
        return 1.0 - self.cdf(x)

    def pdf(self, x: np.ndarray) -> np.ndarray:
        mats = self._entries(x)
        with np.errstate(divide="ignore"):
            logx = np.log(x)
        # d/dx gamma(s, x) = x^(s-1) e^-x, rescaled like the entries
        deriv = np.exp((self.shape - 1)[None] * logx[:, None, None] - x[:, None, None]
                       + self.scale_lg[None])
        total = np.zeros_like(x)
        for i in range(self.m):
            rowed = mats.copy()
            rowed[:, i, :] = deriv[:, i, :]
            total += np.linalg.det(rowed)
        return np.maximum(total * math.exp(self.log_factor), 0.0)


class _OrthonormalKernel:
    """Largest-eigenvalue CDF as ``det(I - G(x))``.

    ``G_ij(x) = int_x^inf p_i p_j t^a e^-t dt`` with ``p_k`` the Laguerre
    polynomials orthonormal for the weight ``t^a e^-t``; this is the Hankel
    determinant above after a unimodular change of basis.  Every entry is a
    polynomial times ``e^-t`` on ``[x, inf)``, so a shifted Gauss-Laguerre rule
    integrates it exactly, and ``I - G`` stays well conditioned for large
    ``m`` where the Hankel form loses all precision.  The density follows
    from the matrix determinant lemma:
    ``f(x) = det(I - G + v v^T) - det(I - G)``, ``v_k = p_k(x) sqrt(x^a e^-x)``.

    Deep in the left tail ``I - G`` is nearly singular and the determinant
    keeps only absolute accuracy.  There the power ``x^(mn)`` is factored
    out of the Hankel form instead (substituting ``t = x u``), leaving a
    moment matrix on ``[0, 1]`` that is well conditioned in a Jacobi basis.
    """

    def __init__(self, pair: AntennaPair):
        m, n = pair.m, pair.n
        self.m, self.a = m, n - m
        degree = 2 * (m - 1) + self.a
        self.nodes, self.weights = np.polynomial.laguerre.laggauss(degree // 2 + 1)
        self.log_norm = 0.5 * np.array(
            [math.lgamma(k + 1) - math.lgamma(k + self.a + 1) for k in range(m)]
        )
        # left-tail form: Jacobi basis on [0, 1] and a Gauss-Legendre rule
        nodes, weights = np.polynomial.legendre.leggauss(degree // 2 + 48)
        self.u = 0.5 * (nodes + 1.0)
        self.wu = 0.5 * weights * self.u**self.a
        self.jac = _jacobi_orthonormal(m - 1, self.a, self.u)
        log_kappa = [0.5 * math.log(2 * k + self.a + 1) + math.lgamma(2 * k + self.a + 1)
                     - math.lgamma(k + 1) - math.lgamma(k + self.a + 1) for k in range(m)]
        self.mn = m * n
        self.log_const = -2.0 * sum(log_kappa) - sum(
            math.lgamma(n - k + 1) + math.lgamma(m - k + 1) for k in range(1, m + 1)
        )

    def _basis(self, t: np.ndarray) -> np.ndarray:
        # orthonormal p_k(t) scaled by sqrt(t^a e^-t), shape (m,) + t.shape
        lag = laguerre_assoc_all(self.m - 1, self.a, t)
        with np.errstate(divide="ignore"):
            half_w = 0.5 * (self.a * np.log(t) if self.a else 0.0) - 0.5 * t
        scale = np.exp(self.log_norm.reshape((-1,) + (1,) * t.ndim) + half_w)
        return lag * scale

    def _complement(self, x: np.ndarray) -> np.ndarray:
        t = x[:, None] + self.nodes[None, :]
        phi = self._basis(t)  # (m, len(x), q); includes exp(-t/2) t^(a/2)
        # int_x^inf p_i p_j t^a e^-t dt = sum_q w_q e^{u_q} phi_i(x+u_q) phi_j(x+u_q)
        wq = self.weights * np.exp(self.nodes)
        g = np.einsum("ixq,jxq,q->xij", phi, phi, wq)
        return np.eye(self.m)[None] - g

    def _left(self, x: np.ndarray, with_pdf: bool):
        # F(x) = x^(mn) det M(x) * const with M_ij = int_0^1 q_i q_j u^a e^(-xu) du
        w = self.wu[None, :] * np.exp(-x[:, None] * self.u[None, :])
        mom = np.einsum("iq,jq,xq->xij", self.jac, self.jac, w)
        sign, logdet = np.linalg.slogdet(mom)
        cdf = np.where(sign > 0, np.exp(self.mn * np.log(x) + logdet + self.log_const), 0.0)
        if not with_pdf:
            return cdf
        # d/dx log det M = -tr(M^-1 N), N_ij = int_0^1 q_i q_j u^(a+1) e^(-xu) du
        first = np.einsum("iq,jq,xq->xij", self.jac, self.jac, w * self.u[None, :])
        trace = np.trace(np.linalg.solve(mom, first), axis1=-2, axis2=-1)
        return cdf, cdf * (self.mn / x - trace)

    def _use_left(self, x: np.ndarray, bulk_cdf: np.ndarray) -> np.ndarray:
        # bulk form: absolute error ~eps, so relative ~eps/F; left form: cond(M) <= e^x
        with np.errstate(over="ignore"):
            return (x > 0) & (bulk_cdf < _LEFT_MAX_CDF) & (bulk_cdf * np.exp(x) < 1e-2)

    def cdf(self, x: np.ndarray) -> np.ndarray:
        out = np.clip(np.linalg.det(self._complement(x)), 0.0, 1.0)
        out = np.where(x > 0, out, 0.0)  # G(0) = I only up to rounding
        left = self._use_left(x, out)
        if left.any():
            out[left] = self._left(x[left], with_pdf=False)
        return out

    def sf(self, x: np.ndarray) -> np.ndarray:
        # 1 - det(I - G) from the eigenvalues of G; keeps tiny tails exact
        mu = np.clip(np.linalg.eigvalsh(np.eye(self.m)[None] - self._complement(x)), 0.0, 1.0)
        with np.errstate(divide="ignore"):
            return np.clip(-np.expm1(np.log1p(-mu).sum(axis=-1)), 0.0, 1.0)

    def pdf(self, x: np.ndarray) -> np.ndarray:
        a_mat = self._complement(x)
        v = np.moveaxis(self._basis(x), 0, -1)  # (len(x), m)
        det_a = np.linalg.det(a_mat)
        left = self._use_left(x, det_a)
        good = ~left & (det_a > 1e-8)
        rest = ~left & ~good
        out = np.empty_like(x)
        if good.any():
            # det(A + v v^T) - det(A) = det(A) v^T A^-1 v, no cancellation
            sol = np.linalg.solve(a_mat[good], v[good][..., None])[..., 0]
            out[good] = det_a[good] * np.einsum("xi,xi->x", v[good], sol)
        if left.any():
            out[left] = self._left(x[left], with_pdf=True)[1]
        if rest.any():
            bumped = a_mat[rest] + v[rest][:, :, None] * v[rest][:, None, :]
            out[rest] = np.linalg.det(bumped) - det_a[rest]
        return np.maximum(out, 0.0)


_LEFT_MAX_CDF = 1e-3


def _jacobi_orthonormal(kmax: int, a: int, u: np.ndarray) -> np.ndarray:
    """``q_k(u) = sqrt(2k+a+1) P_k^(0,a)(2u-1)``, orthonormal for ``u^a`` on ``[0, 1]``."""
    y = 2.0 * u - 1.0
    p = np.empty((kmax + 1,) + u.shape)
    p[0] = 1.0
    if kmax >= 1:
        p[1] = 1.0 + 0.5 * (a + 2) * (y - 1.0)
    for k in range(1, kmax):
        c1 = 2.0 * (k + 1) * (k + a + 1) * (2 * k + a)
        c2 = (2 * k + a + 1) * ((2 * k + a + 2) * (2 * k + a) * y - a * a)
        c3 = 2.0 * k * (k + a) * (2 * k + a + 2)
        p[k + 1] = (c2 * p[k] - c3 * p[k - 1]) / c1
    scale = np.sqrt(2.0 * np.arange(kmax + 1) + a + 1)
    return p * scale.reshape((-1,) + (1,) * u.ndim)


_KERNELS: dict = {}


def _kernel(pair: AntennaPair, form: str = "orthonormal"):
    key = (pair.m, pair.n, form)
    kern = _KERNELS.get(key)
    if kern is None:
        cls = {"orthonormal": _OrthonormalKernel, "hankel": _LambdaMaxKernel}[form]
        kern = _KERNELS[key] = cls(AntennaPair(pair.m, pair.n))
    return kern


_CHUNK = 1 << 15


def _chunked(fn, flat: np.ndarray) -> np.ndarray:
    # bounds the (m, len(x), nodes) temporaries for long inputs
    if flat.size <= _CHUNK:
        return fn(flat)
    return np.concatenate([fn(flat[i:i + _CHUNK]) for i in range(0, flat.size, _CHUNK)])


def lambda_max_cdf(pair, x, form: str = "orthonormal"):
    """CDF of the largest eigenvalue, ``Pr(lambda_max <= x)``.

    ``form="hankel"`` evaluates the textbook determinant of incomplete
    gammas directly; it agrees with the default to ~1e-13 for ``m <= 6``
    but loses precision quickly beyond that.
    """
    pair = _coerce_pair(pair)
    x_arr, scalar = _nonneg(x)
    out = _chunked(_kernel(pair, form).cdf, x_arr.ravel()).reshape(x_arr.shape)
    return float(out) if scalar else out


def lambda_max_sf(pair, x, form: str = "orthonormal"):
    """Tail probability ``Pr(lambda_max > x)``, accurate far into the tail."""
    pair = _coerce_pair(pair)
    x_arr, scalar = _nonneg(x)
    out = _chunked(_kernel(pair, form).sf, x_arr.ravel()).reshape(x_arr.shape)
    return float(out) if scalar else out


def lambda_max_pdf(pair, x, form: str = "orthonormal"):
    """Density of the largest eigenvalue (analytic derivative of the CDF)."""
    pair = _coerce_pair(pair)
    x_arr, scalar = _nonneg(x, strict=True)
    out = _chunked(_kernel(pair, form).pdf, x_arr.ravel()).reshape(x_arr.shape)
    return float(out) if scalar else out


def lambda_max_pdf_fd(pair, x):
    """Largest-eigenvalue density by a 5-point central difference of the CDF.

    Step ``h = 1e-4 * max(1, x)``, shrunk to ``x / 4`` near the origin.
    """
    pair = _coerce_pair(pair)
    x_arr, scalar = _nonneg(x, strict=True)
    flat = x_arr.ravel()
    h = np.minimum(1e-4 * np.maximum(1.0, flat), flat / 4)
    kern = _kernel(pair)
    f = lambda t: kern.cdf(t)  # noqa: E731
    out = (f(flat - 2 * h) - 8 * f(flat - h) + 8 * f(flat + h) - f(flat + 2 * h)) / (12 * h)
    out = out.reshape(x_arr.shape)
    return float(out) if scalar else out
