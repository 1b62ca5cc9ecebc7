"""Special functions used by the correlation models and the densities.

The hypergeometric series are summed by the compiled kernels in
:mod:`tprocess._kernels`; this module validates arguments and turns kernel
status codes into exceptions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special
from scipy.stats import qmc

from . import _kernels as _k
from .exceptions import (ConvergenceError, DivergenceError, DomainError,
                         UnsupportedDimensionError)

__all__ = [
    "SeriesControl", "DEFAULT_CONTROL", "log_gamma", "pochhammer_log",
    "gauss_2f1", "appell_f4", "bessel_k", "bessel_i", "student_t_cdf",
    "mvn_cdf", "MVN_MAX_DIM",
]

MVN_MAX_DIM = 12
# beyond this the F4 series needs too many terms to be worth attempting
F4_BOUNDARY = 0.999


@dataclass(frozen=True)
class SeriesControl:
    """Truncation rule for the hypergeometric series.

    Parameters
    ----------
    tolerance : float
        A series stops once the bound on the omitted tail falls below
        ``tolerance`` times the running sum.
    max_terms : int
        Hard cap on the number of terms of any single series.
    """

    tolerance: float = 1e-12
    max_terms: int = 10000

    def __post_init__(self):
        if not (self.tolerance > 0 and math.isfinite(self.tolerance)):
            raise DomainError("tolerance must be a positive finite number")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError("max_terms must be a positive integer")


DEFAULT_CONTROL = SeriesControl()


def _finite(name, x):
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x}")
    return x


def log_gamma(x):
    """Natural log of the gamma function for positive ``x``."""
    x = _finite("x", x)
    if x <= 0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def pochhammer_log(s, k):
    """Log of the rising factorial ``(s)_k = Gamma(s + k) / Gamma(s)``."""
    s = _finite("s", s)
    if s <= 0:
        raise DomainError(f"pochhammer_log requires s > 0, got {s}")
    if int(k) != k or k < 0:
        raise DomainError(f"k must be a nonnegative integer, got {k}")
    if k == 0:
        return 0.0
    return math.lgamma(s + k) - math.lgamma(s)


def _raise_status(status, what, partial, n_terms):
    if status == _k.ST_DOMAIN:
        raise DomainError(f"{what}: argument outside the domain")
    if status == _k.ST_DIVERGENT:
        raise DivergenceError(f"{what}: series diverges")
    if status == _k.ST_NOCONV:
        raise ConvergenceError(f"{what}: no convergence within max_terms",
                               partial=partial, n_terms=n_terms)


def gauss_2f1(a, b, c, x, ctrl: SeriesControl = DEFAULT_CONTROL):
    """Gauss hypergeometric function 2F1(a, b; c; x).

    Parameters
    ----------
    a, b : float
    c : float
        Must not be zero or a negative integer.
    x : float
        In ``(-1, 1]``; at ``x = 1`` the series converges only when
        ``c - a - b > 0``.
    ctrl : SeriesControl

    Returns
    -------
    float

    Notes
    -----
    Near ``x = 1`` the direct series converges slowly, so the function
    switches to the Euler transformation or to the connection formulas
    around ``1 - x``; below ``x = -1/2`` it uses the Pfaff transformation.
    """
    a, b, c, x = (_finite(n, v) for n, v in zip("abcx", (a, b, c, x)))
    if c <= 0 and c == math.floor(c):
        raise DomainError("c must not be a nonpositive integer")
    if x == 1.0 and c - a - b <= 0 and not (
            (a <= 0 and a == math.floor(a)) or (b <= 0 and b == math.floor(b))):
        raise DivergenceError(f"2F1 diverges at x = 1 when c - a - b = {c - a - b} <= 0")
    if not -1.0 < x <= 1.0:
        raise DomainError(f"2F1 requires x in (-1, 1], got {x}")
    lv, sv, st, n = _k.hyp2f1(a, b, c, x, ctrl.tolerance, int(ctrl.max_terms))
    val = sv * math.exp(lv) if sv != 0.0 else 0.0
    _raise_status(st, "2F1", val, n)
    return val


def appell_f4(a, b, c, cp, w, z, ctrl: SeriesControl = DEFAULT_CONTROL):
    """Appell function F4(a, b; c, c'; w, z).

    Summed as a single series over ``k`` whose terms are
    ``(a)_k (b)_k z^k / (k! (c')_k) * 2F1(a + k, b + k; c; w)``.

    Raises
    ------
    DomainError
        When ``sqrt|w| + sqrt|z| >= 1``.
    ConvergenceError
        When ``sqrt|w| + sqrt|z| > 0.999`` (too close to the boundary) or
        the series fails to settle within ``ctrl.max_terms``.
    """
    a, b, c, cp, w, z = (_finite(n, v) for n, v in
                         zip(("a", "b", "c", "cp", "w", "z"), (a, b, c, cp, w, z)))
    for name, v in (("c", c), ("cp", cp)):
        if v <= 0 and v == math.floor(v):
            raise DomainError(f"{name} must not be a nonpositive integer")
    rad = math.sqrt(abs(w)) + math.sqrt(abs(z))
    if rad >= 1.0:
        raise DomainError(f"F4 requires sqrt|w| + sqrt|z| < 1, got {rad}")
    if rad > F4_BOUNDARY:
        raise ConvergenceError(f"F4 argument too close to the boundary ({rad})",
                               n_terms=0)
    lv, sv, st, n = _k.log_f4(a, b, c, cp, w, z, ctrl.tolerance, int(ctrl.max_terms))
    val = sv * math.exp(lv) if sv != 0.0 else 0.0
    _raise_status(st, "F4", val, n)
    return val


def bessel_k(order, x):
    """Modified Bessel function of the second kind, K_order(x), for x > 0."""
    order = abs(_finite("order", order))
    x = _finite("x", x)
    if x <= 0:
        raise DomainError(f"bessel_k requires x > 0, got {x}")
    return float(special.kv(order, x))


def bessel_i(order, x):
    """Modified Bessel function of the first kind for ``order > -1``.

    Computed through ``I_v(x) = (x/2)^v 0F1(; v+1; x^2/4) / Gamma(v+1)``;
    the 0F1 series has positive terms and is accumulated with rescaling.
    """
    order = _finite("order", order)
    x = _finite("x", x)
    if order <= -1:
        raise DomainError(f"bessel_i requires order > -1, got {order}")
    if x < 0:
        raise DomainError(f"bessel_i requires x >= 0, got {x}")
    if x == 0:
        return 1.0 if order == 0 else (0.0 if order > 0 else math.inf)
    log_s = _log_0f1(order + 1.0, 0.25 * x * x)
    return math.exp(order * math.log(0.5 * x) - math.lgamma(order + 1.0) + log_s)


def _log_0f1(b, x, tol=1e-16, max_terms=100000):
    # positive series; terms peak near k ~ sqrt(x)
    t = 1.0
    s = 1.0
    lscale = 0.0
    for k in range(max_terms):
        r = x / ((b + k) * (k + 1.0))
        t *= r
        s += t
        if s > 1e250:
            s *= 1e-250
            t *= 1e-250
            lscale += 250.0 * math.log(10.0)
        if r < 0.5 and t < tol * s:
            return math.log(s) + lscale
    raise ConvergenceError("0F1 series did not converge", n_terms=max_terms)


def student_t_cdf(x, dof):
    """CDF of the standard Student-t distribution.

    Uses the regularized incomplete beta function; the lower tail is
    computed directly so that ``F(x) + F(-x) = 1`` to rounding.
    """
    dof = float(dof)
    if not dof > 0 or math.isnan(dof):
        raise DomainError(f"dof must be positive, got {dof}")
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.isinf(x), 0.0, dof / (dof + x * x))
    tail = 0.5 * special.betainc(0.5 * dof, 0.5, ratio)
    out = np.where(x < 0, tail, 1.0 - tail)
    out = np.where(np.isnan(x), np.nan, out)
    return float(out) if out.ndim == 0 else out


def _sov_integrand(w, lower, upper, chol):
    """Genz separation-of-variables integrand on the unit cube.

    ``w`` has shape (m, n - 1); returns the m integrand values.
    """
    n = chol.shape[0]
    m = w.shape[0]
    d = np.full(m, special.ndtr(lower[0] / chol[0, 0]))
    e = np.full(m, special.ndtr(upper[0] / chol[0, 0]))
    f = e - d
    y = np.zeros((m, n))
    for i in range(1, n):
        u = np.clip(d + w[:, i - 1] * (e - d), 1e-300, 1.0 - 1e-16)
        y[:, i - 1] = special.ndtri(u)
        s = y[:, :i] @ chol[i, :i]
        d = special.ndtr((lower[i] - s) / chol[i, i])
        e = special.ndtr((upper[i] - s) / chol[i, i])
        f = f * (e - d)
    return f


def _bvn(lower, upper, rho):
    # one-dimensional conditioning integral, evaluated adaptively
    s = math.sqrt(1.0 - rho * rho)

    def f(x):
        return math.exp(-0.5 * x * x) * (special.ndtr((upper[1] - rho * x) / s)
                                          - special.ndtr((lower[1] - rho * x) / s))

    lo, hi = max(lower[0], -40.0), min(upper[0], 40.0)
    if lo >= hi:
        return 0.0, 0.0
    val, err = integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)
    c = 1.0 / math.sqrt(2.0 * math.pi)
    return min(max(val * c, 0.0), 1.0), err * c


def mvn_cdf(upper, corr, rng_seed=0, *, lower=None, se_target=1e-4,
            n_shifts=8, max_points=2 ** 16):
    """Multivariate normal orthant-type probability P(lower < Z <= upper).

    Parameters
    ----------
    upper : array_like, shape (n,)
    corr : array_like, shape (n, n)
        Correlation matrix; a covariance matrix is rescaled to unit diagonal
        (and ``upper``/``lower`` are standardised accordingly).
    rng_seed : int
        Seed for the scrambled Sobol replicates.
    lower : array_like, optional
        Defaults to ``-inf``.
    se_target : float
        The number of quasi-random points is doubled until the standard
        error across ``n_shifts`` independent scramblings is below this.

    Returns
    -------
    value : float
    se : float
        Standard error of ``value`` across the scrambled replicates.

    Notes
    -----
    Dimension two is integrated deterministically (adaptive quadrature of
    the conditional probability); ``se`` is then the quadrature error bound.
    """
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    cov = np.atleast_2d(np.asarray(corr, dtype=float))
    n = upper.shape[0]
    if cov.shape != (n, n):
        raise DomainError("corr must be square and match the length of upper")
    if n > MVN_MAX_DIM:
        raise UnsupportedDimensionError(
            f"mvn_cdf supports dimension <= {MVN_MAX_DIM}, got {n}")
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
        raise DomainError("corr must be symmetric")
    lower = (np.full(n, -np.inf) if lower is None
             else np.atleast_1d(np.asarray(lower, dtype=float)))
    sd = np.sqrt(np.diag(cov))
    if np.any(~(sd > 0)):
        raise DomainError("corr must have a positive diagonal")
    r = cov / np.outer(sd, sd)
    upper = upper / sd
    lower = lower / sd
    if np.any(lower >= upper):
        return 0.0, 0.0
    eig_min = np.linalg.eigvalsh(r)[0]
    if eig_min < -1e-10:
        raise DomainError("corr is not positive semi-definite")
    if n == 1:
        return float(special.ndtr(upper[0]) - special.ndtr(lower[0])), 0.0
    if n == 2 and abs(r[0, 1]) < 1.0 - 1e-12:
        return _bvn(lower, upper, r[0, 1])
    try:
        chol = np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        chol = np.linalg.cholesky(r + 1e-12 * np.eye(n))
    engines = [qmc.Sobol(d=n - 1, scramble=True, seed=np.random.default_rng([rng_seed, j]))
               for j in range(n_shifts)]
    sums = np.zeros(n_shifts)
    count = 0
    batch = 256
    while True:
        for j, eng in enumerate(engines):
            w = eng.random(batch)
            sums[j] += _sov_integrand(w, lower, upper, chol).sum()
        count += batch
        est = sums / count
        value = float(est.mean())
        se = float(est.std(ddof=1) / math.sqrt(n_shifts))
        if se <= se_target or count >= max_points:
            break
        batch = count  # keep Sobol sample sizes at powers of two
    return min(max(value, 0.0), 1.0), se
