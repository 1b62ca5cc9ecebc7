"""Marginal, pairwise and small joint densities of the process families."""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import special

from . import _kernels as _k
from .exceptions import ConvergenceError, DomainError, UnsupportedDimensionError
from .specfun import (DEFAULT_CONTROL, MVN_MAX_DIM, SeriesControl, _log_0f1,
                      gauss_2f1, mvn_cdf, student_t_cdf)

__all__ = [
    "t_pdf", "skew_gauss_pdf", "skew_t_pdf", "bivariate_t_pdf",
    "bivariate_t_logpdf", "pair_logpdf_std", "bivariate_gamma_pdf",
    "mix_moment", "skew_gauss_joint_pdf",
]

_LOG_2PI = math.log(2.0 * math.pi)


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def t_pdf(y, nu):
    """Standard Student-t density with ``nu`` degrees of freedom."""
    if not nu > 0:
        raise DomainError(f"nu must be positive, got {nu}")
    y = np.asarray(y, dtype=float)
    logc = (special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2)
            - 0.5 * math.log(math.pi * nu))
    return _scalar_or_array(np.exp(logc - (nu + 1) / 2 * np.log1p(y * y / nu)))


def skew_gauss_pdf(u, g=0.0, eta=0.0, omega=1.0):
    """Marginal density of ``g + eta |X1| + omega X2`` (skew-normal)."""
    if not omega > 0:
        raise DomainError(f"omega must be positive, got {omega}")
    u = np.asarray(u, dtype=float)
    s = math.sqrt(eta * eta + omega * omega)
    z = (u - g) / s
    out = 2.0 / s * np.exp(-0.5 * z * z - 0.5 * _LOG_2PI) * special.ndtr(eta * z / omega)
    return _scalar_or_array(out)


def skew_t_pdf(g, nu, eta, omega=None):
    """Marginal density of the standardised skew-t process.

    With ``omega = sqrt(1 - eta^2)`` (the default) the symmetric part and the
    half-normal part add up to unit scale, and the density is
    ``2 t(g; nu) T(a g sqrt((nu+1)/(nu+g^2)); nu+1)`` with slant
    ``a = eta/omega``.
    """
    if not nu > 2:
        raise DomainError(f"nu must exceed 2, got {nu}")
    if omega is None:
        if not abs(eta) < 1:
            raise DomainError(f"|eta| must be below 1, got {eta}")
        omega = math.sqrt(1.0 - eta * eta)
    if not omega > 0:
        raise DomainError("omega must be positive")
    s = math.sqrt(eta * eta + omega * omega)
    z = np.asarray(g, dtype=float) / s
    arg = (eta / omega) * z * np.sqrt((nu + 1.0) / (nu + z * z))
    out = 2.0 / s * np.asarray(t_pdf(z, nu)) * student_t_cdf(arg, nu + 1.0)
    return _scalar_or_array(out)


def pair_logpdf_std(zi, zj, rho, nu, ctrl: SeriesControl = DEFAULT_CONTROL):
    """Log bivariate t density of standardised pairs, with status codes.

    Returns
    -------
    logpdf : ndarray
    status : ndarray of int
        0 on success; nonzero entries have ``logpdf = nan``.
    """
    zi, zj, rho = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (zi, zj, rho)))
    shape = zi.shape
    zi, zj, rho = (np.ascontiguousarray(v).ravel() for v in (zi, zj, rho))
    out = np.empty(zi.shape[0])
    status = np.empty(zi.shape[0], dtype=np.int64)
    _k.bivariate_t_logpdf(zi, zj, rho, float(nu), ctrl.tolerance, int(ctrl.max_terms),
                          out, status)
    return out.reshape(shape), status.reshape(shape)


def bivariate_t_logpdf(y_i, y_j, rho, nu, mu_i=0.0, mu_j=0.0, sigma2=1.0,
                       ctrl: SeriesControl = DEFAULT_CONTROL):
    """Log of :func:`bivariate_t_pdf`."""
    if not nu > 2:
        raise DomainError(f"nu must exceed 2, got {nu}")
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    r = np.asarray(rho, dtype=float)
    if np.any(~(np.abs(r) < 1)):
        raise DomainError("bivariate t density needs |rho| < 1")
    sd = math.sqrt(sigma2)
    zi = (np.asarray(y_i, dtype=float) - mu_i) / sd
    zj = (np.asarray(y_j, dtype=float) - mu_j) / sd
    lp, st = pair_logpdf_std(zi, zj, r, nu, ctrl)
    if np.any(st != 0):
        k = int(np.flatnonzero(st.ravel() != 0)[0])
        bz = np.broadcast_arrays(zi, zj, r)
        a, b, rr = (float(v.ravel()[k]) for v in bz)
        raise ConvergenceError(
            "bivariate t density series failed", n_terms=int(ctrl.max_terms),
            rho=rr, l_ij=(a * a + nu) * (b * b + nu), status=int(st.ravel()[k]))
    return _scalar_or_array(lp - math.log(sigma2))


def bivariate_t_pdf(y_i, y_j, rho, nu, mu_i=0.0, mu_j=0.0, sigma2=1.0,
                    ctrl: SeriesControl = DEFAULT_CONTROL):
    """Bivariate density of the t process at two sites.

    Parameters
    ----------
    y_i, y_j : float or array_like
        Observations.
    rho : float or array_like
        Parent (Gaussian) correlation at the pair's lag, ``|rho| < 1``.
    nu : float
        Degrees of freedom, ``nu > 2``.
    mu_i, mu_j, sigma2 : float
        Location and scale; the density is ``f*((y - mu)/sigma) / sigma^2``.
    ctrl : SeriesControl

    Notes
    -----
    The standardised density is a sum of two Appell F4 terms with arguments
    ``w = rho^2 y_i^2 y_j^2 / l`` and ``z = nu^2 rho^2 / l``, where
    ``l = (y_i^2 + nu)(y_j^2 + nu)``.  Since ``sqrt(w) + sqrt(z) <= |rho|``
    the series always converge.  The second term carries the sign of
    ``rho y_i y_j``; both are combined in log space.
    """
    lp = bivariate_t_logpdf(y_i, y_j, rho, nu, mu_i, mu_j, sigma2, ctrl)
    return _scalar_or_array(np.exp(lp))


def bivariate_gamma_pdf(w_i, w_j, nu, rho):
    """Joint density of the gamma mixing process at two sites.

    Marginals are Gamma(nu/2, rate nu/2); ``rho`` is the parent correlation.
    The Bessel factor is evaluated as a 0F1 series.
    """
    if not nu > 2:
        raise DomainError(f"nu must exceed 2, got {nu}")
    if not abs(rho) < 1:
        raise DomainError("need |rho| < 1")
    if not (w_i > 0 and w_j > 0):
        raise DomainError("gamma densities need positive arguments")
    q = 1.0 - rho * rho
    x = nu * abs(rho) * math.sqrt(w_i * w_j) / q
    log_f = (nu * math.log(nu / 2.0) + (nu / 2 - 1) * math.log(w_i * w_j)
             - nu * (w_i + w_j) / (2 * q) - 2 * math.lgamma(nu / 2) - nu / 2 * math.log(q)
             + _log_0f1(nu / 2, x * x / 4))
    return math.exp(log_f)


def mix_moment(a, b, nu, rho, ctrl: SeriesControl = DEFAULT_CONTROL):
    """Cross moment ``E[R(s_i)^a R(s_j)^b]`` with ``R = W^(-1/2)``.

    ``2^(-(a+b)/2) nu^((a+b)/2) Gamma((nu-a)/2) Gamma((nu-b)/2) / Gamma(nu/2)^2
    * 2F1(a/2, b/2; nu/2; rho^2)``, valid for ``nu > max(a, b)``.
    """
    if not (nu > a and nu > b):
        raise DomainError(f"mix_moment needs nu > max(a, b); got nu={nu}, a={a}, b={b}")
    if not abs(rho) <= 1:
        raise DomainError("need |rho| <= 1")
    lc = (-(a + b) / 2 * math.log(2.0) + (a + b) / 2 * math.log(nu)
          + math.lgamma((nu - a) / 2) + math.lgamma((nu - b) / 2) - 2 * math.lgamma(nu / 2))
    return math.exp(lc) * gauss_2f1(a / 2, b / 2, nu / 2, rho * rho, ctrl)


def _mvn_logpdf(x, cov):
    c = np.linalg.cholesky(cov)
    z = np.linalg.solve(c, x)
    return -0.5 * (z @ z) - np.log(np.diag(c)).sum() - 0.5 * len(x) * _LOG_2PI


def skew_gauss_joint_pdf(u, g, eta, omega, corr, rng_seed=0):
    """Joint density of the skew-Gaussian process at ``n <= 12`` sites.

    A sum over the ``2^(n-1)`` sign patterns ``l`` (first entry fixed at +1)
    of ``phi_n(u - g; A_l) Phi_n(c_l; 0, B_l)`` with ``Omega_l = D(l) Omega D(l)``,
    ``A_l = omega^2 Omega + eta^2 Omega_l``,
    ``c_l = eta Omega_l A_l^-1 (u - g)`` and
    ``B_l = Omega_l - eta^2 Omega_l A_l^-1 Omega_l``.

    Parameters
    ----------
    u, g : array_like, shape (n,)
        Evaluation point and location.
    eta, omega : float
    corr : array_like, shape (n, n)
        Parent correlation matrix.
    rng_seed : int
        Seed for the quasi-Monte-Carlo normal probabilities (n > 2).
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    n = u.shape[0]
    if n > MVN_MAX_DIM:
        raise UnsupportedDimensionError(f"joint density supports n <= {MVN_MAX_DIM}")
    if not omega > 0:
        raise DomainError("omega must be positive")
    om = np.atleast_2d(np.asarray(corr, dtype=float))
    if om.shape != (n, n):
        raise DomainError("corr shape does not match u")
    x = u - np.broadcast_to(np.asarray(g, dtype=float), (n,))
    total = 0.0
    for tail in itertools.product((1.0, -1.0), repeat=n - 1):
        d = np.array((1.0,) + tail)
        om_l = om * np.outer(d, d)
        a_l = omega ** 2 * om + eta ** 2 * om_l
        sol = np.linalg.solve(a_l, np.column_stack([x, om_l]))
        c_l = eta * om_l @ sol[:, 0]
        b_l = om_l - eta ** 2 * om_l @ sol[:, 1:]
        b_l = 0.5 * (b_l + b_l.T)
        dens = math.exp(_mvn_logpdf(x, a_l))
        if dens == 0.0:
            continue
        prob, _ = mvn_cdf(c_l, b_l, rng_seed)
        total += dens * prob
    return 2.0 * total
