"""Parent correlation models and the correlations of the derived processes.

A *parent* correlation ``rho(h)`` belongs to the underlying Gaussian
process.  The t, skew-Gaussian and skew-t processes built from it have
correlations that are explicit transforms of ``rho``; those transforms live
here together with the marginal means and variances they need.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import special

from . import _kernels as _k
from .exceptions import ConvergenceError, DomainError
from .geometry import Sites
from .specfun import DEFAULT_CONTROL

__all__ = [
    "FAMILIES", "CORR_FAMILIES", "CorrelationSpec", "ProcessParams",
    "matern", "gen_wendland", "spacetime_gw", "parent_corr", "t_corr",
    "skew_gauss_corr", "skew_t_corr", "process_corr", "corr_matrix",
    "cross_corr", "marginal_mean", "marginal_variance",
]

FAMILIES = ("gaussian", "t", "skew_gaussian", "skew_t")
CORR_FAMILIES = ("matern", "gen_wendland", "spacetime_gw")


@dataclass(frozen=True)
class CorrelationSpec:
    """Parametric parent correlation with an optional nugget.

    Parameters
    ----------
    family : {'matern', 'gen_wendland', 'spacetime_gw'}
    alpha : float
        Scale (Matern) or compact support (Wendland, spatial support of the
        space-time model).
    psi : float
        Smoothness. Matern needs ``psi > 0``; ``psi = 0`` in the Wendland
        family gives the Askey function ``(1 - h/alpha)^delta``.
    delta : float
        Wendland shape; positive definite in R^d when
        ``delta >= (d + 1)/2 + psi`` (see :meth:`validate_dimension`).
    alpha_t : float
        Temporal scale of the space-time model.
    nugget : float
        ``tau^2`` in [0, 1); off-zero lags are shrunk by ``1 - tau^2``.
    """

    family: str = "matern"
    alpha: float = 1.0
    psi: float = 0.5
    delta: float = 4.0
    alpha_t: float = 1.0
    nugget: float = 0.0

    def __post_init__(self):
        if self.family not in CORR_FAMILIES:
            raise DomainError(f"unknown correlation family {self.family!r}")
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not 0 <= self.nugget < 1:
            raise DomainError(f"nugget must lie in [0, 1), got {self.nugget}")
        if self.family == "matern" and not self.psi > 0:
            raise DomainError("Matern smoothness psi must be positive")
        if self.family == "gen_wendland":
            if not self.psi >= 0:
                raise DomainError("Wendland psi must be nonnegative")
            if not self.delta > 0:
                raise DomainError("Wendland delta must be positive")
        if self.family == "spacetime_gw" and not self.alpha_t > 0:
            raise DomainError("alpha_t must be positive")

    def validate_dimension(self, d):
        """Check the Wendland positive-definiteness condition in R^d."""
        if self.family == "gen_wendland" and self.delta < (d + 1) / 2 + self.psi:
            raise DomainError(
                f"Wendland needs delta >= (d+1)/2 + psi = {(d + 1) / 2 + self.psi} "
                f"in dimension {d}, got delta={self.delta}")
        if self.family == "spacetime_gw" and 4 < (d + 1) / 2:
            raise DomainError("space-time Wendland model is not valid in this dimension")

    @property
    def scale_names(self):
        """Names of the range parameters estimated by the fitting code."""
        return ("alpha", "alpha_t") if self.family == "spacetime_gw" else ("alpha",)

    def with_scales(self, values):
        return replace(self, **dict(zip(self.scale_names, map(float, values))))

    def scales(self):
        return tuple(getattr(self, n) for n in self.scale_names)


@dataclass(frozen=True)
class ProcessParams:
    """Marginal and regression parameters of a process.

    Parameters
    ----------
    beta : tuple of float
        Regression coefficients for the mean ``X beta``.
    sigma2 : float
        Scale parameter ``sigma^2``.
    lam : float
        ``1/nu`` in (0, 1/2) for the t and skew-t families; ignored otherwise.
    eta : float
        Skewness, ``|eta| < 1``; ignored for symmetric families.
    family : {'gaussian', 't', 'skew_gaussian', 'skew_t'}
    omega : float, optional
        Scale of the symmetric part of the skew construction; defaults to
        ``sqrt(1 - eta^2)``.
    """

    beta: tuple = (0.0,)
    sigma2: float = 1.0
    lam: float = 0.0
    eta: float = 0.0
    family: str = "gaussian"
    omega: float | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in np.atleast_1d(self.beta)))
        if self.family not in FAMILIES:
            raise DomainError(f"unknown process family {self.family!r}")
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise DomainError(f"sigma2 must be positive, got {self.sigma2}")
        if self.family in ("t", "skew_t") and not 0 < self.lam < 0.5:
            raise DomainError(f"lam = 1/nu must lie in (0, 1/2), got {self.lam}")
        if self.family in ("skew_gaussian", "skew_t"):
            if self.omega is None and not abs(self.eta) < 1:
                raise DomainError(f"|eta| must be below 1, got {self.eta}")
            if self.omega is not None and not self.omega > 0:
                raise DomainError("omega must be positive")

    @property
    def nu(self):
        return 1.0 / self.lam if self.lam > 0 else math.inf

    @property
    def omega2(self):
        return 1.0 - self.eta ** 2 if self.omega is None else self.omega ** 2

    @classmethod
    def t(cls, beta, sigma2, nu, **kw):
        return cls(beta=beta, sigma2=sigma2, lam=1.0 / nu, family="t", **kw)


# ---------------------------------------------------------------- parents

def matern(h, alpha, psi):
    """Matern correlation ``2^(1-psi)/Gamma(psi) x^psi K_psi(x)``, x = h/alpha."""
    x = np.asarray(h, dtype=float) / alpha
    out = np.ones_like(x)
    pos = x > 0
    if psi == 0.5:
        out[pos] = np.exp(-x[pos])
        return out
    xp = x[pos]
    # kve keeps the exponential factor apart so nothing overflows
    lv = ((1.0 - psi) * math.log(2.0) - math.lgamma(psi) + psi * np.log(xp)
          + np.log(special.kve(psi, xp)) - xp)
    out[pos] = np.minimum(np.exp(lv), 1.0)
    return out


@lru_cache(maxsize=64)
def _wendland_const(psi, delta):
    return math.exp(math.lgamma(psi) + math.lgamma(2 * psi + delta + 1)
                    - math.lgamma(2 * psi) - math.lgamma(psi + delta + 1)
                    - (delta + 1) * math.log(2.0))


def gen_wendland(h, alpha, psi, delta, ctrl=DEFAULT_CONTROL):
    """Generalized Wendland correlation, zero beyond ``h >= alpha``.

    For ``psi > 0`` the defining Beta-normalised integral equals

        K (1 - x^2)^(psi+delta) 2F1(delta/2, (delta+1)/2; psi+delta+1; 1-x^2)

    with ``x = h/alpha`` and
    ``K = Gamma(psi) Gamma(2psi+delta+1) / (Gamma(2psi) Gamma(psi+delta+1) 2^(delta+1))``.
    """
    x = np.asarray(h, dtype=float) / alpha
    out = np.zeros_like(x)
    inside = x < 1.0
    xi = x[inside]
    if psi == 0:
        out[inside] = (1.0 - xi) ** delta
        return out
    y = np.ascontiguousarray(1.0 - xi * xi).ravel()
    f = np.empty_like(y)
    st = np.empty(y.shape, dtype=np.int64)
    _k.hyp2f1_array(delta / 2.0, (delta + 1.0) / 2.0, psi + delta + 1.0, y,
                    ctrl.tolerance, ctrl.max_terms, f, st)
    if np.any(st != 0):
        raise ConvergenceError("Wendland hypergeometric series did not converge")
    out[inside] = _wendland_const(float(psi), float(delta)) * y ** (psi + delta) * f
    out[x == 0] = 1.0
    return np.minimum(out, 1.0)


def spacetime_gw(h, u, alpha_s, alpha_t):
    """Nonseparable space-time Wendland model with ``gamma(u) = 1 + |u|``."""
    h = np.asarray(h, dtype=float)
    g = 1.0 + np.abs(np.asarray(u, dtype=float)) / alpha_t
    x = h / (alpha_s * np.sqrt(g))
    return np.where(x < 1.0, np.clip(1.0 - x, 0.0, None) ** 4, 0.0) / g ** 2.5


def parent_corr(spec: CorrelationSpec, h, u=0.0):
    """Parent correlation at spatial lag ``h`` (and temporal lag ``u``).

    The nugget multiplies every non-zero lag by ``1 - tau^2``.
    """
    h = np.asarray(h, dtype=float)
    u = np.broadcast_to(np.asarray(u, dtype=float), h.shape)
    if np.any(h < 0):
        raise DomainError("spatial lags must be nonnegative")
    if spec.family == "matern":
        rho = matern(h, spec.alpha, spec.psi)
    elif spec.family == "gen_wendland":
        rho = gen_wendland(h, spec.alpha, spec.psi, spec.delta)
    else:
        rho = spacetime_gw(h, u, spec.alpha, spec.alpha_t)
    if spec.nugget > 0:
        zero = (h == 0) & (u == 0)
        rho = np.where(zero, 1.0, (1.0 - spec.nugget) * rho)
    return rho if rho.ndim else float(rho)


# ------------------------------------------------------ derived correlations

@lru_cache(maxsize=256)
def _t_factor(nu):
    return math.exp(math.log(nu - 2.0) + 2.0 * math.lgamma((nu - 1.0) / 2.0)
                    - math.log(2.0) - 2.0 * math.lgamma(nu / 2.0))


def _hyp_half(nu, rho2, ctrl=DEFAULT_CONTROL):
    """2F1(1/2, 1/2; nu/2; rho^2) on an array."""
    x = np.ascontiguousarray(rho2, dtype=float).ravel()
    out = np.empty_like(x)
    st = np.empty(x.shape, dtype=np.int64)
    _k.hyp2f1_array(0.5, 0.5, nu / 2.0, x, ctrl.tolerance, ctrl.max_terms, out, st)
    if np.any(st != 0):
        raise ConvergenceError("2F1(1/2,1/2;nu/2;rho^2) did not converge")
    return out.reshape(np.shape(rho2))


def _check_nu(nu):
    if not nu > 2:
        raise DomainError(f"nu must exceed 2, got {nu}")


def _check_rho(rho):
    if np.any(np.abs(rho) > 1.0):
        raise DomainError("correlations must lie in [-1, 1]")


def t_corr(rho, nu):
    """Correlation of the t process built on a parent with correlation ``rho``.

    ``a(nu) * rho * 2F1(1/2, 1/2; nu/2; rho^2)`` with
    ``a(nu) = (nu-2) Gamma^2((nu-1)/2) / (2 Gamma^2(nu/2))``.
    """
    _check_nu(nu)
    r = np.asarray(rho, dtype=float)
    _check_rho(r)
    out = _t_factor(float(nu)) * r * _hyp_half(float(nu), r * r)
    # the Gauss sum at |rho| = 1 is exact in theory; remove rounding drift
    out = np.where(np.abs(r) == 1.0, r, np.clip(out, -1.0, 1.0))
    return out if out.ndim else float(out)


def skew_gauss_corr(rho, eta, omega=None):
    """Correlation of the skew-Gaussian process.

    ``omega`` defaults to ``sqrt(1 - eta^2)``.  Only ``eta^2`` enters, so the
    result is exactly symmetric in the sign of ``eta``.
    """
    e2 = float(eta) ** 2
    w2 = 1.0 - e2 if omega is None else float(omega) ** 2
    if not w2 > 0:
        raise DomainError("omega^2 must be positive (|eta| < 1 by default)")
    r = np.asarray(rho, dtype=float)
    _check_rho(r)
    var_u = w2 + e2 * (1.0 - 2.0 / math.pi)
    # arcsin term: E|X1(s)||X1(s')| - 2/pi for a standard Gaussian pair
    fold = (2.0 / math.pi) * (np.sqrt(1.0 - r * r) + r * np.arcsin(r) - 1.0)
    out = (e2 * fold + w2 * r) / var_u
    return out if out.ndim else float(out)


def _skew_t_parts(nu, e2, w2):
    # E[W^(-1/2)]^2 and the marginal second moment pieces
    k = math.exp(math.log(nu / 2.0) + 2.0 * math.lgamma((nu - 1.0) / 2.0)
                 - 2.0 * math.lgamma(nu / 2.0))
    m2 = 2.0 * e2 / math.pi
    var = nu / (nu - 2.0) * (e2 + w2) - k * m2
    return k, m2, var


def skew_t_corr(rho, nu, eta, omega=None):
    """Correlation of the skew-t process.

    ``E[R_i R_j] E[U_i U_j] - E[R]^2 E[U]^2`` divided by the marginal
    variance, with ``R = W^(-1/2)``.  The default ``omega = sqrt(1 - eta^2)``
    matches the simulation construction; pass ``omega=1`` for the
    unit-weight variant.
    """
    _check_nu(nu)
    e2 = float(eta) ** 2
    w2 = 1.0 - e2 if omega is None else float(omega) ** 2
    if not w2 > 0:
        raise DomainError("omega^2 must be positive (|eta| < 1 by default)")
    r = np.asarray(rho, dtype=float)
    k, m2, var = _skew_t_parts(float(nu), e2, w2)
    var_u = w2 + e2 * (1.0 - 2.0 / math.pi)
    rho_u = np.asarray(skew_gauss_corr(r, eta, omega))
    out = k * (_hyp_half(float(nu), r * r) * (var_u * rho_u + m2) - m2) / var
    out = np.where(r == 1.0, 1.0, np.clip(out, -1.0, 1.0))
    return out if out.ndim else float(out)


def process_corr(rho, params: ProcessParams):
    """Map parent correlations to the correlation of ``params.family``."""
    fam = params.family
    if fam == "gaussian":
        return rho
    if fam == "t":
        return t_corr(rho, params.nu)
    omega = params.omega
    if fam == "skew_gaussian":
        return skew_gauss_corr(rho, params.eta, omega)
    return skew_t_corr(rho, params.nu, params.eta, omega)


def marginal_mean(params: ProcessParams):
    """Mean of the standardised process (zero for symmetric families)."""
    if params.family == "skew_gaussian":
        return params.eta * math.sqrt(2.0 / math.pi)
    if params.family == "skew_t":
        nu = params.nu
        return (math.sqrt(nu / math.pi) * params.eta
                * math.exp(math.lgamma((nu - 1) / 2) - math.lgamma(nu / 2)))
    return 0.0


def marginal_variance(params: ProcessParams):
    """Variance of the standardised process (multiply by ``sigma2``)."""
    fam = params.family
    if fam == "gaussian":
        return 1.0
    if fam == "t":
        return params.nu / (params.nu - 2.0)
    e2, w2 = params.eta ** 2, params.omega2
    if fam == "skew_gaussian":
        return w2 + e2 * (1.0 - 2.0 / math.pi)
    return _skew_t_parts(params.nu, e2, w2)[2]


def cross_corr(spec: CorrelationSpec, params: ProcessParams, a: Sites, b: Sites):
    """Process correlations between two site collections."""
    h, u = a.cross(b)
    return np.asarray(process_corr(parent_corr(spec, h, u), params))


def corr_matrix(spec: CorrelationSpec, params: ProcessParams, sites: Sites):
    """Correlation matrix of the process at ``sites`` (unit diagonal)."""
    n = len(sites)
    i, j = np.triu_indices(n, k=1)
    h, u = sites.cross(sites)
    rho = parent_corr(spec, h[i, j], u[i, j])
    r = np.eye(n)
    nz = np.asarray(rho) != 0
    vals = np.zeros(i.shape[0])
    if np.any(nz):
        vals[nz] = process_corr(np.asarray(rho)[nz], params)
    r[i, j] = vals
    r[j, i] = vals
    return r
