"""scikit-learn style wrappers around the fitting and prediction routines.

The feature matrix holds the coordinates first (``n_coords`` columns, plus a
time column for space-time data) followed by covariates.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .correlation import CorrelationSpec, ProcessParams
from .data import Dataset
from .estimate import WplConfig, fit_gaussian_ml, fit_wpl, two_step_nu
from .exceptions import ConfigError
from .geometry import EARTH_RADIUS_KM, Sites
from .predict import linear_predict

__all__ = ["TProcessRegressor", "GaussianRFRegressor"]


class _ProcessRegressor(RegressorMixin, BaseEstimator):
    def _split(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ConfigError("X must be two-dimensional")
        nc = self.n_coords + (self.coord_kind == "spacetime")
        if X.shape[1] < nc:
            raise ConfigError(f"X needs at least {nc} coordinate columns")
        times = X[:, self.n_coords] if self.coord_kind == "spacetime" else None
        sites = Sites(X[:, :self.n_coords], self.coord_kind, times, self.radius)
        yv = np.full(X.shape[0], math.nan) if y is None else np.asarray(y, dtype=float)
        return Dataset(sites, X[:, nc:], yv, self.fit_intercept)

    def _spec(self):
        return CorrelationSpec(self.corr_family, alpha=self.alpha, psi=self.psi,
                               delta=self.delta, alpha_t=self.alpha_t, nugget=self.nugget)

    def _beta0(self, ds):
        k = ds.X.shape[1]
        if k == 0:
            return ()
        return tuple(np.linalg.lstsq(ds.X, ds.y, rcond=None)[0])

    def _cfg(self, fixed_nu=None):
        return WplConfig(cutoff=self.cutoff, cutoff_t=self.cutoff_t, max_evals=self.max_evals,
                         x_tol=self.x_tol, f_tol=self.f_tol, fixed_nu=fixed_nu)

    def predict(self, X, return_std=False):
        """Linear predictions at the sites in ``X``."""
        check_is_fitted(self, "fit_result_")
        target = self._split(X)
        r = linear_predict(self.train_, self.spec_, self.params_, target)
        if return_std:
            return r.point, np.sqrt(r.variance)
        return r.point


class TProcessRegressor(_ProcessRegressor):
    """Student-t process fitted by weighted pairwise likelihood.

    Parameters
    ----------
    nu : float
        Degrees of freedom: the starting value, or the fixed value when
        ``nu_strategy='fixed'``.
    nu_strategy : {'free', 'two_step', 'fixed'}
        Estimate ``1/nu`` continuously, round it and refit, or hold it.
    corr_family, alpha, psi, delta, alpha_t, nugget :
        Parent correlation and starting range parameters.
    sigma2 : float
        Starting scale.
    cutoff, cutoff_t : float
        Cut-off distances of the pair weights.
    coord_kind : {'euclidean', 'spherical', 'spacetime'}
    n_coords : int
        Number of spatial coordinate columns at the start of ``X``.
    fit_intercept : bool
    max_evals, x_tol, f_tol :
        Nelder-Mead settings.
    """

    def __init__(self, nu=6.0, nu_strategy="two_step", corr_family="gen_wendland",
                 alpha=0.2, psi=0.0, delta=4.0, alpha_t=1.0, nugget=0.0, sigma2=1.0,
                 cutoff=math.inf, cutoff_t=None, coord_kind="euclidean", n_coords=2,
                 radius=EARTH_RADIUS_KM, fit_intercept=True, max_evals=2000, x_tol=1e-4,
                 f_tol=1e-6):
        self.nu = nu
        self.nu_strategy = nu_strategy
        self.corr_family = corr_family
        self.alpha = alpha
        self.psi = psi
        self.delta = delta
        self.alpha_t = alpha_t
        self.nugget = nugget
        self.sigma2 = sigma2
        self.cutoff = cutoff
        self.cutoff_t = cutoff_t
        self.coord_kind = coord_kind
        self.n_coords = n_coords
        self.radius = radius
        self.fit_intercept = fit_intercept
        self.max_evals = max_evals
        self.x_tol = x_tol
        self.f_tol = f_tol

    def fit(self, X, y):
        ds = self._split(X, y)
        params = ProcessParams(beta=self._beta0(ds), sigma2=self.sigma2, lam=1.0 / self.nu,
                               family="t")
        if self.nu_strategy == "fixed":
            res = fit_wpl(ds, self._spec(), params, self._cfg(int(round(self.nu))))
        elif self.nu_strategy == "two_step":
            res = two_step_nu(ds, self._spec(), params, self._cfg())
        elif self.nu_strategy == "free":
            res = fit_wpl(ds, self._spec(), params, self._cfg())
        else:
            raise ConfigError(f"unknown nu_strategy {self.nu_strategy!r}")
        self.fit_result_ = res
        self.spec_, self.params_, self.train_ = res.spec, res.params, ds
        return self


class GaussianRFRegressor(_ProcessRegressor):
    """Gaussian random field fitted by full or pairwise likelihood.

    Parameters
    ----------
    method : {'ml', 'wpl'}
    Other parameters as in :class:`TProcessRegressor`.
    """

    def __init__(self, method="ml", corr_family="gen_wendland", alpha=0.2, psi=0.0,
                 delta=4.0, alpha_t=1.0, nugget=0.0, sigma2=1.0, cutoff=math.inf,
                 cutoff_t=None, coord_kind="euclidean", n_coords=2, radius=EARTH_RADIUS_KM,
                 fit_intercept=True, max_evals=2000, x_tol=1e-4, f_tol=1e-6):
        self.method = method
        self.corr_family = corr_family
        self.alpha = alpha
        self.psi = psi
        self.delta = delta
        self.alpha_t = alpha_t
        self.nugget = nugget
        self.sigma2 = sigma2
        self.cutoff = cutoff
        self.cutoff_t = cutoff_t
        self.coord_kind = coord_kind
        self.n_coords = n_coords
        self.radius = radius
        self.fit_intercept = fit_intercept
        self.max_evals = max_evals
        self.x_tol = x_tol
        self.f_tol = f_tol

    def fit(self, X, y):
        ds = self._split(X, y)
        params = ProcessParams(beta=self._beta0(ds), sigma2=self.sigma2, family="gaussian")
        if self.method == "ml":
            res = fit_gaussian_ml(ds, self._spec(), params, max_evals=self.max_evals,
                                  x_tol=self.x_tol, f_tol=self.f_tol)
        elif self.method == "wpl":
            res = fit_wpl(ds, self._spec(), params, self._cfg())
        else:
            raise ConfigError(f"unknown method {self.method!r}")
        self.fit_result_ = res
        self.spec_, self.params_, self.train_ = res.spec, res.params, ds
        return self
