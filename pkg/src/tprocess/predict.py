"""Linear prediction, forecast scores and a cross-validation harness."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy import integrate, special, stats

from .correlation import (CorrelationSpec, ProcessParams, corr_matrix, cross_corr,
                          marginal_mean, marginal_variance)
from .data import Dataset
from .exceptions import DomainError, NotPositiveDefiniteError, TProcessError
from .geometry import Site, Sites

__all__ = ["PredictionResult", "ScoreReport", "CVFolds", "linear_predict", "crps",
           "crps_numeric", "scores", "cross_validate"]


@dataclass
class PredictionResult:
    """Point predictions and prediction variances.

    ``point`` and ``variance`` are floats for a single target site and
    arrays otherwise.
    """

    point: float | np.ndarray
    variance: float | np.ndarray
    family: str


@dataclass
class ScoreReport:
    """Scores averaged over cross-validation repeats.

    Attributes
    ----------
    rmse, mae, crps : float
        Means of the per-repeat scores (NaN if every repeat failed).
    records : list of dict
        One record per repeat.
    n_failed : int
    """

    rmse: float
    mae: float
    crps: float
    records: list = field(default_factory=list)
    n_failed: int = 0


@dataclass(frozen=True)
class CVFolds:
    """Random training/validation splits.

    Parameters
    ----------
    fraction : float
        Share of sites used for fitting; the rest are predicted.
    repeats : int
    """

    fraction: float = 0.8
    repeats: int = 10

    def __post_init__(self):
        if not 0 < self.fraction < 1:
            raise DomainError("fraction must lie in (0, 1)")
        if self.repeats < 1:
            raise DomainError("repeats must be positive")


def _as_targets(target, dataset: Dataset):
    """Sites and mean design of prediction targets."""
    if isinstance(target, Dataset):
        return target.sites, target.X, False
    if isinstance(target, Site):
        sites = Sites.from_sites([target], radius=dataset.sites.radius)
        single = True
    else:
        sites, single = target, False
    k = dataset.X.shape[1]
    if k != int(dataset.intercept):
        raise DomainError("targets need covariates: pass a Dataset")
    return sites, np.ones((len(sites), k)), single


def _drop_repeated_sites(dataset: Dataset):
    """Keep one copy of observations repeated at the same site.

    Without a nugget repeated sites make ``R`` singular; they add nothing
    when the values agree and contradict the model when they do not.
    """
    key = dataset.sites.coords
    if dataset.sites.times is not None:
        key = np.column_stack([key, dataset.sites.times])
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    if len(first) == len(dataset):
        return dataset
    if np.any(dataset.y != dataset.y[first][inv.ravel()]):
        raise NotPositiveDefiniteError(
            "different observations at the same site need a nugget")
    return dataset.subset(np.sort(first))


def linear_predict(dataset: Dataset, spec: CorrelationSpec, params: ProcessParams, target):
    """Best linear predictor ``mu0 + c' R^-1 (Y - mu)`` and its variance.

    ``R`` and ``c`` hold correlations of ``params.family`` (the parent
    correlation for the Gaussian family).  The variance is
    ``V (1 - c' R^-1 c)`` with ``V`` the marginal variance of the family.
    Skewed families also shift the mean by the marginal mean.

    Parameters
    ----------
    dataset : Dataset
        Observed data (no missing values).
    spec, params :
        Fitted model.
    target : Site, Sites or Dataset
        Prediction sites; a Dataset is needed when the mean has covariates.
    """
    if np.any(np.isnan(dataset.y)):
        raise DomainError("observed data contain missing values")
    if spec.nugget == 0:
        dataset = _drop_repeated_sites(dataset)
    sites, X0, single = _as_targets(target, dataset)
    if sites.kind != dataset.sites.kind:
        raise DomainError("target and data sites are of different kinds")
    beta = np.asarray(params.beta, dtype=float)
    sd = math.sqrt(params.sigma2)
    shift = sd * marginal_mean(params)
    var = params.sigma2 * marginal_variance(params)
    resid = dataset.y - dataset.X @ beta - shift
    r = corr_matrix(spec, params, dataset.sites)
    try:
        chol = np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("correlation matrix of the data is singular") from None
    c = cross_corr(spec, params, sites, dataset.sites)
    a = np.linalg.solve(chol, c.T)
    b = np.linalg.solve(chol, resid)
    point = X0 @ beta + shift + a.T @ b
    pvar = np.clip(var * (1.0 - np.einsum("ij,ij->j", a, a)), 0.0, None)
    if spec.nugget == 0:
        h, u = sites.cross(dataset.sites)
        hit = (h == 0) & (u == 0)
        rows = np.flatnonzero(hit.any(axis=1))
        point[rows] = dataset.y[hit[rows].argmax(axis=1)]
        pvar[rows] = 0.0
    if single:
        return PredictionResult(float(point[0]), float(pvar[0]), params.family)
    return PredictionResult(point, pvar, params.family)


# ------------------------------------------------------------------ CRPS

_T4_CONST = 4.0 * special.beta(0.5, 3.5) / (3.0 * special.beta(0.5, 2.0) ** 2)


def crps(family, mu, sigma, y, nu=4):
    """Closed-form CRPS of a Gaussian or Student-t(4) predictive law.

    Parameters
    ----------
    family : {'gaussian', 't4', 't'}
        ``'t'`` is accepted only with ``nu == 4``.
    mu, sigma : float or ndarray
        Location and scale (``sigma`` is the t scale, not the standard
        deviation).
    y : float or ndarray
        Verifying observation.
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(~(sigma > 0)):
        raise DomainError("sigma must be positive")
    z = (np.asarray(y, dtype=float) - mu) / sigma
    if family == "gaussian":
        out = sigma * (z * (2 * special.ndtr(z) - 1) + 2 * np.exp(-0.5 * z * z)
                       / math.sqrt(2 * math.pi) - 1 / math.sqrt(math.pi))
    elif family in ("t4", "t"):
        if family == "t" and nu != 4:
            raise DomainError(f"closed-form t CRPS needs nu = 4 (got {nu}); "
                              "use crps_numeric")
        out = sigma * (z * (2 * stats.t.cdf(z, 4) - 1)
                       + 2 * (4 + z * z) / 3 * stats.t.pdf(z, 4) - _T4_CONST)
    else:
        raise DomainError(f"unknown CRPS family {family!r}")
    return float(out) if out.ndim == 0 else out


def crps_numeric(cdf, y, lo=-np.inf, hi=np.inf):
    """CRPS by quadrature of ``int (F(t) - 1{t >= y})^2 dt``."""
    f_lo = integrate.quad(lambda t: cdf(t) ** 2, lo, y, limit=200, epsabs=1e-12,
                          epsrel=1e-12)[0]
    f_hi = integrate.quad(lambda t: (1 - cdf(t)) ** 2, y, hi, limit=200, epsabs=1e-12,
                          epsrel=1e-12)[0]
    return f_lo + f_hi


def _crps_family(params, point, pvar, y):
    """CRPS of the marginal predictive law implied by the linear predictor."""
    sd = np.sqrt(pvar)
    if params.family == "gaussian":
        return crps("gaussian", point, sd, y)
    if params.family == "t":
        nu = params.nu
        scale = sd * math.sqrt((nu - 2) / nu)
        if nu == 4:
            return crps("t4", point, scale, y)
        return np.array([crps_numeric(lambda t, m=m, s=s: stats.t.cdf((t - m) / s, nu), v)
                         for m, s, v in zip(point, scale, y)])
    return np.array([crps_numeric(lambda t, m=m, s=s: special.ndtr((t - m) / s), v)
                     for m, s, v in zip(point, sd, y)])


def scores(y, point, params=None, variance=None):
    """RMSE, MAE and (if ``variance`` given) mean CRPS of predictions."""
    y = np.asarray(y, dtype=float)
    err = y - np.asarray(point, dtype=float)
    out = dict(rmse=float(np.sqrt(np.mean(err * err))), mae=float(np.mean(np.abs(err))),
               crps=math.nan)
    if variance is not None:
        v = np.asarray(variance, dtype=float)
        ok = v > 0
        c = np.zeros_like(y)
        if np.any(ok):
            c[ok] = _crps_family(params, np.asarray(point)[ok], v[ok], y[ok])
        c[~ok] = np.abs(err[~ok])  # degenerate predictive law
        out["crps"] = float(np.mean(c))
    return out


# ------------------------------------------------------ cross-validation

def _fit(train, spec, params, cfg, fitter):
    from . import estimate
    if fitter == "none":
        return spec, params
    if callable(fitter):
        return fitter(train, spec, params)
    if fitter == "wpl":
        r = estimate.fit_wpl(train, spec, params, cfg)
    elif fitter == "two_step":
        r = estimate.two_step_nu(train, spec, params, cfg)
    elif fitter == "ml":
        r = estimate.fit_gaussian_ml(train, spec, params, std_errors=False)
    else:
        raise DomainError(f"unknown fitter {fitter!r}")
    return r.spec, r.params


def _one_repeat(dataset, spec, params, cfg, folds, seed, rep, fitter, with_crps):
    n = len(dataset)
    n_train = int(round(folds.fraction * n))
    rec = dict(repeat=rep, n_train=n_train, n_test=n - n_train, ok=False,
               rmse=math.nan, mae=math.nan, crps=math.nan, error="")
    perm = np.random.default_rng([seed, rep]).permutation(n)
    tr, te = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    try:
        train, test = dataset.subset(tr), dataset.subset(te)
        s_hat, p_hat = _fit(train, spec, params, cfg, fitter)
        pred = linear_predict(train, s_hat, p_hat, test)
        rec.update(scores(test.y, pred.point, p_hat, pred.variance if with_crps else None))
        rec["ok"] = True
    except (TProcessError, np.linalg.LinAlgError) as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
    return rec


def cross_validate(dataset: Dataset, spec: CorrelationSpec, params_init: ProcessParams,
                   cfg=None, folds: CVFolds = CVFolds(), seed=0, *, fitter="wpl",
                   with_crps=True, n_jobs=1):
    """Repeated random-split validation of the linear predictor.

    Each repeat draws a split from ``default_rng([seed, repeat])``, refits on
    the training part and predicts the rest.

    Parameters
    ----------
    fitter : {'wpl', 'two_step', 'ml', 'none'} or callable
        How parameters are re-estimated; ``'none'`` keeps the given ones.
        A callable gets ``(train, spec, params)`` and returns ``(spec, params)``.
    cfg : WplConfig, optional
        Passed to the pairwise fitters.
    """
    from .estimate import WplConfig
    cfg = cfg or WplConfig()
    n = len(dataset)
    n_train = int(round(folds.fraction * n))
    if n_train < 2 or n - n_train < 1:
        raise DomainError("dataset too small for the requested split")
    args = (dataset, spec, params_init, cfg, folds, seed)
    if n_jobs == 1:
        recs = [_one_repeat(*args, r, fitter, with_crps) for r in range(folds.repeats)]
    else:
        recs = Parallel(n_jobs=n_jobs)(delayed(_one_repeat)(*args, r, fitter, with_crps)
                                       for r in range(folds.repeats))
    ok = [r for r in recs if r["ok"]]

    def mean(key):
        return float(np.mean([r[key] for r in ok])) if ok else math.nan

    return ScoreReport(mean("rmse"), mean("mae"), mean("crps"), recs, len(recs) - len(ok))

