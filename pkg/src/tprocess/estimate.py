"""Weighted pairwise likelihood and Gaussian maximum likelihood fitting.

Parameters are optimised by Nelder-Mead on unconstrained coordinates:
``log sigma2``, ``log`` of each range parameter, ``beta`` as is, and a
scaled logit of ``lam = 1/nu`` on ``(lam_min, 1/2)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed
from scipy import optimize
from scipy.spatial import cKDTree
from scipy.special import expit, logit

from .correlation import CorrelationSpec, ProcessParams, parent_corr
from .data import Dataset
from .geometry import great_circle
from .density import pair_logpdf_std
from .exceptions import ConvergenceError, DomainError, ObjectiveError, TProcessError
from .simulate import SimRequest, parent_cholesky, simulate
from .specfun import DEFAULT_CONTROL, SeriesControl

__all__ = [
    "WplConfig", "FitResult", "GodambeResult", "pair_index", "pl_objective",
    "fit_wpl", "select_nu", "two_step_nu", "bootstrap_godambe", "plic_blic",
    "fit_gaussian_ml", "numerical_hessian", "PairIndex",
]

# relative slack on the cut-off so lattice neighbours at exactly d survive rounding
_CUTOFF_SLACK = 1e-9
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class WplConfig:
    """Settings of the weighted pairwise likelihood fit.

    Parameters
    ----------
    cutoff : float
        Pairs farther apart than this get weight zero.
    cutoff_t : float, optional
        Temporal cut-off for space-time data; both must hold.
    ctrl : SeriesControl
    max_evals, x_tol, f_tol :
        Nelder-Mead budget and tolerances (``xatol``, ``fatol``).
    restarts : int
        Extra Nelder-Mead runs started from the best point found.
    fixed_nu : int, optional
        Hold ``nu`` fixed instead of estimating ``lam``.
    lam_min : float
        Lower bound of ``lam`` while it is estimated.
    n_jobs : int
        Threads used to evaluate pair densities.
    """

    cutoff: float = math.inf
    cutoff_t: float | None = None
    ctrl: SeriesControl = DEFAULT_CONTROL
    max_evals: int = 2000
    x_tol: float = 1e-4
    f_tol: float = 1e-6
    restarts: int = 1
    fixed_nu: int | None = None
    lam_min: float = 0.01
    n_jobs: int = 1

    def __post_init__(self):
        if not self.cutoff > 0:
            raise DomainError("cutoff must be positive")
        if self.cutoff_t is not None and not self.cutoff_t > 0:
            raise DomainError("cutoff_t must be positive")
        if not (self.x_tol > 0 and self.f_tol > 0 and self.max_evals >= 1):
            raise DomainError("optimizer tolerances must be positive")
        if not 0 < self.lam_min < 0.5:
            raise DomainError("lam_min must lie in (0, 1/2)")
        if self.fixed_nu is not None and not self.fixed_nu > 2:
            raise DomainError("fixed_nu must exceed 2")


@dataclass
class FitResult:
    """Outcome of a fit.

    Attributes
    ----------
    params : ProcessParams
    spec : CorrelationSpec
    pl_value : float
        Maximised pairwise (or full) log-likelihood.
    names : tuple of str
        Names of the estimated parameters, in the order of :meth:`theta`.
    std_errors : dict, optional
    plic, blic : float, optional
    nu_selected : int, optional
    convergence : dict
        Optimizer diagnostics and the starting point.
    """

    params: ProcessParams
    spec: CorrelationSpec
    pl_value: float
    names: tuple
    method: str = "wpl"
    std_errors: dict | None = None
    plic: float | None = None
    blic: float | None = None
    nu_selected: int | None = None
    n_pairs: int = 0
    convergence: dict = field(default_factory=dict)

    def theta(self):
        """Estimated parameters in natural units, as a dict."""
        v = _Layout.from_fit(self).natural(self.params, self.spec)
        return dict(zip(self.names, map(float, v)))


@dataclass
class GodambeResult:
    """Parametric-bootstrap Godambe information and derived quantities."""

    names: tuple
    std_errors: dict
    godambe_inv: np.ndarray
    hessian: np.ndarray
    variability: np.ndarray
    estimates: np.ndarray
    n_failed: int
    plic: float
    blic: float


class _Layout:
    """Map between ProcessParams/CorrelationSpec and a flat parameter vector."""

    def __init__(self, family, k, spec: CorrelationSpec, free_lam, lam_min=0.01):
        self.family = family
        self.k = k
        self.spec = spec
        self.free_lam = free_lam
        self.lam_min = lam_min
        self.scale_names = spec.scale_names
        names = [f"beta{i}" for i in range(k)] + ["sigma2"] + list(self.scale_names)
        if free_lam:
            names.append("lam")
        self.names = tuple(names)

    @classmethod
    def from_fit(cls, fit: FitResult):
        return cls(fit.params.family, len(fit.params.beta), fit.spec, "lam" in fit.names)

    def natural(self, params, spec):
        v = list(params.beta) + [params.sigma2] + list(spec.scales())
        if self.free_lam:
            v.append(params.lam)
        return np.array(v, dtype=float)

    def unpack_natural(self, v, template: ProcessParams):
        k = self.k
        ns = len(self.scale_names)
        beta = tuple(v[:k])
        sigma2 = float(v[k])
        spec = self.spec.with_scales(v[k + 1:k + 1 + ns])
        lam = float(v[k + 1 + ns]) if self.free_lam else template.lam
        return replace(template, beta=beta, sigma2=sigma2, lam=lam), spec

    def to_free(self, params, spec):
        v = self.natural(params, spec)
        k = self.k
        ns = len(self.scale_names)
        v[k:k + 1 + ns] = np.log(v[k:k + 1 + ns])
        if self.free_lam:
            frac = (params.lam - self.lam_min) / (0.5 - self.lam_min)
            v[-1] = logit(min(max(frac, 1e-6), 1 - 1e-6))
        return v

    def from_free(self, x, template):
        v = np.array(x, dtype=float)
        k = self.k
        ns = len(self.scale_names)
        v[k:k + 1 + ns] = np.exp(v[k:k + 1 + ns])
        if self.free_lam:
            v[-1] = self.lam_min + (0.5 - self.lam_min) * expit(v[-1])
        return self.unpack_natural(v, template)

    def simplex_steps(self, params):
        ns = len(self.scale_names)
        scale = math.sqrt(params.sigma2)
        steps = [0.1 * max(abs(b), scale) for b in params.beta]
        steps += [0.2] * (1 + ns)
        if self.free_lam:
            steps.append(0.5)
        return np.array(steps)


# ------------------------------------------------------------------ pairs

@dataclass(frozen=True)
class PairIndex:
    i: np.ndarray
    j: np.ndarray
    h: np.ndarray
    u: np.ndarray

    def __len__(self):
        return self.i.shape[0]


def _sort_pairs(p):
    if p.shape[0] == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    p = np.sort(p, axis=1)
    order = np.lexsort((p[:, 1], p[:, 0]))
    return p[order, 0].astype(np.int64), p[order, 1].astype(np.int64)


def pair_index(sites, cutoff=math.inf, cutoff_t=None):
    """Pairs ``i < j`` with weight one under the cut-off rule.

    A pair is kept when its spatial lag is at most ``cutoff`` (and its
    temporal lag at most ``cutoff_t`` when given).  Pairs come out sorted,
    so the likelihood is summed in a fixed order.
    """
    n = len(sites)
    dmax = cutoff * (1.0 + _CUTOFF_SLACK)
    if not math.isfinite(cutoff) or n < 2:
        i, j = np.triu_indices(n, k=1)
    else:
        if sites.kind == "spherical":
            lon, lat = np.radians(sites.coords[:, 0]), np.radians(sites.coords[:, 1])
            pts = np.column_stack([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon),
                                   np.sin(lat)])
            ang = min(dmax / sites.radius, math.pi)
            r = 2.0 * math.sin(ang / 2.0) * (1 + 1e-9) + 1e-12
        else:
            pts = sites.coords
            r = dmax * (1 + 1e-9)
        i, j = _sort_pairs(cKDTree(pts).query_pairs(r, output_type="ndarray"))
    if sites.kind == "spherical":
        a, b = sites.coords[i], sites.coords[j]
        h = great_circle(a[:, 0], a[:, 1], b[:, 0], b[:, 1], radius=sites.radius)
        h = np.where(np.all(a == b, axis=1), 0.0, h)
    else:
        d = sites.coords[i] - sites.coords[j]
        h = np.sqrt(np.einsum("ij,ij->i", d, d))
    u = (np.abs(sites.times[i] - sites.times[j]) if sites.kind == "spacetime"
         else np.zeros_like(h))
    keep = h <= dmax
    if cutoff_t is not None:
        keep &= u <= cutoff_t * (1.0 + _CUTOFF_SLACK)
    return PairIndex(i[keep], j[keep], h[keep], u[keep])


def _pair_logpdf(zi, zj, rho, nu, ctrl, n_jobs):
    if n_jobs <= 1 or zi.shape[0] < 2048:
        return pair_logpdf_std(zi, zj, rho, nu, ctrl)
    chunks = np.array_split(np.arange(zi.shape[0]), n_jobs)
    with ThreadPoolExecutor(n_jobs) as ex:
        parts = list(ex.map(lambda c: pair_logpdf_std(zi[c], zj[c], rho[c], nu, ctrl), chunks))
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def _pair_terms(dataset: Dataset, spec, params: ProcessParams, pairs: PairIndex,
                ctrl, n_jobs=1):
    mu = dataset.X @ np.asarray(params.beta) if len(params.beta) else np.zeros(len(dataset))
    sd = math.sqrt(params.sigma2)
    z = (dataset.y - mu) / sd
    rho = np.asarray(parent_corr(spec, pairs.h, pairs.u), dtype=float)
    zi, zj = z[pairs.i], z[pairs.j]
    if np.any(~(np.abs(rho) < 1)):
        k = int(np.flatnonzero(~(np.abs(rho) < 1))[0])
        raise ObjectiveError("pair with |rho| >= 1 (coincident sites?)",
                             pair=(int(pairs.i[k]), int(pairs.j[k])))
    if params.family == "gaussian":
        q = 1.0 - rho * rho
        lp = -_LOG_2PI - 0.5 * np.log(q) - (zi * zi - 2 * rho * zi * zj + zj * zj) / (2 * q)
    elif params.family == "t":
        lp, st = _pair_logpdf(np.ascontiguousarray(zi), np.ascontiguousarray(zj), rho,
                              params.nu, ctrl, n_jobs)
        if np.any(st != 0):
            k = int(np.flatnonzero(st != 0)[0])
            raise ObjectiveError(f"pair density failed (status {int(st[k])})",
                                 pair=(int(pairs.i[k]), int(pairs.j[k])))
    else:
        raise DomainError(f"pairwise likelihood not available for family {params.family!r}")
    return lp - math.log(params.sigma2)


def pl_objective(dataset: Dataset, spec: CorrelationSpec, params: ProcessParams,
                 cfg: WplConfig = WplConfig(), pairs: PairIndex | None = None):
    """Weighted pairwise log-likelihood.

    Sum over pairs within the cut-off of the log bivariate density, added up
    with :func:`math.fsum` in pair order, so the value does not depend on
    how the pair terms were computed.
    """
    if pairs is None:
        pairs = pair_index(dataset.sites, cfg.cutoff, cfg.cutoff_t)
    if len(pairs) == 0:
        return 0.0
    return math.fsum(_pair_terms(dataset, spec, params, pairs, cfg.ctrl, cfg.n_jobs))


# -------------------------------------------------------------- optimiser

def _nelder_mead(fun, x0, steps, cfg):
    """Nelder-Mead with restarts; returns (x, f, diagnostics)."""
    x = np.asarray(x0, dtype=float)
    nfev = 0
    nit = 0
    success = False
    message = ""
    f = math.inf
    for attempt in range(1 + cfg.restarts):
        simplex = np.vstack([x] + [x + np.eye(len(x))[i] * steps[i] for i in range(len(x))])
        res = optimize.minimize(
            fun, x, method="Nelder-Mead",
            options=dict(maxfev=max(cfg.max_evals - nfev, 1), xatol=cfg.x_tol,
                         fatol=cfg.f_tol, initial_simplex=simplex))
        nfev += res.nfev
        nit += res.nit
        improved = res.fun < f - cfg.f_tol
        if res.fun <= f:
            x, f = res.x, float(res.fun)
        success = bool(res.success)
        message = str(res.message)
        if not improved and attempt > 0 or nfev >= cfg.max_evals:
            break
        steps = steps * 0.5
    return x, f, dict(success=success and math.isfinite(f), nfev=nfev, nit=nit,
                      message=message)


def _check_start(dataset, params, spec):
    if len(params.beta) != dataset.X.shape[1]:
        raise DomainError(f"beta has {len(params.beta)} entries but the design has "
                          f"{dataset.X.shape[1]} columns")
    spec.validate_dimension(dataset.sites.dim)


def fit_wpl(dataset: Dataset, spec_init: CorrelationSpec, params_init: ProcessParams,
            cfg: WplConfig = WplConfig()):
    """Maximise the weighted pairwise likelihood.

    ``params_init.family`` selects the pair density (``'t'`` or
    ``'gaussian'``).  For the t family ``lam`` is estimated unless
    ``cfg.fixed_nu`` is set.  The correlation family, smoothness and nugget
    stay at their values in ``spec_init``; only range parameters move.

    Returns
    -------
    FitResult
        ``convergence['success']`` is False when the budget ran out; the
        best point found is returned regardless.
    """
    _check_start(dataset, params_init, spec_init)
    fam = params_init.family
    if fam not in ("t", "gaussian"):
        raise DomainError(f"wpl fitting supports the t and gaussian families, not {fam!r}")
    free_lam = fam == "t" and cfg.fixed_nu is None
    if fam == "t" and cfg.fixed_nu is not None:
        params_init = replace(params_init, lam=1.0 / cfg.fixed_nu)
    elif free_lam:
        lam0 = min(max(params_init.lam, cfg.lam_min + 1e-3), 0.5 - 1e-3)
        params_init = replace(params_init, lam=lam0)
    lay = _Layout(fam, len(params_init.beta), spec_init, free_lam, cfg.lam_min)
    pairs = pair_index(dataset.sites, cfg.cutoff, cfg.cutoff_t)

    def negpl(x):
        try:
            p, s = lay.from_free(x, params_init)
            v = pl_objective(dataset, s, p, cfg, pairs)
        except (TProcessError, FloatingPointError, OverflowError):
            return math.inf
        return -v if math.isfinite(v) else math.inf

    x0 = lay.to_free(params_init, spec_init)
    x, f, diag = _nelder_mead(negpl, x0, lay.simplex_steps(params_init), cfg)
    params, spec = lay.from_free(x, params_init)
    diag["start"] = dict(zip(lay.names, lay.natural(params_init, spec_init).tolist()))
    return FitResult(params, spec, -f, lay.names, method=f"wpl-{fam}",
                     nu_selected=cfg.fixed_nu, n_pairs=len(pairs), convergence=diag)


def select_nu(lam):
    """Integer degrees of freedom from an estimate of ``1/nu``.

    ``1/lam`` is rounded to the nearest integer, and anything below 2.5
    becomes 3.
    """
    inv = 1.0 / lam
    return 3 if inv < 2.5 else int(math.floor(inv + 0.5))


def two_step_nu(dataset: Dataset, spec_init: CorrelationSpec, params_init: ProcessParams,
                cfg: WplConfig = WplConfig()):
    """Estimate ``lam`` freely, fix ``nu`` at its rounded inverse, then refit.

    With ``cfg.fixed_nu`` set the first step is skipped.
    """
    if cfg.fixed_nu is not None:
        return fit_wpl(dataset, spec_init, params_init, cfg)
    step1 = fit_wpl(dataset, spec_init, params_init, cfg)
    nu = select_nu(step1.params.lam)
    step2 = fit_wpl(dataset, step1.spec, replace(step1.params, lam=1.0 / nu),
                    replace(cfg, fixed_nu=nu))
    step2.nu_selected = nu
    step2.convergence["step1"] = dict(lam=step1.params.lam, pl_value=step1.pl_value,
                                      **{k: v for k, v in step1.convergence.items()
                                         if k != "start"})
    return step2


# ----------------------------------------------------------- information

def numerical_hessian(fun, x, rel_step=1e-4, abs_step=1e-6):
    """Central-difference Hessian with one Richardson refinement."""
    x = np.asarray(x, dtype=float)
    p = x.shape[0]
    h0 = np.maximum(rel_step * np.abs(x), abs_step)
    f0 = fun(x)

    def hess(h):
        out = np.empty((p, p))
        e = np.eye(p)
        fp = [fun(x + h[a] * e[a]) for a in range(p)]
        fm = [fun(x - h[a] * e[a]) for a in range(p)]
        for a in range(p):
            out[a, a] = (fp[a] - 2 * f0 + fm[a]) / h[a] ** 2
            for b in range(a + 1, p):
                da, db = h[a] * e[a], h[b] * e[b]
                v = (fun(x + da + db) - fun(x + da - db) - fun(x - da + db)
                     + fun(x - da - db)) / (4 * h[a] * h[b])
                out[a, b] = out[b, a] = v
        return out

    return (4.0 * hess(h0 / 2) - hess(h0)) / 3.0


def plic_blic(fit, hessian, godambe_inv, n):
    """Composite-likelihood information criteria.

    ``PLIC = -2 pl + 2 tr(H G^-1)`` and ``BLIC = -2 pl + log(n) tr(H G^-1)``.

    Parameters
    ----------
    fit : FitResult or float
        The fit, or directly its maximised pairwise log-likelihood.
    hessian, godambe_inv : array_like, shape (p, p)
    n : int
        Number of observations.
    """
    pl_value = fit.pl_value if isinstance(fit, FitResult) else float(fit)
    h = np.atleast_2d(np.asarray(hessian, dtype=float))
    g = np.atleast_2d(np.asarray(godambe_inv, dtype=float))
    if h.shape != g.shape or h.shape[0] != h.shape[1]:
        raise DomainError("hessian and godambe_inv must be square and conformable")
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(g))):
        raise DomainError("information matrices must be finite")
    if not n >= 1:
        raise DomainError("n must be positive")
    tr = float(np.trace(h @ g))
    return -2.0 * pl_value + 2.0 * tr, -2.0 * pl_value + math.log(n) * tr


def _refit(dataset, y, fit, cfg):
    try:
        r = fit_wpl(dataset.with_y(y), fit.spec, fit.params, cfg)
    except TProcessError:
        return None
    if not math.isfinite(r.pl_value):
        return None
    return _Layout.from_fit(fit).natural(r.params, r.spec)


def bootstrap_godambe(dataset: Dataset, fit: FitResult, B=100, seed=0,
                      cfg: WplConfig = WplConfig(), n_jobs=1):
    """Standard errors and information criteria by parametric bootstrap.

    ``B`` datasets are simulated at the estimate (with ``nu`` rounded to an
    integer of at least 3, as simulation requires) and refitted from the
    estimate.  The sample covariance of the refits estimates ``G^-1``; ``H``
    is minus the numerical Hessian of the pairwise likelihood at the
    estimate, and ``J = H G^-1 H``.
    """
    if B < 30:
        raise DomainError("bootstrap needs B >= 30")
    lay = _Layout.from_fit(fit)
    free_lam = lay.free_lam
    if fit.params.family == "t" and not free_lam:
        cfg = replace(cfg, fixed_nu=cfg.fixed_nu or int(round(fit.params.nu)))
    sim_params = fit.params
    if fit.params.family == "t":
        sim_params = replace(fit.params, lam=1.0 / max(3, int(round(fit.params.nu))))
    req = SimRequest(dataset.sites, fit.spec, sim_params, dataset.X, B, seed, n_jobs)
    ys = simulate(req)
    if n_jobs == 1:
        est = [_refit(dataset, y, fit, cfg) for y in ys]
    else:
        est = Parallel(n_jobs=n_jobs)(delayed(_refit)(dataset, y, fit, cfg) for y in ys)
    ok = [e for e in est if e is not None]
    n_failed = B - len(ok)
    if n_failed > 0.2 * B:
        raise ConvergenceError(f"{n_failed} of {B} bootstrap refits failed", n_terms=B)
    est = np.array(ok)
    # shifting by one refit leaves the covariance unchanged and makes it
    # exactly zero when all refits agree
    ginv = np.atleast_2d(np.cov(est - est[0], rowvar=False, ddof=1))
    pairs = pair_index(dataset.sites, cfg.cutoff, cfg.cutoff_t)

    def negpl(v):
        p, s = lay.unpack_natural(v, fit.params)
        return -pl_objective(dataset, s, p, cfg, pairs)

    hess = numerical_hessian(negpl, lay.natural(fit.params, fit.spec))
    plic, blic = plic_blic(fit.pl_value, hess, ginv, len(dataset))
    se = dict(zip(lay.names, np.sqrt(np.clip(np.diag(ginv), 0, None)).tolist()))
    return GodambeResult(lay.names, se, ginv, hess, hess @ ginv @ hess, est, n_failed,
                         plic, blic)


# ---------------------------------------------------------- Gaussian ML

def _gauss_loglik(dataset, spec, beta=None, sigma2=None):
    """Gaussian log-likelihood; profiles beta (GLS) and sigma2 when not given."""
    n = len(dataset)
    chol = parent_cholesky(dataset.sites, spec)
    X = dataset.X
    solve = lambda b: np.linalg.solve(chol, b)  # noqa: E731
    ly = solve(dataset.y)
    if beta is None:
        lx = solve(X)
        beta = np.linalg.lstsq(lx, ly, rcond=None)[0] if X.shape[1] else np.zeros(0)
    lr = ly - (solve(X) @ beta if X.shape[1] else 0.0)
    q = float(lr @ lr)
    if sigma2 is None:
        sigma2 = q / n
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    ll = -0.5 * (n * (_LOG_2PI + math.log(sigma2)) + logdet + q / sigma2)
    return ll, np.asarray(beta, dtype=float), sigma2


def fit_gaussian_ml(dataset: Dataset, spec_init: CorrelationSpec,
                    params_init: ProcessParams, *, fix_beta=False, max_evals=2000,
                    x_tol=1e-6, f_tol=1e-8, std_errors=True):
    """Exact Gaussian maximum likelihood.

    ``beta`` (by generalised least squares, unless ``fix_beta``) and
    ``sigma2`` are profiled out; the range parameters are optimised on the
    log scale.  Standard errors come from the inverse of the numerical
    observed information at the optimum.
    """
    n = len(dataset)
    if n > 10_000:
        raise DomainError("dense Gaussian likelihood limited to n <= 10000")
    _check_start(dataset, params_init, spec_init)
    beta_fixed = np.asarray(params_init.beta) if fix_beta else None

    def neg(x):
        try:
            s = spec_init.with_scales(np.exp(x))
            return -_gauss_loglik(dataset, s, beta_fixed)[0]
        except (TProcessError, np.linalg.LinAlgError, FloatingPointError):
            return math.inf

    x0 = np.log(spec_init.scales())
    cfg = WplConfig(max_evals=max_evals, x_tol=x_tol, f_tol=f_tol)
    x, f, diag = _nelder_mead(neg, x0, np.full(x0.shape, 0.2), cfg)
    spec = spec_init.with_scales(np.exp(x))
    ll, beta, sigma2 = _gauss_loglik(dataset, spec, beta_fixed)
    params = ProcessParams(beta=tuple(beta), sigma2=sigma2, family="gaussian")
    lay = _Layout("gaussian", len(beta), spec, False)
    result = FitResult(params, spec, ll, lay.names, method="ml", n_pairs=0,
                       convergence=diag)
    if std_errors:
        def negfull(v):
            p, s = lay.unpack_natural(v, params)
            if p.sigma2 <= 0 or min(s.scales()) <= 0:
                return math.inf
            return -_gauss_loglik(dataset, s, np.asarray(p.beta), p.sigma2)[0]

        try:
            hess = numerical_hessian(negfull, lay.natural(params, spec))
            if fix_beta:
                k = len(beta)
                cov = np.zeros_like(hess)
                cov[k:, k:] = np.linalg.inv(hess[k:, k:])
            else:
                cov = np.linalg.inv(hess)
            result.std_errors = dict(zip(lay.names, np.sqrt(np.clip(np.diag(cov), 0, None)).tolist()))
        except (np.linalg.LinAlgError, TProcessError):
            result.std_errors = None
    return result

