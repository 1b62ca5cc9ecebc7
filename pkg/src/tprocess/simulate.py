"""Exact simulation of the process families by Cholesky factorisation.

Randomness is organised in substreams: the Gaussian copy ``c`` of replicate
block ``b`` is drawn from ``default_rng([seed, b, c])``.  Blocks have a fixed
size, so output does not depend on how blocks are scheduled across workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .correlation import CorrelationSpec, ProcessParams, parent_corr
from .exceptions import DomainError, NotPositiveDefiniteError
from .geometry import Sites

__all__ = ["SimRequest", "parent_cholesky", "sim_gaussian", "sim_t",
           "sim_skew_gauss", "sim_skew_t", "simulate"]

BLOCK = 256


@dataclass
class SimRequest:
    """Everything needed to draw replicates of a process.

    Parameters
    ----------
    sites : Sites
    spec : CorrelationSpec
        Parent correlation.
    params : ProcessParams
        For the t and skew-t families ``1/params.lam`` must be an integer >= 3.
    covariates : ndarray, shape (n, k), optional
        Design matrix of the mean ``X beta``; defaults to a column of ones.
    n_replicates : int
    seed : int
    n_jobs : int
        Worker count for replicate blocks; does not affect the output.
    """

    sites: Sites
    spec: CorrelationSpec
    params: ProcessParams
    covariates: np.ndarray | None = None
    n_replicates: int = 1
    seed: int = 0
    n_jobs: int = 1

    def design(self):
        n = len(self.sites)
        k = len(self.params.beta)
        if self.covariates is None:
            if k != 1:
                raise DomainError("covariates required when beta has more than one entry")
            return np.ones((n, 1))
        x = np.asarray(self.covariates, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape != (n, k):
            raise DomainError(f"covariates must have shape ({n}, {k}), got {x.shape}")
        return x

    def mean(self):
        return self.design() @ np.asarray(self.params.beta)


def parent_cholesky(sites: Sites, spec: CorrelationSpec):
    """Lower Cholesky factor of the parent correlation matrix.

    One jitter of ``1e-10 * mean(diag)`` is tried before giving up.
    """
    h, u = sites.cross(sites)
    r = np.asarray(parent_corr(spec, h, u), dtype=float)
    np.fill_diagonal(r, 1.0)
    try:
        return np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(r + 1e-10 * np.mean(np.diag(r)) * np.eye(len(sites)))
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(
            "parent correlation matrix is not positive definite") from None


def _integer_nu(params):
    nu = params.nu
    k = int(round(nu))
    if abs(nu - k) > 1e-8 or k < 3:
        raise DomainError(f"simulation needs an integer nu >= 3, got {nu}")
    return k


def _block(chol, seed, b, size, n_copies):
    """Gaussian copies for one replicate block: shape (n_copies, size, n)."""
    n = chol.shape[0]
    out = np.empty((n_copies, size, n))
    for c in range(n_copies):
        z = np.random.default_rng([seed, b, c]).standard_normal((size, n))
        out[c] = z @ chol.T
    return out


def _draw(chol, n_rep, seed, n_copies, combine, n_jobs):
    sizes = [min(BLOCK, n_rep - s) for s in range(0, n_rep, BLOCK)]

    def work(b, size):
        return combine(_block(chol, seed, b, size, n_copies))

    if n_jobs == 1 or len(sizes) == 1:
        parts = [work(b, s) for b, s in enumerate(sizes)]
    else:
        parts = Parallel(n_jobs=n_jobs)(delayed(work)(b, s) for b, s in enumerate(sizes))
    return np.concatenate(parts, axis=0)


def _gamma_mix(g, nu):
    return np.einsum("cij,cij->ij", g, g) / nu


def sim_gaussian(sites: Sites, spec: CorrelationSpec, seed=0, n_replicates=1, n_jobs=1):
    """Zero-mean, unit-variance Gaussian draws, shape ``(n_replicates, n)``."""
    chol = parent_cholesky(sites, spec)
    return _draw(chol, n_replicates, seed, 1, lambda g: g[0], n_jobs)


def sim_t(req: SimRequest):
    """Replicates of ``mu + sigma G / sqrt(W)`` with ``W = sum_c G_c^2 / nu``."""
    nu = _integer_nu(req.params)
    chol = parent_cholesky(req.sites, req.spec)
    sd = math.sqrt(req.params.sigma2)

    def combine(g):
        return sd * g[0] / np.sqrt(_gamma_mix(g[1:], nu))

    return req.mean() + _draw(chol, req.n_replicates, req.seed, nu + 1, combine, req.n_jobs)


def _skew_parts(params):
    eta = params.eta
    omega = math.sqrt(params.omega2)
    return eta, omega


def sim_skew_gauss(req: SimRequest):
    """Replicates of ``mu + sigma (eta |X1| + omega X2)``."""
    eta, omega = _skew_parts(req.params)
    chol = parent_cholesky(req.sites, req.spec)
    sd = math.sqrt(req.params.sigma2)

    def combine(g):
        return sd * (eta * np.abs(g[0]) + omega * g[1])

    return req.mean() + _draw(chol, req.n_replicates, req.seed, 2, combine, req.n_jobs)


def sim_skew_t(req: SimRequest):
    """Replicates of ``mu + sigma W^(-1/2) (eta |X1| + omega X2)``."""
    nu = _integer_nu(req.params)
    eta, omega = _skew_parts(req.params)
    chol = parent_cholesky(req.sites, req.spec)
    sd = math.sqrt(req.params.sigma2)

    def combine(g):
        u = eta * np.abs(g[0]) + omega * g[1]
        return sd * u / np.sqrt(_gamma_mix(g[2:], nu))

    return req.mean() + _draw(chol, req.n_replicates, req.seed, nu + 2, combine, req.n_jobs)


def simulate(req: SimRequest):
    """Dispatch on ``req.params.family``; returns shape ``(n_replicates, n)``."""
    fam = req.params.family
    if fam == "gaussian":
        g = sim_gaussian(req.sites, req.spec, req.seed, req.n_replicates, req.n_jobs)
        return req.mean() + math.sqrt(req.params.sigma2) * g
    return {"t": sim_t, "skew_gaussian": sim_skew_gauss, "skew_t": sim_skew_t}[fam](req)
