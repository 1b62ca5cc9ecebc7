"""Stationary Student-t, skew-Gaussian and skew-t random processes.

Subpackages
-----------
specfun      hypergeometric, Appell F4 and Bessel functions, normal probabilities
geometry     sites and lags (Euclidean, great-circle, space-time)
correlation  parent correlation models and the derived process correlations
density      marginal, pairwise and small joint densities
simulate     exact simulation by Cholesky factorisation
estimate     weighted pairwise likelihood and Gaussian maximum likelihood
predict      linear prediction, CRPS and cross-validation
cli          command-line interface
"""
from importlib.metadata import PackageNotFoundError, version as _version

from .correlation import (CorrelationSpec, ProcessParams, corr_matrix, gen_wendland,
                          matern, parent_corr, process_corr, skew_gauss_corr, skew_t_corr,
                          t_corr)
from .data import Dataset, parse_dataset, read_dataset
from .density import (bivariate_t_logpdf, bivariate_t_pdf, skew_gauss_joint_pdf,
                      skew_gauss_pdf, skew_t_pdf, t_pdf)
from .estimate import (FitResult, WplConfig, bootstrap_godambe, fit_gaussian_ml, fit_wpl,
                       pl_objective, plic_blic, two_step_nu)
from .estimators import GaussianRFRegressor, TProcessRegressor
from .exceptions import (ConfigError, ConvergenceError, DataError, DivergenceError,
                         DomainError, NotPositiveDefiniteError, ObjectiveError,
                         TProcessError, UnsupportedDimensionError)
from .geometry import Site, Sites, distance
from .predict import CVFolds, crps, cross_validate, linear_predict
from .simulate import SimRequest, simulate
from .specfun import SeriesControl, appell_f4, gauss_2f1, mvn_cdf

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "CorrelationSpec", "ProcessParams", "corr_matrix", "gen_wendland", "matern",
    "parent_corr", "process_corr", "skew_gauss_corr", "skew_t_corr", "t_corr",
    "Dataset", "parse_dataset", "read_dataset",
    "bivariate_t_logpdf", "bivariate_t_pdf", "skew_gauss_joint_pdf", "skew_gauss_pdf",
    "skew_t_pdf", "t_pdf",
    "FitResult", "WplConfig", "bootstrap_godambe", "fit_gaussian_ml", "fit_wpl",
    "pl_objective", "plic_blic", "two_step_nu",
    "GaussianRFRegressor", "TProcessRegressor",
    "ConfigError", "ConvergenceError", "DataError", "DivergenceError", "DomainError",
    "NotPositiveDefiniteError", "ObjectiveError", "TProcessError",
    "UnsupportedDimensionError",
    "Site", "Sites", "distance",
    "CVFolds", "crps", "cross_validate", "linear_predict",
    "SimRequest", "simulate",
    "SeriesControl", "appell_f4", "gauss_2f1", "mvn_cdf",
]
