import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from tprocess.correlation import (CorrelationSpec, ProcessParams, marginal_mean,
                                  marginal_variance, skew_gauss_corr, t_corr)
from tprocess.data import Dataset
from tprocess.exceptions import DomainError, NotPositiveDefiniteError, TProcessError
from tprocess.geometry import Site, Sites
from tprocess.predict import (CVFolds, crps, crps_numeric, cross_validate, linear_predict,
                              scores)

EXP = CorrelationSpec("matern", alpha=0.3, psi=0.5)


def _data(n=20, seed=0, k=0):
    rng = np.random.default_rng(seed)
    return Dataset(Sites(rng.uniform(size=(n, 2))), rng.uniform(size=(n, k)),
                   rng.standard_normal(n))


# ------------------------------------------------------------- predictor

def test_interpolates_observed_site():
    ds = _data()
    p = ProcessParams.t((0.1,), 2.0, 5)
    r = linear_predict(ds, EXP, p, ds.sites.site(3))
    assert r.point == ds.y[3] and r.variance == 0.0 and r.family == "t"


def test_single_observation_by_hand():
    nu, s2, mu = 5.0, 2.0, 0.4
    ds = Dataset(Sites(np.zeros((1, 2))), np.zeros((1, 0)), [1.5])
    p = ProcessParams.t((mu,), s2, nu)
    r = linear_predict(ds, EXP, p, Site.euclidean(0.3, 0.4))
    rho = t_corr(math.exp(-0.5 / 0.3), nu)
    assert r.point == pytest.approx(mu + rho * (1.5 - mu), rel=1e-14)
    assert r.variance == pytest.approx(s2 * nu / (nu - 2) * (1 - rho ** 2), rel=1e-13)


def test_zero_correlation_returns_mean():
    spec = CorrelationSpec("gen_wendland", alpha=0.05, psi=0.0, delta=4.0)
    ds = Dataset(Sites(np.array([[0.0, 0.0], [1.0, 1.0]])), np.zeros((2, 0)), [3.0, -2.0])
    p = ProcessParams.t((0.5,), 1.5, 6)
    r = linear_predict(ds, spec, p, Site.euclidean(0.5, 0.5))
    assert r.point == 0.5 and r.variance == pytest.approx(1.5 * 6 / 4)


def test_skew_family_shifts_mean():
    spec = CorrelationSpec("gen_wendland", alpha=0.05, psi=0.0, delta=4.0)
    ds = Dataset(Sites(np.array([[0.0, 0.0]])), np.zeros((1, 0)), [3.0])
    p = ProcessParams(beta=(1.0,), sigma2=4.0, eta=0.6, family="skew_gaussian")
    r = linear_predict(ds, spec, p, Site.euclidean(0.5, 0.5))
    assert r.point == pytest.approx(1.0 + 2.0 * marginal_mean(p))
    assert r.variance == pytest.approx(4.0 * marginal_variance(p))


def test_skew_single_observation():
    ds = Dataset(Sites(np.zeros((1, 2))), np.zeros((1, 0)), [2.0])
    p = ProcessParams(beta=(0.0,), eta=0.5, family="skew_gaussian")
    r = linear_predict(ds, EXP, p, Site.euclidean(0.3, 0.0))
    rho = skew_gauss_corr(math.exp(-1), 0.5)
    m = marginal_mean(p)
    assert r.point == pytest.approx(m + rho * (2.0 - m), rel=1e-13)


def test_covariates_need_dataset_targets():
    ds = _data(k=1)
    p = ProcessParams(beta=(0.0, 1.0))
    with pytest.raises(DomainError):
        linear_predict(ds, EXP, p, Site.euclidean(0.1, 0.1))
    target = Dataset(Sites(np.array([[0.5, 0.5]])), [[2.0]], [np.nan])
    far = CorrelationSpec("gen_wendland", alpha=1e-3, psi=0.0, delta=4.0)
    assert linear_predict(ds, far, p, target).point[0] == pytest.approx(2.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5), st.floats(0.1, 10), st.integers(0, 1000))
def test_linear_in_data(b, a, seed):
    ds = _data(n=12, seed=seed)
    p = ProcessParams.t((0.3,), 1.0, 6)
    q = ProcessParams.t((a * 0.3 + b,), 1.0, 6)
    target = Sites(np.random.default_rng(seed + 1).uniform(size=(4, 2)))
    base = linear_predict(ds, EXP, p, target).point
    moved = linear_predict(ds.with_y(a * ds.y + b), EXP, q, target).point
    assert moved == pytest.approx(a * base + b, rel=1e-9, abs=1e-9)


def test_large_nu_matches_gaussian():
    ds = _data(n=30, seed=4)
    target = Sites(np.random.default_rng(5).uniform(size=(10, 2)))
    pt = linear_predict(ds, EXP, ProcessParams.t((0.0,), 1.0, 1e6), target).point
    pg = linear_predict(ds, EXP, ProcessParams(beta=(0.0,)), target).point
    assert np.max(np.abs(pt - pg) / np.abs(pg)) < 1e-4


@pytest.mark.parametrize("seed", range(5))
def test_variance_nonincreasing_when_adding_data(seed):
    ds = _data(n=25, seed=seed)
    target = Sites(np.random.default_rng(seed + 100).uniform(size=(15, 2)))
    p = ProcessParams()
    prev = None
    for m in (5, 10, 18, 25):
        v = linear_predict(ds.subset(np.arange(m)), EXP, p, target).variance
        if prev is not None:
            assert np.all(v <= prev + 1e-12)
        prev = v


def test_repeated_sites():
    ds = _data(n=6, seed=6)
    twice = Dataset(Sites(np.vstack([ds.sites.coords] * 2)), np.zeros((12, 0)),
                    np.concatenate([ds.y, ds.y]))
    target = Sites(np.array([[0.5, 0.5], [0.1, 0.9]]))
    a = linear_predict(ds, EXP, ProcessParams(), target)
    b = linear_predict(twice, EXP, ProcessParams(), target)
    assert b.point == pytest.approx(a.point, rel=1e-13)
    bad = twice.with_y(np.concatenate([ds.y, ds.y + 1]))
    with pytest.raises(NotPositiveDefiniteError):
        linear_predict(bad, EXP, ProcessParams(), target)


def test_missing_values_and_kind_mismatch():
    ds = _data(n=4)
    with pytest.raises(DomainError):
        linear_predict(ds.with_y([np.nan, 1, 2, 3]), EXP, ProcessParams(), Site.euclidean(0, 0))
    with pytest.raises(DomainError):
        linear_predict(ds, EXP, ProcessParams(), Site.spherical(0, 0))


# ------------------------------------------------------------------ CRPS

def test_crps_gaussian_at_mean():
    c = math.sqrt(2 / math.pi) - 1 / math.sqrt(math.pi)
    assert crps("gaussian", 1.0, 2.0, 1.0) == pytest.approx(2 * c, rel=1e-14)
    assert c == pytest.approx(0.23369, abs=5e-6)


def test_crps_gaussian_quadrature():
    ref = crps_numeric(stats.norm.cdf, 1.3)
    assert abs(crps("gaussian", 0.0, 1.0, 1.3) - ref) < 1e-8


def test_crps_t4_quadrature():
    ref = crps_numeric(stats.t(4).cdf, 0.7)
    assert abs(crps("t4", 0.0, 1.0, 0.7) - ref) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(0.2, 4), st.floats(-8, 8))
def test_crps_nonnegative_and_scaled(mu, sigma, y):
    for fam in ("gaussian", "t4"):
        v = crps(fam, mu, sigma, y)
        assert v >= 0
        assert crps(fam, 0.0, 1.0, (y - mu) / sigma) * sigma == pytest.approx(v, rel=1e-10,
                                                                             abs=1e-14)


def test_crps_guards():
    with pytest.raises(DomainError, match="crps_numeric"):
        crps("t", 0.0, 1.0, 0.5, nu=5)
    assert crps("t", 0.0, 1.0, 0.5, nu=4) == crps("t4", 0.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        crps("gaussian", 0.0, 0.0, 0.5)
    with pytest.raises(DomainError):
        crps("laplace", 0.0, 1.0, 0.5)


def test_scores_by_hand():
    out = scores([1.0, 2.0, 4.0], [1.0, 3.0, 2.0])
    assert out["rmse"] == pytest.approx(math.sqrt(5 / 3))
    assert out["mae"] == pytest.approx(1.0)
    assert math.isnan(out["crps"])
    g = scores([0.5], [0.0], ProcessParams(), [4.0])
    assert g["crps"] == pytest.approx(crps("gaussian", 0.0, 2.0, 0.5))


def test_scores_t_predictive_scale():
    # the t predictive law has variance pvar, so its scale is sd sqrt((nu-2)/nu)
    p4 = ProcessParams.t((0.0,), 1.0, 4)
    v = scores([0.7], [0.0], p4, [2.0])["crps"]
    assert v == pytest.approx(crps("t4", 0.0, 1.0, 0.7))
    p6 = ProcessParams.t((0.0,), 1.0, 6)
    scale = math.sqrt(1.5 * 4 / 6)
    ref = crps_numeric(lambda t: stats.t.cdf(t / scale, 6), 0.7)
    assert scores([0.7], [0.0], p6, [1.5])["crps"] == pytest.approx(ref, rel=1e-8)


# ------------------------------------------------------- cross-validation

def test_cv_with_repeated_sites_is_exact():
    base = _data(n=10, seed=7)
    ds = Dataset(Sites(np.vstack([base.sites.coords] * 5)), np.zeros((50, 0)),
                 np.tile(base.y, 5))
    rep = cross_validate(ds, EXP, ProcessParams(), folds=CVFolds(0.8, 3), fitter="none")
    assert rep.rmse == 0.0 and rep.mae == 0.0 and rep.crps == 0.0
    assert len(rep.records) == 3 and rep.n_failed == 0


def test_cv_records_and_reproducibility():
    ds = _data(n=50, seed=8)
    folds = CVFolds(0.8, 3)
    a = cross_validate(ds, EXP, ProcessParams(), folds=folds, seed=3, fitter="none")
    b = cross_validate(ds, EXP, ProcessParams(), folds=folds, seed=3, fitter="none", n_jobs=2)
    assert [r["n_test"] for r in a.records] == [10, 10, 10]
    assert a.records == b.records
    assert a.rmse == pytest.approx(np.mean([r["rmse"] for r in a.records]))


def test_cv_refits_with_wpl():
    ds = _data(n=40, seed=9)
    from tprocess.estimate import WplConfig
    rep = cross_validate(ds, EXP, ProcessParams(), WplConfig(cutoff=0.4), CVFolds(0.75, 2))
    assert rep.n_failed == 0 and rep.rmse > 0


def test_cv_failures_are_counted():
    calls = []

    def flaky(train, spec, params):
        calls.append(1)
        if len(calls) % 2:
            raise TProcessError("refit failed")
        return spec, params

    rep = cross_validate(_data(n=30), EXP, ProcessParams(), folds=CVFolds(0.8, 4), fitter=flaky)
    assert rep.n_failed == 2
    assert sum(not r["ok"] for r in rep.records) == 2
    assert "refit failed" in rep.records[0]["error"]


def test_cv_validation():
    with pytest.raises(DomainError):
        CVFolds(1.0, 3)
    with pytest.raises(DomainError):
        CVFolds(0.5, 0)
    with pytest.raises(DomainError):
        cross_validate(_data(n=2), EXP, ProcessParams(), folds=CVFolds(0.5, 1))
