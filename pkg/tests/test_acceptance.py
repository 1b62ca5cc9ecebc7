"""Acceptance criteria 1-10.

Each test records one PASS/FAIL line (see ``conftest.record``); the lines are
repeated in the terminal summary.  Criteria 5-7 are Monte-Carlo studies at
desk scale and carry the ``slow`` marker.
"""
import json
import math
import subprocess
import sys
from dataclasses import replace

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate, special

from conftest import record
from tprocess.correlation import (CorrelationSpec, ProcessParams, parent_corr,
                                  skew_gauss_corr, skew_t_corr, t_corr)
from tprocess.data import Dataset
from tprocess.density import (bivariate_t_pdf, mix_moment, pair_logpdf_std,
                              skew_gauss_joint_pdf, t_pdf)
from tprocess.estimate import WplConfig, fit_wpl, pl_objective, two_step_nu
from tprocess.geometry import Sites
from tprocess.predict import CVFolds, crps, crps_numeric, cross_validate
from tprocess.simulate import SimRequest, simulate
from tprocess.specfun import SeriesControl, appell_f4, gauss_2f1

# ------------------------------------------------------------------ oracles


def brute_2f1(a, b, c, x, n_terms=500):
    """Plain 500-term partial sum at 40 digits."""
    with mp.workdps(40):
        s, t = mp.mpf(0), mp.mpf(1)
        for k in range(n_terms):
            s += t
            t *= (a + k) * (b + k) / ((c + k) * (k + 1)) * mp.mpf(x)
        return float(s)


def brute_f4(a, b, c, cp, w, z, n=300):
    """Double sum over k, m <= n of the defining series (positive terms)."""
    k = np.arange(n + 1)[:, None]
    m = np.arange(n + 1)[None, :]
    lg = special.gammaln
    lt = (lg(a + k + m) - lg(a) + lg(b + k + m) - lg(b) - lg(c + k) + lg(c)
          - lg(cp + m) + lg(cp) - lg(k + 1) - lg(m + 1) + k * math.log(w) + m * math.log(z))
    return math.fsum(np.exp(lt).ravel())


# ----------------------------------------------------------- criterion 1

def test_criterion_1_special_functions():
    rng = np.random.default_rng(1)
    worst2, worst4 = 0.0, 0.0
    ctrl = SeriesControl(1e-15, 20000)
    for _ in range(200):
        a, b = rng.uniform(-3.0, 6.0, 2)
        c = rng.uniform(0.5, 6.0)
        x = rng.uniform(-0.9, 0.9)
        ref = brute_2f1(a, b, c, x)
        got = gauss_2f1(a, b, c, x, ctrl)
        worst2 = max(worst2, abs(got - ref) / max(abs(ref), 1e-300))
    for _ in range(200):
        a, b = rng.uniform(0.1, 6.0, 2)
        c, cp = rng.uniform(0.5, 6.0, 2)
        r = rng.uniform(0.05, 0.75)
        share = rng.uniform(0.05, 0.95)
        w, z = (share * r) ** 2, ((1 - share) * r) ** 2
        ref = brute_f4(a, b, c, cp, w, z)
        got = appell_f4(a, b, c, cp, w, z, ctrl)
        worst4 = max(worst4, abs(got - ref) / ref)
    # degeneracies: zero arguments, a single zero argument, and zero correlation
    deg = max(abs(appell_f4(2.5, 1.5, 0.5, 3.0, 0.0, 0.0) - 1.0),
              abs(gauss_2f1(1.3, -0.7, 2.2, 0.0) - 1.0),
              abs(appell_f4(2.0, 3.0, 1.5, 2.5, 0.3, 0.0) / gauss_2f1(2.0, 3.0, 1.5, 0.3) - 1))
    y = np.linspace(-4, 4, 9)
    lp, _ = pair_logpdf_std(y, y[::-1], 0.0, 5.0)
    deg = max(deg, float(np.max(np.abs(np.exp(lp) / (t_pdf(y, 5) * t_pdf(y[::-1], 5)) - 1))))
    ok = worst2 <= 1e-9 and worst4 <= 1e-9 and deg <= 1e-12
    record(1, ok, f"2F1 worst rel {worst2:.2e}, F4 worst rel {worst4:.2e} (tol 1e-9); "
                  f"degeneracies {deg:.1e} (tol 1e-12)")
    assert ok


# ----------------------------------------------------------- criterion 2

def test_criterion_2_correlation_identity():
    worst = 0.0
    above = 0.0
    for rho in np.linspace(-0.95, 0.99, 10):
        for nu in (2.5, 3.0, 4.5, 8.0, 30.0):
            lhs = t_corr(rho, nu)
            rhs = (nu - 2) / nu * mix_moment(1, 1, nu, rho) * rho
            worst = max(worst, abs(lhs - rhs))
            if rho > 0:
                above = max(above, lhs - rho)
    ones = max(abs(t_corr(1.0, nu) - 1.0) for nu in (2.5, 3.0, 6.0, 50.0, 1e3))
    ok = worst <= 1e-12 and above <= 0.0 and ones <= 1e-10
    record(2, ok, f"identity max diff {worst:.1e}; max t_corr-rho on rho>0 {above:.1e}; "
                  f"|t_corr(1)-1| {ones:.1e}")
    assert ok


# ----------------------------------------------------------- criterion 3

def _tan_dblquad(f):
    g = lambda b, a: f(math.tan(a), math.tan(b)) / (math.cos(a) ** 2 * math.cos(b) ** 2)
    h = math.pi / 2
    return integrate.dblquad(g, -h, h, -h, h, epsabs=1e-9, epsrel=1e-9)[0]


def test_criterion_3_density_normalisation():
    worst_norm, worst_marg = 0.0, 0.0
    for rho in (0.0, 0.5, -0.5, 0.9):
        for nu in (3, 5, 10):
            tot = _tan_dblquad(lambda x, y: bivariate_t_pdf(x, y, rho, nu))
            worst_norm = max(worst_norm, abs(tot - 1))
            for y0 in (0.0, 2.0):
                m = integrate.quad(lambda b: bivariate_t_pdf(y0, math.tan(b), rho, nu)
                                   / math.cos(b) ** 2, -math.pi / 2, math.pi / 2,
                                   epsabs=1e-12, epsrel=1e-12, limit=200)[0]
                worst_marg = max(worst_marg, abs(m - t_pdf(y0, nu)))
    ok = worst_norm <= 1e-6 and worst_marg <= 1e-6
    record(3, ok, f"|integral-1| worst {worst_norm:.1e}; marginal worst {worst_marg:.1e} "
                  f"(tol 1e-6)")
    assert ok


# ----------------------------------------------------------- criterion 4

def _batch_se(x, y=None, n_batch=50):
    """Batch-means standard error of a variance (y None) or a correlation."""
    xs = np.array_split(x, n_batch)
    if y is None:
        vals = [np.var(b) for b in xs]
    else:
        vals = [np.corrcoef(b, c)[0, 1] for b, c in zip(xs, np.array_split(y, n_batch))]
    return np.std(vals, ddof=1) / math.sqrt(n_batch)


def test_criterion_4_simulation_vs_theory():
    nu, sigma2 = 6, 2.0
    sites = Sites(np.array([[0.0], [0.05], [0.1], [0.2]]))
    spec = CorrelationSpec("matern", alpha=0.1, psi=0.5)
    p = ProcessParams.t((0.0,), sigma2, nu)
    y = simulate(SimRequest(sites, spec, p, n_replicates=50_000, seed=2024))
    lines, ok = [], True
    for j, h in ((1, 0.05), (2, 0.1), (3, 0.2)):
        emp = np.corrcoef(y[:, 0], y[:, j])[0, 1]
        theo = t_corr(parent_corr(spec, h), nu)
        se = _batch_se(y[:, 0], y[:, j])
        ok &= abs(emp - theo) <= 3 * se
        lines.append(f"h={h}: {emp:.4f} vs {theo:.4f} ({abs(emp - theo) / se:.1f} SE)")
    v_emp = np.var(y[:, 0])
    v_theo = sigma2 * nu / (nu - 2)
    se = _batch_se(y[:, 0])
    ok &= abs(v_emp - v_theo) <= 3 * se
    lines.append(f"var {v_emp:.4f} vs {v_theo:.4f} ({abs(v_emp - v_theo) / se:.1f} SE)")
    record(4, bool(ok), "; ".join(lines))
    assert ok


# ----------------------------------------------------------- criterion 5

TABLE1_NU6 = dict(lam=(-0.01040, 0.00215), beta0=(-0.00621, 0.06180),
                  beta1=(-0.00231, 0.00049), alpha=(-0.00286, 0.00006),
                  sigma2=(-0.05659, 0.06838))


@pytest.mark.slow
def test_criterion_5_scenario1_transect():
    n_rep, seed = 100, 501
    sites = Sites(np.linspace(0.0, 1.0, 501)[:, None])
    u = np.random.default_rng([seed, 0]).uniform(size=501)
    spec = CorrelationSpec("matern", alpha=0.1 / 3, psi=0.5)
    p = ProcessParams.t((0.5, -0.25), 1.0, 6)
    X = np.column_stack([np.ones(501), u])
    ys = simulate(SimRequest(sites, spec, p, X, n_rep, seed))
    cfg = WplConfig(cutoff=0.002, x_tol=1e-3, f_tol=1e-5)
    truth = dict(lam=1 / 6, beta0=0.5, beta1=-0.25, alpha=0.1 / 3, sigma2=1.0)
    est = {k: [] for k in truth}
    for y in ys:
        th = fit_wpl(Dataset(sites, u[:, None], y), spec, p, cfg).theta()
        for k in truth:
            est[k].append(th[k])
    ok, parts = True, []
    for k, t0 in truth.items():
        e = np.array(est[k])
        bias, mse = e.mean() - t0, np.mean((e - t0) ** 2)
        tol = 3 * math.sqrt(TABLE1_NU6[k][1])
        ok &= abs(bias) <= tol
        parts.append(f"{k} bias {bias:+.4f} (tol {tol:.4f}, ref {TABLE1_NU6[k][0]:+.4f}) "
                     f"mse {mse:.5f} (ref {TABLE1_NU6[k][1]:.5f})")
    record(5, bool(ok), "; ".join(parts))
    assert ok


# ----------------------------------------------------------- criterion 6

@pytest.mark.slow
def test_criterion_6_two_step():
    n, n_rep, seed, nu = 300, 100, 306, 6
    g = np.random.default_rng([seed, 0])
    sites = Sites(g.uniform(size=(n, 2)))
    u = g.uniform(size=n)
    spec = CorrelationSpec("gen_wendland", alpha=0.2, psi=0.0, delta=4.0)
    p = ProcessParams.t((0.5, -0.25), 1.0, nu)
    X = np.column_stack([np.ones(n), u])
    ys = simulate(SimRequest(sites, spec, p, X, n_rep, seed))
    cfg = WplConfig(cutoff=0.04, x_tol=1e-3, f_tol=1e-5)
    truth = np.array([0.5, -0.25, 1.0])
    fixed, two = [], []
    for y in ys:
        ds = Dataset(sites, u[:, None], y)
        a = fit_wpl(ds, spec, p, replace(cfg, fixed_nu=nu)).theta()
        b = two_step_nu(ds, spec, p, cfg).theta()
        fixed.append([a["beta0"], a["beta1"], a["sigma2"]])
        two.append([b["beta0"], b["beta1"], b["sigma2"]])
    mse1 = np.mean((np.array(fixed) - truth) ** 2, axis=0)
    mse2 = np.mean((np.array(two) - truth) ** 2, axis=0)
    ratio = mse2[:2] / mse1[:2]
    ok = mse2[2] > mse1[2] and np.all(np.abs(ratio - 1) <= 0.2)
    record(6, bool(ok), f"sigma2 MSE two-step {mse2[2]:.5f} vs fixed {mse1[2]:.5f} "
                        f"(ref 0.01108 vs 0.00872); beta MSE ratios {ratio[0]:.3f}, "
                        f"{ratio[1]:.3f} (tol 1 +/- 0.2)")
    assert ok


# ----------------------------------------------------------- criterion 7

def _prediction_study(nu, n_rep=100, n=1000, seed=44):
    sites = Sites(np.random.default_rng([seed, 0]).uniform(size=(n, 2)))
    spec = CorrelationSpec("gen_wendland", alpha=0.2, psi=0.0, delta=4.0)
    pt = ProcessParams.t((0.0,), 1.0, nu)
    pg = ProcessParams(beta=(0.0,), sigma2=nu / (nu - 2), family="gaussian")
    ys = simulate(SimRequest(sites, spec, pt, None, n_rep, seed + nu))
    cfg = WplConfig(cutoff=0.04, fixed_nu=nu, x_tol=1e-3, f_tol=1e-5)
    folds = CVFolds(0.8, 1)
    rt, rg, rml = [], [], []
    for r, y in enumerate(ys):
        ds = Dataset(sites, np.zeros((n, 0)), y)
        rt.append(cross_validate(ds, spec, pt, cfg, folds, seed=r, with_crps=False).rmse)
        rg.append(cross_validate(ds, spec, pg, cfg, folds, seed=r, with_crps=False).rmse)
        rml.append(cross_validate(ds, spec, pg, cfg, folds, seed=r, fitter="ml",
                                  with_crps=False).rmse)
    return np.mean(rt), np.mean(rg), np.mean(rml)


@pytest.mark.slow
def test_criterion_7_predictor_comparison():
    t3, g3, m3 = _prediction_study(3)
    t20, g20, m20 = _prediction_study(20)
    rel20 = abs(t20 - g20) / g20
    ok = t3 < g3 and rel20 < 0.005
    record(7, bool(ok), f"nu=3 RMSE t {t3:.5f} < gaussian wpl {g3:.5f} (ML {m3:.5f}); "
                        f"nu=20 t {t20:.5f} vs gaussian wpl {g20:.5f} (ML {m20:.5f}), "
                        f"rel diff {rel20:.2e} (tol 5e-3)")
    assert ok


# ----------------------------------------------------------- criterion 8

def test_criterion_8_crps():
    rng = np.random.default_rng(8)
    wg, wt = 0.0, 0.0
    for _ in range(50):
        mu, sigma, y = rng.normal(0, 2), rng.uniform(0.2, 3), rng.normal(0, 3)
        qg = crps_numeric(lambda t: special.ndtr((t - mu) / sigma), y)
        qt = crps_numeric(lambda t: special.stdtr(4, (t - mu) / sigma), y)
        wg = max(wg, abs(crps("gaussian", mu, sigma, y) - qg))
        wt = max(wt, abs(crps("t4", mu, sigma, y) - qt))
    ok = wg <= 1e-8 and wt <= 1e-6
    record(8, ok, f"gaussian worst {wg:.1e} (tol 1e-8); t4 worst {wt:.1e} (tol 1e-6)")
    assert ok


# ----------------------------------------------------------- criterion 9

def test_criterion_9_skew_machinery():
    eta, omega, rho = 0.7, 0.6, 0.4
    corr = np.array([[1.0, rho], [rho, 1.0]])
    tot = _tan_dblquad(lambda a, b: skew_gauss_joint_pdf([a, b], 0.0, eta, omega, corr))
    sites = Sites(np.array([[0.0], [0.1]]))
    spec = CorrelationSpec("matern", alpha=0.1, psi=0.5)
    p = ProcessParams(beta=(1.0,), sigma2=1.5, eta=eta, family="skew_gaussian", omega=omega)
    y = simulate(SimRequest(sites, spec, p, n_replicates=50_000, seed=9))
    m_theo = 1.0 + math.sqrt(1.5) * eta * math.sqrt(2 / math.pi)
    m_se = np.std(y[:, 0]) / math.sqrt(y.shape[0])
    c_theo = skew_gauss_corr(parent_corr(spec, 0.1), eta, omega)
    c_emp = np.corrcoef(y[:, 0], y[:, 1])[0, 1]
    c_se = _batch_se(y[:, 0], y[:, 1])
    sym = max(abs(skew_t_corr(r, nu, e) - skew_t_corr(r, nu, -e))
              for r in (-0.6, 0.1, 0.5, 0.95) for nu in (3.0, 7.0) for e in (0.2, 0.8))
    ok = (abs(tot - 1) <= 1e-4 and abs(y[:, 0].mean() - m_theo) <= 3 * m_se
          and abs(c_emp - c_theo) <= 3 * c_se and sym <= 1e-14)
    record(9, bool(ok), f"joint pdf integral {tot:.8f}; mean {y[:, 0].mean():.4f} vs "
                        f"{m_theo:.4f}; corr {c_emp:.4f} vs {c_theo:.4f}; +/-eta diff {sym:.0e}")
    assert ok


# ---------------------------------------------------------- criterion 10

def _cli(args, cwd):
    r = subprocess.run([sys.executable, "-m", "tprocess.cli", *args], cwd=cwd,
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    return r


def test_criterion_10_determinism(tmp_path):
    cfg = {"seed": 7,
           "model": {"family": "t", "nu": 4, "correlation": {"alpha": 0.25}},
           "simulate": {"sites": {"kind": "uniform", "n": 60, "dim": 2},
                        "n_covariates": 1},
           "wpl": {"cutoff": 0.15, "x_tol": 1e-3, "f_tol": 1e-4},
           "fit": {"nu_strategy": "fixed"}, "bootstrap": {"B": 30},
           "cv": {"repeats": 3}, "predict": {"targets": "d.csv"},
           "score": {"observed": "d.csv", "predictions": "p.csv"}}
    (tmp_path / "run.json").write_text(json.dumps(cfg))
    outputs = {}
    for threads in ("1", "3"):
        for attempt in range(2):
            key = (threads, attempt)
            arts = []
            for cmd, out in (("simulate", "d.csv"), ("fit", "fit.json"),
                             ("predict", "p.csv"), ("cv", "cv.json"),
                             ("score", "score.json")):
                data = [] if cmd == "simulate" else ["--dataset", "d.csv"]
                _cli([cmd, "--config", "run.json", "--output", out, "--max-threads", threads,
                      *data], tmp_path)
                arts.append((tmp_path / out).read_bytes())
            outputs[key] = arts
    ref = outputs[("1", 0)]
    same = all(v == ref for v in outputs.values())
    # library-level checks: threaded pair evaluation and block-parallel simulation
    sites = Sites(np.random.default_rng(0).uniform(size=(300, 2)))
    spec = CorrelationSpec("gen_wendland", alpha=0.3, psi=0.0, delta=4.0)
    p = ProcessParams.t((0.0,), 1.0, 5)
    y = simulate(SimRequest(sites, spec, p, n_replicates=600, seed=3))
    y2 = simulate(SimRequest(sites, spec, p, n_replicates=600, seed=3, n_jobs=2))
    ds = Dataset(sites, np.zeros((300, 0)), y[0])
    v1 = pl_objective(ds, spec, p, WplConfig(cutoff=0.3))
    v4 = pl_objective(ds, spec, p, WplConfig(cutoff=0.3, n_jobs=4))
    ok = same and np.array_equal(y, y2) and v1 == v4
    record(10, bool(ok), f"CLI artifacts identical over 2 runs x 2 thread counts: {same}; "
                         f"simulate n_jobs 1 vs 2 identical: {np.array_equal(y, y2)}; "
                         f"pl serial vs 4 threads identical: {v1 == v4}")
    assert ok
