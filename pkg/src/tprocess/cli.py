"""Command-line interface.

Usage::

    tprocess COMMAND [--config run.json] [--dataset data.csv] [--output PATH]
                     [--seed N] [--max-threads N]

with ``COMMAND`` one of ``simulate``, ``fit``, ``predict``, ``cv``, ``score``.
The configuration is a JSON file whose blocks override :data:`DEFAULTS`.
Every report embeds the fully resolved configuration, its SHA-256 hash, the
seed and the library version.  Reports contain no timestamps, so a fixed
configuration reproduces them byte for byte.  ``max_threads`` changes
speed only; it and the output path are left out of reports.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .correlation import CorrelationSpec, ProcessParams
from .data import Dataset, format_float, parse_dataset
from .estimate import (WplConfig, bootstrap_godambe, fit_gaussian_ml, fit_wpl,
                       two_step_nu)
from .exceptions import ConfigError, DataError, TProcessError
from .geometry import Sites
from .predict import CVFolds, cross_validate, linear_predict, scores
from .simulate import SimRequest, simulate
from .specfun import SeriesControl

__all__ = ["DEFAULTS", "resolve_config", "run", "main"]

COMMANDS = ("simulate", "fit", "predict", "cv", "score")

DEFAULTS = {
    "seed": 0,
    "dataset": None,
    "output": None,
    "model": {
        "family": "t",
        "correlation": {"family": "gen_wendland", "alpha": 0.2, "psi": 0.0, "delta": 4.0,
                        "alpha_t": 1.0, "nugget": 0.0},
        "beta": None,
        "sigma2": 1.0,
        "nu": 6,
        "eta": 0.0,
        "omega": None,
        "from_report": None,
    },
    "fit": {"method": "wpl", "nu_strategy": "free"},
    "wpl": {"cutoff": None, "cutoff_t": None, "tolerance": 1e-12, "max_terms": 10000,
            "max_evals": 2000, "x_tol": 1e-4, "f_tol": 1e-6, "restarts": 1,
            "lam_min": 0.01},
    "bootstrap": {"B": 0, "seed": None},
    "simulate": {"sites": {"kind": "uniform", "n": 100, "dim": 2}, "n_covariates": 0,
                 "n_replicates": 1},
    "predict": {"targets": None},
    "cv": {"fraction": 0.8, "repeats": 10, "fitter": "wpl", "crps": True},
    "score": {"observed": None, "predictions": None},
}

# decisions the caller did not make explicitly; echoed into every report
NOTES = [
    "optimizer: Nelder-Mead on log sigma2, log ranges, identity beta and a scaled "
    "logit of lam on (lam_min, 1/2); start at the configured model values",
    "wpl.cutoff null means all pairs; pairs at exactly the cut-off are kept",
    "bootstrap refits start at the estimate; simulation rounds nu to an integer >= 3",
    "cv.fraction is the share of sites used for fitting",
    "skew-family linear prediction uses the skew correlations with the marginal mean "
    "and variance of the family (extension)",
]


def _merge(base, over, path=""):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown configuration key {path + k!r}")
        if isinstance(base[k], dict) and k != "sites":
            if not isinstance(v, dict):
                raise ConfigError(f"{path + k!r} must be an object")
            out[k] = _merge(base[k], v, path + k + ".")
        else:
            out[k] = v
    return out


def resolve_config(user: dict | None = None, **overrides):
    """Defaults overlaid with ``user`` and then with non-None ``overrides``."""
    cfg = _merge(DEFAULTS, user or {})
    for k, v in overrides.items():
        if v is not None:
            cfg[k] = v
    return cfg


def config_hash(cfg):
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _report(command, cfg, result):
    cfg = {k: v for k, v in cfg.items() if k != "output"}
    doc = {"tool": "tprocess", "version": __version__, "command": command,
           "seed": cfg["seed"], "config_hash": config_hash(cfg), "config": cfg,
           "notes": NOTES, "result": result}
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


# ------------------------------------------------------------- building

def _spec(cfg):
    c = cfg["model"]["correlation"]
    try:
        return CorrelationSpec(**c)
    except TypeError as exc:
        raise ConfigError(f"model.correlation: {exc}") from None


def _params(cfg, ds: Dataset | None = None, k=None):
    m = cfg["model"]
    fam = m["family"]
    beta = m["beta"]
    if beta is None:
        if ds is not None and np.all(np.isfinite(ds.y)) and ds.X.shape[1]:
            beta = np.linalg.lstsq(ds.X, ds.y, rcond=None)[0].tolist()
        else:
            beta = [0.0] * (k if k is not None else (ds.X.shape[1] if ds else 1))
    lam = 1.0 / m["nu"] if fam in ("t", "skew_t") else 0.0
    return ProcessParams(beta=tuple(beta), sigma2=m["sigma2"], lam=lam, eta=m["eta"],
                         family=fam, omega=m["omega"])


def _from_report(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        res, model = doc["result"], doc["config"]["model"]
        est = res["estimates"]
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read model from report {path}: {exc}") from None
    spec = CorrelationSpec(**model["correlation"])
    spec = spec.with_scales([est[n] for n in spec.scale_names])
    k = sum(1 for n in est if n.startswith("beta"))
    beta = tuple(est[f"beta{i}"] for i in range(k))
    fam = res.get("family", model["family"])
    lam = est.get("lam", res.get("lam", 0.0)) or 0.0
    return spec, ProcessParams(beta=beta, sigma2=est["sigma2"], lam=lam, family=fam,
                               eta=model["eta"], omega=model["omega"])


def _model(cfg, ds=None):
    if cfg["model"]["from_report"]:
        return _from_report(cfg["model"]["from_report"])
    return _spec(cfg), _params(cfg, ds)


def _wpl(cfg, threads):
    w = cfg["wpl"]
    cutoff = math.inf if w["cutoff"] is None else float(w["cutoff"])
    try:
        return WplConfig(cutoff=cutoff, cutoff_t=w["cutoff_t"],
                         ctrl=SeriesControl(w["tolerance"], w["max_terms"]),
                         max_evals=w["max_evals"], x_tol=w["x_tol"], f_tol=w["f_tol"],
                         restarts=w["restarts"], lam_min=w["lam_min"], n_jobs=threads)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"wpl: {exc}") from None


def _dataset(cfg, key="dataset", allow_missing=False):
    path = cfg[key] if key == "dataset" else key
    if not path:
        raise ConfigError("a dataset path is required for this command")
    return parse_dataset(path, allow_missing=allow_missing)


def _sim_sites(cfg):
    s = cfg["simulate"]["sites"]
    kind = s.get("kind", "uniform")
    rng = np.random.default_rng([cfg["seed"], 1])
    if kind == "uniform":
        return Sites(rng.uniform(size=(int(s["n"]), int(s.get("dim", 2)))))
    if kind == "transect":
        return Sites(np.linspace(0.0, 1.0, int(s["n"]))[:, None])
    if kind == "grid":
        g = np.linspace(0.0, 1.0, int(s["n"]))
        return Sites(np.array([(a, b) for a in g for b in g]))
    raise ConfigError(f"unknown simulate.sites.kind {kind!r}")


# ------------------------------------------------------------- commands

def _cmd_simulate(cfg, threads):
    if cfg["dataset"]:
        base = _dataset(cfg, allow_missing=True)
    else:
        sites = _sim_sites(cfg)
        k = int(cfg["simulate"]["n_covariates"])
        cov = np.random.default_rng([cfg["seed"], 2]).uniform(size=(len(sites), k))
        base = Dataset(sites, cov, np.zeros(len(sites)))
    spec = _spec(cfg)
    params = _params(cfg, k=base.X.shape[1])
    m = int(cfg["simulate"]["n_replicates"])
    req = SimRequest(base.sites, spec, params, base.X, m, cfg["seed"], threads)
    ys = simulate(req)
    return [base.with_y(y).to_csv() for y in ys]


def _fit_result(res, godambe=None):
    out = {"method": res.method, "family": res.params.family, "estimates": res.theta(),
           "pl_value": res.pl_value, "std_errors": res.std_errors, "plic": res.plic,
           "blic": res.blic, "nu_selected": res.nu_selected, "n_pairs": res.n_pairs,
           "convergence": res.convergence}
    if res.params.family == "t" and "lam" not in out["estimates"]:
        out["lam"] = res.params.lam
    if godambe is not None:
        out.update(std_errors=godambe.std_errors, plic=godambe.plic, blic=godambe.blic,
                   bootstrap={"B": int(godambe.estimates.shape[0] + godambe.n_failed),
                              "n_failed": godambe.n_failed,
                              "godambe_inv": godambe.godambe_inv,
                              "hessian": godambe.hessian})
    return out


def _cmd_fit(cfg, threads):
    ds = _dataset(cfg)
    spec, params = _model(cfg, ds)
    wcfg = _wpl(cfg, threads)
    method = cfg["fit"]["method"]
    if method == "ml":
        res = fit_gaussian_ml(ds, spec, ProcessParams(beta=params.beta, sigma2=params.sigma2,
                                                      family="gaussian"))
        return _fit_result(res)
    if method != "wpl":
        raise ConfigError(f"unknown fit.method {method!r}")
    strategy = cfg["fit"]["nu_strategy"]
    if params.family == "t" and strategy == "two_step":
        res = two_step_nu(ds, spec, params, wcfg)
    elif params.family == "t" and strategy == "fixed":
        wcfg = replace(wcfg, fixed_nu=int(cfg["model"]["nu"]))
        res = fit_wpl(ds, spec, params, wcfg)
    elif strategy in ("free", "two_step", "fixed"):
        res = fit_wpl(ds, spec, params, wcfg)
    else:
        raise ConfigError(f"unknown fit.nu_strategy {strategy!r}")
    god = None
    B = int(cfg["bootstrap"]["B"])
    if B > 0:
        bseed = cfg["bootstrap"]["seed"]
        god = bootstrap_godambe(ds, res, B, cfg["seed"] if bseed is None else bseed, wcfg)
    return _fit_result(res, god)


def _cmd_predict(cfg, threads):
    ds = _dataset(cfg)
    tpath = cfg["predict"]["targets"]
    if not tpath:
        raise ConfigError("predict.targets is required")
    targets = parse_dataset(tpath, allow_missing=True)
    spec, params = _model(cfg, ds)
    r = linear_predict(ds, spec, params, targets)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(targets.coord_names() + ["point", "variance"])
    times = targets.sites.times
    for i in range(len(targets)):
        row = [format_float(c) for c in targets.sites.coords[i]]
        if times is not None:
            row.append(format_float(times[i]))
        w.writerow(row + [format_float(r.point[i]), format_float(r.variance[i])])
    return buf.getvalue()


def _cmd_cv(cfg, threads):
    ds = _dataset(cfg)
    spec, params = _model(cfg, ds)
    c = cfg["cv"]
    fitter = c["fitter"]
    wcfg = _wpl(cfg, 1)
    if params.family == "t" and cfg["fit"]["nu_strategy"] == "fixed":
        wcfg = replace(wcfg, fixed_nu=int(cfg["model"]["nu"]))
    rep = cross_validate(ds, spec, params, wcfg, CVFolds(c["fraction"], c["repeats"]),
                         cfg["seed"], fitter=fitter, with_crps=c["crps"], n_jobs=threads)
    return {"rmse": rep.rmse, "mae": rep.mae, "crps": rep.crps, "n_failed": rep.n_failed,
            "records": rep.records}


def _read_predictions(path):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    if not rows or "point" not in rows[0]:
        raise DataError(f"{path}: need a 'point' column")
    try:
        point = np.array([float(r["point"]) for r in rows])
        var = (np.array([float(r["variance"]) for r in rows]) if "variance" in rows[0]
               else None)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from None
    return point, var


def _cmd_score(cfg, threads):
    s = cfg["score"]
    if not (s["observed"] and s["predictions"]):
        raise ConfigError("score.observed and score.predictions are required")
    obs = parse_dataset(s["observed"])
    point, var = _read_predictions(s["predictions"])
    if point.shape[0] != len(obs):
        raise DataError("observed and predicted files have different row counts")
    _, params = _model(cfg, obs)
    table = scores(obs.y, point, params, var)
    return {"table": [{"metric": k, "value": table[k]} for k in ("rmse", "mae", "crps")],
            "n": len(obs), "crps_family": params.family}


def run(command, cfg, threads=1):
    """Execute ``command``; returns a list of (path, text) artifacts."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    out = cfg["output"]
    if command == "simulate":
        texts = _cmd_simulate(cfg, threads)
        if len(texts) == 1:
            return [(out, texts[0])]
        if not out:
            raise ConfigError("simulate with several replicates needs an output path")
        stem, ext = os.path.splitext(out)
        return [(f"{stem}_{i:04d}{ext or '.csv'}", t) for i, t in enumerate(texts)]
    if command == "predict":
        return [(out, _cmd_predict(cfg, threads))]
    fn = {"fit": _cmd_fit, "cv": _cmd_cv, "score": _cmd_score}[command]
    return [(out, _report(command, cfg, fn(cfg, threads)))]


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return doc


def build_parser():
    p = argparse.ArgumentParser(prog="tprocess", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--dataset", help="input CSV (overrides the config)")
    p.add_argument("--output", help="output path; stdout when omitted")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("--max-threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads; results do not depend on it")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(_load_config(args.config), dataset=args.dataset,
                             output=args.output, seed=args.seed)
        threads = max(1, int(args.max_threads))
        for path, text in run(args.command, cfg, threads):
            if path:
                with open(path, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (TProcessError, np.linalg.LinAlgError, ArithmeticError, ValueError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

