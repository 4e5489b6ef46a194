"""Batch experiment runner.

Configs are INI-style key/value tables with three sections:

    [experiment]            kind = oscdecay ; seed = 7
    [parameters]            kind-specific typed table
    [tolerances]            thresholds the verdict is checked against

`run` executes one experiment, writing report.json (parameters, seed,
tolerances, derived numbers, claim tag, verdict, environment stamp) and
data.csv (raw sweep rows, 17 significant digits).  Exit status: 0 all
asserted tolerances pass, 1 a tolerance failed, 2 parse/config error.
`replay` re-derives the fitted numbers from data.csv alone and compares
them to report.json within 1e-9.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import platform
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .dispersion import FractionalPower, KleinGordon, Wave
from .exponents import (ExponentPoint, INF, as_exponent, beta_sigma,
                        classify_pair, necessary_beta_bounds,
                        region_membership, sobolev_exponent)
from .fitting import loglog_fit
from .norms import lorentz_sequence_norm
from .oscillatory import DecayFitReport, OscIntegralSpec, fit_decay

EXIT_OK, EXIT_TOLERANCE, EXIT_PARSE = 0, 1, 2

KINDS = ("exponents", "oscdecay", "sharpness", "duality", "refined",
         "kinetic", "semiclassical", "hartree")


class ConfigError(Exception):
    pass


def _fmt(x):
    """Round-trip exact float formatting for CSV."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _jsonable(x):
    if isinstance(x, Fraction):
        return {"fraction": f"{x.numerator}/{x.denominator}", "float": float(x)}
    if x is INF or x == float("inf"):
        return "inf"
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


def _environment_stamp():
    import scipy
    return {
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }


def _phi_from_name(name, alpha=None):
    name = (name or "fractional").strip().lower()
    if name in ("wave", "|xi|"):
        return Wave()
    if name in ("klein-gordon", "kg", "<xi>"):
        return KleinGordon()
    if name in ("fractional", "|xi|^a"):
        if alpha is None:
            raise ConfigError("fractional symbol needs alpha")
        return FractionalPower(float(alpha))
    raise ConfigError(f"unknown symbol {name!r}")


def load_config(path):
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config {path}")
    if "experiment" not in cp:
        raise ConfigError("missing [experiment] section")
    exp = dict(cp["experiment"])
    kind = exp.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown or missing kind {kind!r}")
    params = dict(cp["parameters"]) if "parameters" in cp else {}
    tols = {k: float(v) for k, v in (dict(cp["tolerances"])
                                     if "tolerances" in cp else {}).items()}
    seed = exp.get("seed")
    randomized = kind in ("sharpness", "duality", "refined")
    if seed is None and randomized:
        raise ConfigError(f"kind {kind!r} requires a seed")
    return {"kind": kind, "seed": None if seed is None else int(seed),
            "parameters": params, "tolerances": tols,
            "output_dir": exp.get("output_dir")}


def _floats(value):
    return [float(v) for v in str(value).replace(",", " ").split()]


# ---------------------------------------------------------------------------
# runners: each returns (claim, derived, rows, header, verdict_checks)
# ---------------------------------------------------------------------------

def _run_exponents(params, tols, seed, jobs):
    queries = []
    d = int(params.get("d", 1))
    sigma = Fraction(params.get("sigma", "1/2"))
    qs = str(params.get("q", "4")).split()
    rs = str(params.get("r", "4")).split()
    equation = params.get("equation", "fractional")
    alpha = params.get("alpha")
    rows = []
    records = []
    for qstr, rstr in zip(qs, rs):
        q, r = as_exponent(qstr), as_exponent(rstr)
        pt = ExponentPoint.build(d, sigma, q, r, equation=equation,
                                 alpha=None if alpha is None else Fraction(alpha))
        pt.validate()
        rec = {
            "d": d, "sigma": _jsonable(sigma), "q": _jsonable(q),
            "r": _jsonable(r), "class": pt.classification,
            "s": _jsonable(pt.s), "beta": _jsonable(pt.beta),
            "region": pt.region,
            "beta_bounds": [_jsonable(b) for b in pt.beta_bounds],
            "beta_sharp_line_status": pt.beta_sharp_line_status,
        }
        records.append(rec)
        rows.append((qstr, rstr, pt.classification, float(pt.s),
                     float(pt.beta) if pt.beta is not INF else np.inf,
                     pt.region))
    derived = {"records": records}
    header = ("q", "r", "class", "s", "beta", "region")
    return "exponent-calculus", derived, rows, header, []


def _run_oscdecay(params, tols, seed, jobs):
    kind = params.get("kind", "wave-W")
    d = int(params.get("d", 1))
    kappas = _floats(params.get("kappa", "2"))
    t_min = float(params.get("t_min", 100.0))
    t_max = float(params.get("t_max", 1e4))
    n_t = int(params.get("t_samples", 20))
    policy = params.get("x_policy", "ray")
    gamma = float(params.get("gamma", 0.0))
    eps = params.get("epsilon")
    phi = None
    if kind.startswith("almosthom"):
        phi = _phi_from_name("fractional", params.get("alpha"))
    spec = OscIntegralSpec(kind, d=d, epsilon=None if eps is None else float(eps),
                           gamma=gamma, phi=phi)
    report = fit_decay(spec, policy, np.geomspace(t_min, t_max, n_t), kappas,
                       rel_tol=float(params.get("rel_tol", 1e-6)), jobs=jobs)
    rows = [tuple(r) for r in report.rows()]
    header = ("kappa", "t", "radius", "magnitude", "err_est")
    derived = {
        "fitted_sigma": {str(f.kappa): f.fitted_sigma for f in report.fits},
        "r_squared": {str(f.kappa): f.r_squared for f in report.fits},
        "sigma_mean": report.fitted_sigma,
        "kappa_growth_order": report.kappa_growth_order,
    }
    checks = []
    if "sigma_target" in tols:
        tol = tols.get("sigma_tol", 0.1)
        for f in report.fits:
            checks.append((f"sigma(kappa={f.kappa})",
                           abs(f.fitted_sigma - tols["sigma_target"]) <= tol))
    claim = {"wave-W": "wave-kernel-decay", "kg-J": "kg-wavelike-decay",
             "kg-K": "kg-schrodingerlike-decay",
             "almosthom-I-plus": "almost-homogeneous-decay",
             "almosthom-I-minus": "almost-homogeneous-decay"}[kind]
    return claim, derived, rows, header, checks


def _refit_oscdecay(rows):
    by_kappa = {}
    for kappa, t, _rad, mag, _err in rows:
        by_kappa.setdefault(float(kappa), {})[float(t)] = \
            max(by_kappa.get(float(kappa), {}).get(float(t), 0.0), float(mag))
    fitted = {}
    r2 = {}
    for kappa, series in sorted(by_kappa.items()):
        ts = np.array(sorted(series))
        mags = np.array([series[t] for t in ts])
        fit = loglog_fit(ts, np.maximum(mags, 1e-300))
        fitted[str(kappa)] = -fit.slope
        r2[str(kappa)] = fit.r_squared
    return {"fitted_sigma": fitted, "r_squared": r2,
            "sigma_mean": float(np.mean(list(fitted.values())))}


def _run_sharpness(params, tols, seed, jobs):
    from .onstrichartz import sharpness_sweep
    construction = params.get("construction", "lattice-R")
    scales = [int(v) for v in _floats(params.get("scales", "4 8 16 32"))]
    d = int(params.get("d", 1))
    q = float(params.get("q", 8.0))
    r = float(params.get("r", 4.0))
    beta = float(params.get("beta")) if "beta" in params else \
        float(beta_sigma(Fraction(q).limit_denominator(1000),
                         Fraction(r).limit_denominator(1000), Fraction(d, 2)))
    sweep = sharpness_sweep(construction, q, r, beta, scales, d=d)
    rows = [(s, lhs, rhs, lhs / rhs) for s, lhs, rhs
            in zip(scales, sweep.lhs, sweep.rhs)]
    header = ("scale", "lhs", "rhs", "ratio")
    derived = {
        "lhs_exponent": sweep.lhs_fit.slope,
        "rhs_exponent": sweep.rhs_fit.slope,
        "ratio_exponent": sweep.ratio_fit.slope,
        "ratio_spread": sweep.ratio_bounded,
        "ratio_increasing": sweep.ratio_increasing,
        "beta": beta,
    }
    checks = []
    if "lhs_exponent_target" in tols:
        checks.append(("lhs_exponent",
                       abs(sweep.lhs_fit.slope - tols["lhs_exponent_target"])
                       <= tols.get("lhs_exponent_tol", 0.1)))
    if "rhs_exponent_target" in tols:
        checks.append(("rhs_exponent",
                       abs(sweep.rhs_fit.slope - tols["rhs_exponent_target"])
                       <= tols.get("rhs_exponent_tol", 0.05)))
    if "ratio_spread_max" in tols:
        checks.append(("ratio_spread",
                       sweep.ratio_bounded <= tols["ratio_spread_max"]))
    claim = ("lattice-scaling-necessary-bound" if construction == "lattice-R"
             else "time-translate-necessary-bound")
    return claim, derived, rows, header, checks


def _refit_sharpness(rows):
    scales = np.array([float(r[0]) for r in rows])
    lhs = np.array([float(r[1]) for r in rows])
    rhs = np.array([float(r[2]) for r in rows])
    return {
        "lhs_exponent": loglog_fit(scales, lhs).slope,
        "rhs_exponent": loglog_fit(scales, rhs).slope,
        "ratio_exponent": loglog_fit(scales, lhs / rhs).slope,
        "ratio_spread": float((lhs / rhs).max() / (lhs / rhs).min()),
    }


def _run_duality(params, tols, seed, jobs):
    from .onstrichartz import duality_check
    rng = np.random.default_rng(seed)
    m = int(params.get("dim", 16))
    nt = int(params.get("nt", 4))
    nx = int(params.get("nx", 4))
    trials = int(params.get("trials", 200))
    beta = float(params.get("beta", 4.0 / 3.0))
    q = float(params.get("q", 4.0))
    r = float(params.get("r", 4.0))
    T = rng.normal(size=(nt * nx, m)) + 1j * rng.normal(size=(nt * nx, m))
    times = np.linspace(0.0, 1.0, nt)
    rep = duality_check(T, beta, q, r, trials, times, 1.0 / nx, rng)
    rep2 = duality_check(T, beta, q, r, 2 * trials, times, 1.0 / nx,
                         np.random.default_rng(seed))
    drift = max(abs(rep2.family_side - rep.family_side) / rep.family_side,
                abs(rep2.schatten_side - rep.schatten_side) / rep.schatten_side)
    rows = [(trials, rep.family_side, rep.schatten_side, rep.ratio),
            (2 * trials, rep2.family_side, rep2.schatten_side, rep2.ratio)]
    header = ("trials", "family_side", "schatten_side", "ratio")
    derived = {"ratio": rep.ratio, "ratio_doubled": rep2.ratio, "drift": drift}
    checks = []
    if "ratio_max" in tols:
        checks.append(("ratio", tols.get("ratio_min", 0.0) <= rep.ratio
                       <= tols["ratio_max"]))
    if "drift_max" in tols:
        checks.append(("drift", drift <= tols["drift_max"]))
    return "duality-principle", derived, rows, header, checks


def _refit_duality(rows):
    return {"ratio": float(rows[0][3]), "ratio_doubled": float(rows[1][3]),
            "drift": max(abs(float(rows[1][1]) - float(rows[0][1])) / float(rows[0][1]),
                         abs(float(rows[1][2]) - float(rows[0][2])) / float(rows[0][2]))}


def _run_refined(params, tols, seed, jobs):
    from .onstrichartz import refined_strichartz_check
    from .spectral import Field, Grid
    rng = np.random.default_rng(seed)
    n_data = int(params.get("corpus", 100))
    d = int(params.get("d", 1))
    if d != 1:
        raise ConfigError("refined sweep is a d = 1 experiment")
    alpha = float(params.get("alpha", 3.0))
    phi = FractionalPower(alpha)
    q = float(params.get("q", 8.0))
    r = float(params.get("r", 4.0))
    beta = float(params.get("beta", 4.0 / 3.0))
    s = float(params.get("s", 0.0))
    grid = Grid(d=1, n=int(params.get("n", 512)),
                box=float(params.get("box", 64 * np.pi)))
    times = np.linspace(-4.0, 4.0, int(params.get("t_samples", 33)))
    rho = grid.frequency_norm()
    rows = []
    ratios = []
    for k in range(n_data):
        spec = (rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape))
        spec *= (rho >= 0.5) & (rho <= grid.max_frequency / 2)
        f = Field.from_spectrum(grid, spec)
        f = f * (1.0 / f.norm_l2())
        lhs, rhs, ratio, defect = refined_strichartz_check(
            f, phi, q, r, beta, s, times)
        rows.append((k, lhs, rhs, ratio, defect))
        ratios.append(ratio)
    header = ("index", "lhs", "rhs", "ratio", "class_defect")
    derived = {"max_ratio": float(np.max(ratios)),
               "mean_ratio": float(np.mean(ratios))}
    checks = [("finite", bool(np.isfinite(derived["max_ratio"])))]
    if "ratio_max" in tols:
        checks.append(("ratio", derived["max_ratio"] <= tols["ratio_max"]))
    return "besov-refined-strichartz", derived, rows, header, checks


def _refit_refined(rows):
    ratios = [float(r[3]) for r in rows]
    return {"max_ratio": float(np.max(ratios)),
            "mean_ratio": float(np.mean(ratios))}


def _gaussian_phase_space(params):
    from .applications import PhaseSpaceFunction
    return PhaseSpaceFunction(
        sampler=lambda x, xi: np.exp(-np.asarray(x) ** 2 - np.asarray(xi) ** 2),
        x_box=(-8.0, 8.0), xi_box=(-6.0, 6.0),
        ft_x=lambda eta, v: np.sqrt(np.pi) * np.exp(
            -np.asarray(eta) ** 2 / 4.0 - np.asarray(v) ** 2))


def _run_kinetic(params, tols, seed, jobs):
    from .applications import velocity_average
    phi = _phi_from_name(params.get("symbol", "fractional"),
                         params.get("alpha", 2.0))
    s = float(params.get("s", 0.0))
    psi = params.get("psi", "homogeneous")
    f = _gaussian_phase_space(params)
    ts = _floats(params.get("times", "0 1 2"))
    xs = _floats(params.get("positions", "-2 0 2"))
    rows = []
    for t in ts:
        for x in xs:
            rows.append((t, x, velocity_average(f, phi, s, psi, t, x)))
    header = ("t", "x", "value")
    # mass conservation check at s = 0
    g, w = np.polynomial.legendre.leggauss(320)
    X, W = 24.0 * g, 24.0 * w
    masses = []
    for t in (0.0, max(ts)):
        masses.append(sum(wi * velocity_average(f, phi, 0.0, psi, t, xi)
                          for xi, wi in zip(X, W)))
    drift = abs(masses[1] - masses[0]) / abs(masses[0])
    derived = {"values": [float(r[2]) for r in rows], "mass_drift": drift}
    checks = []
    if "mass_drift_max" in tols:
        checks.append(("mass-conservation", drift <= tols["mass_drift_max"]))
    return "kinetic-velocity-average", derived, rows, header, checks


def _refit_kinetic(rows):
    return {"values": [float(r[2]) for r in rows]}


def _run_semiclassical(params, tols, seed, jobs):
    from .applications import semiclassical_density, semiclassical_limit
    phi = _phi_from_name(params.get("symbol", "klein-gordon"),
                         params.get("alpha"))
    s = float(params.get("s", 0.0))
    psi = params.get("psi", "homogeneous")
    f = _gaussian_phase_space(params)
    t = float(params.get("t", 0.8))
    x = float(params.get("x", 0.3))
    hs = _floats(params.get("h", "0.25 0.125 0.0625 0.03125"))
    lim = semiclassical_limit(f, phi, s, psi, t, x)
    rows = []
    errs = []
    for h in hs:
        v = semiclassical_density(f, phi, s, psi, h, t, x)
        errs.append(abs(v - lim))
        rows.append((h, v.real, v.imag, errs[-1]))
    header = ("h", "value_re", "value_im", "error")
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    derived = {"limit": lim, "errors": errs, "ratios": ratios}
    checks = []
    if "min_ratio" in tols:
        checks.append(("h-convergence",
                       all(r >= tols["min_ratio"] for r in ratios)))
    return "semiclassical-density-limit", derived, rows, header, checks


def _refit_semiclassical(rows):
    errs = [float(r[3]) for r in rows]
    return {"errors": errs,
            "ratios": [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]}


def _run_hartree(params, tols, seed, jobs):
    from .applications import HartreeState, hartree_fixed_point
    from .norms import projector
    from .spectral import Field, Grid
    d = int(params.get("d", 1))
    if d != 1:
        raise ConfigError("hartree runner is a d = 1 experiment")
    alpha = float(params.get("alpha", 3.0))
    n = int(params.get("n", 64))
    box = float(params.get("box", 16 * np.pi))
    grid = Grid(d=1, n=n, box=box)
    x = grid.axis_coordinates() - box / 2.0
    f1 = Field(grid, np.exp(-x ** 2 / 4).astype(complex))
    f1 = f1 * (1.0 / f1.norm_l2())
    f2 = Field(grid, ((x / 2) * np.exp(-x ** 2 / 4)
                      * np.exp(0.3j * x)).astype(complex))
    f2 = f2 - f1 * f1.inner(f2)
    f2 = f2 * (1.0 / f2.norm_l2())
    gamma0 = projector([f1, f2], [1.0, 0.7])
    amp = float(params.get("w_amplitude", 0.4))
    T = float(params.get("T", 0.4))
    w = Field(grid, (amp * np.exp(-x ** 2 / 2)).astype(complex))
    state = HartreeState(grid, FractionalPower(alpha), gamma0, w, T=T,
                         beta=float(params.get("beta", 2.0)),
                         q=float(params.get("q", 8.0)),
                         r=float(params.get("r", 4.0)),
                         nodes=int(params.get("nodes", 17)))
    rep = hartree_fixed_point(state, tol=float(params.get("tol", 1e-8)))
    half = HartreeState(grid, FractionalPower(alpha), gamma0,
                        Field(grid, 0.5 * w.values), T=T, beta=state.beta,
                        q=state.q, r=state.r, nodes=state.nodes)
    rep_half = hartree_fixed_point(half, tol=float(params.get("tol", 1e-8)))
    scaling = (rep.contraction_factor / rep_half.contraction_factor
               if rep_half.contraction_factor else np.nan)
    rows = [(0, rep.converged, rep.iterations, rep.residual,
             rep.contraction_factor),
            (1, rep_half.converged, rep_half.iterations, rep_half.residual,
             rep_half.contraction_factor)]
    header = ("run", "converged", "iterations", "residual", "contraction")
    derived = {"converged": bool(rep.converged),
               "residual": float(rep.residual),
               "contraction_factor": float(rep.contraction_factor),
               "w_scaling_factor": float(scaling)}
    checks = [("converged", bool(rep.converged))]
    if "residual_max" in tols:
        checks.append(("residual", rep.residual <= tols["residual_max"]))
    if "scaling_low" in tols:
        checks.append(("w-scaling", tols["scaling_low"] <= scaling
                       <= tols.get("scaling_high", np.inf)))
    return "hartree-contraction", derived, rows, header, checks


def _refit_hartree(rows):
    return {"contraction_factor": float(rows[0][4]),
            "w_scaling_factor": float(rows[0][4]) / float(rows[1][4])}


_RUNNERS = {
    "exponents": (_run_exponents, None),
    "oscdecay": (_run_oscdecay, _refit_oscdecay),
    "sharpness": (_run_sharpness, _refit_sharpness),
    "duality": (_run_duality, _refit_duality),
    "refined": (_run_refined, _refit_refined),
    "kinetic": (_run_kinetic, _refit_kinetic),
    "semiclassical": (_run_semiclassical, _refit_semiclassical),
    "hartree": (_run_hartree, _refit_hartree),
}


def run_experiment(config_path, out_dir=None, seed_override=None, jobs=None):
    try:
        cfg = load_config(config_path)
    except (ConfigError, configparser.Error, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    seed = seed_override if seed_override is not None else cfg["seed"]
    out = Path(out_dir or cfg["output_dir"] or ".")
    runner, _ = _RUNNERS[cfg["kind"]]
    try:
        claim, derived, rows, header, checks = runner(
            cfg["parameters"], cfg["tolerances"], seed, jobs)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    out.mkdir(parents=True, exist_ok=True)
    verdict = all(ok for _, ok in checks) if checks else True
    report = {
        "kind": cfg["kind"],
        "claim": claim,
        "seed": seed,
        "parameters": cfg["parameters"],
        "tolerances": cfg["tolerances"],
        "derived": _jsonable(derived),
        "checks": [{"name": n, "pass": bool(ok)} for n, ok in checks],
        "verdict": "pass" if verdict else "fail",
        "environment": _environment_stamp(),
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "data.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, (str, bool)) else _fmt(v)
                             for v in row])
    for name, ok in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    print(f"report: {out / 'report.json'}")
    return EXIT_OK if verdict else EXIT_TOLERANCE


def replay(report_dir):
    out = Path(report_dir)
    try:
        with open(out / "report.json") as fh:
            report = json.load(fh)
        with open(out / "data.csv", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [tuple(row) for row in reader]
        if any(len(r) != len(header) for r in rows) or not rows:
            raise ValueError("malformed csv")
    except (OSError, ValueError, json.JSONDecodeError, StopIteration) as exc:
        print(f"replay parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    kind = report.get("kind")
    if kind not in _RUNNERS or _RUNNERS[kind][1] is None:
        print(f"kind {kind!r} has no replayable fit; nothing to verify")
        return EXIT_OK
    refit = _RUNNERS[kind][1]

    def _conv(rows):
        out_rows = []
        for r in rows:
            vals = []
            for v in r:
                if v in ("True", "False"):
                    vals.append(v == "True")
                else:
                    try:
                        vals.append(float(v))
                    except ValueError:
                        vals.append(v)
            out_rows.append(tuple(vals))
        return out_rows

    try:
        derived = refit(_conv(rows))
    except Exception as exc:   # malformed rows surface as parse errors
        print(f"replay parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    stored = report.get("derived", {})

    def compare(a, b, path):
        if isinstance(a, dict):
            return all(compare(a[k], b.get(k), f"{path}.{k}") for k in a)
        if isinstance(a, (list, tuple)):
            return all(compare(x, y, f"{path}[{i}]")
                       for i, (x, y) in enumerate(zip(a, b)))
        if isinstance(a, float):
            ok = abs(a - float(b)) <= 1e-9 * max(1.0, abs(a))
            if not ok:
                print(f"mismatch at {path}: {a} vs {b}", file=sys.stderr)
            return ok
        return True

    ok = compare(derived, stored, "derived")
    print("replay: " + ("consistent" if ok else "MISMATCH"))
    return EXIT_OK if ok else EXIT_TOLERANCE


def query_command(args):
    sigma = Fraction(args.sigma)
    q = as_exponent(args.q)
    r = as_exponent(args.r)
    pt = ExponentPoint.build(args.d, sigma, q, r, equation=args.equation,
                             alpha=None if args.alpha is None
                             else Fraction(args.alpha))
    record = {
        "d": args.d, "sigma": _jsonable(sigma), "q": _jsonable(q),
        "r": _jsonable(r), "class": pt.classification, "s": _jsonable(pt.s),
        "beta": _jsonable(pt.beta), "region": pt.region,
        "beta_bounds": [_jsonable(b) for b in pt.beta_bounds],
        "beta_sharp_line_status": pt.beta_sharp_line_status,
    }
    print(json.dumps(record, sort_keys=True))
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(prog="onslab",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--jobs", type=int,
                       default=int(os.environ.get("ONSLAB_JOBS", "0")) or None)

    p_rep = sub.add_parser("replay", help="verify a report directory")
    p_rep.add_argument("report_dir")

    p_q = sub.add_parser("query", help="exponent calculus query")
    p_q.add_argument("--d", type=int, required=True)
    p_q.add_argument("--sigma", required=True)
    p_q.add_argument("--q", required=True)
    p_q.add_argument("--r", required=True)
    p_q.add_argument("--equation", default="fractional")
    p_q.add_argument("--alpha", default=None)

    args = parser.parse_args(argv)
    if args.command == "run":
        return run_experiment(args.config, args.out, args.seed, args.jobs)
    if args.command == "replay":
        return replay(args.report_dir)
    return query_command(args)


if __name__ == "__main__":
    sys.exit(main())
