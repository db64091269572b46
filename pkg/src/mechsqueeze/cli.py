"""Command-line front end.

    mechsqueeze simulate  --config run.json --out out/
    mechsqueeze fit       --config run.json --data out/spectrum.csv --out fit/
    mechsqueeze calibrate --config run.json --data points.csv --out cal/
    mechsqueeze bae       --config bae.json --out bae/
    mechsqueeze sweep     --config sweep.json --out sweep/

Exit codes: 0 success, 2 config or data error, 3 unstable configuration
(override with ``--allow-unstable``), 4 unconverged fit (override with
``--allow-unconverged``).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analytics, bae, calibration, fitting
from .config import ConfigError, RunConfig, load_config, parse_prior
from .dataio import DataError, read_table, read_spectrum, write_json, write_spectrum, write_table
from .model import (
    BathState,
    PumpConfig,
    SpectrumModelParams,
    TWO_PI,
    enhanced_couplings,
    stability_check,
    to_hz,
)

log = logging.getLogger("mechsqueeze")

EXIT_OK, EXIT_CONFIG, EXIT_UNSTABLE, EXIT_UNCONVERGED = 0, 2, 3, 4


class CommandError(Exception):
    def __init__(self, message, code=EXIT_CONFIG):
        super().__init__(message)
        self.code = code


# -- shared helpers -------------------------------------------------------------


def _schedule_points(cfg: RunConfig) -> list[tuple[str, PumpConfig]]:
    s, p = cfg.schedule, cfg.pumps
    if s.kind == "ratio_sweep":
        return [(f"ratio_{r:g}", PumpConfig.from_ratio(s.total_photons, r, delta_minus=p.delta_minus,
                                                        delta_plus=p.delta_plus)) for r in s.ratios]
    if s.kind == "power_sweep":
        return [(f"n_minus_{n:g}", PumpConfig(n, s.ratio * n, p.delta_minus, p.delta_plus))
                for n in s.n_p_minus]
    return [("single", p)]


def _pump_record(p: PumpConfig) -> dict:
    return {"n_p_minus": p.n_p_minus, "n_p_plus": p.n_p_plus,
            "delta_minus_hz": to_hz(p.delta_minus), "delta_plus_hz": to_hz(p.delta_plus)}


def _spectrum_model(cfg: RunConfig) -> SpectrumModelParams:
    sp = cfg.spectrum
    return SpectrumModelParams.around(to_hz(cfg.params.omega_c) + sp.center_offset_hz, sp.span_hz,
                                      sp.n_points, s0=sp.s0, gain=sp.gain)


def _point_report(cfg: RunConfig, pumps: PumpConfig) -> dict:
    params, baths = cfg.params, cfg.baths
    rates = enhanced_couplings(params, pumps)
    stab = stability_check(params, rates)
    row = {
        "pumps": _pump_record(pumps),
        "ratio": pumps.ratio,
        "G_minus_hz": to_hz(rates.G_minus),
        "G_plus_hz": to_hz(rates.G_plus),
        "gamma_eff_hz": to_hz(stab.gamma_eff),
        "stable": stab.stable,
    }
    if not stab.stable:
        return row
    q = analytics.quad_variances(params, pumps, baths)
    row.update(var_x1=q.var_x1, var_x2=q.var_x2, cov_x12=q.cov_x12, occupation=q.occupation,
               squeezing_db=analytics.squeezing_db(q) if q.var_x1 > 0 else math.nan,
               notes=list(q.notes))
    pumped = rates.G_minus > 0 or rates.G_plus > 0
    row["feature_sign"] = analytics.feature_sign(params, pumps, baths) if pumped else 0
    row["feature_area"] = analytics.mechanical_feature_area(params, pumps, baths) if pumped else 0.0
    return row


def _device_summary(cfg: RunConfig) -> dict:
    p = cfg.params
    return {
        "omega_m_hz": to_hz(p.omega_m), "omega_c_hz": to_hz(p.omega_c), "kappa_hz": to_hz(p.kappa),
        "kappa_in_hz": to_hz(p.kappa_in), "kappa_out_hz": to_hz(p.kappa_out),
        "gamma_m_hz": to_hz(p.gamma_m), "g0_hz": to_hz(p.g0), "x_zp_m": p.x_zp,
        "kappa_over_omega_m": p.kappa_over_omega_m, "good_cavity": p.good_cavity,
    }


def _validity(cfg: RunConfig, rows: list, caught: list) -> dict:
    return {
        "stable": all(r["stable"] for r in rows),
        "good_cavity": cfg.params.good_cavity,
        "kappa_over_omega_m": cfg.params.kappa_over_omega_m,
        "unstable_points": [i for i, r in enumerate(rows) if not r["stable"]],
        "warnings": sorted({str(w.message) for w in caught}),
    }


def _check_unstable(rows, allow):
    bad = [i for i, r in enumerate(rows) if not r["stable"]]
    if bad and not allow:
        raise CommandError(f"unstable pump configuration at point(s) {bad}; "
                           "rerun with --allow-unstable to continue", EXIT_UNSTABLE)


# -- commands -------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig, out: Path, args) -> int:
    points = _schedule_points(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rows = [_point_report(cfg, p) for _, p in points]
    validity = _validity(cfg, rows, caught)
    write_json(out / "validity.json", validity)
    _check_unstable(rows, args.allow_unstable)

    model = _spectrum_model(cfg)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(points))
    files = []
    for (label, pumps), row, ss in zip(points, rows, seeds):
        if not row["stable"]:
            files.append(None)
            continue
        rng = np.random.default_rng(ss) if cfg.spectrum.noise else None
        data = fitting.simulate_spectrum(cfg.params, pumps, cfg.baths, model, cfg.spectrum.n_avg, rng)
        name = "spectrum.csv" if len(points) == 1 else f"spectrum_{label}.csv"
        write_spectrum(out / name, data)
        files.append(name)
    write_json(out / "variances.json", {
        "device": _device_summary(cfg),
        "baths": {"n_m_th": cfg.baths.n_m_th, "n_c_th": cfg.baths.n_c_th},
        "seed": cfg.seed,
        "points": [dict(r, spectrum_file=f) for r, f in zip(rows, files)],
    })
    log.info("wrote %d spectra to %s", sum(f is not None for f in files), out)
    return EXIT_OK


# internal rate parameters exposed in Hz in result files
_HZ_PARAMS = {"gamma_n_m", "delta_minus", "delta_plus"}


def _out_name(name):
    return f"{name}_hz" if name in _HZ_PARAMS else name


def _out_value(name, value):
    if name not in _HZ_PARAMS:
        return value
    if isinstance(value, list):
        return [v / TWO_PI for v in value]
    if isinstance(value, dict):
        return {k: _out_value(name, v) for k, v in value.items()}
    return value / TWO_PI


def _by_param(d: dict) -> dict:
    return {_out_name(k): _out_value(k, v) for k, v in d.items()}


def cmd_fit(cfg: RunConfig, out: Path, args) -> int:
    if not args.data:
        raise CommandError("fit needs --data")
    data = read_spectrum(args.data)
    try:
        pumps = data.pumps
    except KeyError as exc:
        raise CommandError(f"{args.data}: pump metadata missing ({exc})") from exc
    priors = fitting.default_priors(data)
    overrides = dict(parse_prior(n, spec) for n, spec in cfg.fit.priors.items())
    priors = priors.with_(**overrides)
    sc = fitting.SamplerConfig(cfg.fit.n_walkers, cfg.fit.n_steps, cfg.fit.burn_in, cfg.seed,
                               cfg.fit.likelihood)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = fitting.sample_posterior(data, priors, sc, cfg.params, pumps)
        quads = fitting.derive_quadratures(fit, cfg.params, pumps)
    summary = fit.summary()
    result = {
        "status": summary["status"],
        "free_parameters": [_out_name(n) for n in summary["free_parameters"]],
        "map_estimate": _by_param(summary["map_estimate"]),
        "median": _by_param(summary["median"]),
        "credible_intervals": _by_param(summary["credible_intervals"]),
        "priors": {_out_name(n): p for n, p in summary["priors"].items()},
        "diagnostics": {k: ({_out_name(n): x for n, x in v.items()} if isinstance(v, dict) else v)
                        for k, v in summary["diagnostics"].items()},
        "quadratures": quads.summary(),
        "pumps": _pump_record(pumps),
        "data_file": Path(args.data).name,
        "seed": cfg.seed,
        "warnings": sorted({str(w.message) for w in caught}),
    }
    write_json(out / "fit_result.json", result)
    cols = {_out_name(n): _out_value(n, fit.column(n)) for n in fit.param_names}
    write_table(out / "samples.csv", cols)
    log.info("fit %s: %s", args.data, fit.status)
    if not fit.converged and not args.allow_unconverged:
        raise CommandError("sampler did not converge; rerun with --allow-unconverged to accept",
                           EXIT_UNCONVERGED)
    return EXIT_OK


def _calibrate_g0(cfg, cols):
    c = cfg.calibration
    tr = (c.transmission_minus, c.transmission_plus)
    fit = calibration.fit_g0(cols["n_m_th"], cols["ratio"], cfg.params.kappa, cols.get("sigma"),
                             side=c.side, transmission=tr)
    line = fit.line
    model = line.intercept + line.slope * calibration._side_factor(cols["n_m_th"], c.side)
    table = {"n_m_th": cols["n_m_th"], "ratio": cols["ratio"], "model": model}
    res = {"kind": "g0", "side": c.side, "g0_hz": to_hz(fit.g0), "g0_err_hz": to_hz(fit.g0_err),
           "slope": line.slope, "slope_err": line.slope_err, "intercept": line.intercept,
           "intercept_err": line.intercept_err, "chi2": line.chi2}
    return res, table


def _calibrate_weak(cfg, cols):
    c = cfg.calibration
    sigma = cols.get("sigma_hz")
    fit = calibration.fit_Gminus_weak(cols["power"], TWO_PI * cols["linewidth_hz"], cfg.params.kappa,
                                      None if sigma is None else TWO_PI * sigma, c.weak_fraction)
    G = fit.G_minus(cols["power"])
    model = fit.gamma_m + 4 * G ** 2 / cfg.params.kappa
    rejected = np.asarray(fit.rejected, dtype=bool)
    table = {"power": cols["power"], "linewidth_hz": cols["linewidth_hz"],
             "model_hz": to_hz(model), "G_minus_hz": to_hz(G), "rejected": rejected}
    res = {"kind": "G_minus_weak",
           "coupling_per_root_power_hz": to_hz(fit.coupling_per_root_power),
           "coupling_err_hz": to_hz(fit.coupling_err),
           "gamma_m_hz": to_hz(fit.gamma_m), "gamma_m_err_hz": to_hz(fit.gamma_m_err),
           "n_rejected": int(rejected.sum())}
    if c.gain_plus > 0 and c.gain_minus > 0:
        gp = calibration.fit_Gplus_gain_ratio(c.gain_plus, c.gain_minus, fit.coupling_per_root_power,
                                              fit.coupling_err)
        res["G_plus"] = {"coupling_per_root_power_hz": to_hz(gp.coupling_per_root_power),
                         "coupling_err_hz": to_hz(gp.coupling_err), "correction": gp.correction}
    return res, table


def _calibrate_trace(cfg, cols):
    c = cfg.calibration
    guess = TWO_PI * c.g_minus_guess_hz if c.g_minus_guess_hz > 0 else \
        cfg.params.g0 * math.sqrt(cfg.pumps.n_p_minus)
    if not guess > 0:
        raise CommandError("driven-response fit needs calibration.g_minus_guess_hz or pumps.n_p_minus")
    f = cols["freq_hz"]
    trace = cols["re"] + 1j * cols["im"]
    fit = calibration.fit_driven_response(cfg.params, f, trace, guess)
    model = fit.gain * calibration.driven_response(cfg.params, fit.G_minus, f)
    table = {"freq_hz": f, "re": cols["re"], "im": cols["im"], "model_re": model.real,
             "model_im": model.imag}
    res = {"kind": "G_minus_driven", "G_minus_hz": to_hz(fit.G_minus),
           "G_minus_err_hz": to_hz(fit.G_minus_err),
           "line_gain_re": fit.gain.real, "line_gain_im": fit.gain.imag}
    return res, table


CALIBRATION_LAYOUTS = (
    ({"n_m_th", "ratio"}, {"sigma"}, _calibrate_g0),
    ({"power", "linewidth_hz"}, {"sigma_hz"}, _calibrate_weak),
    ({"freq_hz", "re", "im"}, set(), _calibrate_trace),
)


def cmd_calibrate(cfg: RunConfig, out: Path, args) -> int:
    if not args.data:
        raise CommandError("calibrate needs --data")
    cols, _ = read_table(args.data)
    for required, optional, handler in CALIBRATION_LAYOUTS:
        if required <= set(cols) and set(cols) <= required | optional:
            break
    else:
        raise CommandError(f"{args.data}: unrecognised calibration columns {sorted(cols)}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            res, table = handler(cfg, cols)
        except ValueError as exc:
            raise CommandError(f"calibration failed: {exc}") from exc
    res["warnings"] = sorted({str(w.message) for w in caught})
    res["data_file"] = Path(args.data).name
    write_json(out / "calibration.json", res)
    write_table(out / "calibration.csv", table)
    return EXIT_OK


def _phases(cfg):
    if cfg.schedule.kind == "phase_sweep" and cfg.schedule.phases_rad:
        return np.asarray(cfg.schedule.phases_rad, dtype=float)
    return np.linspace(0.0, np.pi, 8, endpoint=False)


def cmd_bae(cfg: RunConfig, out: Path, args) -> int:
    params, pumps, baths, pr = cfg.params, cfg.pumps, cfg.baths, cfg.probe
    rows = [_point_report(cfg, pumps)]
    _check_unstable(rows, args.allow_unstable)
    if not rows[0]["stable"]:
        write_json(out / "bae.json", {"stable": False, "point": rows[0]})
        return EXIT_OK
    probe = bae.ProbeConfig(pr.n_p_probe, 0.0, TWO_PI * pr.probe_offset_hz)
    model = SpectrumModelParams.around(to_hz(params.omega_c) + pr.probe_offset_hz, pr.span_hz,
                                       pr.n_points, s0=pr.s0, gain=cfg.spectrum.gain)
    q = analytics.quad_variances(params, pumps, baths)
    scale = bae.sideband_scale(params, probe)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.data:
            cols, _ = read_table(args.data)
            if not {"theta_rad", "freq_hz", "psd"} <= set(cols):
                raise CommandError(f"{args.data}: need columns theta_rad,freq_hz,psd")
            bg = pr.s0
            table = []
            for theta in np.unique(cols["theta_rad"]):
                m = cols["theta_rad"] == theta
                f, psd = cols["freq_hz"][m], cols["psd"][m]
                if pr.include_background:
                    bg = bae.background_spectrum(params, pumps, baths,
                                                 SpectrumModelParams(pr.s0, model.gain, f))
                est = bae.extract_variance(f, psd, bg, scale, model.gain, params.omega_c)
                table.append((float(theta), est.variance, est.stderr,
                              float(bae.variance_vs_phase(q, theta))))
        else:
            rng = np.random.default_rng(cfg.seed) if pr.n_avg > 0 else None
            table = bae.phase_sweep(params, pumps, probe, baths, model, _phases(cfg), rng=rng,
                                    n_avg=pr.n_avg or None, include_background=pr.include_background)
    theta, v, err, expected = (np.array(c, dtype=float) for c in zip(*table))
    write_table(out / "vtheta.csv", {"theta_rad": theta, "variance": v, "stderr": err,
                                     "expected": expected})
    res = {
        "configured": {"var_x1": q.var_x1, "var_x2": q.var_x2, "cov_x12": q.cov_x12},
        "sideband_scale": scale,
        "probe": {"n_p_probe": pr.n_p_probe, "probe_offset_hz": pr.probe_offset_hz},
        "seed": cfg.seed,
        "n_failed": int(np.sum(~np.isfinite(v))),
        "warnings": sorted({str(w.message) for w in caught}),
    }
    try:
        rec = bae.fit_quadratures(theta, v)
        vmin, vmax = bae.principal_variances(rec)
        res["recovered"] = {"var_x1": rec.var_x1, "var_x2": rec.var_x2, "cov_x12": rec.cov_x12,
                            "min_variance": vmin, "max_variance": vmax}
        res["rms_relative_error"] = float(np.sqrt(np.nanmean(((v - expected) / expected) ** 2)))
    except ValueError as exc:
        res["recovered"] = None
        res["error"] = str(exc)
    write_json(out / "bae.json", res)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path, args) -> int:
    if cfg.schedule.kind == "phase_sweep":
        q = analytics.quad_variances(cfg.params, cfg.pumps, cfg.baths)
        th = _phases(cfg)
        write_table(out / "sweep.csv", {"theta_rad": th, "variance": bae.variance_vs_phase(q, th)})
        write_json(out / "sweep.json", {"kind": "phase_sweep", "var_x1": q.var_x1, "var_x2": q.var_x2})
        return EXIT_OK
    points = _schedule_points(cfg)
    if cfg.schedule.kind == "single":
        total = cfg.pumps.n_p_minus + cfg.pumps.n_p_plus
        points = [(f"ratio_{r:g}", PumpConfig.from_ratio(total, r))
                  for r in np.round(np.linspace(0.0, 0.95, 20), 10)]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rows = [_point_report(cfg, p) for _, p in points]
    _check_unstable(rows, args.allow_unstable)
    keys = ("var_x1", "var_x2", "occupation", "squeezing_db", "feature_sign")
    table = {
        "n_p_minus": [r["pumps"]["n_p_minus"] for r in rows],
        "n_p_plus": [r["pumps"]["n_p_plus"] for r in rows],
        "ratio": [r["ratio"] for r in rows],
        "G_minus_hz": [r["G_minus_hz"] for r in rows],
        "G_plus_hz": [r["G_plus_hz"] for r in rows],
        "gamma_eff_hz": [r["gamma_eff_hz"] for r in rows],
        "stable": [r["stable"] for r in rows],
    }
    for k in keys:
        table[k] = [r.get(k, math.nan) for r in rows]
    write_table(out / "sweep.csv", table)
    res = {"kind": cfg.schedule.kind, "n_points": len(rows),
           "warnings": sorted({str(w.message) for w in caught})}
    if cfg.schedule.kind in ("single", "ratio_sweep"):
        total = cfg.schedule.total_photons or cfg.pumps.n_p_minus + cfg.pumps.n_p_plus
        r_opt, q = analytics.optimize_ratio(cfg.params, cfg.baths, total)
        res["optimum"] = {"total_photons": total, "ratio": r_opt, "var_x1": q.var_x1,
                          "var_x2": q.var_x2, "squeezing_db": analytics.squeezing_db(q)}
    write_json(out / "sweep.json", res)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "calibrate": cmd_calibrate,
            "bae": cmd_bae, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mechsqueeze", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration (falls back to "
                                         "$MECHSQUEEZE_CONFIG_DIR/default.json)")
        p.add_argument("--out", help="output directory (default: config output_dir)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--data", help="input data file")
        p.add_argument("--allow-unstable", action="store_true")
        p.add_argument("--allow-unconverged", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        out = Path(args.out or cfg.output_dir)
        return COMMANDS[args.command](cfg, out, args)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
