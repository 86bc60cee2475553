"""Command-line front end: ``tbent {fringe,tomo,rates,qpm,selftest}``.

Exit codes: 0 success, 2 configuration error, 3 numeric or fit failure,
4 dispersion data out of range.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis.fringes import FringeScan, bootstrap_visibility, chsh_check, fit_fringe, predict_fringe
from .analysis.noise import ideal_target
from .analysis.tomography import bootstrap_fidelity, input_from_records, measurement_plan, tomography_mle
from .config import ExperimentConfig, explain
from .detection import acquire, estimate_car, estimate_pgr
from .errors import ConfigError, DegenerateDataError, OutOfModelError, TbentError, UndefinedEstimateError
from .optics import AnalyzerSetting
from .phasematch import DispersionTable, PolingSpec, jsi, qpm_design
from .rng import stream
from .source import mean_pairs

SEED_ENV = "TBENT_SEED"
# CWDM channel centres (nm) per channel pair, 18 nm wide
CWDM = {1: (1530.0, 1570.0), 2: (1510.0, 1590.0)}


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    seed = args.seed
    if seed is None and os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    return cfg.with_seed(seed) if seed is not None else cfg


def _write(prefix: str | None, suffix: str, text: str) -> None:
    if prefix:
        Path(prefix + suffix).write_text(text)


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_plain) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


# ---------------------------------------------------------------------------
# fringe
# ---------------------------------------------------------------------------

def cmd_fringe(args, cfg: ExperimentConfig) -> dict:
    if args.points < 8:
        raise ConfigError("a fringe scan needs at least 8 points")
    if args.noiseless:
        cfg = cfg.noiseless()
    pulses = args.pulses or cfg.analysis.pulses
    theta_s = math.radians(45.0 if args.basis == "hv" else 22.5)
    thetas = np.linspace(0.0, math.pi, args.points)
    order = "twofold" if args.order == 2 else "fourfold"
    counts = []
    for k, th in enumerate(thetas):
        s, i = AnalyzerSetting(hwp=theta_s), AnalyzerSetting(hwp=th)
        rec = acquire(cfg.source, cfg.optics, cfg.losses, cfg.detectors, pulses, (s, i, s, i),
                      engine=args.engine, setting_id=k, threads=args.threads)
        counts.append(rec.coincidences(0, 0, (0, 0)) if args.order == 2 else rec.fourfold[0, 0, 0, 0])
    scan = FringeScan.from_counts(theta_s, thetas, counts, order)
    fit = fit_fringe(scan)
    model = fit.amplitude * np.cos(2 * thetas - fit.phase) ** args.order + fit.offset
    summary = {
        "order": args.order, "basis": args.basis, "theta_s_deg": math.degrees(theta_s),
        "pulses_per_point": pulses, "engine": args.engine, "seed": cfg.source.seed,
        "visibility": fit.visibility, "r_squared": fit.r_squared, "phase_rad": fit.phase,
        "c_max": fit.c_max, "c_min": fit.c_min,
    }
    if args.bootstrap:
        _, err = bootstrap_visibility(scan, args.bootstrap, stream(cfg.source.seed, "fringe-bootstrap"))
        summary["visibility_std"] = err
    if args.order == 2:
        check = chsh_check(min(max(fit.visibility, 0.0), 1.0))
        summary.update(chsh_violated=check.violated, chsh_margin=check.margin)
    rows = [(_fmt(math.degrees(t)), _fmt(c), _fmt(m)) for t, c, m in zip(thetas, counts, model)]
    _write(args.out, ".csv", _csv_text(("theta_i_deg", "counts", "model"), rows))
    _write(args.out, ".json", _dumps(summary))
    return summary


# ---------------------------------------------------------------------------
# tomography
# ---------------------------------------------------------------------------

def cmd_tomo(args, cfg: ExperimentConfig) -> dict:
    if args.qubits == 2 and args.target == "bell2" or args.qubits == 4 and args.target == "bell":
        raise ConfigError("target bell needs --qubits 2 and bell2 needs --qubits 4")
    if args.noiseless:
        cfg = cfg.noiseless()
    scheme = args.scheme or (cfg.analysis.tomography_scheme if args.qubits == 4 else "full")
    pulses = args.pulses or cfg.analysis.pulses
    plan = measurement_plan(args.qubits, scheme)
    default = AnalyzerSetting()
    records = []
    for k, entry in enumerate(plan):
        settings = entry.settings + (default, default) if args.qubits == 2 else entry.settings
        records.append(acquire(cfg.source, cfg.optics, cfg.losses, cfg.detectors, pulses, settings,
                               engine=args.engine, setting_id=k, threads=args.threads))
    data = input_from_records(records, scheme, group=0 if args.qubits == 2 else None)
    total = float(data.counts.sum())
    if total == 0:
        raise DegenerateDataError("no coincidences recorded; increase --pulses or use --engine sampled")
    degraded = total < 10 * data.dim ** 2
    if degraded:
        _warn(f"only {total:.0f} counts over {len(data.counts)} projectors; fidelity error bars unreliable")
    target = ideal_target(cfg.source, cfg.optics, photons=args.qubits)
    result = tomography_mle(data, target)
    summary = {
        "qubits": args.qubits, "scheme": scheme, "settings": len(plan), "pulses_per_setting": pulses,
        "engine": args.engine, "seed": cfg.source.seed, "total_counts": total,
        "degraded_confidence": degraded, "fidelity": result.fidelity,
        "log_likelihood": result.log_likelihood, "converged": result.converged, "method": result.method,
        "rho": result.rho.to_dict(),
    }
    if args.bootstrap:
        _, err = bootstrap_fidelity(data, target, args.bootstrap, stream(cfg.source.seed, "tomo-bootstrap"),
                                    fit=result)
        summary["fidelity_std"] = err
    _write(args.out, ".json", _dumps(summary))
    return summary


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------

def _sweep(spec: str) -> np.ndarray:
    try:
        lo, hi, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ConfigError(f"power sweep must look like lo:hi:n, got {spec!r}") from None
    if n < 1 or lo < 0 or hi < lo:
        raise ConfigError("power sweep needs 0 <= lo <= hi and n >= 1")
    return np.linspace(lo, hi, n)


def _estimate_or_blank(fn, rec, group, **kw):
    try:
        est = fn(rec, group, **kw)
    except UndefinedEstimateError:
        return None, None
    return est.value, est.stderr


RATE_COLUMNS = ("power_mw", "singles_s1", "singles_i1", "singles_s2", "singles_i2", "twofold_1", "twofold_2",
                "accidental_1", "accidental_2", "fourfold", "pgr_1_hz", "pgr_1_err", "pgr_2_hz", "pgr_2_err",
                "pgr_1_corr_hz", "pgr_1_corr_err", "pgr_2_corr_hz", "pgr_2_corr_err",
                "car_1", "car_1_err", "car_2", "car_2_err")


def cmd_rates(args, cfg: ExperimentConfig) -> dict:
    pulses = args.pulses or cfg.analysis.pulses
    rows, points = [], []
    for k, power in enumerate(_sweep(args.power_sweep)):
        source = dataclasses.replace(cfg.source, pump_power_mw=float(power))
        try:
            mean_pairs(source, 0), mean_pairs(source, 1)
        except OutOfModelError as exc:
            _warn(f"sweep truncated at {power:g} mW: {exc}")
            break
        rec = acquire(source, cfg.optics, cfg.losses, cfg.detectors, pulses, engine=args.engine,
                      setting_id=k, threads=args.threads)
        acc = [(rec.coincidences(g, -1) + rec.coincidences(g, 1)) / 2 for g in (0, 1)]
        row = [power, *(rec.channel_singles(c) for c in range(4)), rec.coincidences(0), rec.coincidences(1),
               *acc, rec.fourfold_total()]
        # raw Klyshko, then with the n = +-1 accidentals subtracted from C(0)
        for fn, kw in ((estimate_pgr, {}), (estimate_pgr, {"subtract_accidentals": True}), (estimate_car, {})):
            for g in (0, 1):
                row.extend(_estimate_or_blank(fn, rec, g, **kw))
        rows.append(row)
        points.append(dict(zip(RATE_COLUMNS, row)))
    text = _csv_text(RATE_COLUMNS, [[_fmt(v) for v in r] for r in rows])
    _write(args.out, ".csv", text)
    summary = {"pulses_per_point": pulses, "engine": args.engine, "seed": cfg.source.seed, "points": points}
    _write(args.out, ".json", _dumps(summary))
    return summary


# ---------------------------------------------------------------------------
# phase matching
# ---------------------------------------------------------------------------

def cmd_qpm(args, cfg: ExperimentConfig) -> dict:
    pm = cfg.phasematch
    table = DispersionTable.from_csv(*args.dispersion) if args.dispersion else pm.table()
    pump = args.pump or pm.pump_nm
    length = args.length or pm.length_mm
    duty = args.duty if args.duty is not None else pm.duty_cycle
    shg = dataclasses.replace(pm, pump_nm=pump).shg(table)
    design = qpm_design(table, pump, length, duty, shg)
    design["geometry_um"] = {"width": pm.waveguide_width_um, "etch_depth": pm.etch_depth_um,
                             "film_thickness": pm.film_thickness_um}
    if args.jsi:
        poling = PolingSpec(design["period_um"], length, duty)
        cs, ci = CWDM[args.jsi]
        grid = np.arange(-9.0, 9.0 + 1e-9, args.jsi_step)
        m = jsi(table, poling, pump, cs + grid, ci + grid)
        _write(args.out, ".jsi.csv", m.to_csv())
        design["jsi_channels_nm"] = [cs, ci]
    _write(args.out, ".json", _dumps(design))
    return design


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def cmd_selftest(args, cfg: ExperimentConfig) -> dict:
    from .analysis.tomography import exact_input
    from .optics import dof_convert
    from .source import ideal_pair_state
    from .state import fidelity, ideal_bell, ideal_bell_pair_product, to_density, werner_state

    checks = {}
    out = dof_convert(ideal_pair_state(0.3), 0.5, 0.7)
    checks["dof_conversion"] = (abs(out.success_probability - 0.25) < 1e-12
                                and fidelity(to_density(out.state), ideal_bell(0.9)) > 1 - 1e-10)
    period = qpm_design(DispersionTable.fixtures())["period_um"]
    checks["qpm_period"] = abs(period - 14.99) < 0.01
    p = predict_fringe(ideal_bell_pair_product(), 0.2, 0.2, "fourfold")
    checks["fourfold_fringe"] = abs(p - 0.25) < 1e-12
    res = tomography_mle(exact_input(werner_state(0.832)), ideal_bell())
    checks["werner_tomography"] = abs(res.fidelity - 0.874) < 5e-3
    rows = {"checks": checks, "passed": all(checks.values())}
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}", file=sys.stderr)
    return rows


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--seed", type=int, help=f"override the master seed (else ${SEED_ENV}, else config)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads")
    common.add_argument("--out", metavar="PREFIX", help="write PREFIX.csv / PREFIX.json")

    parser = argparse.ArgumentParser(prog="tbent", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--explain", action="store_true", help="list every assumption-tagged default and exit")
    parser.add_argument("--config", help="configuration to explain")
    sub = parser.add_subparsers(dest="command")

    engines = ("mc", "sampled")
    p = sub.add_parser("fringe", parents=[common], help="polarization fringe scan")
    p.add_argument("--order", type=int, choices=(2, 4), default=2)
    p.add_argument("--basis", choices=("hv", "pm"), default="hv", help="signal analyzers at 45 or 22.5 deg HWP")
    p.add_argument("--points", type=int, default=37)
    p.add_argument("--pulses", type=int)
    p.add_argument("--engine", choices=engines, default="mc")
    p.add_argument("--bootstrap", type=int, default=0, help="bootstrap resamples for the visibility error")
    p.add_argument("--noiseless", action="store_true", help="one lossless pair per channel pair, no noise")
    p.set_defaults(func=cmd_fringe)

    p = sub.add_parser("tomo", parents=[common], help="state tomography with maximum likelihood")
    p.add_argument("--qubits", type=int, choices=(2, 4), default=2)
    p.add_argument("--target", choices=("bell", "bell2"))
    p.add_argument("--scheme", choices=("full", "pauli"))
    p.add_argument("--pulses", type=int)
    p.add_argument("--engine", choices=engines, default="mc")
    p.add_argument("--bootstrap", type=int, default=0)
    p.add_argument("--noiseless", action="store_true")
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("rates", parents=[common], help="singles, coincidences, PGR and CAR versus pump power")
    p.add_argument("--power-sweep", default="0.02:0.12:6", metavar="LO:HI:N", help="pump power in mW")
    p.add_argument("--pulses", type=int)
    p.add_argument("--engine", choices=engines, default="mc")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("qpm", parents=[common], help="poling period, bandwidths and SHG efficiency")
    p.add_argument("dispersion", nargs="*", help="dispersion CSV files (wavelength_nm,n_eff)")
    p.add_argument("--length", type=float, help="waveguide length in mm")
    p.add_argument("--duty", type=float, help="poling duty cycle")
    p.add_argument("--pump", type=float, help="pump wavelength in nm")
    p.add_argument("--jsi", type=int, choices=(1, 2), help="also write the JSI of this channel pair")
    p.add_argument("--jsi-step", type=float, default=0.05, help="JSI grid step in nm")
    p.set_defaults(func=cmd_qpm)

    p = sub.add_parser("selftest", parents=[common], help="fast built-in consistency checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.explain:
            cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
            for key, value, note in explain(cfg):
                print(f"{key} = {json.dumps(value)}  # {note}")
            return 0
        if not args.command:
            parser.print_usage(sys.stderr)
            return 2
        if getattr(args, "threads", 1) < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = _load_config(args)
        if args.command == "tomo" and args.target is None:
            args.target = "bell" if args.qubits == 2 else "bell2"
        result = args.func(args, cfg)
    except TbentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    sys.stdout.write(_dumps(result))
    if args.command == "selftest" and not result["passed"]:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
