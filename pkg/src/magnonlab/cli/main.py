"""
``magnonlab`` command line.

Exit codes: 0 success, 2 input error, 3 fit did not converge (results are
still written), 4 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

import numpy as np

from .. import __version__
from ..dispersive import detuning, dispersive_shifts, dispersive_validity
from ..errors import ConvergenceError, DegenerateError, DomainError, MagnonLabError
from ..fitting import (
    CAVITY_FIELDS,
    DEFAULT_SEED,
    apply_spectrum_parameters,
    fit_shift_power,
    fit_spectrum,
    shift_power_model,
    spectrum_parameter,
)
from ..params import cooperativity, kerr_coefficient, probe_photon_number, watts_to_dbm
from ..spectra import avoided_crossing_map, drive_sweep_family, drive_sweep_response, s21, worker_count
from ..steady import limit_shift, solve_shift_cubic
from . import svg
from .config import ConfigError, Scenario, emit, load, parse_quantity, parse_sweep_override
from .table import DataError, DataTable, load_table, matrix_csv, metadata

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_NUMERICAL = 0, 2, 3, 4
DEFAULT_MEMORY_MB = 512.0


class InputError(MagnonLabError, ValueError):
    pass


def _scenario(args) -> Scenario:
    sc = load(args.config)
    for text in args.sweep or ():
        sc = sc.with_sweep(parse_sweep_override(text))
    return sc


def _meta(args, sc: Scenario, seed=True):
    return metadata(args.command, args.seed if seed else None, emit(sc))


def _check_budget(args, *shape, bytes_per=16):
    need = float(np.prod(shape)) * bytes_per / 2**20
    if need > args.max_memory_mb:
        raise InputError(
            f"grid {' x '.join(map(str, shape))} needs ~{need:.1f} MiB, over the "
            f"--max-memory-mb budget of {args.max_memory_mb:g}"
        )


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_params(args, out=None) -> int:
    sc = _scenario(args)
    cav = sc.cavity
    lines = [f"kappa = {cav.kappa / 1e6:.6g} MHz"]
    for entry in sc.modes:
        m = entry.params
        delta = detuning(cav, m)
        lines.append(f"[{m.label}]")
        lines.append(f"  cooperativity C = {cooperativity(cav, m):.4f}")
        lines.append(f"  detuning Delta = {delta / 1e6:.6g} MHz")
        if m.g > 0:
            ratio = dispersive_validity(cav, m).ratio
            lines.append(f"  Delta/g = {ratio:.4f}")
        if delta != 0:
            lines.append(f"  static pull g^2/Delta = {m.g**2 / delta / 1e6:.4f} MHz")
    if sc.probe is not None:
        # photon number is measured from the dressed cavity of the driven mode
        f_c = cav.f_c_bare
        m = sc.mode()
        if detuning(cav, m) != 0:
            f_c = dispersive_shifts(cav, m).pulled_f_c
        n = probe_photon_number(sc.probe, cav, f_c=f_c)
        lines.append(f"probe photons n = {n:.4f}  (probe {watts_to_dbm(sc.probe.power):.6g} dBm)")
    if sc.material is not None:
        lines.append(f"material Kerr coefficient K = {kerr_coefficient(sc.material):.6g} Hz")
    (out or sys.stdout).write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_shift_curve(args) -> int:
    sc = _scenario(args)
    mode = sc.mode(args.mode)
    power = sc.sweep("power").grid()
    if power.size == 0:
        raise InputError("empty power range")
    shift = solve_shift_cubic(mode.gamma_m, mode.drive_c, power)
    ratio = 2.0 * mode.g**2 / detuning(sc.cavity, mode) ** 2
    cav_shift = shift * ratio / (1.0 - ratio)
    table = DataTable.from_columns(
        [("power_mw", power / 1e-3), ("shift_mhz", shift / 1e6), ("cavity_shift_mhz", cav_shift / 1e6)],
        meta=_meta(args, sc, seed=False),
    )
    table.write(args.output)
    if args.svg:
        series = [("full cubic", power / 1e-3, shift / 1e6)]
        with np.errstate(divide="ignore"):
            small = limit_shift(mode.gamma_m, mode.drive_c, power, "small")
            large = limit_shift(mode.gamma_m, mode.drive_c, power, "large")
        top = float(np.max(shift)) / 1e6 * 1.1 or 1.0
        series += [("cP/(gamma/2)^2", power / 1e-3, np.atleast_1d(small) / 1e6),
                   ("(cP)^(1/3)", power / 1e-3, np.atleast_1d(large) / 1e6)]
        svg.write(args.svg, svg.line_chart(series, "drive power (mW)", "Kerr shift (MHz)",
                                           f"mode {mode.label}", ylim=(0.0, top)))
    return EXIT_OK


def cmd_crossing_map(args) -> int:
    sc = _scenario(args)
    system = sc.system()
    if not system.bias_to_frequency:
        raise InputError("crossing-map needs a mode with a gyro entry to map bias field to frequency")
    bias = sc.sweep("bias").grid()
    probe = sc.sweep("probe").grid()
    _check_budget(args, len(bias), len(probe))
    grid = avoided_crossing_map(bias, probe, system, workers=args.workers)
    mag = grid.magnitude
    _write(args.output, matrix_csv(bias, "bias_t", probe, "freq_hz", mag, _meta(args, sc, seed=False)))
    if args.svg:
        ridge = probe[np.argmax(mag, axis=1)]
        svg.write(args.svg, svg.line_chart(
            [("max |S21|", bias / 1e-3, ridge / 1e9)], "bias field (mT)", "probe frequency (GHz)",
            "transmission maximum",
        ))
    return EXIT_OK


def cmd_drive_sweep(args) -> int:
    sc = _scenario(args)
    if sc.drive is None or sc.probe is None:
        raise InputError("drive-sweep needs [drive] and [probe] sections")
    system = sc.system()
    label = sc.mode(args.mode).label
    fd = sc.sweep("drive").grid()
    powers = [parse_quantity(p, "power").value for p in args.powers.split(",")] if args.powers else None
    if powers is None:
        _check_budget(args, len(fd), 8, bytes_per=8)
        sw = drive_sweep_response(fd, sc.drive.power_source, system, sc.probe.f_p, label,
                                  args.direction, sc.drive.attenuation_db)
        table = DataTable.from_columns(
            [("f_d_ghz", sw.f_d / 1e9), ("s21_mag", sw.s21_mag), ("magnon_shift_mhz", sw.magnon_shift / 1e6),
             ("cavity_shift_mhz", sw.cavity_shift / 1e6), ("roots_count", sw.n_roots)],
            meta=_meta(args, sc, seed=False) + [f"dip: {sw.dip_center()!r} Hz", f"delivered power: {sw.power!r} W"],
        )
        table.write(args.output)
        if args.svg:
            svg.write(args.svg, svg.line_chart([("|S21|", sw.f_d / 1e9, sw.s21_mag)], "drive frequency (GHz)",
                                               "|S21|", f"probe {sc.probe.f_p / 1e9:.6g} GHz"))
        return EXIT_OK
    _check_budget(args, len(fd), len(powers), bytes_per=8)
    sweeps = drive_sweep_family(powers, fd, system, sc.probe.f_p, label, args.direction,
                                workers=args.workers, attenuation_db=sc.drive.attenuation_db)
    body = np.column_stack([s.s21_mag for s in sweeps])
    _write(args.output, matrix_csv(fd / 1e9, "f_d_ghz", powers, "power_w", body, _meta(args, sc, seed=False)))
    if args.svg:
        series = [(f"{watts_to_dbm(p):.3g} dBm" if p > 0 else "0 W", s.f_d / 1e9, s.s21_mag)
                  for p, s in zip(powers, sweeps)]
        svg.write(args.svg, svg.line_chart(series, "drive frequency (GHz)", "|S21|"))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    sc = _scenario(args)
    freq = sc.sweep("probe").grid()
    _check_budget(args, len(freq), 3)
    mag = np.abs(s21(freq, sc.system()))
    if args.noise:
        rng = np.random.default_rng(args.seed)
        mag = mag + args.noise * mag.max() * rng.standard_normal(mag.shape)
    table = DataTable.from_columns(
        [("freq_ghz", freq / 1e9), ("s21_mag", mag)],
        meta=_meta(args, sc) + ([f"noise: {args.noise!r} of peak"] if args.noise else []),
    )
    table.write(args.output)
    if args.svg:
        svg.write(args.svg, svg.line_chart([("|S21|", freq / 1e9, mag)], "probe frequency (GHz)", "|S21|"))
    return EXIT_OK


def _fit_report(res, extra=()):
    lines = [f"converged: {res.converged}", f"residual: {res.residual!r}", f"iterations: {res.iterations}",
             f"seed: {res.seed}", f"message: {res.message}"]
    lines += [f"fit {k} = {v!r}" for k, v in res.values.items()]
    return lines + list(extra)


def cmd_fit_shift(args) -> int:
    sc = _scenario(args)
    data = load_table(args.data)
    power_mw, shift_mhz = data.column("power_mw"), data.column("shift_mhz")
    power, shift = data.si("power_mw"), data.si("shift_mhz")
    if len(power) < 4:
        raise InputError(f"{args.data}: {len(power)} rows is too few to fit two parameters")
    mode = sc.mode(args.mode)
    if mode.drive_c <= 0:
        raise InputError(f"mode {mode.label!r} needs a positive drive_c as the initial value")
    init = {"gamma_m": mode.gamma_m, "drive_c": mode.drive_c}
    res = fit_shift_power(
        np.column_stack([power, shift]), init, fixed_gamma=mode.gamma_m if args.fix_gamma else None,
        seed=args.seed, restarts=args.restarts, workers=args.workers, maxiter=args.maxiter,
    )
    model = shift_power_model(power, res["gamma_m"], res["drive_c"])
    table = DataTable.from_columns(
        [("power_mw", power_mw), ("shift_mhz", shift_mhz), ("model_mhz", model / 1e6)],
        meta=_meta(args, sc) + _fit_report(res, [f"fit drive_c/(2pi)^3 = {res['drive_c'] / (2 * np.pi) ** 3!r}"]),
    )
    table.write(args.output)
    _print_fit(res)
    if args.svg:
        svg.write(args.svg, svg.line_chart(
            [("data", power_mw, shift_mhz), ("fit", power_mw, model / 1e6)], "drive power (mW)", "shift (MHz)"))
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_fit_spectrum(args) -> int:
    sc = _scenario(args)
    system = sc.system()
    data = load_table(args.data)
    freq_ghz, mag = data.column("freq_ghz"), data.column("s21_mag")
    freq = data.si("freq_ghz")
    if args.free:
        free = [f.strip() for f in args.free.split(",") if f.strip()]
    else:
        free = ["f_c", "kappa_int"] + [f"{k}:{m.label}" for m in system.modes for k in ("f_m", "gamma_m", "g")]
    for name in free:
        try:
            spectrum_parameter(system, name)
        except KeyError as exc:
            raise InputError(f"--free: {exc.args[0]} (cavity: {', '.join(CAVITY_FIELDS)}; modes: f_m:, gamma_m:, g:)") from None
    if len(freq) < 2 * len(free):
        raise InputError(f"{args.data}: {len(freq)} rows is too few for {len(free)} free parameters")
    res = fit_spectrum(np.column_stack([freq, mag]), system, free, loss=args.loss, seed=args.seed,
                       restarts=args.restarts, workers=args.workers, maxiter=args.maxiter)
    model = np.abs(s21(freq, apply_spectrum_parameters(system, res.values)))
    table = DataTable.from_columns([("freq_ghz", freq_ghz), ("s21_mag", mag), ("model_mag", model)],
                                   meta=_meta(args, sc) + _fit_report(res))
    table.write(args.output)
    _print_fit(res)
    if args.svg:
        svg.write(args.svg, svg.line_chart([("data", freq_ghz, mag), ("fit", freq_ghz, model)],
                                           "probe frequency (GHz)", "|S21|"))
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def _print_fit(res):
    for k, v in res.values.items():
        print(f"{k} = {v:.9g}")
    print(f"residual = {res.residual:.6g}  converged = {res.converged}")


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="scenario file")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"random seed for noise and fit restarts (default {DEFAULT_SEED})")
    common.add_argument("--sweep", action="append", metavar="NAME=START:STOP:N[:log]",
                        help="override or add a sweep block, e.g. power=0mW:15mW:151")
    common.add_argument("--workers", type=int, default=None,
                        help="worker pool size (capped by $MAGNONLAB_THREADS)")
    common.add_argument("--max-memory-mb", type=float, default=DEFAULT_MEMORY_MB,
                        help="refuse grids whose result would exceed this size")
    common.add_argument("--mode", default=None, help="mode label (default: the [drive] mode or the first mode)")

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("-o", "--output", required=True, help="CSV output path")
    out.add_argument("--svg", default=None, help="optional SVG plot path")

    parser = argparse.ArgumentParser(prog="magnonlab", description="cavity-magnon Kerr workbench")
    parser.add_argument("--version", action="version", version=f"magnonlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("params", parents=[common], help="derived quantities of a scenario").set_defaults(func=cmd_params)
    sub.add_parser("shift-curve", parents=[common, out], help="Kerr shift vs drive power").set_defaults(
        func=cmd_shift_curve)
    sub.add_parser("crossing-map", parents=[common, out], help="|S21| over bias field and probe frequency"
                   ).set_defaults(func=cmd_crossing_map)
    p = sub.add_parser("drive-sweep", parents=[common, out], help="|S21| at the probe vs drive frequency")
    p.add_argument("--direction", choices=("up", "down"), default="up")
    p.add_argument("--powers", default=None, help="comma list of source powers with units, e.g. -5dBm,0dBm,5dBm")
    p.set_defaults(func=cmd_drive_sweep)
    p = sub.add_parser("spectrum", parents=[common, out], help="|S21| vs probe frequency, undriven")
    p.add_argument("--noise", type=float, default=0.0, help="additive noise as a fraction of the peak |S21|")
    p.set_defaults(func=cmd_spectrum)
    for name, func, extra in (("fit-shift", cmd_fit_shift, True), ("fit-spectrum", cmd_fit_spectrum, False)):
        p = sub.add_parser(name, parents=[common, out])
        p.add_argument("data", help="CSV with (power_mw, shift_mhz) or (freq_ghz, s21_mag) columns")
        p.add_argument("--restarts", type=int, default=4)
        p.add_argument("--maxiter", type=int, default=None, help="Nelder-Mead iteration cap per run")
        if extra:
            p.add_argument("--fix-gamma", action="store_true", help="hold gamma_m at the config value")
        else:
            p.add_argument("--free", default=None, help="comma list of parameters to fit, e.g. f_c,g:kittel")
            p.add_argument("--loss", choices=("linear", "log"), default="linear")
        p.set_defaults(func=func)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers is not None:
        args.workers = worker_count(args.workers)
    try:
        return args.func(args)
    except (ConfigError, DataError, InputError, DomainError, KeyError) as exc:
        print(f"magnonlab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"magnonlab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, DegenerateError, ArithmeticError) as exc:
        print(f"magnonlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
