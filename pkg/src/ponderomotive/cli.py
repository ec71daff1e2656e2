"""Batch command-line front end.

All external files use Hz and degrees. Every output carries ``schema_version``
and the SHA-256 of the canonical config it was computed from.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace

import numpy as np

from .analysis import (
    fit_detuning,
    fit_shot_noise_slope,
    floor_curves,
    minimum_uncertainty_product,
    squeezing_minimum,
    to_db,
)
from .classical import total_detected_spectrum
from .config import SCHEMA_VERSION, ConfigError, load_config, preset_names
from .detection import Scheme
from .errors import ConsistencyError, FitError, InstabilityError, ParameterError, SingularityError
from .mechanics import cooperativity, rpsn_thermal_ratio
from .model import output_quadrature_spectrum
from .oracle import oracle_deviation
from .params import TWO_PI, QuadratureSpectrum

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 2
EXIT_MODEL = 3

ORACLE_TOLERANCE = 1e-8
SPECTRUM_COLUMNS = ("frequency_hz", "value_shot_units", "value_db")
SWEEP_COLUMNS = ("axis_value", "frequency_hz", "value_shot_units", "value_db", "status")


class InputError(Exception):
    """Malformed user input other than the run config (CSV files, flags)."""


# ---------------------------------------------------------------- formatting


def _num(x):
    x = float(x)
    return "nan" if math.isnan(x) else format(x, ".17g")


def _json_num(x):
    x = float(x)
    return None if not math.isfinite(x) else x


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _table(meta, columns, rows, fmt):
    """Render rows (tuples of floats/strings) as CSV with ``#`` metadata or as JSON."""
    if fmt == "json":
        body = dict(meta)
        body["columns"] = list(columns)
        body["rows"] = [[v if isinstance(v, str) else _json_num(v) for v in row] for row in rows]
        return _dumps(body)
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}: {meta[key]}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else _num(v) for v in row])
    return buf.getvalue()


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _meta(cfg, kind, **extra):
    meta = {"schema_version": SCHEMA_VERSION, "config_sha256": cfg.digest(), "kind": kind}
    meta.update(extra)
    return meta


# ---------------------------------------------------------------- spectra


def _spectrum_values(omega, params, chain, noise, phi=None):
    return total_detected_spectrum(omega, params, chain, noise, phi=phi)


def cmd_spectrum(cfg, fmt="csv"):
    params, chain = cfg.system_params(), cfg.detection_chain()
    omega = cfg.omega_grid()
    vals = _spectrum_values(omega, params, chain, cfg.noise())
    rows = [(f, v, to_db(v)) for f, v in zip(cfg.grid.frequencies_hz(), vals)]
    meta = _meta(cfg, "spectrum", scheme=chain.scheme.value, phi_deg=_num(cfg.detection.phi_deg))
    return _table(meta, SPECTRUM_COLUMNS, rows, fmt)


def _resolve_sweep(cfg, axis=None, start=None, stop=None, points=None):
    base = cfg.sweep
    axis = axis or (base.axis if base else None)
    if axis is None:
        raise InputError("sweep needs --axis or a sweep block in the config")
    if base is not None and axis != base.axis:
        base = None
    start = start if start is not None else (base.start if base else None)
    stop = stop if stop is not None else (base.stop if base else None)
    points = points if points is not None else (base.points if base else None)
    missing = [n for n, v in (("--from", start), ("--to", stop), ("--points", points)) if v is None]
    if missing:
        raise InputError(f"sweep over {axis} needs {', '.join(missing)}")
    if points < 1:
        raise InputError("--points must be >= 1")
    if not (math.isfinite(start) and math.isfinite(stop)):
        raise InputError("sweep range must be finite")
    values = np.array([start]) if points == 1 else np.linspace(start, stop, points)
    return axis, np.sort(values)


def cmd_sweep(cfg, axis=None, start=None, stop=None, points=None, fmt="csv"):
    """Long-format sweep; unstable points are flagged and the run continues.

    Axis units: ``detuning`` in Hz, ``phi`` in degrees, ``power`` as the mean
    intracavity photon number of the signal beam.
    """
    axis, values = _resolve_sweep(cfg, axis, start, stop, points)
    params, chain, noise = cfg.system_params(), cfg.detection_chain(), cfg.noise()
    omega = cfg.omega_grid()
    freqs = cfg.grid.frequencies_hz()
    rows = []
    for v in values:
        p, c = params, chain
        try:
            if axis == "detuning":
                p = params.replace(detuning=TWO_PI * float(v))
            elif axis == "power":
                p = params.replace(nbar=float(v))
            else:
                c = replace(chain, phi=math.radians(float(v)))
            vals, status = _spectrum_values(omega, p, c, noise), "ok"
        except InstabilityError:
            vals, status = np.full(omega.shape, np.nan), "unstable"
        except SingularityError:
            vals, status = np.full(omega.shape, np.nan), "singular"
        for f, s in zip(freqs, vals):
            rows.append((float(v), f, s, to_db(s) if s > 0 else math.nan, status))
    meta = _meta(cfg, "sweep", axis=axis, scheme=chain.scheme.value, phi_deg=_num(cfg.detection.phi_deg))
    return _table(meta, SWEEP_COLUMNS, rows, fmt)


# ---------------------------------------------------------------- CSV input


def read_table(path):
    """Parse a CSV written by this tool (or by hand): ``# key: value`` lines, a header, numeric rows.

    Returns ``(meta, columns, rows)`` with ``rows`` as a list of dicts.
    """
    try:
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    meta, header, rows = {}, None, []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, val = line[1:].partition(":")
            if sep:
                meta[key.strip()] = val.strip()
            continue
        fields = next(csv.reader([line]))
        if header is None:
            header = [f.strip() for f in fields]
            continue
        if len(fields) != len(header):
            raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        row = {}
        for name, raw in zip(header, fields):
            raw = raw.strip()
            if name == "status":
                row[name] = raw
                continue
            try:
                row[name] = float(raw)
            except ValueError:
                raise InputError(f"{path}:{lineno}: non-numeric value {raw!r} in column {name}") from None
        rows.append(row)
    if header is None:
        raise InputError(f"{path}: no header row")
    if not rows:
        raise InputError(f"{path}: no data rows")
    return meta, header, rows


def _require(path, header, names):
    missing = [n for n in names if n not in header]
    if missing:
        raise InputError(f"{path}: header is missing column(s) {', '.join(missing)}")


def spectrum_from_csv(path):
    """Load a spectrum or sweep CSV into a :class:`QuadratureSpectrum` plus its metadata.

    A sweep over ``phi`` becomes a map; any other file is read as a single
    spectrum (one value per frequency).
    """
    meta, header, rows = read_table(path)
    _require(path, header, ("frequency_hz", "value_shot_units"))
    if meta.get("kind") == "sweep" and meta.get("axis") == "phi" and "axis_value" in header:
        phis = sorted({r["axis_value"] for r in rows})
        freqs = sorted({r["frequency_hz"] for r in rows})
        fi = {f: i for i, f in enumerate(freqs)}
        pi = {p: j for j, p in enumerate(phis)}
        vals = np.full((len(phis), len(freqs)), np.nan)
        for r in rows:
            vals[pi[r["axis_value"]], fi[r["frequency_hz"]]] = r["value_shot_units"]
        phis_rad = np.radians(phis)
    else:
        freqs = [r["frequency_hz"] for r in rows]
        vals = np.array([r["value_shot_units"] for r in rows])
        if len(set(freqs)) != len(freqs):
            raise InputError(f"{path}: repeated frequency_hz values; sweep files need '# axis: phi'")
        order = np.argsort(freqs)
        freqs, vals = list(np.asarray(freqs)[order]), vals[order]
        phis_rad = np.radians([float(meta.get("phi_deg", "0"))])
    try:
        return QuadratureSpectrum(TWO_PI * np.asarray(freqs), phis_rad, vals), meta
    except ParameterError as exc:
        raise InputError(f"{path}: {exc}") from None


# ---------------------------------------------------------------- analysis


def _report(spec: QuadratureSpectrum):
    rep = squeezing_minimum(spec)
    return {
        "s_min": _json_num(rep.s_min),
        "s_min_db": _json_num(rep.s_min_db),
        "omega_opt_hz": _json_num(rep.omega_opt / TWO_PI),
        "phi_opt_deg": _json_num(math.degrees(rep.phi_opt)),
        "contour": [[_json_num(w / TWO_PI), _json_num(math.degrees(p))] for w, p in rep.contour],
    }


def analyze_config(cfg):
    params, chain, noise = cfg.system_params(), cfg.detection_chain(), cfg.noise()
    omega = cfg.omega_grid()
    if chain.scheme is Scheme.HOMODYNE:
        phis = np.radians(cfg.grid.phis_deg())
    else:
        phis = np.zeros(1)
    vals = total_detected_spectrum(omega, params, chain, noise, phi=phis[:, None])
    body = _report(QuadratureSpectrum(omega, phis, vals))
    product = minimum_uncertainty_product(omega, params, chain)
    i_lo, i_hi = int(np.argmin(product)), int(np.argmax(product))
    freqs = cfg.grid.frequencies_hz()
    body["uncertainty_product"] = {
        "min": _json_num(product[i_lo]),
        "min_frequency_hz": _json_num(freqs[i_lo]),
        "max": _json_num(product[i_hi]),
        "max_frequency_hz": _json_num(freqs[i_hi]),
    }
    body["C"] = _json_num(cooperativity(params))
    try:
        ratio = rpsn_thermal_ratio(params)
    except ParameterError:
        ratio = math.inf
    body["R"] = _json_num(ratio)
    thermal, eff, combined = floor_curves(ratio, chain.epsilon)
    body["floors"] = {"thermal": thermal, "efficiency": eff, "combined": combined}
    body["epsilon"] = chain.epsilon
    return body


def cmd_analyze(cfg=None, data=None):
    if data is not None:
        spec, meta = spectrum_from_csv(data)
        body = _report(spec)
        body["source"] = {"kind": "csv", "config_sha256": meta.get("config_sha256")}
    else:
        body = analyze_config(cfg)
        body["source"] = {"kind": "config", "config_sha256": cfg.digest()}
    body["schema_version"] = SCHEMA_VERSION
    return _dumps(body)


def cmd_fit(cfg, data):
    spec, meta = spectrum_from_csv(data)
    fit = fit_detuning(spec, cfg.system_params(), cfg.detection_chain(), cfg.noise())
    return _dumps(
        {
            "schema_version": SCHEMA_VERSION,
            "config_sha256": cfg.digest(),
            "detuning_hz": fit.detuning / TWO_PI,
            "residual_rms_log": fit.residual,
            "evaluations": fit.evaluations,
        }
    )


def cmd_calibrate(data):
    _, header, rows = read_table(data)
    _require(data, header, ("photocurrent_a", "psd_a2_per_hz"))
    fit = fit_shot_noise_slope([r["photocurrent_a"] for r in rows], [r["psd_a2_per_hz"] for r in rows])
    return _dumps(
        {
            "schema_version": SCHEMA_VERSION,
            "slope_a_per_hz": fit.slope,
            "slope_stderr": fit.slope_stderr,
            "intercept_a2_per_hz": fit.intercept,
            "intercept_stderr": fit.intercept_stderr,
            "ratio_to_2qe": fit.shot_noise_ratio,
            "points": len(rows),
        }
    )


def oracle_check(cfg, samples=64):
    params = cfg.system_params()
    omega = cfg.omega_grid()
    idx = np.unique(np.linspace(0, omega.size - 1, max(1, min(samples, omega.size))).round().astype(int))
    phis = np.linspace(0.0, math.pi, 8, endpoint=False)
    dev = oracle_deviation(omega[idx], phis, params, output_quadrature_spectrum)
    return {
        "schema_version": SCHEMA_VERSION,
        "config_sha256": cfg.digest(),
        "frequencies": int(idx.size),
        "quadratures": int(phis.size),
        "max_relative_deviation": dev,
        "tolerance": ORACLE_TOLERANCE,
        "passed": dev <= ORACLE_TOLERANCE,
    }


# ---------------------------------------------------------------- entry point


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ponderomotive",
        description="Squeezed-light spectra of a linearized optomechanical cavity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, config=True, data=False, table=False):
        p = sub.add_parser(name, help=help_text)
        if config:
            p.add_argument("--config", required=not data, help="JSON config path or preset:NAME")
        if data:
            p.add_argument("--data", required=not config, help="input CSV file")
        p.add_argument("--out", help="output path (default: stdout)")
        if table:
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        return p

    add("spectrum", "detected spectrum on the config grid", table=True)
    sw = add("sweep", "spectra over a detuning, phase or power axis", table=True)
    sw.add_argument("--axis", choices=("detuning", "phi", "power"))
    sw.add_argument("--from", dest="start", type=float)
    sw.add_argument("--to", dest="stop", type=float)
    sw.add_argument("--points", type=int)
    add("analyze", "squeezing report from a config or a spectrum CSV", data=True)
    fit = sub.add_parser("fit", help="calibrate the signal detuning from a measured spectrum CSV")
    fit.add_argument("--config", required=True)
    fit.add_argument("--data", required=True)
    fit.add_argument("--out")
    add("calibrate", "shot-noise slope from photocurrent/PSD pairs", config=False, data=True)
    oc = add("oracle-check", "compare closed form with the numerical linear-response solve")
    oc.add_argument("--samples", type=int, default=64, help="frequencies sampled from the grid")
    sub.add_parser("presets", help="list bundled preset configs")
    return parser


def _run(args):
    if args.command == "presets":
        return "\n".join(preset_names()) + "\n", EXIT_OK
    if args.command == "calibrate":
        return cmd_calibrate(args.data), EXIT_OK
    if args.command == "analyze":
        if (args.config is None) == (args.data is None):
            raise InputError("analyze needs exactly one of --config or --data")
        cfg = load_config(args.config) if args.config else None
        return cmd_analyze(cfg, args.data), EXIT_OK
    cfg = load_config(args.config)
    if args.command == "spectrum":
        return cmd_spectrum(cfg, args.format), EXIT_OK
    if args.command == "sweep":
        return cmd_sweep(cfg, args.axis, args.start, args.stop, args.points, args.format), EXIT_OK
    if args.command == "fit":
        return cmd_fit(cfg, args.data), EXIT_OK
    result = oracle_check(cfg, args.samples)
    return _dumps(result), EXIT_OK if result["passed"] else EXIT_CHECK_FAILED


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text, code = _run(args)
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InstabilityError, SingularityError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (FitError, ConsistencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    _emit(text, getattr(args, "out", None))
    return code


if __name__ == "__main__":
    sys.exit(main())
