"""Command-line front end: one subcommand per study artifact.

``gatelab <equilibrium|scaling|modes|gate|optimize> --config <path>``
with optional ``--out <dir>``, ``--cache <dir>`` and ``--seed <int>``
(the gate subcommand also takes ``--schedule <path>``).

A flat ``key = value`` config file drives every subcommand; unknown or
malformed keys are rejected with their line number.  Every run emits tab
separated tables with '#' header metadata plus a deterministic
``summary.json``; identical config and seed give byte-identical files.
Solved crystals can be cached (``--cache``) and are re-dressed for the
requested trap on reuse, which is exact because the dimensionless planar
equilibrium depends only on the ion count.

Exit codes: 0 success, 2 config error, 3 numerical failure,
4 instability flagged.
"""

import argparse
import math
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import crystal as cr
from . import gate as gt
from . import modes as md
from . import optimizer as op
from .errors import ConfigError, GatelabError, UnstableSpectrum
from ._textio import (atomic_write_json, atomic_write_text, fmt, header_line,
                      parse_header)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# run configuration

@dataclass(frozen=True)
class RunConfig:
    """Typed view of one flat config file (frequencies in plain Hz)."""

    ion_count: int = 0
    omega_r_hz: float = 0.0
    omega_z_hz: float = 0.0
    ion_mass_kg: float = cr.MASS_BE9
    charge_c: float = cr.ELEMENTARY_CHARGE
    nbar: float = 0.1
    n_series: tuple = (7, 19, 37, 61, 91, 127, 169, 217)
    stability_n_series: tuple = (7, 19, 37, 61, 91, 127)
    beta_values: tuple = ()
    dmin_targets_m: tuple = (5e-6, 20e-6)
    pair: tuple = ()
    tau_s: float = 50e-6
    segments: int = 5
    mu_grid_points: int = 301
    mu_below_hz: float = 0.1e6
    mu_above_hz: float = 0.2e6
    amplitude_bound_hz: float = 0.0
    table: bool = False
    pair_count: int = 10
    omega_r_table_hz: tuple = (0.2e6, 1.0e6)
    response_samples: int = 2000
    schedule_file: str = ""
    output_dir: str = "gatelab-out"
    cache_dir: str = ""
    seed: int = 0


def _parse_int(text):
    return int(text, 0)


def _parse_float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("value must be finite")
    return value


def _parse_bool(text):
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError("expected a boolean (true/false)")


def _parse_list(text, item):
    if not text.strip():
        return ()
    return tuple(item(part.strip()) for part in text.split(","))


_PARSERS = {
    "int": _parse_int,
    "float": _parse_float,
    "bool": _parse_bool,
    "str": lambda text: text,
    "int_list": lambda text: _parse_list(text, _parse_int),
    "float_list": lambda text: _parse_list(text, _parse_float),
}

_SCHEMA = {
    "ion_count": "int",
    "omega_r_hz": "float",
    "omega_z_hz": "float",
    "ion_mass_kg": "float",
    "charge_c": "float",
    "nbar": "float",
    "n_series": "int_list",
    "stability_n_series": "int_list",
    "beta_values": "float_list",
    "dmin_targets_m": "float_list",
    "pair": "int_list",
    "tau_s": "float",
    "segments": "int",
    "mu_grid_points": "int",
    "mu_below_hz": "float",
    "mu_above_hz": "float",
    "amplitude_bound_hz": "float",
    "table": "bool",
    "pair_count": "int",
    "omega_r_table_hz": "float_list",
    "response_samples": "int",
    "schedule_file": "str",
    "output_dir": "str",
    "cache_dir": "str",
    "seed": "int",
}

_POSITIVE_KEYS = ("omega_r_hz", "omega_z_hz", "ion_mass_kg", "charge_c",
                  "tau_s", "segments", "mu_grid_points", "response_samples",
                  "pair_count")


def parse_config(path):
    """Parse and validate a flat key=value config file.

    Raises ConfigError with the offending line number for unknown keys,
    duplicate keys, and unparseable values.
    """
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError("cannot read config file: %s" % exc)
    values = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected 'key = value'" % lineno)
        key, _, text = line.partition("=")
        key = key.strip()
        text = text.strip()
        if key not in _SCHEMA:
            raise ConfigError("line %d: unknown key '%s'" % (lineno, key))
        if key in values:
            raise ConfigError("line %d: duplicate key '%s'" % (lineno, key))
        try:
            values[key] = _PARSERS[_SCHEMA[key]](text)
        except ValueError as exc:
            raise ConfigError("line %d: bad value for '%s': %s"
                              % (lineno, key, exc))
    config = RunConfig(**values)
    for key in _POSITIVE_KEYS + ("ion_count",):
        if key in values and not (values[key] > 0):
            raise ConfigError("'%s' must be positive" % key)
    if config.nbar < 0:
        raise ConfigError("'nbar' must be non-negative")
    if config.amplitude_bound_hz < 0:
        raise ConfigError("'amplitude_bound_hz' must be non-negative")
    if config.pair and len(config.pair) != 2:
        raise ConfigError("'pair' needs exactly two ion indices")
    if any(n < 1 for n in config.n_series + config.stability_n_series):
        raise ConfigError("ion numbers in series must be positive")
    if config.seed < 0:
        raise ConfigError("'seed' must be non-negative")
    return config


def _require(config, *keys):
    for key in keys:
        if not (getattr(config, key) > 0):
            raise ConfigError("'%s' is required by this subcommand" % key)


def trap_config(config, ion_count=None):
    return cr.TrapConfig(
        ion_count if ion_count is not None else config.ion_count,
        omega_r=TWO_PI * config.omega_r_hz,
        omega_z=TWO_PI * config.omega_z_hz,
        ion_mass=config.ion_mass_kg, charge=config.charge_c,
        temperature_nbar=config.nbar)


# ---------------------------------------------------------------------------
# crystal cache

def cached_crystal(config, cache_dir, ion_count=None):
    """Solve (or reload) the equilibrium for ``ion_count`` ions.

    The cache key is (ion count, seed): the dimensionless pattern depends
    on nothing else, and a cached crystal is re-dressed exactly for the
    requested trap.
    """
    trap = trap_config(config, ion_count)
    if cache_dir:
        path = os.path.join(
            cache_dir, "crystal-n%d-seed%d.tsv" % (trap.ion_count,
                                                   config.seed))
        if os.path.exists(path):
            return cr.with_trap(cr.read_crystal(path), trap)
        crystal = cr.solve_equilibrium(trap, rng_seed=config.seed)
        cr.write_crystal(crystal, path)
        return crystal
    return cr.solve_equilibrium(trap, rng_seed=config.seed)


# ---------------------------------------------------------------------------
# table writers and their parsers

def _json_float(value):
    value = float(value)
    return value if math.isfinite(value) else None


def _write_rows(path, title, meta, columns, rows):
    lines = ["# " + title]
    for key, value in meta:
        lines.append(header_line(key, value))
    lines.append(header_line("columns", "\t".join(columns)))
    for row in rows:
        lines.append("\t".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_rows(path):
    """Parse any CLI table: returns (meta dict, list of string-field rows)."""
    with open(path) as fh:
        meta, rows = parse_header(fh)
    return meta, [row.split("\t") for row in rows]


def lattice_deviation(crystal):
    """Per-ion distance to the nearest ideal-lattice site, dimensionless."""
    seed = cr.canonical_orientation(cr.triangular_seed(crystal.ion_count))
    u = crystal.positions
    d2 = ((u[:, None, :] - seed[None, :, :]) ** 2).sum(axis=2)
    return np.sqrt(d2.min(axis=1))


def write_positions(crystal, path):
    """Position table: metres, dimensionless, and lattice deviation."""
    deviation = lattice_deviation(crystal)
    ell = crystal.length_scale_ell
    meta = [("ion_count", crystal.ion_count),
            ("length_scale_m", fmt(ell)),
            ("u_min", fmt(crystal.u_min)),
            ("spacing_m", fmt(crystal.spacing_metres())),
            ("energy", fmt(crystal.energy))]
    rows = []
    for j in range(crystal.ion_count):
        x, y = crystal.positions[j]
        rows.append([str(j), fmt(x * ell, 15), fmt(y * ell, 15),
                     fmt(x, 15), fmt(y, 15), fmt(deviation[j], 15)])
    _write_rows(path, "gatelab ion positions", meta,
                ["ion", "x_m", "y_m", "u_x", "u_y", "lattice_deviation_u"],
                rows)


def read_positions(path):
    """Parse a file written by :func:`write_positions`."""
    meta, rows = read_rows(path)
    n = int(meta["ion_count"])
    coords = np.zeros((n, 2))
    deviation = np.zeros(n)
    for fields_ in rows:
        j = int(fields_[0])
        coords[j] = (float(fields_[3]), float(fields_[4]))
        deviation[j] = float(fields_[5])
    return meta, coords, deviation


# ---------------------------------------------------------------------------
# subcommands

def cmd_equilibrium(config, out_dir, cache_dir, args):
    _require(config, "ion_count", "omega_r_hz", "omega_z_hz")
    crystal = cached_crystal(config, cache_dir)
    crystal_path = os.path.join(out_dir, "crystal.tsv")
    positions_path = os.path.join(out_dir, "positions.tsv")
    cr.write_crystal(crystal, crystal_path)
    write_positions(crystal, positions_path)
    summary = {
        "command": "equilibrium",
        "ion_count": crystal.ion_count,
        "u_min": _json_float(crystal.u_min),
        "spacing_m": _json_float(crystal.spacing_metres()),
        "energy": _json_float(crystal.energy),
        "residual_gradient_norm": _json_float(crystal.residual_gradient_norm),
        "max_lattice_deviation_u": _json_float(
            lattice_deviation(crystal).max()),
        "files": ["crystal.tsv", "positions.tsv"],
    }
    return 0, summary


def cmd_scaling(config, out_dir, cache_dir, args):
    _require(config, "omega_r_hz", "omega_z_hz")
    if not config.n_series:
        raise ConfigError("'n_series' must not be empty")
    points = cr.min_spacing_scan(
        config.n_series,
        crystal_provider=lambda n: cached_crystal(config, cache_dir, n))
    ell = cr.length_scale(trap_config(config, ion_count=1))
    spacing_rows = [[str(n), fmt(u, 15), fmt(u * ell, 15)]
                    for n, u in points]
    meta = [("omega_r_hz", fmt(config.omega_r_hz))]
    fit = None
    if len(points) >= 3:
        fit = cr.fit_power_law(points)
        meta += [("fit_prefactor", fmt(fit.prefactor)),
                 ("fit_exponent", fmt(fit.exponent)),
                 ("fit_rms_log_residual", fmt(fit.rms_log_residual))]
    spacing_path = os.path.join(out_dir, "spacing_scan.tsv")
    _write_rows(spacing_path, "gatelab minimum-spacing scan", meta,
                ["n", "u_min", "d_min_m"], spacing_rows)

    required_rows = []
    u_by_n = dict(points)
    for n in config.n_series:
        for target in config.dmin_targets_m:
            omega = cr.omega_r_for_spacing(
                n, target, ion_mass=config.ion_mass_kg,
                charge=config.charge_c, u_min=u_by_n[n])
            required_rows.append([str(n), fmt(target, 15),
                                  fmt(omega / TWO_PI, 15)])
    required_path = os.path.join(out_dir, "required_omega_r.tsv")
    _write_rows(required_path, "gatelab radial frequency for target spacing",
                [("targets_m", ",".join(fmt(t) for t in
                                        config.dmin_targets_m))],
                ["n", "d_min_target_m", "omega_r_hz"], required_rows)
    summary = {
        "command": "scaling",
        "n_series": list(config.n_series),
        "fit_prefactor": _json_float(fit.prefactor) if fit else None,
        "fit_exponent": _json_float(fit.exponent) if fit else None,
        "fit_rms_log_residual": (_json_float(fit.rms_log_residual)
                                 if fit else None),
        "files": ["spacing_scan.tsv", "required_omega_r.tsv"],
    }
    return 0, summary


def cmd_modes(config, out_dir, cache_dir, args):
    _require(config, "ion_count", "omega_r_hz", "omega_z_hz")
    flagged = []
    files = []
    summary = {"command": "modes", "ion_count": config.ion_count}
    crystal = cached_crystal(config, cache_dir)
    try:
        spectrum = md.axial_spectrum(crystal)
        md.write_spectrum(spectrum, os.path.join(out_dir, "spectrum.tsv"))
        files.append("spectrum.tsv")
        low, high = spectrum.band_edges()
        summary["band_low_hz"] = _json_float(low / TWO_PI)
        summary["band_high_hz"] = _json_float(high / TWO_PI)
        if crystal.ion_count >= 2:
            summary["com_gap_hz"] = _json_float(
                md.com_gap(crystal) / TWO_PI)
        summary["stable"] = True
    except UnstableSpectrum as exc:
        summary["stable"] = False
        summary["instability"] = str(exc)
        flagged.append("spectrum")

    if config.stability_n_series:
        rows = []
        points = []
        for n in config.stability_n_series:
            shell = cached_crystal(config, cache_dir, n)
            beta_c = md.critical_beta(shell)
            rows.append([str(n), fmt(beta_c, 15), fmt(beta_c ** 2, 15)])
            if n > 2:
                points.append((n, beta_c ** 2))
        meta = []
        if len(points) >= 3:
            fit = cr.fit_power_law(points, shift=2.0)
            meta = [("fit_prefactor", fmt(fit.prefactor)),
                    ("fit_exponent", fmt(fit.exponent)),
                    ("fit_shift", fmt(fit.shift))]
            summary["beta_c_fit_prefactor"] = _json_float(fit.prefactor)
            summary["beta_c_fit_exponent"] = _json_float(fit.exponent)
        _write_rows(os.path.join(out_dir, "critical_beta.tsv"),
                    "gatelab critical anisotropy scan", meta,
                    ["n", "beta_c", "beta_c_squared"], rows)
        files.append("critical_beta.tsv")

    if config.beta_values:
        rows = []
        skipped = []
        for beta in config.beta_values:
            try:
                gap = md.com_gap(crystal, beta=beta)
            except UnstableSpectrum:
                skipped.append(beta)
                continue
            omega_z_hz = beta * config.omega_r_hz
            rows.append([fmt(beta, 15), fmt(gap / TWO_PI, 15),
                         fmt(omega_z_hz, 15)])
        _write_rows(os.path.join(out_dir, "com_gap.tsv"),
                    "gatelab uniform-mode gap versus anisotropy",
                    [("ion_count", config.ion_count)],
                    ["beta", "com_gap_hz", "omega_z_hz"], rows)
        files.append("com_gap.tsv")
        if skipped:
            summary["unstable_beta_values"] = [
                _json_float(b) for b in skipped]
            flagged.append("com_gap")

    summary["files"] = files
    summary["flagged"] = flagged
    return (4 if flagged else 0), summary


def cmd_gate(config, out_dir, cache_dir, args):
    _require(config, "ion_count", "omega_r_hz", "omega_z_hz")
    schedule_path = getattr(args, "schedule", None) or config.schedule_file
    if not schedule_path:
        raise ConfigError("gate needs a schedule: pass --schedule or set "
                          "'schedule_file'")
    try:
        schedule = gt.read_schedule(schedule_path)
    except OSError as exc:
        raise ConfigError("cannot read schedule file: %s" % exc)
    except (KeyError, ValueError, IndexError) as exc:
        raise ConfigError("malformed schedule file %s: %s"
                          % (schedule_path, exc))
    pair = schedule.target_pair
    if pair is None:
        if len(config.pair) != 2:
            raise ConfigError("schedule has no target pair; set 'pair'")
        pair = tuple(config.pair)
    crystal = cached_crystal(config, cache_dir)
    spectrum = md.axial_spectrum(crystal)
    report = gt.gate_report(schedule, spectrum, pair, nbar=config.nbar,
                            include_response=True,
                            samples=config.response_samples)
    gt.write_report(report, os.path.join(out_dir, "report.tsv"))
    summary = {
        "command": "gate",
        "pair": [int(pair[0]), int(pair[1])],
        "fidelity": _json_float(report.fidelity),
        "entangling_phase_rad": _json_float(report.phi),
        "residual_norm": _json_float(report.residual_norm),
        "max_amplitude_hz": _json_float(report.max_amplitude / TWO_PI),
        "files": ["report.tsv"],
    }
    return 0, summary


def cmd_optimize(config, out_dir, cache_dir, args):
    _require(config, "ion_count", "omega_r_hz", "omega_z_hz")
    crystal = cached_crystal(config, cache_dir)
    spectrum = md.axial_spectrum(crystal)
    pair = tuple(config.pair) if config.pair else op.default_pair_list(
        crystal, config.pair_count)[0]
    grid = op.default_mu_grid(TWO_PI * config.omega_z_hz,
                              points=config.mu_grid_points,
                              below_hz=config.mu_below_hz,
                              above_hz=config.mu_above_hz)
    bound = (TWO_PI * config.amplitude_bound_hz
             if config.amplitude_bound_hz > 0 else None)
    problem = op.OptimizationProblem(
        pair=pair, tau=config.tau_s, segment_count=config.segments,
        mu_grid=grid, nbar=config.nbar, amplitude_bound=bound)
    result = op.detuning_scan(spectrum, problem)
    op.write_scan(result, os.path.join(out_dir, "scan.tsv"))
    files = ["scan.tsv"]
    summary = {
        "command": "optimize",
        "pair": [int(pair[0]), int(pair[1])],
        "tau_s": _json_float(config.tau_s),
        "segments": config.segments,
        "feasible": result.feasible,
    }
    code = 0
    if result.feasible:
        gt.write_schedule(result.best_schedule,
                          os.path.join(out_dir, "best_schedule.tsv"))
        gt.write_report(result.best_report,
                        os.path.join(out_dir, "best_report.tsv"))
        files += ["best_schedule.tsv", "best_report.tsv"]
        edge = op.band_edge_optimum(result, spectrum.frequencies.max())
        summary.update({
            "best_mu_hz": _json_float(result.best_mu / TWO_PI),
            "best_fidelity": _json_float(result.best_fidelity),
            "best_max_amplitude_hz": _json_float(
                result.best_schedule.max_amplitude / TWO_PI),
            "band_edge_mu_hz": _json_float(result.mu_grid[edge] / TWO_PI),
            "band_edge_fidelity": _json_float(result.fidelities[edge]),
            "band_edge_max_amplitude_hz": _json_float(
                result.max_amplitudes[edge] / TWO_PI),
        })
    else:
        code = 3
    if config.table:
        rows = op.table_one(
            ion_count=config.ion_count,
            omega_z=TWO_PI * config.omega_z_hz,
            omega_r_values=tuple(TWO_PI * v
                                 for v in config.omega_r_table_hz),
            tau=config.tau_s, segments=config.segments, nbar=config.nbar,
            pair_count=config.pair_count, mu_grid=grid)
        op.write_table(rows, os.path.join(out_dir, "table.tsv"))
        files.append("table.tsv")
    summary["files"] = files
    return code, summary


_COMMANDS = {
    "equilibrium": cmd_equilibrium,
    "scaling": cmd_scaling,
    "modes": cmd_modes,
    "gate": cmd_gate,
    "optimize": cmd_optimize,
}


# ---------------------------------------------------------------------------
# entry point

def build_parser():
    parser = argparse.ArgumentParser(
        prog="gatelab",
        description="Planar ion crystals, axial modes, and segmented "
                    "phase-gate design.")
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "equilibrium": "solve the planar equilibrium and emit positions",
        "scaling": "minimum-spacing series, power-law fit, trap targets",
        "modes": "axial spectrum, critical anisotropy, uniform-mode gap",
        "gate": "evaluate a pulse schedule into a gate report",
        "optimize": "scan detunings for the best segmented drive",
    }
    for name, text in descriptions.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True,
                       help="flat key=value run configuration")
        p.add_argument("--out", default=None,
                       help="output directory (default: config output_dir)")
        p.add_argument("--cache", default=None,
                       help="crystal cache directory (default: config "
                            "cache_dir; unset disables caching)")
        p.add_argument("--seed", type=int, default=None,
                       help="solver restart seed (overrides config)")
        if name == "gate":
            p.add_argument("--schedule", default=None,
                           help="pulse schedule file (overrides config "
                                "schedule_file)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("'--seed' must be non-negative")
            config = replace(config, seed=args.seed)
        out_dir = args.out or config.output_dir
        cache_dir = args.cache if args.cache is not None else config.cache_dir
        os.makedirs(out_dir, exist_ok=True)
        code, summary = _COMMANDS[args.command](config, out_dir, cache_dir,
                                                args)
        summary["seed"] = config.seed
        atomic_write_json(os.path.join(out_dir, "summary.json"), summary)
        return code
    except ConfigError as exc:
        print("gatelab: config error: %s" % exc, file=sys.stderr)
        return 2
    except UnstableSpectrum as exc:
        print("gatelab: instability: %s" % exc, file=sys.stderr)
        return 4
    except (GatelabError, np.linalg.LinAlgError) as exc:
        print("gatelab: numerical failure: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
