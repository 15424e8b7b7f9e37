"""Config-driven experiment runner.

Usage::

    latticeloc <subcommand> [--config PATH] [--out DIR] [--format csv|json|both] [--assert]

A config is a TOML file with up to three tables: ``[lattice]`` (the
`LatticeSpec` fields), ``[experiment]`` (subcommand parameters) and
``[output]`` (``path`` and ``format``).  An optional top-level ``command``
key names the subcommand the file is meant for.  Unknown keys are errors.

``LATTICELOC_THREADS`` sets the number of worker threads used for mass sweeps
(default 1).  No other environment variable is read.
"""

from __future__ import annotations

import argparse
import copy
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import dynamics, localisation, oracle, renorm, spreading, vacuum
from .errors import FitError, ValidationError
from .io import FORMATS, Report, Table, write_report
from .lattice import LatticeSpec

COMMANDS = ("vacuum", "commutator", "localise", "elp", "renorm", "oracle", "spread", "bell")
THREADS_ENV = "LATTICELOC_THREADS"

REQUIRED = object()

#: per-subcommand experiment keys and their defaults (REQUIRED: must be given; None: optional, no default)
EXPERIMENT_KEYS = {
    "vacuum": {
        "window": None,
        "axis": 0,
        "mass_sweep": None,
        "expect": None,
        "tolerance": 0.01,
        "compton_tolerance": 0.1,
    },
    "commutator": {
        "times": [20.0],
        "near_offset": 2.0,
        "decay_factor": 1e3,
        "equal_time_tol": 1e-12,
    },
    "localise": {
        "region": REQUIRED,
        "displacement": 0.3,
        "squeezing": 0.2,
        "packet_centers": REQUIRED,
        "packet_width": 5.0,
        "packet_momentum": 0.0,
        "nonzero_threshold": 1e-8,
    },
    "elp": {
        "region": REQUIRED,
        "centers": REQUIRED,
        "width": 5.0,
        "coefficients": [1.0, 1.0],
        "scale": None,
    },
    "renorm": {
        "spacing_b": REQUIRED,
        "sites_per_axis_b": None,
        "mass_b": None,
        "window": REQUIRED,
        "tolerance": 0.01,
    },
    "oracle": {
        "n_max": oracle.DEFAULT_NMAX,
        "tolerance": oracle.DEFAULT_TOL,
        "convergence": [6, 9, 12],
        "cap": oracle.DEFAULT_CAP,
    },
    "spread": {
        "halfwidth": REQUIRED,
        "mass": REQUIRED,
        "time": 0.0,
        "units": "natural",
        "r": None,
    },
    "bell": {},
}
NEEDS_LATTICE = {"vacuum", "commutator", "localise", "elp", "renorm", "oracle"}
LATTICE_DEFAULTS = {"boundary": "periodic", "stencil": "forward"}
OUTPUT_DEFAULTS = {"path": "results", "format": "both"}
TOP_LEVEL = ("command", "lattice", "experiment", "output")


class ConfigError(ValueError):
    """Missing, malformed or inconsistent experiment config."""


@dataclass
class ExperimentConfig:
    """Validated config with defaults filled in."""

    command: str
    lattice: dict | None = None
    experiment: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: dict(OUTPUT_DEFAULTS))

    def lattice_spec(self) -> LatticeSpec:
        if self.lattice is None:
            raise ConfigError(f"{self.command}: a [lattice] table is required")
        return LatticeSpec.from_dict(self.lattice)

    def to_dict(self) -> dict:
        out = {"command": self.command}
        if self.lattice is not None:
            out["lattice"] = dict(self.lattice)
        out["experiment"] = dict(self.experiment)
        out["output"] = dict(self.output)
        return out

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())


def _check_keys(table: dict, allowed, where: str):
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")


def validate_config(raw: dict, command: str | None = None) -> ExperimentConfig:
    """Check a decoded TOML mapping and fill defaults."""
    _check_keys(raw, TOP_LEVEL, "top level")
    named = raw.get("command")
    if command is None:
        command = named
    elif named is not None and named != command:
        raise ConfigError(f"config is for {named!r}, not {command!r}")
    if command not in COMMANDS:
        raise ConfigError(f"unknown or missing command {command!r}; expected one of {COMMANDS}")

    lattice = None
    if "lattice" in raw or command in NEEDS_LATTICE:
        lat = raw.get("lattice")
        if lat is None:
            raise ConfigError(f"{command}: missing [lattice] table")
        _check_keys(lat, {f for f in LatticeSpec.__dataclass_fields__}, "[lattice]")
        lattice = {**LATTICE_DEFAULTS, **lat}
        missing = [k for k in ("dimension", "sites_per_axis", "spacing", "mass") if k not in lattice]
        if missing:
            raise ConfigError(f"missing key(s) in [lattice]: {', '.join(missing)}")
        try:
            LatticeSpec.from_dict(lattice)
        except (ValidationError, TypeError) as exc:
            raise ConfigError(f"[lattice]: {exc}") from exc

    schema = EXPERIMENT_KEYS[command]
    exp = dict(raw.get("experiment", {}))
    _check_keys(exp, schema, "[experiment]")
    for key, default in schema.items():
        if key in exp:
            continue
        if default is REQUIRED:
            raise ConfigError(f"missing required key {key!r} in [experiment] for {command}")
        if default is not None:
            exp[key] = copy.deepcopy(default)

    out = dict(raw.get("output", {}))
    _check_keys(out, OUTPUT_DEFAULTS, "[output]")
    out = {**OUTPUT_DEFAULTS, **out}
    if out["format"] not in FORMATS:
        raise ConfigError(f"output format must be one of {FORMATS}, got {out['format']!r}")
    return ExperimentConfig(command, lattice, exp, out)


def parse_config_text(text: str, command: str | None = None) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # the decoder message carries "(at line L, column C)"
        raise ConfigError(f"TOML parse error: {exc}") from exc
    return validate_config(raw, command)


def parse_config(path, command: str | None = None) -> ExperimentConfig:
    """Read and validate a TOML experiment config."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        return parse_config_text(path.read_text(), command)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def default_config(command: str) -> ExperimentConfig:
    """Config for subcommands that need no input file (``bell``)."""
    return validate_config({"command": command})


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


# -- subcommand runners ------------------------------------------------------


def _region(spec: LatticeSpec, bounds) -> localisation.Region:
    if len(bounds) != 2:
        raise ConfigError("region must be [start, stop]")
    return localisation.Region.interval(spec, int(bounds[0]), int(bounds[1]))


def run_vacuum(cfg: ExperimentConfig) -> Report:
    exp = cfg.experiment
    spec = cfg.lattice_spec()
    window = tuple(exp["window"]) if "window" in exp else vacuum.default_window(spec)
    d, g = vacuum.vacuum_correlator_profile(spec, exp["axis"])
    g = g / spec.spacing ** spec.dimension
    fit = vacuum.fit_vacuum_falloff(spec, window, exp["axis"])
    kappa = vacuum.exact_decay_rate(spec)
    rec = {
        "lattice": spec.to_dict(),
        "falloff": fit.to_record(),
        "exact_decay_length": 1 / kappa,
        "compton_wavelength": 1 / spec.mass,
        "relative_error_exact": abs(fit.scale / (1 / kappa) - 1),
        "relative_error_compton": abs(fit.scale * spec.mass - 1),
    }
    checks = {}
    if "expect" in exp:
        checks["classification"] = fit.classification == exp["expect"]
        if exp["expect"] == "exponential":
            checks["scale_vs_exact_rate"] = rec["relative_error_exact"] <= exp["tolerance"]
            if spec.lattice_mass <= 0.2:
                checks["scale_vs_compton"] = rec["relative_error_compton"] <= exp["compton_tolerance"]

    if "mass_sweep" in exp:
        masses = [float(m) for m in exp["mass_sweep"]]

        def one(m):
            s = spec.replace(mass=m)
            f = vacuum.fit_vacuum_falloff(s, window, exp["axis"])
            return {"mass": m, "scale": f.scale, "scale_times_mass": f.scale * m,
                    "exact_decay_length": 1 / vacuum.exact_decay_rate(s), "classification": f.classification}

        with ThreadPoolExecutor(worker_count()) as pool:
            rec["mass_sweep"] = list(pool.map(one, masses))

    table = Table.from_columns(distance_lattice_units=d, distance_physical=d * spec.spacing, value=g)
    return Report("vacuum", rec, {"correlator": table}, checks)


def run_commutator(cfg: ExperimentConfig) -> Report:
    exp = cfg.experiment
    spec = cfg.lattice_spec()
    summaries, ts, ds, vals = [], [], [], []
    checks = {}
    for t in exp["times"]:
        prof = dynamics.lightcone_leakage(spec, float(t))
        s = prof.summary()
        # tail ratio between just outside the cone and twice the cone radius, in extended precision
        near = int(round((t + exp["near_offset"]) / spec.spacing))
        far = int(round(2 * t / spec.spacing))
        if spec.boundary == "periodic" and 0 < near < far < spec.sites_per_axis // 2:
            a = abs(dynamics.commutator_function(spec, near, t))
            b = abs(dynamics.commutator_function(spec, far, t))
            s.update(near_distance=near * spec.spacing, far_distance=far * spec.spacing,
                     near_value=a, far_value=b, decay_ratio=a / b if b else math.inf)
            checks[f"decay_t={t:g}"] = bool(b == 0 or a / b >= exp["decay_factor"])
            checks[f"nonzero_beyond_cone_t={t:g}"] = bool(s["leakage"] > 0 or a > 0)
        summaries.append(s)
        ts.append(np.full(prof.distances.size, float(t)))
        ds.append(prof.distances_physical)
        vals.append(prof.field_values)
    if spec.n_sites <= 2048:
        eye = dynamics.equal_time_qp_commutator(spec, float(exp["times"][0]))
        ccr = float(np.abs(eye - np.eye(spec.n_sites)).max())
        checks["equal_time_ccr"] = ccr <= exp["equal_time_tol"]
    else:
        ccr = None
    rec = {"lattice": spec.to_dict(), "profiles": summaries, "equal_time_ccr_residual": ccr}
    table = Table.from_columns(t=np.concatenate(ts), d=np.concatenate(ds), value=np.concatenate(vals))
    return Report("commutator", rec, {"profile": table}, checks)


def _deviation_table(report: localisation.LocalisationReport) -> Table:
    return Table.from_columns(distance=report.distances, deviation=report.deviations)


def run_localise(cfg: ExperimentConfig) -> Report:
    exp = cfg.experiment
    spec = cfg.lattice_spec()
    region = _region(spec, exp["region"])
    vac = vacuum.vacuum_state(spec)
    records, tables, checks = {}, {}, {}
    for kind, param in (("displace", exp["displacement"]), ("squeeze", exp["squeezing"])):
        state = localisation.local_unitary_family(vac, region, kind, float(param))
        rep = localisation.knight_check(state, vac, region)
        records[kind] = rep.to_record() | {"profile": f"localise_{kind}.csv"}
        tables[kind] = _deviation_table(rep)
        checks[f"{kind}_knight_exact"] = rep.verdict == "knight_exact"
    for c in exp["packet_centers"]:
        name = f"packet_{c:g}"
        packet = localisation.one_particle_state(
            localisation.gaussian_profile(spec, (c,) * spec.dimension, exp["packet_width"],
                                          exp["packet_momentum"]), spec)
        knight = localisation.knight_check(packet, vac, region)
        rec = knight.to_record()
        rec["min_outside_deviation"] = float(knight.deviations.min()) if knight.deviations.size else 0.0
        try:
            fit = localisation.l_localisation_fit(packet, region)
            rec["fit"] = {"verdict": fit.verdict, "L": fit.scale, "r2": fit.r2, **fit.metadata}
        except FitError as exc:
            rec["fit"] = {"error": str(exc)}
        rec["profile"] = f"localise_{name}.csv"
        records[name] = rec
        tables[name] = _deviation_table(knight)
        checks[f"{name}_not_knight"] = knight.verdict == "not_localised"
        checks[f"{name}_deviation_above_threshold"] = knight.max_outside > exp["nonzero_threshold"]
        checks[f"{name}_nonzero_everywhere"] = rec["min_outside_deviation"] > 0
    rec = {"lattice": spec.to_dict(), "region": region.to_record(), "states": records}
    return Report("localise", rec, tables, checks)


def run_elp(cfg: ExperimentConfig) -> Report:
    exp = cfg.experiment
    spec = cfg.lattice_spec()
    region = _region(spec, exp["region"])
    L = float(exp.get("scale", 1 / spec.mass))
    states = [localisation.one_particle_state(
        localisation.gaussian_profile(spec, (c,) * spec.dimension, exp["width"]), spec)
        for c in exp["centers"]]
    verdict = localisation.elp_check(states, exp["coefficients"], region, L)
    rec = {"lattice": spec.to_dict(), **verdict.to_record(), "profile": "elp_deviation.csv"}
    return Report("elp", rec, {"deviation": _deviation_table(verdict.report)}, {"elp": verdict.passed})


def run_renorm(cfg: ExperimentConfig) -> Report:
    exp = cfg.experiment
    spec_a = cfg.lattice_spec()
    n_b = exp.get("sites_per_axis_b", int(round(spec_a.extent / exp["spacing_b"])))
    spec_b = spec_a.replace(spacing=float(exp["spacing_b"]), sites_per_axis=int(n_b),
                            mass=float(exp.get("mass_b", spec_a.mass)))
    res = renorm.match_discretisations(spec_a, spec_b, tuple(exp["window"]))
    d, r, slope = renorm.residual_profile(res)
    rec = {"lattice_a": spec_a.to_dict(), "lattice_b": spec_b.to_dict(), **res.to_record(),
           "residual_slope": slope, "residual_near": float(r[0]), "residual_far": float(r[-1])}
    checks = {
        "max_residual": res.max_residual <= exp["tolerance"],
        "improves_on_unmatched": res.max_residual <= res.unmatched_max_residual,
        "far_le_near": bool(r[-1] <= r[0]),
    }
    return Report("renorm", rec, {"residuals": Table.from_columns(d_physical=d, residual=r)}, checks)


def run_oracle(cfg: ExperimentConfig) -> Report:
    exp = cfg.experiment
    spec = cfg.lattice_spec()
    closed = oracle.closed_form_quantities(spec)
    tol = {"default": exp["tolerance"]}
    main = oracle.oracle_crosscheck(spec, exp["n_max"], tol, closed_form=closed, cap=exp["cap"])
    worst = []
    for n in exp["convergence"]:
        rep = main if n == exp["n_max"] else oracle.oracle_crosscheck(spec, n, tol, closed_form=closed,
                                                                       cap=exp["cap"])
        worst.append(max(v["max_error"] for v in rep["quantities"].values()))
    monotone = all(b <= a for a, b in zip(worst, worst[1:]))
    rec = {"lattice": spec.to_dict(), **main,
           "convergence": {"n_max": list(exp["convergence"]), "max_error": worst, "nonincreasing": monotone}}
    rows = [(k, v["max_error"], v["tolerance"], v["pass"]) for k, v in main["quantities"].items()]
    table = Table(("quantity", "max_error", "tolerance", "pass"), rows)
    return Report("oracle", rec, {"crosscheck": table}, {"all_pass": main["all_pass"], "convergence": monotone})


def run_spread(cfg: ExperimentConfig) -> Report:
    exp = cfg.experiment
    try:
        ws = spreading.WavepacketSpec(float(exp["halfwidth"]), float(exp["mass"]), float(exp["time"]), exp["units"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rec = spreading.spreading_record(ws, exp.get("r"))
    at_horizon = spreading.WavepacketSpec(ws.halfwidth, ws.mass, spreading.constancy_horizon(ws), ws.units)
    ratio = spreading.spread_halfwidth(at_horizon) / ws.halfwidth
    rec["halfwidth_ratio_at_horizon"] = ratio
    return Report("spread", rec, {}, {"sqrt2_at_horizon": abs(ratio - math.sqrt(2)) <= 1e-12})


def run_bell(cfg: ExperimentConfig) -> Report:
    rec = localisation.bell_demo()
    checks = {name: v["holds"] for name, v in rec["identities"].items()}
    checks["orthonormal"] = rec["orthonormal"]
    checks["spans"] = rec["span_rank"] == 4
    return Report("bell", rec, {}, checks)


RUNNERS = {
    "vacuum": run_vacuum,
    "commutator": run_commutator,
    "localise": run_localise,
    "elp": run_elp,
    "renorm": run_renorm,
    "oracle": run_oracle,
    "spread": run_spread,
    "bell": run_bell,
}


def run_command(command: str, config: ExperimentConfig) -> Report:
    """Run one experiment; module errors are re-raised with the subcommand name."""
    if command != config.command:
        raise ConfigError(f"config is for {config.command!r}, not {command!r}")
    try:
        return RUNNERS[command](config)
    except ConfigError:
        raise
    except (ValueError, ArithmeticError, IndexError) as exc:
        raise RuntimeError(f"{command}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latticeloc", description="Lattice free-field localisation experiments.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="TOML experiment config")
    p.add_argument("--out", type=Path, help="output directory (overrides [output] path)")
    p.add_argument("--format", choices=FORMATS, help="report format (overrides [output] format)")
    p.add_argument("--assert", dest="check", action="store_true",
                   help="exit nonzero if any acceptance check in the report fails")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            cfg = parse_config(args.config, args.command)
        elif args.command in NEEDS_LATTICE or args.command == "spread":
            raise ConfigError(f"{args.command} needs --config")
        else:
            cfg = default_config(args.command)
        report = run_command(args.command, cfg)
        out = args.out or Path(cfg.output["path"])
        written = write_report(report, out, args.format or cfg.output["format"])
    except (ConfigError, RuntimeError, OSError) as exc:
        print(f"latticeloc {args.command}: error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    failed = [k for k, ok in report.checks.items() if not ok]
    for k in failed:
        print(f"check failed: {k}", file=sys.stderr)
    if args.check and failed:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
