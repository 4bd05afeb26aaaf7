"""
Command line front end.

A run is described by an INI file with ``[system]``, ``[grid]``, ``[kde]``,
``[outputs]`` and optional ``[oracle]`` sections; any key can be overridden
with ``--set section.key=value``.  Example::

    [system]
    dim = 2
    drift = -y; x
    diffusion = 1; 1
    initial = 1, 1

    [grid]
    T = 2
    M = 32768

Without a config the ``ou`` preset with its defaults is run.

Exit codes: 0 success, 2 configuration error, 3 divergence, 4 I/O error.
Failures print one line ``error reason=<code> message="..."`` to stderr.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from . import expr as ex
from . import oracle as orc
from .density import KdeConfig, write_density_csv
from .portrait import (
    MIN_PATHS,
    compute_mppp,
    compute_mppp_streaming,
    score_against_oracle,
)
from .presets import DEFAULT_T, preset_params, preset_system
from .rng import DEFAULT_SEED
from .sim import (
    DivergenceError,
    SdeSystem,
    SimGrid,
    VariableOutOfDimensionError,
    simulate,
    state_variables,
    write_paths_csv,
)
from .svg import LineChart

log = logging.getLogger("mppp")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4

SECTIONS = ("system", "grid", "kde", "outputs", "oracle")
CUSTOM_KEYS = ("dim", "drift", "diffusion", "initial", "label")
GRID_KEYS = ("T", "N", "steps_per_unit", "M", "seed", "workers", "streaming")
KDE_KEYS = ("n_grid", "bandwidth", "grid_pad", "refine")
OUTPUT_KEYS = ("mppp_csv", "paths_csv", "density_csv", "svg", "oracle")
# scheduling knobs: they never change results, so artifacts do not record them
EXECUTION_KEYS = ("workers", "streaming")

DEFAULTS = {
    "grid": {"steps_per_unit": "128", "M": str(2**15), "seed": str(DEFAULT_SEED), "workers": "1", "streaming": "false"},
    "kde": {"n_grid": "100", "bandwidth": "silverman", "grid_pad": "3", "refine": "false"},
    "outputs": {"mppp_csv": "mppp.csv", "paths_csv": "", "density_csv": "", "svg": "mppp.svg"},
}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.message}"


@dataclass
class RunConfig:
    """Fully resolved run description."""

    system: SdeSystem
    grid: SimGrid
    kde: KdeConfig
    oracle: Optional[str] = None
    oracle_params: dict = field(default_factory=dict)
    mppp_csv: str = "mppp.csv"
    paths_csv: str = ""
    density_csv: str = ""
    svg: str = "mppp.svg"
    workers: int = 1
    streaming: bool = False
    raw: dict = field(default_factory=dict)


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))

    @property
    def code(self):
        return self.diagnostics[0].code


# Raw key-value handling -----------------------------------------------------


def load_raw(path=None, text=None):
    """Read an INI file (or text) into ``{section: {key: value}}``."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    if path is not None:
        with open(path) as fh:
            cp.read_file(fh)
    elif text is not None:
        cp.read_string(text)
    return {s: dict(cp[s]) for s in cp.sections()}


def apply_override(raw, assignment):
    """Apply ``section.key=value`` to `raw` in place."""
    key, sep, value = assignment.partition("=")
    section, dot, name = key.strip().partition(".")
    if not sep or not dot or not name:
        raise ConfigError([Diagnostic("config_bad_override", f"expected section.key=value, got {assignment!r}")])
    raw.setdefault(section, {})[name] = value.strip()
    return raw


def _parse_bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_int(s):
    try:
        return int(s)
    except ValueError:
        v = float(s)  # accept 1e3, 32768.0
        if not v.is_integer():
            raise ValueError(f"not an integer: {s!r}") from None
        return int(v)


# Validation and resolution --------------------------------------------------


def _resolve(raw):
    """Return (RunConfig or None, diagnostics)."""
    diags = []

    def bad(code, msg):
        diags.append(Diagnostic(code, msg))

    for section, entries in raw.items():
        if section not in SECTIONS:
            bad("config_unknown_section", f"unknown section [{section}]")

    sysraw = dict(raw.get("system", {}))
    grid_raw = {**DEFAULTS["grid"], **raw.get("grid", {})}
    kde_raw = {**DEFAULTS["kde"], **raw.get("kde", {})}
    out_raw = {**DEFAULTS["outputs"], **raw.get("outputs", {})}
    oracle_raw = dict(raw.get("oracle", {}))

    for section, allowed, entries in (
        ("grid", GRID_KEYS, grid_raw),
        ("kde", KDE_KEYS, kde_raw),
        ("outputs", OUTPUT_KEYS, out_raw),
    ):
        for key in entries:
            if key not in allowed:
                bad("config_unknown_key", f"unknown key {section}.{key}")

    # system
    system = None
    params = {}
    preset = sysraw.get("preset", "").strip()
    custom = any(k in sysraw for k in ("drift", "diffusion", "initial", "dim"))
    if custom and preset:
        bad("preset_conflict", "give either system.preset or a custom drift/diffusion, not both")
    elif custom:
        system = _resolve_custom(sysraw, bad)
    else:
        preset = preset or "ou"
        if preset not in orc.PARAMS:
            bad("preset_unknown", f"unknown preset {preset!r}; choose from {sorted(orc.PARAMS)}")
        else:
            names = {f.name for f in fields(orc.PARAMS[preset])}
            for key, value in sysraw.items():
                if key == "preset":
                    continue
                if key not in names:
                    bad("preset_unknown_parameter", f"preset {preset!r} has no parameter {key!r} (has {sorted(names)})")
                    continue
                try:
                    params[key] = float(value)
                except ValueError:
                    bad("value_not_number", f"system.{key} = {value!r} is not a number")
            try:
                system = preset_system(preset, preset_params(preset, **params))
            except (ValueError, TypeError) as err:
                bad("preset_invalid_parameter", str(err))

    # grid
    grid = None
    T = None
    if "T" in grid_raw:
        try:
            T = float(grid_raw["T"])
        except ValueError:
            bad("value_not_number", f"grid.T = {grid_raw['T']!r} is not a number")
    else:
        T = DEFAULT_T.get(preset, 1.0) if not custom else 1.0
    if T is not None and not (np.isfinite(T) and T > 0):
        bad("grid_horizon_positive", f"grid.T must be > 0, got {T}")
        T = None
    ints = {}
    for key in ("N", "steps_per_unit", "M", "seed", "workers"):
        if key in grid_raw and grid_raw[key].strip() != "":
            try:
                ints[key] = _parse_int(grid_raw[key])
            except ValueError:
                bad("value_not_integer", f"grid.{key} = {grid_raw[key]!r} is not an integer")
    N = ints.get("N")
    if N is None and T is not None and "steps_per_unit" in ints:
        n_float = ints["steps_per_unit"] * T
        if ints["steps_per_unit"] < 1:
            bad("grid_steps_positive", "grid.steps_per_unit must be >= 1")
        elif not float(n_float).is_integer():
            bad("grid_steps_not_integer", f"steps_per_unit * T = {n_float} is not an integer; set grid.N")
        else:
            N = int(n_float)
    if N is not None and N < 1:
        bad("grid_steps_positive", f"grid.N must be >= 1, got {N}")
    M = ints.get("M")
    if M is not None and M < MIN_PATHS:
        bad("grid_paths_minimum", f"grid.M must be >= {MIN_PATHS} for KDE modes, got {M}")
    seed = ints.get("seed")
    if seed is not None and not 0 <= seed < 2**64:
        bad("seed_out_of_range", f"grid.seed must be a 64-bit unsigned integer, got {seed}")
    workers = ints.get("workers", 1)
    if workers < 1:
        bad("grid_workers_positive", "grid.workers must be >= 1")
    try:
        streaming = _parse_bool(grid_raw["streaming"])
    except ValueError as err:
        bad("value_not_boolean", f"grid.streaming: {err}")
        streaming = False
    try:
        grid = SimGrid(T, N, M, seed)
    except (TypeError, ValueError):
        grid = None  # already diagnosed above

    # kde
    kcfg = None
    try:
        n_grid = _parse_int(kde_raw["n_grid"])
        bw = kde_raw["bandwidth"].strip()
        bandwidth = "silverman" if bw == "silverman" else float(bw)
        kcfg = KdeConfig(n_grid, bandwidth, float(kde_raw["grid_pad"]), _parse_bool(kde_raw["refine"]))
    except ValueError as err:
        bad("kde_invalid", str(err))

    # outputs and oracle
    oracle = out_raw.get("oracle", "").strip()
    if not oracle and not custom and preset in orc.PARAMS:
        oracle = preset
    if oracle == "none":
        oracle = ""
    oracle_params = {}
    if oracle:
        if oracle not in orc.PARAMS:
            bad("oracle_unknown", f"unknown oracle {oracle!r}; choose from {sorted(orc.PARAMS)}")
        else:
            names = {f.name for f in fields(orc.PARAMS[oracle])}
            if not custom and oracle == preset:
                oracle_params = dict(params)
            for key, value in oracle_raw.items():
                if key not in names:
                    bad("oracle_unknown_parameter", f"oracle {oracle!r} has no parameter {key!r}")
                    continue
                try:
                    oracle_params[key] = float(value)
                except ValueError:
                    bad("value_not_number", f"oracle.{key} = {value!r} is not a number")
            if system is not None and orc.DIMENSION[oracle] != system.dim:
                bad("oracle_dimension_mismatch", f"oracle {oracle!r} is {orc.DIMENSION[oracle]}-D, system is {system.dim}-D")
    elif oracle_raw:
        bad("oracle_unused", "[oracle] parameters given but no outputs.oracle selected")

    if diags or system is None or grid is None or kcfg is None:
        return None, diags

    resolved = {
        "system": {"preset": preset} if not custom else {},
        "grid": {"T": repr(T), "N": str(N), "M": str(M), "seed": str(seed), "workers": str(workers), "streaming": str(streaming).lower()},
        "kde": {"n_grid": str(kcfg.n_grid), "bandwidth": str(kcfg.bandwidth), "grid_pad": repr(kcfg.grid_pad), "refine": str(kcfg.refine).lower()},
        "outputs": {k: out_raw.get(k, "") for k in OUTPUT_KEYS if k != "oracle"},
    }
    resolved["outputs"]["oracle"] = oracle or "none"
    resolved["system"].update(
        {
            "dim": str(system.dim),
            "drift": "; ".join(ex.render(e) for e in system.drift),
            "diffusion": "; ".join(ex.render(e) for e in system.diffusion),
            "initial": ", ".join(repr(v) for v in system.initial_state),
            "label": system.label,
        }
    )
    if oracle:
        full = orc.PARAMS[oracle](**oracle_params)
        oracle_params = {f.name: getattr(full, f.name) for f in fields(full)}
        resolved["oracle"] = {k: repr(float(v)) for k, v in oracle_params.items()}
    cfg = RunConfig(
        system=system,
        grid=grid,
        kde=kcfg,
        oracle=oracle or None,
        oracle_params=oracle_params,
        mppp_csv=out_raw["mppp_csv"].strip(),
        paths_csv=out_raw["paths_csv"].strip(),
        density_csv=out_raw["density_csv"].strip(),
        svg=out_raw["svg"].strip(),
        workers=workers,
        streaming=streaming,
        raw=resolved,
    )
    return cfg, []


def _resolve_custom(sysraw, bad):
    try:
        dim = _parse_int(sysraw.get("dim", "1"))
    except ValueError:
        bad("value_not_integer", f"system.dim = {sysraw.get('dim')!r} is not an integer")
        return None
    if dim not in (1, 2):
        bad("dimension_unsupported", f"the command line supports dim 1 or 2, got {dim}")
        return None
    for key in sysraw:
        if key not in CUSTOM_KEYS:
            bad("config_unknown_key", f"unknown key system.{key}")
    exprs = {}
    for key in ("drift", "diffusion"):
        if key not in sysraw:
            bad("system_missing_key", f"system.{key} is required")
            continue
        parts = [p.strip() for p in sysraw[key].split(";")]
        if len(parts) != dim:
            bad("system_dimension_mismatch", f"system.{key} needs {dim} ';'-separated expressions, got {len(parts)}")
            continue
        parsed = []
        allowed = set(state_variables(dim)) | {"t"}
        for i, text in enumerate(parts):
            try:
                e = ex.parse(text)
            except ex.ExprSyntaxError as err:
                bad("expr_syntax_error", f"system.{key}[{i}] {text!r}: {err}")
                continue
            except ex.UnknownIdentifierError as err:
                bad("expr_unknown_identifier", f"system.{key}[{i}] {text!r}: {err}")
                continue
            extra = ex.variables_of(e) - allowed
            if extra:
                err = VariableOutOfDimensionError(sorted(extra)[0], dim)
                bad("variable_out_of_dimension", f"system.{key}[{i}] {text!r}: {err}")
                continue
            parsed.append(e)
        exprs[key] = parsed
    initial = None
    try:
        initial = [float(v) for v in sysraw.get("initial", ",".join(["0"] * dim)).split(",")]
    except ValueError:
        bad("value_not_number", f"system.initial = {sysraw.get('initial')!r} is not a list of numbers")
    if initial is not None and len(initial) != dim:
        bad("system_dimension_mismatch", f"system.initial needs {dim} values, got {len(initial)}")
        initial = None
    if initial is None or len(exprs.get("drift", [])) != dim or len(exprs.get("diffusion", [])) != dim:
        return None
    return SdeSystem(exprs["drift"], exprs["diffusion"], initial, sysraw.get("label", "custom"))


def validate(raw):
    """All problems with a raw config, without running anything."""
    return _resolve(raw)[1]


def resolve(raw):
    """Validated `RunConfig` for a raw config; raises `ConfigError`."""
    cfg, diags = _resolve(raw)
    if diags:
        raise ConfigError(diags)
    return cfg


# Running --------------------------------------------------------------------


def header_lines(cfg):
    lines = []
    for section in SECTIONS:
        if section in cfg.raw:
            lines.append(f"[{section}]")
            lines += [f"{k} = {v}" for k, v in cfg.raw[section].items() if k not in EXECUTION_KEYS]
    return lines


def _coord_names(dim):
    return state_variables(dim)


def write_mppp_csv(curve, path, report=None, header=()):
    names = _coord_names(curve.dim)
    cols = ["t"] + [f"mode_{n}" for n in names]
    if report is not None:
        cols += [f"oracle_{n}" for n in names]
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for j, t in enumerate(curve.times):
            row = [repr(float(t))] + [repr(float(v)) for v in curve.modes[j]]
            if report is not None:
                row += [repr(float(v)) for v in report.oracle_curve[j]]
            w.writerow(row)


def write_svg(curve, path, report=None, title=""):
    chart = LineChart(xlabel="t", ylabel="MPPP", title=title)
    dashes = (None, "6,4")
    for i, name in enumerate(_coord_names(curve.dim)):
        suffix = f" {name}" if curve.dim > 1 else ""
        if report is not None:
            chart.add(curve.times, report.oracle_curve[:, i], "blue", f"true MPPP{suffix}", dashes[i % 2])
        chart.add(curve.times, curve.modes[:, i], "red", f"simulated MPPP{suffix}", dashes[i % 2])
    chart.write(path)


def run(cfg, out_dir=".", quiet=False, stdout=None):
    """Execute a resolved run and write its artifacts into `out_dir`.

    Returns the `MpppReport` when an oracle is configured, else the curve.
    Raises `DivergenceError` or `OSError`.
    """
    stdout = stdout or sys.stdout
    os.makedirs(out_dir, exist_ok=True)
    header = header_lines(cfg)
    keep = bool(cfg.density_csv)
    if cfg.streaming and not cfg.paths_csv:
        curve = compute_mppp_streaming(cfg.system, cfg.grid, cfg.kde, keep_densities=keep)
    else:
        ens = simulate(cfg.system, cfg.grid, workers=cfg.workers)
        if cfg.paths_csv:
            write_paths_csv(ens, os.path.join(out_dir, cfg.paths_csv), header)
        curve = compute_mppp(ens, cfg.kde, workers=cfg.workers, keep_densities=keep)
        del ens

    report = None
    if cfg.oracle:
        report = score_against_oracle(curve, cfg.oracle, cfg.oracle_params)

    if cfg.mppp_csv:
        write_mppp_csv(curve, os.path.join(out_dir, cfg.mppp_csv), report, header)
    if cfg.density_csv:
        names = _coord_names(curve.dim)
        for i, name in enumerate(names):
            fname = cfg.density_csv
            if curve.dim > 1:
                stem, ext = os.path.splitext(fname)
                fname = f"{stem}_{name}{ext}"
            rows = [(t, est) for t, coord, est in curve.densities if coord == i]
            write_density_csv(rows, os.path.join(out_dir, fname), header)
    if cfg.svg:
        write_svg(curve, os.path.join(out_dir, cfg.svg), report, title=cfg.system.label)

    if report is not None:
        print(f"endpoint_rel_error={report.endpoint_rel_error!r}", file=stdout)
        if not quiet:
            print(f"sup_abs_error={report.sup_abs_error!r}", file=stdout)
    if not quiet:
        if curve.n_diverged:
            print(f"diverged_paths={curve.n_diverged}", file=stdout)
        if curve.multimodal.any():
            print(f"multimodal_slices={int(curve.multimodal.any(axis=1).sum())}", file=stdout)
    return report if report is not None else curve


def _fail(code, message, status):
    message = message.replace('"', "'").replace("\n", " ")
    print(f'error reason={code} message="{message}"', file=sys.stderr)
    return status


def build_parser():
    p = argparse.ArgumentParser(prog="mppp", description="Most probable phase portraits of SDEs by Monte Carlo and KDE.")
    p.add_argument("--config", metavar="PATH", help="INI run description")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value, e.g. grid.T=2 (repeatable)")
    p.add_argument("--seed", type=int, metavar="U64", help="master seed (same as --set grid.seed=...)")
    p.add_argument("--out", default=".", metavar="DIR", help="output directory")
    p.add_argument("--preset", metavar="NAME", choices=sorted(orc.PARAMS), help="named system: ou, gbm, rotation2d")
    p.add_argument("--validate", action="store_true", help="report config problems and exit")
    p.add_argument("--quiet", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        raw = load_raw(args.config) if args.config else {}
    except OSError as err:
        return _fail("io_error", str(err), EXIT_IO)
    except configparser.Error as err:
        return _fail("config_parse_error", str(err), EXIT_CONFIG)
    try:
        if args.preset:
            apply_override(raw, f"system.preset={args.preset}")
        for assignment in args.overrides:
            apply_override(raw, assignment)
        if args.seed is not None:
            apply_override(raw, f"grid.seed={args.seed}")
    except ConfigError as err:
        return _fail(err.code, str(err), EXIT_CONFIG)

    diags = validate(raw)
    if args.validate:
        for d in diags:
            print(d)
        return EXIT_CONFIG if diags else EXIT_OK
    if diags:
        for d in diags[1:]:
            print(f"  {d}", file=sys.stderr)
        return _fail(diags[0].code, diags[0].message, EXIT_CONFIG)
    cfg = resolve(raw)
    try:
        run(cfg, args.out, args.quiet)
    except DivergenceError as err:
        return _fail("divergence", str(err), EXIT_DIVERGED)
    except OSError as err:
        return _fail("io_error", str(err), EXIT_IO)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
