"""Command-line front end.

Usage::

    cavity-eit <mode> --config run.yaml [--out DIR] [--workers N]
               [--units gamma_e|MHz] [--params key=value ...]

Modes are ``greens``, ``tmatrix``, ``spectrum``, ``map`` and
``oracle-compare``; ``init-config`` prints the default configuration.
Results are assembled in memory and written only when the whole run
succeeded, so a failing run leaves no partial files.  Failures exit
nonzero with a single-line JSON error record on stderr.
"""

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
import yaml

from . import __version__
from .estimators import line_positions
from .exceptions import CavityEITError, ConfigError
from .greens import greens_array
from .model import GAMMA_E_MHZ, SystemParams, polariton_energies
from .oracle import alpha_scaling, build_model, emission_spectrum, steady_state, third_order_deviation
from .spectrum import compute_spectrum, find_ridges, log_density, spectrum_map
from .tmatrix import compute_tmatrix

logger = logging.getLogger(__name__)

MODES = ("greens", "tmatrix", "spectrum", "map", "oracle-compare")
UNITS = ("gamma_e", "MHz")
OUTPUT_ENV = "CAVITY_EIT_OUTPUT_DIR"
EXIT_CONFIG = 2
EXIT_COMPUTE = 1


# -- configuration ------------------------------------------------------------------


@dataclass(frozen=True)
class GridConfig:
    """Uniform grids, ``numpy.linspace(min, max, points)``."""

    omega_min: float = -6.0
    omega_max: float = 6.0
    omega_points: int = 481
    omega_cf_min: float = 0.1
    omega_cf_max: float = 6.0
    omega_cf_points: int = 119

    def omega(self):
        return np.linspace(self.omega_min, self.omega_max, self.omega_points)

    def omega_cf(self):
        return np.linspace(self.omega_cf_min, self.omega_cf_max, self.omega_cf_points)


@dataclass(frozen=True)
class TMatrixConfig:
    method: str = "closed_form"
    seeds: tuple = tuple(range(8))
    n_atoms: int = None


@dataclass(frozen=True)
class OracleConfig:
    n_atoms: int = 2
    separation: float = 5.0
    n_max: int = 2
    alphas: tuple = tuple(float(x) for x in np.logspace(-3, -2, 5))
    observables: tuple = ("elastic_weight", "third_order", "connected", "inelastic_power")
    spectrum_method: str = "resolvent"


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    units: str = "gamma_e"


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on.

    ``mode`` may be left unset in the file; the subcommand fills it in.
    """

    mode: str = None
    params: SystemParams = field(default_factory=SystemParams)
    grid: GridConfig = field(default_factory=GridConfig)
    tmatrix: TMatrixConfig = field(default_factory=TMatrixConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    workers: int = 1

    def __post_init__(self):
        if self.mode is not None and self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.output.units not in UNITS:
            raise ConfigError(f"output.units must be one of {UNITS}, got {self.output.units!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        g = self.grid
        if g.omega_points < 1 or g.omega_cf_points < 1:
            raise ConfigError("grid point counts must be >= 1")
        if g.omega_max < g.omega_min or g.omega_cf_max < g.omega_cf_min:
            raise ConfigError("grid max must not be below grid min")

    def to_dict(self):
        out = asdict(self)
        for section in ("tmatrix", "oracle"):
            for key, value in out[section].items():
                if isinstance(value, tuple):
                    out[section][key] = list(value)
        return out

    @classmethod
    def from_dict(cls, data):
        data = {} if data is None else data
        _require_mapping(data, "config")
        _reject_unknown(data, [f.name for f in fields(cls)], "config")
        kwargs = {}
        if "mode" in data:
            kwargs["mode"] = _coerce(data["mode"], str, "mode", allow_none=True)
        if "workers" in data:
            kwargs["workers"] = _coerce(data["workers"], int, "workers")
        sections = {
            "params": SystemParams,
            "grid": GridConfig,
            "tmatrix": TMatrixConfig,
            "oracle": OracleConfig,
            "output": OutputConfig,
        }
        for name, klass in sections.items():
            if name in data:
                kwargs[name] = _build_section(klass, data[name], name)
        try:
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def _require_mapping(value, where):
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(value).__name__}")


def _reject_unknown(data, allowed, where):
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(map(str, unknown))}")


def _coerce(value, kind, where, allow_none=False):
    if value is None:
        if allow_none:
            return None
        raise ConfigError(f"{where} must not be null")
    if kind is float:
        # YAML 1.1 reads exponent literals without a dot (``5e4``) as strings
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                raise ConfigError(f"{where} must be a number, got {value!r}") from None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not (isinstance(value, int) or (isinstance(value, float) and value.is_integer())):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return int(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    raise TypeError(kind)


# element types of every configurable field
_FIELD_TYPES = {
    SystemParams: {f.name: (int if f.name == "n_atoms" else float) for f in fields(SystemParams)},
    GridConfig: {
        "omega_min": float, "omega_max": float, "omega_points": int,
        "omega_cf_min": float, "omega_cf_max": float, "omega_cf_points": int,
    },
    TMatrixConfig: {"method": str, "seeds": (tuple, int), "n_atoms": (None, int)},
    OracleConfig: {
        "n_atoms": int, "separation": float, "n_max": int, "alphas": (tuple, float),
        "observables": (tuple, str), "spectrum_method": str,
    },
    OutputConfig: {"directory": str, "units": str},
}


def _build_section(klass, data, name):
    data = {} if data is None else data
    _require_mapping(data, name)
    types = _FIELD_TYPES[klass]
    _reject_unknown(data, types, name)
    kwargs = {}
    for key, value in data.items():
        kind = types[key]
        where = f"{name}.{key}"
        if isinstance(kind, tuple) and kind[0] is tuple:
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{where} must be a list")
            kwargs[key] = tuple(_coerce(v, kind[1], f"{where}[{i}]") for i, v in enumerate(value))
        elif isinstance(kind, tuple):
            kwargs[key] = _coerce(value, kind[1], where, allow_none=True)
        else:
            kwargs[key] = _coerce(value, kind, where)
    try:
        return klass(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name}: {exc}") from exc


def load_config(path):
    """Parse a YAML run configuration; every key is optional."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path!r}: {exc}") from exc
    return RunConfig.from_dict(data)


def dump_config(config):
    return yaml.safe_dump(config.to_dict(), sort_keys=True, default_flow_style=False)


def apply_overrides(config, overrides):
    """Apply ``key=value`` overrides.

    Bare keys address ``params`` (``c6=1e5``) or top-level fields
    (``workers=4``); dotted keys address a section (``grid.omega_points=101``).
    Values are parsed as YAML scalars or lists.
    """
    data = config.to_dict()
    for item in overrides:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse override value in {item!r}") from exc
        if "." in key:
            section, _, sub = key.partition(".")
            if not isinstance(data.get(section), dict):
                raise ConfigError(f"unknown config section {section!r} in override {item!r}")
            if sub not in data[section]:
                raise ConfigError(f"unknown key {key!r} in override")
            data[section][sub] = value
        elif key in data["params"]:
            data["params"][key] = value
        elif key in ("workers", "mode"):
            data[key] = value
        else:
            raise ConfigError(f"unknown key {key!r} in override")
    return RunConfig.from_dict(data)


# -- serialization ------------------------------------------------------------------


def _fmt(x):
    return format(float(x), ".17g")


def _provenance(config):
    """Resolved configuration minus settings that cannot change the numbers."""
    data = config.to_dict()
    del data["workers"]
    del data["output"]["directory"]
    return data


def _header(config):
    lines = [f"cavity-eit {__version__}", f"mode: {config.mode}", "resolved configuration:"]
    body = yaml.safe_dump(_provenance(config), sort_keys=True, default_flow_style=False)
    lines += ["  " + line for line in body.splitlines()]
    p = config.params
    lines.append(f"derived: gamma_c = {_fmt(p.gamma_c)}, g_sqrt_n = {_fmt(p.g_sqrt_n)}")
    return "".join(f"# {line}\n" for line in lines)


def render_csv(config, columns, rows, notes=()):
    """CSV text with a commented header block; numbers at 17 significant digits."""
    out = [_header(config)]
    out += [f"# {note}\n" for note in notes]
    out.append(",".join(columns) + "\n")
    for row in rows:
        out.append(",".join(_fmt(v) for v in row) + "\n")
    return "".join(out)


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_ready(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    return obj


def render_json(config, report):
    doc = {
        "generator": f"cavity-eit {__version__}",
        "mode": config.mode,
        "config": _provenance(config),
        "scalar_units": "gamma_e",
        "report": report,
    }
    return json.dumps(_json_ready(doc), indent=2, sort_keys=True) + "\n"


def write_outputs(directory, files):
    """Write ``{name: text}`` atomically: all temp files first, then renames."""
    os.makedirs(directory, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=directory)
            staged.append((tmp, os.path.join(directory, name)))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for tmp, final in staged:
            os.replace(tmp, final)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.remove(tmp)
    return [final for _, final in staged]


# -- modes --------------------------------------------------------------------------


def _unit_scale(config):
    """Factor applied to frequencies on output (densities get its inverse)."""
    return GAMMA_E_MHZ if config.output.units == "MHz" else 1.0


def _units_note(config):
    if config.output.units == "MHz":
        return "units: frequencies in MHz (cyclic, gamma_e = 2 pi x 3 MHz); densities per MHz"
    return "units: frequencies in gamma_e; densities per gamma_e"


def _tmatrix(config, params):
    t = config.tmatrix
    return compute_tmatrix(params, method=t.method, seeds=t.seeds, n_atoms=t.n_atoms,
                           workers=config.workers)


def _peak_table(omega, density, rel_prominence=0.01):
    pos, prom = find_ridges(omega, density, rel_prominence)
    top = float(np.max(density)) if density.size else 0.0
    idx = np.searchsorted(omega, pos)
    return [
        {"omega": float(w), "density": float(density[i]), "relative_prominence": float(p / top)}
        for w, i, p in zip(pos, idx, prom)
    ]


_G_LABELS = {"symmetric": ("a", "b", "s"), "q_nonzero": ("bq", "cq")}


def run_greens(config):
    scale = _unit_scale(config)
    omega = config.grid.omega()
    blocks, columns = [], ["omega"]
    for sector, labels in _G_LABELS.items():
        g = greens_array(config.params, omega, sector) / scale
        for i, li in enumerate(labels):
            for j, lj in enumerate(labels):
                blocks += [g[:, i, j].real, g[:, i, j].imag]
                columns += [f"G_{li}_{lj}_re", f"G_{li}_{lj}_im"]
    rows = np.column_stack([omega * scale] + blocks)
    return {"greens.csv": render_csv(config, columns, rows, [_units_note(config)])}


def run_tmatrix(config):
    tm = _tmatrix(config, config.params)
    return {"tmatrix.json": render_json(config, {"tmatrix": tm.to_dict()})}


def run_spectrum(config):
    scale = _unit_scale(config)
    params = config.params
    tm = _tmatrix(config, params)
    res = compute_spectrum(params, config.grid.omega(), tmatrix=tm)
    density = res.inelastic / scale
    rows = np.column_stack([res.omega * scale, density, log_density(density)])
    report = {
        "tmatrix": tm.to_dict(),
        "elastic_weight_2": res.elastic_weight_2,
        "elastic_weight_4": res.elastic_weight_4,
        "polariton_energies": polariton_energies(params),
        "peaks": _peak_table(res.omega, res.inelastic),
    }
    return {
        "spectrum.csv": render_csv(config, ["omega", "s_inelastic", "log10_s_inelastic"], rows,
                                   [_units_note(config)]),
        "spectrum.json": render_json(config, report),
    }


def run_map(config):
    scale = _unit_scale(config)
    smap = spectrum_map(config.params, config.grid.omega(), config.grid.omega_cf(),
                        workers=config.workers, tmatrix_method=config.tmatrix.method)
    n_cf, n_w = smap.density.shape
    density = smap.density / scale
    rows = np.column_stack([
        np.repeat(smap.omega_cf, n_w) * scale,
        np.tile(smap.omega, n_cf) * scale,
        density.ravel(),
        np.where(smap.valid, log_density(np.where(smap.valid, density, 1.0)), np.nan).ravel(),
    ])
    overlay_cols = ["omega_cf", "minus_eps3", "minus_eps2", "minus_eps1", "eps1", "eps2", "eps3"]
    overlay_rows = np.column_stack([smap.omega_cf, smap.overlays]) * scale
    columns = []
    for i, cf in enumerate(smap.omega_cf):
        entry = {"omega_cf": float(cf), "t0": complex(smap.t0[i]), "valid": bool(smap.valid[i].all())}
        if entry["valid"]:
            entry["ridges"] = _peak_table(smap.omega, smap.density[i])
        else:
            entry["error"] = smap.errors[i]
        columns.append(entry)
    note = [_units_note(config)]
    return {
        "map.csv": render_csv(config, ["omega_cf", "omega", "s_inelastic", "log10_s_inelastic"],
                              rows, note),
        "map_overlays.csv": render_csv(config, overlay_cols, overlay_rows, note),
        "map.json": render_json(config, {"columns": columns, "invalid_columns": sorted(smap.errors)}),
    }


def run_oracle_compare(config):
    scale = _unit_scale(config)
    o = config.oracle
    params = config.params.replace(n_atoms=o.n_atoms)
    positions = line_positions(o.n_atoms, o.separation)
    model = build_model(params, positions, n_max=o.n_max)
    ss = steady_state(model)
    omega = config.grid.omega()
    emitted = emission_spectrum(model, ss, omega, method=o.spectrum_method)

    analytic = compute_spectrum(params, omega, tmatrix=_tmatrix(config, params))
    linear = abs(params.alpha * complex(greens_array(params, 0.0)[0, 0])) ** 2
    exponents = {}
    for name in o.observables:
        fit = alpha_scaling(model, name, o.alphas)
        exponents[name] = {"exponent": fit.exponent, "prefactor": fit.prefactor,
                           "max_residual": fit.max_residual, "curvature": fit.curvature}
    report = {
        "oracle": {
            "n_atoms": o.n_atoms,
            "n_max": o.n_max,
            "basis_size": model.dim,
            "steady_state_residual": ss.residual,
            "mean_field": ss.mean_field(),
            "photon_number": ss.photon_number(),
            "third_order_deviation": third_order_deviation(ss),
            "elastic_weight": emitted.elastic_weight,
            "connected_power": emitted.connected_power,
            "total_power": emitted.total_power,
            "peaks": _peak_table(omega, emitted.density),
        },
        "analytic": {
            "linear_photon_number": linear,
            "elastic_weight_2": analytic.elastic_weight_2,
            "elastic_weight_4": analytic.elastic_weight_4,
            "t0": analytic.t0,
            "peaks": _peak_table(omega, analytic.inelastic),
        },
        "photon_number_ratio": ss.photon_number() / linear if linear > 0 else None,
        "alpha_exponents": exponents,
    }
    rows = np.column_stack([omega * scale, emitted.density / scale, analytic.inelastic / scale])
    return {
        "oracle_spectrum.csv": render_csv(config, ["omega", "s_inelastic_oracle", "s_inelastic_analytic"],
                                          rows, [_units_note(config)]),
        "oracle_compare.json": render_json(config, report),
    }


RUNNERS = {
    "greens": run_greens,
    "tmatrix": run_tmatrix,
    "spectrum": run_spectrum,
    "map": run_map,
    "oracle-compare": run_oracle_compare,
}


def run(config):
    """Compute all artifacts of ``config.mode`` and return ``{file name: text}``."""
    if config.mode not in RUNNERS:
        raise ConfigError(f"no mode selected (one of {MODES})")
    return RUNNERS[config.mode](config)


# -- entry point --------------------------------------------------------------------


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser():
    parser = _Parser(prog="cavity-eit", description="Cavity Rydberg-EIT transmission spectra.")
    parser.add_argument("--version", action="version", version=f"cavity-eit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", help=f"output directory (overrides ${OUTPUT_ENV} and the config)")
        p.add_argument("--workers", type=int, help="parallel workers")
        p.add_argument("--units", choices=UNITS, help="frequency units of CSV output")
        p.add_argument("--params", nargs="+", default=[], metavar="KEY=VALUE",
                       help="configuration overrides")
    sub.add_parser("init-config", help="print the default configuration")
    return parser


def resolve_config(args, environ=None):
    environ = os.environ if environ is None else environ
    config = load_config(args.config)
    if config.mode is not None and config.mode != args.mode:
        raise ConfigError(f"config declares mode {config.mode!r} but {args.mode!r} was requested")
    config = apply_overrides(config, args.params)
    output = config.output
    if args.out is not None:
        output = replace(output, directory=args.out)
    elif environ.get(OUTPUT_ENV):
        output = replace(output, directory=environ[OUTPUT_ENV])
    if args.units is not None:
        output = replace(output, units=args.units)
    changes = {"mode": args.mode, "output": output}
    if args.workers is not None:
        changes["workers"] = args.workers
    try:
        return replace(config, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _error_record(kind, exc, mode, code):
    record = {"status": "error", "error_type": kind, "message": str(exc), "mode": mode, "exit_code": code}
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
    return code


def main(argv=None):
    mode = None
    try:
        args = build_parser().parse_args(argv)
        mode = args.mode
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if mode == "init-config":
            sys.stdout.write(dump_config(RunConfig()))
            return 0
        config = resolve_config(args)
        files = run(config)
        written = write_outputs(config.output.directory, files)
    except _UsageError as exc:
        return _error_record("UsageError", exc, mode, EXIT_CONFIG)
    except ConfigError as exc:
        return _error_record("ConfigError", exc, mode, EXIT_CONFIG)
    except CavityEITError as exc:
        code = EXIT_CONFIG if isinstance(exc, ValueError) else EXIT_COMPUTE
        return _error_record(type(exc).__name__, exc, mode, code)
    except OSError as exc:
        return _error_record("OSError", exc, mode, EXIT_COMPUTE)
    for path in written:
        logger.info("wrote %s", path)
    sys.stdout.write(json.dumps({"status": "ok", "mode": mode, "files": written}, sort_keys=True) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
