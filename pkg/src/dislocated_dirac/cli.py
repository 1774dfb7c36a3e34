"""Batch driver: ``dislocated-dirac {spectrum,scatter,evolve,decay-sweep,validate}``.

Every run writes CSV tables plus one JSON metadata record into the output
directory (``--out``, else ``$DISLOCATED_DIRAC_OUT``, else ``./dd-out``).
Exit status: 0 success, 2 bad configuration, 3 numerical tolerance failure,
4 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .core import TWO_PI, SpatialGrid
from .decay import DatumSpec, run_decay_experiment
from .oracle import OracleConfig
from .propagator import MULTIPLIER_CONVENTION, Propagator, PropagatorConfig, QuadratureToleranceWarning
from .spectral import bound_state, bound_state_energy, scattering_coeffs, t_squared

OUT_ENV = "DISLOCATED_DIRAC_OUT"
COMMANDS = ("spectrum", "scatter", "evolve", "decay-sweep", "validate")

EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    tau: list = field(default_factory=lambda: [math.pi])
    k: list = field(default_factory=lambda: [1.0])
    t: list = field(default_factory=lambda: [1.0])
    datum: DatumSpec = field(default_factory=DatumSpec)
    propagator: PropagatorConfig = field(default_factory=PropagatorConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    out: Path = field(default_factory=lambda: Path(os.environ.get(OUT_ENV, "dd-out")))
    seed: int = 0
    threads: int | None = None
    psi_half_width: float = 10.0
    psi_h: float = 0.05
    eval_h: float = 0.05
    decay_ps: list = field(default_factory=lambda: [2])
    decay_windows: list = field(default_factory=lambda: [[50.0, 400.0]])
    decay_window_x: float = 10.0

    def to_json(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (DatumSpec, PropagatorConfig, OracleConfig)):
                v = asdict(v)
            elif isinstance(v, Path) or f.name == "threads":
                continue  # neither affects results
            d[f.name] = v
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _floats(v, name):
    vals = v if isinstance(v, list) else [v]
    try:
        out = [float(x) for x in vals]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be numeric") from exc
    if not out or not all(math.isfinite(x) for x in out):
        raise ConfigError(f"{name} must be a non-empty list of finite numbers")
    return out


def _sub(cls, data, name):
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be an object")
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(extra)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name!r} section: {exc}") from exc


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge the JSON document (global keys, then the command's section) with CLI overrides."""
    doc: dict = {}
    if args.config:
        text = Path(args.config).read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
    flat = {k: v for k, v in doc.items() if k not in COMMANDS}
    section = doc.get(args.command, {})
    if not isinstance(section, dict):
        raise ConfigError(f"section {args.command!r} must be an object")
    flat.update(section)

    cfg = RunConfig(command=args.command)
    simple = {"tau", "k", "t", "seed", "threads", "psi_half_width", "psi_h", "eval_h",
              "decay_ps", "decay_windows", "decay_window_x", "out"}
    nested = {"datum": DatumSpec, "propagator": PropagatorConfig, "oracle": OracleConfig}
    unknown = set(flat) - simple - set(nested)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    for key, cls in nested.items():
        if key in flat:
            setattr(cfg, key, _sub(cls, flat[key], key))
    for key in ("tau", "k", "t"):
        if key in flat:
            setattr(cfg, key, _floats(flat[key], key))
    for key in ("psi_half_width", "psi_h", "eval_h", "decay_window_x"):
        if key in flat:
            setattr(cfg, key, _floats(flat[key], key)[0])
    if "decay_ps" in flat:
        cfg.decay_ps = [int(p) for p in _floats(flat["decay_ps"], "decay_ps")]
    if "decay_windows" in flat:
        w = flat["decay_windows"]
        if not (isinstance(w, list) and all(isinstance(p, list) and len(p) == 2 for p in w)):
            raise ConfigError("decay_windows must be a list of [t_lo, t_hi] pairs")
        cfg.decay_windows = [_floats(p, "decay_windows") for p in w]
    if "seed" in flat:
        cfg.seed = int(flat["seed"])
    if "threads" in flat:
        cfg.threads = int(flat["threads"])
    if "out" in flat:
        cfg.out = Path(flat["out"])

    # command-line overrides
    if args.tau is not None:
        cfg.tau = args.tau
    if args.k is not None:
        cfg.k = args.k
    if args.t is not None:
        cfg.t = args.t
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    if args.out is not None:
        cfg.out = Path(args.out)
    overrides = {}
    if args.epsilon is not None:
        overrides["epsilon"] = args.epsilon
    if args.k0 is not None:
        overrides["k0"] = args.k0
    if overrides:
        try:
            cfg.propagator = PropagatorConfig(**{**asdict(cfg.propagator), **overrides})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    _check_ranges(cfg)
    return cfg


def _check_ranges(cfg: RunConfig) -> None:
    if any(not 0.0 <= tau <= TWO_PI for tau in cfg.tau):
        raise ConfigError("tau values must lie in [0, 2*pi]")
    if cfg.command == "scatter" and any(k == 0.0 for k in cfg.k):
        raise ConfigError("scattering data needs k != 0")
    if cfg.command in ("evolve", "decay-sweep") and any(t < 0 for t in cfg.t):
        raise ConfigError("times must be non-negative")
    if cfg.command == "decay-sweep" and (sorted(set(cfg.t)) != cfg.t or cfg.t[0] <= 0):
        raise ConfigError("decay-sweep times must be positive and strictly increasing")
    if cfg.threads is not None and cfg.threads < 1:
        raise ConfigError("threads must be at least 1")
    if cfg.seed < 0:
        raise ConfigError("seed must be non-negative")
    for name in ("psi_half_width", "psi_h", "eval_h", "decay_window_x"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be positive")
    if any(p not in (0, 1, 2) for p in cfg.decay_ps):
        raise ConfigError("decay_ps entries must be 0, 1 or 2")


# ------------------------------------------------------------------ output


def fmt(v) -> str:
    """Round-trip float formatting with 17 significant digits."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


class Writer:
    """Serialized CSV/JSON writer rooted at the output directory."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.root = cfg.out
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def table(self, name: str, header, rows) -> Path:
        path = self.root / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
        self.files.append(name)
        return path

    def metadata(self, results: dict, status: int) -> Path:
        record = {
            "command": self.cfg.command,
            "config": self.cfg.to_json(),
            "config_sha256": self.cfg.digest(),
            "multiplier_convention": MULTIPLIER_CONVENTION,
            "version": __version__,
            "seed": self.cfg.seed,
            "exit_status": status,
            "outputs": self.files,
            "results": results,
        }
        path = self.root / f"{self.cfg.command}.json"
        path.write_text(json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n")
        return path


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


# ---------------------------------------------------------------- commands


def cmd_spectrum(cfg: RunConfig, out: Writer):
    grid = SpatialGrid.symmetric(cfg.psi_half_width, cfg.psi_h)
    rows, psi_rows, results = [], [], []
    for tau in cfg.tau:
        has_state = 0.0 < tau < TWO_PI
        w = bound_state_energy(tau)
        rows.append([tau, w, has_state])
        results.append({"tau": tau, "omega_tau": w, "bound_state": has_state})
        if has_state:
            psi = bound_state(tau, grid.x)
            for x, (a, b) in zip(grid.x, psi):
                psi_rows.append([tau, x, a.real, a.imag, b.real, b.imag])
    out.table("spectrum.csv", ["tau", "omega_tau", "bound_state"], rows)
    out.table("spectrum_psi.csv", ["tau", "x", "re_psi1", "im_psi1", "re_psi2", "im_psi2"], psi_rows)
    return {"rows": results}, EXIT_OK


def cmd_scatter(cfg: RunConfig, out: Writer):
    rows, results = [], []
    for tau in cfg.tau:
        for k in cfg.k:
            sd = scattering_coeffs(k, tau)
            t2 = float(t_squared(k, tau))
            rows.append([tau, k, sd.T.real, sd.T.imag, t2, sd.R1.real, sd.R1.imag,
                         sd.R2.real, sd.R2.imag, sd.phi.real, sd.phi.imag])
            results.append({
                "tau": tau, "k": k, "T_abs2": t2,
                "T": [sd.T.real, sd.T.imag], "T2": [sd.T2.real, sd.T2.imag],
                "R1": [sd.R1.real, sd.R1.imag], "R2": [sd.R2.real, sd.R2.imag],
            })
    out.table("scatter.csv", ["tau", "k", "re_T", "im_T", "T_abs2", "re_R1", "im_R1",
                              "re_R2", "im_R2", "re_phi", "im_phi"], rows)
    return {"rows": results}, EXIT_OK


def cmd_evolve(cfg: RunConfig, out: Writer):
    datum = cfg.datum.field()
    half = cfg.datum.half_width
    n = int(round(2 * half / cfg.eval_h))
    grid = SpatialGrid(-half, half, n + 1)
    rows, diag_rows, ok_all = [], [], True
    for tau in cfg.tau:
        prop = Propagator(datum, tau, cfg.propagator)
        for t in cfg.t:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", QuadratureToleranceWarning)
                res = prop.full(t, grid.x, grid)
            d = res.diagnostics
            ok_all &= d.tolerance_met
            diag_rows.append([tau, t, d.quad_error, d.tail_bound, d.n_nodes, d.tolerance_met])
            for x, (a, b) in zip(grid.x, res.values):
                rows.append([tau, t, x, a.real, a.imag, b.real, b.imag])
    out.table("evolve.csv", ["tau", "t", "x", "re_a1", "im_a1", "re_a2", "im_a2"], rows)
    out.table("evolve_diagnostics.csv",
              ["tau", "t", "quad_error", "tail_bound", "n_nodes", "tolerance_met"], diag_rows)
    return {"tolerance_met": ok_all}, EXIT_OK if ok_all else EXIT_TOLERANCE


def cmd_decay(cfg: RunConfig, out: Writer):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QuadratureToleranceWarning)
        reports = run_decay_experiment(
            cfg.tau, cfg.datum, np.array(cfg.t), cfg.propagator,
            windows=[tuple(w) for w in cfg.decay_windows], ps=tuple(cfg.decay_ps),
            window=cfg.decay_window_x, fit_envelope_p=2 if 2 in cfg.decay_ps and len(cfg.t) >= 3 else None,
        )
    rows, fit_rows, results, refused = [], [], [], False
    for rep in reports:
        for i, t in enumerate(rep.times):
            for p in cfg.decay_ps:
                rows.append([rep.tau, t, p, rep.norms[p][i], rep.quad_errors[i]])
        for (p, (lo, hi)), slope in sorted(rep.fitted_slope.items()):
            fit_rows.append([rep.tau, p, lo, hi, slope])
        refused |= bool(rep.refused)
        results.append({
            "tau": rep.tau, "envelope_C": rep.envelope_c, "envelope_s": rep.envelope_s,
            "sin2_half_tau": math.sin(rep.tau / 2) ** 2, "crossover_t": rep.crossover_t,
            "refused_windows": [[p, list(w)] for p, w in rep.refused],
        })
    out.table("decay.csv", ["tau", "t", "p", "norm", "quad_error"], rows)
    out.table("decay_fits.csv", ["tau", "p", "t_lo", "t_hi", "slope"], fit_rows)
    return {"reports": results}, EXIT_TOLERANCE if refused else EXIT_OK


def cmd_validate(cfg: RunConfig, out: Writer):
    from .validation import run_suite

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        checks = run_suite(cfg.seed)
    rows = [[c.name, c.samples, c.residual, c.tolerance, c.passed] for c in checks]
    out.table("validate.csv", ["check", "samples", "max_residual", "tolerance", "passed"], rows)
    passed = sum(c.passed for c in checks)
    summary = {"passed": passed, "total": len(checks),
               "failed": [c.name for c in checks if not c.passed]}
    print(f"validate: {passed}/{len(checks)} checks passed")
    return summary, EXIT_OK if passed == len(checks) else EXIT_TOLERANCE


HANDLERS = {
    "spectrum": cmd_spectrum,
    "scatter": cmd_scatter,
    "evolve": cmd_evolve,
    "decay-sweep": cmd_decay,
    "validate": cmd_validate,
}


# ------------------------------------------------------------------- entry


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--tau", type=float, nargs="+")
    common.add_argument("--k", type=float, nargs="+")
    common.add_argument("--t", type=float, nargs="+")
    common.add_argument("--epsilon", type=float)
    common.add_argument("--k0", type=float)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./dd-out)")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    parser = _Parser(prog="dislocated-dirac", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def run(cfg: RunConfig) -> int:
    if cfg.threads is not None:
        _kernels.set_threads(cfg.threads)
    try:
        out = Writer(cfg)
        results, status = HANDLERS[cfg.command](cfg, out)
        out.metadata(results, status)
    except OSError as exc:
        print(f"dislocated-dirac: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
    except (ConfigError, TypeError, ValueError) as exc:
        print(f"dislocated-dirac: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"dislocated-dirac: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
