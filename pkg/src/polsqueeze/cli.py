"""Command-line interface.

Exit codes: 0 success, 1 validation failure, 2 usage error,
3 numerical capacity or convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__, criteria, explorer, fock_oracle, validation
from .stokes_core import InvalidInputError, InteractionTimeOverflow, make_coherent_input, variance_stokes

SCHEMA_VERSION = 1
CONFIG_ENV = "POLSQUEEZE_CONFIG"

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("polsqueeze")


@dataclass(frozen=True)
class RunConfig:
    epsilon_trunc: float = 1e-10
    observable_tol: float = 1e-8
    max_cutoff: int = 512
    growth_guard: float = 1.5
    rel_tol: float = validation.REL_TOL
    abs_tol: float = validation.ABS_TOL
    format: str = "json"
    output: str | None = None
    seed: int = 20240601

    def __post_init__(self):
        for name in ("epsilon_trunc", "observable_tol", "rel_tol", "abs_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"config {name} must be positive")
        if self.format not in ("json", "csv"):
            raise ValueError(f"config format must be json or csv, got {self.format!r}")

    @classmethod
    def load(cls, path: str | None = None) -> "RunConfig":
        """Defaults, overridden by a JSON file from ``path`` or ``$POLSQUEEZE_CONFIG``."""
        path = path or os.environ.get(CONFIG_ENV)
        if not path:
            return cls()
        with open(path) as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def policy(self) -> fock_oracle.TruncationPolicy:
        return fock_oracle.TruncationPolicy(
            epsilon_trunc=self.epsilon_trunc, observable_tol=self.observable_tol,
            max_cutoff=self.max_cutoff, growth_guard=self.growth_guard)


class UsageError(Exception):
    pass


def _clean(obj):
    """JSON-ready copy: numpy scalars to Python, NaN/inf to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _csv_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else format(float(x), ".12g")
    return str(x)


def dump_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_csv_cell(x) for x in r])
    return buf.getvalue()


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _angle(args, value: float) -> float:
    return math.radians(value) if args.degrees else value


def _relative_deltas(a, b, rel: float, abs_: float) -> dict:
    x, y = validation.moment_vector(a), validation.moment_vector(b)
    names = ("S0", "S1", "S2", "S3", "V1", "V2", "V3")
    out = {}
    for name, u, v in zip(names, x, y):
        d = abs(u - v)
        scale = max(abs(u), abs(v))
        out[name] = {"abs": d, "rel": d / scale if scale > 0 else 0.0,
                     "agree": d <= max(rel * abs(u), abs_)}
    return out


def _method_block(moments, direction):
    block = {"moments": moments.as_dict()}
    block["assessment"] = criteria.assess(moments, direction).as_dict()
    if moments.source == "fock_oracle":
        block["oracle"] = {k: moments.meta.get(k) for k in ("cutoff", "check_cutoff", "check_delta",
                                                            "edge_leakage", "norm")}
    return block


def cmd_evaluate(args, cfg: RunConfig) -> int:
    inp = make_coherent_input(args.amplitude, _angle(args, args.theta),
                              _angle(args, args.phi_x), _angle(args, args.phi_y))
    direction = criteria.Direction.parse(args.direction)
    report = {
        "schema": f"polsqueeze.evaluate/{SCHEMA_VERSION}",
        "input": {"A": args.amplitude, "theta": _angle(args, args.theta),
                  "phi_x": _angle(args, args.phi_x), "phi_y": _angle(args, args.phi_y),
                  "T": args.time},
        "canonical_input": inp.as_dict(),
        "direction": direction.n.tolist(),
        "methods": {},
    }
    analytic = oracle = None
    if args.method in ("analytic", "both"):
        analytic = variance_stokes(inp, args.time)
        report["methods"]["analytic"] = _method_block(analytic, direction)
    if args.method in ("fock", "both"):
        oracle = fock_oracle.oracle_moments(inp, args.time, cfg.policy())
        report["methods"]["fock"] = _method_block(oracle, direction)
    if analytic is not None and oracle is not None:
        deltas = _relative_deltas(analytic, oracle, cfg.rel_tol, cfg.abs_tol)
        report["deltas"] = deltas
        report["max_rel_delta"] = max(d["rel"] for d in deltas.values())
        report["agree"] = all(d["agree"] for d in deltas.values())
    if args.scan_directions:
        if oracle is None:
            raise UsageError("--scan-directions needs --method fock or both")
        scan = explorer.direction_scan(oracle, args.scan_directions, cfg.seed)
        report["direction_scan"] = asdict(scan)
    _emit(dump_json(report), args.output or cfg.output)
    return EXIT_OK


def cmd_region(args, cfg: RunConfig) -> int:
    curve = explorer.boundary_curve(args.time_max, args.steps)
    _emit(dump_csv(("T", "phi1", "phi2"), curve.samples), args.output or cfg.output)
    return EXIT_OK


def cmd_optimize(args, cfg: RunConfig) -> int:
    r = explorer.optimize_factor(args.time, _angle(args, args.resolution))
    out = {"schema": f"polsqueeze.optimize/{SCHEMA_VERSION}", **r.as_dict()}
    _emit(dump_json(out), args.output or cfg.output)
    return EXIT_OK


def parse_axis(text: str, degrees: bool = False) -> tuple[str, list[float]]:
    """``AXIS=v1,v2,...`` or ``AXIS=start:stop:count`` (inclusive linspace)."""
    if "=" not in text:
        raise UsageError(f"grid spec {text!r} is not AXIS=VALUES")
    name, spec = (s.strip() for s in text.split("=", 1))
    if name not in explorer.SWEEP_AXES:
        raise UsageError(f"unknown grid axis {name!r}; choose from {', '.join(explorer.SWEEP_AXES)}")
    try:
        if ":" in spec:
            start, stop, count = spec.split(":")
            values = np.linspace(float(start), float(stop), int(count)).tolist()
        else:
            values = [float(v) for v in spec.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse grid values {spec!r}") from None
    if degrees and name in ("theta", "phi_x", "phi_y"):
        values = [math.radians(v) for v in values]
    return name, values


def cmd_sweep(args, cfg: RunConfig) -> int:
    grid = {}
    for g in args.grid or []:
        name, values = parse_axis(g, args.degrees)
        if name in grid:
            raise UsageError(f"grid axis {name!r} given twice")
        grid[name] = values
    table = explorer.sweep(grid, args.method, args.direction, cfg.policy())
    fmt = args.format or "csv"
    if fmt == "csv":
        text = dump_csv(table.columns, table.rows)
    else:
        text = dump_json({"schema": f"polsqueeze.sweep/{SCHEMA_VERSION}",
                          "method": table.method, "columns": list(table.columns),
                          "records": table.records()})
    _emit(text, args.output or cfg.output)
    return EXIT_OK


def cmd_scenario(args, cfg: RunConfig) -> int:
    r = explorer.scenario_section4(args.amplitude, args.time, _angle(args, args.phase), cfg.policy())
    out = {"schema": f"polsqueeze.scenario/{SCHEMA_VERSION}", **r.as_dict()}
    _emit(dump_json(out), args.output or cfg.output)
    return EXIT_OK


def cmd_validate(args, cfg: RunConfig) -> int:
    seed = args.seed if args.seed is not None else cfg.seed
    rel_tol = args.tolerance if args.tolerance is not None else cfg.rel_tol
    out = open(args.output, "w") if args.output else sys.stdout
    try:
        checks = validation.run_all(args.samples, seed, cfg.policy(),
                                    progress=lambda c: print(c.line(), file=out, flush=True),
                                    rel_tol=rel_tol)
    finally:
        if args.output:
            out.close()
    failed = [c.name for c in checks if not c.passed]
    summary = f"{len(checks) - len(failed)}/{len(checks)} checks passed"
    print(summary if not failed else f"{summary}; failed: {', '.join(failed)}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="polsqueeze",
        description="Polarization squeezing of coherent light under non-degenerate "
                    "parametric amplification.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help=f"JSON run config (default: ${CONFIG_ENV})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, angles=True):
        sp.add_argument("-o", "--output", help="write to this file instead of stdout")
        if angles:
            sp.add_argument("--degrees", action="store_true", help="angle flags are in degrees")

    e = sub.add_parser("evaluate", help="moments and squeezing assessment at one point")
    e.add_argument("--amplitude", type=float, default=1.0, help="A = sqrt(mean photon number)")
    e.add_argument("--theta", type=float, default=math.pi / 4)
    e.add_argument("--phi-x", type=float, default=3 * math.pi / 4)
    e.add_argument("--phi-y", type=float, default=3 * math.pi / 4)
    e.add_argument("--time", type=float, default=1.0, help="interaction time T = k t")
    e.add_argument("--method", choices=("analytic", "fock", "both"), default="analytic")
    e.add_argument("--direction", default="x", help='x|y|z (S1, S2, S3) or "nx,ny,nz"')
    e.add_argument("--scan-directions", type=int, default=0, metavar="N",
                   help="also search N random directions for stronger squeezing (oracle)")
    common(e)
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("region", help="CSV of the no-squeezing band edges phi1, phi2 vs T")
    r.add_argument("--time-max", type=float, required=True)
    r.add_argument("--steps", type=int, required=True)
    common(r, angles=False)
    r.set_defaults(func=cmd_region)

    o = sub.add_parser("optimize", help="minimum S1 squeezing factor at fixed T")
    o.add_argument("--time", type=float, required=True)
    o.add_argument("--resolution", type=float, default=explorer.DEFAULT_RESOLUTION,
                   help="grid spacing (radians unless --degrees)")
    common(o)
    o.set_defaults(func=cmd_optimize)

    s = sub.add_parser("sweep", help="rectangular parameter sweep")
    s.add_argument("--grid", action="append", metavar="AXIS=VALUES",
                   help="AXIS in A,theta,phi_x,phi_y,T; VALUES as v1,v2,... or start:stop:count")
    s.add_argument("--method", choices=("analytic", "fock", "both"), default="analytic")
    s.add_argument("--direction", default="x")
    s.add_argument("--format", choices=("csv", "json"), default=None)
    common(s)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("scenario", help="equal-amplitude, equal-phase preset with intensity readouts")
    c.add_argument("--amplitude", type=float, default=1.0)
    c.add_argument("--time", type=float, default=1.0)
    c.add_argument("--phase", type=float, default=explorer.RECOMMENDED_PHASE)
    common(c)
    c.set_defaults(func=cmd_scenario)

    v = sub.add_parser("validate", help="run the invariant and acceptance checks")
    v.add_argument("--samples", type=int, default=100, help="random oracle points (>= 100 to pass)")
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--tolerance", type=float, default=None, help="override relative tolerance")
    v.add_argument("-o", "--output")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        return args.func(args, cfg)
    except (UsageError, InvalidInputError, criteria.UnsupportedDirectionError,
            explorer.BudgetExceededError, explorer.DegenerateOptimumError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"polsqueeze: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (fock_oracle.CapacityError, fock_oracle.ConvergenceError, InteractionTimeOverflow) as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, fock_oracle.CapacityError):
            diag.update(needed=exc.needed, max_cutoff=exc.max_cutoff)
        elif isinstance(exc, fock_oracle.ConvergenceError):
            diag["diagnostics"] = exc.diagnostics
        sys.stderr.write(dump_json(diag))
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
