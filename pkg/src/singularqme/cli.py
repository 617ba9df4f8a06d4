"""
Command-line front end.

CSV output goes to ``--out`` or stdout; ``key = value`` reports go to stdout,
or to stderr when stdout carries CSV.  Exit codes: 0 success, 1 usage or
validation error, 2 numerical, not-found or resource failure.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from dataclasses import fields

import numpy as np

from . import generators, nonmarkov, tomography
from .errors import (IllConditionedError, NotFoundError, NumericalFailureError,
                     ResourceError, UnsupportedError)
from .models import CATALOG, CentralSpin, eval_number, make_model
from .qubit import BlochState, density_from_bloch

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

SETTINGS = ("model", "t_max", "dt", "initial", "epsilon", "periodic", "rational_tol",
            "oracle", "out", "n_points", "occurrence", "method", "cond_limit", "trace")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(v) -> str:
    return f"{v:.12g}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(float(v)) for v in row) + "\n")
    return buf.getvalue()


def _report(pairs) -> str:
    lines = []
    for key, val in pairs:
        if isinstance(val, float):
            val = _fmt(val)
        elif isinstance(val, (tuple, list, np.ndarray)):
            val = ",".join(_fmt(float(v)) if not isinstance(v, str) else v for v in val)
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


# --- configuration ---------------------------------------------------------

def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _parse_params(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _merge_config(args):
    params = {}
    if args.config:
        for key, val in read_config(args.config).items():
            if key in SETTINGS:
                if getattr(args, key, None) in (None, False):
                    setattr(args, key, val)
            else:
                params[key] = val
    params.update(_parse_params(args.param))
    args.params = params
    for key in ("t_max", "dt", "epsilon", "rational_tol", "cond_limit"):
        val = getattr(args, key, None)
        if isinstance(val, str):
            setattr(args, key, eval_number(val))
    for key in ("n_points", "occurrence"):
        val = getattr(args, key, None)
        if isinstance(val, str):
            setattr(args, key, int(val))
    for key in ("periodic", "oracle", "trace"):
        val = getattr(args, key, None)
        if isinstance(val, str):
            setattr(args, key, val.lower() in ("1", "true", "yes", "on"))
    if args.t_max is not None and args.t_max <= 0:
        raise UsageError("--t-max must be positive")
    if args.dt is not None and args.dt <= 0:
        raise UsageError("--dt must be positive")
    return args


def _model(args):
    if not args.model:
        raise UsageError("--model is required")
    return make_model(args.model, **args.params)


def _initial(args, default=(1.0, 0.0, 0.0)) -> BlochState:
    if args.initial is None:
        xyz = default
    else:
        parts = args.initial
        if isinstance(parts, str):
            parts = parts.replace(" ", "").split(",")
        if len(parts) != 3:
            raise UsageError("--initial expects x,y,z")
        xyz = [eval_number(str(p)) for p in parts]
    state = BlochState.from_xyz(xyz)
    if not state.is_physical():
        raise UsageError("--initial lies outside the Bloch ball")
    return state


def _grid(args, default_t_max=2 * math.pi):
    t_max = args.t_max if args.t_max is not None else default_t_max
    dt = args.dt if args.dt is not None else t_max / 1000.0
    n = int(round(t_max / dt))
    if n < 1:
        raise UsageError("--dt must not exceed --t-max")
    if abs(n * dt - t_max) > 1e-9 * t_max:
        n = int(math.ceil(t_max / dt))
    return np.linspace(0.0, t_max, n + 1)


# --- commands (each returns (csv_text or None, report or None)) ------------

def cmd_models(args):
    pairs = []
    for name, cls in CATALOG.items():
        defaults = ",".join(f"{f.name}={f.default}" for f in fields(cls))
        pairs.append((name, defaults or "-"))
    return None, _report(pairs)


def cmd_simulate(args):
    model = _model(args)
    grid = _grid(args)
    rho0 = _initial(args)
    states = model.matrix(grid) @ rho0.r
    rows = np.column_stack([grid, states[:, 1:]])
    return _csv(["t", "x", "y", "z"], rows), None


def _ode_report(model, ode):
    pairs = [("model", model.name), ("order", ode.order)]
    for i, comp in enumerate(("1", "x", "y", "z")):
        pairs.append((f"coefficients[{comp}]", ode[i]))
        pairs.append((f"equation[{comp}]", ode.equation(i)))
    return pairs


def cmd_derive(args):
    model = _model(args)
    ode = generators.derive_ode(model)
    return None, _report(_ode_report(model, ode))


def cmd_integrate(args):
    model = _model(args)
    ode = generators.derive_ode(model)
    rho0 = _initial(args)
    period = generators.characteristic_period(ode)
    t_max = args.t_max if args.t_max is not None else 3 * math.pi
    if args.dt is None:
        args.dt = min(t_max / 1000.0, period / 1000.0) if np.isfinite(period) else t_max / 1000.0
    args.t_max = t_max
    grid = _grid(args)
    init = generators.initial_derivatives(model, rho0, ode.order)
    sol = generators.integrate_ode(ode, init, grid)
    exact = model.matrix(grid) @ rho0.r
    ode_vals = sol.values[:, 1:]
    resid = np.max(np.abs(ode_vals - exact[:, 1:]), axis=1)
    rows = np.column_stack([grid, ode_vals, exact[:, 1:], resid])
    pairs = _ode_report(model, ode) + [("max_residual", float(resid.max()))]
    header = ["t", "x_ode", "y_ode", "z_ode", "x_map", "y_map", "z_map", "residual"]
    return _csv(header, rows), _report(pairs)


def cmd_singularities(args):
    model = _model(args)
    t_max = args.t_max if args.t_max is not None else 2 * math.pi
    roots = generators.find_singularities(model, t_max, step=args.dt)
    return _csv(["t"], [[r] for r in roots]), _report([("model", model.name), ("count", len(roots))])


def cmd_measure(args):
    model = _model(args)
    n_points = args.n_points or nonmarkov.DEFAULT_PAIRS
    if args.periodic:
        result = nonmarkov.measure_rate_periodic(model, n_points)
    elif args.rational_tol is not None:
        result = nonmarkov.measure_rate_rationalized(model, args.rational_tol, n_points)
    elif args.epsilon is not None:
        t_max = args.t_max if args.t_max is not None else 100.0
        result = nonmarkov.measure_rate_tolerance(model, args.epsilon, t_max, n_points,
                                                  occurrence=args.occurrence or 1)
    else:
        raise UsageError("measure needs --epsilon, --periodic or --rational-tol")
    info = result.as_dict()
    pairs = [("model", model.name)]
    pairs += [(k, v if v is not None else "none") for k, v in info.items()]
    if isinstance(model, CentralSpin) and args.epsilon is not None:
        pairs.append(("note", f"central spin tolerance run uses N={model.N}"))
    text = None
    if args.trace:
        grid = np.linspace(0.0, result.tau, 1001)
        text = _csv(["t", "norm"], np.column_stack([grid, nonmarkov.map_l1_distance(model, grid)]))
    return text, _report(pairs)


def cmd_mutual_info(args):
    params = dict(args.params)
    N = int(params.pop("N", 1))
    A = eval_number(params.pop("A", "0.5"))
    if params:
        raise UsageError(f"unknown mutual-info parameters: {sorted(params)}")
    rho0 = density_from_bloch(_initial(args).r)
    grid = _grid(args, default_t_max=2 * math.pi * math.sqrt(N))
    rows = [(t, nonmarkov.mutual_information(N, A, rho0, t, oracle=bool(args.oracle)).value)
            for t in grid]
    return _csv(["t", "I"], rows), None


def cmd_tomography(args):
    if args.inputs:
        bundle = tomography.TrajectoryBundle.from_csv(args.inputs)
    else:
        bundle = tomography.TrajectoryBundle.from_model(_model(args), _grid(args))
    cond_limit = args.cond_limit if args.cond_limit is not None else tomography.COND_LIMIT
    method = args.method or "central"
    rows, flagged = [], 0
    times = bundle.times if method == "central" else bundle.times[:-1]
    for t in times:
        cond = tomography.condition_number(bundle, t)
        try:
            est = tomography.estimate_generator(bundle, t, method=method, cond_limit=cond_limit)
        except IllConditionedError:
            flagged += 1
            rows.append([t] + [math.nan] * 7 + [cond, 1])
            continue
        rates = [r for r, _ in tomography.canonical_rates(est)]
        rows.append([t, *rates, *est.h, est.residual, cond, 0])
    header = ["t", "rate_x", "rate_y", "rate_z", "h_x", "h_y", "h_z", "residual",
              "condition", "ill_conditioned"]
    return _csv(header, rows), _report([("points", len(rows)), ("ill_conditioned", flagged)])


COMMANDS = {
    "simulate": cmd_simulate,
    "derive": cmd_derive,
    "integrate": cmd_integrate,
    "singularities": cmd_singularities,
    "measure": cmd_measure,
    "mutual-info": cmd_mutual_info,
    "tomography": cmd_tomography,
    "models": cmd_models,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="singularqme", description="Higher-order master equations for singular qubit dynamics.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--model")
        p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--t-max", dest="t_max")
        p.add_argument("--dt")
        p.add_argument("--initial", metavar="X,Y,Z")
        p.add_argument("--out")
        p.add_argument("--config")
        if name == "measure":
            p.add_argument("--epsilon")
            p.add_argument("--periodic", action="store_true", default=None)
            p.add_argument("--rational-tol", dest="rational_tol")
            p.add_argument("--n-points", dest="n_points")
            p.add_argument("--occurrence")
            p.add_argument("--trace", action="store_true", default=None,
                           help="emit the t,norm distance trace as CSV")
        if name == "mutual-info":
            p.add_argument("--oracle", action="store_true", default=None)
        if name == "tomography":
            p.add_argument("--inputs", nargs=4, metavar="CSV")
            p.add_argument("--cond-limit", dest="cond_limit")
            p.add_argument("--method", choices=("central", "forward"))
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        for key in SETTINGS:
            if not hasattr(args, key):
                setattr(args, key, None)
        args = _merge_config(args)
        text, report = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except (NotFoundError, NumericalFailureError, ResourceError, IllConditionedError) as exc:
        print(f"error: {exc}", file=stderr)
        if isinstance(exc, NotFoundError) and exc.min_value is not None:
            print(f"min_value = {_fmt(exc.min_value)}", file=stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, UnsupportedError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE

    if text is not None and args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        if report:
            stdout.write(report)
    elif text is not None:
        stdout.write(text)
        if report:
            stderr.write(report)
    elif report:
        stdout.write(report)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
