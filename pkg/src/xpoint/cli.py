"""Command-line front end: ``xpoint <command> [flags]``.

Exit codes: 0 success, 1 verification failure, 2 invalid parameters.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import closedform as cf
from . import integrate as ig
from . import model
from . import verify
from .errors import (DegenerateOrbit, DomainError, NoBlowup, PoleError, UnsupportedParameters)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_PARAMS = 2

PHYSICAL_KEYS = ("alpha1_0", "alpha2_0", "beta1_0", "beta2_0", "b_0")


class ParameterError(Exception):
    pass


# ---------------------------------------------------------------- output

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_table(columns, rows, fmt, out):
    """rows: list of sequences aligned with ``columns``."""
    if fmt == "json":
        payload = {col: [_jsonable(r[i]) for r in rows] for i, col in enumerate(columns)}
        text = json.dumps(payload, indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        text = buf.getvalue()
    _emit(text, out)


def write_record(record, fmt, out):
    if fmt == "json":
        text = json.dumps({k: _jsonable(v) for k, v in record.items()}, indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in record.items():
            w.writerow([k, _fmt(v) if not isinstance(v, list) else " ".join(_fmt(x) for x in v)])
        text = buf.getvalue()
    _emit(text, out)


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------- config

def read_config(path):
    """Flat key=value file; '#' starts a comment; keys use '-' or '_'."""
    cfg = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            cfg[key.replace("-", "_")] = value
    return cfg


def _merge_config(args, parser):
    if not getattr(args, "config", None):
        return args
    cfg = read_config(args.config)
    for key, raw in cfg.items():
        if not hasattr(args, key):
            raise ParameterError(f"unknown config key {key!r}")
        if getattr(args, key) is None:
            action = next((a for a in parser._actions if a.dest == key), None)
            conv = action.type if action is not None and action.type else str
            setattr(args, key, conv(raw))
    return args


# ---------------------------------------------------------------- inputs

def _gamma_spec(args):
    if args.gamma:
        return model.VorticitySpec.constant(args.gamma)
    return model.VorticitySpec.zero()


def init_from_args(args):
    """Physical initial data from flags, in order of precedence:
    explicit coefficients, (q0, qdot0) at given c, canonical data at eps/mu/nu."""
    d_i = 1.0 if args.d_i is None else args.d_i
    d_e = 0.0 if args.d_e is None else args.d_e
    spec = _gamma_spec(args)
    if not d_i > 0:
        raise ParameterError("d_i must be positive")
    if d_e < 0:
        raise ParameterError("d_e must be non-negative")
    if any(getattr(args, k) is not None for k in ("alpha2_0", "beta2_0", "b_0")):
        vals = [getattr(args, k) or 0.0 for k in PHYSICAL_KEYS]
        return model.InitialData(*vals, d_i=d_i, d_e=d_e, gamma_spec=spec)
    if args.c is None:
        raise ParameterError("give either --b-0/--alpha2-0/--beta2-0 coefficients or --c with "
                             "--q0/--qdot0 or --epsilon/--mu/--nu")
    c = args.c
    if not c > 0:
        raise ParameterError(f"c = {c!r} <= 0 is not supported")
    if args.q0 is not None or args.qdot0 is not None:
        q0, qdot0 = args.q0 or 0.0, args.qdot0 or 0.0
    else:
        q0, qdot0 = model.canonical_qp(c, epsilon_from_args(args), args.branch != "unbounded")
    free = {}
    if args.alpha1_0 is not None:
        free["alpha1_0"] = args.alpha1_0
    if args.beta1_0 is not None:
        free["beta1_0"] = args.beta1_0
    return model.initial_data_for(c, q0, qdot0, d_i, d_e, gamma_spec=spec, **free)


def epsilon_from_args(args):
    if args.epsilon is not None:
        return args.epsilon
    if args.mu is not None:
        return math.sin(args.mu) ** 2
    if args.nu is not None:
        if args.region == "A":
            return math.cosh(args.nu) ** 2
        return -math.sinh(args.nu) ** 2
    raise ParameterError("need one of --epsilon, --mu, --nu")


def classify_report(init):
    p = model.classify(init)
    rec = {
        "c": p.c,
        "epsilon": p.epsilon,
        "energy_E": p.energy_E,
        "c0": p.c0.real if p.c0_is_real else None,
        "c0_imag": None if p.c0_is_real else p.c0.imag,
        "q0": p.q0,
        "qdot0": p.qdot0,
        "regime": p.regime.value,
        "angle": p.angle,
        "phi_A": p.phi_A,
        "turning_points": model.turning_points(p.c, p.epsilon),
        "period": None,
        "t_blowup": None,
    }
    try:
        placed = cf.place_orbit(p)
        rec["period"] = placed.period
        rec["t_blowup"] = placed.t_blowup
    except (UnsupportedParameters, DegenerateOrbit) as exc:
        _warn(str(exc))
    return rec


# ---------------------------------------------------------------- commands

def cmd_classify(args):
    write_record(classify_report(init_from_args(args)), args.format, args.out)
    return EXIT_OK


def _time_grid(args, t_limit=None):
    t_max = 5.0 if args.t_max is None else args.t_max
    n = 101 if args.samples is None else args.samples
    if n < 2 or not t_max > 0:
        raise ParameterError("need --samples >= 2 and --t-max > 0")
    if t_limit is not None and t_max >= t_limit:
        clipped = 0.99 * t_limit
        _warn(f"t_max={t_max} reaches the singularity T_inf={t_limit:.17g}; clipped to {clipped:.17g}")
        t_max = clipped
    return np.linspace(0.0, t_max, n)


def cmd_trajectory(args):
    init = init_from_args(args)
    mode = args.mode
    if args.reconstruct and init.d_e != 0.0:
        raise ParameterError("perturbation corrections out of scope: --reconstruct needs d_e = 0")
    placed = None
    if mode in ("exact", "both"):
        placed = cf.exact_orbit(init)
    t_limit = placed.t_blowup if placed is not None else None
    ts = _time_grid(args, t_limit)
    cols = ["t"]
    data = []
    if placed is not None:
        q = np.asarray(placed.q(ts))
        qd = np.asarray(placed.qdot(ts))
        # the t = 0 row is the initial data itself
        q[0], qd[0] = init.scale * init.b_0, init.scale * init.bdot_0
        cols += ["q", "qdot"]
        data += [q, qd]
        if args.reconstruct:
            ab = cf.reconstruct_alpha_beta(init, placed, ts)
            cols += ["alpha1", "alpha2", "beta1", "beta2"]
            data += [np.asarray(v) for v in ab]
    if mode in ("numeric", "both"):
        cfg = ig.IntegratorConfig(rel_tol=args.rel_tol, abs_tol=args.rel_tol * 1e-2, max_time=ts[-1])
        traj = ig.integrate_full(init, cfg)
        if traj.terminal is not ig.Terminal.REACHED_MAX_TIME:
            _warn(f"oracle stopped at t={traj.t_end:.17g} ({traj.terminal.value})")
            keep = ts <= traj.t_end
            ts = ts[keep]
            data = [d[keep] for d in data]
        y = traj(ts)
        qn = init.scale * y[:, 4]
        qdn = init.scale * -4.0 * (y[:, 0] * y[:, 3] + y[:, 1] * y[:, 2])
        if mode == "numeric":
            cols += ["q", "qdot"]
            data += [qn, qdn]
            if args.reconstruct:
                cols += ["alpha1", "alpha2", "beta1", "beta2"]
                data += [y[:, i] for i in range(4)]
        else:
            cols += ["q_numeric", "qdot_numeric", "abs_dq", "abs_dqdot"]
            data += [qn, qdn, np.abs(data[0] - qn), np.abs(data[1] - qdn)]
    rows = [[float(ts[i])] + [float(d[i]) for d in data] for i in range(len(ts))]
    write_table(cols, rows, args.format, args.out)
    return EXIT_OK


def _reach_time(orbit, x, t_cap):
    """First t in [0, t_cap] with |q| = x along an outward-moving singular orbit."""
    f = lambda t: abs(orbit.q(t))
    if f(t_cap) <= x:
        return t_cap
    lo, hi = 0.0, t_cap
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < x:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return lo


def portrait_rows(c, eps_list, n):
    rows = []
    qmax = 3.0 * math.sqrt(c)
    for eps in eps_list:
        curves = []
        if eps > 1.0:
            for s in (1, -1):
                orb = cf.solve_A(c, math.acosh(math.sqrt(eps)), s)
                t_end = _reach_time(orb, qmax, 0.95 * orb.t_blowup)
                curves.append((f"A{'+' if s > 0 else '-'}", orb, np.linspace(-t_end, t_end, n)))
        elif eps == 1.0:
            r = math.sqrt(c)
            t_end = math.atanh(1.0 - 1e-6) / r
            for s in (1, -1):
                orb = cf.solve_separatrix(c, s)
                curves.append((f"separatrix{'+' if s > 0 else '-'}", orb, np.linspace(-t_end, t_end, n)))
        elif eps >= 0.0:
            mu = math.asin(math.sqrt(eps))
            if eps == 0.0:
                rows.append([eps, "B_bounded", 0.0, 0.0])
            else:
                orb = cf.solve_B_bounded(c, mu)
                curves.append(("B_bounded", orb, np.linspace(0.0, orb.period, n)))
            for s in (1, -1):
                orb = cf.solve_B_unbounded(c, mu, s) if eps > 0 else _outer_zero_energy(c, s)
                t_end = _reach_time(orb, qmax, 0.95 * orb.t_blowup)
                curves.append((f"B_unbounded{'+' if s > 0 else '-'}", orb, np.linspace(-t_end, t_end, n)))
        elif eps < 0.0:
            for s in (1, -1):
                orb = cf.solve_C(c, math.asinh(math.sqrt(-eps)), s)
                t_end = _reach_time(orb, qmax, 0.95 * orb.t_blowup)
                curves.append((f"C{'+' if s > 0 else '-'}", orb, np.linspace(-t_end, t_end, n)))
        else:
            _warn(f"skipping eps={eps!r}")
            continue
        for name, orb, ts in curves:
            for q, p in zip(np.atleast_1d(orb.q(ts)), np.atleast_1d(orb.qdot(ts))):
                rows.append([eps, name, float(q), float(p)])
        if eps == 1.0:
            rows.append([eps, "saddle", -math.sqrt(c), 0.0])
            rows.append([eps, "saddle", math.sqrt(c), 0.0])
    return rows


def _outer_zero_energy(c, sign):
    # eps = 0 outer branch: the mu -> 0 limit of the unbounded B orbit
    s = math.sqrt(2.0 * c)
    return cf.UnboundedBOrbit(model.RegimeLabel.B_UNBOUNDED, c, 0.0, 0j, s + 0j, s,
                              t_blowup=cf.blowup_time(model.RegimeLabel.B_UNBOUNDED, c, 0.0),
                              sign=sign)


def _parse_eps_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ParameterError(f"bad epsilon list {text!r}") from exc


def cmd_portrait(args):
    c = 0.5 if args.c is None else args.c
    if not c > 0:
        raise ParameterError("portrait needs c > 0")
    eps_list = _parse_eps_list(args.eps_list) if args.eps_list else [-0.5, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5]
    n = 200 if args.samples is None else args.samples
    rows = portrait_rows(c, eps_list, n)
    write_table(["epsilon", "branch", "q", "p"], rows, args.format, args.out)
    return EXIT_OK


def default_eps_grid():
    grid = np.linspace(-2.0, 2.0, 61)
    return [float(e) for e in grid if abs(e - 1.0) > 1e-10]


def periods_table(c, eps_list):
    """Rows (eps, T, T_inf); T only on [0, 1), T_inf everywhere except eps = 1."""
    rows = []
    for eps in eps_list:
        period = cf.period_jacobi(c, math.asin(math.sqrt(eps))) if 0.0 <= eps < 1.0 else None
        try:
            t_inf = cf.blowup_time_eps(c, eps)
        except NoBlowup:
            t_inf = None
        rows.append([eps, period, t_inf])
    return rows


def _parse_grid(text):
    if ":" in text:
        a, b, n = text.split(":")
        return [float(e) for e in np.linspace(float(a), float(b), int(n)) if abs(float(e) - 1.0) > 1e-10]
    return _parse_eps_list(text)


def cmd_periods(args):
    c = 0.5 if args.c is None else args.c
    if not c > 0:
        raise ParameterError("periods needs c > 0")
    grid = _parse_grid(args.eps_grid) if args.eps_grid else default_eps_grid()
    if any(e == 1.0 for e in grid):
        raise ParameterError("the epsilon grid must avoid eps = 1 (separatrix)")
    write_table(["epsilon", "T", "T_inf"], periods_table(c, grid), args.format, args.out)
    return EXIT_OK


def cmd_verify(args):
    names = None
    if args.checks is not None:
        names = [n.strip() for n in args.checks.split(",") if n.strip()]
    try:
        summary = verify.run_checks(names, flipped_c0=args.inject_c0_sign_error)
    except KeyError as exc:
        raise ParameterError(str(exc)) from exc
    _emit(json.dumps(summary, indent=1) + "\n", args.out)
    return EXIT_OK if summary["all_pass"] else EXIT_VERIFY


def state_at(init, t):
    """Coefficient state at time t: exact when d_e = 0, oracle otherwise."""
    if init.d_e == 0.0:
        placed = cf.exact_orbit(init)
        if placed.t_blowup is not None and t >= placed.t_blowup:
            raise ParameterError(f"t={t} is at or past the singularity T_inf={placed.t_blowup:.17g}")
        if t == 0.0:
            return init.state()
        a1, a2, b1, b2 = cf.reconstruct_alpha_beta(init, placed, t)
        return model.CoefficientState(t, a1, a2, b1, b2, placed.q(t) / init.d_i)
    if t == 0.0:
        return init.state()
    traj = ig.integrate_full(init, ig.IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, max_time=t))
    if traj.terminal is not ig.Terminal.REACHED_MAX_TIME:
        raise ParameterError(f"t={t} is at or past the singularity (oracle stopped at {traj.t_end:.17g})")
    return model.CoefficientState.from_array(t, traj(t)[0])


def cmd_fields(args):
    init = init_from_args(args)
    t = 0.0 if args.t is None else args.t
    n = 21 if args.grid is None else args.grid
    if n < 2:
        raise ParameterError("--grid must be >= 2")
    state = state_at(init, t)
    xs = np.linspace(-1.0, 1.0, n)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    fields = model.field_snapshot(state, init.gamma_spec.gamma_at(t), X, Y)
    rows = [[float(x), float(y)] + [float(f.flat[i]) for f in fields]
            for i, (x, y) in enumerate(zip(X.flat, Y.flat))]
    write_table(["x", "y", "phi", "psi", "V_z", "B_z"], rows, args.format, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_common(p, physical=True):
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--c", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--samples", type=int)
    if physical:
        p.add_argument("--region", choices=("A", "C"), help="region for --nu (default C)")
        p.add_argument("--branch", choices=("bounded", "unbounded"), help="B branch (default bounded)")
        p.add_argument("--q0", type=float)
        p.add_argument("--qdot0", type=float)
        p.add_argument("--d-i", type=float)
        p.add_argument("--d-e", type=float)
        for key in PHYSICAL_KEYS:
            p.add_argument("--" + key.replace("_", "-"), type=float, dest=key)
        p.add_argument("--gamma", type=float, help="constant vorticity coefficient")


def build_parser():
    parser = argparse.ArgumentParser(prog="xpoint", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="regime, energy and times for initial data")
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("trajectory", help="sampled q(t) (and alpha/beta) series")
    _add_common(p)
    p.add_argument("--mode", choices=("exact", "numeric", "both"), default="exact")
    p.add_argument("--reconstruct", action="store_true", help="add alpha/beta columns (d_e = 0)")
    p.add_argument("--rel-tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("portrait", help="phase-space curves (q, p) per energy")
    _add_common(p, physical=False)
    p.add_argument("--eps-list", help="comma-separated energies")
    p.set_defaults(func=cmd_portrait)

    p = sub.add_parser("periods", help="period and blow-up time against epsilon")
    _add_common(p, physical=False)
    p.add_argument("--eps-grid", help="comma list or start:stop:count")
    p.set_defaults(func=cmd_periods)

    p = sub.add_parser("verify", help="run the cross-check battery")
    p.add_argument("--checks", help=f"comma list from: {', '.join(verify.CHECKS)}")
    p.add_argument("--inject-c0-sign-error", action="store_true",
                   help="debug: use c0^2 = (q0^2 - c)^2 + qdot0^2 in the initial-condition check")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fields", help="phi, psi, V_z, B_z on an n x n grid over [-1, 1]^2")
    _add_common(p)
    p.add_argument("--t", type=float)
    p.add_argument("--grid", type=int)
    p.set_defaults(func=cmd_fields)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        sub_parser = parser._subparsers._group_actions[0].choices[args.command]
        args = _merge_config(args, sub_parser)
        if hasattr(args, "format") and args.format is None:
            args.format = "csv"
        return args.func(args)
    except (ParameterError, DomainError, UnsupportedParameters, DegenerateOrbit, PoleError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS


if __name__ == "__main__":
    sys.exit(main())
