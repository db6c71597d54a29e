"""Command-line front end.

Subcommands
-----------
gtau         composed g(tau) of the two interacting V systems
gzero-scan   zero-delay g(0) against the strong Rabi frequency
coupling     dipole-dipole coupling constant against scaled distance kr
rates        switching rates, durations and steady probabilities
oracle       master-equation g(tau) for two_level | atom_pair | v_pair
simulate     semi-Markov trajectories or photon streams + empirical g
fit          least-squares fit driven by a key = value config file
reproduce    canonical parameter presets (fig2a fig2b fig3 fig4 fig5)

All curve output is CSV (comma separator, LF, 15 significant digits) with
``# key = value`` metadata lines carrying the full parameter record, so
identical inputs produce byte-identical files.  Exit codes: 0 success,
1 numerical failure (diagnostic on stderr), 2 usage error.

Units: the strong-transition Einstein coefficient A3 = 1 sets the scale;
rates are in units of A3, times in 1/A3.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .blinking import VPairParams, g0_two_vsystems, g_two_vsystems, vpair_rates
from .curves import CorrelationCurve, write_table
from .fitting import FitProblem, fit as run_fit
from .lindblad import build_atom_pair, build_two_level, build_v_pair, correlation_numeric
from .markov import build_generator, steady_probabilities, three_period_occupancy
from .optics import (
    DipoleCoupling,
    TwoLevelParams,
    dipole_coupling,
    g1_correlation,
    g2_zero,
)
from .stochastic import (
    coincidence_g,
    empirical_occupancy,
    photon_stream_two_level,
    save_stream,
    save_trajectory,
    simulate_period_ensemble,
)

# below kr = 0.01 the 1/(kr)^3 near-zone term makes |Im C| > ~1e5 A and the
# two-level pair description is meaningless
KR_MIN = 0.01

PAPER_RE_C3 = (0.2, -0.1, 0.1, -0.09)
FIG5_OMEGA3 = (0.3, 0.5, 1.0, 2.0, 5.0)


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline="\n"), True


def _emit_table(args, columns, metadata):
    fh, close = _open_out(args.out)
    try:
        write_table(fh, columns, metadata)
    finally:
        if close:
            fh.close()


def _emit_text(args, text):
    fh, close = _open_out(args.out)
    try:
        fh.write(text)
    finally:
        if close:
            fh.close()


def _tau_grid(args):
    if args.points < 2:
        raise ValueError("need at least 2 grid points")
    if args.grid == "log":
        if args.tau_min <= 0:
            raise ValueError("log grid needs tau-min > 0")
        return np.geomspace(args.tau_min, args.tau_max, args.points)
    return np.linspace(args.tau_min, args.tau_max, args.points)


def _add_grid_args(p, tau_min=1e-2, tau_max=1e4, points=400, grid="log"):
    p.add_argument("--tau-min", type=float, default=tau_min)
    p.add_argument("--tau-max", type=float, default=tau_max)
    p.add_argument("--points", type=int, default=points)
    p.add_argument("--grid", choices=("linear", "log"), default=grid)


def _add_coupling_args(p):
    p.add_argument("--re-c3", type=float, default=None,
                   help="real part of the dipole coupling (units A3)")
    p.add_argument("--im-c3", type=float, default=None,
                   help="imaginary part (default 0 when --re-c3 is given)")
    p.add_argument("--kr", type=float, default=None,
                   help="scaled distance 2 pi r / lambda (alternative to --re-c3)")
    p.add_argument("--theta", type=float, default=None,
                   help="dipole angle in radians (default pi/2 with --kr)")


def _resolve_coupling(parser, args) -> complex:
    direct = args.re_c3 is not None or args.im_c3 is not None
    geometric = args.kr is not None or args.theta is not None
    if direct and geometric:
        parser.error("give either --re-c3/--im-c3 or --kr/--theta, not both")
    if geometric:
        if args.kr is None:
            parser.error("--theta needs --kr")
        if args.kr < KR_MIN:
            parser.error(f"kr = {args.kr:g} is below the near-zone cutoff "
                         f"{KR_MIN:g}; the coupling formula is not meaningful there")
        theta = math.pi / 2 if args.theta is None else args.theta
        return dipole_coupling(args.kr, theta).C
    if direct:
        return complex(args.re_c3 or 0.0, args.im_c3 or 0.0)
    parser.error("a coupling is required: --re-c3 [--im-c3] or --kr [--theta]")


def _out_arg(p):
    p.add_argument("--out", default="-", help="output path (default: stdout)")


# ---------------------------------------------------------------------------
# subcommands

def cmd_gtau(parser, args):
    c3 = _resolve_coupling(parser, args)
    params = VPairParams(omega2=args.omega2, omega3=args.omega3, c3=c3)
    taus = _tau_grid(args)
    g = g_two_vsystems(params, taus, sine_term=args.sine_term)
    meta = {"model": "two_vsystems", "a3": 1.0, "omega2": args.omega2,
            "omega3": args.omega3, "re_c3": c3.real, "im_c3": c3.imag,
            "g2_order": "first", "sine_term": args.sine_term}
    _emit_table(args, {"tau": taus, "g": g}, meta)
    return 0


def cmd_gzero_scan(parser, args):
    omegas = np.geomspace(args.omega3_min, args.omega3_max, args.points)
    columns = {"omega3": omegas}
    for rc in args.re_c3:
        vals = [g0_two_vsystems(
            VPairParams(omega2=0.0, omega3=w, c3=complex(rc, args.im_c3)),
            order=args.order) for w in omegas]
        columns[f"g0[re_c3={rc:g}]"] = np.array(vals)
    meta = {"model": "g0_two_vsystems", "order": args.order, "a3": 1.0,
            "im_c3": args.im_c3,
            "re_c3_list": " ".join(f"{v:g}" for v in args.re_c3)}
    _emit_table(args, columns, meta)
    return 0


def cmd_coupling(parser, args):
    if args.kr is not None:
        if args.kr < KR_MIN:
            parser.error(f"kr = {args.kr:g} is below the near-zone cutoff {KR_MIN:g}")
        krs = np.array([args.kr])
    else:
        if args.kr_min < KR_MIN:
            parser.error(f"kr-min must be >= {KR_MIN:g}")
        krs = np.geomspace(args.kr_min, args.kr_max, args.points)
    cs = [dipole_coupling(kr, args.theta, args.a).C for kr in krs]
    meta = {"model": "dipole_coupling", "theta": args.theta, "A": args.a}
    _emit_table(args, {"kr": krs,
                       "r_over_lambda": krs / (2 * math.pi),
                       "re_c": np.array([c.real for c in cs]),
                       "im_c": np.array([c.imag for c in cs])}, meta)
    return 0


def cmd_rates(parser, args):
    c3 = _resolve_coupling(parser, args)
    params = VPairParams(omega2=args.omega2, omega3=args.omega3, c3=c3)
    rates, durations = vpair_rates(params)
    P = steady_probabilities(build_generator(rates)).P
    p = rates.p
    lines = [f"omega2 = {args.omega2:.15g}", f"omega3 = {args.omega3:.15g}",
             f"re_c3 = {c3.real:.15g}", f"im_c3 = {c3.imag:.15g}"]
    for (i, j) in ((0, 1), (1, 0), (1, 2), (2, 1)):
        lines.append(f"p{i}{j} = {p[i, j]:.15g}")
    for i, T in enumerate(durations):
        lines.append(f"T{i} = {T:.15g}")
    for i, Pi in enumerate(P):
        lines.append(f"P{i} = {Pi:.15g}")
    _emit_text(args, "\n".join(lines) + "\n")
    return 0


def cmd_oracle(parser, args):
    taus = _tau_grid(args)
    if args.model == "two_level":
        model = build_two_level(args.a, args.omega)
    elif args.model == "atom_pair":
        c = _resolve_coupling(parser, args)
        model = build_atom_pair(args.a, args.omega, c)
    else:
        c3 = _resolve_coupling(parser, args)
        model = build_v_pair(VPairParams(omega2=args.omega2,
                                         omega3=args.omega3, c3=c3))
    curve = correlation_numeric(model, taus)
    _emit_table(args, {"tau": curve.tau, "g": curve.g},
                {"model": curve.model, **curve.params})
    return 0


def cmd_simulate(parser, args):
    if args.what == "periods":
        c3 = _resolve_coupling(parser, args)
        params = VPairParams(omega2=args.omega2, omega3=args.omega3, c3=c3)
        rates, durations = vpair_rates(params)
        t_max = args.tau_max if args.tau_max else 2.0 * durations.max()
        duration = args.duration if args.duration else \
            10.0 * durations.max() + t_max + durations.max()
        trajectories = simulate_period_ensemble(rates, duration,
                                                args.n_traj, args.seed)
        if args.trajectory_out:
            save_trajectory(trajectories[0], args.trajectory_out)
        taus = np.linspace(t_max / args.points, t_max, args.points)
        est = empirical_occupancy(trajectories, taus, n_states=3)
        closed = three_period_occupancy(rates.p[0, 1], rates.p[1, 0],
                                        rates.p[1, 2], rates.p[2, 1], taus)
        columns = {"tau": taus}
        for a, i in ((0, 1), (1, 2)):
            for b, j in ((0, 1), (1, 2)):
                columns[f"p{i}{j}_hat"] = est.p_hat[:, i, j]
                columns[f"p{i}{j}_err"] = est.std_err[:, i, j]
                columns[f"p{i}{j}"] = closed[:, a, b]
        meta = {"model": "semi_markov", "n_traj": args.n_traj,
                "duration": duration, "seed": args.seed,
                "omega2": args.omega2, "omega3": args.omega3,
                "re_c3": c3.real}
        _emit_table(args, columns, meta)
        return 0

    params = TwoLevelParams(A=args.a, Omega=args.omega)
    stream = photon_stream_two_level(params, args.duration or 1e4, args.seed)
    if args.stream_out:
        save_stream(stream, args.stream_out)
    curve = coincidence_g(stream, args.bin_width, args.max_tau)
    columns = {"tau": curve.tau, "g_hat": curve.g, "err": curve.errors,
               "g1": g1_correlation(params, curve.tau)}
    meta = {"model": "coincidence", "A": args.a, "omega": args.omega,
            "duration": stream.duration, "photons": len(stream),
            "seed": args.seed, "bin_width": args.bin_width}
    _emit_table(args, columns, meta)
    return 0


def _parse_config(path):
    config = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line without '=': {raw.rstrip()}")
            key, _, val = line.partition("=")
            config[key.strip()] = val.strip()
    return config


def cmd_fit(parser, args):
    config = _parse_config(args.config)
    for item in args.set or []:
        if "=" not in item:
            parser.error(f"--set needs key=value, got {item!r}")
        key, _, val = item.partition("=")
        config[key.strip()] = val.strip()
    if args.data:
        config["data"] = args.data

    try:
        data_path = config.pop("data")
        family = config.pop("family")
        free_names = config.pop("free").split()
    except KeyError as missing:
        parser.error(f"config is missing the {missing} entry")
    data = CorrelationCurve.from_csv(data_path)

    free = {}
    for name in free_names:
        try:
            free[name] = (float(config.pop(f"init.{name}")),
                          float(config.pop(f"lo.{name}")),
                          float(config.pop(f"hi.{name}")))
        except KeyError as missing:
            parser.error(f"free parameter {name} is missing {missing}")
    fixed = {}
    for key in list(config):
        if key.startswith("fixed."):
            fixed[key[len("fixed."):]] = float(config.pop(key))
    if "sine_term" in config:
        fixed["sine_term"] = config.pop("sine_term")
    if config:
        parser.error(f"unrecognized config keys: {sorted(config)}")

    result = run_fit(FitProblem(data=data, family=family, free=free,
                                fixed=fixed))
    _emit_text(args, result.report())
    return 0


def cmd_reproduce(parser, args):
    target = args.figure
    if target in ("fig2a", "fig2b"):
        omega3, omega2 = (0.3, 0.005) if target == "fig2a" else (5.0, 0.05)
        params = VPairParams(omega2=omega2, omega3=omega3, c3=-0.09)
        taus = np.geomspace(args.tau_min, args.tau_max, args.points)
        g_model = g_two_vsystems(params, taus)
        g_oracle = correlation_numeric(build_v_pair(params), taus).g
        meta = {"figure": target, "a3": 1.0, "omega3": omega3,
                "omega2": omega2, "re_c3": -0.09, "im_c3": 0.0,
                "sine_term": "corrected"}
        _emit_table(args, {"tau": taus, "g_model": g_model,
                           "g_oracle": g_oracle}, meta)
        return 0

    if target in ("fig3", "fig4"):
        omegas = np.geomspace(args.omega3_min, args.omega3_max, args.points)
        columns = {"omega3": omegas}
        for rc in PAPER_RE_C3:
            if target == "fig3":
                vals = [g0_two_vsystems(VPairParams(omega2=0.0, omega3=w,
                                                    c3=complex(rc, 0.0)),
                                        order=args.order)
                        for w in omegas]
            else:
                vals = [g2_zero(TwoLevelParams(A=1.0, Omega=w),
                                DipoleCoupling.from_constant(complex(rc, 0.0)))
                        for w in omegas]
            columns[f"g0[re_c3={rc:g}]"] = np.array(vals)
        meta = {"figure": target, "a3": 1.0, "order":
                args.order if target == "fig3" else "all",
                "re_c3_list": " ".join(f"{v:g}" for v in PAPER_RE_C3)}
        _emit_table(args, columns, meta)
        return 0

    # fig5: g(tau) for several strong drivings at the fig2a coupling
    taus = np.geomspace(args.tau_min, args.tau_max, args.points)
    columns = {"tau": taus}
    for w3 in FIG5_OMEGA3:
        params = VPairParams(omega2=0.005, omega3=w3, c3=-0.09)
        columns[f"g[omega3={w3:g}]"] = g_two_vsystems(params, taus)
    meta = {"figure": "fig5", "a3": 1.0, "omega2": 0.005, "re_c3": -0.09,
            "omega3_list": " ".join(f"{v:g}" for v in FIG5_OMEGA3),
            "sine_term": "corrected"}
    _emit_table(args, columns, meta)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blinkcorr",
        description="Intensity correlation functions of blinking quantum emitters")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gtau", help="composed g(tau) of the V-system pair")
    p.add_argument("--omega3", type=float, required=True)
    p.add_argument("--omega2", type=float, required=True)
    _add_coupling_args(p)
    _add_grid_args(p)
    p.add_argument("--sine-term", choices=("standard", "corrected"),
                   default="corrected")
    _out_arg(p)
    p.set_defaults(func=cmd_gtau)

    p = sub.add_parser("gzero-scan", help="g(0) against the strong Rabi frequency")
    p.add_argument("--omega3-min", type=float, default=0.1)
    p.add_argument("--omega3-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--re-c3", type=float, nargs="+", default=list(PAPER_RE_C3))
    p.add_argument("--im-c3", type=float, default=0.0)
    p.add_argument("--order", choices=("first", "all"), default="all")
    _out_arg(p)
    p.set_defaults(func=cmd_gzero_scan)

    p = sub.add_parser("coupling", help="dipole coupling constant vs kr")
    p.add_argument("--kr", type=float, default=None, help="single kr value")
    p.add_argument("--kr-min", type=float, default=1.0)
    p.add_argument("--kr-max", type=float, default=100.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--theta", type=float, default=math.pi / 2)
    p.add_argument("--a", type=float, default=1.0)
    _out_arg(p)
    p.set_defaults(func=cmd_coupling)

    p = sub.add_parser("rates", help="switching rates, durations, steady probabilities")
    p.add_argument("--omega3", type=float, required=True)
    p.add_argument("--omega2", type=float, required=True)
    _add_coupling_args(p)
    _out_arg(p)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("oracle", help="master-equation g(tau)")
    p.add_argument("--model", choices=("two_level", "atom_pair", "v_pair"),
                   required=True)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=1.0,
                   help="Rabi frequency (two_level / atom_pair)")
    p.add_argument("--omega3", type=float, default=0.3)
    p.add_argument("--omega2", type=float, default=0.005)
    _add_coupling_args(p)
    _add_grid_args(p, tau_min=1e-2, tau_max=20.0, points=200)
    _out_arg(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("simulate", help="stochastic trajectories / photon streams")
    p.add_argument("what", choices=("periods", "photons"))
    p.add_argument("--omega3", type=float, default=0.3)
    p.add_argument("--omega2", type=float, default=0.005)
    _add_coupling_args(p)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--n-traj", type=int, default=2000)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--tau-max", type=float, default=None)
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--bin-width", type=float, default=0.25)
    p.add_argument("--max-tau", type=float, default=15.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--trajectory-out", default=None)
    p.add_argument("--stream-out", default=None)
    _out_arg(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="least-squares fit from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--data", default=None, help="override the data path")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config entry (repeatable)")
    _out_arg(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("reproduce", help="canonical parameter presets")
    p.add_argument("figure", choices=("fig2a", "fig2b", "fig3", "fig4", "fig5"))
    p.add_argument("--tau-min", type=float, default=1e-2)
    p.add_argument("--tau-max", type=float, default=1e3)
    p.add_argument("--points", type=int, default=160)
    p.add_argument("--omega3-min", type=float, default=0.1)
    p.add_argument("--omega3-max", type=float, default=10.0)
    p.add_argument("--order", choices=("first", "all"), default="all")
    _out_arg(p)
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(parser, args)
    except SystemExit as exc:  # parser.error inside a subcommand
        return exc.code if isinstance(exc.code, int) else 2
    except (ValueError, ZeroDivisionError, ArithmeticError, RuntimeError,
            np.linalg.LinAlgError, OSError) as exc:
        print(f"blinkcorr: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
