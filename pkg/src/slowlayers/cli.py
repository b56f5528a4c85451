"""Command line entry point: ``slowlayers <subcommand>``.

Exit codes: 0 success, 2 validation failure, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import harness
from .errors import NumericalError, ValidationError
from .grid import Grid
from .layers import StepFunction, build_stationary_periodic, build_stationary_subcritical, equidistant_zeros
from .potential import PotentialParams, Regime, constants
from .profiles import dump_profile_csv, period, periodic_profile, solve_amplitude_for_period, standing_wave
from .solver import SolverConfig, rhs

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _add_params(sp, eps_default=None):
    sp.add_argument("--p", type=float, required=eps_default is not None)
    sp.add_argument("--n", type=float, required=eps_default is not None)
    sp.add_argument("--eps", type=float, default=eps_default)


def _params(args) -> PotentialParams:
    return PotentialParams(args.p, args.n, args.eps)


def cmd_constants(args) -> dict:
    c = constants(_params(args))
    ks = list(c.k_seq())[: args.terms]
    return {
        "c_p": c.c_p,
        "lambda_p": c.lambda_p,
        "C_p": c.C_p,
        "alpha": c.alpha,
        "k": ks,
        "gamma": "unbounded" if c.gamma_np == float("inf") else c.gamma_np,
    }


def cmd_profile(args) -> dict:
    params = _params(args)
    if args.kind == "standing":
        prof = standing_wave(params)
        half = args.half_width * params.eps
        xs = np.linspace(-half, half, args.points)
        meta = {"kind": prof.kind, "support_radius": prof.support_radius}
    else:
        if args.sbar is None and args.period is None:
            raise ValidationError("periodic profile needs --sbar or --period")
        sbar = args.sbar if args.sbar is not None else solve_amplitude_for_period(params, args.period)
        prof = periodic_profile(params, sbar)
        xs = np.linspace(0.0, prof.fundamental_period, args.points)
        meta = {"kind": "periodic", "sbar": sbar, "period": period(params, sbar)}
    if args.out:
        dump_profile_csv(prof, xs, args.out)
    else:
        sys.stdout.write("x,u\n" + "".join(f"{x!r},{u!r}\n" for x, u in zip(xs, prof(xs))))
    return meta


def cmd_stationary(args) -> dict:
    params = _params(args)
    a, b = args.domain
    grid = Grid.resolving(a, b, params.eps, args.cells_per_eps)
    if params.regime is Regime.SUBCRITICAL:
        v = StepFunction(a, b, args.jumps or tuple(equidistant_zeros(args.N, a, b)), args.first_sign)
        u = build_stationary_subcritical(v, params, grid, polish=not args.no_polish)
    else:
        u = build_stationary_periodic(args.N, params, (a, b), grid, args.first_sign)
    res = float(np.max(np.abs(rhs(u.u, grid, params, SolverConfig()))))
    if args.out:
        u.to_csv(args.out)
    return {"regime": params.regime.value, "nodes": grid.m, "h": grid.h, "residual_sup": res}


def _run_overrides(args) -> dict:
    keys = ("p", "n", "eps", "t_end", "output_dir", "scheme", "dt_max", "stop")
    return {k: getattr(args, k, None) for k in keys}


def cmd_simulate(args) -> dict:
    if args.config:
        cfg = harness.load_run_config(args.config, _run_overrides(args))
    elif args.scenario:
        cfg = harness.apply_overrides(harness.get_scenario(args.scenario).config, _run_overrides(args))
    else:
        raise ValidationError("simulate needs --config or --scenario")
    if args.keep_fields:
        cfg = cfg.replace(keep_fields=True)
    return harness.run_scenario(cfg).summary()


def cmd_sweep(args) -> dict:
    sw = harness.load_sweep_config(args.config, {"workers": args.workers, "output_dir": args.output_dir})
    return harness.run_sweep(sw).to_dict()


def cmd_reproduce(args) -> dict:
    if args.list:
        return {k: {"description": s.description, "reference_t": s.reference_t, "long": s.long}
                for k, s in harness.SCENARIOS.items()}
    if not args.scenario:
        raise ValidationError("reproduce needs a scenario name (or --list)")
    res, verdict = harness.reproduce(args.scenario, allow_long=args.allow_long, output_dir=args.output_dir)
    return {**verdict, "summary": res.summary()}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slowlayers", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("constants", help="print c_p, lambda_p, C_p, alpha, k_m and gamma")
    _add_params(sp, eps_default=1.0)
    sp.add_argument("--terms", type=int, default=8)
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("profile", help="emit a standing-wave or periodic profile as CSV")
    _add_params(sp, eps_default=0.1)
    sp.add_argument("--kind", choices=("standing", "periodic"), default="standing")
    sp.add_argument("--sbar", type=float)
    sp.add_argument("--period", type=float)
    sp.add_argument("--half-width", type=float, default=10.0, help="in units of eps")
    sp.add_argument("--points", type=int, default=401)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("stationary", help="build a steady state and report its discrete residual")
    _add_params(sp, eps_default=0.1)
    sp.add_argument("--domain", type=_floats, default=(-1.0, 1.0))
    sp.add_argument("--N", type=int, default=2)
    sp.add_argument("--jumps", type=_floats)
    sp.add_argument("--first-sign", type=int, default=-1)
    sp.add_argument("--cells-per-eps", type=int, default=8)
    sp.add_argument("--no-polish", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_stationary)

    sp = sub.add_parser("simulate", help="single run from a YAML config or a registered scenario")
    sp.add_argument("--config")
    sp.add_argument("--scenario")
    _add_params(sp)
    sp.add_argument("--t-end", dest="t_end", type=float)
    sp.add_argument("--stop", choices=harness.STOPS)
    sp.add_argument("--scheme", choices=("explicit", "semi-implicit-lagged", "linearly-implicit"))
    sp.add_argument("--dt-max", dest="dt_max", type=float)
    sp.add_argument("--keep-fields", action="store_true")
    sp.add_argument("--out", dest="output_dir")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="run a sweep config along eps, p or n")
    sp.add_argument("config")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--out", dest="output_dir")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("reproduce", help="run a registered scenario and compare with its reference time")
    sp.add_argument("scenario", nargs="?")
    sp.add_argument("--list", action="store_true")
    sp.add_argument("--allow-long", action="store_true")
    sp.add_argument("--out", dest="output_dir")
    sp.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        out = args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if out is not None:
        stream = sys.stderr if args.command == "profile" and not getattr(args, "out", None) else sys.stdout
        print(json.dumps(out, indent=2, default=float), file=stream)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
