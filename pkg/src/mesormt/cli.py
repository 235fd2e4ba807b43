"""Command line interface: ``python -m mesormt <command>`` or ``mesormt <command>``.

Exit codes: 0 on success, 2 for invalid parameters, 3 when a numerical
failure threshold is exceeded.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import contour, cumulants
from .ensembles import ENTRY_LAWS, EnsembleSpec, entry_moment_report
from .harness import (DIAGNOSTIC_CHECKS, ExperimentConfig, NumericalFailure,
                      run_clt, run_diagnostics, run_dbm_sweep,
                      run_transition_sweep)
from .spectral import MesoWindow
from .teststats import BUILTIN_NAMES, builtin
from .variance_kernel import KernelParams, QuadratureError, v_mu

EXIT_OK, EXIT_PARAM, EXIT_NUMERIC = 0, 2, 3


def _global_flags():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=argparse.SUPPRESS,
                   help="JSON experiment config")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                   help="master seed (64-bit unsigned)")
    p.add_argument("--workers", type=int, default=argparse.SUPPRESS,
                   help="worker processes (default: $MESORMT_WORKERS or 1)")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output path")
    return p


def _ensemble_flags(p, sigma=0.0):
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--sigma", type=float, default=sigma)
    p.add_argument("--entry-law", choices=ENTRY_LAWS, default="gaussian")
    p.add_argument("--E", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=None,
                   help="window scale; overrides --alpha")
    p.add_argument("--functions", nargs="+", default=["gauss"],
                   choices=BUILTIN_NAMES)
    p.add_argument("--samples", type=int, default=100)


def _floats(text):
    return [float(v) for v in text.split(",")]


def build_parser():
    glob = _global_flags()
    parser = argparse.ArgumentParser(prog="mesormt", parents=[glob],
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("clt", parents=[glob], help="CLT run for one ensemble")
    _ensemble_flags(p)

    p = sub.add_parser("sweep-sigma", parents=[glob], help="sweep over sigma")
    _ensemble_flags(p)
    p.add_argument("--sigmas", type=_floats, default=None,
                   help="comma-separated sigma values")

    p = sub.add_parser("sweep-dbm", parents=[glob], help="sweep over flow time")
    _ensemble_flags(p, sigma=1.0)
    p.add_argument("--times", type=_floats, default=None,
                   help="comma-separated flow times; 'inf' allowed")
    p.add_argument("--beta", type=int, choices=(1, 2), default=2)

    p = sub.add_parser("variance", parents=[glob], help="evaluate V_mu(f, g)")
    p.add_argument("--f", default="gauss", choices=BUILTIN_NAMES)
    p.add_argument("--g", default=None, choices=BUILTIN_NAMES)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("diagnose", parents=[glob], help="resolvent diagnostics")
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--E", type=float, default=0.0)
    p.add_argument("--Eprime", type=float, default=None)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--k", type=int, default=2, help="power for G^k checks")
    p.add_argument("--checks", default=",".join(DIAGNOSTIC_CHECKS),
                   help="comma-separated subset of " + ",".join(DIAGNOSTIC_CHECKS))

    p = sub.add_parser("verify", parents=[glob], help="identity checks")
    p.add_argument("target", choices=("cumulants", "cauchy"))
    p.add_argument("--resolution", type=int, default=contour.DEFAULT_RESOLUTION)

    p = sub.add_parser("sample-stats", parents=[glob],
                       help="entry moments of the sampler")
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--entry-law", choices=ENTRY_LAWS, default="gaussian")
    p.add_argument("--samples", type=int, default=100)
    return parser


def _config(args, sweep=None):
    seed = getattr(args, "seed", None)
    if hasattr(args, "config"):
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_json(fh.read())
        changes = {}
        if seed is not None:
            changes["seed"] = seed
    else:
        spec = EnsembleSpec(args.N, args.sigma, entry_law=args.entry_law)
        if args.eta is not None:
            window = MesoWindow(args.E, args.N, eta=args.eta)
        else:
            window = MesoWindow(args.E, args.N, alpha=args.alpha)
        cfg = ExperimentConfig(spec, window, args.functions, args.samples,
                               sweep=sweep, seed=seed or 0)
        changes = {}
    if hasattr(args, "out"):
        changes["output_path"] = args.out
    if hasattr(args, "workers"):
        changes["workers"] = args.workers
    if changes:
        d = cfg.to_dict()
        d.update(changes)
        cfg = ExperimentConfig.from_dict(d)
    return cfg


def _print_json(obj):
    print(json.dumps(obj, indent=2))


def _cmd_clt(args):
    cfg = _config(args)
    if cfg.output_path is None:
        cfg.output_path = "clt.csv"
    _print_json(run_clt(cfg).summary())


def _cmd_sweep_sigma(args):
    sweep = {"kind": "sigma", "values": args.sigmas} if args.sigmas else None
    cfg = _config(args, sweep)
    if cfg.sweep is None:
        raise ValueError("sweep-sigma needs --sigmas or a config with a sigma sweep")
    _print_json([r.summary() for r in run_transition_sweep(cfg)])


def _cmd_sweep_dbm(args):
    sweep = ({"kind": "dbm", "values": args.times, "beta": args.beta}
             if args.times else None)
    cfg = _config(args, sweep)
    if cfg.sweep is None:
        raise ValueError("sweep-dbm needs --times or a config with a dbm sweep")
    _print_json([r.summary() for r in run_dbm_sweep(cfg)])


def _cmd_variance(args):
    f = builtin(args.f)
    g = builtin(args.g) if args.g else f
    res = v_mu(f, g, KernelParams(mu=args.mu, quad_tolerance=args.tol))
    _print_json({"value": res.value, "est_error": res.est_error})


def _cmd_diagnose(args):
    if not 0 < args.alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    eta = args.N ** -args.alpha
    Ep = args.E if args.Eprime is None else args.Eprime
    spec = EnsembleSpec(args.N, args.sigma, master_seed=getattr(args, "seed", 0))
    run = run_diagnostics(spec, complex(args.E, eta), complex(Ep, eta),
                          samples=args.samples, checks=args.checks.split(","),
                          k=args.k, workers=getattr(args, "workers", None))
    if hasattr(args, "out"):
        run.write_csv(args.out)
    else:
        sys.stdout.write(run.to_csv())


def verify_cumulants():
    """Identity checks of the cumulant module as a JSON-ready list."""
    out = []
    rad = cumulants.DiscreteLaw([1.0, -1.0])
    C = rad.cumulants(4)
    out.append({"check": "rademacher_fourth_cumulant", "value": C[4, 0].real,
                "expected": -2.0, "gap": abs(C[4, 0] - (-2.0))})
    law = cumulants.DiscreteLaw([1 + 1j, -0.5, 0.3 - 2j], [0.2, 0.5, 0.3])
    m = law.moments(6)
    back = cumulants.cumulants_to_moments(cumulants.moments_to_cumulants(m))
    out.append({"check": "round_trip_order6", "gap": float(np.max(np.abs(back.m - m.m)))})
    poly = cumulants.PolynomialMap({(3, 0): 1.0, (1, 2): 2 - 1j, (0, 1): 0.5})
    for name, lw, ell, mode in [
            ("rademacher_standard_ell4", rad, 4, "standard"),
            ("real_law_imaginary_mode", rad, 3, "imaginary"),
            ("three_point_standard_ell4", law, 4, "standard")]:
        r = cumulants.expansion_check(poly, lw, ell, mode)
        out.append({"check": name, "lhs": [r.lhs.real, r.lhs.imag],
                    "rhs": [r.rhs.real, r.rhs.imag], "gap": r.gap})
    smooth = cumulants.HolomorphicMap(
        lambda p, q, z1, z2: 0.7 ** p * (-0.4) ** q * np.exp(0.7 * z1 - 0.4 * z2))
    for lw, name in [(cumulants.GaussianLaw(0.7, 0.3), "gaussian"), (law, "three_point")]:
        for ell in (1, 2, 3, 4):
            for mode in ("standard", "imaginary"):
                r = cumulants.expansion_check(smooth, lw, ell, mode)
                out.append({"check": f"{name}_{mode}_ell{ell}", "gap": r.gap})
    for sigma in (1.0, 0.5, 0.0):
        out.append({"check": f"entry_predictions_sigma{sigma}",
                    **cumulants.entry_cumulant_predictions(sigma, 100)})
    return out


def _cmd_verify(args):
    if args.target == "cumulants":
        _print_json(verify_cumulants())
        return
    lines = ["f,lambda,a,k,resolution,value,exact,error,error_estimate"]
    for name in BUILTIN_NAMES:
        f = builtin(name)
        for lam in (-1.0, 0.0, 0.7):
            for a in (0.05, 0.2):
                for k in (1, 2, 3):
                    r = contour.cauchy_reconstruct(f, lam, a, k, args.resolution)
                    exact = float(f(lam))
                    lines.append(",".join([name] + [repr(v) for v in (
                        lam, a, k, args.resolution, r.value, exact,
                        abs(r.value - exact), r.error_estimate)]))
    text = "\n".join(lines) + "\n"
    if hasattr(args, "out"):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_sample_stats(args):
    spec = EnsembleSpec(args.N, args.sigma, entry_law=args.entry_law,
                        master_seed=getattr(args, "seed", 0))
    _print_json(entry_moment_report(spec, args.samples).to_dict())


COMMANDS = {
    "clt": _cmd_clt,
    "sweep-sigma": _cmd_sweep_sigma,
    "sweep-dbm": _cmd_sweep_dbm,
    "variance": _cmd_variance,
    "diagnose": _cmd_diagnose,
    "verify": _cmd_verify,
    "sample-stats": _cmd_sample_stats,
}


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (NumericalFailure, QuadratureError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError) as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
