"""Command-line interface: ``gle2bd {fit,invert,simulate,correlate,reproduce}``.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .. import __version__
from ..analysis import autocorrelation
from ..errors import NumericalError, ValidationError
from ..io import (read_trajectories, write_correlation, write_curves, write_json,
                  write_trajectories, _jsonable)
from ..kernels import kernel_from_name, linear_field, morse_field, zero_field
from ..laplace import (InversionConfig, chi_infinity, closed_form_chi_curve, exact_chi_curve)
from ..reduction import (approx_kernel_curve, build_extended_system, delta_kernel_curve,
                         fit_order, verify_fdt)
from ..simulators import (ChainConfig, SimConfig, simulate_bd, simulate_chain,
                          simulate_embedded, simulate_nonlocal)
from .experiment import (PRESETS, ExperimentConfig, load_config,
                         parse_overrides, preset_config, run_preset)
from .plot import emit_plot

__all__ = ["main", "build_parser", "run_preset", "emit_plot", "ExperimentConfig", "PRESETS"]

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _add_kernel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", default="ad", choices=["ad", "langevin", "table"])
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--K", type=float, default=4.0)
    p.add_argument("--table", help="two-column CSV (s, Theta) for --kernel table")
    p.add_argument("--m-infinity", type=float, help="declared M_inf for a tabulated kernel")


def _kernel(args):
    return kernel_from_name(args.kernel, gamma=args.gamma, K=args.K, table=args.table,
                            m_infinity=args.m_infinity)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gle2bd", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"gle2bd {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="moment-matched fit and embedded system as JSON")
    _add_kernel_args(p)
    p.add_argument("--order", type=int, default=2, choices=[0, 1, 2, 3])
    p.add_argument("--kBT", type=float, default=1.0)
    p.add_argument("--out")

    p = sub.add_parser("invert", help="kernel curve chi(t) as CSV")
    _add_kernel_args(p)
    p.add_argument("--tmax", type=float, default=10.0)
    p.add_argument("--npoints", type=int, default=201)
    p.add_argument("--method", default="euler", choices=["euler", "closed", "rational"])
    p.add_argument("--order", type=int, default=2, choices=[1, 2, 3])
    p.add_argument("--terms", type=int, default=32)
    p.add_argument("--average", type=int, default=15)
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="simulate one model, trajectories as CSV")
    _add_kernel_args(p)
    p.add_argument("--model", required=True, choices=["chain", "bd", "nonlocal", "embedded"])
    p.add_argument("--order", type=int, default=2, choices=[1, 2, 3])
    p.add_argument("--kBT", type=float, default=1.0)
    p.add_argument("--force", default="morse", choices=["morse", "linear", "zero"])
    p.add_argument("--a", type=float, default=1.0, help="Morse parameter")
    p.add_argument("--k", type=float, default=2.0, help="linear force constant")
    p.add_argument("--N", type=int, default=8192, help="chain length")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--burnin", type=int, default=0)
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--record", default="x", help="comma-separated channels")
    p.add_argument("--ntraj", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", action="store_true",
                   help="nonlocal model with the grid delta kernel 2 chi_inf / dt")
    p.add_argument("--out", required=True)

    p = sub.add_parser("correlate", help="autocovariance of a trajectory CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--maxlag", type=float, required=True)
    p.add_argument("--channel", default="x")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("reproduce", help="run a figure preset")
    p.add_argument("preset", choices=sorted(PRESETS))
    p.add_argument("--config", help="flat key=value file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--outdir")
    p.add_argument("--paper-scale", action="store_true", help="chain N = 8192")
    return ap


def _cmd_fit(args) -> dict:
    kernel = _kernel(args)
    chi_inf = chi_infinity(kernel)
    doc = {"kernel": kernel.describe(), "order": args.order, "chi_inf": chi_inf}
    if args.order == 0:
        doc["model"] = "bd"
        doc["Sigma"] = 2 * args.kBT * chi_inf
        return doc
    fit = fit_order(kernel, args.order)
    system = build_extended_system(fit, args.kBT)
    doc.update(fit.as_dict())
    doc.update(system.as_dict())
    doc["fdt_report"] = verify_fdt(system).as_dict()
    return doc


def _cmd_invert(args):
    kernel = _kernel(args)
    t = np.linspace(0.0, args.tmax, args.npoints)
    if args.method == "closed":
        curve = closed_form_chi_curve(kernel, t)
    elif args.method == "rational":
        curve = approx_kernel_curve(fit_order(kernel, args.order), t)
    else:
        curve = exact_chi_curve(kernel, t, InversionConfig(n_terms=args.terms,
                                                           n_average=args.average))
    return curve


def _force(args):
    return {"morse": lambda: morse_field(args.a), "linear": lambda: linear_field(args.k),
            "zero": zero_field}[args.force]()


def _cmd_simulate(args):
    record = tuple(c.strip() for c in args.record.split(",") if c.strip())
    sim = SimConfig(dt=args.dt, steps=args.steps, burnin=args.burnin, ensemble=args.ntraj,
                    seed=args.seed, record_every=args.record_every, record=record, kBT=args.kBT)
    if args.model == "chain":
        chain = ChainConfig(N=args.N, K=args.K, gamma=args.gamma, kBT=args.kBT,
                            a=None if args.force == "zero" else args.a)
        if args.force == "linear":
            raise ValidationError("the chain supports the Morse force or none")
        return simulate_chain(chain, sim)
    kernel = _kernel(args)
    force = _force(args)
    if args.model == "bd":
        return simulate_bd(kernel, force, sim)
    if args.model == "embedded":
        system = build_extended_system(fit_order(kernel, args.order), args.kBT)
        return simulate_embedded(system, force, sim)
    n = args.steps + 1
    if args.delta:
        curve = delta_kernel_curve(chi_infinity(kernel), args.dt, n)
    else:
        curve = exact_chi_curve(kernel, args.dt * np.arange(n))
    return simulate_nonlocal(curve, force, sim)


def _dispatch(args) -> int:
    meta = {"command": args.command, "args": {k: v for k, v in vars(args).items()
                                              if k not in ("command", "verbose")},
            "version": __version__}
    if args.command == "fit":
        doc = _cmd_fit(args)
        if args.out:
            write_json(args.out, doc, meta)
        else:
            print(json.dumps({"_meta": meta, **_jsonable(doc)}, indent=2, sort_keys=True))
        return EXIT_OK
    if args.command == "invert":
        curve = _cmd_invert(args)
        if args.out:
            write_curves(args.out, [curve], meta)
        else:
            from ..io import metadata_lines
            print("\n".join(metadata_lines(meta)))
            print("t,chi[0][0],provenance")
            for ti, v in zip(curve.t, curve.values[:, 0, 0]):
                print(f"{ti:.17g},{v:.17g},{curve.provenance}")
        return EXIT_OK
    if args.command == "simulate":
        ens = _cmd_simulate(args)
        write_trajectories(args.out, ens, meta)
        return EXIT_OK
    if args.command == "correlate":
        ens = read_trajectories(args.inp)
        series = autocorrelation(ens, args.maxlag, channel=args.channel,
                                 normalize=args.normalize)
        write_correlation(args.out, series, {**meta, "source_meta": ens.model})
        return EXIT_OK
    if args.command == "reproduce":
        overrides = load_config(args.config) if args.config else {}
        overrides.update(parse_overrides(args.set))
        if args.paper_scale:
            overrides["chain_N"] = 8192
        cfg = preset_config(args.preset, **overrides)
        files = run_preset(cfg, outdir=args.outdir)
        for f in files:
            print(f)
        return EXIT_OK
    raise ValidationError(f"unknown command {args.command}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except ValidationError as exc:
        print(f"gle2bd: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"gle2bd: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
