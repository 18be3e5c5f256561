"""Command-line front end: one subcommand per experiment stage.

Every command takes a TOML config (the single source of truth for an
experiment); artifacts embed the config's canonical hash so results stay
traceable.  Exit status is 0 only if the requested work succeeded — `verify`
in particular exits nonzero naming the first failing check.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

import numpy as np

from .. import __version__
from .. import functionals as fn
from .. import ground_state as gs
from ..field import load_field, save_field
from .config import config_hash, load_config
from .detectors import criterion_norm
from .runner import StoredRun, build_initial, run
from . import checks as checks_mod


def _parse_init(arg):
    """Split 'PATH[:scale=c]' into (path, scale)."""
    if ":scale=" in arg:
        path, _, tail = arg.rpartition(":scale=")
        try:
            return path, float(tail)
        except ValueError:
            raise SystemExit(f"bad scale in --init {arg!r}") from None
    return arg, None


def _with_file_initial(cfg, init_arg):
    path, scale = _parse_init(init_arg)
    initial = dataclasses.replace(
        cfg.initial, kind="file", path=path, scale=1.0 if scale is None else scale
    )
    return dataclasses.replace(cfg, initial=initial)


def _cmd_ground_state(args):
    cfg = load_config(args.config)
    result = gs.solve_petviashvili(cfg.domain, omega=cfg.domain.omega)
    save_field(result.field, args.out)
    print(
        json.dumps(
            {
                "m_omega": result.m_omega,
                "elliptic_residual": result.elliptic_residual,
                "Q_value": result.Q_value,
                "lambda_star": result.lambda_star_value,
                "iterations": result.iterations,
                "config_hash": config_hash(cfg),
                "saved": args.out,
            },
            indent=1,
        )
    )
    return 0


def _cmd_evolve(args):
    cfg = load_config(args.config)
    if args.init is not None:
        cfg = _with_file_initial(cfg, args.init)
    report = run(cfg, args.out)
    print(report.to_json())
    return 0


def _cmd_classify(args):
    cfg = load_config(args.config)
    if args.init is not None:
        cfg = _with_file_initial(cfg, args.init)
    f, gs_result = build_initial(cfg)
    label = gs.classify(f, m_omega=gs_result.m_omega)
    print(
        json.dumps(
            {
                "classification": label,
                "S_omega": fn.action(f, omega=cfg.domain.omega),
                "m_omega": gs_result.m_omega,
                "Q": fn.semivirial_Q(f),
                "config_hash": config_hash(cfg),
            },
            indent=1,
        )
    )
    return 0


def _cmd_morawetz(args):
    from .runner import _morawetz_pass, _write_morawetz_csv

    cfg = load_config(args.config)
    if cfg.morawetz is None:
        raise SystemExit("config has no [morawetz] section")
    stored = StoredRun(args.trace)
    rows, summary = _morawetz_pass(stored, cfg.morawetz, cfg.seed)
    path = _write_morawetz_csv(args.trace, rows)
    summary["csv"] = path
    print(json.dumps(summary, indent=1))
    return 0


def _cmd_criterion(args):
    stored = StoredRun(args.trace)
    dom = stored.domain
    ce = fn.criterion_exponents(dom.d, dom.alpha)
    t0, t1 = args.window
    value = criterion_norm(stored, t0, t1, ce.q, ce.r, ce.s)
    print(
        json.dumps(
            {
                "window": [t0, t1],
                "q": ce.q,
                "r": ce.r,
                "s": ce.s,
                "norm": value,
            },
            indent=1,
        )
    )
    return 0


def _cmd_verify(args):
    ctx = checks_mod.Context(work_dir=args.work_dir, log=print)
    results = checks_mod.verify(args.suite, ctx=ctx)
    print(checks_mod.format_table(results))
    print(f"artifacts under {ctx.work_dir}")
    for r in results:
        if not r.ok:
            print(f"first failing check: {r.name} -- {r.detail}", file=sys.stderr)
            return 1
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="phnls",
        description="Fourier-Hermite toolkit for NLS with partial harmonic confinement",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log fixture progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ground-state", help="solve and certify the ground state")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output field file")
    p.set_defaults(fn=_cmd_ground_state)

    p = sub.add_parser("evolve", help="run an experiment and write its trace + report")
    p.add_argument("--config", required=True)
    p.add_argument("--init", help="initial field file, optionally PATH:scale=c")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=_cmd_evolve)

    p = sub.add_parser("classify", help="place an initial state in the dichotomy")
    p.add_argument("--config", required=True)
    p.add_argument("--init", help="field file, optionally PATH:scale=c")
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("morawetz", help="interaction-functional pass over a stored trace")
    p.add_argument("--config", required=True)
    p.add_argument("--trace", required=True, help="directory written by evolve")
    p.set_defaults(fn=_cmd_morawetz)

    p = sub.add_parser("criterion", help="windowed scattering-criterion norm of a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--window", nargs=2, type=float, required=True, metavar=("T0", "T1"))
    p.set_defaults(fn=_cmd_criterion)

    p = sub.add_parser("verify", help="run the named verification checks")
    p.add_argument("--suite", choices=checks_mod.SUITES, default=None)
    p.add_argument("--work-dir", default=None, help="where to keep fixture artifacts")
    p.set_defaults(fn=_cmd_verify)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
