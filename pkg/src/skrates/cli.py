"""``skrates`` command-line interface.

Exit codes: 0 ok, 2 argument or config error, 3 I/O error, 4 a configured
acceptance predicate failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import becbsc, state
from .config import ConfigError, check_acceptance, load_document, parse_joint, parse_separate
from .models import BecBscModel, BinaryStateModel, GaussianStateModel, classify_source_regime, regime_boundaries
from .scheme_sim import run_joint_experiment, run_separate_experiment

EXIT_OK, EXIT_ARGS, EXIT_IO, EXIT_ACCEPT = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _finite(obj):
    # strict JSON has no NaN or Infinity; unbounded slacks and unset fields become null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _dump(obj) -> str:
    return json.dumps(_finite(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _model(cls, **kwargs):
    try:
        return cls(**kwargs)
    except ValueError as err:
        raise UsageError(str(err)) from None


def cmd_becbsc_sweep(args) -> int:
    if not (0.0 <= args.beta_min <= args.beta_max <= 1.0):
        raise UsageError("need 0 <= beta-min <= beta-max <= 1")
    if args.steps < 1:
        raise UsageError("steps must be >= 1")
    _model(BecBscModel, zeta=args.zeta, beta=args.beta_min, epsilon=args.eps)
    grid = np.linspace(args.beta_min, args.beta_max, args.steps)
    table = becbsc.sweep(args.zeta, args.eps, grid)
    text = table.to_csv() if args.format == "csv" else table.to_json() + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_becbsc_point(args) -> int:
    m = _model(BecBscModel, zeta=args.zeta, beta=args.beta, epsilon=args.eps)
    fns = {
        "outer": becbsc.outer_bound,
        "sep": becbsc.inner_separate,
        "sep1l": becbsc.inner_separate_1layer,
        "joint": becbsc.inner_joint,
    }
    names = list(fns) if args.bound == "all" else [args.bound]
    _emit(_dump({name: fns[name](m).to_dict() for name in names}), None)
    return EXIT_OK


def cmd_classify(args) -> int:
    try:
        regime = classify_source_regime(args.beta, args.eps)
        bounds = regime_boundaries(args.eps)
    except ValueError as err:
        raise UsageError(str(err)) from None
    out = {
        "beta": args.beta,
        "epsilon": args.eps,
        "regime": regime.name,
        "boundaries": dict(zip(("degraded", "less_noisy", "more_capable"), bounds)),
    }
    _emit(_dump(out), None)
    return EXIT_OK


def cmd_state(args) -> int:
    if args.kind == "binary":
        m = _model(BinaryStateModel, a=args.a, zeta=args.zeta, beta=args.beta, epsilon=args.eps)
        outer, inner = state.binary_state_outer(m), state.binary_state_inner(m)
        argmax = {"X": "V", "V": "V' xor A, V' ~ B(1/2)", "U": "constant"}
    else:
        m = _model(GaussianStateModel, P=args.p, Q=args.q, N1=args.n1, N2=args.n2)
        try:
            outer = state.gaussian_outer(m)
            inner = state.gaussian_inner_full(m) if args.full else state.gaussian_inner_closed(m)
        except ValueError as err:
            raise UsageError(str(err)) from None
        argmax = inner.aux
    out = {
        "outer": outer.rk,
        "inner": inner.rk,
        "gap": outer.rk - inner.rk,
        "argmax": argmax,
        "certified": inner.certified,
    }
    _emit(_dump(out), None)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return EXIT_IO
    try:
        doc = load_document(text)
        scheme = doc.get("scheme", args.scheme)
        if scheme != args.scheme:
            raise ConfigError("scheme", f"config is for {scheme!r}, command asked for {args.scheme!r}")
        if args.scheme == "joint":
            cfg, aux = parse_joint(doc, args.trials, args.seed)
            report = run_joint_experiment(cfg, aux)
        else:
            cfg, aux = parse_separate(doc, args.trials, args.seed)
            report = run_separate_experiment(cfg, aux)
        verdict = check_acceptance(doc, report)
    except ConfigError as err:
        print(f"error: config field {err}", file=sys.stderr)
        return EXIT_ARGS
    try:
        _emit(report.to_json() + "\n", args.out)
    except OSError as err:
        print(f"error: cannot write report: {err}", file=sys.stderr)
        return EXIT_IO
    failed = [k for k, ok in verdict.items() if not ok]
    if failed:
        print(f"acceptance failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_ACCEPT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skrates", description="Secret-key rate bounds and scheme simulations.")
    sub = p.add_subparsers(dest="command", required=True)

    bb = sub.add_parser("becbsc", help="wiretap channel with BEC/BSC sources")
    bsub = bb.add_subparsers(dest="action", required=True)
    sw = bsub.add_parser("sweep", help="all bounds over a grid of beta")
    sw.add_argument("--zeta", type=float, required=True)
    sw.add_argument("--eps", type=float, required=True)
    sw.add_argument("--beta-min", type=float, default=0.0)
    sw.add_argument("--beta-max", type=float, default=1.0)
    sw.add_argument("--steps", type=int, default=201)
    sw.add_argument("--out")
    sw.add_argument("--format", choices=("csv", "json"), default="csv")
    sw.set_defaults(func=cmd_becbsc_sweep)
    pt = bsub.add_parser("point", help="bounds at one beta")
    pt.add_argument("--zeta", type=float, required=True)
    pt.add_argument("--eps", type=float, required=True)
    pt.add_argument("--beta", type=float, required=True)
    pt.add_argument("--bound", choices=("outer", "sep", "sep1l", "joint", "all"), default="all")
    pt.set_defaults(func=cmd_becbsc_point)

    cl = sub.add_parser("classify", help="order between BEC(beta) and BSC(eps) sources")
    cl.add_argument("--eps", type=float, required=True)
    cl.add_argument("--beta", type=float, required=True)
    cl.set_defaults(func=cmd_classify)

    st = sub.add_parser("state", help="channels with state known as a source")
    ssub = st.add_subparsers(dest="kind", required=True)
    sb = ssub.add_parser("binary")
    for name in ("--a", "--zeta", "--beta", "--eps"):
        sb.add_argument(name, type=float, required=True)
    sb.set_defaults(func=cmd_state)
    sg = ssub.add_parser("gaussian")
    for name in ("--p", "--q", "--n1", "--n2"):
        sg.add_argument(name, type=float, required=True)
    sg.add_argument("--full", action="store_true", help="maximize over (rho, gamma) numerically")
    sg.set_defaults(func=cmd_state)

    sim = sub.add_parser("simulate", help="Monte Carlo run of a key-agreement scheme")
    sim.add_argument("scheme", choices=("joint", "separate"))
    sim.add_argument("--config", required=True)
    sim.add_argument("--trials", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out")
    sim.set_defaults(func=cmd_simulate)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad arguments
    try:
        return args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ARGS
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
