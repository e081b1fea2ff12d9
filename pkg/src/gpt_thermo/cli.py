"""Command-line front end (``gpt-thermo``).

Exit codes: 0 success, 2 invalid input or a cycle that does not close,
3 a checked inequality fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import io
from .entropy import ENTROPIES, get_entropy, to_base
from .errors import GptError, PreconditionError
from .measurement import enumerate_fine_grained, process_zoo
from .spm import (builtin_cycle, check_thm2, discrepancy_bound, lemma1_bound,
                  random_classical_cycle, run_cycle)
from .thermo import evaluate_scenario, szilard_scenario

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION = 0, 2, 3
CHECK_TOL = 1e-7


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("GPT_THERMO_SEED", "0"))


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _emit(obj, out) -> None:
    json.dump(obj, out, indent=2, default=float)
    out.write("\n")


# ---------------------------------------------------------------- system


def cmd_system_info(args, out) -> int:
    system = io.system_from_name(args.system)
    measurements = enumerate_fine_grained(system)
    _emit({
        "schema": io.SCHEMA,
        "system": io.system_to_json(system),
        "name": system.name,
        "dim": system.dim,
        "vertices": system.n_vertices,
        "dual_rays": int(len(system.dual_rays)),
        "fine_grained_measurements": [m.n_outcomes for m in measurements],
        "processes": len(process_zoo(system)),
    }, out)
    return EXIT_OK


# ---------------------------------------------------------------- entropy


def cmd_entropy_eval(args, out) -> int:
    system = io.system_from_name(args.system)
    state = io.parse_state(system, args.state)
    fn = get_entropy(args.kind)
    body = {"schema": io.SCHEMA, "kind": args.kind, "base": args.base,
            "state": state.coords.tolist()}
    if args.kind == "shannon":
        body["value"] = to_base(fn(state), args.base)
    else:
        res = fn(state, return_witness=True).describe()
        res.pop("kind")
        body.update(res, value=to_base(res["value"], args.base))
    _emit(body, out)
    return EXIT_OK


# ---------------------------------------------------------------- cycles


def _load_cycle(args):
    if args.file:
        return io.cycle_from_json(io.load_json(args.file))
    if args.builtin == "random-classical":
        return random_classical_cycle(np.random.default_rng(_seed(args)), n=args.n)
    weights = None
    if args.weights:
        weights = np.array([float(w) for w in args.weights.split(",")])
    return builtin_cycle(args.builtin, n=args.n, weights=weights)


def _rows(ledger):
    cum = ledger.cumulative
    bound = lemma1_bound(ledger, get_entropy("meas"), per_step=True)
    try:
        disc = discrepancy_bound(ledger, per_step=True)
    except PreconditionError:
        disc = np.full(len(ledger.steps), np.nan)
    for s, c, b, d in zip(ledger.steps, cum, bound, disc):
        yield {"step": s.index, "phase": s.phase, "w_ext": s.w_ext, "cumulative": c,
               "bound_meas": b, "bound_discrepancy": d}


COLUMNS = ("step", "phase", "w_ext", "cumulative", "bound_meas", "bound_discrepancy")


def cmd_cycle_run(args, out) -> int:
    initial, steps = _load_cycle(args)
    if args.emit_definition:
        _emit(io.cycle_to_json(initial, steps), out)
        return EXIT_OK
    ledger = run_cycle(initial, steps, strict=False)
    rows = list(_rows(ledger))
    if args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([r["step"], r["phase"]] + [_fmt(r[k]) for k in COLUMNS[2:]])
    elif args.format == "json":
        _emit({"schema": io.SCHEMA, "steps": rows, "total": ledger.total,
               "residual": ledger.residual, "is_cycle": ledger.is_cycle}, out)
    else:
        out.write(f"{'step':>4}  {'phase':<14}{'w_ext':>16}{'cumulative':>16}\n")
        for r in rows:
            out.write(f"{r['step']:>4}  {r['phase']:<14}{_fmt(r['w_ext']):>16}"
                      f"{_fmt(r['cumulative']):>16}\n")
        out.write(f"total {_fmt(ledger.total)}  residual {_fmt(ledger.residual)}\n")
    if not ledger.is_cycle:
        print(f"error: configuration does not return to the start "
              f"(residual {ledger.residual:.3g})", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_cycle_check(args, out) -> int:
    initial, steps = _load_cycle(args)
    ledger = run_cycle(initial, steps, strict=True)
    entropy = get_entropy(args.entropy)
    body = {"schema": io.SCHEMA, "bound": args.bound, "entropy": args.entropy,
            "total": ledger.total}
    if args.bound == "lemma1":
        value = lemma1_bound(ledger, entropy)
        body.update(value=value, holds=bool(ledger.total <= value + CHECK_TOL))
    elif args.bound == "discrepancy":
        value = discrepancy_bound(ledger)
        body.update(value=value, holds=bool(ledger.total <= value + CHECK_TOL))
    else:
        report = check_thm2(ledger, entropy)
        fails = report.failures(CHECK_TOL)
        body.update(holds=not fails, failures=[
            {"step": f.step, "group": f.group, "container": f.container,
             "inequality": f.inequality, "lhs": f.lhs, "rhs": f.rhs, "slack": f.slack}
            for f in fails])
    _emit(body, out)
    return EXIT_OK if body["holds"] else EXIT_VIOLATION


# ---------------------------------------------------------------- thermo


def _report(rep, out) -> int:
    body = {"schema": io.SCHEMA, **rep.as_dict(), "holds": rep.all_hold()}
    _emit(body, out)
    return EXIT_OK if rep.all_hold() else EXIT_VIOLATION


def cmd_szilard(args, out) -> int:
    return _report(evaluate_scenario(szilard_scenario(args.beta, args.error_prob)), out)


def cmd_scenario_run(args, out) -> int:
    scenario = io.scenario_from_json(io.load_json(args.file))
    return _report(evaluate_scenario(scenario), out)


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gpt-thermo", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=None,
                   help="seed for randomized constructions (default: $GPT_THERMO_SEED or 0)")
    sub = p.add_subparsers(dest="command", required=True)

    sysp = sub.add_parser("system").add_subparsers(dest="action", required=True)
    info = sysp.add_parser("info")
    info.add_argument("--system", required=True)
    info.set_defaults(func=cmd_system_info)

    ent = sub.add_parser("entropy").add_subparsers(dest="action", required=True)
    ev = ent.add_parser("eval")
    ev.add_argument("--system", required=True)
    ev.add_argument("--state", required=True, help='e.g. "0.75*v0+0.25*v2" or "0.5,0.5"')
    ev.add_argument("--kind", choices=sorted(ENTROPIES), default="meas")
    ev.add_argument("--base", default="nat", help="nat, bit or a positive number")
    ev.set_defaults(func=cmd_entropy_eval)

    cyc = sub.add_parser("cycle").add_subparsers(dest="action", required=True)
    for name, func in (("run", cmd_cycle_run), ("check", cmd_cycle_check)):
        c = cyc.add_parser(name)
        src = c.add_mutually_exclusive_group(required=True)
        src.add_argument("--builtin", choices=["square", "hexagon", "von-neumann",
                                               "random-classical"])
        src.add_argument("--file")
        c.add_argument("--n", type=int, default=None)
        c.add_argument("--weights", default=None)
        c.set_defaults(func=func)
        if name == "run":
            c.add_argument("--format", choices=["table", "csv", "json"], default="table")
            c.add_argument("--emit-definition", action="store_true")
        else:
            c.add_argument("--entropy", choices=sorted(ENTROPIES), default="meas")
            c.add_argument("--bound", choices=["lemma1", "thm2", "discrepancy"],
                           default="lemma1")

    sz = sub.add_parser("szilard")
    sz.add_argument("--beta", type=float, default=1.0)
    sz.add_argument("--error-prob", type=float, default=0.0)
    sz.set_defaults(func=cmd_szilard)

    sc = sub.add_parser("scenario").add_subparsers(dest="action", required=True)
    run = sc.add_parser("run")
    run.add_argument("--file", required=True)
    run.set_defaults(func=cmd_scenario_run)
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except GptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
