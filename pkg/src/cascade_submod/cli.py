"""Command-line entry point.

Exit codes: 0 success, 1 domain error (bad instance, limits exceeded,
failed check), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from functools import partial
from typing import Any, Sequence

import numpy as np

from . import __version__
from .checkers import (
    check_adaptive_monotone,
    check_adaptive_submodular,
    check_cascade_submodular,
    verify_lemma_chain,
)
from .core import dumps_instance, load_instance
from .errors import CascadeError
from .evaluation import Mode, default_threads, exact_favg, exact_favg_nodeath, simulate
from .experiments import (
    ExperimentConfig,
    generate_instance,
    parse_groups,
    run_delta_sweep,
    run_group_composition,
    run_label_sweep,
    FIGURE_COLUMNS,
)
from .oracle import OracleConfig, Variant, solve
from .policies import POLICY_NAMES, make_policy
from .sequences import alpha, guarantee, rho_star
from .utility import utility_from_instance

HELP_WIDTH = 80
RUN_COLUMNS = ("policy", "rho", "rounds", "seed", "mean_value", "stderr",
               "mean_solution_size", "group1_pct", "group2_pct", "group3_pct")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# argument types
# --------------------------------------------------------------------------


def _rho(text: str) -> float | None:
    if text == "auto":
        return None
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number in [0, 1] or 'auto', got {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"rho must be in [0, 1], got {text}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return v


def _unit(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a number in [0, 1], got {text}")
    return v


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_range(text: str) -> list[int]:
    """``2..6`` or ``2,4,6``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a range like 2..6 or a list like 2,4,6, got {text!r}") from None


def _groups(text: str):
    try:
        return parse_groups(text)
    except CascadeError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _flags(args) -> dict:
    skip = {"func", "json", "output", "threads"}  # threads never change results
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if isinstance(v, tuple):
            v = [list(x) if isinstance(x, tuple) else x for x in v]
        out[k] = v
    return out


def _envelope(args, rows: list[dict]) -> str:
    doc = {
        "meta": {"seed": getattr(args, "seed", None), "version": __version__, "flags": _flags(args)},
        "rows": rows,
    }
    return json.dumps(_jsonable(doc), indent=1, sort_keys=False) + "\n"


def _emit(args, text: str):
    if getattr(args, "output", None) and args.output != "-":
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_rows(args, rows: list[dict], columns: Sequence[str]):
    _emit(args, _envelope(args, rows) if args.json else _csv(rows, columns))


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def _effective_rho(policy: str, rho: float | None) -> float | None:
    if policy in ("greedy-plus", "pi-b-restricted"):
        return rho_star() if rho is None else rho
    return rho


def _need_seed(args, why: str):
    if args.seed is None:
        raise UsageError(f"--seed is required {why}")


def cmd_gen(args) -> int:
    groups = args.groups if args.groups else ((args.points, args.labels),)
    cfg = ExperimentConfig(hypotheses=args.hypotheses, groups=groups, delta_low=args.delta_low,
                           delta_high=args.delta_high, seed=args.seed)
    _emit(args, dumps_instance(generate_instance(cfg)) + "\n")
    return 0


def _load(args):
    inst = load_instance(args.instance)
    return inst, utility_from_instance(inst)


def _run_row(args, inst, sim) -> dict:
    pct = sim.group_pct()
    row = {
        "policy": args.policy,
        "rho": _effective_rho(args.policy, args.rho),
        "rounds": args.rounds,
        "seed": args.seed,
        "mean_value": sim.result.value,
        "stderr": sim.result.stderr,
        "mean_solution_size": sim.mean_solution_size,
    }
    for g in (1, 2, 3):
        row[f"group{g}_pct"] = pct.get(g)
    return row


def cmd_run(args) -> int:
    inst, util = _load(args)
    pol = make_policy(args.policy, inst, util, rho=args.rho, seed=args.seed)
    sim = simulate(pol, inst, util, args.rounds, args.seed, threads=args.threads,
                   credit_survivors=args.credit_survivors, keep_traces=args.json)
    row = _run_row(args, inst, sim)
    if args.json:
        row["credit_survivors"] = args.credit_survivors
        row["episodes"] = [t.to_dict() for t in sim.traces]
        _emit(args, _envelope(args, [row]))
    else:
        _emit(args, _csv([row], RUN_COLUMNS))
    return 0


def cmd_eval(args) -> int:
    mode = Mode(args.mode)
    if mode is Mode.MONTE_CARLO:
        _need_seed(args, "for --mode mc")
    if args.policy == "random":
        _need_seed(args, "for the random policy")
    inst, util = _load(args)
    pol = make_policy(args.policy, inst, util, rho=args.rho, seed=args.seed)
    if mode is Mode.EXACT:
        res = exact_favg(pol, inst, util, breakdown=args.json)
    elif mode is Mode.EXACT_NODEATH:
        res = exact_favg_nodeath(pol, inst, util)
    else:
        res = simulate(pol, inst, util, args.rounds, args.seed, threads=args.threads,
                       credit_survivors=args.credit_survivors).result
    row = {"policy": args.policy, "rho": _effective_rho(args.policy, args.rho), **res.to_dict()}
    _emit_rows(args, [row], ("policy", "rho", "mode", "value", "trials", "stderr"))
    return 0


def cmd_oracle(args) -> int:
    inst, util = _load(args)
    rho = rho_star() if args.rho is None else args.rho
    value, table = solve(inst, util, OracleConfig(Variant(args.variant), rho))
    row: dict[str, Any] = {"variant": args.variant, "rho": rho, "value": value, "first_item": table.entries[()][1]}
    if args.json:
        row["table"] = [
            {"psi": [list(x) for x in key], "value": v, "next": i}
            for key, (v, i) in sorted(table.entries.items(), key=lambda kv: (len(kv[0]), kv[0]))
        ]
    _emit_rows(args, [row], ("variant", "rho", "value", "first_item"))
    return 0


def cmd_check(args) -> int:
    inst, util = _load(args)
    if args.property == "monotone":
        rep = check_adaptive_monotone(inst, util).to_dict()
    elif args.property == "submodular":
        rep = check_adaptive_submodular(inst, util).to_dict()
    elif args.property == "cascade":
        rep = check_cascade_submodular(inst, util, args.delta_samples, args.seed).to_dict()
    else:
        rho = rho_star() if args.rho is None else args.rho
        lc = verify_lemma_chain(inst, util, rho, delta_samples=args.delta_samples, seed=args.seed)
        rep = lc.to_dict()
        rep["property"] = "lemma-chain"
        # inequalities are reported either way; unmet hypotheses are a domain failure
        if lc.hypotheses_met is False:
            rep["passed"] = False
    _emit(args, _envelope(args, [rep]))
    return 0 if rep["passed"] else 1


def _bench_config(args, **over) -> ExperimentConfig:
    groups = args.groups if args.groups else ((args.points, 2),)
    kw = dict(hypotheses=args.hypotheses, groups=groups, rounds=args.rounds, seed=args.seed,
              policies=tuple(args.policies), rho=args.rho, replicates=args.replicates,
              threads=args.threads, credit_survivors=args.credit_survivors)
    kw.update(over)
    return ExperimentConfig(**kw)


def cmd_bench(args) -> int:
    if args.figure == "fig1":
        cfg = _bench_config(args, delta_low=args.delta_low)
        rows = run_label_sweep(cfg, args.labels)
    elif args.figure == "fig-delta":
        rows = run_delta_sweep(_bench_config(args), args.lower_ends)
    else:
        rows = run_group_composition(_bench_config(args), args.lower_ends)
    _emit_rows(args, [r.as_record() for r in rows], FIGURE_COLUMNS)
    return 0


def cmd_constants(args) -> int:
    r = rho_star()
    rows = [
        {"name": "rho_star", "value": r},
        {"name": "alpha_rho_star", "value": alpha(r)},
        {"name": "guarantee_rho_star", "value": guarantee(r)},
    ]
    _emit_rows(args, rows, ("name", "value"))
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=HELP_WIDTH, max_help_position=32)


def _out_flags(p, csv_output=True):
    if csv_output:
        p.add_argument("--json", action="store_true",
                       help="emit a JSON document {meta, rows} instead of CSV")
    p.add_argument("-o", "--output", metavar="PATH", default=None, help="write to PATH instead of stdout")


def _instance_flag(p):
    p.add_argument("--instance", metavar="PATH", default="-",
                   help="instance JSON file, or - for stdin (default: -)")


def _sim_flags(p, rounds_default: int):
    p.add_argument("--rounds", type=_positive_int, default=rounds_default,
                   help=f"simulated episodes (default: {rounds_default})")
    p.add_argument("--threads", type=_positive_int, default=default_threads(), metavar="N",
                   help="worker processes; output does not depend on it (default: CPU count)")
    p.add_argument("--credit-survivors", action="store_true",
                   help="diagnostic: also credit episodes that never terminate")


def _policy_flags(p):
    p.add_argument("--policy", required=True, metavar="NAME",
                   help="one of: " + ", ".join(POLICY_NAMES))
    p.add_argument("--rho", type=_rho, default=None, metavar="R",
                   help="reachability threshold for greedy-plus and pi-b-restricted, or auto (default: auto)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascade-submod", formatter_class=_formatter,
        description="Adaptive item selection when the process may terminate after each item.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    add = partial(sub.add_parser, formatter_class=_formatter)

    p = add("gen", help="generate a random active-learning instance",
            description="Generate a random version-space instance as JSON.")
    p.add_argument("--hypotheses", type=_positive_int, default=1000, help="number of hypotheses (default: 1000)")
    p.add_argument("--points", type=_positive_int, default=50, help="number of data points (default: 50)")
    p.add_argument("--labels", type=_positive_int, default=2, help="labels per point (default: 2)")
    p.add_argument("--groups", type=_groups, default=None, metavar="SPEC",
                   help="point groups like 40x2,5x3,5x4; overrides --points and --labels")
    p.add_argument("--delta-low", type=_unit, default=0.0, help="lower end of the continuation range (default: 0)")
    p.add_argument("--delta-high", type=_unit, default=1.0, help="upper end of the continuation range (default: 1)")
    p.add_argument("--seed", type=_seed, required=True, help="random seed")
    _out_flags(p, csv_output=False)
    p.set_defaults(func=cmd_gen)

    p = add("run", help="simulate a policy and report aggregate statistics",
            description="Monte Carlo run of a policy; one CSV row of aggregates.")
    _instance_flag(p)
    _policy_flags(p)
    p.add_argument("--seed", type=_seed, required=True, help="random seed")
    _sim_flags(p, 10000)
    _out_flags(p)
    p.set_defaults(func=cmd_run)

    p = add("eval", help="evaluate a policy exactly or by simulation",
            description="Expected utility of a policy on an instance.")
    _instance_flag(p)
    _policy_flags(p)
    p.add_argument("--mode", choices=[m.value for m in Mode], default="exact",
                   help="exact: death-credited expectation; nodeath: full adopted sequence; "
                        "mc: Monte Carlo (default: exact)")
    p.add_argument("--seed", type=_seed, default=None,
                   help="random seed; required by --mode mc and the random policy")
    _sim_flags(p, 100000)
    _out_flags(p)
    p.set_defaults(func=cmd_eval)

    p = add("oracle", help="optimal policy value on a small instance",
            description="Brute-force optimal policy value by dynamic programming.")
    _instance_flag(p)
    p.add_argument("--variant", choices=[v.value for v in Variant], default="none",
                   help="policy class constraint (default: none)")
    p.add_argument("--rho", type=_rho, default=None, metavar="R", help="reachability threshold or auto (default: auto)")
    _out_flags(p)
    p.set_defaults(func=cmd_oracle)

    p = add("check", help="verify a structural property on a small instance",
            description="Exhaustive property check; JSON report with minimum slack and witness. "
                        "Exits 1 when the property fails.")
    _instance_flag(p)
    p.add_argument("--property", required=True, choices=["monotone", "submodular", "cascade", "lemma-chain"],
                   help="property to check")
    p.add_argument("--delta-samples", type=_positive_int, default=5, metavar="N",
                   help="random continuation vectors for cascade and lemma-chain (default: 5)")
    p.add_argument("--seed", type=_seed, default=0, help="seed for the sampled vectors (default: 0)")
    p.add_argument("--rho", type=_rho, default=None, metavar="R", help="threshold for lemma-chain (default: auto)")
    _out_flags(p, csv_output=False)
    p.set_defaults(func=cmd_check)

    p = add("bench", help="reproduce the active-learning figures as CSV",
            description="Active-learning benchmark sweeps.")
    figs = p.add_subparsers(dest="figure", metavar="FIGURE", required=True)
    fadd = partial(figs.add_parser, formatter_class=_formatter)
    f1 = fadd("fig1", help="reduction vs label-set size", description="Label-set size sweep.")
    f1.add_argument("--labels", type=_int_range, default=list(range(2, 7)), metavar="RANGE",
                    help="label-set sizes, e.g. 2..6 or 2,4 (default: 2..6)")
    f1.add_argument("--delta-low", type=_unit, default=0.0, help="lower end of the continuation range (default: 0)")
    fd = fadd("fig-delta", help="reduction vs continuation lower end", description="Continuation range sweep.")
    fd.add_argument("--lower-ends", type=_float_list, default=[round(0.1 * k, 1) for k in range(10)], metavar="LIST",
                    help="comma-separated lower ends (default: 0,0.1,...,0.9)")
    fg = fadd("fig-groups", help="per-group selection percentages", description="Group composition of greedy-plus.")
    fg.add_argument("--lower-ends", type=_float_list, default=[0.0, 0.5, 0.8], metavar="LIST",
                    help="comma-separated lower ends (default: 0,0.5,0.8)")
    for q in (f1, fd, fg):
        q.add_argument("--hypotheses", type=_positive_int, default=1000, help="number of hypotheses (default: 1000)")
        q.add_argument("--points", type=_positive_int, default=50, help="number of data points (default: 50)")
        q.add_argument("--groups", type=_groups, default=None, metavar="SPEC",
                       help="point groups like 40x2,5x3,5x4 (fig1 uses only the total count)")
        q.add_argument("--seed", type=_seed, required=True, help="random seed")
        q.add_argument("--rho", type=_rho, default=None, metavar="R", help="greedy-plus threshold or auto (default: auto)")
        q.add_argument("--policies", type=lambda s: s.split(","), default=["greedy-plus", "random"], metavar="LIST",
                       help="comma-separated policy names (default: greedy-plus,random)")
        q.add_argument("--replicates", type=_positive_int, default=1, metavar="N",
                       help="independent instances per sweep point (default: 1)")
        _sim_flags(q, 300)
        _out_flags(q)
    p.set_defaults(func=cmd_bench)

    p = add("constants", help="print the guarantee constants",
            description="Optimal threshold, mixture weight and approximation guarantee.")
    _out_flags(p)
    p.set_defaults(func=cmd_constants)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits 2
    except CascadeError as exc:
        print(f"cascade-submod: error: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
