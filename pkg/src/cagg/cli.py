"""Command-line front end: ``cagg {classify,cost,simulate,tradeoff,verify}``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 exact
computation over budget.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .analysis import (
    CostEstimate,
    SystemParams,
    VARIANTS,
    ceh,
    chm_amc_exact,
    chm_pyramid_formula,
    estimates_csv,
    pyramid_moments,
    tradeoff,
)
from .codes import build_pyramid
from .erasures import class_table, class_table_csv, class_table_json
from .exceptions import BudgetExceeded, CaggError, ParameterError
from .sim import SimConfig, estimate_chm, trial_matrix
from .strategies import SCHEMES, Strategy, verify_recovery

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _system(sub, scheme=True):
    sub.add_argument("--ne", type=int, required=True, help="number of edge nodes")
    sub.add_argument("--nh", type=int, required=True, help="number of helper nodes")
    sub.add_argument("--s", type=int, required=True, help="straggling links per edge node")
    if scheme:
        sub.add_argument("--scheme", choices=SCHEMES + ("pyramid-as-printed", "pyramid-operational"), required=True)
        sub.add_argument("--t", type=int, help="number of local parities (pyramid)")
        sub.add_argument("--m", type=int, default=1, help="number of maxima (AMC)")


def _mc(sub):
    sub.add_argument("--trials", type=int, default=2000)
    sub.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cagg", description="Coded gradient aggregation cost calculator and simulator.")
    subs = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = subs.add_parser("classify", help="erasure-pattern class table of a pyramid code")
    c.add_argument("--nh", type=int, required=True)
    c.add_argument("--s", type=int, required=True)
    c.add_argument("--t", type=int, required=True)
    c.add_argument("--format", choices=("csv", "json"), default="csv")

    c = subs.add_parser("cost", help="exact (or formula) C_EH and C_HM")
    _system(c)
    c.add_argument("--variant", choices=VARIANTS, default="as-printed")
    _mc(c)

    c = subs.add_parser("simulate", help="Monte Carlo C_HM")
    _system(c)
    _mc(c)
    c.add_argument("--weight", choices=("exact", "upto"), default="exact")
    c.add_argument("--tie-break", choices=("rarest", "lowest"), default="rarest")
    c.add_argument("--jobs", type=int, default=1)

    c = subs.add_parser("tradeoff", help="C_EH vs C_HM for ARC, AMC and every pyramid t")
    _system(c, scheme=False)
    _mc(c)

    c = subs.add_parser("verify", help="check recovery of plans on sampled matrices")
    _system(c)
    _mc(c)
    c.add_argument("--weight", choices=("exact", "upto"), default="exact")
    return p


def _base_scheme(name: str) -> tuple[str, str | None]:
    if name.startswith("pyramid-"):
        return "pyramid", name[len("pyramid-") :]
    return name, None


def _strategy(args, tie_break="rarest") -> Strategy:
    scheme, _ = _base_scheme(args.scheme)
    return Strategy(scheme, args.nh, args.s, t=args.t, m=args.m, tie_break=tie_break)


def _cost(args) -> list[CostEstimate]:
    scheme, variant = _base_scheme(args.scheme)
    variant = variant or args.variant
    t_or_m = args.t if scheme == "pyramid" else (args.m if scheme == "amc" else None)
    params = SystemParams(args.ne, args.nh, args.s, scheme, t=args.t, m=args.m)
    c_eh = ceh(params)
    if scheme == "naive" or (scheme == "amc" and args.m == 0):
        return [CostEstimate(scheme, t_or_m, c_eh, Fraction(args.ne), "exact")]
    if scheme == "amc":
        if args.m != 1:
            raise BudgetExceeded("no closed form for m > 1 maxima; use 'simulate'")
        return [CostEstimate("amc", 1, c_eh, chm_amc_exact(params), "exact")]
    if scheme == "pyramid":
        code = build_pyramid(None, args.nh, args.s, args.t)
        mom = pyramid_moments(params, args.t, args.trials, args.seed, code=code)
        val, se = chm_pyramid_formula(params, args.t, variant, mom, code)
        return [CostEstimate(f"pyramid-{variant}", args.t, c_eh, val, "formula-variant", se, mom.trials, mom.seed)]
    raise BudgetExceeded(f"no exact expression for {scheme}; use 'simulate'")


def _run(args, out) -> int:
    if args.command == "classify":
        table = class_table(build_pyramid(None, args.nh, args.s, args.t))
        out.write(class_table_csv(table) if args.format == "csv" else class_table_json(table) + "\n")
        return EXIT_OK
    if args.command == "cost":
        out.write(estimates_csv(_cost(args)))
        return EXIT_OK
    if args.command == "tradeoff":
        params = SystemParams(args.ne, args.nh, args.s)
        out.write(estimates_csv(tradeoff(params, args.trials, args.seed)))
        return EXIT_OK

    scheme, _ = _base_scheme(args.scheme)
    params = SystemParams(args.ne, args.nh, args.s, scheme, t=args.t, m=args.m)
    cfg = SimConfig(params, args.trials, args.seed, args.weight)
    if args.command == "simulate":
        st = _strategy(args, args.tie_break)
        res = estimate_chm(cfg, st, n_jobs=args.jobs)
        t_or_m = args.t if scheme == "pyramid" else (args.m if scheme == "amc" else None)
        row = CostEstimate(st.label if scheme != "amc" else "amc", t_or_m, ceh(params), res.mean,
                           "monte-carlo", res.stderr, res.trials, res.seed)
        out.write(estimates_csv([row]))
        return EXIT_OK

    st = _strategy(args)
    for i in range(cfg.trials):
        M = trial_matrix(cfg, i)
        plan = st.plan(M)
        if not verify_recovery(plan, st.code, M.n_e):
            out.write(f"FAIL {st.label}: trial {i} of {cfg.trials} is not recoverable\n")
            out.write(json.dumps({"trial": i, "matrix": json.loads(M.to_json()),
                                  "plan": json.loads(plan.to_json(st.code.generator.array))}) + "\n")
            return EXIT_VERIFY
    out.write(f"PASS {st.label}: {cfg.trials} of {cfg.trials} sampled matrices recoverable (seed {cfg.seed})\n")
    return EXIT_OK


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        return _run(args, out)
    except BudgetExceeded as exc:
        print(f"cagg: {exc}", file=sys.stderr)
        print("cagg: hint: use 'cagg simulate' or raise CAGG_WORK_BUDGET", file=sys.stderr)
        return EXIT_BUDGET
    except (ParameterError, ValueError) as exc:
        print(f"cagg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CaggError as exc:
        print(f"cagg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
