"""Command-line front end.

    coopbc evaluate --spec noiseless8.json
    coopbc oracle   --spec noiseless8.json --format structured
    coopbc search   --spec pure_noise.json --seed 3
    coopbc reduce   --spec dsbs_bsc.json --mode noncoop
    coopbc simulate --spec dsbs_bsc.json --budget 100000
    coopbc batch    --spec a.json --spec b.json --out runs.csv

Exit codes: 0 report produced, 2 invalid input, 3 budget exceeded,
4 two computations of the same quantity disagree.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .errors import BudgetExceeded, InconsistencyError, ValidationError
from .fme import feasible
from .io import SpecError, dumps, parse_spec, spec_to_dict
from .model import full_joint
from .prob import DEFAULT_STATE_CAP
from .reductions import conference_inputs, noncoop_inputs
from .region import (
    MARGIN_NAMES,
    RateVector,
    raw_system,
    reduction_check_conferencing,
    reduction_check_noncooperative,
    theorem1_margins,
)
from .search import SearchConfig, search
from .sim import SimConfig, run_trials

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_INCONSISTENT = 0, 2, 3, 4
CSV_COLUMNS = ("instance_id", "m1", "m2", "m3", "m4", "c1", "c2", "admissible",
               "oracle_feasible", "max_reduction_dev", "sim_error_prob", "seed")
FEASIBLE_SLACK = 1e-9
REDUCTION_TOL = 1e-9
STORED_TOL = 1e-9
U64 = 2**64


def _u64(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < U64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("budget must be positive")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_u64, help="overrides the spec file's seed (default 0)")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("csv", "pretty", "structured"), default=None)
    common.add_argument("--renormalize", choices=("on", "off"), default="off",
                        help="rescale tables whose sums are off by at most 1e-6")
    common.add_argument("--budget", type=_positive,
                        help="simulate: per-operation work budget; other commands: joint state-space cap")

    p = argparse.ArgumentParser(prog="coopbc", description="Admissibility of correlated sources "
                                "over a broadcast channel with cooperating receivers.")
    p.add_argument("--version", action="version", version=f"coopbc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("evaluate", "margins of the spec's auxiliary kernels"),
        ("oracle", "raw rate system, solved by elimination and by LP"),
        ("search", "look for admissible auxiliary kernels"),
        ("reduce", "special-case reduction check"),
        ("simulate", "Monte Carlo run of the block-Markov scheme"),
    ):
        c = sub.add_parser(name, parents=[common], help=desc)
        c.add_argument("--spec", required=True)
        if name == "reduce":
            c.add_argument("--mode", choices=("noncoop", "conference"), default="noncoop")
    b = sub.add_parser("batch", parents=[common], help="one CSV row per spec file")
    b.add_argument("--spec", action="append", required=True)
    return p


# -- shared pieces ----------------------------------------------------------


class _Ctx:
    def __init__(self, args, spec):
        self.args = args
        self.spec = spec
        if args.seed is not None:
            self.seed = args.seed
        elif spec.seed is not None:
            self.seed = spec.seed
        else:
            self.seed = 0
        self.cap = args.budget if args.budget is not None and args.command != "simulate" else DEFAULT_STATE_CAP

    def config(self):
        cfg = {"spec": self.spec.to_dict(), "seed": self.seed, "renormalize": self.args.renormalize}
        if self.args.budget is not None:
            cfg["budget"] = self.args.budget
        if getattr(self.args, "mode", None):
            cfg["mode"] = self.args.mode
        return cfg

    def need_aux(self, what):
        if self.spec.aux is None:
            raise SpecError("auxiliary", f"missing ({what} needs auxiliary kernels)")
        return self.spec.aux


def _margins(ctx, aux):
    return theorem1_margins(full_joint(ctx.spec.problem, aux, ctx.cap))


def _check_stored(spec, report):
    stored = spec.stored_margins
    if not stored:
        return None
    dev = max(abs(stored[k] - getattr(report, k)) for k in MARGIN_NAMES if k in stored)
    if dev > STORED_TOL:
        raise InconsistencyError(f"stored margins differ from recomputed ones by {dev:.3g}")
    return dev


def _oracle(ctx, aux):
    system = raw_system(full_joint(ctx.spec.problem, aux, ctx.cap))
    ok_fme, wit_fme = feasible(system, FEASIBLE_SLACK, method="fme")
    ok_lp, wit_lp = feasible(system, FEASIBLE_SLACK, method="lp")
    if ok_fme != ok_lp:
        raise InconsistencyError(f"elimination says feasible={ok_fme}, LP says {ok_lp}")
    return system, ok_fme, wit_fme, wit_lp


def _noncoop(ctx):
    problem, aux = noncoop_inputs(ctx.spec.problem, ctx.spec.aux)
    rep = reduction_check_noncooperative(problem, aux)
    if rep.max_deviation > REDUCTION_TOL:
        raise InconsistencyError(f"non-cooperative reduction deviates by {rep.max_deviation:.3g}")
    return rep


def _sim_config(ctx):
    blk = ctx.spec.simulate
    if blk is None:
        raise SpecError("simulate", "missing (simulate needs a simulate block)")
    kw = {k: v for k, v in blk.items() if k != "rates"}
    if "n" not in kw:
        raise SpecError("simulate.n", "missing")
    if ctx.args.budget is not None:
        kw["work_budget"] = ctx.args.budget
    return SimConfig(rates=RateVector(**blk.get("rates", {})), seed=ctx.seed, **kw)


def _row(instance_id, seed, margins=None, oracle_ok=None, dev=None, sim_p=None):
    row = dict.fromkeys(CSV_COLUMNS)
    row["instance_id"] = instance_id
    row["seed"] = seed
    if margins is not None:
        row.update({k: getattr(margins, k) for k in MARGIN_NAMES})
        row["admissible"] = margins.admissible
    row["oracle_feasible"] = oracle_ok
    row["max_reduction_dev"] = dev
    row["sim_error_prob"] = sim_p
    return row


# -- commands ---------------------------------------------------------------


def cmd_evaluate(ctx):
    aux = ctx.need_aux("evaluate")
    m = _margins(ctx, aux)
    dev = _check_stored(ctx.spec, m)
    report = {"margins": m.as_dict(), "min_margin": m.min_margin}
    if dev is not None:
        report["stored_margin_deviation"] = dev
    return report, [_row(ctx.spec.name, ctx.seed, m)]


def cmd_oracle(ctx):
    aux = ctx.need_aux("oracle")
    m = _margins(ctx, aux)
    system, ok, wit, wit_lp = _oracle(ctx, aux)
    report = {
        "margins": m.as_dict(),
        "constraints": [
            {"tag": c.tag, "coeffs": dict(zip(RateVector.names(), c.coeffs)), "bound": c.bound,
             "strict": c.strict, "text": c.describe()}
            for c in system.constraints
        ],
        "slack": FEASIBLE_SLACK,
        "feasible": ok,
        "witness": wit.as_dict() if wit is not None else None,
        "witness_lp": wit_lp.as_dict() if wit_lp is not None else None,
        "agrees_with_margins": ok == m.admissible,
    }
    return report, [_row(ctx.spec.name, ctx.seed, m, ok)]


def cmd_search(ctx):
    cfg = SearchConfig(seed=ctx.seed, cap=ctx.cap, **ctx.spec.search)
    res = search(ctx.spec.problem, cfg)
    res.best.verify(ctx.spec.problem)
    best = res.best
    report = {
        "found": res.found,
        "margins": best.report.as_dict(),
        "restart_objectives": [t.objective for t in res.restarts],
        "restart_accepted": [t.accepted for t in res.restarts],
        # a complete spec: feed it back to `evaluate` or `simulate`
        "certificate": spec_to_dict(ctx.spec.problem, best.kernels, seed=ctx.seed,
                                    name=f"{ctx.spec.name}-certificate",
                                    stored_margins=dict(zip(MARGIN_NAMES, best.report.values))),
    }
    return report, [_row(ctx.spec.name, ctx.seed, best.report)]


def cmd_reduce(ctx):
    if ctx.args.mode == "noncoop":
        rep = _noncoop(ctx)
    else:
        blk = ctx.spec.reduce
        c12, c21 = blk.get("c12", 1.0), blk.get("c21", 1.0)
        problem, aux, mode = conference_inputs(ctx.spec.problem, ctx.spec.aux, c12, c21,
                                               blk.get("links", "auto"))
        rep = reduction_check_conferencing(problem, aux, c12, c21, mode=mode)
        if rep.max_deviation > REDUCTION_TOL:
            raise InconsistencyError(f"conferencing reduction deviates by {rep.max_deviation:.3g}")
    report = {"reduction": rep.as_dict()}
    return report, [_row(ctx.spec.name, ctx.seed, rep.theorem, dev=rep.max_deviation)]


def cmd_simulate(ctx):
    aux = ctx.need_aux("simulate")
    cfg = _sim_config(ctx)
    m = _margins(ctx, aux)
    res = run_trials(ctx.spec.problem, aux, cfg)
    report = {"margins": m.as_dict(), "simulation": res.as_dict()}
    return report, [_row(ctx.spec.name, ctx.seed, m, sim_p=res.error_prob)]


def _batch_row(ctx):
    spec = ctx.spec
    if spec.aux is not None:
        aux = spec.aux
        m = _margins(ctx, aux)
        _check_stored(spec, m)
    else:
        res = search(spec.problem, SearchConfig(seed=ctx.seed, cap=ctx.cap, **spec.search))
        aux, m = res.best.kernels, res.best.report
    _, ok, _, _ = _oracle(ctx, aux)
    dev = _noncoop(ctx).max_deviation
    sim_p = None
    if spec.simulate is not None:
        sim_p = run_trials(spec.problem, aux, _sim_config(ctx)).error_prob
    return _row(spec.name, ctx.seed, m, ok, dev, sim_p)


# -- output -----------------------------------------------------------------


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_csv_value(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _pretty_value(v):
    if v is None:
        return "-"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.9f}"
    return str(v)


def format_pretty(command, rows, report):
    lines = []
    for r in rows:
        width = max(len(c) for c in CSV_COLUMNS)
        lines += [f"{c:<{width}}  {_pretty_value(r[c])}" for c in CSV_COLUMNS]
        lines.append("")
    if command == "oracle":
        lines.append("constraints (rates on the left, bound on the right):")
        lines += [f"  [{c['tag']}] {c['text']}" for c in report["constraints"]]
        wit = report["witness"]
        if wit:
            lines.append("witness: " + ", ".join(f"{k}={v:.9f}" for k, v in wit.items()))
    elif command == "simulate":
        sim = report["simulation"]
        lines.append(f"block errors {sim['block_errors']} / {sim['decoded_blocks']}"
                     f"  95% CI [{sim['ci95'][0]:.9f}, {sim['ci95'][1]:.9f}]")
        for m in ("1", "2"):
            oc = sim["outcomes"][m]
            lines.append(f"receiver {m}: " + ", ".join(f"{k}={v}" for k, v in oc.items()))
    elif command == "search":
        lines.append("found: " + ("yes" if report["found"] else "no"))
        lines.append("restart objectives: " + ", ".join(f"{v:.9f}" for v in report["restart_objectives"]))
    elif command == "reduce":
        red = report["reduction"]
        lines.append(f"mode {red['mode']}")
        for k, v in red["deviations"].items():
            lines.append(f"  |{k} - reference| = {v:.3e}")
    return "\n".join(lines).rstrip() + "\n"


COMMANDS = {
    "evaluate": cmd_evaluate,
    "oracle": cmd_oracle,
    "search": cmd_search,
    "reduce": cmd_reduce,
    "simulate": cmd_simulate,
}


def run(args):
    """Execute parsed ``args``; returns the output text. Raises library errors."""
    renorm = args.renormalize == "on"
    fmt = args.format
    if args.command == "batch":
        rows, configs = [], []
        for path in args.spec:
            ctx = _Ctx(args, parse_spec(path, renorm))
            rows.append(_batch_row(ctx))
            configs.append(ctx.config())
        fmt = fmt or "csv"
        if fmt == "csv":
            return format_csv(rows)
        if fmt == "pretty":
            return format_pretty("batch", rows, {})
        return dumps({"tool": {"name": "coopbc", "version": __version__}, "command": "batch",
                      "config": configs, "rows": rows})
    ctx = _Ctx(args, parse_spec(args.spec, renorm))
    report, rows = COMMANDS[args.command](ctx)
    fmt = fmt or "pretty"
    if fmt == "csv":
        return format_csv(rows)
    if fmt == "pretty":
        return format_pretty(args.command, rows, _plain_report(report))
    full = {"tool": {"name": "coopbc", "version": __version__}, "command": args.command,
            "config": ctx.config(), "summary": rows[0]}
    full.update(report)
    return dumps(full)


def _plain_report(report):
    return json.loads(dumps(report))


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        text = run(args)
    except ValidationError as e:
        print(f"coopbc: invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID
    except BudgetExceeded as e:
        print(f"coopbc: budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except InconsistencyError as e:
        print(f"coopbc: internal inconsistency: {e}", file=sys.stderr)
        return EXIT_INCONSISTENT
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
