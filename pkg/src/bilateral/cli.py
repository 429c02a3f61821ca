"""Command-line interface: ``bilateral {analyze,bf,mle,simstudy,sample}``.

Exit status is 0 on success, 1 when a statistical procedure refuses (for
example a Wald interval at a boundary estimate) and 2 for input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from .bayes_factor import bf_gamma, bf_lambda
from .mle import mle_reduced, mle_saturated
from .model import BilateralTable, TableError
from .posterior import derive_estimands, sample_reduced, sample_saturated
from .priors import make_prior
from .simstudy import METHODS, build_grid, coverage_report, run_grid, to_csv
from .summarize import summarize

FORMAT_ENV = "BILATERAL_FORMAT"
FORMATS = ("json", "csv", "text")

EXIT_OK, EXIT_REFUSED, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _parse_counts(text: str, what: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"--{what}: expected three comma-separated integers, got {text!r}") from None
    if len(vals) != 3:
        raise InputError(f"--{what}: expected three counts, got {len(vals)}")
    return vals


def _check_column(col, where: str) -> list[int]:
    if not isinstance(col, list) or len(col) != 3:
        raise InputError(f"{where}: expected a list of three counts")
    for h, x in enumerate(col):
        if isinstance(x, bool) or not isinstance(x, int):
            raise InputError(f"{where}[{h}]: expected an integer, got {x!r}")
    return col


def _load_json_table(path: str, text: str) -> BilateralTable:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be an object with 'control' and 'treatment'")
    for key in ("control", "treatment"):
        if key not in doc:
            raise InputError(f"{path}: missing field '{key}'")
    return BilateralTable.from_groups(
        _check_column(doc["control"], f"{path}: control"),
        _check_column(doc["treatment"], f"{path}: treatment"),
    )


def _load_csv_table(path: str, text: str) -> BilateralTable:
    rows = list(csv.reader(io.StringIO(text)))
    header = [h.strip() for h in rows[0]] if rows else []
    if header != ["group", "cured0", "cured1", "cured2"]:
        raise InputError(f"{path}: line 1: header must be 'group,cured0,cured1,cured2'")
    cols = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise InputError(f"{path}: line {lineno}: expected 4 fields, got {len(row)}")
        group = row[0].strip()
        if group not in ("control", "treatment"):
            raise InputError(f"{path}: line {lineno}: group must be 'control' or 'treatment', got {group!r}")
        counts = []
        for name, x in zip(header[1:], row[1:]):
            try:
                counts.append(int(x))
            except ValueError:
                raise InputError(f"{path}: line {lineno}, field {name}: expected an integer, got {x!r}") from None
        cols[group] = counts
    for key in ("control", "treatment"):
        if key not in cols:
            raise InputError(f"{path}: missing row for group '{key}'")
    return BilateralTable.from_groups(cols["control"], cols["treatment"])


def load_table(args) -> BilateralTable:
    try:
        if args.table:
            try:
                with open(args.table, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise InputError(f"cannot read table file {args.table!r}: {exc.strerror}") from None
            if args.table.lower().endswith(".csv"):
                return _load_csv_table(args.table, text)
            return _load_json_table(args.table, text)
        if args.control and args.treatment:
            return BilateralTable.from_groups(_parse_counts(args.control, "control"), _parse_counts(args.treatment, "treatment"))
    except TableError as exc:
        raise InputError(f"invalid table ({exc.field}): {exc}") from None
    raise InputError("give --table FILE or both --control and --treatment")


def _require_seed(args):
    if args.seed is not None:
        return args.seed
    if sys.stdin.isatty():
        print("warning: no --seed given; using 0", file=sys.stderr)
        return 0
    raise InputError("--seed is required when not running interactively")


def _prior(args, table: BilateralTable):
    if args.prior == "custom":
        shapes = {}
        for item in args.shape or []:
            key, _, val = item.partition("=")
            try:
                shapes[key] = float(val)
            except ValueError:
                raise InputError(f"--shape: cannot parse {item!r}; expected NAME=VALUE") from None
        return make_prior("custom", r=table.r, **shapes)
    return make_prior(args.prior, r=table.r)


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _clean(x):
    """JSON-safe copy: non-finite floats become None, tuples become lists."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def _fmt(x, nd=3) -> str:
    return "NA" if x is None else f"{x:.{nd}f}"


# ---------------------------------------------------------------- analyze


def _draws(args, table):
    prior = _prior(args, table)
    if args.model == "reduced":
        return sample_reduced(table, prior, args.draws, args.seed, args.scheme, threads=args.threads)
    return sample_saturated(table, prior, args.draws, args.seed, threads=args.threads)


def cmd_analyze(args) -> tuple[str, int]:
    table = load_table(args)
    args.seed = _require_seed(args)
    thresholds = args.threshold or (["delta>0", "delta<0"] + (["delta_gamma<0"] if args.model == "saturated" else []))
    ds = _draws(args, table)
    summ = summarize(ds, args.level, thresholds)
    doc = _clean(
        {
            "command": "analyze",
            "table": table.to_dict(),
            "model": args.model,
            "prior": ds.prior.to_dict(),
            "scheme": ds.scheme,
            "seed": args.seed,
            "draws": args.draws,
            "acceptance_rate": ds.acceptance_rate,
            "summary": summ.to_dict(),
            "warnings": summ.notes,
        }
    )
    if args.format == "json":
        return _dump_json(doc), EXIT_OK
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["estimand", "mean", "sd", "et_lower", "et_upper", "hpd_lower", "hpd_upper"])
        for name, s in summ.estimands.items():
            w.writerow([name, repr(s.mean), repr(s.sd), *map(repr, s.equal_tailed), *map(repr, s.hpd)])
        return buf.getvalue(), EXIT_OK
    pct = round(100 * args.level)
    head = ", ".join(f"P({k}|D)={v:.3f}" for k, v in summ.tail_probabilities.items())
    lines = [
        f"{args.model} model, {ds.prior.kind} prior, M={args.draws}, seed={args.seed}",
        f"{head}, DIC={_fmt(summ.dic)}, pD={_fmt(summ.p_d)}",
        f"{'':<12}{'mean':>9}{'std':>9}   {pct}% HPD",
    ]
    for name, s in summ.estimands.items():
        lines.append(f"{name:<12}{s.mean:>9.3f}{s.sd:>9.3f}   ({s.hpd[0]:.3f}, {s.hpd[1]:.3f})")
    for note in summ.notes:
        lines.append(f"warning: {note}")
    return "\n".join(lines) + "\n", EXIT_OK


# ---------------------------------------------------------------- bf


def cmd_bf(args) -> tuple[str, int]:
    table = load_table(args)
    if args.prior == "jeffreys":
        args.seed = _require_seed(args)
    seed = args.seed if args.seed is not None else 0
    lam = bf_lambda(table, args.prior, args.draws, seed)
    gam = bf_gamma(table, args.prior, args.draws, seed)
    doc = {
        "command": "bf",
        "table": table.to_dict(),
        "prior": args.prior,
        "BF_lambda": lam.to_dict(),
        "BF_gamma": gam.to_dict(),
    }
    if args.prior == "jeffreys":
        doc.update(seed=seed, draws=args.draws)
    if args.format == "json":
        return _dump_json(_clean(doc)), EXIT_OK
    if args.format == "csv":
        rows = ["name,value,method,mc_se"]
        rows += [f"{n},{r.value!r},{r.method},{r.mc_se!r}" for n, r in (("BF_lambda", lam), ("BF_gamma", gam))]
        return "\n".join(rows) + "\n", EXIT_OK
    return f"BF_lambda={lam.value:.3f}, BF_gamma={gam.value:.3f}, method={lam.method}\n", EXIT_OK


# ---------------------------------------------------------------- mle


def cmd_mle(args) -> tuple[str, int]:
    table = load_table(args)
    fit = (mle_reduced if args.model == "reduced" else mle_saturated)(table, args.adjust, args.level)
    doc = _clean({"command": "mle", "table": table.to_dict(), "result": fit.to_dict()})
    missing = [k for k, v in fit.intervals.items() if v is None]
    code = EXIT_REFUSED if missing else EXIT_OK
    if missing:
        doc["refused"] = f"Wald intervals unavailable (boundary estimates): {', '.join(missing)}"
    if args.format == "json":
        return _dump_json(doc), code
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["estimand", "estimate", "se", "lower", "upper", "scale"])
        for name, value in fit.estimates.items():
            iv = fit.intervals.get(name)
            if iv is None:
                w.writerow([name, repr(value), "", "", "", ""])
            else:
                w.writerow([name, repr(value), repr(iv.sd), repr(iv.lower), repr(iv.upper), iv.scale])
        return buf.getvalue(), code
    pct = round(100 * args.level)
    lines = [
        f"{args.model} model MLE (adjust={args.adjust})",
        f"AIC={fit.aic:.3f}, BIC={fit.bic:.3f}, loglik={fit.loglik:.3f}",
        f"{'':<12}{'mle':>22}{'std':>9}   {pct}% CI",
    ]
    for name, value in fit.estimates.items():
        iv = fit.intervals.get(name)
        flag = " (boundary)" if fit.boundary.get(name) else ""
        if iv is None:
            lines.append(f"{name:<12}{value!r:>22}{'NA':>9}   unavailable{flag}")
        else:
            lines.append(f"{name:<12}{value!r:>22}{iv.sd:>9.3f}   ({iv.lower:.3f}, {iv.upper:.3f})")
    if missing:
        lines.append(doc["refused"])
    return "\n".join(lines) + "\n", code


# ---------------------------------------------------------------- simstudy


def cmd_simstudy(args) -> tuple[str, int]:
    args.seed = _require_seed(args)
    methods = tuple(args.methods.split(",")) if args.methods else METHODS
    bad = set(methods) - set(METHODS)
    if bad:
        raise InputError(f"--methods: unknown {sorted(bad)}; choose from {', '.join(METHODS)}")
    if args.reps < 0:
        raise InputError("--reps must be non-negative")
    try:
        build_grid(args.delta, args.m)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    sums = run_grid(args.delta, args.m, args.reps, args.level, methods, args.bayes_draws, args.seed, args.threads)
    if args.format == "csv":
        return to_csv(sums), EXIT_OK
    rep = coverage_report(sums, args.level)
    if args.format == "text":
        return rep.format() + "\n", EXIT_OK
    doc = {
        "command": "simstudy",
        "delta": args.delta,
        "m": args.m,
        "reps": args.reps,
        "level": args.level,
        "seed": args.seed,
        "methods": list(methods),
        "coverage_report": [
            {"method": k[0], "parameter": k[1], "within_0.01": rep.within[k], "above_-0.02": rep.above[k]}
            for k in rep.within
        ],
        "cells": [row for s in sums for row in s.rows()],
    }
    return _dump_json(_clean(doc)), EXIT_OK


# ---------------------------------------------------------------- sample


def cmd_sample(args) -> tuple[str, int]:
    table = load_table(args)
    args.seed = _require_seed(args)
    ds = _draws(args, table)
    est = derive_estimands(ds)
    cols = {"u": ds.u, "v": ds.v}
    if ds.model == "reduced":
        cols["gamma"] = ds.gamma
    else:
        cols["gamma0"], cols["gamma1"] = ds.gamma0, ds.gamma1
    cols.update(lambda0=est.lambda0, lambda1=est.lambda1, delta=est.delta, risk_ratio=est.risk_ratio, odds_ratio=est.odds_ratio)
    cols["weight"] = ds.weights
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(cols))
    for row in zip(*cols.values()):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue(), EXIT_OK


# ---------------------------------------------------------------- parser


def _positive_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {val}")
    return val


def _level(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0 < val < 1:
        raise argparse.ArgumentTypeError(f"level must lie in (0, 1), got {val}")
    return val


def _seed(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return val


def build_parser() -> argparse.ArgumentParser:
    default_format = os.environ.get(FORMAT_ENV, "json")
    if default_format not in FORMATS:
        default_format = "json"

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("table")
    src.add_argument("--table", help="JSON {control: [..], treatment: [..]} or CSV group,cured0,cured1,cured2")
    src.add_argument("--control", help="inline control counts m00,m10,m20")
    src.add_argument("--treatment", help="inline treatment counts m01,m11,m21")
    common.add_argument("--format", choices=FORMATS, default=default_format)
    common.add_argument("--seed", type=_seed)
    common.add_argument("--threads", type=_positive_int, default=1)

    p = argparse.ArgumentParser(prog="bilateral", description="Objective Bayesian and likelihood inference for 3x2 bilateral tables.")
    sub = p.add_subparsers(dest="command", required=True)

    def posterior_opts(sp):
        sp.add_argument("--model", choices=("reduced", "saturated"), default="reduced")
        sp.add_argument("--prior", choices=("uniform", "jeffreys", "reference", "custom"), default="jeffreys")
        sp.add_argument("--shape", action="append", metavar="NAME=VALUE", help="custom prior hyperparameter (repeatable)")
        sp.add_argument("--draws", type=_positive_int, default=100_000)
        sp.add_argument("--scheme", choices=("direct", "importance", "rejection"))

    sp = sub.add_parser("analyze", parents=[common], help="posterior summaries")
    posterior_opts(sp)
    sp.add_argument("--level", type=_level, default=0.95)
    sp.add_argument("--threshold", action="append", help="tail probability such as 'delta>0' (repeatable)")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("sample", parents=[common], help="dump raw posterior draws as CSV")
    posterior_opts(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("bf", parents=[common], help="Bayes factors BF_lambda and BF_gamma")
    sp.add_argument("--prior", choices=("jeffreys", "reference"), default="reference")
    sp.add_argument("--draws", type=_positive_int, default=1_000_000)
    sp.set_defaults(func=cmd_bf)

    sp = sub.add_parser("mle", parents=[common], help="MLEs with Wald intervals")
    sp.add_argument("--model", choices=("reduced", "saturated"), default="reduced")
    sp.add_argument("--adjust", choices=("none", "add-half"), default="none")
    sp.add_argument("--level", type=_level, default=0.95)
    sp.set_defaults(func=cmd_mle)

    sp = sub.add_parser("simstudy", parents=[common], help="coverage / width / MSE simulation over one delta grid")
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--m", type=int, required=True, help="per-group sample size")
    sp.add_argument("--reps", type=int, default=2000)
    sp.add_argument("--level", type=_level, default=0.90)
    sp.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
    sp.add_argument("--bayes-draws", type=_positive_int, default=1000)
    sp.set_defaults(func=cmd_simstudy)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        out, code = args.func(args)
    except (InputError, ValueError) as exc:
        # library ValueErrors signal an invalid request (bad shapes, scheme/prior mismatch)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        sys.stdout.write(out)
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return code


if __name__ == "__main__":
    sys.exit(main())
