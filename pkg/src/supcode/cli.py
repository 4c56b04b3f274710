"""Command line front end.

Exit codes: 0 ok, 1 a statistical check failed, 2 usage error, 3 file-format error.
Reports are ``key = value`` lines followed by aligned tables.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import analysis, formats, optimizer, simulator
from .bitkit import superimpose
from .codegen import CodeSpec, build_codebook
from .formats import FormatError
from .models import SourceModel


class UsageError(Exception):
    pass


def _kv(out, key, value):
    if isinstance(value, float):
        value = "%.6g" % value
    out.write("%s = %s\n" % (key, value))


def _read_text(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


# -- predict -----------------------------------------------------------------------

def cmd_predict(args, out):
    if args.required_n:
        for flag, val in (("-r", args.r), ("--s-min", args.s_min), ("--theta-max", args.theta_max)):
            if val is None:
                raise UsageError("--required-n needs %s" % flag)
        if not 0 < args.theta_max <= 1:
            raise UsageError("--theta-max must lie in (0, 1]")
        n_est = analysis.required_length(args.r, args.s_min, args.theta_max)
        q = analysis.optimal_q_binomial(args.r, args.s_min)
        n_exact = analysis.required_length_exact(args.r, args.s_min, args.theta_max)
        _kv(out, "scheme", "binomial")
        _kv(out, "r", args.r)
        _kv(out, "s_min", args.s_min)
        _kv(out, "theta_max", args.theta_max)
        _kv(out, "n", n_est)
        _kv(out, "n_exact", n_exact)
        _kv(out, "optimal_q", q)
        _kv(out, "theta_at_n_exact", analysis.false_drop_binomial(n_exact, args.r, args.s_min, q))
        return 0

    for flag, val in (("-n", args.n), ("-r", args.r), ("-s", args.s)):
        if val is None:
            raise UsageError("predict needs %s (or --required-n)" % flag)
    if args.n < 1 or args.r < 1 or args.s < 1:
        raise UsageError("-n, -r and -s must be positive")
    if args.scheme == "binomial":
        if args.w is not None or args.optimal_w:
            raise UsageError("-w/--optimal-w only apply to --scheme fixed")
        if args.q is not None and args.optimal_q:
            raise UsageError("give either -q or --optimal-q, not both")
        if args.q is not None and not 0 < args.q < 1:
            raise UsageError("-q must lie in (0, 1)")
        rep = analysis.design_binomial(args.n, args.r, args.s, args.q)
        _kv(out, "scheme", "binomial")
        _kv(out, "n", args.n)
        _kv(out, "r", args.r)
        _kv(out, "s", args.s)
        _kv(out, "q", rep.q)
        _kv(out, "optimal_q", analysis.optimal_q_binomial(args.r, args.s))
        _kv(out, "theta", rep.theta)
        _kv(out, "ln_theta", rep.log_theta)
        _kv(out, "approximation", "no")
    else:
        if args.q is not None or args.optimal_q:
            raise UsageError("-q/--optimal-q only apply to --scheme binomial")
        if args.w is None and not args.optimal_w:
            raise UsageError("--scheme fixed needs -w or --optimal-w")
        if args.w is not None and not 1 <= args.w <= args.n:
            raise UsageError("-w must lie in [1, n]")
        rep = analysis.design_fixed_weight(args.n, args.r, args.s, args.w)
        _kv(out, "scheme", "fixed")
        _kv(out, "n", args.n)
        _kv(out, "r", args.r)
        _kv(out, "s", args.s)
        _kv(out, "w", rep.w)
        _kv(out, "q", rep.q)
        _kv(out, "optimal_w", analysis.roberts_optimal_weight(args.n, args.r))
        _kv(out, "theta", rep.theta)
        _kv(out, "ln_theta", rep.log_theta)
        _kv(out, "approximation", "roberts")
        _kv(out, "theta_exact", rep.extra["theta_exact"])
        _kv(out, "target_variance_asymptotic",
            analysis.fixed_weight_variance_asymptotic(args.n, args.r, rep.q))
    _kv(out, "target_mean", rep.target_mean)
    _kv(out, "target_variance", rep.target_variance)
    if args.s_min is not None and args.theta_max is not None:
        _kv(out, "required_n", analysis.required_length(args.r, args.s_min, args.theta_max))
        _kv(out, "required_n_exact", analysis.required_length_exact(args.r, args.s_min, args.theta_max))
    return 0


# -- weights / gencode / encode / screen --------------------------------------------------

def cmd_weights(args, out):
    if args.n < 2:
        raise UsageError("-n must be at least 2")
    try:
        p = formats.loads_frequencies(_read_text(args.input))
    except ValueError as exc:
        raise UsageError("%s: %s" % (args.input, exc)) from None
    plan = optimizer.optimal_weights_independent(p, args.n)
    text = formats.dumps_weight_plan(args.n, plan.weights, args.seed)
    summary = sys.stderr
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        summary = out
    else:
        out.write(text)
    _kv(summary, "bits", len(plan.weights))
    _kv(summary, "max_p", plan.max_p)
    _kv(summary, "lambda_minus_2", plan.lambda_diag)
    _kv(summary, "predicted_F_n_minus_1", optimizer.plan_half_full(plan, p))
    _kv(summary, "excluded_bits", len(plan.excluded))
    _kv(summary, "clamped_bits", len(plan.bound_violations))
    return 0


def _specs_from_args(args, N, n):
    given = [x is not None for x in (args.w, args.q, args.weights_file)]
    if sum(given) != 1:
        raise UsageError("give exactly one of -w, -q, --weights-file")
    if args.weights_file:
        pn, weights, _ = formats.loads_weight_plan(_read_text(args.weights_file))
        if pn != n:
            raise UsageError("--weights-file is for n=%d, not -n %d" % (pn, n))
        if len(weights) != N:
            raise UsageError("--weights-file has %d weights, -N is %d" % (len(weights), N))
        try:
            return [CodeSpec.fixed(n, w) for w in weights]
        except ValueError as exc:
            raise UsageError("--weights-file: %s" % exc) from None
    try:
        if args.w is not None:
            if args.scheme != "fixed":
                raise UsageError("-w needs --scheme fixed")
            return [CodeSpec.fixed(n, args.w)] * N
        if args.scheme != "binomial":
            raise UsageError("-q needs --scheme binomial")
        return [CodeSpec.binomial(n, args.q)] * N
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_gencode(args, out):
    if args.n < 1 or args.N < 1:
        raise UsageError("-n and -N must be positive")
    specs = _specs_from_args(args, args.N, args.n)
    book = build_codebook(specs, args.seed)
    formats.write_codebook(args.output, book)
    _kv(out, "n", book.n)
    _kv(out, "N", book.N)
    _kv(out, "seed", book.seed)
    _kv(out, "mean_word_weight", sum(w.weight for w in book.words) / book.N)
    return 0


def cmd_encode(args, out):
    book = formats.read_codebook(args.codebook)
    N, records = formats.read_records(args.records)
    if N != book.N:
        raise UsageError("records have N=%d but the codebook has N=%d" % (N, book.N))
    sigs = [superimpose(book.words, r) for r in records]
    formats.write_signatures(args.output, book.n, sigs)
    _kv(out, "records", len(sigs))
    _kv(out, "n", book.n)
    if sigs:
        _kv(out, "mean_signature_weight", sum(s.weight for s in sigs) / len(sigs))
    return 0


def cmd_screen(args, out):
    n, sigs = formats.read_signatures(args.signatures)
    book = formats.read_codebook(args.codebook)
    if n != book.n:
        raise UsageError("signatures have n=%d but the codebook has n=%d" % (n, book.n))
    if args.query_file is not None:
        lines = _read_text(args.query_file).split("\n")
        line = lines[0] if lines else ""
    else:
        line = args.query
    try:
        query = formats.parse_record_line(line, book.N, "query")
    except FormatError as exc:
        raise UsageError(str(exc)) from None
    qsig = superimpose(book.words, query)
    hits = [i for i, s in enumerate(sigs) if s >= qsig]
    out.write("".join("%d\n" % i for i in hits))
    err = sys.stderr
    _kv(err, "query_signature_weight", qsig.weight)
    _kv(err, "candidates", len(hits))
    _kv(err, "records", len(sigs))
    if sigs:
        hist = np.bincount([s.weight for s in sigs], minlength=n + 1) / len(sigs)
        target = optimizer.isotropize(hist, n)
        _kv(err, "expected_candidates", analysis.expected_candidates(target, qsig.weight, len(sigs)))
    return 0


# -- simulate ---------------------------------------------------------------------------

def _source_from_args(args, prefix, N):
    weight = getattr(args, prefix + "_weight")
    probs = getattr(args, prefix + "_probs")
    hist = getattr(args, prefix + "_hist")
    flag = "--" + prefix
    if sum(x is not None for x in (weight, probs, hist)) != 1:
        raise UsageError("give exactly one of %s-weight, %s-probs, %s-hist" % (flag, flag, flag))
    try:
        if weight is not None:
            return SourceModel.fixed_weight(N, weight)
        if probs is not None:
            p = formats.loads_frequencies(_read_text(probs))
            if len(p) != N:
                raise UsageError("%s-probs has %d lines, -N is %d" % (flag, len(p), N))
            return SourceModel.independent(p)
        return SourceModel.empirical(N, formats.loads_histogram(_read_text(hist)))
    except ValueError as exc:
        raise UsageError("%s: %s" % (flag, exc)) from None


def cmd_simulate(args, out):
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.n < 1 or args.N < 1:
        raise UsageError("-n and -N must be positive")
    source = _source_from_args(args, "source", args.N)
    specs = _specs_from_args(args, args.N, args.n)
    cfg = simulator.SimConfig(trials=args.trials, seed=args.seed, source=source, specs=specs,
                              regenerate_codebook=not args.fixed_codebook)
    if args.experiment == "target":
        res = simulator.run_target_experiment(cfg)
    else:
        query = _source_from_args(args, "query", args.N)
        if args.estimator == "conditional" and not args.fixed_codebook:
            raise UsageError("--estimator conditional needs --fixed-codebook")
        res = simulator.run_false_drop_experiment(cfg, query, args.estimator)

    _kv(out, "experiment", args.experiment)
    _kv(out, "trials", res.trials)
    _kv(out, "seed", args.seed)
    _kv(out, "codebook", "fixed" if args.fixed_codebook else "regenerated")
    _kv(out, "mean_weight", res.mean)
    _kv(out, "variance", res.variance)
    _kv(out, "G1", res.empirical_G1)
    if res.empirical_theta is not None:
        _kv(out, "theta", res.empirical_theta)
        _kv(out, "theta_se", res.theta_se)
        for key in ("theta_nonmatch", "theta_disjoint", "theta_predicted",
                    "theta_closed_form", "theta_roberts"):
            if key in res.extra:
                _kv(out, key, float(res.extra[key]))
    if not args.compare:
        return 0
    out.write("\n%-16s %14s %14s %12s %8s\n" % ("quantity", "predicted", "observed", "se", "z"))
    for c in res.comparisons:
        out.write("%-16s %14.6g %14.6g %12.4g %8.2f\n" % (c.name, c.predicted, c.observed, c.se, c.z))
    failed = res.failures()
    _kv(out, "max_abs_z", max((abs(c.z) for c in res.comparisons), default=0.0))
    _kv(out, "status", "FAIL" if failed else "ok")
    return 1 if failed else 0


# -- parser -------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="supcode", description="Superimposed random coding toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="false-drop and signature statistics for a design")
    p.add_argument("--scheme", choices=("binomial", "fixed"), default="binomial")
    p.add_argument("-n", type=int, help="signature length")
    p.add_argument("-r", type=int, help="record (source) weight")
    p.add_argument("-s", type=int, help="query (source) weight")
    p.add_argument("-q", type=float, help="binomial parameter: a code bit is 0 with probability q")
    p.add_argument("-w", type=int, help="fixed code weight")
    p.add_argument("--optimal-q", action="store_true")
    p.add_argument("--optimal-w", action="store_true")
    p.add_argument("--required-n", action="store_true", help="only compute the required length")
    p.add_argument("--s-min", type=int)
    p.add_argument("--theta-max", type=float)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("weights", help="per-bit code weights from bit frequencies")
    p.add_argument("input", help="one bit probability per line")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_weights)

    def code_flags(p):
        p.add_argument("-n", type=int, required=True)
        p.add_argument("-N", type=int, required=True)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--scheme", choices=("fixed", "binomial"), default="fixed")
        p.add_argument("-w", type=int)
        p.add_argument("-q", type=float)
        p.add_argument("--weights-file")

    p = sub.add_parser("gencode", help="generate a codebook file")
    code_flags(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gencode)

    p = sub.add_parser("encode", help="encode a record file into a signature file")
    p.add_argument("codebook")
    p.add_argument("records")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("screen", help="indices of records whose signature covers the query's")
    p.add_argument("signatures")
    p.add_argument("codebook")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--query", help="ascending source positions, space separated ('' = empty)")
    g.add_argument("--query-file")
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("simulate", help="Monte Carlo check of the predictions")
    code_flags(p)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--experiment", choices=("target", "false-drop"), default="target")
    p.add_argument("--fixed-codebook", action="store_true",
                   help="one codebook for all trials instead of a fresh one per trial")
    p.add_argument("--estimator", choices=("pairs", "conditional"), default="pairs")
    for who in ("source", "query"):
        p.add_argument("--%s-weight" % who, type=int)
        p.add_argument("--%s-probs" % who)
        p.add_argument("--%s-hist" % who)
    p.add_argument("--compare", action="store_true", help="print predictions and fail on |z| > 4")
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except UsageError as exc:
        parser.exit(2, "supcode %s: error: %s\n" % (args.command, exc))
    except FormatError as exc:
        parser.exit(3, "supcode %s: format error: %s\n" % (args.command, exc))
    except OSError as exc:
        parser.exit(2, "supcode %s: %s\n" % (args.command, exc))


if __name__ == "__main__":
    sys.exit(main())
