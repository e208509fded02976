"""Command-line front end.

    equidist generate     --seq SPEC --first A --last B [--frac]
    equidist discrepancy  --seq SPEC --n N [--first A] [--method fast|oracle|star|binned]
    equidist weyl         --seq SPEC (--h H [H ...] | --hmax H) --N N [N ...]
    equidist convergents  --theta T (--qcap Q | --eps E)
    equidist certify      --seq SPEC --eps E --start (N|auto) --end N [--segments K] [--C C]
    equidist lemmas       --suite all|L3,L5,... --trials T --seed S [S ...]

Every subcommand takes --output, --out and --threads (falls back to
$EQUIDIST_THREADS).  Exit codes: 0 success, 1 computation failure, 2 usage.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from fractions import Fraction

from . import certifier, lemmalab
from ._jsonio import dumps
from .diophantine import convergents, select_convergent
from .discrepancy import BinnedDiscrepancy, extreme_discrepancy, extreme_discrepancy_oracle, star_discrepancy
from .seqlab import HypothesisViolation, SequenceError, generate, generate_fractional, parse_spec
from .seqlab.expr import Expr, ExprError
from .weyl import weyl_profile

UINT64 = (1 << 64) - 1


class ComputationFailure(RuntimeError):
    pass


# -- argument types ----------------------------------------------------------------

def _int(text: str) -> int:
    """Integers, also written as 1e6 or 10**31."""
    t = text.strip().replace("_", "")
    try:
        if "**" in t:
            b, _, e = t.partition("**")
            return int(b) ** int(e)
        f = Fraction(t)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if f.denominator != 1:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(f)


def _positive_int(text: str) -> int:
    v = _int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _nonneg_int(text: str) -> int:
    v = _int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return v


def _seed(text: str) -> int:
    v = _int(text)
    if not 0 <= v <= UINT64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _spec(text: str):
    try:
        return parse_spec(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _eps(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < v < 0.1:
        raise argparse.ArgumentTypeError("epsilon must satisfy 0 < eps < 1/10")
    return v


def _eps_select(text: str) -> float:
    v = _eps_any(text)
    if not 0 < v <= 0.1:
        raise argparse.ArgumentTypeError("epsilon must satisfy 0 < eps <= 1/10")
    return v


def _eps_any(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _theta(text: str) -> Expr:
    try:
        e = Expr(text)
        if not math.isfinite(float(e)):
            raise argparse.ArgumentTypeError("theta must be finite")
        return e
    except ExprError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _start(text: str):
    return "auto" if text.strip().lower() == "auto" else _positive_int(text)


def _suite(text: str) -> list[str]:
    if text.strip().lower() == "all":
        return list(lemmalab.LEMMA_IDS)
    names = [t.strip() for t in text.split(",") if t.strip()]
    lookup = {n.lower(): n for n in lemmalab.LEMMA_IDS}
    out = []
    for n in names:
        if n.lower() not in lookup:
            raise argparse.ArgumentTypeError(
                f"unknown lemma {n!r}; choose from {', '.join(lemmalab.LEMMA_IDS)} or all")
        out.append(lookup[n.lower()])
    return out


def _threads_default() -> int:
    raw = os.environ.get("EQUIDIST_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# -- parser ------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads (default $EQUIDIST_THREADS or 1)")

    p = _Parser(prog="equidist", description="Uniform distribution modulo one toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="sequence values")
    g.add_argument("--seq", type=_spec, required=True)
    g.add_argument("--first", type=_positive_int, default=1)
    g.add_argument("--last", type=_positive_int, required=True)
    g.add_argument("--frac", action="store_true", help="emit fractional parts")
    g.add_argument("--output", choices=("json", "csv"), default="json")

    d = sub.add_parser("discrepancy", parents=[common], help="extreme discrepancy of {x_n}")
    d.add_argument("--seq", type=_spec, required=True)
    d.add_argument("--n", type=_positive_int, required=True, help="number of terms")
    d.add_argument("--first", type=_positive_int, default=1)
    d.add_argument("--method", choices=("fast", "oracle", "star", "binned"), default="fast")
    d.add_argument("--output", choices=("json", "csv"), default="json")

    w = sub.add_parser("weyl", parents=[common], help="normalized Weyl sums")
    w.add_argument("--seq", type=_spec, required=True)
    hg = w.add_mutually_exclusive_group(required=True)
    hg.add_argument("--h", type=_int, nargs="+")
    hg.add_argument("--hmax", type=_positive_int)
    w.add_argument("--N", type=_positive_int, nargs="+", required=True)
    w.add_argument("--output", choices=("json", "csv"), default="json")

    c = sub.add_parser("convergents", parents=[common], help="continued-fraction convergents")
    c.add_argument("--theta", type=_theta, required=True)
    cg = c.add_mutually_exclusive_group(required=True)
    cg.add_argument("--qcap", type=_positive_int)
    cg.add_argument("--eps", type=_eps_select, help="select q <= eps^-4 < q_next")
    c.add_argument("--output", choices=("json", "csv"), default="json")

    r = sub.add_parser("certify", parents=[common], help="segment certificates")
    r.add_argument("--seq", type=_spec, required=True)
    r.add_argument("--eps", type=_eps, required=True)
    r.add_argument("--start", type=_start, required=True, help="first n, or auto for n(eps) + 1")
    r.add_argument("--end", type=_positive_int, required=True)
    r.add_argument("--segments", type=_positive_int, default=None, help="stop after K segments")
    r.add_argument("--C", dest="constant_C", type=float, default=10.0)
    r.add_argument("--output", choices=("jsonl", "json", "csv"), default="jsonl")

    m = sub.add_parser("lemmas", parents=[common], help="randomized lemma suites")
    m.add_argument("--suite", type=_suite, default=list(lemmalab.LEMMA_IDS))
    m.add_argument("--trials", type=_nonneg_int, default=10_000)
    m.add_argument("--seed", type=_seed, nargs="+", default=[42])
    m.add_argument("--output", choices=("json", "csv"), default="json")
    return p


# -- commands ----------------------------------------------------------------------

def _csv(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow(["" if v is None else (format(v, ".17g") if isinstance(v, float) else v)
                     for v in row])
    return buf.getvalue()


def cmd_generate(a, emit):
    last = a.last
    if last < a.first:
        raise ComputationFailure("--last must be >= --first")
    if a.frac:
        vals = generate_fractional(a.seq, a.first, last).values
    else:
        vals = generate(a.seq, a.first, last).values
    if a.output == "csv":
        emit(_csv(["index", "value"], zip(range(a.first, last + 1), vals.tolist())))
    else:
        emit(dumps({"seq": str(a.seq), "start_index": a.first, "fractional": a.frac,
                    "values": vals.tolist()}) + "\n")


def cmd_discrepancy(a, emit):
    last = a.first + a.n - 1
    out = {"seq": str(a.seq), "first": a.first, "N": a.n, "method": a.method}
    if a.method == "binned":
        fam = a.seq.closed_form
        fx, err = certifier.fractional_block(fam, a.first, a.n, a.threads)
        b = BinnedDiscrepancy()
        b.add(fx, 0, err)
        lo, hi = b.bounds()
        out.update(value=hi, lower=lo, witness=None)
    else:
        u = generate_fractional(a.seq, a.first, last)
        if a.method == "star":
            out.update(value=star_discrepancy(u), witness=None)
        else:
            rep = extreme_discrepancy(u) if a.method == "fast" else extreme_discrepancy_oracle(u)
            w = rep.witness
            out.update(value=rep.value, witness={"a": w.a, "b": w.b, "a_closed": w.a_closed,
                                                 "b_closed": w.b_closed})
    if a.output == "csv":
        w = out.get("witness") or {}
        emit(_csv(["seq", "first", "N", "method", "value", "witness_a", "witness_b"],
                  [[out["seq"], a.first, a.n, a.method, out["value"], w.get("a"), w.get("b")]]))
    else:
        emit(dumps(out) + "\n")


def cmd_weyl(a, emit):
    if a.h is not None:
        if any(h == 0 for h in a.h):
            raise ComputationFailure("h must be nonzero")
        hs = a.h
    else:
        hs = [h for h in range(-a.hmax, a.hmax + 1) if h]
    pts = weyl_profile(a.seq, 0, a.N, hs=hs)
    rows = [{"h": p.h, "N": p.N, "re": p.sum.real, "im": p.sum.imag, "magnitude": p.magnitude}
            for p in pts]
    if a.output == "csv":
        emit(_csv(["h", "N", "re", "im", "magnitude"], [list(r.values()) for r in rows]))
    else:
        emit(dumps({"seq": str(a.seq), "rows": rows}) + "\n")


def _conv_dict(c) -> dict:
    return {"p": c.p, "q": c.q, "q_next": c.q_next, "err_bound": c.err_bound,
            "terminal": c.terminal}


def cmd_convergents(a, emit):
    if a.eps is not None:
        c = select_convergent(a.theta, a.eps)
        rows = [_conv_dict(c)]
        payload = {"theta": a.theta.text, "epsilon": a.eps, "selected": rows[0]}
    else:
        rows = [_conv_dict(c) for c in convergents(a.theta, a.qcap)]
        payload = {"theta": a.theta.text, "qcap": a.qcap, "convergents": rows}
    if a.output == "csv":
        emit(_csv(["p", "q", "q_next", "err_bound", "terminal"], [list(r.values()) for r in rows]))
    else:
        emit(dumps(payload) + "\n")


_SEG_COLUMNS = ("n", "m", "case", "p", "q", "q_next", "alpha", "h0", "delta", "measured_D",
                "bound_ratio", "covered", "measured_kind")


def cmd_certify(a, emit):
    spec, eps = a.seq, a.eps
    start = None if a.start == "auto" else a.start
    if start is not None and a.end < start:
        raise ComputationFailure("--end must be >= --start")
    if start is not None and a.end == start:
        run = certifier.certify_range(spec, eps, start, a.end, a.constant_C)
        _emit_run(a, emit, run, [])
        return
    n_eps = certifier.admissible_start(spec, eps, start, a.end)
    start = n_eps + 1 if start is None else start
    header = {"type": "header", "seq": str(spec), "epsilon": eps, "n_epsilon": n_eps,
              "constant_C": a.constant_C, "n_start": start, "n_end": a.end}
    if a.output == "jsonl":
        emit(dumps(header) + "\n")
    segs = []
    for cert in certifier.iter_segments(spec, eps, start, a.end, a.constant_C,
                                        max_segments=a.segments, threads=a.threads):
        segs.append(cert)
        if a.output == "jsonl":
            emit(dumps({"type": "segment", **cert.as_dict()}) + "\n")
    run = certifier.CertificateRun(eps, n_eps, segs, None, a.constant_C, start, a.end,
                                   chain_factor=2 * eps)
    if segs:
        certifier.aggregate_run(run, spec, threads=a.threads)
    _emit_run(a, emit, run, segs)
    if run.aggregation is not None and not run.aggregation.passed:
        raise ComputationFailure("block aggregation bound failed: "
                                 f"D={run.aggregation.lhs:.6g} > {run.aggregation.rhs:.6g}")


def _emit_run(a, emit, run, segs):
    if a.output == "jsonl":
        emit(dumps({"type": "summary", "segments": len(run.segments),
                    "aggregate_D": run.aggregate_D, "aggregate_kind": run.aggregate_kind,
                    "case_counts": run.case_counts(), "chain_factor": run.chain_factor,
                    "aggregation": None if run.aggregation is None else run.aggregation.as_dict(),
                    }) + "\n")
    elif a.output == "json":
        emit(dumps(run.as_dict()) + "\n")
    else:
        rows = [[s.as_dict()[k] for k in _SEG_COLUMNS] for s in run.segments]
        emit(_csv(_SEG_COLUMNS, rows))


def cmd_lemmas(a, emit):
    reports = []
    for seed in a.seed:
        reports.extend(lemmalab.run_suites(a.suite, a.trials, seed, threads=a.threads))
    if a.output == "csv":
        cols = ("lemma_id", "seed", "trials", "accepted", "rejected", "failed",
                "worst_margin", "max_ratio")
        emit(_csv(cols, [[r.as_dict()[c] for c in cols] for r in reports]))
    else:
        emit(dumps({"reports": reports}) + "\n")
    bad = [r for r in reports if not r.ok]
    if bad:
        names = ", ".join(f"{r.lemma_id}(seed {r.seed})" for r in bad)
        raise ComputationFailure(f"lemma suites not clean: {names}")


COMMANDS = {"generate": cmd_generate, "discrepancy": cmd_discrepancy, "weyl": cmd_weyl,
            "convergents": cmd_convergents, "certify": cmd_certify, "lemmas": cmd_lemmas}


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is None:
        args.threads = _threads_default()

    sink = open(args.out, "w", encoding="utf-8") if args.out else None
    target = sink or stdout

    def emit(text: str) -> None:
        target.write(text)
        target.flush()

    try:
        COMMANDS[args.command](args, emit)
        return 0
    except (HypothesisViolation, certifier.CertificationError, ComputationFailure,
            SequenceError, ArithmeticError, ValueError) as exc:
        print(f"equidist {args.command}: {exc}", file=stderr)
        return 1
    finally:
        if sink is not None:
            sink.close()


def main() -> None:
    sys.exit(run())
