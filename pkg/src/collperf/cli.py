"""Command-line front end: ``collperf <subcommand> ...``.

Exit codes: 0 on success, 1 on unreadable or invalid input files, 2 on
usage errors.  Times are microseconds, sizes bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .models import (
    CATALOG,
    SEGMENTED_STRATEGIES,
    alltoall_bounds,
    predict_alltoall,
    predict_broadcast,
    predict_scatter,
)
from .profile import ProfileError, load_profile
from .simulator import SCHEDULABLE, build_schedule, run, write_trace
from .tuning import fit_gamma, load_measurements, optimize_segment, rank_strategies

PREDICT_KEYS = (
    "op", "strategy", "procs", "bytes", "segment", "gamma",
    "predicted_us", "lower_us", "upper_us", "bound", "terms",
)
COMPARE_KEYS = ("rank", "op", "strategy", "procs", "bytes", "segment", "predicted_us", "bound", "terms")
CURVE_KEYS = ("op", "strategy", "procs", "bytes", "segment", "predicted_us", "simulated_us")
SEGMENT_KEYS = ("op", "strategy", "procs", "bytes", "segment", "predicted_us", "candidates_examined", "terms")
SELECT_KEYS = ("op", "strategy", "procs", "bytes", "segment", "predicted_us", "terms")
SIMULATE_KEYS = (
    "op", "strategy", "procs", "bytes", "segment", "semantics",
    "transfers", "simulated_us", "predicted_us", "rel_diff",
)


class DataError(Exception):
    """Input file problem; maps to exit status 1."""


# --- rendering ---------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _terms(prediction) -> str:
    return ";".join(f"{label}={value!r}" for label, value in prediction.terms)


def render(records: list[dict], keys, fmt: str, single: bool = False) -> str:
    if fmt == "json":
        rows = [{k: rec.get(k) for k in keys} for rec in records]
        doc = rows[0] if single else rows
        return json.dumps(doc, indent=None if not single else 2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(keys)
    for rec in records:
        writer.writerow([_cell(rec.get(k)) for k in keys])
    return buf.getvalue()


# --- helpers -----------------------------------------------------------------


def _load_profile(args):
    try:
        return load_profile(args.profile, args.profile_format)
    except (OSError, ProfileError) as exc:
        raise DataError(f"cannot load profile {args.profile}: {exc}") from None


def _check_strategy(parser, op, strategy, segment):
    if strategy not in CATALOG[op]:
        parser.error(f"--strategy {strategy!r} is not a {op} strategy; choose from {', '.join(CATALOG[op])}")
    if strategy in SEGMENTED_STRATEGIES and segment is None:
        parser.error(f"--segment is required for strategy {strategy}")
    if strategy not in SEGMENTED_STRATEGIES and segment is not None:
        parser.error(f"--segment only applies to segmented strategies, not {strategy}")


def _predict_record(profile, op, strategy, procs, nbytes, segment=None, gamma=None) -> dict:
    rec = {"op": op, "strategy": strategy, "procs": procs, "bytes": nbytes, "segment": segment}
    if op == "alltoall":
        lower, upper = alltoall_bounds(profile, procs, nbytes)
        rec.update(lower_us=lower.total, upper_us=upper.total, gamma=gamma)
        if gamma is not None:
            pred = predict_alltoall(profile, procs, nbytes, gamma)
            rec.update(predicted_us=pred.total, terms=_terms(pred))
        else:
            rec.update(bound="lower|upper", terms=f"lower:{_terms(lower)}|upper:{_terms(upper)}")
        return rec
    if op == "broadcast":
        pred = predict_broadcast(profile, strategy, procs, nbytes, segment)
    else:
        pred = predict_scatter(profile, strategy, procs, nbytes)
    rec.update(predicted_us=pred.total, bound=pred.bound, terms=_terms(pred))
    return rec


# --- subcommands -------------------------------------------------------------


def cmd_predict(args, parser) -> str:
    strategy = args.strategy or ("direct-exchange" if args.op == "alltoall" else None)
    if strategy is None:
        parser.error("--strategy is required for broadcast and scatter")
    _check_strategy(parser, args.op, strategy, args.segment)
    if args.gamma is not None and args.op != "alltoall":
        parser.error("--gamma only applies to --op alltoall")
    profile = _load_profile(args)
    try:
        rec = _predict_record(profile, args.op, strategy, args.procs, args.bytes, args.segment, args.gamma)
    except ValueError as exc:
        parser.error(str(exc))
    return render([rec], PREDICT_KEYS, args.format, single=True)


def cmd_compare(args, parser) -> str:
    if args.op == "alltoall":
        parser.error("compare supports --op broadcast or scatter")
    profile = _load_profile(args)
    try:
        ranked = rank_strategies(profile, args.op, args.procs, args.bytes, not args.no_auto_segment, args.refine)
    except ValueError as exc:
        parser.error(str(exc))
    records = [
        {
            "rank": i + 1,
            "op": args.op,
            "strategy": strategy,
            "procs": args.procs,
            "bytes": args.bytes,
            "segment": pred.request.segment_bytes,
            "predicted_us": pred.total,
            "bound": pred.bound,
            "terms": _terms(pred),
        }
        for i, (strategy, pred) in enumerate(ranked)
    ]
    return render(records, COMPARE_KEYS, args.format)


def _sweep_points(args, parser) -> list[int]:
    lo, hi = args.start, args.stop
    if lo < 1 or hi < lo:
        parser.error(f"empty sweep range --from {lo} --to {hi}")
    if args.dyadic:
        points = [1 << e for e in range(hi.bit_length()) if lo <= (1 << e) <= hi]
    else:
        points = list(range(lo, hi + 1, args.step))
    if not points:
        parser.error(f"empty sweep range --from {lo} --to {hi}")
    return points


def cmd_curve(args, parser) -> str:
    op = args.op
    strategies = args.strategy or [s for s in CATALOG[op] if s not in SEGMENTED_STRATEGIES]
    for s in strategies:
        if s not in CATALOG[op]:
            parser.error(f"--strategy {s!r} is not a {op} strategy")
    if op == "alltoall" and args.gamma is None:
        parser.error("curve --op alltoall needs --gamma")
    if args.sweep == "bytes" and args.procs is None:
        parser.error("--sweep bytes needs a fixed --procs")
    if args.sweep == "procs" and args.bytes is None:
        parser.error("--sweep procs needs a fixed --bytes")
    if args.step < 1:
        parser.error("--step must be >= 1")
    points = _sweep_points(args, parser)
    profile = _load_profile(args)

    records = []
    try:
        for x in points:
            procs, nbytes = (args.procs, x) if args.sweep == "bytes" else (x, args.bytes)
            for strategy in strategies:
                segment = None
                if strategy in SEGMENTED_STRATEGIES:
                    if args.segment is not None:
                        segment = min(args.segment, nbytes)
                    else:
                        segment = optimize_segment(profile, op, strategy, procs, nbytes).segment_bytes
                rec = _predict_record(profile, op, strategy, procs, nbytes, segment, args.gamma)
                if args.simulate and strategy in SCHEDULABLE[op]:
                    sched = build_schedule(op, strategy, procs, nbytes, segment)
                    rec["simulated_us"] = run(sched, profile, record_trace=False).completion
                records.append(rec)
    except ValueError as exc:
        parser.error(str(exc))
    return render(records, CURVE_KEYS, args.format)


def cmd_optimize_segment(args, parser) -> str:
    if args.strategy not in SEGMENTED_STRATEGIES or args.strategy not in CATALOG[args.op]:
        parser.error(f"--strategy must be a segmented {args.op} strategy")
    profile = _load_profile(args)
    try:
        choice = optimize_segment(profile, args.op, args.strategy, args.procs, args.bytes, args.refine)
    except ValueError as exc:
        parser.error(str(exc))
    rec = {
        "op": args.op,
        "strategy": args.strategy,
        "procs": args.procs,
        "bytes": args.bytes,
        "segment": choice.segment_bytes,
        "predicted_us": choice.predicted.total,
        "candidates_examined": choice.candidates_examined,
        "terms": _terms(choice.predicted),
    }
    return render([rec], SEGMENT_KEYS, args.format, single=True)


def cmd_select(args, parser) -> str:
    if args.op == "alltoall":
        parser.error("select supports --op broadcast or scatter")
    profile = _load_profile(args)
    try:
        strategy, pred = rank_strategies(
            profile, args.op, args.procs, args.bytes, not args.no_auto_segment, args.refine
        )[0]
    except ValueError as exc:
        parser.error(str(exc))
    rec = {
        "op": args.op,
        "strategy": strategy,
        "procs": args.procs,
        "bytes": args.bytes,
        "segment": pred.request.segment_bytes,
        "predicted_us": pred.total,
        "terms": _terms(pred),
    }
    return render([rec], SELECT_KEYS, args.format, single=True)


def cmd_fit_gamma(args, parser) -> str:
    profile = _load_profile(args)
    try:
        measurements = load_measurements(args.measurements)
        model = fit_gamma(profile, measurements)
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from None
    return json.dumps(model.as_dict(), indent=2) + "\n"


def cmd_simulate(args, parser) -> str:
    strategy = args.strategy or ("direct-exchange" if args.op == "alltoall" else None)
    if strategy is None:
        parser.error("--strategy is required for broadcast and scatter")
    if strategy not in SCHEDULABLE[args.op]:
        parser.error(
            f"strategy {strategy!r} cannot be simulated for {args.op}; "
            f"choose from {', '.join(SCHEDULABLE[args.op])}"
        )
    _check_strategy(parser, args.op, strategy, args.segment)
    profile = _load_profile(args)
    try:
        sched = build_schedule(args.op, strategy, args.procs, args.bytes, args.segment)
        result = run(sched, profile, args.semantics)
        if args.op == "alltoall":
            lower, upper = alltoall_bounds(profile, args.procs, args.bytes)
            predicted = (upper if args.semantics == "serialized" else lower).total
        elif args.semantics == "one-port-overlap":
            predicted = _predict_record(profile, args.op, strategy, args.procs, args.bytes, args.segment)[
                "predicted_us"
            ]
        else:
            predicted = None
    except ValueError as exc:
        parser.error(str(exc))
    if predicted is None:
        rel = None
    elif predicted == 0:
        rel = 0.0 if result.completion == 0 else float("inf")
    else:
        rel = (result.completion - predicted) / predicted
    if args.trace:
        try:
            write_trace(result, sched, args.trace)
        except OSError as exc:
            raise DataError(f"cannot write trace {args.trace}: {exc}") from None
    rec = {
        "op": args.op,
        "strategy": strategy,
        "procs": args.procs,
        "bytes": args.bytes,
        "segment": args.segment,
        "semantics": args.semantics,
        "transfers": len(sched),
        "simulated_us": result.completion,
        "predicted_us": predicted,
        "rel_diff": rel,
    }
    return render([rec], SIMULATE_KEYS, args.format, single=True)


# --- parser ------------------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a value >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collperf", description="pLogP collective communication predictions")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, op_choices=tuple(CATALOG), fmt=True):
        p.add_argument("--profile", required=True, help="network profile (JSON or columns)")
        p.add_argument("--profile-format", choices=("json", "columns"), help="default: from file extension")
        p.add_argument("--op", required=True, choices=op_choices)
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("predict", help="closed-form prediction for one strategy")
    common(p)
    p.add_argument("--strategy")
    p.add_argument("--procs", type=_positive_int, required=True)
    p.add_argument("--bytes", type=_positive_int, required=True)
    p.add_argument("--segment", type=_positive_int)
    p.add_argument("--gamma", type=float)
    p.set_defaults(func=cmd_predict, subparser=p)

    p = sub.add_parser("compare", help="rank every strategy of an operation")
    common(p)
    p.add_argument("--procs", type=_positive_int, required=True)
    p.add_argument("--bytes", type=_positive_int, required=True)
    p.add_argument("--no-auto-segment", action="store_true", help="skip segmented strategies")
    p.add_argument("--refine", action="store_true", help="hill-climb segment sizes")
    p.set_defaults(func=cmd_compare, subparser=p)

    p = sub.add_parser("curve", help="CSV sweep over message size or process count")
    common(p)
    p.add_argument("--strategy", action="append", help="repeatable; default: all unsegmented strategies")
    p.add_argument("--sweep", choices=("bytes", "procs"), required=True)
    p.add_argument("--from", dest="start", type=int, required=True)
    p.add_argument("--to", dest="stop", type=int, required=True)
    p.add_argument("--dyadic", action="store_true", help="powers of two only")
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--procs", type=_positive_int)
    p.add_argument("--bytes", type=_positive_int)
    p.add_argument("--segment", type=_positive_int, help="fixed segment size; default: optimized per point")
    p.add_argument("--gamma", type=float)
    p.add_argument("--simulate", action="store_true", help="also run the event simulator")
    p.set_defaults(func=cmd_curve, subparser=p)

    p = sub.add_parser("optimize-segment", help="best segment size for a segmented strategy")
    common(p, op_choices=("broadcast",))
    p.add_argument("--strategy", required=True)
    p.add_argument("--procs", type=_positive_int, required=True)
    p.add_argument("--bytes", type=_positive_int, required=True)
    p.add_argument("--refine", action="store_true")
    p.set_defaults(func=cmd_optimize_segment, subparser=p)

    p = sub.add_parser("select", help="fastest strategy for an operation")
    common(p)
    p.add_argument("--procs", type=_positive_int, required=True)
    p.add_argument("--bytes", type=_positive_int, required=True)
    p.add_argument("--no-auto-segment", action="store_true")
    p.add_argument("--refine", action="store_true")
    p.set_defaults(func=cmd_select, subparser=p)

    p = sub.add_parser("fit-gamma", help="fit the All-to-All congestion factor")
    p.add_argument("--profile", required=True)
    p.add_argument("--profile-format", choices=("json", "columns"))
    p.add_argument("--measurements", required=True, help="CSV with header procs,bytes,time_us")
    p.set_defaults(func=cmd_fit_gamma, subparser=p)

    p = sub.add_parser("simulate", help="run the event simulator on one collective")
    common(p)
    p.add_argument("--strategy")
    p.add_argument("--procs", type=_positive_int, required=True)
    p.add_argument("--bytes", type=_positive_int, required=True)
    p.add_argument("--segment", type=_positive_int)
    p.add_argument("--semantics", choices=("one-port-overlap", "serialized"), default="one-port-overlap")
    p.add_argument("--trace", help="write per-transfer CSV trace here")
    p.set_defaults(func=cmd_simulate, subparser=p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = args.func(args, args.subparser)
    except DataError as exc:
        print(f"collperf: error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
