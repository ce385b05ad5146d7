"""Command line interface.

Exit status: 0 when nothing non-atomic was found, 1 when a non-atomic outcome
(or non-linearizable history) was found, 2 on errors.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

from .adt import SpecError, load_overrides, spec_for
from .check import CheckConfig, check, planned_harnesses, write_report
from .enumerate import FILTERS, EnumParams, construct_harnesses, shuffle
from .executor import BACKENDS, StressBudget, SutError, TrialTimeout, Violation, stress
from .harness import History, MalformedHarnessError, invocation_order, parse_harness
from .lincheck import TooLargeError, is_linearizable
from .oracle import atomic_outcomes, outcome_table
from .suts import builtin_suts, get_sut
from .values import ValueSyntaxError, parse_outcome

EXIT_OK, EXIT_NON_ATOMIC, EXIT_ERROR = 0, 1, 2

_UNITS = {"ms": 0.001, "s": 1.0, "m": 60.0, "h": 3600.0}


def parse_duration(text: str) -> float:
    """``1s``, ``500ms``, ``2m``, ``1h`` or plain seconds."""
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+)\s*(ms|s|m|h)?\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"bad duration {text!r}")
    value = float(m.group(1)) * _UNITS[m.group(2) or "s"]
    if value <= 0:
        raise argparse.ArgumentTypeError("duration must be positive")
    return value


def _methods(text):
    return tuple(x for x in re.split(r"[,\s]+", text) if x) if text else None


def _spec(args, family=None):
    overrides = load_overrides(args.method_config) if getattr(args, "method_config", None) else None
    return spec_for(family or args.family, core=_methods(getattr(args, "core", None)), overrides=overrides)


def _filters(args):
    if args.no_filters:
        return ()
    return tuple(f for f in FILTERS if f not in (args.no_filter or []))


def _add_enum_options(p):
    p.add_argument("--family", required=True, help="OrderedMap/map, FifoQueue/queue, Deque/deque, OrderedSet/set")
    p.add_argument("--core", help="comma-separated core methods (default: the family's core set)")
    p.add_argument("--method", required=True, help="method under test")
    p.add_argument("--method-config", help="JSON file overriding method metadata (name, mutability, core)")
    p.add_argument("--no-symmetry", action="store_true", help="list every member of each symmetry class")
    p.add_argument("--no-filters", action="store_true", help="disable all exclusion filters")
    p.add_argument("--no-filter", action="append", choices=FILTERS, help="disable one exclusion filter")
    p.add_argument("--full-order-limit", type=int, default=3,
                   help="enumerate all happens-before orders up to this many sequences (default 3)")


def cmd_enumerate(args):
    spec = _spec(args)
    p = EnumParams(args.invocations, args.values, args.sequences)
    hs = construct_harnesses(sorted(spec.core), args.method, p, spec, _filters(args),
                             not args.no_symmetry, args.full_order_limit)
    if args.seed is not None:
        hs = shuffle(hs, args.seed)
    out = sys.stdout
    for h in hs:
        out.write(str(h) + "\n")
    return EXIT_OK


def cmd_outcomes(args):
    spec = _spec(args)
    h = parse_harness(args.harness, spec)
    atomic = atomic_outcomes(h, spec)
    print(outcome_table(atomic))
    print(f"{len(atomic)} atomic outcome(s) from {atomic.linearizations} linearization(s)")
    return EXIT_OK


def cmd_stress(args):
    info = get_sut(args.sut)
    spec = _spec(args, args.family or info.family)
    h = parse_harness(args.harness, spec)
    budget = StressBudget(args.time if args.trials is None or args.time_given else None, args.trials, args.workers)
    hist, verdict = stress(h, info.adapter(spec), spec, budget, seed=args.seed, fail_fast=args.fail_fast,
                           backend=args.backend, validate=args.validate)
    print(f"harness: {h}")
    print(hist.table())
    if hist.validation:
        v = hist.validation
        print(f"validation: {v['histories']:,} histories, {v['linearizable']:,} linearizable, "
              f"{v['counterexamples']} linearizable with a non-atomic outcome")
    print(verdict)
    return EXIT_NON_ATOMIC if isinstance(verdict, Violation) else EXIT_OK


def _pairs(text):
    pairs = []
    for part in re.split(r"[,\s]+", text.strip().strip("{}")):
        if part:
            a, _, b = part.partition("<")
            pairs.append((int(a), int(b)))
    return pairs


def cmd_lincheck(args):
    if args.history:
        with open(args.history) as f:
            d = json.load(f)
        harness_text, outcome_text, hb = d["harness"], d["outcome"], [tuple(x) for x in d.get("hb", [])]
    else:
        if args.harness is None or args.outcome is None:
            raise SpecError("lincheck needs a harness and --outcome, or --history FILE")
        harness_text, outcome_text, hb = args.harness, args.outcome, _pairs(args.hb or "")
    spec = _spec(args)
    h = parse_harness(harness_text, spec)
    hist = History(h, parse_outcome(outcome_text, h.num_invocations), frozenset(hb) | invocation_order(h))
    ok = is_linearizable(hist, spec)
    print("linearizable" if ok else "NOT linearizable")
    return EXIT_OK if ok else EXIT_NON_ATOMIC


def cmd_list_suts(args):
    suts = builtin_suts()
    w = max(len(n) for n in suts)
    print(f"{'name':<{w}}  {'family':<10}  atomic  description")
    for name, s in suts.items():
        print(f"{name:<{w}}  {s.family:<10}  {'yes' if s.expected_atomic else 'no':<6}  {s.description}")
    return EXIT_OK


_CONFIG_KEYS = {"family", "method", "sut", "core", "bounds", "schedule", "time_per_harness", "trials_per_harness",
                "chunk_size", "seed", "workers", "timeout", "filters", "symmetry", "full_order_limit",
                "backend", "overrides"}


def _check_config(args) -> CheckConfig:
    d = {}
    if args.config:
        with open(args.config) as f:
            d = json.load(f)
        unknown = set(d) - _CONFIG_KEYS
        if unknown:
            raise SpecError(f"unknown config key(s): {sorted(unknown)}")
    flags = {
        "family": args.family, "method": args.method, "sut": args.sut, "core": _methods(args.core),
        "schedule": args.schedule, "time_per_harness": args.time_per_harness,
        "trials_per_harness": args.trials_per_harness, "chunk_size": args.chunk_size, "seed": args.seed,
        "workers": args.workers, "timeout": args.timeout, "backend": args.backend,
    }
    d.update({k: v for k, v in flags.items() if v is not None})
    if args.method_config:
        d["overrides"] = load_overrides(args.method_config)
    bounds = list(d.get("bounds", [6, 2, 2]))
    for k, v in enumerate((args.max_invocations, args.max_values, args.max_sequences)):
        if v is not None:
            bounds[k] = v
    d["bounds"] = EnumParams(*bounds)
    if args.no_filters or args.no_filter:
        d["filters"] = _filters(args)
    if args.no_symmetry:
        d["symmetry"] = False
    if args.full_order_limit is not None:
        d["full_order_limit"] = args.full_order_limit
    for key in ("family", "method", "sut"):
        if not d.get(key):
            raise SpecError(f"check needs --{key}")
    d["filters"] = tuple(d.get("filters", FILTERS))
    if d.get("core") is not None:
        d["core"] = tuple(d["core"])
    return CheckConfig(**d)


def cmd_check(args):
    cfg = _check_config(args)
    if args.dry_run:
        for p, i, total, h in planned_harnesses(cfg):
            sys.stdout.write(f"{p}\t{h}\n")
        return EXIT_OK

    def progress(rec, total):
        if args.verbose:
            bad = " NON-ATOMIC" if rec.non_atomic else ""
            print(f"{rec.params} {rec.index + 1}/{total} {rec.harness} {rec.trials:,} trials{bad}",
                  file=sys.stderr)

    report = check(cfg, progress)
    data = write_report(report, args.format)
    if args.output:
        with open(args.output, "wb") as f:
            f.write(data)
        if args.format != "table":
            sys.stdout.write(write_report(report, "table").decode())
    else:
        sys.stdout.write(data.decode())
    return EXIT_NON_ATOMIC if report.verdict.kind == "NON-ATOMIC" else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="atomcheck", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="search for a non-atomic outcome of one method")
    p.add_argument("--config", help="JSON file with check settings (flags override it)")
    p.add_argument("--family")
    p.add_argument("--core")
    p.add_argument("--method")
    p.add_argument("--method-config")
    p.add_argument("--sut")
    p.add_argument("--max-invocations", type=int)
    p.add_argument("--max-values", type=int)
    p.add_argument("--max-sequences", type=int)
    p.add_argument("--schedule", choices=("diagonal", "graded"))
    p.add_argument("--time-per-harness", type=parse_duration, help="stress time per harness (default 1s)")
    p.add_argument("--trials-per-harness", type=int)
    p.add_argument("--chunk-size", type=int, help="harnesses per chunk (default 100)")
    p.add_argument("--seed", type=int, help="shuffle seed (default 0)")
    p.add_argument("--workers", type=int)
    p.add_argument("--timeout", type=parse_duration, help="global time limit")
    p.add_argument("--backend", choices=BACKENDS)
    p.add_argument("--no-symmetry", action="store_true")
    p.add_argument("--no-filters", action="store_true")
    p.add_argument("--no-filter", action="append", choices=FILTERS)
    p.add_argument("--full-order-limit", type=int)
    p.add_argument("--output", "-o", help="write the report here")
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.add_argument("--dry-run", action="store_true", help="print the harnesses in the order they would be tried")
    p.add_argument("--verbose", "-v", action="store_true", help="log every harness to stderr")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("enumerate", help="print the harnesses for one parameter triple")
    _add_enum_options(p)
    p.add_argument("--invocations", type=int, required=True)
    p.add_argument("--values", type=int, required=True)
    p.add_argument("--sequences", type=int, required=True)
    p.add_argument("--seed", type=int, help="shuffle with this seed (default: canonical order)")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("outcomes", help="print the atomic outcomes of a harness")
    p.add_argument("harness")
    p.add_argument("--family", default="map")
    p.add_argument("--method-config")
    p.set_defaults(func=cmd_outcomes)

    p = sub.add_parser("stress", help="stress-test one harness")
    p.add_argument("harness")
    p.add_argument("--sut", required=True)
    p.add_argument("--family", help="default: the SUT's family")
    p.add_argument("--method-config")
    p.add_argument("--time", type=parse_duration, default=None, help="time budget (default 1s)")
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fail-fast", action="store_true")
    p.add_argument("--validate", action="store_true", help="also check every history for linearizability")
    p.add_argument("--backend", choices=BACKENDS, default="interleave")
    p.set_defaults(func=cmd_stress)

    p = sub.add_parser("lincheck", help="check one history for linearizability")
    p.add_argument("harness", nargs="?")
    p.add_argument("--outcome")
    p.add_argument("--hb", help="extra happens-before pairs over invocation indices, e.g. '0<3, 1<2'")
    p.add_argument("--history", help="JSON file with harness, outcome and hb")
    p.add_argument("--family", default="map")
    p.add_argument("--method-config")
    p.set_defaults(func=cmd_lincheck)

    p = sub.add_parser("list-suts", help="list the built-in objects under test")
    p.set_defaults(func=cmd_list_suts)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "stress":
        args.time_given = args.time is not None
        if args.time is None and args.trials is None:
            args.time = 1.0
    try:
        return args.func(args)
    except (SpecError, MalformedHarnessError, ValueSyntaxError, SutError, TrialTimeout,
            TooLargeError, KeyError, ValueError, OSError) as e:
        print(f"atomcheck: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
